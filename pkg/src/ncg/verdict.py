from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .opsys import Projection

CLIQUE = "clique"
ANTICLIQUE = "anticlique"
OBSTRUCTION = "obstruction_evidence"
INCONCLUSIVE = "inconclusive"
KINDS = (CLIQUE, ANTICLIQUE, OBSTRUCTION, INCONCLUSIVE)


@dataclass
class Verdict:
    """Outcome of a clique/anticlique/obstruction analysis.

    A ``clique`` or ``anticlique`` verdict always carries a projection that
    passed the corresponding compression-dimension test. ``obstruction_evidence``
    is a finite-scale heuristic, never a proof.
    """

    kind: str
    projection: Projection | None = None
    metrics: dict = field(default_factory=dict)
    notes: str = ""
    witness: np.ndarray | None = None
    scale_limited: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown verdict kind {self.kind!r}")
        if self.kind in (CLIQUE, ANTICLIQUE) and self.projection is None:
            raise ValueError(f"a {self.kind} verdict needs a projection")
