"""Finite-dimensional toolkit for quantum cliques, anticliques and obstructions in operator systems."""
from .matcore import DEFAULT_TOL, Tolerance
from .opsys import (
    FixtureKind,
    Graph,
    OperatorSystem,
    Projection,
    TruncationSpec,
    compress,
    contains,
    dimension,
    fixture,
    from_graph,
    normalize,
)
from .ramsey import (
    SearchConfig,
    classical_check,
    find_anticlique,
    find_clique,
    is_quantum_anticlique,
    is_quantum_clique,
    trichotomy_probe,
)
from .channels import QuantumChannel, confusability, find_code, kl_verify
from .verdict import Verdict

__all__ = [
    "DEFAULT_TOL", "Tolerance", "FixtureKind", "Graph", "OperatorSystem", "Projection", "TruncationSpec",
    "compress", "contains", "dimension", "fixture", "from_graph", "normalize", "SearchConfig",
    "classical_check", "find_anticlique", "find_clique", "is_quantum_anticlique", "is_quantum_clique",
    "trichotomy_probe", "QuantumChannel", "confusability", "find_code", "kl_verify", "Verdict",
]
