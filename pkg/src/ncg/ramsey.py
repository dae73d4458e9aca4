"""Quantum clique and anticlique detection, search, and a multi-scale probe."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .constructions import (
    DIAGONALIZED,
    ConstructionError,
    ScaleLimitError,
    anticlique_or_obstruction,
    clique_certificate,
    clique_from_map,
    cluster_diagonals,
    reduce_to_diagonal,
    triangularize_diagonals,
)
from .matcore import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    normalized_gram_spectrum,
    opnorm,
    random_frame,
)
from .opsys import (
    FixtureKind,
    Graph,
    OperatorSystem,
    Projection,
    TruncationSpec,
    compress,
    dimension,
    fixture,
    normalize,
    standard_frame,
)
from .verdict import ANTICLIQUE, CLIQUE, INCONCLUSIVE, OBSTRUCTION, Verdict


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the randomized searches and the multi-scale probe.

    ``eps`` and ``rank_cut`` define the finite-scale compactness surrogate
    (at most ``rank_cut`` diagonal entries above ``eps``); ``bounded_dim`` is
    the largest compression dimension the probe still calls bounded.
    """

    seed: int = 0
    restarts: int = 8
    max_iters: int = 500
    step: float = 0.5
    tol: Tolerance = DEFAULT_TOL
    eps: float = 0.05
    rank_cut: int = 4
    min_cluster: int = 2
    bounded_dim: int = 4
    n_random: int = 8

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.rank_cut < 0 or self.min_cluster < 1 or self.bounded_dim < 1:
            raise ValueError("rank_cut, min_cluster and bounded_dim must be nonnegative/positive")


@dataclass
class SearchResult:
    projection: Projection | None
    strategy: str = ""
    metrics: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.projection is not None


def is_quantum_anticlique(v: OperatorSystem, p: Projection, tol: Tolerance = DEFAULT_TOL) -> bool:
    return dimension(compress(v, p, tol), tol) == 1


def is_quantum_clique(v: OperatorSystem, p: Projection, tol: Tolerance = DEFAULT_TOL) -> bool:
    return dimension(compress(v, p, tol), tol) == p.rank ** 2


def classical_check(g: Graph, k: int):
    """First ``k``-clique, else first ``k``-anticlique (lexicographic), else ``None``.

    Returns ``(kind, vertices)`` with ``kind`` ``"clique"`` or ``"anticlique"``.
    """
    if k < 1 or k > g.vertex_count:
        return None
    subsets = list(itertools.combinations(range(g.vertex_count), k))
    for s in subsets:
        if all(g.adjacent(u, w) for u, w in itertools.combinations(s, 2)):
            return CLIQUE, s
    for s in subsets:
        if not any(g.adjacent(u, w) for u, w in itertools.combinations(s, 2)):
            return ANTICLIQUE, s
    return None


# ---------------------------------------------------------------- anticlique search


def _restrict(v: OperatorSystem, within, tol: Tolerance):
    if within is None:
        return v, None
    frame = Projection(within).columns
    return compress(v, Projection(frame), tol), frame


def _lift(p: Projection, frame) -> Projection:
    return p if frame is None else Projection(frame @ p.columns)


def _coordinate_anticlique(v: OperatorSystem, k: int, tol: Tolerance, limit: int = 64):
    g = v.graph
    failures = 0
    for s in itertools.combinations(range(g.vertex_count), k):
        if any(g.adjacent(u, w) for u, w in itertools.combinations(s, 2)):
            continue
        p = Projection.coordinates(v.ambient_dim, s)
        if is_quantum_anticlique(v, p, tol):
            return p
        failures += 1
        if failures >= limit:
            break
    return None


def _diagonal_rows(v: OperatorSystem, red) -> np.ndarray:
    rows = []
    for g in red.diagonals(v):
        rows.append(np.real(g))
        if np.max(np.abs(np.imag(g)), initial=0.0) > 0:
            rows.append(np.imag(g))
    return np.stack(rows)


def _shifted_system(rows: np.ndarray, idx: np.ndarray, shifts, tol: Tolerance) -> OperatorSystem:
    mats = [np.diag(r[idx] - a).astype(complex) for r, a in zip(rows, shifts)]
    return normalize(mats, len(idx), tol, label="shifted diagonal")


def structured_analysis(v: OperatorSystem, cfg: SearchConfig, eps: float | None = None,
                        rng: np.random.Generator | None = None):
    """Reduce to diagonal form, cluster, and classify.

    Returns ``(verdict, frame, reduction)`` where the verdict's projection
    lives on the clustered coordinates and ``frame`` maps them back to the
    ambient space (``None`` when the reduction stalls after one vector).
    """
    tol = cfg.tol
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    red = reduce_to_diagonal(v, tol, rng, cfg.n_random)
    if red.branch != DIAGONALIZED:
        return Verdict(INCONCLUSIVE, metrics={"reduction_length": 1},
                       notes="orbit of the first vector fills its subspace"), None, red
    eps = cfg.eps if eps is None else eps
    rows = _diagonal_rows(v, red)
    cl = cluster_diagonals(rows, eps, cfg.min_cluster, tol)
    if cl.scale_limited:
        return Verdict(INCONCLUSIVE, metrics={"reduction_length": red.vectors.shape[1],
                                             "cluster_size": len(cl.indices)},
                       scale_limited=True, notes="cluster below minimum size"), None, red
    shifted = _shifted_system(rows, cl.indices, cl.shifts, tol)
    verdict = anticlique_or_obstruction(shifted, cfg.rank_cut, eps, tol)
    verdict.metrics.update(reduction_length=red.vectors.shape[1], cluster_size=len(cl.indices))
    frame = red.vectors[:, cl.indices]
    return verdict, frame, red


def _anticlique_objective(mats: np.ndarray, w: np.ndarray):
    k = w.shape[1]
    c = adjoint(w)[None] @ mats @ w[None]
    tr = np.trace(c, axis1=1, axis2=2) / k
    dev = c - tr[:, None, None] * np.eye(k)[None]
    f = float(np.sum(np.abs(dev) ** 2))
    grad = 2 * np.sum(mats @ w[None] @ adjoint(dev) + adjoint(mats) @ w[None] @ dev, axis=0)
    return f, grad


def _retract(w: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(w)
    ph = np.diag(r) / np.where(np.abs(np.diag(r)) > 0, np.abs(np.diag(r)), 1.0)
    return q * ph


def _non_scalar(v: OperatorSystem) -> np.ndarray:
    d = v.ambient_dim
    out = []
    for a in v.basis:
        dev = a - np.trace(a) / d * np.eye(d)
        n = np.linalg.norm(dev)
        if n > 0:
            out.append(a / np.linalg.norm(a))
    return np.stack(out) if out else np.zeros((0, d, d), dtype=complex)


def stiefel_search(mats: np.ndarray, k: int, rng: np.random.Generator, cfg: SearchConfig,
                   target: float = 1e-24):
    """Minimise ``sum_j ||W^* A_j W - tr/k I||^2`` over ``d x k`` orthonormal frames.

    Steps along the projected gradient, retract by QR, grow the step after a
    decrease and halve it otherwise. Returns ``(W, f)``.
    """
    d = mats.shape[1]
    w = random_frame(d, k, rng)
    f, g = _anticlique_objective(mats, w)
    step = cfg.step
    for _ in range(cfg.max_iters):
        if f <= target:
            break
        xi = g - w @ ((adjoint(w) @ g + adjoint(g) @ w) / 2)
        cand = _retract(w - step * xi)
        f_new, g_new = _anticlique_objective(mats, cand)
        if f_new < f:
            w, f, g = cand, f_new, g_new
            step *= 1.2
        else:
            step *= 0.5
            if step < 1e-14:
                break
    return w, f


def find_anticlique(v: OperatorSystem, k: int, cfg: SearchConfig = SearchConfig(),
                    within=None) -> SearchResult:
    """Search for a rank-``k`` anticlique, optionally inside the range of ``within``.

    Strategies in order: coordinate subsets of a graph system, the
    structured diagonal pipeline, then Stiefel local search over all
    restarts (best objective wins, lowest restart index on ties).
    """
    tol = cfg.tol
    if not 1 <= k < v.ambient_dim:
        raise ValueError(f"need 1 <= k < {v.ambient_dim}, got {k}")
    sub, frame = _restrict(v, within, tol)
    if k > sub.ambient_dim:
        return SearchResult(None, "", {"reason": "subspace too small"})
    if k == 1:
        p = Projection(standard_frame(sub.ambient_dim, [0]))
        return SearchResult(_lift(p, frame), "trivial", {})

    if frame is None and v.graph is not None and v.graph.vertex_count == v.ambient_dim:
        p = _coordinate_anticlique(v, k, tol)
        if p is not None:
            return SearchResult(p, "coordinates", {})

    metrics = {}
    if sub.ambient_dim >= 2:
        exact = math.sqrt(tol.residual_tol)
        verdict, vframe, _ = structured_analysis(sub, cfg, eps=exact)
        metrics["pipeline"] = verdict.kind
        if verdict.kind == ANTICLIQUE and verdict.projection.rank >= k:
            cols = vframe @ verdict.projection.columns[:, :k]
            p = _lift(Projection.from_vectors(list(cols.T), tol), frame)
            if is_quantum_anticlique(v, p, tol):
                return SearchResult(p, "pipeline", metrics)

    mats = _non_scalar(sub)
    if mats.shape[0] == 0:
        p = Projection(standard_frame(sub.ambient_dim, range(k)))
        return SearchResult(_lift(p, frame), "scalar system", metrics)
    runs = []
    for r in range(cfg.restarts):
        w, f = stiefel_search(mats, k, np.random.default_rng(cfg.seed + r), cfg)
        runs.append((f, r, w))
    runs.sort(key=lambda t: (t[0], t[1]))
    metrics["best_objective"] = runs[0][0]
    metrics["best_restart"] = runs[0][1]
    for f, r, w in runs:
        p = _lift(Projection(_retract(w)), frame)
        if is_quantum_anticlique(v, p, tol):
            metrics["restart"] = r
            return SearchResult(p, "local_search", metrics)
    return SearchResult(None, "", metrics)


# ---------------------------------------------------------------- clique search


def _clique_surrogate(v: OperatorSystem, w: np.ndarray) -> float:
    k = w.shape[1]
    c = adjoint(w)[None] @ v.basis @ w[None]
    lam = normalized_gram_spectrum(list(c))
    return float(lam[k * k - 1] / lam[0]) if len(lam) >= k * k and lam[0] > 0 else 0.0


def structured_clique(v: OperatorSystem, k: int, cfg: SearchConfig,
                      rng: np.random.Generator | None = None) -> SearchResult:
    """Diagonal reduction, triangular family, certificate and the resulting map."""
    tol = cfg.tol
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    red = reduce_to_diagonal(v, tol, rng, cfg.n_random)
    metrics = {"reduction_length": red.vectors.shape[1]}
    if red.branch != DIAGONALIZED:
        return SearchResult(None, "", metrics)
    fam = triangularize_diagonals(_diagonal_rows(v, red), tol)
    metrics["triangular_length"] = len(fam)
    if len(fam) < k * k:
        return SearchResult(None, "", metrics)
    try:
        cert = clique_certificate(fam, k, k * k, tol)
    except (ScaleLimitError, ConstructionError) as exc:
        metrics["certificate_error"] = str(exc)
        return SearchResult(None, "", metrics)
    metrics["certificate_max_bound"] = max(cert.bounds.values())
    f = red.vectors[:, fam.pivots[: cert.dilation.operators[0].shape[0]]]
    t = cert.map()[:k] @ adjoint(f)
    sing = np.linalg.svd(t, compute_uv=False)
    p, verified = clique_from_map(t, v, sing[0] / 2, tol)
    if verified and is_quantum_clique(v, p, tol):
        return SearchResult(p, "certificate", metrics)
    return SearchResult(None, "", metrics)


def find_clique(v: OperatorSystem, k: int, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    """Search for a rank-``k`` clique.

    A full matrix algebra is handled directly. Otherwise the structured
    certificate route runs first, then random frames improved by a
    hill-climb on the normalised ``k^2``-th Gram eigenvalue of the compression.
    """
    tol = cfg.tol
    d = v.ambient_dim
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= {d}, got {k}")
    if len(v) < k * k:
        return SearchResult(None, "", {"reason": "system dimension below k^2"})
    if len(v) == d * d or k == 1:
        return SearchResult(Projection(standard_frame(d, range(k))), "full", {})

    res = structured_clique(v, k, cfg)
    if res:
        return res
    metrics = dict(res.metrics)
    best = (-1.0, None)
    for r in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + r)
        w = random_frame(d, k, rng)
        s = _clique_surrogate(v, w)
        step = cfg.step
        for _ in range(cfg.max_iters // 10):
            if s > tol.rank_tol * 1e3:
                break
            z = rng.standard_normal(w.shape) + 1j * rng.standard_normal(w.shape)
            cand = _retract(w + step * z)
            s_new = _clique_surrogate(v, cand)
            if s_new > s:
                w, s = cand, s_new
            else:
                step *= 0.7
        p = Projection(w)
        if is_quantum_clique(v, p, tol):
            metrics.update(restart=r, surrogate=s)
            return SearchResult(p, "random_frame", metrics)
        if s > best[0]:
            best = (s, r)
    metrics["best_surrogate"] = best[0]
    return SearchResult(None, "", metrics)


# ---------------------------------------------------------------- multi-scale probe


def clique_rank_schedule(n: int) -> int:
    return max(2, int(math.log2(n)) - 1)


def weaver_leg_complement(n: int) -> Projection:
    """Coordinates orthogonal to the distinguished vector (array index 0)."""
    return Projection.coordinates(n, range(1, n))


def obstruction_score(v: OperatorSystem, rank_cut: int) -> float:
    """Max over elements of distance to scalars plus the tail beyond ``rank_cut`` entries."""
    d = v.ambient_dim
    score = 0.0
    for a in v.basis:
        dev = a - np.trace(a) / d * np.eye(d)
        mags = np.sort(np.abs(np.diag(a)))[::-1]
        tail = float(mags[rank_cut]) if len(mags) > rank_cut else 0.0
        score = max(score, opnorm(dev) + tail)
    return score


def probe_scale(kind, n: int, cfg: SearchConfig) -> tuple:
    """One truncation of the probe: ``(verdict, row)``."""
    tol = cfg.tol
    kind = FixtureKind(kind)
    v = fixture(TruncationSpec(n, kind), tol)
    row = {"N": n, "system_dimension": len(v)}
    if kind is FixtureKind.WEAVER:
        row["leg_complement_dimension"] = dimension(compress(v, weaver_leg_complement(n), tol), tol)

    verdict, frame, red = structured_analysis(v, cfg)
    row["reduction_length"] = red.vectors.shape[1]
    row["pipeline"] = verdict.kind
    if verdict.projection is not None and frame is not None:
        p = Projection.from_vectors(list((frame @ verdict.projection.columns).T), tol)
        comp = compress(v, p, tol)
        row["compression_dimension"] = dimension(comp, tol)
        row["compression_rank"] = p.rank
        row["obstruction_score"] = obstruction_score(comp, cfg.rank_cut)
        if verdict.kind == ANTICLIQUE and not is_quantum_anticlique(v, p, tol):
            verdict = Verdict(INCONCLUSIVE, metrics=verdict.metrics, notes="anticlique failed to re-verify")
        else:
            verdict = Verdict(verdict.kind, p, verdict.metrics, verdict.notes, verdict.witness,
                              verdict.scale_limited)
    if verdict.kind in (INCONCLUSIVE, OBSTRUCTION):
        k = clique_rank_schedule(n)
        found = find_clique(v, k, cfg)
        row["clique_rank_tried"] = k
        row["clique_found"] = bool(found)
        if found:
            verdict = Verdict(CLIQUE, found.projection, {"rank": k}, notes=f"via {found.strategy}")
            row["compression_dimension"] = k * k
    row["verdict"] = verdict.kind
    return verdict, row


def trichotomy_probe(kind, dims, cfg: SearchConfig = SearchConfig()) -> Verdict:
    """Run the structured pipeline over increasing truncations and aggregate.

    All scales clique gives ``clique``, all anticlique gives ``anticlique``.
    All scales obstruction with compression dimension at most
    ``cfg.bounded_dim`` gives ``obstruction_evidence``, which is a finite-scale
    heuristic and not a proof. Anything else is ``inconclusive``.
    """
    dims = [int(n) for n in dims]
    if len(dims) < 3 or any(b <= a for a, b in zip(dims, dims[1:])):
        raise ValueError("dims must be strictly increasing with at least 3 entries")
    verdicts, rows = [], []
    for n in dims:
        vd, row = probe_scale(kind, n, cfg)
        verdicts.append(vd)
        rows.append(row)
    kinds = {vd.kind for vd in verdicts}
    comp_dims = [row.get("compression_dimension", 0) for row in rows]
    metrics = {"scales": rows, "max_compression_dimension": max(comp_dims)}
    last = verdicts[-1]
    if kinds == {CLIQUE}:
        return Verdict(CLIQUE, last.projection, metrics, "clique at every scale")
    if kinds == {ANTICLIQUE}:
        return Verdict(ANTICLIQUE, last.projection, metrics, "anticlique at every scale")
    if kinds == {OBSTRUCTION} and max(comp_dims) <= cfg.bounded_dim:
        return Verdict(OBSTRUCTION, last.projection, metrics,
                       "heuristic evidence: bounded compression dimension, full-support compact-like witness, "
                       "no anticlique at any scale", witness=last.witness)
    return Verdict(INCONCLUSIVE, metrics=metrics, notes="scales disagree or dimensions unbounded")
