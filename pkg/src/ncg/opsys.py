"""Operator systems on ``C^d``: construction, compression and membership."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    as_matrix,
    matrix_unit,
    opnorm,
    span_rank,
    unit,
)

PAPER_LITERAL = "paper_literal"
REFLEXIVE = "reflexive"
CONVENTIONS = (PAPER_LITERAL, REFLEXIVE)


@dataclass(frozen=True)
class Graph:
    """Finite simple graph on vertices ``0 .. vertex_count - 1``."""

    vertex_count: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        clean = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge {(u, v)} out of range")
            clean.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(clean))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n)

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, (i + 1) % n) for i in range(n)))

    def adjacent(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def sorted_edges(self) -> list:
        return sorted(self.edges)


@dataclass(frozen=True, eq=False)
class Projection:
    """Rank-``k`` orthogonal projection on ``C^d`` stored as a ``d x k`` frame."""

    columns: np.ndarray
    tol: Tolerance = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        w = as_matrix(self.columns)
        object.__setattr__(self, "columns", w)
        k = w.shape[1]
        err = opnorm(adjoint(w) @ w - np.eye(k)) if k else 0.0
        if err > self.tol.residual_tol:
            raise ValueError(f"columns are not orthonormal (error {err:.3e})")

    @property
    def ambient_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self.columns @ adjoint(self.columns)

    @classmethod
    def coordinates(cls, d: int, indices: Iterable[int]) -> "Projection":
        idx = list(indices)
        w = np.zeros((d, len(idx)), dtype=complex)
        for col, i in enumerate(idx):
            w[i, col] = 1.0
        return cls(w)

    @classmethod
    def from_vectors(cls, vecs, tol: Tolerance = DEFAULT_TOL) -> "Projection":
        """Projection onto the span of arbitrary (nonzero) vectors."""
        from .matcore import as_columns, orth

        return cls(orth(as_columns(vecs), tol), tol)


@dataclass(frozen=True, eq=False)
class OperatorSystem:
    """A unital self-adjoint span of ``d x d`` matrices.

    ``basis`` has shape ``(n, d, d)`` and is linearly independent; it is
    produced by :func:`normalize`, which is the supported constructor.
    ``graph`` and ``convention`` are set for systems built from a graph.
    """

    basis: np.ndarray
    label: str = ""
    graph: Graph | None = None
    convention: str | None = None

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def __len__(self) -> int:
        return self.basis.shape[0]

    def __iter__(self):
        return iter(self.basis)

    def orthonormal_basis(self) -> np.ndarray:
        """HS-orthonormal basis of the span, as rows of vectorised matrices."""
        rows = self.basis.reshape(len(self), -1)
        q, _ = np.linalg.qr(rows.T)
        return q.T

    def __repr__(self) -> str:
        return f"OperatorSystem(d={self.ambient_dim}, dim={len(self)}, label={self.label!r})"


def _pivot_independent(cands: Sequence[np.ndarray], tol: Tolerance) -> list:
    """Keep, in order, the candidates not in the span of those already kept.

    A candidate is dependent when its residual after projecting onto the kept
    span is at most ``sqrt(rank_tol)`` times its own HS norm, matching the
    Gram-eigenvalue cutoff of :func:`span_rank`.
    """
    thresh = np.sqrt(tol.rank_tol)
    if not cands:
        return []
    dim = cands[0].size
    q = np.zeros((0, dim), dtype=complex)
    kept = []
    chunk = 128
    for start in range(0, len(cands), chunk):
        if q.shape[0] == dim:
            break
        block = np.stack([c.ravel() for c in cands[start:start + chunk]])
        norms = np.linalg.norm(block, axis=1)
        resid = block
        for _ in range(2):  # twice is enough for Gram-Schmidt stability
            resid = resid - (resid @ np.conj(q).T) @ q
        local = []
        for i, r in enumerate(resid):
            if norms[i] == 0.0:
                continue
            for _ in range(2):
                for b in local:
                    r = r - np.vdot(b, r) * b
            rn = np.linalg.norm(r)
            if rn > thresh * norms[i]:
                kept.append(cands[start + i])
                local.append(r / rn)
                if q.shape[0] + len(local) == dim:
                    break
        if local:
            q = np.vstack([q, np.stack(local)])
    return kept


def normalize(mats: Iterable, d: int, tol: Tolerance = DEFAULT_TOL, label: str = "",
              graph: Graph | None = None, convention: str | None = None) -> OperatorSystem:
    """Operator system spanned by ``mats``, their adjoints and ``I_d``.

    The identity is offered first, then each matrix followed by its adjoint;
    the first independent elements in that order form the basis.
    """
    cands = [np.eye(d, dtype=complex)]
    for m in mats:
        m = as_matrix(m)
        if m.shape != (d, d):
            raise ValueError(f"expected {d}x{d} matrices, got {m.shape}")
        cands.append(m)
        cands.append(adjoint(m))
    kept = _pivot_independent(cands, tol)
    return OperatorSystem(np.stack(kept), label=label, graph=graph, convention=convention)


def graph_matrices(g: Graph, convention: str = PAPER_LITERAL) -> list:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    n = g.vertex_count
    mats = []
    if convention == REFLEXIVE:
        mats.extend(matrix_unit(n, v, v) for v in range(n))
    for u, v in g.sorted_edges():
        mats.append(matrix_unit(n, u, v))
        mats.append(matrix_unit(n, v, u))
    return mats


def from_graph(g: Graph, convention: str = PAPER_LITERAL, tol: Tolerance = DEFAULT_TOL) -> OperatorSystem:
    """Graph operator system: the unit plus matrix units of both edge orientations.

    With ``convention="reflexive"`` all diagonal units are included as well,
    so a ``k``-clique compresses onto all of ``M_k``.
    """
    return normalize(graph_matrices(g, convention), g.vertex_count, tol,
                     label=f"graph[{convention}]", graph=g, convention=convention)


def graph_clique_dimension(k: int, convention: str = PAPER_LITERAL) -> int:
    """Compression dimension of a graph system on a classical ``k``-clique."""
    if convention == REFLEXIVE:
        return k * k
    return k * k - k + 1 if k > 1 else 1


def compress(v: OperatorSystem, p: Projection, tol: Tolerance = DEFAULT_TOL) -> OperatorSystem:
    """The compression ``{W^* A W}`` acting on the range of ``p`` (``W`` = frame)."""
    if p.ambient_dim != v.ambient_dim:
        raise ValueError(f"projection acts on C^{p.ambient_dim}, system on C^{v.ambient_dim}")
    w = p.columns
    mats = adjoint(w)[None] @ v.basis @ w[None]
    # a compression that only leaves rounding noise is zero; normalising it
    # would promote the noise to an independent direction
    keep = [m for m, a in zip(mats, v.basis) if opnorm(m) > tol.residual_tol * opnorm(a)]
    return normalize(keep, p.rank, tol, label=f"compress({v.label})")


def dimension(v: OperatorSystem, tol: Tolerance = DEFAULT_TOL) -> int:
    return span_rank(list(v.basis), tol)


def contains(v: OperatorSystem, a, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether ``a`` lies in the span of ``v`` up to ``residual_tol * ||a||``."""
    a = as_matrix(a)
    if a.shape != (v.ambient_dim, v.ambient_dim):
        raise ValueError(f"matrix shape {a.shape} does not match system on C^{v.ambient_dim}")
    vec = a.ravel()
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        return True
    q = v.orthonormal_basis()
    resid = vec - q.T @ (np.conj(q) @ vec)
    return bool(np.linalg.norm(resid) <= tol.residual_tol * nrm)


# ---------------------------------------------------------------- fixtures


class FixtureKind(str, enum.Enum):
    WEAVER = "weaver_example"
    TRACE = "trace_example"
    COMPACT_K = "compact_K_example"
    FULL_ALGEBRA = "full_algebra"


@dataclass(frozen=True)
class TruncationSpec:
    N: int
    kind: FixtureKind

    def __post_init__(self):
        try:
            kind = FixtureKind(self.kind)
        except ValueError:
            raise ValueError(f"unknown fixture kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if self.N < 3:
            raise ValueError("truncation dimension must be at least 3")


def harmonic_diagonal(n: int) -> np.ndarray:
    """``diag(1, 1/2, ..., 1/n)``: a positive injective operator with entries to 0."""
    return np.diag(1.0 / np.arange(1, n + 1)).astype(complex)


def trace_functional(m: int, n: int) -> np.ndarray:
    """``2m E_00 + E_0m + E_m0 - 2m E_mm`` on ``C^n`` (index 0 is distinguished)."""
    t = np.zeros((n, n), dtype=complex)
    t[0, 0] = 2 * m
    t[0, m] = 1.0
    t[m, 0] = 1.0
    t[m, m] = -2 * m
    return t


def trace_generator(j: int, n: int) -> np.ndarray:
    """``E_jj + j E_0j + j E_j0`` on ``C^n``."""
    a = np.zeros((n, n), dtype=complex)
    a[j, j] = 1.0
    a[0, j] = j
    a[j, 0] = j
    return a


def fixture(spec: TruncationSpec, tol: Tolerance = DEFAULT_TOL) -> OperatorSystem:
    """Finite truncations of the standard example systems.

    weaver_example
        ``span{I, K, e_1 e_n^*, e_n e_1^*}`` with ``K = diag(1/n)``; ``e_1`` is
        array index 0.
    trace_example
        ``span{I, A_n}`` with ``A_n = E_nn + n E_0n + n E_n0``, ``n = 1..N-1``.
    compact_K_example
        ``span{I, K}`` with ``K = diag(1/n)``.
    full_algebra
        all of ``M_N``.
    """
    n, kind = spec.N, spec.kind
    label = f"{kind.value}(N={n})"
    if kind is FixtureKind.WEAVER:
        mats = [harmonic_diagonal(n)]
        for j in range(n):
            mats.append(matrix_unit(n, 0, j))
            mats.append(matrix_unit(n, j, 0))
    elif kind is FixtureKind.TRACE:
        mats = [trace_generator(j, n) for j in range(1, n)]
    elif kind is FixtureKind.COMPACT_K:
        mats = [harmonic_diagonal(n)]
    else:
        mats = [matrix_unit(n, i, j) for i in range(n) for j in range(n)]
    return normalize(mats, n, tol, label=label)


def standard_frame(d: int, indices: Sequence[int]) -> np.ndarray:
    return np.stack([unit(d, i) for i in indices], axis=1)
