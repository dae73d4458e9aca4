"""Constructive steps behind the Ramsey-type trichotomy, as checkable certificates.

Every routine returns the intermediate objects (vectors, coefficients,
residuals, achieved bounds) so the identities they are built to satisfy can be
re-evaluated directly. Indices into operator lists and into the standard
basis are 0-based throughout; norm caps of the form ``2^{-(n+1)}`` use the
1-based position ``n`` of the vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    Tolerance,
    adjoint,
    as_columns,
    as_matrix,
    independence_margin,
    intersection_coefficients,
    null_space,
    opnorm,
    orthonormal_complement,
    polar_and_cut,
    psd_sqrt,
    span_rank,
    unit,
)
from .opsys import OperatorSystem, Projection, compress, dimension
from .verdict import ANTICLIQUE, INCONCLUSIVE, OBSTRUCTION, Verdict


class ConstructionError(ValueError):
    """Inputs violate a construction's preconditions."""


class ScaleLimitError(RuntimeError):
    """The construction cannot be completed at this truncation.

    ``partial`` holds whatever was built before the limit was hit.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


def _operators(a_list) -> list:
    ops = [as_matrix(a) for a in a_list]
    if not ops:
        raise ConstructionError("empty operator list")
    shapes = {a.shape for a in ops}
    if len(shapes) != 1:
        raise ConstructionError(f"operators have mismatched shapes {sorted(shapes)}")
    d0, d1 = ops[0].shape
    if d0 != d1:
        raise ConstructionError(f"operators must be square, got {ops[0].shape}")
    return ops


def _zero_level(scale: float, tol: Tolerance) -> float:
    return tol.residual_tol * max(1.0, scale)


# ---------------------------------------------------------------- dilation


@dataclass
class DilationCertificate:
    """Isometry ``V: C^N -> C^d + C^d`` with ``V^*(A_n + 0)V = T_n``.

    ``targets[n] = R A_n R^*`` where ``R`` has the vectors as its first columns
    and zeros after, i.e. ``T_n = sum_ij A_n[i, j] x_i x_j^*``.
    """

    isometry: np.ndarray
    operators: list
    vectors: np.ndarray
    targets: np.ndarray
    residuals: list
    isometry_residual: float
    tol: Tolerance = field(default=DEFAULT_TOL, repr=False)

    @property
    def passed(self) -> bool:
        return (self.isometry_residual <= self.tol.residual_tol
                and all(r <= self.tol.residual_tol for r in self.residuals))

    def compress(self, a: np.ndarray) -> np.ndarray:
        """``V^*(a + 0)V`` for an operator ``a`` on ``C^d``."""
        v1 = self.isometry[: a.shape[0]]
        return adjoint(v1) @ a @ v1

    def map(self) -> np.ndarray:
        """The operator ``h -> V^*(h, 0)`` from ``C^d`` to ``C^N``."""
        d = self.operators[0].shape[0]
        return adjoint(self.isometry[:d])


# a later candidate direction must beat the current best margin by this factor,
# so near-ties resolve the same way regardless of zero padding
_TIE = 1.0 + 1e-6


def norm_cap(n: int) -> float:
    """``2^{-(n+1)}`` for the 1-based position ``n``."""
    return 2.0 ** (-(n + 1))


def dilation_isometry(a_list, x_list, tol: Tolerance = DEFAULT_TOL) -> DilationCertificate:
    ops = _operators(a_list)
    d = ops[0].shape[0]
    x = as_columns(x_list)
    n_dim, count = x.shape
    if count > d:
        raise ConstructionError(f"{count} vectors but only {d} basis slots")
    if n_dim > d:
        raise ConstructionError(f"vector length {n_dim} exceeds operator dimension {d}")
    norms = np.linalg.norm(x, axis=0)
    for n, nrm in enumerate(norms, start=1):
        if nrm > norm_cap(n) * (1 + 1e-12):
            raise ConstructionError(f"||x_{n}|| = {nrm:.3e} exceeds 2^-{n + 1}")

    r = np.zeros((n_dim, d), dtype=complex)
    r[:, :count] = x
    s = np.vstack([r, psd_sqrt(np.eye(d) - adjoint(r) @ r)])
    q, _ = np.linalg.qr(s, mode="complete")
    s_perp = q[:, d:]
    # W maps S e_n to h_n + 0 and the complement of range(S) into 0 + C^d
    top = np.vstack([np.eye(d), np.zeros((d, d))])
    side = np.zeros((2 * d, n_dim), dtype=complex)
    side[d + np.arange(n_dim), np.arange(n_dim)] = 1.0
    w = top @ adjoint(s) + side @ adjoint(s_perp)
    v = w[:, :n_dim]

    v1 = v[:d]
    targets = np.stack([r @ a @ adjoint(r) for a in ops])
    residuals = [opnorm(adjoint(v1) @ a @ v1 - t) for a, t in zip(ops, targets)]
    iso = opnorm(adjoint(v) @ v - np.eye(n_dim))
    return DilationCertificate(v, ops, x, targets, residuals, iso, tol)


# ---------------------------------------------------------------- spanning family


def rank_one_directions(mu: int, dim: int | None = None) -> list:
    """Unit vectors in ``C^mu`` whose rank-one projections span ``M_mu``.

    Order: ``e_i``, then ``(e_i + e_j)/sqrt2`` and ``(e_i + i e_j)/sqrt2`` for
    ``i < j``. Vectors are zero-padded to length ``dim``.
    """
    dim = dim or mu
    out = [unit(dim, i) for i in range(mu)]
    for i in range(mu):
        for j in range(i + 1, mu):
            out.append((unit(dim, i) + unit(dim, j)) / np.sqrt(2))
            out.append((unit(dim, i) + 1j * unit(dim, j)) / np.sqrt(2))
    return out


def level_of(n: int) -> int:
    """The ``mu`` with ``(mu - 1)^2 < n <= mu^2``."""
    return math.isqrt(n - 1) + 1


@dataclass
class SpanningFamily:
    m: int
    vectors: np.ndarray
    operators: np.ndarray
    margins: list
    scales: list

    def __len__(self):
        return self.operators.shape[0]


def check_finite_support_pattern(ops, count: int, tol: Tolerance) -> None:
    """Raise unless ``ops[n-1]`` is self-adjoint, has ``(n, n)`` entry 1 and
    vanishes outside its top-left ``n x n`` block, for ``n <= count``."""
    d = ops[0].shape[0]
    if count > d:
        raise ConstructionError(f"pattern needs {count} basis vectors, dimension is {d}")
    for n, a in enumerate(ops[:count], start=1):
        zero = _zero_level(opnorm(a), tol)
        if opnorm(a - adjoint(a)) > zero:
            raise ConstructionError(f"operator {n} is not self-adjoint")
        if abs(a[n - 1, n - 1] - 1.0) > zero:
            raise ConstructionError(f"operator {n} has diagonal entry {a[n - 1, n - 1]} at {n}, expected 1")
        outside = a.copy()
        outside[:n, :n] = 0
        if np.max(np.abs(outside), initial=0.0) > zero:
            raise ConstructionError(f"operator {n} is supported outside its top-left {n}x{n} block")


def spanning_vectors(a_list, m: int, tol: Tolerance = DEFAULT_TOL, max_retries: int = 64,
                     margin: float | None = None) -> SpanningFamily:
    """Vectors ``x_1..x_{m^2}`` in ``C^m`` whose ``T_n = sum A_n[i,j] x_i x_j^*`` span ``M_m``.

    ``x_n`` lives in the first ``mu`` coordinates for ``(mu-1)^2 < n <= mu^2``
    and has norm at most ``2^{-(n+1)}``. The length of ``x_n`` is halved from 1
    until the prefix ``T_1..T_n`` is independent with normalised-Gram margin at
    least ``margin`` (default ``10 * rank_tol``); the direction is the
    candidate from :func:`rank_one_directions` giving the best margin.
    """
    if m < 1:
        raise ConstructionError("m must be positive")
    ops = _operators(a_list)
    total = m * m
    if len(ops) < total:
        raise ScaleLimitError(f"need {total} operators for m = {m}, got {len(ops)}")
    check_finite_support_pattern(ops, total, tol)
    margin = 10 * tol.rank_tol if margin is None else margin
    coeffs = [a[:n, :n] for n, a in enumerate(ops[:total], start=1)]

    x = np.zeros((m, total), dtype=complex)
    x[0, 0] = 0.25
    ts = [x[:, :1] @ coeffs[0] @ adjoint(x[:, :1])]
    margins, scales = [1.0], [0.25]
    for k in range(2, total + 1):
        mu = level_of(k)
        cands = rank_one_directions(mu, m)
        accepted = None
        for t in range(k + 1, max_retries + 1):
            scale = 2.0 ** (-t)
            best = None
            for z in cands:
                x[:, k - 1] = scale * z
                xk = x[:, :k]
                tk = xk @ coeffs[k - 1] @ adjoint(xk)
                marg = independence_margin(ts + [tk])
                if best is None or marg > best[0] * _TIE:
                    best = (marg, z, tk)
            if best[0] >= margin:
                accepted = (scale,) + best
                break
        if accepted is None:
            x[:, k - 1] = 0
            partial = SpanningFamily(m, x[:, : k - 1].copy(), np.stack(ts), margins, scales)
            raise ScaleLimitError(f"independence unreachable at step {k}", partial)
        scale, marg, z, tk = accepted
        x[:, k - 1] = scale * z
        ts.append(tk)
        margins.append(marg)
        scales.append(scale)
    return SpanningFamily(m, x, np.stack(ts), margins, scales)


# ---------------------------------------------------------------- clique from a map


def clique_from_map(t, v: OperatorSystem, threshold: float, tol: Tolerance = DEFAULT_TOL):
    """Projection onto ``ker(t)^perp`` and whether it is a clique for ``v``.

    ``verified`` holds when ``span{t A t^*}`` has dimension ``rank(t)^2`` and
    the compression of ``v`` has that dimension too.
    """
    t = as_matrix(t)
    if t.shape[1] != v.ambient_dim:
        raise ConstructionError(f"map acts on C^{t.shape[1]}, system on C^{v.ambient_dim}")
    polar_and_cut(t, threshold, tol)  # validates t and the threshold
    _, sing, wh = np.linalg.svd(t, full_matrices=False)
    rank = int(np.sum(sing > tol.rank_tol * sing[0]))
    p = Projection(adjoint(wh[:rank]))
    tnorm = sing[0] ** 2
    images = [t @ a @ adjoint(t) for a in v.basis]
    images = [m for m, a in zip(images, v.basis) if opnorm(m) > tol.residual_tol * tnorm * opnorm(a)]
    full = bool(images) and span_rank(images, tol) == rank * rank
    verified = full and dimension(compress(v, p, tol), tol) == rank * rank
    return p, verified


# ---------------------------------------------------------------- diagonal reduction

DIAGONALIZED = "diagonalized"
FINITE_CODIM = "finite_codim_obstructed"


@dataclass
class DiagonalReduction:
    vectors: np.ndarray
    frames: list
    branch: str

    @property
    def projection(self) -> Projection:
        return Projection(self.vectors)

    def diagonals(self, v: OperatorSystem) -> np.ndarray:
        """Diagonal of ``X^* A X`` for each basis element ``A`` (rows)."""
        x = self.vectors
        return np.einsum("ij,nik,kj->nj", np.conj(x), v.basis, x)


def _reduction_candidates(frame: np.ndarray, rng: np.random.Generator, n_random: int) -> np.ndarray:
    k = frame.shape[1]
    cols = []
    proj = frame @ adjoint(frame)
    for i in range(frame.shape[0]):
        p = proj[:, i]
        nrm = np.linalg.norm(p)
        if nrm > 1e-8:
            cols.append(p / nrm)
    cols.extend(frame.T)
    for _ in range(n_random):
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        cols.append(frame @ (z / np.linalg.norm(z)))
    return np.stack(cols, axis=1)


def reduce_to_diagonal(v: OperatorSystem, tol: Tolerance = DEFAULT_TOL,
                       rng: np.random.Generator | None = None, n_random: int = 8) -> DiagonalReduction:
    """Orthonormal ``x_1, x_2, ...`` with ``<A x_k, x_l> = 0`` for all ``A`` in ``v``, ``k != l``.

    ``x_k`` is taken in the current subspace ``P_k`` and ``P_{k+1}`` is
    ``P_k`` minus the orbit ``P_k v P_k x_k``. Among the candidates (projected
    standard basis vectors, the frame of ``P_k``, then ``n_random`` random unit
    vectors) the first one leaving the largest remaining subspace is used.
    Stops when nothing remains.
    """
    d = v.ambient_dim
    if d < 2:
        raise ConstructionError("ambient dimension must be at least 2")
    rng = np.random.default_rng(0) if rng is None else rng
    frame = np.eye(d, dtype=complex)
    xs, frames = [], [frame]
    while frame.shape[1] > 0:
        k = frame.shape[1]
        cands = _reduction_candidates(frame, rng, n_random)
        best_x, best_comp = None, None
        for c in range(cands.shape[1]):
            # orbit of the candidate, projected back into the frame
            orbit = frame @ (adjoint(frame) @ (v.basis @ cands[:, c]).T)
            comp = orthonormal_complement(orbit, within=frame, tol=tol)
            if best_comp is None or comp.shape[1] > best_comp.shape[1]:
                best_x, best_comp = cands[:, c], comp
                if comp.shape[1] == k - 1:
                    break
        xs.append(best_x)
        frame = best_comp
        frames.append(frame)
    branch = FINITE_CODIM if len(xs) == 1 else DIAGONALIZED
    return DiagonalReduction(np.stack(xs, axis=1), frames, branch)


# ---------------------------------------------------------------- orthogonal chain


@dataclass
class OrthogonalChain:
    """``A_n x_n = x_{n+1}`` with each new ``x`` orthogonal to earlier data."""

    operators: list
    vectors: np.ndarray
    coefficients: list

    def __len__(self):
        return self.vectors.shape[1]


def orthogonal_chain(v: OperatorSystem, x1, tol: Tolerance = DEFAULT_TOL,
                     max_length: int | None = None) -> OrthogonalChain:
    """Extend ``x1`` by ``x_{n+1} = A_n x_n`` with ``A_n`` in ``v``.

    ``x_{n+1}`` is a unit vector of ``v x_n`` orthogonal to ``x_i``,
    ``A_j x_i`` and ``A_j^* x_i`` for all earlier ``i`` and ``j``. The chain ends
    as soon as no such vector exists.
    """
    x1 = np.asarray(x1, dtype=complex).ravel()
    if x1.size != v.ambient_dim:
        raise ConstructionError("starting vector has the wrong dimension")
    xs = [x1 / np.linalg.norm(x1)]
    ops, coeffs = [], []
    while max_length is None or len(xs) < max_length:
        xn = xs[-1]
        images = np.einsum("nij,j->in", v.basis, xn)
        avoid = list(xs)
        for a in ops:
            for xi in xs:
                avoid.append(a @ xi)
                avoid.append(adjoint(a) @ xi)
        c = intersection_coefficients(images, avoid, tol)
        if c is None:
            break
        y = images @ c
        nrm = np.linalg.norm(y)
        c = c / nrm
        ops.append(np.einsum("n,nij->ij", c, v.basis))
        coeffs.append(c)
        xs.append(y / nrm)
    return OrthogonalChain(ops, np.stack(xs, axis=1), coeffs)


# ---------------------------------------------------------------- finite support extraction


@dataclass
class BlockExtraction:
    """Self-adjoint ``operator`` in ``span{A_j, A_j^*: j >= from_index}``,
    supported in the top-left ``block`` corner, with ``<B f, f> = 1``.

    ``operator = (re or im part of sum_j coefficients[j] A_{from_index + j}) / scale``.
    """

    operator: np.ndarray
    coefficients: np.ndarray
    part: str
    scale: float
    witness: np.ndarray
    from_index: int
    block: int


def extract_block_supported(a_list, from_index: int, block: int, tol: Tolerance = DEFAULT_TOL,
                            witness_range: tuple | None = None) -> BlockExtraction | None:
    """Find a nonzero combination of ``a_list[from_index:]`` living in the corner.

    The combination solves the homogeneous system "all entries outside the
    ``block x block`` corner vanish". Its real part is kept when nonzero,
    otherwise its imaginary part, then it is scaled so that a diagonal entry
    (or, failing that, a top eigenvector) has expectation 1. With
    ``witness_range=(lo, hi)`` the witness vector must live in coordinates
    ``lo..hi-1``.
    """
    ops = _operators(a_list)[from_index:]
    if not ops:
        return None
    d = ops[0].shape[0]
    outside = np.ones((d, d), dtype=bool)
    outside[:block, :block] = False
    m = np.stack([a[outside] for a in ops], axis=1)
    kernel = null_space(m, tol) if m.shape[0] else np.eye(len(ops), dtype=complex)
    stack = np.stack(ops)
    scale = max(opnorm(a) for a in ops)
    best, best_f = None, None
    for c in kernel.T:
        f = np.einsum("n,nij->ij", c, stack)
        nrm = opnorm(f)
        if best is None or nrm > best[1]:
            best, best_f = (c, nrm), f
    if best is None or best[1] <= tol.rank_tol * scale:
        return None
    c, fnorm = best
    re = (best_f + adjoint(best_f)) / 2
    im = (best_f - adjoint(best_f)) / 2j
    if opnorm(re) > tol.rank_tol * fnorm:
        part, h = "re", re
    else:
        part, h = "im", im

    lo, hi = witness_range if witness_range is not None else (0, d)
    sub = h[lo:hi, lo:hi]
    if sub.size == 0 or opnorm(sub) <= tol.rank_tol * fnorm:
        return None
    diag = np.real(np.diag(sub))
    i = int(np.argmax(np.abs(diag)))
    if abs(diag[i]) > tol.rank_tol * fnorm:
        value = diag[i]
        witness = unit(d, lo + i)
    else:
        w, u = np.linalg.eigh(sub)
        j = int(np.argmax(np.abs(w)))
        value = w[j]
        witness = np.zeros(d, dtype=complex)
        witness[lo:hi] = u[:, j]
    return BlockExtraction(h / value, c, part, float(value), witness, from_index, block)


@dataclass
class FiniteSupportFamily:
    """Self-adjoint ``B_k`` and orthonormal ``f_k`` with ``<B_k f_k, f_k> = 1`` and
    ``<B_k f_i, f_j> = 0`` whenever ``max(i, j) > k``."""

    operators: list
    vectors: np.ndarray
    cuts: list
    scale_limited: bool

    def in_basis(self) -> list:
        """The operators written in the ``f`` basis, ``F^* B_k F``."""
        f = self.vectors
        return [adjoint(f) @ b @ f for b in self.operators]


def finite_support_family(a_list, count: int, tol: Tolerance = DEFAULT_TOL) -> FiniteSupportFamily:
    """Chain :func:`extract_block_supported` over growing corners.

    Step ``k`` uses operators from index ``k - 1`` on and the smallest corner
    ``N_k > N_{k-1}`` admitting a combination whose witness lies in
    coordinates ``N_{k-1} .. N_k - 1``.
    """
    ops = _operators(a_list)
    d = ops[0].shape[0]
    cut, found, cuts, fs = 0, [], [], []
    limited = False
    for k in range(count):
        ext = None
        for block in range(cut + 1, d + 1):
            ext = extract_block_supported(ops, k, block, tol, witness_range=(cut, block))
            if ext is not None:
                break
        if ext is None:
            limited = True
            break
        found.append(ext.operator)
        fs.append(ext.witness)
        cut = ext.block
        cuts.append(cut)
    vectors = np.stack(fs, axis=1) if fs else np.zeros((d, 0), dtype=complex)
    return FiniteSupportFamily(found, vectors, cuts, limited)


# ---------------------------------------------------------------- index thinning


@dataclass
class ThinnedFamily:
    indices: list
    basis: np.ndarray
    bounds: list
    scale_limited: bool


def thin_subsequence(a_list, n_bounds, tol: Tolerance = DEFAULT_TOL,
                     count: int | None = None) -> ThinnedFamily:
    """Pick standard basis vectors ``f_k = e_{M_k}`` with cubic-spaced supports.

    ``n_bounds[n]`` is the size of the top-left corner containing the
    off-diagonal part of ``a_list[n]``. ``M_k`` (0-based) is at least the
    corner size of operator ``k^3`` (clamped to the last operator, with the
    bounds replaced by their running maximum) and exceeds ``M_{k-1}``. It is
    chosen so that the compressions of ``A_1..A_k`` to ``f_1..f_k`` stay
    independent: if the new compression is already in the span of the old
    ones, ``M_k`` is the first index where the unique matching combination
    and ``A_k`` have different diagonal entries.
    """
    ops = _operators(a_list)
    d = ops[0].shape[0]
    if len(n_bounds) != len(ops):
        raise ConstructionError("need one corner bound per operator")
    hull = list(np.maximum.accumulate(np.asarray(n_bounds, dtype=int)))
    for n, (a, b) in enumerate(zip(ops, hull)):
        off = a.copy()
        np.fill_diagonal(off, 0)
        off[:b, :b] = 0
        if np.max(np.abs(off), initial=0.0) > _zero_level(opnorm(a), tol):
            raise ConstructionError(f"operator {n} has off-diagonal entries outside its {b}x{b} corner")

    count = len(ops) if count is None else min(count, len(ops))
    chosen: list = []
    limited = False
    for k in range(1, count + 1):
        lo = hull[min(k**3, len(ops)) - 1]
        if chosen:
            lo = max(lo, chosen[-1] + 1)
        target = ops[k - 1]
        if chosen:
            ix = np.ix_(chosen, chosen)
            comp = np.stack([a[ix].ravel() for a in ops[: k - 1]], axis=1)
            rhs = target[ix].ravel()
            c, *_ = np.linalg.lstsq(comp, rhs, rcond=None)
            matched = np.linalg.norm(comp @ c - rhs) <= _zero_level(np.linalg.norm(rhs), tol)
        else:
            c, matched = np.zeros(0), True
        pick = None
        if matched:
            diff = np.einsum("n,nij->ij", c, np.stack(ops[: k - 1])) if k > 1 else np.zeros_like(target)
            diff = np.diag(diff - target)
            zero = _zero_level(float(np.max(np.abs(diff), initial=0.0)), tol) * tol.rank_tol
            for i in range(lo, d):
                if abs(diff[i]) > max(zero, tol.residual_tol * 1e-2):
                    pick = i
                    break
        elif lo < d:
            pick = lo
        if pick is None:
            limited = True
            break
        chosen.append(pick)
    basis = np.stack([unit(d, i) for i in chosen], axis=1) if chosen else np.zeros((d, 0), dtype=complex)
    return ThinnedFamily(chosen, basis, hull, limited)


# ---------------------------------------------------------------- corners to diagonal


@dataclass
class CornerElimination:
    operator: np.ndarray
    coefficients: np.ndarray

    @property
    def off_diagonal_norm(self) -> float:
        off = self.operator.copy()
        np.fill_diagonal(off, 0)
        return float(np.linalg.norm(off))


def diagonal_from_corners(a_list, n: int, tol: Tolerance = DEFAULT_TOL) -> CornerElimination:
    """Nonzero diagonal operator in the span of corner-plus-diagonal inputs.

    Each input must be an ``n x n`` top-left corner plus a diagonal. The
    combination kills the ``n^2 - n`` off-diagonal corner entries, so any
    list longer than that has a nonzero solution. An input that is already
    diagonal is returned as is; otherwise the result has unit HS norm.
    """
    ops = _operators(a_list)
    d = ops[0].shape[0]
    for j, a in enumerate(ops):
        off = a.copy()
        np.fill_diagonal(off, 0)
        off[:n, :n] = 0
        if np.max(np.abs(off), initial=0.0) > _zero_level(opnorm(a), tol):
            raise ConstructionError(f"operator {j} is not an {n}x{n} corner plus a diagonal")
    for j, a in enumerate(ops):
        off = a.copy()
        np.fill_diagonal(off, 0)
        if np.linalg.norm(off) <= _zero_level(np.linalg.norm(a), tol) and np.linalg.norm(a) > 0:
            return CornerElimination(a.copy(), unit(len(ops), j))
    mask = np.zeros((d, d), dtype=bool)
    mask[:n, :n] = True
    np.fill_diagonal(mask, False)
    m = np.stack([a[mask] for a in ops], axis=1)
    kernel = null_space(m, tol)
    stack = np.stack(ops)
    best = None
    for c in kernel.T:
        b = np.einsum("j,jkl->kl", c, stack)
        nrm = np.linalg.norm(b)
        if best is None or nrm > best[2]:
            best = (c, b, nrm)
    if best is None or best[2] <= tol.rank_tol * max(np.linalg.norm(a) for a in ops):
        raise ConstructionError("no nonzero diagonal combination at this tolerance")
    c, b, nrm = best
    b = b / nrm
    np.fill_diagonal(b, np.diag(b))
    return CornerElimination(b, c / nrm)


# ---------------------------------------------------------------- diagonal clustering


def _diagonals(a_list, tol: Tolerance) -> np.ndarray:
    rows = []
    for a in a_list:
        a = np.asarray(a)
        if a.ndim == 1:
            rows.append(np.real(a).astype(float))
            continue
        off = a.copy()
        np.fill_diagonal(off, 0)
        if np.max(np.abs(off), initial=0.0) > _zero_level(opnorm(a), tol):
            raise ConstructionError("expected diagonal operators")
        rows.append(np.diag(a).copy())
    if not rows:
        raise ConstructionError("empty operator list")
    return np.stack(rows)


@dataclass
class ClusterResult:
    indices: np.ndarray
    shifts: list
    sizes: list
    scale_limited: bool


def densest_window(values: np.ndarray, width: float) -> tuple:
    """Largest set of values with spread at most ``width``: ``(positions, centre)``.

    Ties go to the window starting at the smallest value.
    """
    order = np.argsort(values, kind="stable")
    s = values[order]
    best_i, best_j, j = 0, 0, 0
    for i in range(len(s)):
        j = max(j, i)
        while j + 1 < len(s) and s[j + 1] - s[i] <= width:
            j += 1
        if j - i > best_j - best_i:
            best_i, best_j = i, j
    return np.sort(order[best_i:best_j + 1]), (s[best_i] + s[best_j]) / 2


def cluster_diagonals(a_list, eps: float, min_size: int = 1, tol: Tolerance = DEFAULT_TOL) -> ClusterResult:
    """Common index set on which every diagonal is within ``eps`` of a constant.

    Operators are processed in order; each one restricts the current index
    set to its densest window of spread ``eps`` and contributes the window
    centre as its shift.
    """
    if eps <= 0:
        raise ConstructionError("eps must be positive")
    diags = _diagonals(a_list, tol)
    idx = np.arange(diags.shape[1])
    shifts, sizes = [], []
    for g in diags:
        if np.iscomplexobj(g) and np.max(np.abs(np.imag(g)), initial=0.0) > tol.residual_tol:
            raise ConstructionError("diagonal entries must be real (self-adjoint operators)")
        pos, centre = densest_window(np.real(g[idx]), eps)
        idx = idx[pos]
        shifts.append(float(centre))
        sizes.append(len(idx))
    return ClusterResult(idx, shifts, sizes, len(idx) < min_size)


# ---------------------------------------------------------------- finite-dimensional diagonal verdict


def _generator_diagonals(v: OperatorSystem, tol: Tolerance) -> list:
    d = v.ambient_dim
    out = []
    for a in v.basis:
        g = np.diag(a)
        if np.allclose(a, a[0, 0] * np.eye(d), atol=tol.residual_tol):
            continue
        for part in (np.real(g), np.imag(g)):
            if np.max(np.abs(part), initial=0.0) > 0:
                out.append(part)
    return out


def anticlique_or_obstruction(v_diag: OperatorSystem, rank_cut: int, eps: float,
                              tol: Tolerance = DEFAULT_TOL) -> Verdict:
    """Split a (shifted) diagonal system into the finite-rank and compact cases.

    Non-identity basis elements are read as diagonals (real and imaginary
    parts separately). If each has at most ``rank_cut`` nonzero entries the
    coordinates past every support form an anticlique. Otherwise the
    generator with the largest support is the witness and the projection onto
    its support is reported as obstruction evidence, provided the witness
    looks compact: at most ``rank_cut`` entries exceed ``eps``.
    """
    d = v_diag.ambient_dim
    for a in v_diag.basis:
        off = a.copy()
        np.fill_diagonal(off, 0)
        if np.max(np.abs(off), initial=0.0) > _zero_level(opnorm(a), tol):
            raise ConstructionError("system is not diagonal")
    gens = _generator_diagonals(v_diag, tol)
    scale = max((float(np.max(np.abs(g))) for g in gens), default=0.0)
    zero = _zero_level(scale, tol)
    supports = [np.flatnonzero(np.abs(g) > zero) for g in gens]
    sizes = [len(s) for s in supports]
    metrics = {"generators": len(gens), "max_support": max(sizes, default=0)}

    if all(s <= rank_cut for s in sizes):
        used = np.concatenate(supports) if supports else np.zeros(0, dtype=int)
        start = int(used.max()) + 1 if used.size else 0
        if start >= d:
            return Verdict(INCONCLUSIVE, metrics=metrics, scale_limited=True,
                           notes="finite-rank generators but no coordinates left past their supports")
        p = Projection.coordinates(d, range(start, d))
        dim = dimension(compress(v_diag, p, tol), tol)
        metrics.update(tail_start=start, tail_rank=d - start, compression_dimension=dim)
        if dim == 1:
            return Verdict(ANTICLIQUE, p, metrics, notes="every generator has finite support")
        return Verdict(INCONCLUSIVE, metrics=metrics, notes="tail compression is not scalar")

    w = int(np.argmax(sizes))
    witness = gens[w]
    support = supports[w]
    above = int(np.sum(np.abs(witness) > eps))
    p = Projection.coordinates(d, support)
    dim = dimension(compress(v_diag, p, tol), tol)
    metrics.update(witness_support=len(support), entries_above_eps=above, compression_dimension=dim,
                   witness_min=float(np.min(np.abs(witness[support]))),
                   witness_max=float(np.max(np.abs(witness[support]))))
    if above > rank_cut:
        return Verdict(INCONCLUSIVE, metrics=metrics, witness=witness,
                       notes=f"witness has {above} entries above eps; not compact at this scale")
    return Verdict(OBSTRUCTION, p, metrics, witness=witness,
                   notes="full-support witness with entries decaying below eps")


# ---------------------------------------------------------------- triangular families


@dataclass
class TriangularFamily:
    """Diagonal ``B_k`` with ``B_k[p_i] = 0`` for ``i < k`` and ``B_k[p_k] = 1``.

    ``diagonals[k]`` is the diagonal of ``B_k``, ``pivots[k] = p_k`` and
    ``B_k = sum_j coefficients[k, j] A_j``.
    """

    diagonals: np.ndarray
    pivots: list
    coefficients: np.ndarray
    scale_limited: bool

    def __len__(self):
        return len(self.pivots)

    @property
    def operators(self) -> np.ndarray:
        return np.stack([np.diag(g) for g in self.diagonals]) if len(self) else np.zeros((0, 0, 0))

    def pattern(self) -> np.ndarray:
        """``pattern[k, i] = <B_k f_i, f_i>`` with ``f_i = e_{p_i}``."""
        return self.diagonals[:, self.pivots]


def triangularize_diagonals(a_list, tol: Tolerance = DEFAULT_TOL) -> TriangularFamily:
    """Eliminate pivot entries in order so each new ``B_k`` is fresh at its own pivot."""
    diags = _diagonals(a_list, tol).astype(complex)
    n_in, d = diags.shape
    rows, coeffs, pivots = [], [], []
    limited = False
    for k, a in enumerate(diags):
        vec = a.copy()
        c = np.zeros(n_in, dtype=complex)
        c[k] = 1.0
        for b, cb, p in zip(rows, coeffs, pivots):
            f = vec[p]
            vec = vec - f * b
            c = c - f * cb
        free = np.ones(d, dtype=bool)
        free[pivots] = False
        mags = np.where(free, np.abs(vec), -1.0)
        p = int(np.argmax(mags))
        scale = float(np.max(np.abs(a), initial=0.0))
        if scale == 0.0 or mags[p] <= np.sqrt(tol.rank_tol) * scale:
            limited = True
            break
        piv = vec[p]
        vec = vec / piv
        vec[pivots] = 0.0
        vec[p] = 1.0
        rows.append(vec)
        coeffs.append(c / piv)
        pivots.append(p)
    diagonals = np.stack(rows) if rows else np.zeros((0, d), dtype=complex)
    coefficients = np.stack(coeffs) if coeffs else np.zeros((0, n_in), dtype=complex)
    return TriangularFamily(diagonals, pivots, coefficients, limited)


# ---------------------------------------------------------------- clique certificate


@dataclass
class CliqueCertificate:
    """Approximate matrix units ``E_rs`` from compressions of a triangular family.

    ``gammas[(mu, r, s)]`` solves ``E_rs = sum_j gamma_j A_j^{mu^2}`` exactly
    and ``bounds[(mu, r, s)]`` is the achieved
    ``||E_rs - sum_j gamma_j V^* A_j V||`` once the remaining vectors are
    added; ``a_priori`` is the estimate ``sum_j |gamma_j| ||A_j|| sum_{k > mu^2} ||x_k||^2``.
    """

    m: int
    k_max: int
    vectors: np.ndarray
    isometry: np.ndarray
    pivots: list
    gammas: dict
    bounds: dict
    a_priori: dict
    solve_residuals: dict
    caps: list
    margins: list
    dilation: DilationCertificate

    def level_max(self, mu: int) -> float:
        return max(v for (lv, _, _), v in self.bounds.items() if lv == mu)

    @property
    def passed(self) -> bool:
        return self.dilation.passed and all(v <= 1.0 / mu for (mu, _, _), v in self.bounds.items())

    def map(self) -> np.ndarray:
        """``h -> V^*(h, 0)`` on the pivot coordinates."""
        return self.dilation.map()


def _partial_sums(pattern: np.ndarray, x: np.ndarray, k: int) -> list:
    """``A_j^k = sum_{i<k} pattern[j, i] x_i x_i^*`` for ``j < k``."""
    xk = x[:, :k]
    return [(xk * pattern[j, :k]) @ adjoint(xk) for j in range(k)]


def clique_certificate(fam: TriangularFamily, m: int, k_max: int, tol: Tolerance = DEFAULT_TOL,
                       margin: float | None = None, max_retries: int = 64) -> CliqueCertificate:
    """Build ``x_1..x_{k_max}`` and the dilation making ``E_rs`` nearly compressions.

    ``x_k`` lives in ``C^mu`` for ``(mu-1)^2 < k <= mu^2`` and is scaled down
    from its cap by halving until both ``{x_i x_i^*}`` and ``{A_j^k}`` are
    independent with margin ``margin`` (default ``10 * rank_tol``). After level
    ``mu <= m`` is complete, the coefficients ``gamma^{rs, mu^2}`` are solved and
    every later ``||x_k||^2`` is capped by
    ``1 / (2^{k+1} mu sum_j |gamma_j| ||A_j||)`` for all completed levels and
    all ``(r, s)``, on top of ``||x_k|| <= 2^{-(k+1)}``.
    """
    if m < 1 or k_max < m * m:
        raise ConstructionError("need m >= 1 and k_max >= m^2")
    if len(fam) < k_max:
        raise ConstructionError(f"family has {len(fam)} operators, need k_max = {k_max}")
    margin = 10 * tol.rank_tol if margin is None else margin
    pattern = fam.pattern()
    r_dim = pattern.shape[1]
    norms = np.max(np.abs(pattern), axis=1)
    top = level_of(k_max)

    x = np.zeros((top, k_max), dtype=complex)
    gammas, solve_res = {}, {}
    level_weights = []  # (mu, max over (r, s) of sum_j |gamma_j| ||A_j||)
    caps, margins = [], []
    for k in range(1, k_max + 1):
        mu = level_of(k)
        cap = norm_cap(k)
        for lv, weight in level_weights:
            cap = min(cap, math.sqrt(1.0 / (2.0 ** (k + 1) * lv * weight)))
        caps.append(cap)
        cands = [unit(top, 0)] if k == 1 else rank_one_directions(mu, top)
        accepted = None
        for t in range(max_retries + 1):
            scale = cap * 2.0 ** (-t)
            if scale < 1e-150:
                break
            best = None
            for z in cands:
                x[:, k - 1] = scale * z
                rank_one = [np.outer(x[:, i], np.conj(x[:, i])) for i in range(k)]
                sums = _partial_sums(pattern, x, k)
                marg = min(independence_margin(rank_one), independence_margin(sums))
                if best is None or marg > best[0] * _TIE:
                    best = (marg, z)
            if k == 1 or best[0] >= margin:
                accepted = (scale,) + best
                break
        if accepted is None:
            x[:, k - 1] = 0
            raise ScaleLimitError(f"independence unreachable at step {k} (level {mu})",
                                  partial={"vectors": x[:, : k - 1].copy(), "level": mu - 1, "gammas": gammas})
        scale, marg, z = accepted
        x[:, k - 1] = scale * z
        margins.append(marg)

        if k == mu * mu and mu <= m:
            sums = _partial_sums(pattern, x, k)
            cols = np.stack([s[:mu, :mu].ravel() for s in sums], axis=1)
            colnorm = np.linalg.norm(cols, axis=0)
            weight = 0.0
            for r in range(mu):
                for s in range(mu):
                    e = np.zeros((mu, mu), dtype=complex)
                    e[r, s] = 1.0
                    y = np.linalg.solve(cols / colnorm, e.ravel())
                    g = y / colnorm
                    gammas[(mu, r, s)] = g
                    approx = np.einsum("j,jkl->kl", g, np.stack(sums))[:mu, :mu]
                    solve_res[(mu, r, s)] = opnorm(approx - e)
                    weight = max(weight, float(np.sum(np.abs(g) * norms[:k])))
            level_weights.append((mu, weight))

    ops = [np.diag(pattern[j]) for j in range(k_max)]
    dil = dilation_isometry(ops, x, tol)
    bounds, prior = {}, {}
    sq = np.linalg.norm(x, axis=0) ** 2
    for (mu, r, s), g in gammas.items():
        e = np.zeros((top, top), dtype=complex)
        e[r, s] = 1.0
        approx = sum(gj * dil.compress(ops[j]) for j, gj in enumerate(g))
        bounds[(mu, r, s)] = opnorm(e - approx)
        prior[(mu, r, s)] = float(np.sum(np.abs(g) * norms[: len(g)]) * np.sum(sq[mu * mu:]))
    return CliqueCertificate(m, k_max, x, dil.isometry, list(fam.pivots[:r_dim]), gammas, bounds, prior,
                             solve_res, caps, margins, dil)
