"""Dense complex linear algebra shared by the rest of the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Families of
vectors are passed as 2-D arrays whose *columns* are the vectors, or as a
sequence of 1-D arrays; :func:`as_columns` converts between the two.

Every rank or residual decision goes through a :class:`Tolerance`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds.

    ``rank_tol`` is a cutoff relative to the largest singular value of
    whatever matrix a rank decision is taken on. ``residual_tol`` is an
    absolute bound on operator-norm (or HS-norm) residuals.
    """

    rank_tol: float = 1e-9
    residual_tol: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.rank_tol < 1.0):
            raise ValueError(f"rank_tol must lie in (0, 1), got {self.rank_tol}")
        if not self.residual_tol > 0.0:
            raise ValueError(f"residual_tol must be positive, got {self.residual_tol}")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class SpectralCut:
    """Spectral data of a positive operator ``S`` above a threshold.

    ``projection`` is the spectral projection of ``S`` for eigenvalues in
    ``(threshold, ||S||]`` and ``inverse`` is the inverse of ``S`` on that
    range, zero elsewhere, so that ``inverse @ S == projection``.
    """

    threshold: float
    projection: np.ndarray
    inverse: np.ndarray


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def as_columns(vecs, dim: int | None = None) -> np.ndarray:
    """Stack vectors as the columns of a ``dim x n`` complex array."""
    if isinstance(vecs, np.ndarray) and vecs.ndim == 2:
        out = vecs.astype(complex)
    else:
        vecs = [np.asarray(v, dtype=complex).ravel() for v in vecs]
        if not vecs:
            if dim is None:
                raise ValueError("cannot infer dimension of an empty vector list")
            return np.zeros((dim, 0), dtype=complex)
        lengths = {v.shape[0] for v in vecs}
        if len(lengths) != 1:
            raise ValueError(f"vectors have mismatched lengths {sorted(lengths)}")
        out = np.stack(vecs, axis=1)
    if dim is not None and out.shape[0] != dim:
        raise ValueError(f"vectors have length {out.shape[0]}, expected {dim}")
    return out


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def unit(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def matrix_unit(d: int, i: int, j: int) -> np.ndarray:
    """The matrix unit ``e_i e_j^*`` on ``C^d`` (0-based indices)."""
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def opnorm(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt pairing ``trace(b^* a)``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(b, a))


def _stack(mats: Sequence[np.ndarray]) -> np.ndarray:
    if len(mats) == 0:
        raise ValueError("empty matrix list")
    arrs = [np.asarray(m, dtype=complex) for m in mats]
    shapes = {a.shape for a in arrs}
    if len(shapes) != 1:
        raise ValueError(f"shape mismatch among matrices: {sorted(shapes)}")
    return np.stack([a.ravel() for a in arrs], axis=0)


def normalized_gram_spectrum(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Eigenvalues (descending) of the HS Gram matrix of the unit-normalised family.

    Zero matrices contribute zero eigenvalues. The eigenvalues are obtained as
    squared singular values of the stacked family, which is the Gram spectrum
    without forming the Gram matrix explicitly.
    """
    rows = _stack(mats)
    norms = np.linalg.norm(rows, axis=1)
    scale = np.where(norms > 0, norms, 1.0)
    rows = rows / scale[:, None]
    s = np.linalg.svd(rows, compute_uv=False)
    lam = np.zeros(rows.shape[0])
    lam[: s.shape[0]] = s**2
    return lam


def span_rank(mats: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> int:
    """Dimension of the linear span of ``mats``.

    Gram eigenvalues below ``tol.rank_tol`` times the largest are treated as
    zero. Each matrix is scaled to unit HS norm first; this is an invertible
    recombination, so the rank is unchanged in exact arithmetic, and it stops
    tiny-but-independent members from being swamped by large ones.
    """
    lam = normalized_gram_spectrum(mats)
    if lam[0] <= 0.0:
        return 0
    return int(np.sum(lam > tol.rank_tol * lam[0]))


def independence_margin(mats: Sequence[np.ndarray]) -> float:
    """Smallest over largest eigenvalue of the normalised Gram matrix.

    The family has full rank under ``tol`` iff this exceeds ``tol.rank_tol``.
    """
    lam = normalized_gram_spectrum(mats)
    if lam[0] <= 0.0:
        return 0.0
    return float(lam[-1] / lam[0])


def orth(a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) for the column space of ``a``."""
    a = np.asarray(a, dtype=complex)
    if a.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    r = int(np.sum(s > tol.rank_tol * s[0]))
    return u[:, :r]


def null_space(a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) for the kernel of ``a``."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n, dtype=complex)
    r = int(np.sum(s > tol.rank_tol * s[0]))
    return np.conj(vh[r:]).T


def orthonormal_complement(vecs, within=None, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``range(within)`` intersected with ``span(vecs)^perp``.

    ``within`` is a column-orthonormal ``d x k`` array (a frame for a subspace)
    or ``None`` for the whole space. Returns a ``d x r`` array, possibly with
    ``r == 0``.
    """
    if within is None:
        if isinstance(vecs, np.ndarray) and vecs.ndim == 2:
            d = vecs.shape[0]
        else:
            vecs = list(vecs)
            if not vecs:
                raise ValueError("need `within` or at least one vector to fix the dimension")
            d = np.asarray(vecs[0]).size
        w = np.eye(d, dtype=complex)
    else:
        w = as_matrix(within)
        d = w.shape[0]
    x = as_columns(vecs, dim=d)
    if x.shape[1] == 0:
        return w.copy()
    # coordinates a with <W a, x_i> = 0 for every i
    coords = null_space(adjoint(x) @ w, tol)
    out = w @ coords
    # re-orthonormalise to wash out rounding from the product
    q, _ = np.linalg.qr(out)
    return q[:, : out.shape[1]]


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian positive semidefinite matrix."""
    a = as_matrix(a)
    h = (a + adjoint(a)) / 2
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ adjoint(v)


def polar_and_cut(t: np.ndarray, threshold: float, tol: Tolerance = DEFAULT_TOL):
    """Polar decomposition of ``t^*`` and a spectral cut of ``|t^*|``.

    For ``t`` of shape ``k x d`` returns ``(v, s, cut)`` with
    ``s = (t t^*)^{1/2}`` (``k x k``) and ``v`` (``k x d``) a partial isometry
    from ``ker(t)^perp`` onto ``range(t)``, so that ``t^* = v^* s``. ``cut``
    holds the spectral projection of ``s`` for ``(threshold, ||s||]`` and the
    inverse of ``s`` there. Eigenvalues equal to the threshold are excluded.
    """
    t = as_matrix(t)
    u, sing, wh = np.linalg.svd(t, full_matrices=False)
    if sing.size == 0 or sing[0] == 0.0:
        raise ValueError("cannot cut the zero operator")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    if threshold >= sing[0]:
        raise ValueError(f"threshold {threshold} is not below ||S|| = {sing[0]}: empty cut")
    r = int(np.sum(sing > tol.rank_tol * sing[0]))
    u, sing, wh = u[:, :r], sing[:r], wh[:r]
    s = (u * sing) @ adjoint(u)
    v = u @ wh
    keep = sing > threshold
    uk = u[:, keep]
    projection = uk @ adjoint(uk)
    inverse = (uk / sing[keep]) @ adjoint(uk)
    return v, s, SpectralCut(float(threshold), projection, inverse)


def intersection_coefficients(x, yc, tol: Tolerance = DEFAULT_TOL):
    """Coefficients ``c`` with ``x @ c`` a nonzero vector orthogonal to ``span(yc)``.

    ``x`` and ``yc`` are column arrays (or vector lists) in a common space. The
    components of the columns of ``x`` along ``span(yc)`` are computed and a
    linear dependency among them is found; when ``x`` has more independent
    columns than ``dim span(yc)`` such a dependency always exists. Returns
    ``None`` when no combination yields a nonzero vector.
    """
    x = as_columns(x)
    d, n = x.shape
    if n == 0:
        return None
    yc = as_columns(yc, dim=d)
    q = orth(yc, tol) if yc.shape[1] else np.zeros((d, 0), dtype=complex)
    z = adjoint(q) @ x
    kernel = null_space(z, tol) if q.shape[1] else np.eye(n, dtype=complex)
    if kernel.shape[1] == 0:
        return None
    scale = max(opnorm(x), 1e-300)
    best, best_norm = None, 0.0
    for c in kernel.T:
        nrm = float(np.linalg.norm(x @ c))
        if nrm > best_norm:
            best, best_norm = c, nrm
    if best is None or best_norm <= tol.rank_tol * scale:
        return None
    return best / best_norm


def intersection_nonzero(x_basis, y_complement_basis, tol: Tolerance = DEFAULT_TOL):
    """A unit vector in ``span(x_basis)`` orthogonal to ``span(y_complement_basis)``.

    If there are more ``x`` vectors than ``y`` vectors only the first
    ``len(y) + 1`` are used, which already forces a dependency among their
    projections onto ``span(y)``. Returns ``None`` if nothing is found.
    """
    x = as_columns(x_basis)
    yc = as_columns(y_complement_basis, dim=x.shape[0])
    if x.shape[1] > yc.shape[1]:
        first = x[:, : yc.shape[1] + 1]
        c = intersection_coefficients(first, yc, tol)
        if c is not None:
            return first @ c
    c = intersection_coefficients(x, yc, tol)
    if c is None:
        return None
    return x @ c


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_frame(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    q, _ = np.linalg.qr(z)
    return q


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + adjoint(z)) / 2
