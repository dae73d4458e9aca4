"""Quantum channels, their confusability systems, and Knill-Laflamme checks."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .matcore import DEFAULT_TOL, Tolerance, adjoint, as_matrix, opnorm
from .opsys import OperatorSystem, Projection, normalize
from .ramsey import SearchConfig, find_anticlique


class SubchannelWarning(UserWarning):
    """Kraus operators that are not trace preserving."""


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Kraus presentation ``T -> sum_i E_i T E_i^*`` with ``E_i`` of shape ``out x in``."""

    kraus: tuple
    tol: Tolerance = DEFAULT_TOL

    def __post_init__(self):
        ops = tuple(as_matrix(e) for e in self.kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shapes = {e.shape for e in ops}
        if len(shapes) != 1:
            raise ValueError(f"Kraus operators have mismatched shapes {sorted(shapes)}")
        object.__setattr__(self, "kraus", ops)
        if self.trace_defect() > self.tol.residual_tol:
            warnings.warn(f"Kraus operators are not trace preserving (defect {self.trace_defect():.2e})",
                          SubchannelWarning, stacklevel=2)

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    def trace_defect(self) -> float:
        total = sum(adjoint(e) @ e for e in self.kraus)
        return opnorm(total - np.eye(self.in_dim))

    def products(self) -> list:
        """``E_i^* E_j`` in row-major ``(i, j)`` order."""
        return [adjoint(a) @ b for a in self.kraus for b in self.kraus]


def confusability(ch: QuantumChannel, tol: Tolerance = DEFAULT_TOL) -> OperatorSystem:
    return normalize(ch.products(), ch.in_dim, tol, label="confusability")


@dataclass
class KLReport:
    """``lambdas[i, j] = tr(W^* E_i^* E_j W) / k`` and the worst deviation from it."""

    lambdas: np.ndarray
    max_residual: float
    passed: bool


def kl_verify(ch: QuantumChannel, p: Projection, tol: Tolerance = DEFAULT_TOL) -> KLReport:
    if p.ambient_dim != ch.in_dim:
        raise ValueError(f"projection acts on C^{p.ambient_dim}, channel input is C^{ch.in_dim}")
    w = p.columns
    k = p.rank
    n = len(ch.kraus)
    lam = np.zeros((n, n), dtype=complex)
    worst = 0.0
    for i, a in enumerate(ch.kraus):
        for j, b in enumerate(ch.kraus):
            c = adjoint(w) @ adjoint(a) @ b @ w
            lam[i, j] = np.trace(c) / k
            worst = max(worst, opnorm(c - lam[i, j] * np.eye(k)))
    return KLReport(lam, worst, worst <= tol.residual_tol)


def find_code(ch: QuantumChannel, k: int, cfg: SearchConfig = SearchConfig()):
    """A rank-``k`` code for ``ch`` via anticlique search, or ``None``.

    ``k = in_dim`` is decided directly: the whole space is a code only when
    the confusability system is scalar.
    """
    if k < 1 or k > ch.in_dim:
        return None
    if k == ch.in_dim:
        p = Projection(np.eye(k, dtype=complex), cfg.tol)
        report = kl_verify(ch, p, cfg.tol)
        return (p, report) if report.passed else None
    res = find_anticlique(confusability(ch, cfg.tol), k, cfg)
    if not res:
        return None
    report = kl_verify(ch, res.projection, cfg.tol)
    if not report.passed:
        return None
    return res.projection, report


# ---------------------------------------------------------------- standard channels

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel((np.eye(d, dtype=complex),))


def bit_flip(p: float) -> QuantumChannel:
    return QuantumChannel((np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * PAULI_X))


def depolarizing_pauli() -> QuantumChannel:
    """Equal-weight Pauli channel with Kraus ``{I, X, Y, Z} / 2``."""
    return QuantumChannel(tuple(m / 2 for m in (np.eye(2), PAULI_X, PAULI_Y, PAULI_Z)))


def single_site(op: np.ndarray, site: int, n: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for q in range(n):
        out = np.kron(out, op if q == site else np.eye(2))
    return out


def three_qubit_bit_flip(p: float) -> QuantumChannel:
    """At most one of three qubits flipped: ``sqrt(1-p) I`` and ``sqrt(p/3) X_q``."""
    kraus = [np.sqrt(1 - p) * np.eye(8, dtype=complex)]
    kraus += [np.sqrt(p / 3) * single_site(PAULI_X, q, 3) for q in range(3)]
    return QuantumChannel(tuple(kraus))


def basis_projection(d: int, indices) -> Projection:
    return Projection.coordinates(d, indices)
