"""Centralized crude solve and preconditioned Richardson iteration.

These dense implementations are the correctness oracle for the distributed
protocols: they apply exactly the same chain, only without a network.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import EPS_TARGET, ChainCertificate, InverseChain, power_ladder, richardson_steps
from .linalg import EIGEN_CAP, CapExceeded


class ChainCertificateError(ValueError):
    """The chain is not certified accurate enough for the Richardson iteration."""


def _as_rhs(C: InverseChain, b0) -> np.ndarray:
    b = np.asarray(b0, dtype=float)
    if b.shape[0] != C.n or b.ndim > 2:
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({C.n},) or ({C.n}, k)")
    return b


def parallel_rsolve(C: InverseChain, b0, powers: list[np.ndarray] | None = None) -> np.ndarray:
    """Crude solve ``x0 = Z0 b0`` by one forward and one backward sweep over the chain.

    ``b0`` may be a vector or a matrix of column right-hand sides.  ``powers``
    (the output of :func:`power_ladder`) can be passed to avoid recomputing
    the repeated squares.
    """
    b = _as_rhs(C, b0)
    if C.n > EIGEN_CAP:
        raise CapExceeded(f"n={C.n} exceeds dense cap {EIGEN_CAP}")
    D = C.base.D if b.ndim == 1 else C.base.D[:, None]
    if powers is None:
        powers = power_ladder(C.base, C.d)
    bs = [b]
    for i in range(1, C.d + 1):
        # A_{i-1} D^-1 = (A D^-1)^(2^(i-1)) = ((D^-1 A)^(2^(i-1)))^T
        bs.append(bs[-1] + powers[i - 1].T @ bs[-1])
    x = bs[C.d] / D
    for i in range(C.d - 1, -1, -1):
        x = 0.5 * (bs[i] / D + x + powers[i] @ x)
    return x


def materialize_operator(C: InverseChain, powers: list[np.ndarray] | None = None) -> np.ndarray:
    """Dense ``Z0`` obtained by solving against every unit basis vector."""
    return parallel_rsolve(C, np.eye(C.n), powers)


@dataclass(frozen=True)
class EsolveResult:
    x: np.ndarray
    q: int
    iterates: list = field(repr=False)


def certified_eps(C: InverseChain, certificate: ChainCertificate | None = None) -> float:
    """``eps_d`` backing the iteration: the analytic bound, else a matching certificate's measurement."""
    if C.certified_by_bound:
        return C.eps_d_bound
    if certificate is not None and certificate.d == C.d and certificate.below_target:
        return certificate.measured_eps
    raise ChainCertificateError(
        f"chain with d={C.d} has eps_d bound {C.eps_d_bound:.4g} >= {EPS_TARGET:.5f}; "
        "lengthen the chain or pass a certificate"
    )


def parallel_esolve(
    C: InverseChain,
    b0,
    eps: float,
    q: int | None = None,
    certificate: ChainCertificate | None = None,
    powers: list[np.ndarray] | None = None,
) -> EsolveResult:
    """Richardson iteration preconditioned by the crude solve.

    ``q=None`` picks the iteration count from the chain's contraction bound.
    All iterates ``y_1..y_q`` are returned alongside the final one.
    """
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    eps_d = certified_eps(C, certificate)
    steps = richardson_steps(eps, eps_d) if q is None else int(q)
    if steps < 1:
        raise ValueError(f"q must be a positive integer, got {q}")
    b = _as_rhs(C, b0)
    M = C.base.M
    if powers is None:
        powers = power_ladder(C.base, C.d)
    chi = parallel_rsolve(C, b, powers)
    y = np.zeros_like(b)
    iterates = []
    for _ in range(steps):
        y = y - parallel_rsolve(C, M @ y, powers) + chi
        iterates.append(y)
    return EsolveResult(y, steps, iterates)
