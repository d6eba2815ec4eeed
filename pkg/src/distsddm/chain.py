"""Inverse approximated chains built from powers of ``D^-1 A``.

The chain keeps ``D_k = D_0`` and ``A_k = D_0 (D_0^-1 A_0)^(2^k)``, so the
intermediate approximation errors vanish and only the last level carries
an error ``eps_d``, controlled through the chain length ``d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    EIGEN_CAP,
    SPECTRAL_TOL,
    CapExceeded,
    Splitting,
    approx_alpha,
    condition_number,
    measured_alpha,
)

CBRT2 = 2.0 ** (1.0 / 3.0)
C_CONST = math.ceil(2.0 * math.log(CBRT2 / (CBRT2 - 1.0)))  # = 4
EPS_TARGET = math.log(2.0) / 3.0


def chain_length(kappa: float) -> int:
    """Smallest ``d >= 1`` with ``2^d >= c * kappa``, i.e. ``ceil(log2(c kappa))``."""
    if not kappa >= 1:
        raise ValueError(f"condition number must be >= 1, got {kappa}")
    target = C_CONST * kappa
    d = max(math.ceil(math.log2(target)), 1)
    # guard the float log2 against off-by-one at exact powers of two
    while d > 1 and 2.0 ** (d - 1) >= target:
        d -= 1
    while 2.0**d < target:
        d += 1
    return d


def gamma_bound(kappa: float, d: int) -> float:
    """``(1 - 1/kappa)^(2^d)``, the bound on the spectral radius of ``(D^-1 A)^(2^d)``."""
    if kappa <= 1:
        return 0.0
    return math.exp(2.0**d * math.log1p(-1.0 / kappa))


def eps_from_gamma(gamma: float) -> float:
    """``ln(1 / (1 - gamma))``."""
    if gamma >= 1:
        return math.inf
    return -math.log1p(-gamma)


def richardson_steps(eps: float, eps_d: float) -> int:
    """Iteration count ``ceil(ln(2/eps) / ln(1/rho))`` with contraction ``rho = 1 - e^-eps_d``."""
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    rho = -math.expm1(-eps_d)
    if rho <= 0:
        return 1
    if rho >= 1:
        raise ValueError(f"eps_d = {eps_d} gives no contraction")
    return max(1, math.ceil(math.log(2.0 / eps) / -math.log(rho)))


@dataclass(frozen=True)
class InverseChain:
    base: Splitting
    d: int
    kappa_used: float
    kappa_source: str
    gamma: float
    eps_d_bound: float

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def c(self) -> int:
        return C_CONST

    @property
    def certified_by_bound(self) -> bool:
        return self.eps_d_bound < EPS_TARGET

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "kappa": self.kappa_used,
            "kappa_source": self.kappa_source,
            "c": self.c,
            "gamma": self.gamma,
            "eps_d_bound": self.eps_d_bound,
            "eps_target": EPS_TARGET,
        }


def build_chain(S: Splitting, d: int, kappa: float | None = None, kappa_source: str | None = None) -> InverseChain:
    """Chain record for ``S`` with length ``d``; nothing dense is stored.

    ``kappa`` defaults to the eigensolve condition number of ``D - A``.
    """
    if d < 1:
        raise ValueError(f"chain length must be >= 1, got {d}")
    if kappa is None:
        kappa = condition_number(S.M)
        kappa_source = kappa_source or "eigen"
    if not np.any(S.A):
        gamma = 0.0  # D^-1 A is exactly zero
    else:
        gamma = gamma_bound(kappa, d)
    return InverseChain(S, int(d), float(kappa), kappa_source or "given", gamma, eps_from_gamma(gamma))


def auto_chain(S: Splitting, kappa: float | None = None, kappa_source: str | None = None) -> InverseChain:
    if kappa is None:
        kappa = condition_number(S.M)
        kappa_source = kappa_source or "eigen"
    return build_chain(S, chain_length(kappa), kappa, kappa_source)


def power_ladder(S: Splitting, d: int) -> list[np.ndarray]:
    """``[(D^-1 A)^(2^i) for i in 0..d]`` by repeated squaring (dense)."""
    if S.n > EIGEN_CAP:
        raise CapExceeded(f"n={S.n} exceeds dense cap {EIGEN_CAP}")
    P = S.DinvA()
    out = [P]
    for _ in range(d):
        P = P @ P
        out.append(P)
    return out


def chain_matrices(C: InverseChain) -> list[np.ndarray]:
    """Dense ``A_0..A_d`` of the chain."""
    D = C.base.D
    return [D[:, None] * P for P in power_ladder(C.base, C.d)]


@dataclass(frozen=True)
class ChainCertificate:
    d: int
    identity_error: float
    identity_ok: bool
    diagonal_ok: bool
    measured_eps: float
    eps_bound: float
    last_level_ok: bool
    below_target: bool
    tol: float

    @property
    def ok(self) -> bool:
        return self.identity_ok and self.diagonal_ok and self.last_level_ok

    @property
    def failing_clause(self) -> int | None:
        for idx, good in enumerate((self.identity_ok, self.diagonal_ok, self.last_level_ok), start=1):
            if not good:
                return idx
        return None

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "identity_error": self.identity_error,
            "identity_ok": self.identity_ok,
            "diagonal_ok": self.diagonal_ok,
            "measured_eps": self.measured_eps,
            "eps_bound": self.eps_bound,
            "last_level_ok": self.last_level_ok,
            "below_target": self.below_target,
            "failing_clause": self.failing_clause,
        }


def verify_chain(C: InverseChain, tol: float = 1e-12) -> ChainCertificate:
    """Materialise the chain and check its three defining clauses.

    Clause 1: ``D - A_i`` equals ``D - A_{i-1} D^-1 A_{i-1}``; the entrywise
    error is measured relative to ``max(D)``.  Clause 2: every ``D_i`` is
    ``D_0`` (true by construction).  Clause 3: ``D ≈_eps D - A_d`` with the
    measured ``eps`` no larger than the analytic bound.
    """
    D = C.base.D
    As = chain_matrices(C)
    err = 0.0
    for i in range(1, C.d + 1):
        prev = As[i - 1]
        err = max(err, float(np.abs(As[i] - prev @ (prev / D[:, None])).max(initial=0.0)))
    err /= float(D.max(initial=1.0))
    Ad = (As[-1] + As[-1].T) / 2
    Dm = np.diag(D)
    eps = measured_alpha(Dm, Dm - Ad)
    last_ok = eps <= C.eps_d_bound + SPECTRAL_TOL and approx_alpha(Dm, Dm - Ad, eps)
    return ChainCertificate(
        d=C.d,
        identity_error=err,
        identity_ok=err <= tol,
        diagonal_ok=True,
        measured_eps=eps,
        eps_bound=C.eps_d_bound,
        last_level_ok=bool(last_ok),
        below_target=eps < EPS_TARGET,
        tol=tol,
    )


def measured_eps_d(S: Splitting, d: int) -> float:
    """``ln(1/(1 - rho^(2^d)))`` with ``rho`` the spectral radius of ``D^-1 A``."""
    s = 1.0 / np.sqrt(S.D)
    lam = np.linalg.eigvalsh(s[:, None] * S.A * s[None, :])
    rho = float(np.abs(lam).max(initial=0.0))
    if rho == 0:
        return 0.0
    return eps_from_gamma(math.exp(2.0**d * math.log(rho)))


def minimal_certified_length(S: Splitting, target: float = EPS_TARGET) -> int:
    """Smallest ``d >= 1`` whose measured last-level error is below ``target``."""
    d = 1
    while measured_eps_d(S, d) >= target:
        d += 1
        if d > 64:
            raise ValueError("no chain length below 64 reaches the target")
    return d
