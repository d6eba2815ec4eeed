"""Dense matrix primitives for SDDM systems.

Matrices are plain ``numpy`` arrays: a symmetric matrix is a square 2-D
array, a diagonal matrix is stored as the 1-D array of its diagonal.  All
spectral checks go through a dense eigensolve and are therefore limited to
``n <= EIGEN_CAP``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

EIGEN_CAP = 200
SPECTRAL_TOL = 1e-9
IDENTITY_TOL = 1e-10


class StructuralError(ValueError):
    """Input is not a finite, square, exactly symmetric matrix."""


class SDDMError(ValueError):
    """Matrix fails one or more SDDM rules."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class PSDViolation(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


class CapExceeded(ValueError):
    pass


class SingularMatrixError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last_estimate: float):
        super().__init__(f"{message} (last estimate {last_estimate!r})")
        self.last_estimate = last_estimate


class DisconnectedGraphError(ValueError):
    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        super().__init__(
            f"graph is disconnected: {len(self.components)} components {self.components}"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on nodes ``0..n-1`` with positive edge weights.

    ``edges`` is normalised to a sorted tuple of ``(i, j, w)`` with ``i < j``.
    Connectivity is not enforced here; call :meth:`require_connected` at
    ingestion points that need it.
    """

    n: int
    edges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.n < 0:
            raise StructuralError(f"node count must be non-negative, got {self.n}")
        norm = []
        seen = set()
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise StructuralError(f"self-loop at node {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < self.n):
                raise StructuralError(f"edge ({i}, {j}) out of range for n={self.n}")
            if not (np.isfinite(w) and w > 0):
                raise StructuralError(f"edge ({i}, {j}) has non-positive weight {w}")
            if (i, j) in seen:
                raise StructuralError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            norm.append((i, j, w))
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def from_matrix(cls, M: np.ndarray) -> "WeightedGraph":
        """Graph whose edge weights are the negated off-diagonals of ``M``."""
        M = np.asarray(M, dtype=float)
        iu, ju = np.nonzero(np.triu(M, 1))
        return cls(M.shape[0], tuple((int(i), int(j), -float(M[i, j])) for i, j in zip(iu, ju)))

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            W[i, j] = W[j, i] = w
        return W

    def neighbors(self) -> list[list[int]]:
        nbrs = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [sorted(v) for v in nbrs]

    def components(self) -> list[list[int]]:
        if self.n == 0:
            return []
        _, labels = connected_components(csr_matrix(self.adjacency() != 0), directed=False)
        comps: dict[int, list[int]] = {}
        for node, lab in enumerate(labels):
            comps.setdefault(int(lab), []).append(node)
        return [comps[k] for k in sorted(comps)]

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def require_connected(self) -> None:
        comps = self.components()
        if len(comps) > 1:
            raise DisconnectedGraphError(comps)

    @property
    def max_degree(self) -> int:
        return max((len(v) for v in self.neighbors()), default=0)

    @property
    def weight_ratio(self) -> float:
        if not self.edges:
            return 1.0
        ws = [w for _, _, w in self.edges]
        return max(ws) / min(ws)


@dataclass(frozen=True)
class Violation:
    row: int | None
    rule: str
    detail: str = ""

    def __str__(self):
        where = "matrix" if self.row is None else f"row {self.row}"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class Splitting:
    """Standard splitting ``M = D - A``: ``D`` positive diagonal, ``A`` non-negative."""

    D: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "D", _frozen(self.D))
        object.__setattr__(self, "A", _frozen(self.A))
        n = self.D.shape[0]
        if self.A.shape != (n, n):
            raise StructuralError(f"A has shape {self.A.shape}, expected {(n, n)}")
        if np.any(self.D <= 0):
            raise SDDMError([Violation(int(np.argmin(self.D)), "diagonal must be positive")])
        if np.any(self.A < 0) or np.any(np.diag(self.A) != 0) or not np.array_equal(self.A, self.A.T):
            raise SDDMError([Violation(None, "A must be symmetric, non-negative, zero-diagonal")])

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.D) - self.A

    def DinvA(self) -> np.ndarray:
        return self.A / self.D[:, None]

    def ADinv(self) -> np.ndarray:
        return self.A / self.D[None, :]


# ---------------------------------------------------------------------------
# validation and construction


def as_symmetric(M) -> np.ndarray:
    """Return ``M`` as a float array, raising StructuralError unless square, finite and symmetric."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise StructuralError(f"matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise StructuralError("matrix has non-finite entries")
    if not np.array_equal(M, M.T):
        i, j = np.argwhere(M != M.T)[0]
        raise StructuralError(f"matrix is not symmetric at ({i}, {j})")
    return M


def validate_sddm(M, eigen_cap: int = EIGEN_CAP) -> ValidationResult:
    """Check the SDDM rules row by row.

    Off-diagonals must be non-positive and every row diagonally dominant.
    Positive definiteness is checked by eigensolve when ``n <= eigen_cap``;
    above the cap each connected block must contain a strictly dominant row,
    which together with dominance implies definiteness.
    """
    M = as_symmetric(M)
    n = M.shape[0]
    out: list[Violation] = []
    off = M - np.diag(np.diag(M))
    for i in range(n):
        pos = np.nonzero(off[i] > 0)[0]
        if pos.size:
            out.append(Violation(i, "off-diagonal sign", f"M[{i},{int(pos[0])}] = {off[i, pos[0]]:g} > 0"))
    slack = np.diag(M) + off.sum(axis=1)
    scale = np.maximum(np.abs(np.diag(M)), 1.0)
    for i in np.nonzero(slack < -1e-12 * scale)[0]:
        out.append(Violation(int(i), "dominance", f"M[{i},{i}] = {M[i, i]:g} < {-off[i].sum():g}"))
    if out or n == 0:
        return ValidationResult(tuple(out))
    if n <= eigen_cap:
        lam = np.linalg.eigvalsh(M)
        if not lam[0] > SPECTRAL_TOL * max(abs(lam[-1]), 1e-300):
            out.append(Violation(None, "positive definiteness", f"smallest eigenvalue {lam[0]:.3e}"))
    else:
        g = WeightedGraph.from_matrix(np.minimum(M, 0))
        for comp in g.components():
            if not np.any(slack[comp] > 1e-12 * scale[comp]):
                out.append(Violation(comp[0], "positive definiteness", "block without strictly dominant row"))
    return ValidationResult(tuple(out))


def standard_splitting(M) -> Splitting:
    res = validate_sddm(M)
    if not res.ok:
        raise SDDMError(res.violations)
    M = np.asarray(M, dtype=float)
    A = -M.copy()
    np.fill_diagonal(A, 0.0)
    A[A == 0] = 0.0  # normalise -0.0
    return Splitting(np.diag(M).copy(), A)


def laplacian_from_graph(G: WeightedGraph) -> np.ndarray:
    G.require_connected()
    W = G.adjacency()
    return np.diag(W.sum(axis=1)) - W


def ground_submatrix(L, node: int) -> tuple[np.ndarray, list[int]]:
    """Delete row/column ``node``; returns the SDDM block and the kept node ids."""
    L = np.asarray(L, dtype=float)
    keep = [i for i in range(L.shape[0]) if i != node]
    return L[np.ix_(keep, keep)], keep


def ground_shift(L, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"shift must be positive, got {sigma}")
    L = np.asarray(L, dtype=float)
    return L + sigma * np.eye(L.shape[0])


# ---------------------------------------------------------------------------
# norms and the Loewner order


def m_norm(M, u) -> float:
    M = np.asarray(M, dtype=float)
    u = np.asarray(u, dtype=float)
    q = float(u @ M @ u)
    if q < 0:
        scale = max(float(np.abs(M).max(initial=0.0)) * float(u @ u), 1.0)
        if q < -SPECTRAL_TOL * scale:
            raise PSDViolation(f"negative quadratic form {q:.3e}")
        q = 0.0
    return float(np.sqrt(q))


def is_eps_approx(x_tilde, x_star, M, eps: float) -> bool:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    err = m_norm(M, np.asarray(x_star, float) - np.asarray(x_tilde, float))
    return err <= eps * m_norm(M, x_star)


def relative_m_error(x_tilde, x_star, M) -> float:
    denom = m_norm(M, x_star)
    err = m_norm(M, np.asarray(x_star, float) - np.asarray(x_tilde, float))
    if denom == 0:
        return 0.0 if err == 0 else float("inf")
    return err / denom


def _check_pair(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise StructuralError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return X, Y


def loewner_leq(X, Y, tol: float = SPECTRAL_TOL) -> bool:
    """``X ⪯ Y``: smallest eigenvalue of ``Y - X`` is at least ``-tol``."""
    X, Y = _check_pair(X, Y)
    if X.shape[0] == 0:
        return True
    diff = Y - X
    return bool(np.linalg.eigvalsh((diff + diff.T) / 2)[0] >= -tol)


def approx_alpha(X, Y, alpha: float, tol: float = SPECTRAL_TOL) -> bool:
    """``X ≈_alpha Y``, i.e. ``e^-alpha X ⪯ Y ⪯ e^alpha X``."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    X, Y = _check_pair(X, Y)
    return loewner_leq(np.exp(-alpha) * X, Y, tol) and loewner_leq(Y, np.exp(alpha) * X, tol)


def measured_alpha(X, Y) -> float:
    """Smallest alpha with ``X ≈_alpha Y`` for positive definite ``X`` and ``Y``."""
    X, Y = _check_pair(X, Y)
    X = (X + X.T) / 2
    Y = (Y + Y.T) / 2
    lam = scipy.linalg.eigh(Y, X, eigvals_only=True)
    if lam[0] <= 0:
        return float("inf")
    return float(max(np.log(lam[-1]), -np.log(lam[0]), 0.0))


# ---------------------------------------------------------------------------
# spectra


def spectral_radius(
    M, tol: float = 1e-10, max_iter: int = 20_000, eigen_cap: int = EIGEN_CAP, seed: int = 0
) -> float:
    """Largest eigenvalue magnitude.

    Power iteration runs on ``M @ M`` so that a ``±rho`` pair does not stall
    it; if it fails to settle, small matrices fall back to a full eigensolve.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise StructuralError(f"matrix must be square, got shape {M.shape}")
    n = M.shape[0]
    if n == 0 or not np.any(M):
        return 0.0
    M2 = M @ M
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    mu = 0.0
    for _ in range(max_iter):
        y = M2 @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            # M2 x = 0 for a generic x: M is nilpotent of index <= 2 on its range
            if not np.any(M2):
                return 0.0
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            continue
        x_new = y / ny
        mu = float(x_new @ (M2 @ x_new))
        if mu > 0 and np.linalg.norm(M2 @ x_new - mu * x_new) <= 1e-2 * tol * mu:
            return float(np.sqrt(mu))
        x = x_new
    if n <= eigen_cap:
        return float(np.abs(np.linalg.eigvals(M)).max())
    raise ConvergenceError("power iteration did not converge", float(np.sqrt(max(mu, 0.0))))


def condition_number(M, eigen_cap: int = EIGEN_CAP) -> float:
    """``|lambda_max / lambda_min|``, with zero eigenvalues skipped (Laplacian convention)."""
    M = as_symmetric(M)
    n = M.shape[0]
    if n > eigen_cap:
        raise CapExceeded(f"n={n} exceeds eigensolve cap {eigen_cap}; use condition_bound")
    if n == 0:
        return 1.0
    mags = np.abs(np.linalg.eigvalsh(M))
    top = mags.max()
    if top == 0:
        raise SingularMatrixError("zero matrix has no condition number")
    nonzero = mags[mags > SPECTRAL_TOL * top]
    return float(top / nonzero.min())


def condition_bound(G: WeightedGraph, submatrix: bool = False) -> float:
    return float(G.n ** (4 if submatrix else 3) * G.weight_ratio)


# ---------------------------------------------------------------------------
# splitting identities


def reduce_step(S: Splitting) -> np.ndarray:
    """``D - A D^-1 A``, which is again SDDM."""
    R = np.diag(S.D) - S.ADinv() @ S.A
    R = (R + R.T) / 2
    res = validate_sddm(R)
    if not res.ok:
        raise InvariantViolation(f"reduced matrix is not SDDM: {res.violations}")
    return R


def check_inverse_identity(S: Splitting, tol: float = IDENTITY_TOL) -> bool:
    """Compare ``(D-A)^-1`` with its two-level expansion through ``D - A D^-1 A``."""
    n = S.n
    if n > EIGEN_CAP:
        raise CapExceeded(f"n={n} exceeds dense cap {EIGEN_CAP}")
    I = np.eye(n)
    try:
        lhs = np.linalg.inv(S.M)
        inner = np.linalg.inv(np.diag(S.D) - S.ADinv() @ S.A)
    except np.linalg.LinAlgError as exc:
        raise InvariantViolation(f"singular intermediate: {exc}") from exc
    rhs = 0.5 * (np.diag(1.0 / S.D) + (I + S.DinvA()) @ inner @ (I + S.ADinv()))
    scale = max(float(np.abs(lhs).max(initial=0.0)), 1e-300)
    return bool(np.abs(lhs - rhs).max(initial=0.0) <= tol * scale)


def direct_solve(M, b: Sequence[float], eigen_cap: int = EIGEN_CAP) -> np.ndarray:
    """Cholesky solve used as the ground-truth oracle."""
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    n = M.shape[0]
    if n > eigen_cap:
        raise CapExceeded(f"n={n} exceeds dense cap {eigen_cap}")
    if b.shape != (n,):
        raise StructuralError(f"right-hand side has shape {b.shape}, expected {(n,)}")
    try:
        factor = scipy.linalg.cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"matrix is not positive definite: {exc}") from exc
    x = scipy.linalg.cho_solve(factor, b)
    if np.linalg.norm(M @ x - b) > 1e-10 * max(np.linalg.norm(b), 1e-300):
        raise SingularMatrixError("residual above 1e-10 relative; matrix numerically singular")
    return x
