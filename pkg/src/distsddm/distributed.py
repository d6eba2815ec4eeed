"""Node-local crude solve and Richardson protocols on the round simulator.

Two families are provided:

* full communication (``distr_rsolve`` / ``distr_esolve``): every node builds
  its rows of ``(A D^-1)^(2^i)`` and ``(D^-1 A)^(2^i)`` by doubling, then runs
  the forward/backward sweeps with one round per level;
* R-hop communication (``rdist_rsolve`` / ``edist_rsolve``): nodes only build
  rows of ``(A D^-1)^R`` and ``(D^-1 A)^R`` (``comp0``/``comp1``) and reach
  longer powers by applying those blocks repeatedly, never talking to nodes
  more than ``R`` hops away.

Every node sees only its own row of ``M``, what it received, and the global
schedule parameters ``(d, R, q)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .chain import InverseChain, richardson_steps
from .linalg import Splitting
from .reference import certified_eps
from .simnet import CostLedger, NodeContext, SparseRow, Topology, exchange, run_protocol


class ParameterError(ValueError):
    """Mode or parameter incompatibility (e.g. ``R`` too large for ``d``)."""


# ---------------------------------------------------------------------------
# node state


@dataclass
class NodeState:
    k: int
    D_k: float
    row_M: SparseRow
    diag_cache: dict = field(default_factory=dict)
    power_rows_AD: list = field(default_factory=list)  # row k of (A D^-1)^(2^i), i = 0..d-1
    power_rows_DA: list = field(default_factory=list)  # row k of (D^-1 A)^(2^i), i = 0..d-1
    c0_row: SparseRow | None = None
    c1_row: SparseRow | None = None
    b_components: list = field(default_factory=list)  # [b_0]_k .. [b_d]_k of the last crude solve
    x_components: list = field(default_factory=list)  # [x_d]_k .. [x_0]_k of the last crude solve
    y_history: list = field(default_factory=list)  # [y_t]_k, t = 1..q

    @property
    def neighbours(self) -> np.ndarray:
        return self.row_M.idx[self.row_M.idx != self.k]

    def offdiag(self) -> SparseRow:
        """Row ``k`` of ``A`` (non-negative)."""
        keep = self.row_M.idx != self.k
        return SparseRow(self.row_M.idx[keep], -self.row_M.val[keep])


@dataclass(frozen=True)
class DistributedResult:
    x: np.ndarray
    ledger: CostLedger
    mode: str
    R: int
    d: int
    q: int | None = None
    iterates: list = field(default_factory=list, repr=False)
    states: list = field(default_factory=list, repr=False)
    warnings: tuple = ()


# ---------------------------------------------------------------------------
# helpers


def normalize_R(R: int) -> tuple[int, str | None]:
    """Round ``R`` down to a power of two; return the warning text if changed."""
    if R < 1:
        raise ParameterError(f"R must be a positive integer, got {R}")
    p = 1 << (int(R).bit_length() - 1)
    if p != R:
        return p, f"R={R} is not a power of two; using R={p}"
    return p, None


def _check_inputs(T: Topology, S: Splitting, b0) -> np.ndarray:
    if T.n != S.n:
        raise ParameterError(f"topology has {T.n} nodes but the system has {S.n} unknowns")
    outside = (S.A != 0) & (T.hops != 1)
    if outside.any():
        i, j = np.argwhere(outside)[0]
        raise ParameterError(f"A[{i},{j}] is nonzero but ({i},{j}) is not an edge of the topology")
    b = np.asarray(b0, dtype=float)
    if b.shape != (S.n,):
        raise ParameterError(f"b0 has shape {b.shape}, expected ({S.n},)")
    return b


def _initial_state(k: int, S: Splitting) -> NodeState:
    row = S.A[k]
    idx = np.nonzero(row)[0]
    idx_all = np.sort(np.append(idx, k))
    vals = np.where(idx_all == k, S.D[k], -row[idx_all])
    return NodeState(k=k, D_k=float(S.D[k]), row_M=SparseRow(idx_all, vals))


def _row_dot(row: SparseRow, values: dict, own: tuple[int, float]) -> float:
    """``sum_j row[j] * values[j]``; ``own`` supplies this node's entry."""
    k, mine = own
    total = 0.0
    for j, w in zip(row.idx_list, row.val_list):
        total += w * (mine if j == k else values[j]["v"])
    return total


class _Node:
    """Shared per-node machinery: neighbourhood caches and the level sweeps."""

    def __init__(self, ctx: NodeContext, state: NodeState, radius: int):
        self.ctx = ctx
        self.radius = radius
        self.st = state
        self.k = ctx.k
        self._peers: dict[int, np.ndarray] = {}
        self.Dvec = np.zeros(ctx.topology.n)

    def peers(self, r: int) -> np.ndarray:
        r = min(r, self.radius)
        p = self._peers.get(r)
        if p is None:
            p = self._peers[r] = self.ctx.peers(r)
        return p

    def prologue(self):
        """One round: broadcast ``D_kk`` to the whole communication ball."""
        inbox = yield from exchange(self.peers(self.radius), {"D": self.st.D_k})
        cache = {self.k: self.st.D_k}
        cache.update({j: float(p["D"]) for j, p in inbox.items()})
        self.st.diag_cache = dict(sorted(cache.items()))
        for j, v in cache.items():
            self.Dvec[j] = v

    def one_hop_rows(self) -> tuple[SparseRow, SparseRow]:
        """Rows ``k`` of ``A D^-1`` and ``D^-1 A``."""
        a = self.st.offdiag()
        return (
            SparseRow(a.idx, a.val / self.Dvec[a.idx]),
            SparseRow(a.idx, a.val / self.st.D_k),
        )

    def apply(self, row: SparseRow, value: float, radius: int):
        """One round: share ``value`` within ``radius`` hops, return ``row . v``."""
        inbox = yield from exchange(self.peers(radius), {"v": value})
        self.ctx.charge(row.nnz)
        return _row_dot(row, inbox, (self.k, value))

    def richardson(self, b0_k: float, q: int, crude):
        """Preconditioned Richardson loop around the generator ``crude(rhs)``."""
        chi = yield from crude(b0_k)
        y = 0.0
        row = self.st.row_M
        for _ in range(q):
            u = yield from self.apply(row, y, 1)
            z = yield from crude(u)
            y = y - z + chi
            self.ctx.charge(2)
            self.st.y_history.append(y)
        return y


# ---------------------------------------------------------------------------
# full communication


def _doubling(node: _Node, rows_ad: SparseRow, rows_da: SparseRow, level: int):
    """One round: from level ``2^(level-1)`` rows to level ``2^level`` rows.

    ``[(A D^-1)^(2m)]_kj = sum_r (D_r / D_j) P_kr P_jr`` and
    ``[(D^-1 A)^(2m)]_kj = sum_r (D_j / D_r) Q_kr Q_jr``.
    """
    radius = 1 << level
    inbox = yield from exchange(node.peers(radius), {"P": rows_ad, "Q": rows_da})
    inbox = dict(inbox)
    inbox[node.k] = {"P": rows_ad, "Q": rows_da}
    n = node.ctx.topology.n
    Dvec = node.Dvec
    wP = rows_ad.dense(n) * Dvec
    known = Dvec > 0
    wQ = np.zeros(n)
    wQ[known] = rows_da.dense(n)[known] / Dvec[known]
    newP = np.zeros(n)
    newQ = np.zeros(n)
    ops = 0
    for j in sorted(inbox):
        Pj, Qj = inbox[j]["P"], inbox[j]["Q"]
        if Pj.nnz:
            newP[j] = (wP[Pj.idx] @ Pj.val) / Dvec[j]
        if Qj.nnz:
            newQ[j] = (wQ[Qj.idx] @ Qj.val) * Dvec[j]
        ops += Pj.nnz + Qj.nnz
    node.ctx.charge(ops)
    return SparseRow.from_dense(newP), SparseRow.from_dense(newQ)


def _full_program(S: Splitting, d: int, b0: np.ndarray, q: int | None):
    def program(ctx: NodeContext):
        st = _initial_state(ctx.k, S)
        node = _Node(ctx, st, ctx.topology.R)
        yield from node.prologue()
        ad, da = node.one_hop_rows()
        st.power_rows_AD, st.power_rows_DA = [ad], [da]
        for level in range(1, d):
            ad, da = yield from _doubling(node, ad, da, level)
            st.power_rows_AD.append(ad)
            st.power_rows_DA.append(da)

        def crude(b_k: float):
            bs = [b_k]
            for i in range(1, d + 1):
                v = yield from node.apply(st.power_rows_AD[i - 1], bs[-1], 1 << (i - 1))
                bs.append(bs[-1] + v)
                ctx.charge(1)
            xs = [bs[d] / st.D_k]
            for i in range(d - 1, -1, -1):
                v = yield from node.apply(st.power_rows_DA[i], xs[-1], 1 << i)
                xs.append(0.5 * (bs[i] / st.D_k + xs[-1] + v))
                ctx.charge(3)
            st.b_components, st.x_components = bs, xs
            return xs[-1]

        if q is None:
            x = yield from crude(float(b0[ctx.k]))
        else:
            x = yield from node.richardson(float(b0[ctx.k]), q, crude)
        return x, st

    return program


def _require_full(T: Topology) -> None:
    if not T.full_communication:
        raise ParameterError(
            f"full-communication mode needs R >= diam(G) = {T.diameter}, topology has R={T.R}"
        )


def _collect(results, q: int | None) -> tuple:
    xs = np.array([r[0] for r in results], dtype=float)
    states = [r[1] for r in results]
    iterates = []
    if q:
        iterates = [np.array([s.y_history[t] for s in states]) for t in range(q)]
    return xs, states, iterates


def distr_rsolve(T: Topology, C: InverseChain, b0, trace=None) -> DistributedResult:
    """Crude solve ``x0 = Z0 b0`` with full communication."""
    _require_full(T)
    b = _check_inputs(T, C.base, b0)
    results, ledger = run_protocol(T, _full_program(C.base, C.d, b, None), trace=trace)
    x, states, _ = _collect(results, None)
    return DistributedResult(x, ledger, "full", T.R, C.d, None, [], states)


def distr_esolve(
    T: Topology, C: InverseChain, b0, eps: float, q: int | None = None, certificate=None, trace=None
) -> DistributedResult:
    """Richardson iteration with the full-communication crude solve as preconditioner."""
    _require_full(T)
    b = _check_inputs(T, C.base, b0)
    q = _steps(C, eps, q, certificate)
    results, ledger = run_protocol(T, _full_program(C.base, C.d, b, q), trace=trace)
    x, states, iterates = _collect(results, q)
    return DistributedResult(x, ledger, "full", T.R, C.d, q, iterates, states)


def _steps(C: InverseChain, eps: float, q: int | None, certificate) -> int:
    if not 0 < eps <= 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2], got {eps}")
    eps_d = certified_eps(C, certificate)
    if q is None:
        return richardson_steps(eps, eps_d)
    if q < 1:
        raise ParameterError(f"q must be a positive integer, got {q}")
    return int(q)


# ---------------------------------------------------------------------------
# R-hop communication


def _comp_local(k: int, R: int, balls: list, rows: dict, Dvec: np.ndarray, kind: int) -> tuple[SparseRow, int]:
    """Row ``k`` of ``(A D^-1)^R`` (``kind=0``) or ``(D^-1 A)^R`` (``kind=1``).

    ``rows[j]`` is row ``j`` of ``A D^-1`` (kind 0) or ``D^-1 A`` (kind 1) for
    every ``j`` within ``R`` hops; ``balls[l]`` is ``N_l(k)``.  Uses the
    one-step recurrence ``[X^(l+1)]_kj = sum_{r in N_1(j)} ratio(j, r) [X^l]_kr X_jr``
    with ratio ``D_r/D_j`` (kind 0) or ``D_j/D_r`` (kind 1).  Returns the row
    and the multiply-add count.
    """
    n = Dvec.size
    cur = rows[k].dense(n)
    ops = 0
    for l in range(1, R):
        if kind == 0:
            w = cur * Dvec
        else:
            w = np.zeros(n)
            nz = cur != 0
            w[nz] = cur[nz] / Dvec[nz]
        nxt = np.zeros(n)
        for j in balls[l + 1].tolist():
            rj = rows[j]
            if rj.nnz:
                s = w[rj.idx] @ rj.val
                nxt[j] = s / Dvec[j] if kind == 0 else s * Dvec[j]
            ops += rj.nnz
        cur = nxt
    return SparseRow.from_dense(cur), ops


def _local_rows(S: Splitting, T: Topology, k: int, R: int, kind: int) -> tuple[list, dict, np.ndarray]:
    """What node ``k`` knows after the prologue and the row exchange."""
    ball = T.ball(k, R)
    Dvec = np.zeros(S.n)
    Dvec[ball] = S.D[ball]
    X = S.ADinv() if kind == 0 else S.DinvA()
    rows = {int(j): SparseRow.from_dense(X[j]) for j in ball}
    balls = [T.ball(k, r) for r in range(R + 1)]
    return balls, rows, Dvec


def comp0(k: int, T: Topology, S: Splitting, R: int | None = None) -> SparseRow:
    """Row ``k`` of ``(A D^-1)^R`` from ``R``-hop information only."""
    R = T.R if R is None else R
    if R > T.R:
        raise ParameterError(f"R={R} exceeds the topology radius {T.R}")
    return _comp_local(k, R, *_local_rows(S, T, k, R, 0), kind=0)[0]


def comp1(k: int, T: Topology, S: Splitting, R: int | None = None) -> SparseRow:
    """Row ``k`` of ``(D^-1 A)^R`` from ``R``-hop information only."""
    R = T.R if R is None else R
    if R > T.R:
        raise ParameterError(f"R={R} exceeds the topology radius {T.R}")
    return _comp_local(k, R, *_local_rows(S, T, k, R, 1), kind=1)[0]


def _rhop_program(S: Splitting, d: int, R: int, b0: np.ndarray, q: int | None):
    def program(ctx: NodeContext):
        st = _initial_state(ctx.k, S)
        node = _Node(ctx, st, R)
        k = ctx.k
        yield from node.prologue()
        ad, da = node.one_hop_rows()
        st.power_rows_AD, st.power_rows_DA = [ad], [da]
        inbox = yield from exchange(node.peers(R), {"AD": ad, "DA": da})
        rows_ad = {j: p["AD"] for j, p in inbox.items()}
        rows_da = {j: p["DA"] for j, p in inbox.items()}
        rows_ad[k], rows_da[k] = ad, da
        balls = [ctx.ball(r) for r in range(R + 1)]
        st.c0_row, ops0 = _comp_local(k, R, balls, rows_ad, node.Dvec, 0)
        st.c1_row, ops1 = _comp_local(k, R, balls, rows_da, node.Dvec, 1)
        ctx.charge(ops0 + ops1)

        def power(v: float, m: int, one_hop: SparseRow, block: SparseRow):
            """``[X^m v]_k`` by 1-hop repeats below ``R``, ``R``-hop blocks above."""
            if m < R:
                for _ in range(m):
                    v = yield from node.apply(one_hop, v, 1)
            else:
                for _ in range(m // R):
                    v = yield from node.apply(block, v, R)
            return v

        def crude(b_k: float):
            bs = [b_k]
            for i in range(1, d + 1):
                v = yield from power(bs[-1], 1 << (i - 1), ad, st.c0_row)
                bs.append(bs[-1] + v)
                ctx.charge(1)
            xs = [bs[d] / st.D_k]
            for i in range(d - 1, -1, -1):
                v = yield from power(xs[-1], 1 << i, da, st.c1_row)
                xs.append(0.5 * (bs[i] / st.D_k + xs[-1] + v))
                ctx.charge(3)
            st.b_components, st.x_components = bs, xs
            return xs[-1]

        if q is None:
            x = yield from crude(float(b0[k]))
        else:
            x = yield from node.richardson(float(b0[k]), q, crude)
        return x, st

    return program


def _rhop_R(T: Topology, d: int, R: int | None) -> tuple[int, tuple]:
    R = T.R if R is None else int(R)
    R, warn = normalize_R(R)
    notes = ()
    if warn:
        warnings.warn(warn, stacklevel=3)
        notes = (warn,)
    if R > T.R:
        raise ParameterError(f"R={R} exceeds the topology radius {T.R}")
    if R > 1 << (d - 1):
        raise ParameterError(
            f"R={R} exceeds 2^(d-1) = {1 << (d - 1)}; use the full-communication mode instead"
        )
    return R, notes


def rdist_rsolve(T: Topology, C: InverseChain, b0, R: int | None = None, trace=None) -> DistributedResult:
    """Crude solve using only ``R``-hop communication (``R`` defaults to the topology radius)."""
    R, notes = _rhop_R(T, C.d, R)
    b = _check_inputs(T, C.base, b0)
    results, ledger = run_protocol(T, _rhop_program(C.base, C.d, R, b, None), trace=trace)
    x, states, _ = _collect(results, None)
    return DistributedResult(x, ledger, "rhop", R, C.d, None, [], states, notes)


def edist_rsolve(
    T: Topology,
    C: InverseChain,
    b0,
    eps: float,
    R: int | None = None,
    q: int | None = None,
    certificate=None,
    trace=None,
) -> DistributedResult:
    """Richardson iteration preconditioned by the ``R``-hop crude solve."""
    R, notes = _rhop_R(T, C.d, R)
    b = _check_inputs(T, C.base, b0)
    q = _steps(C, eps, q, certificate)
    results, ledger = run_protocol(T, _rhop_program(C.base, C.d, R, b, q), trace=trace)
    x, states, iterates = _collect(results, q)
    return DistributedResult(x, ledger, "rhop", R, C.d, q, iterates, states, notes)


def crude_rounds(d: int, R: int | None = None) -> int:
    """Rounds of one crude solve: ``2d`` with full communication, else the level schedule."""
    if R is None:
        return 2 * d
    fwd = sum(m if m < R else m // R for m in (1 << i for i in range(d)))
    return 2 * fwd


def expected_rounds(d: int, q: int | None, R: int | None = None) -> int:
    """Total rounds of a run, for cross-checking the simulator's count."""
    pre = 1 + (d - 1 if R is None else 1)
    per = crude_rounds(d, R)
    if q is None:
        return pre + per
    return pre + per + q * (1 + per)

