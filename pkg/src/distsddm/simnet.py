"""Deterministic synchronous-round message passing with R-hop enforcement.

A node-local program is a generator function ``program(ctx)``.  Every
``yield`` ends the node's part of a round: the yielded value is its outbox
(a list of :class:`Send`), and the value sent back in is the inbox of the
next round, a dict ``src -> payload``.  Returning from the generator halts
the node; the return value becomes its final state.

Rounds are lockstep: a message sent in round ``t`` is readable only in the
step that follows the round-``t`` barrier.
"""
from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Generator, Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .linalg import WeightedGraph


class SimulationError(RuntimeError):
    pass


class LocalityFault(SimulationError):
    def __init__(self, src: int, dst: int, round_: int, hops):
        self.src, self.dst, self.round = src, dst, round_
        super().__init__(f"round {round_}: node {src} sent to node {dst} at hop distance {hops}")


class NonTermination(SimulationError):
    pass


# ---------------------------------------------------------------------------
# topology


def r_hop_neighborhood(G: WeightedGraph, k: int, R: int) -> list[int]:
    """Nodes within ``R`` unweighted hops of ``k`` (``k`` included), sorted."""
    nbrs = G.neighbors()
    dist = {k: 0}
    queue = deque([k])
    while queue:
        v = queue.popleft()
        if dist[v] == R:
            continue
        for w in nbrs[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return sorted(dist)


def hop_distances(G: WeightedGraph) -> np.ndarray:
    """All-pairs hop distances; unreachable pairs are ``-1``."""
    if G.n == 0:
        return np.zeros((0, 0), dtype=int)
    dist = shortest_path(csr_matrix(G.adjacency() != 0), unweighted=True, directed=False)
    out = np.full(dist.shape, -1, dtype=int)
    finite = np.isfinite(dist)
    out[finite] = dist[finite].astype(int)
    return out


@dataclass(frozen=True)
class Topology:
    graph: WeightedGraph
    R: int
    hops: np.ndarray = field(repr=False, compare=False)
    neighborhoods: tuple = field(repr=False)
    alpha: int
    d_max: int
    diameter: int

    @classmethod
    def build(cls, graph: WeightedGraph, R: int) -> "Topology":
        if R < 1:
            raise ValueError(f"R must be a positive integer, got {R}")
        hops = hop_distances(graph)
        hops.setflags(write=False)
        within = (hops >= 0) & (hops <= R)
        hoods = tuple(tuple(int(j) for j in np.nonzero(within[k])[0]) for k in range(graph.n))
        return cls(
            graph=graph,
            R=int(R),
            hops=hops,
            neighborhoods=hoods,
            alpha=max((len(h) for h in hoods), default=0),
            d_max=graph.max_degree,
            diameter=int(hops.max(initial=0)),
        )

    @classmethod
    def full(cls, graph: WeightedGraph) -> "Topology":
        """Topology whose radius covers the whole (per-component) diameter."""
        return cls.build(graph, max(int(hop_distances(graph).max(initial=0)), 1))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def full_communication(self) -> bool:
        return self.R >= self.diameter

    @property
    def alpha_bound(self) -> int:
        """``min(n, (d_max^(R+1) - 1) / (d_max - 1))``."""
        if self.d_max <= 1:
            geo = self.R + 1 if self.d_max == 1 else 1
        else:
            geo = (self.d_max ** (self.R + 1) - 1) // (self.d_max - 1)
        return min(self.n, geo)

    def ball(self, k: int, r: int) -> np.ndarray:
        """Sorted ``N_r(k)`` as an index array, ``k`` included."""
        row = self.hops[k]
        return np.nonzero((row >= 0) & (row <= r))[0]

    def peers(self, k: int, r: int) -> np.ndarray:
        b = self.ball(k, r)
        return b[b != k]


# ---------------------------------------------------------------------------
# messages and accounting


@dataclass(frozen=True)
class SparseRow:
    """Sparse real vector; ``idx`` sorted and unique."""

    idx: np.ndarray
    val: np.ndarray

    @classmethod
    def from_dense(cls, vec: np.ndarray) -> "SparseRow":
        nz = np.nonzero(vec)[0]
        return cls(nz, np.asarray(vec, dtype=float)[nz])

    @classmethod
    def empty(cls) -> "SparseRow":
        return cls(np.zeros(0, dtype=int), np.zeros(0))

    @property
    def nnz(self) -> int:
        return int(self.idx.size)

    @cached_property
    def idx_list(self) -> list:
        return self.idx.tolist()

    @cached_property
    def val_list(self) -> list:
        return self.val.tolist()

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.idx] = self.val
        return out

    def get(self, j: int) -> float:
        pos = np.searchsorted(self.idx, j)
        if pos < self.idx.size and self.idx[pos] == j:
            return float(self.val[pos])
        return 0.0


Payload = Mapping[str, "float | SparseRow"]


@dataclass(frozen=True)
class Send:
    """Multicast of one payload to each node in ``dsts``."""

    dsts: "tuple | np.ndarray"
    payload: Payload


@dataclass(frozen=True)
class RoundMessage:
    src: int
    dst: int
    payload: tuple  # ((tag, index, value), ...)


def payload_triples(src: int, payload: Payload) -> tuple:
    out = []
    for tag, v in payload.items():
        if isinstance(v, SparseRow):
            out += [(tag, int(i), float(x)) for i, x in zip(v.idx, v.val)]
        else:
            out.append((tag, src, float(v)))
    return tuple(out)


def payload_size(payload: Payload) -> int:
    return sum(v.nnz if isinstance(v, SparseRow) else 1 for v in payload.values())


@dataclass
class CostLedger:
    rounds: int = 0
    messages: int = 0
    scalars_sent: int = 0
    node_ops: dict = field(default_factory=dict)
    wall_time: float = 0.0
    max_hop: int = 0
    locality_faults: int = 0
    round_cost: int = 1

    @property
    def max_node_ops(self) -> int:
        return max(self.node_ops.values(), default=0)

    @property
    def time_steps(self) -> int:
        """Composite global-clock cost: busiest node's arithmetic plus weighted rounds.

        A round costs ``diam(G)`` under full communication and 1 under R-hop
        communication; this is one reading of the cost model, not a constant
        taken from the analysis.
        """
        return self.max_node_ops + self.rounds * self.round_cost

    def fingerprint(self) -> tuple:
        """Everything except wall time, for determinism checks."""
        return (
            self.rounds,
            self.messages,
            self.scalars_sent,
            tuple(sorted(self.node_ops.items())),
            self.max_hop,
            self.locality_faults,
            self.round_cost,
        )

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "messages": self.messages,
            "scalars_sent": self.scalars_sent,
            "node_ops": {str(k): v for k, v in sorted(self.node_ops.items())},
            "max_node_ops": self.max_node_ops,
            "max_hop": self.max_hop,
            "locality_faults": self.locality_faults,
            "round_cost": self.round_cost,
            "time_steps": self.time_steps,
            "time_steps_model": "max node multiply-adds + rounds x (diam(G) if full communication else 1)",
            "wall_time": self.wall_time,
        }


class NodeContext:
    """What a node program may see: its id, the topology, and an op counter."""

    __slots__ = ("k", "topology", "ops")

    def __init__(self, k: int, topology: Topology):
        self.k = k
        self.topology = topology
        self.ops = 0

    def charge(self, count: int) -> None:
        self.ops += int(count)

    def peers(self, r: int) -> np.ndarray:
        return self.topology.peers(self.k, r)

    def ball(self, r: int) -> np.ndarray:
        return self.topology.ball(self.k, r)


Program = Callable[[NodeContext], Generator]


def run_protocol(
    topology: Topology,
    program: Program,
    round_cap: int = 10_000_000,
    trace=None,
) -> tuple[list, CostLedger]:
    """Run ``program`` on every node until all halt.

    ``trace``, if given, is a writable text stream that receives one JSON line
    per delivered message.
    """
    n = topology.n
    hops = topology.hops
    allowed = (hops >= 0) & (hops <= topology.R)
    ledger = CostLedger(round_cost=max(topology.diameter, 1) if topology.full_communication else 1)
    start = time.perf_counter()

    ctxs = [NodeContext(k, topology) for k in range(n)]
    gens = [program(ctx) for ctx in ctxs]
    results: list = [None] * n
    pending: dict[int, list] = {}
    for k, g in enumerate(gens):
        try:
            pending[k] = next(g)
        except StopIteration as stop:
            results[k] = stop.value

    # Programs tend to reuse the same destination arrays every round, so the
    # locality check is cached per (src, array object); the array itself is
    # kept in the cache, which pins its id.
    checked: dict[tuple[int, int], tuple] = {}

    def targets(src: int, dsts, rnd: int) -> tuple[list, int]:
        key = (src, id(dsts))
        hit = checked.get(key)
        if hit is not None and hit[0] is dsts:
            return hit[1], hit[2]
        arr = np.asarray(dsts, dtype=int)
        if arr.size == 0:
            out = ([], 0)
        else:
            ok = allowed[src, arr]
            if not ok.all():
                bad = int(arr[np.argmin(ok)])
                ledger.locality_faults += 1
                raise LocalityFault(src, bad, rnd, int(hops[src, bad]))
            if np.any(arr == src):
                raise SimulationError(f"round {rnd}: node {src} sent to itself")
            if np.unique(arr).size != arr.size:
                raise SimulationError(f"round {rnd}: node {src} listed a destination twice")
            out = (arr.tolist(), int(hops[src, arr].max()))
        checked[key] = (dsts, *out)
        return out

    while pending:
        ledger.rounds += 1
        rnd = ledger.rounds
        if rnd > round_cap:
            raise NonTermination(f"round cap {round_cap} exceeded")
        inboxes: dict[int, dict] = {k: {} for k in pending}
        for src in sorted(pending):
            for send in pending[src] or ():
                dst_list, reach = targets(src, send.dsts, rnd)
                if not dst_list:
                    continue
                count = len(dst_list)
                ledger.messages += count
                ledger.scalars_sent += count * payload_size(send.payload)
                if reach > ledger.max_hop:
                    ledger.max_hop = reach
                payload = send.payload
                for dst in dst_list:
                    box = inboxes.get(dst)
                    if box is None:
                        continue  # receiver already halted
                    if src in box:
                        raise SimulationError(f"round {rnd}: duplicate message {src}->{dst}")
                    box[src] = payload
                if trace is not None:
                    triples = payload_triples(src, payload)
                    for dst in dst_list:
                        trace.write(json.dumps({"round": rnd, "src": src, "dst": dst, "payload": triples}) + "\n")
        nxt: dict[int, list] = {}
        for k in sorted(pending):
            try:
                nxt[k] = gens[k].send(inboxes[k])
            except StopIteration as stop:
                results[k] = stop.value
        pending = nxt

    ledger.node_ops = {k: ctxs[k].ops for k in range(n)}
    ledger.wall_time = time.perf_counter() - start
    return results, ledger


def exchange(dsts: Iterable[int], payload: Payload):
    """Sub-generator: send one multicast, return the next inbox."""
    inbox = yield [Send(dsts, payload)]
    return inbox
