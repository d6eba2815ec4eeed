"""Composite time steps of one crude solve on a shifted cycle as the hop radius R grows.

    python3 scripts/r_sweep.py --n 64 --d 12 --R 1,2,4,8
"""
from __future__ import annotations

import argparse

import numpy as np

from distsddm import Topology, build_chain, parallel_rsolve, rdist_rsolve
from distsddm.generators import cycle_graph, ground


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--d", type=int, default=12)
    p.add_argument("--sigma", type=float, default=1e-2)
    p.add_argument("--R", default="1,2,4,8")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    sysm = ground(cycle_graph(args.n), "shift", args.sigma)
    C = build_chain(sysm.splitting, args.d)
    b = np.random.default_rng(args.seed).standard_normal(args.n)
    x0 = parallel_rsolve(C, b)
    print(f"{'R':>3} {'alpha':>5} {'rounds':>7} {'max_ops':>8} {'time_steps':>10} {'rel_diff':>9}")
    for R in map(int, args.R.split(",")):
        res = rdist_rsolve(Topology.build(sysm.graph, R), C, b, R)
        L = res.ledger
        diff = np.abs(res.x - x0).max() / np.abs(x0).max()
        print(f"{R:>3} {Topology.build(sysm.graph, R).alpha:>5} {L.rounds:>7} {L.max_node_ops:>8} {L.time_steps:>10} {diff:>9.1e}")


if __name__ == "__main__":
    main()
