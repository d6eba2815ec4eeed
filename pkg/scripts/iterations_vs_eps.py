"""Richardson iteration count and achieved error as the target accuracy tightens.

Uses the shortest chain whose measured last-level error is below ln(2)/3, so
that each iteration contracts by a visible amount, and also the default chain.

    python3 scripts/iterations_vs_eps.py --n 20 --seed 0
"""
from __future__ import annotations

import argparse

import numpy as np
from scipy.stats import linregress

from distsddm import auto_chain, build_chain, parallel_esolve, verify_chain
from distsddm.chain import minimal_certified_length
from distsddm.generators import random_sddm
from distsddm.linalg import direct_solve, relative_m_error, standard_splitting


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmax", type=int, default=6, help="eps runs over 10^-1 .. 10^-kmax")
    args = p.parse_args()

    rng = np.random.default_rng(args.seed)
    M = random_sddm(args.n, rng)
    b = rng.standard_normal(args.n)
    xs = direct_solve(M, b)
    S = standard_splitting(M)
    ks = np.arange(1, args.kmax + 1)
    for label, d in (("minimal", minimal_certified_length(S)), ("default", auto_chain(S).d)):
        C = build_chain(S, d)
        cert = verify_chain(C)
        print(f"{label} chain: d={d}, measured eps_d={cert.measured_eps:.4f}")
        qs = []
        for k in ks:
            res = parallel_esolve(C, b, 10.0**-k, certificate=cert)
            qs.append(res.q)
            print(f"  eps=1e-{k}: q={res.q:>3}  error={relative_m_error(res.x, xs, M):.2e}")
        fit = linregress(ks, qs)
        print(f"  linear fit q ~ {fit.slope:.2f} log10(1/eps) + {fit.intercept:.2f}, R^2={fit.rvalue**2:.3f}")


if __name__ == "__main__":
    main()
