"""Command-line entry point: ``distsddm {validate,solve,bench}``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 parameter error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .chain import EPS_TARGET, auto_chain, build_chain, chain_length, verify_chain
from .distributed import ParameterError, distr_esolve, edist_rsolve, normalize_R, rdist_rsolve
from .generators import GroundedSystem, cycle_graph, grid_graph, ground, path_graph, random_connected_graph
from .io import ParseError, read_edge_list, read_matrix_market, read_vector
from .linalg import (
    EIGEN_CAP,
    DisconnectedGraphError,
    SDDMError,
    StructuralError,
    WeightedGraph,
    condition_bound,
    condition_number,
    direct_solve,
    is_eps_approx,
    relative_m_error,
    standard_splitting,
    validate_sddm,
)
from .reference import ChainCertificateError, parallel_esolve
from .simnet import Topology

REPORT_SCHEMA = "distsddm.run-report/1"
EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_PARAM = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    input: str | None = None
    kind: str = "edge-list"
    grounding: str | None = None  # default: submatrix for edge lists, none for Matrix Market
    sigma: float = 1.0
    mode: str = "reference"
    R: int = 1
    eps: float = 1e-6
    d: str = "auto"
    kappa: str = "eigen"
    seed: int = 0
    b0: str | None = None
    trace: str | None = None
    out: str | None = None

    def validate(self) -> None:
        if not 0 < self.eps <= 0.5:
            raise ParameterError(f"eps must lie in (0, 1/2], got {self.eps}")
        if self.R < 1:
            raise ParameterError(f"R must be >= 1, got {self.R}")
        if self.grounding == "shift" and not self.sigma > 0:
            raise ParameterError(f"sigma must be positive for shift grounding, got {self.sigma}")
        if self.d != "auto" and not (str(self.d).isdigit() and int(self.d) >= 1):
            raise ParameterError(f"d must be 'auto' or a positive integer, got {self.d!r}")
        if self.mode not in ("reference", "full", "rhop"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.kappa not in ("eigen", "bound"):
            raise ParameterError(f"unknown kappa source {self.kappa!r}")


# ---------------------------------------------------------------------------
# ingestion


def load_system(cfg: RunConfig) -> GroundedSystem:
    if cfg.input is None:
        raise InputError("--input is required")
    path = Path(cfg.input)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    grounding = cfg.grounding or ("submatrix" if cfg.kind == "edge-list" else "none")
    if cfg.kind == "edge-list":
        G = read_edge_list(path)
        if grounding == "none":
            raise ParameterError("an edge list gives a singular Laplacian; choose submatrix or shift grounding")
        return ground(G, grounding, cfg.sigma)
    if cfg.kind != "matrix-market":
        raise ParameterError(f"unknown input kind {cfg.kind!r}")
    M = read_matrix_market(path)
    if grounding == "none":
        res = validate_sddm(M)
        if not res.ok:
            raise SDDMError(list(res.violations))
        return GroundedSystem(WeightedGraph.from_matrix(M), M, standard_splitting(M), "none")
    # a Matrix Market Laplacian grounded like an edge list
    G = WeightedGraph.from_matrix(M)
    return ground(G, grounding, cfg.sigma)


def kappa_for(cfg: RunConfig, sysm: GroundedSystem) -> tuple[float, str]:
    if cfg.kappa == "eigen":
        if sysm.n > EIGEN_CAP:
            raise ParameterError(f"n={sysm.n} exceeds the eigensolve cap {EIGEN_CAP}; use --kappa bound")
        return condition_number(sysm.M), "eigen"
    if sysm.grounding == "submatrix":
        return condition_bound(sysm.source, submatrix=True), "bound:n^4*Wmax/Wmin"
    if sysm.grounding == "shift":
        L = sysm.M - sysm.sigma * np.eye(sysm.n)
        gersh = float(np.max(np.abs(L).sum(axis=1)))
        return (gersh + sysm.sigma) / sysm.sigma, "bound:(gershgorin+sigma)/sigma"
    raise ParameterError("no analytic condition bound for an ungrounded matrix; use --kappa eigen")


def load_b0(cfg: RunConfig, n: int) -> tuple[np.ndarray, str]:
    if cfg.b0:
        b = read_vector(cfg.b0)
        if b.shape != (n,):
            raise InputError(f"{cfg.b0}: expected {n} entries, found {b.size}")
        return b, f"file:{cfg.b0}"
    return np.random.default_rng(cfg.seed).standard_normal(n), f"standard-normal(seed={cfg.seed})"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if cfg.input is None or not Path(cfg.input).exists():
        raise InputError(f"{cfg.input}: no such file")
    if cfg.kind == "edge-list":
        G = read_edge_list(cfg.input)
        comps = G.components()
        report = {"input": cfg.input, "kind": cfg.kind, "n": G.n, "edges": len(G.edges)}
        if len(comps) > 1:
            report.update(valid=False, components=comps)
            print(json.dumps(report, indent=2), file=out)
            print(f"graph is disconnected: {len(comps)} components", file=sys.stderr)
            return EXIT_VERIFY
        report["valid"] = True
        print(json.dumps(report, indent=2), file=out)
        return EXIT_OK
    M = read_matrix_market(cfg.input)
    res = validate_sddm(M)
    report = {
        "input": cfg.input,
        "kind": cfg.kind,
        "n": M.shape[0],
        "valid": res.ok,
        "violations": [{"row": v.row, "rule": v.rule, "detail": v.detail} for v in res.violations],
    }
    print(json.dumps(report, indent=2), file=out)
    for v in res.violations:
        print(str(v), file=sys.stderr)
    return EXIT_OK if res.ok else EXIT_VERIFY


def _chain(cfg: RunConfig, sysm: GroundedSystem):
    kappa, source = kappa_for(cfg, sysm)
    if cfg.d == "auto":
        return auto_chain(sysm.splitting, kappa, source)
    return build_chain(sysm.splitting, int(cfg.d), kappa, source)


def solve_report(cfg: RunConfig) -> tuple[dict, int]:
    """Run one solve and build the report; returns ``(report, exit_code)``."""
    cfg.validate()
    started = time.perf_counter()
    sysm = load_system(cfg)
    C = _chain(cfg, sysm)
    cert = verify_chain(C) if sysm.n <= EIGEN_CAP else None
    b, b_source = load_b0(cfg, sysm.n)
    warnings: list[str] = []
    trace = open(cfg.trace, "w") if cfg.trace else None
    try:
        if cfg.mode == "reference":
            res = parallel_esolve(C, b, cfg.eps, certificate=cert)
            x, q, ledger, R_used = res.x, res.q, None, None
            iterates = res.iterates
        elif cfg.mode == "full":
            dres = distr_esolve(Topology.full(sysm.graph), C, b, cfg.eps, certificate=cert, trace=trace)
            x, q, ledger, R_used, iterates = dres.x, dres.q, dres.ledger, dres.R, dres.iterates
        else:
            R_used, warn = normalize_R(cfg.R)
            if warn:
                warnings.append(warn)
            dres = edist_rsolve(Topology.build(sysm.graph, R_used), C, b, cfg.eps, certificate=cert, trace=trace)
            x, q, ledger, iterates = dres.x, dres.q, dres.ledger, dres.iterates
    finally:
        if trace:
            trace.close()

    verification: dict = {"status": "unverified", "reason": f"n={sysm.n} exceeds oracle cap {EIGEN_CAP}"}
    code = EXIT_OK
    if sysm.n <= EIGEN_CAP:
        xs = direct_solve(sysm.M, b)
        err = relative_m_error(x, xs, sysm.M)
        ok = is_eps_approx(x, xs, sysm.M, cfg.eps)
        verification = {
            "status": "verified" if ok else "failed",
            "relative_m_error": err,
            "is_eps_approx": ok,
            "per_iteration_relative_m_error": [relative_m_error(y, xs, sysm.M) for y in iterates],
        }
        code = EXIT_OK if ok else EXIT_VERIFY

    chain_meta = C.to_dict()
    if cert is not None:
        chain_meta["certificate"] = cert.to_dict()
    if cfg.d != "auto":
        chain_meta["overridden"] = True
        chain_meta["auto_d"] = chain_length(C.kappa_used)
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "config": asdict(cfg),
        "system": {
            "n": sysm.n,
            "grounding": sysm.grounding,
            "grounded_node": sysm.grounded_node,
            "sigma": sysm.sigma,
            "b0_source": b_source,
        },
        "chain": chain_meta,
        "solve": {"mode": cfg.mode, "R": R_used, "q": q, "eps": cfg.eps, "eps_target": EPS_TARGET},
        "solution": [float(v) for v in x],
        "verification": verification,
        "ledger": ledger.to_dict() if ledger is not None else None,
        "warnings": warnings,
        "timing": {"wall_seconds": time.perf_counter() - started},
    }
    return report, code


def cmd_solve(cfg: RunConfig) -> int:
    report, code = solve_report(cfg)
    text = json.dumps(report, indent=2) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_VERIFY:
        print(f"verification failed: relative M-error {report['verification']['relative_m_error']:.3e} > eps", file=sys.stderr)
    return code


BENCH_FIELDS = ["family", "n", "R", "d", "kappa", "q", "rounds", "messages", "scalars", "node_ops_max", "time_steps", "rel_error", "error"]


def bench_instance(family: str, n: int, seed: int) -> WeightedGraph:
    if family == "cycle":
        return cycle_graph(n)
    if family == "path":
        return path_graph(n)
    if family == "grid":
        side = int(round(np.sqrt(n)))
        return grid_graph(side, max(1, n // side))
    if family == "random":
        return random_connected_graph(n, 0.3, np.random.default_rng(seed))
    raise ParameterError(f"unknown family {family!r}")


def bench_rows(cfg: RunConfig, family: str, sizes: list[int], Rs: list[int], crude: bool) -> list[dict]:
    rows = []
    for n in sizes:
        sysm = ground(bench_instance(family, n, cfg.seed), cfg.grounding or "submatrix", cfg.sigma)
        b = np.random.default_rng(cfg.seed).standard_normal(sysm.n)
        C = _chain(cfg, sysm)
        cert = verify_chain(C) if sysm.n <= EIGEN_CAP else None
        xs = direct_solve(sysm.M, b) if sysm.n <= EIGEN_CAP else None
        for R in Rs:
            row = {"family": family, "n": sysm.n, "R": R, "d": C.d, "kappa": C.kappa_used}
            try:
                T = Topology.build(sysm.graph, R)
                if crude:
                    res = rdist_rsolve(T, C, b, R)
                else:
                    res = edist_rsolve(T, C, b, cfg.eps, R, certificate=cert)
                L = res.ledger
                row.update(
                    R=res.R,
                    q=res.q if res.q is not None else 0,
                    rounds=L.rounds,
                    messages=L.messages,
                    scalars=L.scalars_sent,
                    node_ops_max=L.max_node_ops,
                    time_steps=L.time_steps,
                    rel_error=relative_m_error(res.x, xs, sysm.M) if xs is not None and not crude else "",
                    error="",
                )
            except (ParameterError, ChainCertificateError) as exc:
                row.update(error=str(exc))
            rows.append({k: row.get(k, "") for k in BENCH_FIELDS})
    return rows


def trend_summary(rows: list[dict]) -> dict:
    """Composite time-step ratios for doubling ``n`` (fixed ``R``) and doubling ``R`` (fixed ``n``)."""
    ok = [r for r in rows if not r["error"]]
    by_R: dict = {}
    by_n: dict = {}
    for r in ok:
        by_R.setdefault(r["R"], []).append((r["n"], r["time_steps"]))
        by_n.setdefault(r["n"], []).append((r["R"], r["time_steps"]))
    def ratios(pairs):
        pairs = sorted(pairs)
        return [{"from": a[0], "to": b[0], "ratio": b[1] / a[1]} for a, b in zip(pairs, pairs[1:])]
    return {
        "time_steps_model": "max node multiply-adds + rounds x (diam(G) if full communication else 1)",
        "growth_in_n_at_fixed_R": {str(R): ratios(v) for R, v in sorted(by_R.items())},
        "change_in_R_at_fixed_n": {str(n): ratios(v) for n, v in sorted(by_n.items())},
        "nonincreasing_in_R": {
            str(n): all(b[1] <= a[1] for a, b in zip(sorted(v), sorted(v)[1:])) for n, v in sorted(by_n.items())
        },
    }


def cmd_bench(cfg: RunConfig, family: str, sizes: list[int], Rs: list[int], crude: bool, summary: str | None) -> int:
    cfg.validate()
    rows = bench_rows(cfg, family, sizes, Rs, crude)
    sink = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    try:
        w = csv.DictWriter(sink, fieldnames=BENCH_FIELDS)
        w.writeheader()
        w.writerows(rows)
    finally:
        if cfg.out:
            sink.close()
    info = trend_summary(rows)
    if summary:
        Path(summary).write_text(json.dumps(info, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` comments; keys mirror long flags."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ParseError(path, lineno, "expected 'key = value'")
        key, value = (t.strip() for t in text.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--input", help="input file")
    p.add_argument("--kind", choices=["matrix-market", "edge-list"], default="edge-list")
    p.add_argument("--grounding", choices=["submatrix", "shift", "none"], default=None)
    p.add_argument("--sigma", type=float, default=1.0, help="shift for --grounding shift")
    p.add_argument("--mode", choices=["reference", "full", "rhop"], default="reference")
    p.add_argument("--R", type=int, default=1, help="hop radius for rhop mode")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--d", default="auto", help="chain length or 'auto'")
    p.add_argument("--kappa", choices=["eigen", "bound"], default="eigen")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--b0", help="right-hand side vector file (default: seeded normal)")
    p.add_argument("--trace", help="write one JSON line per message to this file")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distsddm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("validate", help="check an input file"))
    _common(sub.add_parser("solve", help="solve and write a JSON run report"))
    bench = sub.add_parser("bench", help="cost sweep over generated graphs, CSV output")
    _common(bench)
    bench.add_argument("--family", choices=["cycle", "path", "grid", "random"], default="cycle")
    bench.add_argument("--sizes", default="8,16,32", help="comma-separated node counts")
    bench.add_argument("--R-list", dest="R_list", default="1,2,4", help="comma-separated hop radii")
    bench.add_argument("--crude", action="store_true", help="time one crude solve instead of the full iteration")
    bench.add_argument("--summary", help="write trend ratios as JSON here")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        file_opts = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(file_opts) - known)
        if unknown:
            raise ParameterError(f"{args.config}: unknown keys {unknown}")
        sub.set_defaults(**file_opts)
        args = parser.parse_args(argv)
        # argparse does not convert defaults that came from the file
        for action in sub._actions:
            val = getattr(args, action.dest, None)
            if action.type is not None and isinstance(val, str):
                setattr(args, action.dest, action.type(val))
    return args


def _config(args) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: getattr(args, k) for k in fields if hasattr(args, k)})


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        cfg = _config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        sizes = [int(s) for s in args.sizes.split(",")]
        Rs = [int(s) for s in args.R_list.split(",")]
        return cmd_bench(cfg, args.family, sizes, Rs, args.crude, args.summary)
    except (ParseError, StructuralError, SDDMError, DisconnectedGraphError, InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParameterError, ChainCertificateError, ValueError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
