"""Command-line interface.

Subcommands ``solve``, ``linearize``, ``sweep``, ``montecarlo`` and ``verify``
all take ``--feeder`` (bundled name or file path) and write their outputs plus
a ``manifest.json`` into ``--out``. Exit codes: 0 success, 1 failed check,
2 bad arguments or unreadable feeder.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__
from .analysis import (
    continuation_sweep,
    der_scenario,
    draw_injections,
    monte_carlo,
    positive_scenario,
    write_montecarlo_csv,
    write_sweep_csv,
)
from .feeder_io import BUNDLED, FeederFormatError, read_feeder
from .linmodels import build_gldf, build_ldf
from .netmodel import IndexMaps, Network, NetworkError, build_index_maps, injection_vector
from .nlpf import SolverConfig, fixed_point_solve
from .verify import CheckReport, check_common_path, check_dominance, check_incidence_identities
from .ybus import build_system, dump_matrices


class UsageError(Exception):
    """Bad input detected after argument parsing (exit code 2)."""


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--feeder", required=True,
                        help=f"bundled feeder ({', '.join(BUNDLED)}) or path to a feeder file")
    common.add_argument("--shunts", action="store_true",
                        help="keep capacitor banks and line charging")
    common.add_argument("--tol", type=float, default=1e-10, help="fixed-point tolerance (p.u.)")
    common.add_argument("--max-iter", type=int, default=1000)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--dump-ybus", action="store_true",
                        help="also write Y_LL, Y_LS, Z and E as CSV")

    p = argparse.ArgumentParser(prog="gldf", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="nonlinear power flow")
    s.add_argument("--k", type=float, default=1.0, help="multiplier on the reference loading")
    s.add_argument("--injections", help="CSV with bus,phase,p_pu,q_pu (overrides --k)")

    s = sub.add_parser("linearize", parents=[common], help="write M, N and lambda")
    s.add_argument("--lin-k", type=float, default=0.0)
    s.add_argument("--injections", help="CSV linearization point (overrides --lin-k)")
    s.add_argument("--model", choices=("gldf", "ldf"), default="gldf")

    s = sub.add_parser("sweep", parents=[common], help="continuation sweep over k")
    s.add_argument("--lin-k", type=float, default=0.0)
    s.add_argument("--kmin", type=float, default=-2.5)
    s.add_argument("--kmax", type=float, default=2.5)
    s.add_argument("--kstep", type=float, default=0.01)

    s = sub.add_parser("montecarlo", parents=[common], help="random-load error tables")
    s.add_argument("--scenario", choices=("positive", "der", "both"), default="both")
    s.add_argument("--partition", choices=("first", "swapped", "random"), default="first")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("verify", parents=[common], help="structural checks")
    s.add_argument("--samples", type=int, default=500, help="dominance-check samples")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--check-tol", type=float, default=1e-9, help="identity-check tolerance")
    return p


def _read_injections(path: str, idx: IndexMaps) -> np.ndarray:
    values: dict[str, dict[str, complex]] = {}
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                values.setdefault(row["bus"], {})[row["phase"]] = complex(
                    float(row["p_pu"]), float(row["q_pu"]))
        return idx.vector(values)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read injections from {path}: {exc}") from None


def _load(args) -> Network:
    try:
        return read_feeder(args.feeder, shunts=args.shunts)
    except (OSError, FeederFormatError, NetworkError) as exc:
        raise UsageError(f"cannot read feeder {args.feeder!r}: {exc}") from None


def _write_matrix(path: Path, mat: np.ndarray, labels: list[str]) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", *labels])
        for lab, row in zip(labels, mat):
            w.writerow([lab, *(repr(float(v)) for v in row)])
    return path


def _cmd_solve(args, net, idx, mats, cfg, out: Path) -> tuple[int, list[Path]]:
    S = (_read_injections(args.injections, idx) if args.injections
         else args.k * injection_vector(net, idx))
    sol = fixed_point_solve(mats, S, cfg)
    path = out / "voltages.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bus", "phase", "vm_pu", "va_deg"])
        for (bus, ph), v in zip(idx.nodes, sol.V):
            w.writerow([bus, ph, repr(float(abs(v))), repr(float(np.degrees(np.angle(v))))])
    state = "converged" if sol.converged else f"NOT converged ({sol.message})"
    mags = sol.magnitudes
    print(f"{net.name}: {state} in {sol.iterations} iterations, residual {sol.residual:.2e}, "
          f"|V| in [{mags.min():.4f}, {mags.max():.4f}]")
    return (0 if sol.converged else 1), [path]


def _cmd_linearize(args, net, idx, mats, cfg, out: Path) -> tuple[int, list[Path]]:
    if args.model == "ldf":
        mdl = build_ldf(net, idx, mats)
    else:
        S = (_read_injections(args.injections, idx) if args.injections
             else args.lin_k * injection_vector(net, idx))
        V = None
        if np.any(S):
            sol = fixed_point_solve(mats, S, cfg)
            if not sol.converged:
                print(f"no power flow solution at the linearization point: {sol.message}",
                      file=sys.stderr)
                return 1, []
            V = sol.V
        mdl = build_gldf(mats, S, V)
    labels = [f"{b}.{p}" for b, p in idx.nodes]
    paths = [_write_matrix(out / "M.csv", mdl.M, labels),
             _write_matrix(out / "N.csv", mdl.N, labels)]
    path = out / "lambda.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "lambda", "base"])
        for lab, lam, base in zip(labels, mdl.lam, mdl.base):
            w.writerow([lab, repr(float(lam)), repr(float(base))])
    paths.append(path)
    print(f"{net.name}: wrote {args.model} model with {idx.n} nodes")
    return 0, paths


def _cmd_sweep(args, net, idx, mats, cfg, out: Path) -> tuple[int, list[Path]]:
    res = continuation_sweep(net, args.kmin, args.kmax, args.kstep, args.lin_k, cfg)
    path = write_sweep_csv(res, out / "sweep.csv")
    print(f"{net.name}: {res.k.size} points, {res.n_failed} not converged")
    return 0, [path]


def _cmd_montecarlo(args, net, idx, mats, cfg, out: Path) -> tuple[int, list[Path]]:
    S_ref = injection_vector(net, idx)
    scenarios = []
    if args.scenario in ("positive", "both"):
        scenarios.append(positive_scenario(S_ref))
    if args.scenario in ("der", "both"):
        scenarios.append(der_scenario(S_ref, args.partition, args.seed))
    results = [monte_carlo(net, s, args.samples, args.seed, args.jobs, cfg) for s in scenarios]
    path = write_montecarlo_csv(results, out / "montecarlo.csv")
    paths = [path]
    for r in results:
        cells = "  ".join(f"{m} {a:.4g}/{b:.4g}" for m, (a, b) in r.table().items())
        print(f"{r.feeder} {r.scenario} (mean/max, 0.01 p.u.): {cells}  "
              f"[{r.converged}/{r.samples} converged]")
        if r.der_nodes:
            part = out / f"partition_{r.scenario}.txt"
            part.write_text("\n".join(r.der_nodes) + "\n")
            paths.append(part)
    return 0, paths


def _guarded(name: str, fn) -> CheckReport:
    try:
        return fn()
    except NetworkError as exc:
        return CheckReport(name, False, 0.0, {"precondition": str(exc)})


def _cmd_verify(args, net, idx, mats, cfg, out: Path) -> tuple[int, list[Path]]:
    samples = draw_injections(positive_scenario(injection_vector(net, idx)), args.seed, 0,
                              args.samples)
    reports = [
        _guarded("common_path", lambda: check_common_path(net, idx, mats, args.check_tol)),
        _guarded("incidence_identities",
                 lambda: check_incidence_identities(net, idx, args.check_tol)),
        _guarded("dominance", lambda: check_dominance(net, mats, samples, cfg=cfg, idx=idx)),
    ]
    for r in reports:
        print(r)
    path = out / "report.json"
    path.write_text(json.dumps([r.to_dict() for r in reports], indent=1, default=str) + "\n")
    return (0 if all(r.passed for r in reports) else 1), [path]


COMMANDS = {
    "solve": _cmd_solve,
    "linearize": _cmd_linearize,
    "sweep": _cmd_sweep,
    "montecarlo": _cmd_montecarlo,
    "verify": _cmd_verify,
}


def _manifest(argv: Sequence[str], args, outputs: list[Path], code: int) -> dict:
    config = {k: v for k, v in vars(args).items()}
    return {
        "command": ["gldf", *argv],
        "config": config,
        "seed": config.get("seed"),
        "exit_code": code,
        "outputs": sorted(p.name for p in outputs),
        "versions": {
            "gldf": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.tol <= 0 or args.max_iter < 1:
            raise UsageError("--tol must be positive and --max-iter at least 1")
        if getattr(args, "samples", 1) < 1 or getattr(args, "jobs", 1) < 1:
            raise UsageError("--samples and --jobs must be at least 1")
        net = _load(args)
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"cannot create output directory {out}: {exc}") from None
        idx = build_index_maps(net)
        mats = build_system(net, idx)
        cfg = SolverConfig(args.tol, args.max_iter)
        code, outputs = COMMANDS[args.command](args, net, idx, mats, cfg, out)
        if args.dump_ybus:
            outputs += dump_matrices(mats, idx, out / "ybus")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gldf: error: {exc}", file=sys.stderr)
        return 2
    manifest = _manifest(argv, args, outputs, code)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
