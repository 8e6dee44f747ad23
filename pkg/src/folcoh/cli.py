"""Command line entry point: ``folcoh list`` and ``folcoh run``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import catalog
from .linalg import DEFAULT_TAU
from .report import SUITES, ConfigError, RunConfig, dumps, expand_suites, run_case, write_report, write_spectra

# CLI flag -> resolution key, per backend
GRID_FLAGS = {"n": ("n", "nx"), "nx": ("nx",), "ny": ("ny",), "nz": ("nz",), "n_fiber": ("n",), "nt": ("nt",)}


def _parser():
    p = argparse.ArgumentParser(prog="folcoh", description="Basic and antibasic cohomology of catalog foliations.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="print the case catalog as JSON")
    r = sub.add_parser("run", help="run one case")
    r.add_argument("--case", required=True)
    r.add_argument("--n", type=int, help="grid size (fiber size on monodromy cases, x size on bump-flow cases)")
    r.add_argument("--n-fiber", dest="n_fiber", type=int, help="fiber grid size on monodromy cases")
    r.add_argument("--nt", type=int, help="grid size along the monodromy axis")
    r.add_argument("--nx", type=int)
    r.add_argument("--ny", type=int)
    r.add_argument("--nz", type=int)
    r.add_argument("--jmax", type=float, help="spin cutoff on the su2 backend")
    r.add_argument("--scales", type=float, nargs=3, metavar=("A1", "A2", "A3"), help="Berger scales on the su2 backend")
    r.add_argument("--tol", type=float, default=DEFAULT_TAU, help="relative rank threshold tau")
    r.add_argument("--identity-tol", type=float, default=None)
    r.add_argument("--suite", default="betti", choices=SUITES + ("all",))
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--out", help="JSON report path (stdout when omitted)")
    r.add_argument("--spectra", help="CSV spectra path (defaults next to --out)")
    return p


def _resolution(args, case):
    keys = set(case.default_resolution)
    res = {}
    if args.jmax is not None:
        j = args.jmax
        res["jmax"] = int(j) if float(j).is_integer() else j
    if args.scales is not None:
        res["scales"] = list(args.scales)
    for flag, targets in GRID_FLAGS.items():
        v = getattr(args, flag)
        if v is None:
            continue
        hit = [t for t in targets if t in keys]
        if not hit:
            raise ConfigError(f"--{flag.replace('_', '-')} does not apply to case {case.name}; parameters: {sorted(keys)}")
        res[hit[0]] = v
    return res


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(json.dumps(catalog.list_cases(), sort_keys=True, indent=2) + "\n")
        return 0
    try:
        case = catalog.get_case(args.case)
        cfg = RunConfig(
            case=args.case,
            resolution=_resolution(args, case),
            tau=float(args.tol),
            identity_tol=args.identity_tol,
            suites=expand_suites(args.suite),
            seed=args.seed,
            out=args.out,
            trials=args.trials,
        )
        cfg.validate()
    except (KeyError, ConfigError) as e:
        msg = e.args[0] if e.args else str(e)
        sys.stderr.write(f"folcoh: {msg}\n")
        return 2
    report, status = run_case(cfg)
    if args.out:
        write_report(report, args.out)
        spectra = args.spectra or str(Path(args.out).with_suffix(".spectra.csv"))
        write_spectra(report, spectra)
    else:
        sys.stdout.write(dumps(report))
        if args.spectra:
            write_spectra(report, args.spectra)
    summary = {k: report["betti"].get(k) for k in ("h", "h_b", "h_a_rank")} if report["betti"] else {}
    sys.stderr.write(f"{case.name}: exit {status} {summary}")
    if report["hard_failures"]:
        sys.stderr.write(f" failures={report['hard_failures']}")
    if report["discrepancies"]:
        sys.stderr.write(f" discrepancies={[d['table'] for d in report['discrepancies']]}")
    sys.stderr.write("\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
