"""Command-line front end: ``ctlab render|converge|run|verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .experiment import EXPERIMENT_KEYS, PRESETS, SpecError, load_spec, run_spec
from .families import FamilyError
from .limitset import LimitSetError
from .verify import SUITES, run_suites

EXIT_OK, EXIT_SPEC, EXIT_EMPTY, EXIT_FAMILY, EXIT_VERIFY = 0, 2, 3, 4, 5

log = logging.getLogger("ctlab")


def _formats(arg: str | None, default: set[str]) -> set[str]:
    if not arg:
        return default
    out = {f.strip() for f in arg.split(",") if f.strip()}
    bad = out - {"csv", "json", "ppm", "png"}
    if bad:
        raise SpecError(f"unknown formats {sorted(bad)}")
    return out


def _run(args, kinds: set[str] | None, default_formats: set[str]) -> int:
    spec = load_spec(args.spec, args.seed)
    if kinds is not None and not any(e["kind"] in kinds for e in spec.experiments):
        raise SpecError(f"spec has no experiment of kind {sorted(kinds)}")
    files, results = run_spec(spec, Path(args.out), _formats(args.format, default_formats), kinds, args.jobs)
    for kind, obj in results:
        meta = getattr(obj, "metadata", None)
        if meta is None:
            print(f"{kind}: {len(obj)} points")
            continue
        for key in ("verdict", "flag", "uep_flag", "case", "decreasing_last_8"):
            if key in meta:
                print(f"{kind}: {key} = {meta[key]}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_render(args) -> int:
    return _run(args, {"render"}, {"ppm", "csv"})


def cmd_converge(args) -> int:
    return _run(args, {"ct-converge"}, {"csv", "json"})


def cmd_run(args) -> int:
    kinds = set(args.kind) if args.kind else None
    return _run(args, kinds, {"csv", "json", "ppm"})


def cmd_verify(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names, args.seed if args.seed is not None else 0, args.trials)
    ok = True
    for r in results:
        print(json.dumps(r.as_dict(), sort_keys=True, default=float))
        ok &= r.passed
    print("verify: " + ("pass" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctlab", description="Limit sets and Cannon-Thurston map diagnostics.")
    ap.add_argument("--version", action="version", version=f"ctlab {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help=f"spec file, or a preset: {', '.join(PRESETS)}")
        p.add_argument("--seed", type=int, default=None, help="override the spec seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", default=None, help="comma list of csv,json,ppm,png")

    common(sub.add_parser("render", help="render the limit set"))
    common(sub.add_parser("converge", help="CT-map convergence report"))
    p = sub.add_parser("run", help="run the experiments of a spec")
    common(p)
    p.add_argument("--kind", action="append", choices=sorted(EXPERIMENT_KEYS), help="restrict to these kinds")
    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10_000)
    return ap


COMMANDS = {"render": cmd_render, "converge": cmd_converge, "run": cmd_run, "verify": cmd_verify}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return EXIT_SPEC
    try:
        return COMMANDS[args.command](args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except LimitSetError as exc:
        print(f"empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except FamilyError as exc:
        where = f" at index {exc.index}" if exc.index is not None else ""
        print(f"family failure{where}: {exc}", file=sys.stderr)
        return EXIT_FAMILY


if __name__ == "__main__":
    raise SystemExit(main())
