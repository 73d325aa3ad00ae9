"""Command-line entry point: ``rationalizer solve|check|distance|perturb``."""
from __future__ import annotations

import argparse
import sys
from importlib import resources

from .scenario import (
    CommandResult,
    Report,
    ScenarioError,
    load_scenario,
    parse_scenario,
    run_command,
    run_scenario,
)
from .solvers import CONCEPTS

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


def shipped_scenarios() -> list[str]:
    return sorted(p.name for p in resources.files("rationalizer.scenarios").iterdir() if p.name.endswith(".scn"))


def _load(path: str):
    if path.startswith("builtin:"):
        text = resources.files("rationalizer.scenarios").joinpath(path.split(":", 1)[1]).read_text(encoding="utf-8")
        return parse_scenario(text)
    return load_scenario(path)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(pairs: list[str]) -> dict:
    out = {}
    for p in pairs or []:
        key, _, value = p.partition("=")
        if not value:
            raise ScenarioError("E200", f"--param {p!r}: expected key=value")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rationalizer", description="Exact rationalizability solvers for dynamic games.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario file, or builtin:<name>.scn")
        p.add_argument("--threads", type=int, default=None, help="worker threads (RATIONALIZER_THREADS overrides)")
        p.add_argument("--max-rounds", type=int, default=None)
        p.add_argument("--out", default=None, help="write the report here instead of stdout")

    s = sub.add_parser("solve", help="run every command in a scenario")
    common(s)
    s.add_argument("--concept", choices=CONCEPTS, default=None, help="override the concepts named in the scenario")

    c = sub.add_parser("check", help="validate a scenario and report richness")
    common(c)
    c.add_argument("--richness", action="store_true", help="report richness of structures and hierarchies")

    d = sub.add_parser("distance", help="model distance between two named models")
    common(d)
    d.add_argument("models", nargs=2)

    p = sub.add_parser("perturb", help="solve a perturbation of a named model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--kind", required=True, choices=("tie_break", "graft", "select"))
    p.add_argument("--param", action="append", default=[], help="key=value, e.g. n=10, k=2, outcome=D1")
    p.add_argument("--concept", choices=CONCEPTS, action="append", default=None)

    sub.add_parser("list", help="list shipped scenarios")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(shipped_scenarios()))
        return EXIT_OK
    try:
        sc = _load(args.scenario)
    except ScenarioError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    opts = {"threads": args.threads, "max_rounds": args.max_rounds}
    if args.command == "solve":
        report = run_scenario(sc, concept=args.concept, **opts)
    elif args.command == "check":
        cmds = [{"op": "check"}] if args.richness else []
        report = Report([run_command(sc, c, opts) for c in cmds] or [CommandResult("check", ["scenario valid"], [])])
    elif args.command == "distance":
        missing = [m for m in args.models if m not in sc.models]
        if missing:
            print(f"unknown model(s): {', '.join(missing)}", file=sys.stderr)
            return EXIT_INVALID
        report = Report([run_command(sc, {"op": "distance", "models": args.models}, opts)])
    else:
        if args.model not in sc.models:
            print(f"unknown model {args.model!r}", file=sys.stderr)
            return EXIT_INVALID
        try:
            params = _params(args.param)
        except ScenarioError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_INVALID
        cmd = {"op": "perturb", "model": args.model, "kind": args.kind, **params, "concepts": args.concept or ["efr"]}
        report = Report([run_command(sc, cmd, opts)])
    _emit(report.text(), args.out)
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
