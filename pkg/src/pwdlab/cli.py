"""Command-line interface.

Subcommands: run, forward, reverse, events, verify. Exit codes: 0 success
or accepted, 1 assertion/verification failure, 2 usage or config errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, PwdLabError
from .events import COORDINATE_EQUALS, enumerate_event_class, event_probability
from .harness.config import (
    ScenarioSpec,
    bundled_scenario,
    bundled_scenario_names,
    load_scenario,
)
from .harness.runner import (
    report_csv_text,
    run_experiment,
    success_fraction,
    write_report_csv,
)
from .harness.verify import DEFAULT_SEED, SUITE_NAMES, verify_suite

EVENTS_SCHEMA = "pwdlab.events/1"


def _load(config: str) -> ScenarioSpec:
    path = Path(config)
    if path.is_file():
        return load_scenario(path)
    return bundled_scenario(config)


def _apply_overrides(spec: ScenarioSpec, args) -> ScenarioSpec:
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        spec = replace(spec, trials=args.trials)
    return spec


def _cmd_run(args, forced_pipeline: str | None = None) -> int:
    spec = _apply_overrides(_load(args.config), args)
    if forced_pipeline is not None and spec.pipeline != forced_pipeline:
        spec = replace(spec, pipeline=forced_pipeline)
    rows = run_experiment(spec, timing=args.timing)
    text = report_csv_text(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    frac = success_fraction(rows, spec.accept_threshold)
    if args.verbose:
        print(
            f"[{spec.name}] {len(rows)} trials, success fraction "
            f"{frac:.3f} at err <= {spec.accept_threshold}",
            file=sys.stderr,
        )
    if getattr(args, "assert_", False) and frac < spec.accept_min_success:
        print(
            f"acceptance failed: success fraction {frac:.3f} < "
            f"{spec.accept_min_success}",
            file=sys.stderr,
        )
        return 1
    return 0


def _cmd_events(args) -> int:
    spec = _load(args.config)
    gamma = args.gamma if args.gamma is not None else spec.gamma
    eclass = enumerate_event_class(spec.shape(), gamma)
    buf = io.StringIO()
    buf.write(f"# schema: {EVENTS_SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["event_id", "kind", "j", "t", "sep_exact", "sep_bound"])
    for i, ev in enumerate(eclass.events):
        t = ev.symbol if ev.kind == COORDINATE_EQUALS else ev.threshold
        sep = event_probability(spec.p0, ev) - event_probability(spec.p1, ev)
        writer.writerow([i, ev.kind, ev.index, t, repr(float(sep)), repr(eclass.xi_bound)])
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args) -> int:
    results = verify_suite(args.which, seed=args.seed if args.seed is not None else DEFAULT_SEED)
    doc = {
        "schema": "pwdlab.verify/1",
        "seed": args.seed if args.seed is not None else DEFAULT_SEED,
        "suites": [r.to_dict() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    text = json.dumps(doc, indent=2, default=float) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name}: {status} ({r.runtime_s:.2f}s)", file=sys.stderr)
    return 0 if doc["all_passed"] else 1


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="scenario JSON path or bundled name")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--trials", type=int, default=None, help="trial count override")
    p.add_argument("--out", default=None, help="output CSV path (stdout if omitted)")
    p.add_argument(
        "--assert", dest="assert_", action="store_true",
        help="exit 1 unless the acceptance threshold is met",
    )
    p.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte determinism)")
    p.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pwdlab",
        description=(
            "Simulation and learning laboratory for models that predict an "
            "outcome distribution selected by a hidden concept."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario's configured pipeline")
    _add_run_flags(p_run)

    p_fwd = sub.add_parser("forward", help="run the forward pipeline on a scenario")
    _add_run_flags(p_fwd)

    p_rev = sub.add_parser("reverse", help="run the reverse pipeline on a scenario")
    _add_run_flags(p_rev)

    p_ev = sub.add_parser("events", help="dump an enumerated event class as CSV")
    p_ev.add_argument("--config", required=True)
    p_ev.add_argument("--gamma", type=float, default=None)
    p_ev.add_argument("--out", default=None)
    p_ev.add_argument("--verbose", action="store_true")

    p_ver = sub.add_parser("verify", help="run the identity/bound verification suites")
    p_ver.add_argument(
        "which", nargs="?", default="all",
        help=f"suite name or 'all'; suites: {', '.join(SUITE_NAMES)}",
    )
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--out", default=None, help="output JSON path")
    p_ver.add_argument("--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "forward":
            return _cmd_run(args, forced_pipeline="forward")
        if args.command == "reverse":
            return _cmd_run(args, forced_pipeline="reverse")
        if args.command == "events":
            return _cmd_events(args)
        return _cmd_verify(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"invalid argument: {e}", file=sys.stderr)
        return 2
    except PwdLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
