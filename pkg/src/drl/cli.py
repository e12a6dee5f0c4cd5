"""Command-line entry point: ``drl simulate | explore | replay | scenario | detect``.

Exit codes: 0 clean, 1 a property failed (violation, divergence, failed
scenario), 2 bad usage or an input/output error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

from drl.aggregator import brute_force_maximum, maximum_finalized_subset
from drl.codec import dumps, store_from_json
from drl.harness.campaign import run_campaign
from drl.harness.explore import EXPLORE_BOUNDS, ExploreConfig, explore
from drl.harness.policies import SnapshotPolicy
from drl.harness.replay import TraceFormatError, read_trace, replay
from drl.harness.scenarios import run_scenario, workload_scenarios
from drl.harness.simulation import RANDOM_BOUNDS, RunConfig
from drl.semantics import MUTATIONS, ExplorationBounds, mutated

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


def default_out() -> Path:
    return Path(os.environ.get("DRL_OUT", "drl-out"))


def read_config_file(path: Path) -> dict[str, str]:
    """``key = value`` lines; keys are flag names with or without leading dashes."""
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _policy(text: str) -> SnapshotPolicy:
    try:
        return SnapshotPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _pos(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _flag01(text: str) -> bool:
    if text not in ("0", "1"):
        raise argparse.ArgumentTypeError("expected 0 or 1")
    return text == "1"


def _mutation(text: str) -> str:
    if text not in MUTATIONS:
        raise argparse.ArgumentTypeError(f"choose from {', '.join(sorted(MUTATIONS))}")
    return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", type=Path, help="key = value file supplying flag defaults")
        sp.add_argument("--json", action="store_true", help="print the JSON report to stdout")

    s = sub.add_parser("simulate", help="seeded random runs with invariant checks")
    common(s)
    s.add_argument("--seed", type=_nonneg, default=0, help="first seed")
    s.add_argument("--runs", type=_pos, default=1000)
    s.add_argument("--max-events", type=_nonneg, default=RANDOM_BOUNDS.max_events_per_run)
    s.add_argument("--max-actors", type=_pos, default=RANDOM_BOUNDS.max_actors)
    s.add_argument("--max-refobs-per-msg", type=_nonneg, default=RANDOM_BOUNDS.max_refobs_per_message)
    s.add_argument("--max-injections", type=_nonneg, default=RANDOM_BOUNDS.max_external_injections)
    s.add_argument("--allow-in", type=_flag01, default=True)
    s.add_argument("--allow-in-until", type=_nonneg, default=150,
                   help="scheduled-event index after which the system winds down")
    s.add_argument("--in-probability", type=float, default=0.1)
    s.add_argument("--snapshot-policy", type=_policy, default=SnapshotPolicy(),
                   help="final-action | periodic:N | never")
    s.add_argument("--check-every", type=_pos, default=10)
    s.add_argument("--msg-count-samples", type=_nonneg, default=0)
    s.add_argument("--self-destruct", action="store_true")
    s.add_argument("--halt-on-violation", action="store_true")
    s.add_argument("--mutation", type=_mutation, action="append", default=[])
    s.add_argument("--workers", type=_pos, default=1)
    s.add_argument("--out", type=Path, default=None, help="output directory (default $DRL_OUT)")
    s.add_argument("--no-traces", action="store_true", help="write report.json only")

    e = sub.add_parser("explore", help="exhaustive bounded exploration")
    common(e)
    e.add_argument("--depth", type=_nonneg, default=EXPLORE_BOUNDS.max_events_per_run)
    e.add_argument("--max-actors", type=_pos, default=EXPLORE_BOUNDS.max_actors)
    e.add_argument("--max-refobs-per-msg", type=_nonneg, default=EXPLORE_BOUNDS.max_refobs_per_message)
    e.add_argument("--allow-in", type=_flag01, default=False)
    e.add_argument("--max-injections", type=_nonneg, default=1)
    e.add_argument("--snapshot-policy", type=_policy, default=SnapshotPolicy())
    e.add_argument("--snapshots-as-choice", action="store_true",
                   help="also branch on Snapshot of every idle actor")
    e.add_argument("--max-states", type=_pos, default=None)
    e.add_argument("--max-seconds", type=float, default=None)
    e.add_argument("--no-symmetry", action="store_true")
    e.add_argument("--max-only", action="store_true",
                   help="check safety of the maximum finalized subset only")
    e.add_argument("--stop-at-first", action="store_true")
    e.add_argument("--mutation", type=_mutation, action="append", default=[])
    e.add_argument("--out", type=Path, default=None, help="also write explore.json here")

    r = sub.add_parser("replay", help="replay a trace file, verifying every hash")
    common(r)
    r.add_argument("trace", type=Path)

    c = sub.add_parser("scenario", help="run a scripted scenario")
    common(c)
    c.add_argument("name", choices=[*workload_scenarios(), "all"])

    d = sub.add_parser("detect", help="run the aggregator on a stored snapshot set")
    common(d)
    d.add_argument("store", type=Path, help="JSON file as written by codec.store_to_json")
    d.add_argument("--brute-force", action="store_true",
                   help="cross-check against exhaustive subset enumeration")
    return p


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        values = read_config_file(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key)
        if act is None or key in ("config", "help"):
            raise UsageError(f"{args.config}: unknown key {key!r} for {args.command}")
        if act.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                converted = act.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{args.config}: bad value for {key}: {exc}") from None
            defaults[key] = [converted] if isinstance(act, argparse._AppendAction) else converted
        else:
            defaults[key] = raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# -- subcommands ------------------------------------------------------------------


def _emit(args, payload: dict) -> None:
    if args.json:
        print(dumps(payload))


def cmd_simulate(args) -> int:
    bounds = ExplorationBounds(
        max_actors=args.max_actors, max_events_per_run=args.max_events,
        max_refobs_per_message=args.max_refobs_per_msg,
        max_external_injections=args.max_injections, allow_in=args.allow_in,
        include_snapshots=False,
    )
    template = RunConfig(
        bounds=bounds, snapshot_policy=args.snapshot_policy, check_every=args.check_every,
        allow_in_until=args.allow_in_until, in_probability=args.in_probability,
        self_destruct=args.self_destruct, msg_count_samples=args.msg_count_samples,
        halt_on_violation=args.halt_on_violation,
    )
    out = args.out or default_out()
    seeds = range(args.seed, args.seed + args.runs)
    # Mutations live in module state, which worker processes would not share.
    workers = 1 if args.mutation else args.workers
    with mutated(*args.mutation):
        summary, _ = run_campaign(seeds, template, out=out, workers=workers,
                                  traces=not args.no_traces)
    latency = summary.mean_detection_latency
    rows = [
        ("runs", summary.runs),
        ("events", summary.events),
        ("violations", summary.violations),
        ("safety violations", summary.safety_violations),
        ("liveness misses", summary.liveness_misses),
        ("terminated actors", summary.terminated),
        ("detections", summary.detections),
        ("mean detection latency (events)", "n/a" if latency is None else f"{latency:.2f}"),
        ("quiescent runs", summary.quiescent_runs),
        ("msg-count samples", summary.msg_count_samples),
        ("msg-count mismatches", summary.msg_count_mismatches),
    ]
    if not args.json:
        for name, value in rows:
            print(f"{name:<34}{value}")
        for kind, n in summary.violations_by_kind.items():
            print(f"  {kind:<32}{n}")
        if summary.failing_seeds:
            print(f"failing seeds: {summary.failing_seeds[:20]}")
        print(f"report: {out / 'report.json'}")
    _emit(args, summary.to_json())
    return EXIT_OK if summary.ok and not summary.liveness_misses else EXIT_FAIL


def cmd_explore(args) -> int:
    bounds = ExplorationBounds(
        max_actors=args.max_actors, max_events_per_run=args.depth,
        max_refobs_per_message=args.max_refobs_per_msg,
        max_external_injections=args.max_injections if args.allow_in else 0,
        allow_in=args.allow_in, include_snapshots=args.snapshots_as_choice,
    )
    cfg = ExploreConfig(
        depth=args.depth, bounds=bounds, snapshot_policy=args.snapshot_policy,
        max_states=args.max_states, max_seconds=args.max_seconds,
        all_finalized_subsets=not args.max_only, stop_at_first_violation=args.stop_at_first,
        symmetry=not args.no_symmetry,
    )
    with mutated(*args.mutation):
        report = explore(cfg)
    body = report.to_json(include_timing=True)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "explore.json").write_text(dumps(body) + "\n")
    if not args.json:
        status = "incomplete" if report.incomplete else "complete"
        print(f"depth {report.depth} ({status}, completed depth {report.completed_depth})")
        print(f"states visited   {report.states}")
        print(f"transitions      {report.transitions}")
        print(f"states per depth {report.states_per_depth}")
        print(f"seconds          {report.seconds:.1f}")
        print("rule coverage:")
        for label, n in report.rule_coverage.items():
            print(f"  {label:<12}{n}")
        print(f"violations       {len(report.violations)}")
        for v in report.violations[:10]:
            print(f"  [{v.kind}] depth {v.depth}: {v.detail}")
    _emit(args, body)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_replay(args) -> int:
    try:
        records = read_trace(args.trace)
        result = replay(records)
    except (OSError, json.JSONDecodeError, TraceFormatError) as exc:
        print(f"cannot replay {args.trace}: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.json:
        if result.ok:
            print(f"ok: {result.replayed} entries reproduced")
        else:
            print(f"divergence at index {result.divergence}: {result.message}")
    _emit(args, result.to_json())
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_scenario(args) -> int:
    names = workload_scenarios() if args.name == "all" else [args.name]
    results = [run_scenario(n) for n in names]
    if not args.json:
        for res in results:
            print(f"{res.name}: {'pass' if res.passed else 'FAIL'}")
            for x in res.expectations:
                mark = "ok  " if x.ok else "FAIL"
                print(f"  {mark} {x.name}" + ("" if x.ok else f" ({x.detail})"))
            for p in res.problems:
                print(f"  FAIL {p}")
    _emit(args, {"scenarios": [r.to_json() for r in results]})
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_detect(args) -> int:
    try:
        store = store_from_json(json.loads(args.store.read_text()))
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"cannot read store {args.store}: {exc}", file=sys.stderr)
        return EXIT_IO
    q = store.snapshots()
    found = sorted(maximum_finalized_subset(q))
    body: dict = {"snapshots": sorted(q), "finalized": found}
    ok = True
    if args.brute_force:
        try:
            best = sorted(brute_force_maximum(q))
        except ValueError as exc:
            best, ok = str(exc), False
        body["brute_force"] = best
        ok = ok and best == found
        body["agrees"] = ok
    if not args.json:
        print(f"snapshots  {sorted(q)}")
        print(f"finalized  {found}")
        if args.brute_force:
            print(f"brute force {body['brute_force']} ({'agrees' if ok else 'DISAGREES'})")
    _emit(args, body)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate,
    "explore": cmd_explore,
    "replay": cmd_replay,
    "scenario": cmd_scenario,
    "detect": cmd_detect,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"drl: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"drl: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"drl: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    with contextlib.suppress(KeyboardInterrupt):
        sys.exit(main())
