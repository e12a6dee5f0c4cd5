"""The eight acceptance criteria, each at its stated tolerance.

Each test records a one-line verdict, printed in the session summary.
The exploration budget can be raised with DRL_ACCEPT_EXPLORE_SECONDS.
"""

from __future__ import annotations

import os
from dataclasses import replace

import pytest
from conftest import ACCEPTANCE_LINES

from drl.aggregator import brute_force_maximum, maximum_finalized_subset
from drl.harness.campaign import run_campaign
from drl.harness.explore import EXPLORE_BOUNDS, ExploreConfig, explore
from drl.harness.replay import read_trace, replay
from drl.harness.scenarios import run_scenario
from drl.harness.simulation import RANDOM_BOUNDS, RunConfig
from drl.harness.stores import draw_sets

pytestmark = pytest.mark.slow

CAMPAIGN = RunConfig(bounds=RANDOM_BOUNDS, check_every=10, allow_in_until=150)
EXPLORE_SECONDS = float(os.environ.get("DRL_ACCEPT_EXPLORE_SECONDS", "540"))


def verdict(n: int, name: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[n] = f"criterion {n} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="module")
def campaign(tmp_path_factory):
    out = tmp_path_factory.mktemp("campaign")
    summary, reports = run_campaign(range(1000), CAMPAIGN, out)
    return out, summary, reports


def test_1_safety(campaign):
    _, summary, reports = campaign
    ok = summary.safety_violations == 0
    verdict(1, "safety", ok, f"{summary.safety_violations} violations over {summary.runs} runs, "
            f"{summary.detections} detections, {sum(r.checks for r in reports)} checks")
    assert ok


def test_2_liveness(campaign):
    _, summary, _ = campaign
    ok = summary.liveness_misses == 0
    verdict(2, "liveness", ok, f"{summary.liveness_misses} misses among "
            f"{summary.terminated} terminated actors")
    assert ok


def test_3_chain_lemma():
    r = explore(ExploreConfig(depth=8, bounds=EXPLORE_BOUNDS, max_seconds=EXPLORE_SECONDS))
    broken = [v for v in r.violations if v.kind == "chain-lemma"]
    ok = not broken and not r.incomplete
    verdict(3, "chain lemma", ok, f"{len(broken)} violations, {r.states} states visited, "
            f"completed depth {r.completed_depth} of 8 in {r.seconds:.0f}s, "
            f"per depth {r.states_per_depth}")
    assert not broken
    assert not r.incomplete, f"exploration stopped at depth {r.completed_depth}"


def test_4_simple_garbage(campaign):
    _, summary, reports = campaign
    bad = summary.violations_by_kind.get("simple-garbage", 0)
    hits = sum(r.simple_garbage_hits for r in reports)
    verdict(4, "simple garbage", bad == 0, f"{bad} violations, {hits} positive local tests")
    assert bad == 0


def test_5_maximum_finalized_subset():
    sets = draw_sets(500, seed=0)
    wrong = []
    for s in sets:
        got = frozenset(maximum_finalized_subset(s.q))
        try:
            best = brute_force_maximum(s.q)
        except ValueError as exc:
            best = str(exc)
        if got != best:
            wrong.append(f"{s.origin} seed {s.seed}: pruning {sorted(got)}, brute force {best}")
    corrupted = sum(s.origin != "run" for s in sets)
    verdict(5, "maximum finalized subset", not wrong,
            f"{len(wrong)} of {len(sets)} differ ({corrupted} corrupted)"
            + (f"; first: {wrong[0]}" if wrong else ""))
    assert not wrong, wrong


def test_6_message_counts():
    summary, _ = run_campaign(range(100), replace(CAMPAIGN, msg_count_samples=20))
    ok = summary.msg_count_mismatches == 0 and summary.msg_count_samples > 0
    verdict(6, "message counts", ok, f"{summary.msg_count_mismatches} mismatches in "
            f"{summary.msg_count_samples} samples over {summary.runs} runs")
    assert ok


def test_7_scenarios():
    results = {n: run_scenario(n) for n in ("fig1", "fig2", "chain")}
    failed = [n for n, r in results.items() if not r.passed]
    verdict(7, "scenarios", not failed, "failed: " + ", ".join(failed) if failed
            else f"{sum(len(r.expectations) for r in results.values())} expectations hold")
    assert not failed


def test_8_determinism(campaign, tmp_path):
    out, _, _ = campaign
    diverged = []
    traces = sorted((out / "traces").iterdir())
    for path in traces:
        res = replay(read_trace(path))
        if not res.ok:
            diverged.append(f"{path.name}: {res.message}")
    run_campaign(range(1000), CAMPAIGN, tmp_path / "again", traces=False)
    same = (out / "report.json").read_bytes() == (tmp_path / "again/report.json").read_bytes()
    ok = not diverged and same
    verdict(8, "determinism", ok, f"{len(traces) - len(diverged)} of {len(traces)} traces "
            f"replayed, report {'byte-identical' if same else 'differs'}")
    assert not diverged, diverged[:5]
    assert same
