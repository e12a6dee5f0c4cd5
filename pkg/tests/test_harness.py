from __future__ import annotations

import json
from dataclasses import replace

import pytest

from drl.events import RULE_LABELS
from drl.harness.campaign import run_campaign
from drl.harness.explore import ExploreConfig, explore
from drl.harness.policies import SnapshotPolicy
from drl.harness.replay import read_trace, replay, trace_lines
from drl.harness.scenarios import SCENARIOS, run_scenario
from drl.harness.simulation import RANDOM_BOUNDS, RunConfig, run_random
from drl.semantics import ExplorationBounds, mutated

SHORT = RunConfig(bounds=replace(RANDOM_BOUNDS, max_events_per_run=120), allow_in_until=60)


def test_same_seed_same_run():
    a, _ = run_random(replace(SHORT, seed=5))
    b, _ = run_random(replace(SHORT, seed=5))
    assert a.to_json() == b.to_json()
    c, _ = run_random(replace(SHORT, seed=6))
    assert c.trace_digest != a.trace_digest


def test_campaign_report_is_byte_identical(tmp_path):
    run_campaign(range(4), SHORT, tmp_path / "a")
    run_campaign(range(4), SHORT, tmp_path / "b")
    assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
    assert sorted(p.name for p in (tmp_path / "a/traces").iterdir()) == [
        f"run-{s}.jsonl" for s in range(4)]


def test_campaign_is_clean_and_workers_do_not_change_it():
    one, _ = run_campaign(range(6), SHORT)
    two, _ = run_campaign(range(6), SHORT, workers=2)
    assert one.ok and one.liveness_misses == 0
    assert one.to_json() == two.to_json()


def test_never_policy_detects_nothing():
    report, _ = run_random(replace(SHORT, seed=3, snapshot_policy=SnapshotPolicy("never")))
    assert report.detected == [] and report.liveness_misses == []


def test_replay_reproduces_hashes():
    report, sim = run_random(replace(SHORT, seed=11))
    res = replay(json.loads(line) for line in trace_lines(sim))
    assert res.ok, res.message
    assert res.report.to_json() == report.to_json()


def test_replay_of_a_truncated_trace_checks_the_prefix():
    _, sim = run_random(replace(SHORT, seed=11))
    assert replay(json.loads(x) for x in trace_lines(sim)[:21]).ok


def test_replay_reports_an_edited_hash(tmp_path):
    _, sim = run_random(replace(SHORT, seed=11))
    records = [json.loads(x) for x in trace_lines(sim)]
    records[3]["hash"] = "0" * 64
    res = replay(records)
    assert not res.ok and res.divergence == records[3]["index"]
    path = tmp_path / "t.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records))
    assert read_trace(path) == records


def test_replay_rejects_a_missing_header():
    with pytest.raises(ValueError):
        replay([{"type": "event"}])


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_scenario_expectations_hold(name):
    res = run_scenario(name)
    assert res.passed, [e for e in res.expectations if not e.ok] + res.problems


def test_policies_parse():
    assert SnapshotPolicy.parse("periodic:5") == SnapshotPolicy("periodic", 5)
    assert str(SnapshotPolicy.parse("never")) == "never"
    for bad in ("periodic:0", "periodic:x", "never:3", "sometimes"):
        with pytest.raises(ValueError):
            SnapshotPolicy.parse(bad)


TINY = ExplorationBounds(max_actors=1, max_refobs_per_message=0, allow_in=False,
                         include_snapshots=False)


def test_explore_depth_zero_is_the_initial_state():
    r = explore(ExploreConfig(depth=0, bounds=TINY))
    assert r.states == 1 and r.transitions == 0 and r.ok


def test_explore_counts_by_hand():
    # Depth 1: Idle, SendRelease to 0 and to 1, Send on 0.0 and on 0.1.
    r = explore(ExploreConfig(depth=2, bounds=TINY))
    assert r.states_per_depth == [1, 5, 14]
    assert r.transitions == 23
    assert r.ok and not r.incomplete and r.completed_depth == 2


def test_symmetry_only_merges_states():
    bounds = ExplorationBounds(max_actors=2, max_refobs_per_message=1, allow_in=False,
                               include_snapshots=False)
    plain = explore(ExploreConfig(depth=3, bounds=bounds, symmetry=False))
    merged = explore(ExploreConfig(depth=3, bounds=bounds))
    assert merged.states <= plain.states
    assert plain.ok and merged.ok


def test_explore_budget_marks_the_report_incomplete():
    r = explore(ExploreConfig(depth=4, max_states=50))
    assert r.incomplete and r.completed_depth < 4


@pytest.mark.slow
def test_small_exploration_covers_every_rule():
    bounds = ExplorationBounds(max_actors=2, max_refobs_per_message=1, allow_in=True,
                               max_external_injections=1, include_snapshots=True)
    r = explore(ExploreConfig(depth=5, bounds=bounds, all_finalized_subsets=False))
    assert r.ok
    assert [lab for lab in RULE_LABELS if r.rule_coverage[lab] == 0] == []


@pytest.mark.parametrize("mutation,depth", [("skip-inc-sent", 2), ("skip-created-using", 2),
                                            ("early-release", 4)])
def test_explorer_catches_broken_rules(mutation, depth):
    with mutated(mutation):
        r = explore(ExploreConfig(depth=depth, stop_at_first_violation=True))
    assert not r.ok, mutation
