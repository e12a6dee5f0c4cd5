"""Bounded exhaustive exploration of every interleaving from the initial configuration.

Breadth-first by depth. A state is (configuration, ledger, snapshot store);
states are deduplicated on their canonical keys, so each distinct state is
checked once. One step applies one enabled event, then whatever snapshots the
snapshot policy inserts after it.

Memory is what runs out first, so the seen set holds 128-bit digests of the
keys and the frontier holds pickled states.
"""

from __future__ import annotations

import hashlib
import pickle
import time
from collections import Counter
from dataclasses import asdict, dataclass, field

from drl import oracle
from drl.aggregator import SnapshotStore, detect
from drl.codec import event_to_json
from drl.events import RULE_LABELS, Event
from drl.harness.checks import (
    check_all_finalized_subsets,
    check_safety,
    check_simple_garbage,
    check_state,
    check_step,
)
from drl.harness.policies import SnapshotPolicy
from drl.harness.symmetry import canonical_key
from drl.model import Configuration, initial_configuration
from drl.semantics import ExplorationBounds, Ledger, apply_event, enabled_events

EXPLORE_BOUNDS = ExplorationBounds(
    max_actors=3, max_events_per_run=8, max_refobs_per_message=2,
    max_external_injections=0, allow_in=False, include_snapshots=False,
)


@dataclass(frozen=True)
class ExploreConfig:
    depth: int = 8
    bounds: ExplorationBounds = EXPLORE_BOUNDS
    snapshot_policy: SnapshotPolicy = SnapshotPolicy()
    # Stop (and flag the report incomplete) after this many distinct states.
    max_states: int | None = None
    # Same, for wall-clock seconds.
    max_seconds: float | None = None
    # Check every finalized subset of each store, not only the maximum one.
    all_finalized_subsets: bool = True
    stop_at_first_violation: bool = False
    # Identify states that differ only by a renaming of refob tokens.
    symmetry: bool = True


@dataclass
class ExploreViolation:
    kind: str
    depth: int
    detail: str
    path: list[dict]


@dataclass
class ExploreReport:
    depth: int
    states: int
    transitions: int
    states_per_depth: list[int]
    rule_coverage: dict[str, int]
    violations: list[ExploreViolation]
    incomplete: bool
    # Deepest level whose every state was generated and checked.
    completed_depth: int = 0
    seconds: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self, include_timing: bool = False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("seconds")
        return d


def _path(node) -> list[Event]:
    out = []
    while node is not None:
        e, node = node
        out.append(e)
    return out[::-1]


def _check_state(k: Configuration, ledger: Ledger, store: SnapshotStore,
                 all_subsets: bool) -> list[tuple[str, str]]:
    out = [("state", p) for p in check_state(k, ledger)]
    out += [("chain-lemma", p) for p in oracle.check_chain_lemma(k, ledger)]
    terminated = oracle.terminated_set(k, ledger)
    out += [("simple-garbage", p) for p in check_simple_garbage(k, ledger, terminated)]
    out += [("safety", p) for p in check_safety(detect(store), terminated)]
    if all_subsets:
        out += [("safety", p) for p in check_all_finalized_subsets(store, terminated)]
    return out


def explore(cfg: ExploreConfig = ExploreConfig()) -> ExploreReport:
    start = time.monotonic()
    k0 = initial_configuration()
    root = (k0, Ledger.initial(k0), SnapshotStore(), None)
    def state_key(k, led, st) -> bytes:
        key = canonical_key(k, led, st) if cfg.symmetry else (k.key(), led.key(), st.key())
        return hashlib.blake2b(repr(key).encode(), digest_size=16).digest()

    seen = {state_key(k0, root[1], root[2])}
    frontier = [(pickle.dumps(root[:3], pickle.HIGHEST_PROTOCOL), None)]
    per_depth = [1]
    coverage: Counter[str] = Counter({label: 0 for label in RULE_LABELS})
    violations: list[ExploreViolation] = []
    transitions = 0
    incomplete = False
    completed = 0

    def record(kind: str, depth: int, detail: str, node) -> None:
        violations.append(ExploreViolation(
            kind, depth, detail, [event_to_json(e) for e in _path(node)]))

    for kind, detail in _check_state(k0, root[1], root[2], cfg.all_finalized_subsets):
        record(kind, 0, detail, None)

    for depth in range(1, cfg.depth + 1):
        nxt = []
        for packed, node in frontier:
            k, ledger, store = pickle.loads(packed)
            for e in enabled_events(k, cfg.bounds):
                transitions += 1
                coverage[e.label] += 1
                led, st = ledger.copy(), store.copy()
                k2 = apply_event(k, e, st, depth)
                led.observe(k, e, depth)
                child = (e, node)
                for p in check_step(k, e, k2, led):
                    record("step", depth, p, child)
                for snap in cfg.snapshot_policy.after(e, k2, depth):
                    apply_event(k2, snap, st, depth)
                key = state_key(k2, led, st)
                if key in seen:
                    continue
                seen.add(key)
                for kind, detail in _check_state(k2, led, st, cfg.all_finalized_subsets):
                    record(kind, depth, detail, child)
                nxt.append((pickle.dumps((k2, led, st), pickle.HIGHEST_PROTOCOL), child))
                if ((cfg.max_states is not None and len(seen) >= cfg.max_states)
                        or (cfg.max_seconds is not None
                            and time.monotonic() - start > cfg.max_seconds)):
                    incomplete = True
                    break
                if cfg.stop_at_first_violation and violations:
                    break
            if incomplete or (cfg.stop_at_first_violation and violations):
                break
        frontier = []
        per_depth.append(len(nxt))
        if not incomplete and not (cfg.stop_at_first_violation and violations):
            completed = depth
        frontier = nxt
        if incomplete or (cfg.stop_at_first_violation and violations) or not frontier:
            break

    return ExploreReport(
        depth=cfg.depth,
        states=len(seen),
        transitions=transitions,
        states_per_depth=per_depth,
        rule_coverage=dict(sorted(coverage.items())),
        violations=violations,
        incomplete=incomplete,
        completed_depth=completed,
        seconds=time.monotonic() - start,
    )
