from __future__ import annotations

import random

from drl.aggregator import SnapshotStore
from drl.model import Configuration, initial_configuration
from drl.semantics import ExplorationBounds, Ledger, apply_event, enabled_events

SMALL = ExplorationBounds(max_actors=4, max_events_per_run=60, max_refobs_per_message=2,
                          max_external_injections=2, allow_in=True, include_snapshots=True)


def random_walk(seed: int, steps: int, bounds: ExplorationBounds = SMALL):
    """Uniform walk over enabled events; yields (before, event, after, ledger, store, t)."""
    rng = random.Random(f"test-walk-{seed}")
    k: Configuration = initial_configuration()
    ledger = Ledger.initial(k)
    store = SnapshotStore()
    injections = 0
    for t in range(1, steps + 1):
        evs = enabled_events(k, bounds, injections)
        if not evs:
            return
        e = rng.choice(evs)
        before = k
        k = apply_event(before, e, store, t)
        ledger.observe(before, e, t)
        if e.label == "In":
            injections += 1
        yield before, e, k, ledger, store, t


# One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
