"""Snapshot sets for testing the aggregator, drawn from runs and then perturbed.

A run records every snapshot each actor takes. A drawn set picks, for up to
``max_size`` actors, one of that actor's snapshots (not necessarily the
latest, as a lagging aggregator would see it). A corrupted set then applies
one random perturbation that no run could produce.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from drl.harness.policies import SnapshotPolicy
from drl.harness.simulation import RANDOM_BOUNDS, RunConfig, Simulation, scheduler_rng
from drl.model import Address, KnowledgeSet, Refob, Token

# Creator address for forged tokens; far above any address a bounded run allocates.
FORGED_CREATOR = 10_000
CORRUPTIONS = ("bump-sent", "bump-recv", "drop-fact", "drop-activated", "add-released",
               "forge-created")


@dataclass
class DrawnSet:
    seed: int
    origin: str  # "run" or "corrupt:<kind>"
    q: dict[Address, KnowledgeSet]


def snapshot_history(seed: int, max_events: int = 200) -> dict[Address, list[KnowledgeSet]]:
    """Every distinct snapshot each actor took during one random run."""
    cfg = RunConfig(seed=seed, bounds=replace(RANDOM_BOUNDS, max_events_per_run=max_events),
                    snapshot_policy=SnapshotPolicy("final-action"), allow_in_until=max_events // 2,
                    check_every=max_events + 1, final_sweep=False)
    sim = Simulation(cfg)
    rng = scheduler_rng(seed)
    hist: dict[Address, list[KnowledgeSet]] = {}
    while sim.scheduled < max_events:
        e = sim.choose(rng)
        if e is None:
            break
        sim.step_scheduled(e)
        for a, (phi, _) in sim.store.entries.items():
            seen = hist.setdefault(a, [])
            if not seen or seen[-1] != phi:
                seen.append(phi)
    return hist


def _corrupt(q: dict[Address, KnowledgeSet], rng: random.Random) -> tuple[str, dict] | None:
    members = sorted(q)
    kinds = list(CORRUPTIONS)
    rng.shuffle(kinds)
    for kind in kinds:
        a = rng.choice(members)
        phi = q[a]
        new = None
        if kind == "bump-sent" and phi.sent:
            t = rng.choice(sorted(phi.sent))
            new = phi.with_counts(sent={**phi.sent, t: phi.sent[t] + 1})
        elif kind == "bump-recv" and phi.recv:
            t = rng.choice(sorted(phi.recv))
            new = phi.with_counts(recv={**phi.recv, t: phi.recv[t] + 1})
        elif kind == "drop-fact" and len(phi):
            new = phi.remove(rng.choice(list(phi)))
        elif kind == "drop-activated" and phi.activated:
            r = rng.choice(sorted(phi.activated))
            new = KnowledgeSet(phi.created, phi.released, phi.activated - {r},
                               phi.created_using, phi.sent, phi.recv)
        elif kind == "add-released":
            into = sorted(r for r in phi.derived_created if r.target == a and r not in phi.released)
            if into:
                r = rng.choice(into)
                new = KnowledgeSet(phi.created, phi.released | {r}, phi.activated,
                                   phi.created_using, phi.sent, phi.recv)
        elif kind == "forge-created":
            # A Created fact for a refob from another member that it never received.
            r = Refob(Token(FORGED_CREATOR, len(phi.created)), rng.choice(members), a)
            new = KnowledgeSet(phi.created | {r}, phi.released, phi.activated,
                               phi.created_using, phi.sent, phi.recv)
        if new is not None and new != phi:
            return kind, {**q, a: new}
    return None


def draw_sets(n: int, seed: int = 0, max_size: int = 8, corrupt_fraction: float = 0.5,
              max_events: int = 200) -> list[DrawnSet]:
    """``n`` snapshot sets with 1..max_size members; about ``corrupt_fraction`` of them perturbed."""
    rng = random.Random(f"drl-stores-{seed}")
    out: list[DrawnSet] = []
    run_seed = 0
    while len(out) < n:
        hist = snapshot_history(run_seed, max_events)
        run_seed += 1
        if not hist:
            continue
        for _ in range(4):
            if len(out) >= n:
                break
            actors = sorted(hist)
            size = rng.randint(1, min(max_size, len(actors)))
            q = {a: rng.choice(hist[a]) for a in sorted(rng.sample(actors, size))}
            origin = "run"
            if rng.random() < corrupt_fraction:
                res = _corrupt(q, rng)
                if res is not None:
                    origin, q = f"corrupt:{res[0]}", res[1]
            out.append(DrawnSet(run_seed - 1, origin, q))
    return out
