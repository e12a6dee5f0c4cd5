"""Snapshot store and termination detection over sets of snapshots.

A snapshot set ``Q`` maps actor addresses to knowledge sets. ``Q`` derives a
positive fact if some member does; ``Unreleased(x)`` needs some member to
know ``Created(x)`` and no member to know ``Released(x)``.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from drl.deduction import Query, Unreleased, derives, recv_count, sent_count
from drl.model import Address, Created, KnowledgeSet, Refob, Released

SnapshotSet = Mapping[Address, KnowledgeSet]


@dataclass
class SnapshotStore:
    """Most recent snapshot per actor, with the event index it was taken at."""

    entries: dict[Address, tuple[KnowledgeSet, int]] = field(default_factory=dict)

    def record(self, actor: Address, knowledge: KnowledgeSet, t: int) -> None:
        self.entries[actor] = (knowledge, t)

    def forget(self, actors: Iterable[Address]) -> None:
        for a in actors:
            self.entries.pop(a, None)

    def snapshots(self) -> dict[Address, KnowledgeSet]:
        return {a: phi for a, (phi, _) in self.entries.items()}

    def taken_at(self, actor: Address) -> int:
        return self.entries[actor][1]

    def copy(self) -> SnapshotStore:
        return SnapshotStore(dict(self.entries))

    def key(self) -> tuple:
        return tuple((a, phi.key()) for a, (phi, _) in sorted(self.entries.items()))

    def __len__(self) -> int:
        return len(self.entries)


def q_derives(q: SnapshotSet, query: Query) -> bool:
    if isinstance(query, Unreleased):
        r = query.refob
        return (any(derives(phi, Created(r)) for phi in q.values())
                and not any(derives(phi, Released(r)) for phi in q.values()))
    return any(derives(phi, query) for phi in q.values())


def unreleased_refobs(q: SnapshotSet) -> set[Refob]:
    """Every refob ``x`` with ``Q |- Unreleased(x)``."""
    created: set[Refob] = set()
    released: set[Refob] = set()
    for phi in q.values():
        created |= phi.derived_created
        released |= phi.released
    return created - released


def is_relevant(q: SnapshotSet, r: Refob) -> bool:
    """Whether an unreleased refob into a member is backed by its owner's snapshot."""
    if r.target not in q:
        return True
    owner = q.get(r.owner)
    return (
        owner is not None
        and r in owner.activated
        and sent_count(owner, r.token) == recv_count(q[r.target], r.token)
    )


def is_closed(q: SnapshotSet) -> bool:
    return all(
        r.target not in q or (r.owner in q and r in q[r.owner].activated)
        for r in unreleased_refobs(q)
    )


def appears_blocked(q: SnapshotSet, b: Address) -> bool:
    if b not in q:
        raise ValueError(f"{b} has no snapshot in the set")
    for r in unreleased_refobs(q):
        if r.target != b:
            continue
        if r.owner not in q:
            return False
        if sent_count(q[r.owner], r.token) != recv_count(q[b], r.token):
            return False
    return True


def is_finalized(q: SnapshotSet) -> bool:
    return is_closed(q) and all(appears_blocked(q, b) for b in q)


def irrelevant_targets(q: SnapshotSet) -> set[Address]:
    return {r.target for r in unreleased_refobs(q) if not is_relevant(q, r)}


def maximum_finalized_subset(q: SnapshotSet) -> dict[Address, KnowledgeSet]:
    """Prune targets of irrelevant unreleased refobs until nothing changes."""
    current = dict(q)
    while True:
        doomed = irrelevant_targets(current)
        if not doomed:
            return current
        for b in doomed:
            del current[b]


def prune_in_order(q: SnapshotSet, choose) -> dict[Address, KnowledgeSet]:
    """Pruning that removes one irrelevant target at a time, picked by ``choose``."""
    current = dict(q)
    while True:
        doomed = sorted(irrelevant_targets(current))
        if not doomed:
            return current
        del current[choose(doomed)]


def brute_force_finalized_subsets(q: SnapshotSet) -> list[frozenset[Address]]:
    members = sorted(q)
    out = []
    for n in range(len(members) + 1):
        for combo in itertools.combinations(members, n):
            if is_finalized({a: q[a] for a in combo}):
                out.append(frozenset(combo))
    return out


def brute_force_maximum(q: SnapshotSet) -> frozenset[Address]:
    """Largest finalized subset by exhaustive enumeration (exponential; tests only)."""
    subsets = brute_force_finalized_subsets(q)
    best = max(len(s) for s in subsets)
    winners = [s for s in subsets if len(s) == best]
    if len(winners) > 1:
        raise ValueError(f"no unique largest finalized subset: {sorted(map(sorted, winners))}")
    return winners[0]


def detect(store: SnapshotStore) -> set[Address]:
    return set(maximum_finalized_subset(store.snapshots()))
