from __future__ import annotations

import random

import pytest
from conftest import random_walk
from hypothesis import given, settings
from hypothesis import strategies as st

from drl import oracle
from drl.aggregator import (
    SnapshotStore,
    appears_blocked,
    brute_force_finalized_subsets,
    brute_force_maximum,
    detect,
    is_closed,
    is_finalized,
    is_relevant,
    maximum_finalized_subset,
    prune_in_order,
    q_derives,
    unreleased_refobs,
)
from drl.deduction import Unreleased
from drl.model import (
    Activated, Created, CreatedUsing, KnowledgeSet, RecvCount, Refob, Released, SentCount, Token,
)

# Two idle actors, 2 and 3, each holding a refob to the other; the parent 0 has released both.
A = Refob(Token(2, 1), 2, 3)   # 2 -> 3, created by 0 using 0.3
B = Refob(Token(3, 1), 3, 2)   # 3 -> 2


def pair(sent_a=0, recv_a=0) -> dict:
    return {
        2: KnowledgeSet.of(Activated(A), SentCount(A.token, sent_a), Created(B)),
        3: KnowledgeSet.of(Activated(B), Created(A), RecvCount(A.token, recv_a)),
    }


def test_unreleased_needs_created_and_no_released():
    q = pair()
    assert unreleased_refobs(q) == {A, B}
    assert q_derives(q, Unreleased(A))
    q[3] = q[3].add(Released(A))
    assert not q_derives(q, Unreleased(A))


def test_pair_is_finalized_when_counts_agree():
    q = pair(1, 1)
    assert is_closed(q) and appears_blocked(q, 2) and appears_blocked(q, 3)
    assert is_finalized(q)
    assert set(maximum_finalized_subset(q)) == {2, 3}


def test_message_in_flight_prunes_the_target_then_its_dependants():
    q = pair(sent_a=2, recv_a=1)
    assert not appears_blocked(q, 3)
    assert not is_relevant(q, A)
    # 3 goes first; without 3's snapshot, B (3 -> 2) has no owner in the set, so 2 goes too.
    assert maximum_finalized_subset(q) == {}


def test_missing_owner_snapshot_breaks_closure():
    q = {3: pair()[3]}
    assert not is_closed(q)
    assert maximum_finalized_subset(q) == {}


def test_appears_blocked_needs_membership():
    with pytest.raises(ValueError):
        appears_blocked({}, 2)


def test_empty_store_detects_nothing():
    assert detect(SnapshotStore()) == set()


# -- generated snapshot sets ---------------------------------------------------

ADDRS = [2, 3, 4, 5, 6, 7]
OWNERS = ADDRS + [1]        # 1 is an external actor
tokens = st.builds(Token, st.sampled_from(ADDRS), st.integers(0, 2))
refobs = st.builds(Refob, tokens, st.sampled_from(OWNERS), st.sampled_from(ADDRS))


@st.composite
def knowledge(draw):
    rs = draw(st.lists(refobs, max_size=5))
    facts = []
    for r in rs:
        kind = draw(st.sampled_from(["Created", "Released", "Activated", "Sent", "Recv", "Using"]))
        if kind == "Created":
            facts.append(Created(r))
        elif kind == "Released":
            facts.append(Released(r))
        elif kind == "Activated":
            facts.append(Activated(r))
        elif kind == "Using":
            via = Refob(draw(tokens), draw(st.sampled_from(ADDRS)), r.target)
            facts.append(CreatedUsing(via, r))
        else:
            n = draw(st.integers(0, 2))
            facts.append((SentCount if kind == "Sent" else RecvCount)(r.token, n))
    phi = KnowledgeSet()
    for f in facts:
        try:
            phi = phi.add(f)
        except ValueError:
            pass
    return phi


snapshot_sets = st.dictionaries(st.sampled_from(ADDRS), knowledge(), max_size=6)


@settings(max_examples=300, deadline=None)
@given(snapshot_sets)
def test_pruning_result_is_finalized_and_stable(q):
    once = maximum_finalized_subset(q)
    assert set(once) <= set(q)
    assert is_finalized(once)
    assert maximum_finalized_subset(once) == once


# Stores where Created and Released facts sit only at the target (no CreatedUsing),
# as after every pending Info has been delivered. Here a refob's Unreleased status
# is the same in every subset that contains its target, so pruning never removes
# an actor that some finalized subset keeps.


@st.composite
def target_held_sets(draw):
    members = draw(st.sets(st.sampled_from(ADDRS), max_size=6))
    q = {a: KnowledgeSet() for a in members}
    for i in range(draw(st.integers(0, 8))):
        r = Refob(Token(draw(st.sampled_from(ADDRS)), i),
                  draw(st.sampled_from(OWNERS)), draw(st.sampled_from(ADDRS)))
        facts = []
        if r.target in q and draw(st.booleans()):
            facts.append((r.target, Created(r)))
            if draw(st.integers(0, 3)) == 0:
                facts.append((r.target, Released(r)))
            facts.append((r.target, RecvCount(r.token, draw(st.integers(0, 2)))))
        if r.owner in q and draw(st.booleans()):
            facts.append((r.owner, Activated(r)))
            facts.append((r.owner, SentCount(r.token, draw(st.integers(0, 2)))))
        for a, f in facts:
            try:
                q[a] = q[a].add(f)
            except ValueError:
                pass
    return q


@settings(max_examples=300, deadline=None)
@given(target_held_sets())
def test_pruning_matches_brute_force_on_target_held_stores(q):
    assert frozenset(maximum_finalized_subset(q)) == brute_force_maximum(q)


@settings(max_examples=200, deadline=None)
@given(target_held_sets(), st.integers(0, 2**32))
def test_pruning_order_does_not_matter_on_target_held_stores(q, seed):
    rng = random.Random(seed)
    assert prune_in_order(q, rng.choice) == maximum_finalized_subset(q)
    for s in brute_force_finalized_subsets(q):
        assert s <= set(maximum_finalized_subset(q))


# Without that restriction, dropping the only member that knows a refob was created
# also drops the refob, so a smaller subset can be finalized when the larger is not.

def test_finalized_subsets_need_not_have_a_unique_maximum():
    x = Refob(Token(3, 0), 2, 2)
    q = {3: KnowledgeSet.of(Created(x)), 2: KnowledgeSet()}
    assert set(maximum_finalized_subset(q)) == {3}
    assert sorted(map(sorted, brute_force_finalized_subsets(q))) == [[], [2], [3]]
    with pytest.raises(ValueError):
        brute_force_maximum(q)


def test_pruning_order_matters_when_created_lives_elsewhere():
    a, b = Refob(Token(2, 0), 2, 2), Refob(Token(2, 1), 2, 3)
    q = {2: KnowledgeSet.of(Created(a), Created(b)), 3: KnowledgeSet()}
    assert maximum_finalized_subset(q) == {}
    assert set(prune_in_order(q, lambda doomed: 2 if 2 in doomed else doomed[0])) == {3}
    assert brute_force_maximum(q) == frozenset({3})


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_every_finalized_subset_of_a_reachable_store_is_terminated(seed):
    for _, _, k, led, store, _ in random_walk(seed, 60):
        terminated = oracle.terminated_set(k, led)
        for s in brute_force_finalized_subsets(store.snapshots()):
            assert s <= terminated
