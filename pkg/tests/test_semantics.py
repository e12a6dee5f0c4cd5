from __future__ import annotations

import pytest
from conftest import SMALL, random_walk
from hypothesis import given, settings
from hypothesis import strategies as st

from drl.aggregator import SnapshotStore
from drl.deduction import recv_count, sent_count
from drl.events import (
    Compaction, Idle, In, Info, InfoOut, Out, Receive, Release, ReleaseOut, Send, SendInfo,
    SendRelease, Snapshot, Spawn,
)
from drl.harness.checks import check_state, check_step
from drl.model import (
    BOTTOM, Activated, AppMsg, Created, CreatedUsing, InfoMsg, Refob, Released, ReleaseMsg,
    Token, initial_configuration,
)
from drl.semantics import (
    ExplorationBounds,
    Ledger,
    LedgerError,
    Lifecycle,
    NotEnabled,
    RejectedEvent,
    apply_event,
    enabled_events,
    mutated,
)

X_EXT = Refob(Token(0, 0), 0, 1)
Y_SELF = Refob(Token(0, 1), 0, 0)


def run(*events, k=None, store=None):
    k = k or initial_configuration()
    for e in events:
        k = apply_event(k, e, store)
    return k


def spawned():
    """Actor 0 spawns 2 (refob 0.2) and 3 (refob 0.3); both children go idle."""
    return run(Spawn(Token(0, 2), 0, 2), Spawn(Token(0, 3), 0, 3), Idle(2), Idle(3))


def test_spawn():
    k = run(Spawn(Token(0, 2), 0, 2))
    x, y = Refob(Token(0, 2), 0, 2), Refob(Token(2, 0), 2, 2)
    assert Activated(x) in k.knowledge(0)
    assert set(k.knowledge(2)) == {Created(x), Created(y), Activated(y)}
    assert k.alpha[2].busy and k.next_address == 3


def test_spawn_needs_fresh_names():
    with pytest.raises(RejectedEvent):
        run(Spawn(Token(0, 1), 0, 2))
    with pytest.raises(RejectedEvent):
        run(Spawn(Token(0, 2), 0, 1))


def test_send_creates_refobs_and_counts():
    k = spawned()
    x, y = Refob(Token(0, 2), 0, 2), Refob(Token(0, 3), 0, 3)
    k = run(Send(x.token, (y.token,), (Token(0, 4),), 0, 2, (3,)), k=k)
    z = Refob(Token(0, 4), 2, 3)
    phi = k.knowledge(0)
    assert sent_count(phi, x.token) == 1
    assert CreatedUsing(y, z) in phi
    assert k.mailbox(2) == (AppMsg(x.token, (z,)),)


def test_send_needs_active_refobs():
    k = spawned()
    with pytest.raises(RejectedEvent):
        run(Send(Token(9, 9), (), (), 0, 2, ()), k=k)
    with pytest.raises(RejectedEvent):
        run(Send(Token(0, 2), (Token(9, 9),), (Token(0, 4),), 0, 2, (3,)), k=k)


def test_receive_activates_payload():
    k = spawned()
    k = run(Send(Token(0, 2), (Token(0, 3),), (Token(0, 4),), 0, 2, (3,)), k=k)
    z = Refob(Token(0, 4), 2, 3)
    k = run(Receive(Token(0, 2), 2, (z,)), k=k)
    assert k.alpha[2].busy
    assert Activated(z) in k.knowledge(2)
    assert recv_count(k.knowledge(2), Token(0, 2)) == 1
    assert not k.mailbox(2)


def test_receive_needs_idle_recipient():
    k = run(Spawn(Token(0, 2), 0, 2), Send(Token(0, 2), (), (), 0, 2, ()))
    with pytest.raises(RejectedEvent):
        run(Receive(Token(0, 2), 2, ()), k=k)


def test_idle_needs_busy():
    k = run(Idle(0))
    with pytest.raises(RejectedEvent):
        run(Idle(0), k=k)


def test_info_round_trip():
    k = spawned()
    k = run(Send(Token(0, 2), (Token(0, 3),), (Token(0, 4),), 0, 2, (3,)), k=k)
    y, z = Refob(Token(0, 3), 0, 3), Refob(Token(0, 4), 2, 3)
    k = run(SendInfo(y.token, z.token, 0, 2, 3), k=k)
    assert CreatedUsing(y, z) not in k.knowledge(0)
    assert sent_count(k.knowledge(0), y.token) == 1
    assert k.mailbox(3) == (InfoMsg(y.token, z),)
    k = run(Info(y.token, z.token, 2, 3), k=k)
    assert Created(z) in k.knowledge(3)
    assert recv_count(k.knowledge(3), y.token) == 1
    assert k.alpha[3].idle


def test_send_release_waits_for_created_using():
    k = spawned()
    k = run(Send(Token(0, 2), (Token(0, 3),), (Token(0, 4),), 0, 2, (3,)), k=k)
    with pytest.raises(RejectedEvent):
        run(SendRelease(Token(0, 3), 0, 3), k=k)


def test_send_release_carries_the_send_count():
    k = spawned()
    x = Refob(Token(0, 2), 0, 2)
    k = run(Send(x.token, (), (), 0, 2, ()), Send(x.token, (), (), 0, 2, ()),
            SendRelease(x.token, 0, 2), k=k)
    phi = k.knowledge(0)
    assert Activated(x) not in phi and x.token not in phi.sent
    assert ReleaseMsg(x, 2) in k.mailbox(2)


def test_release_is_guarded_by_the_receive_count():
    k = spawned()
    x = Refob(Token(0, 2), 0, 2)
    k = run(Send(x.token, (), (), 0, 2, ()), SendRelease(x.token, 0, 2), k=k)
    with pytest.raises(NotEnabled):
        run(Release(x.token, 0, 2), k=k)
    assert Release(x.token, 0, 2) not in enabled_events(k, SMALL)
    k = run(Receive(x.token, 2, ()), Idle(2), Release(x.token, 0, 2), k=k)
    assert Released(x) in k.knowledge(2)


def test_compaction_drops_the_refob_entirely():
    k = spawned()
    x = Refob(Token(0, 2), 0, 2)
    k = run(Send(x.token, (), (), 0, 2, ()), SendRelease(x.token, 0, 2),
            Receive(x.token, 2, ()), Idle(2), Release(x.token, 0, 2),
            Compaction(x.token, 0, 2), k=k)
    phi = k.knowledge(2)
    assert Created(x) not in phi and Released(x) not in phi and x.token not in phi.recv


def test_snapshot_records_without_changing_state():
    k = spawned()
    store = SnapshotStore()
    after = apply_event(k, Snapshot(2), store, 7)
    assert after == k
    assert store.entries[2] == (k.knowledge(2), 7)
    with pytest.raises(RejectedEvent):
        apply_event(k, Snapshot(0), store)


def test_out_exposes_receptionists_and_in_reaches_them():
    k = run(Send(X_EXT.token, (Y_SELF.token,), (Token(0, 2),), 0, 1, (0,)))
    z = Refob(Token(0, 2), 1, 0)
    k = run(Out(X_EXT.token, 1, (z,)), k=k)
    assert k.rho == {0}
    w = Refob(Token(0, 3), 0, 2)  # a brand-new external actor 2
    k = run(In(0, (w,)), k=k)
    assert 2 in k.chi
    assert k.mailbox(0) == (AppMsg(BOTTOM, (w,)),)


def test_in_rejects_non_receptionists():
    with pytest.raises(RejectedEvent):
        run(In(0, ()))


def test_system_messages_to_externals_are_dropped():
    k = run(Send(Y_SELF.token, (X_EXT.token,), (Token(0, 2),), 0, 0, (1,)))
    z = Refob(Token(0, 2), 0, 1)
    k = run(SendInfo(X_EXT.token, z.token, 0, 0, 1), SendRelease(X_EXT.token, 0, 1), k=k)
    assert len(k.mailbox(1)) == 2
    k = run(InfoOut(X_EXT.token, z.token, 0, 1), ReleaseOut(X_EXT.token, 1), k=k)
    assert not k.mailbox(1)


def test_bounds_limit_enumeration():
    k = initial_configuration()
    b = ExplorationBounds(max_actors=1, max_refobs_per_message=1, allow_in=False,
                          include_snapshots=False)
    evs = enabled_events(k, b)
    assert not any(isinstance(e, Spawn) for e in evs)
    assert max(len(e.via) for e in evs if isinstance(e, Send)) == 1


def test_initial_enabled_events_by_hand():
    # Idle, Spawn, two SendReleases, and per refob 1 + 2 + 3 payload choices.
    assert len(enabled_events(initial_configuration(), SMALL)) == 16


def test_mutation_context_restores():
    k = spawned()
    x = Refob(Token(0, 2), 0, 2)
    with mutated("skip-inc-sent"):
        k2 = run(Send(x.token, (), (), 0, 2, ()), k=k)
    assert sent_count(k2.knowledge(0), x.token) == 0
    k3 = run(Send(x.token, (), (), 0, 2, ()), k=k)
    assert sent_count(k3.knowledge(0), x.token) == 1
    with pytest.raises(ValueError):
        with mutated("no-such-mutation"):
            pass


def test_ledger_lifecycle_and_stamps():
    led = Ledger.initial(initial_configuration())
    events = [Spawn(Token(0, 2), 0, 2), Spawn(Token(0, 3), 0, 3), Idle(2), Idle(3),
              Send(Token(0, 2), (Token(0, 3),), (Token(0, 4),), 0, 2, (3,))]
    k = initial_configuration()
    for t, e in enumerate(events, 1):
        led.observe(k, e, t)
        k = apply_event(k, e)
    z = Token(0, 4)
    assert led.status(z) == Lifecycle.PENDING
    for t, e in enumerate([Receive(Token(0, 2), 2, (Refob(z, 2, 3),)),
                           SendRelease(z, 2, 3), Idle(2), Release(z, 2, 3)], 6):
        led.observe(k, e, t)
        k = apply_event(k, e)
    assert led.status(z) == Lifecycle.RELEASED
    assert led.status_at(z, 5) == Lifecycle.PENDING
    assert led.status_at(z, 6) == Lifecycle.ACTIVE
    assert led.status_at(z, 7) == Lifecycle.INACTIVE
    assert led.status_at(z, 4) is None
    with pytest.raises(LedgerError):
        led._advance(Refob(z, 2, 3), Lifecycle.ACTIVE, 10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_random_walk_keeps_invariants(seed):
    for before, e, after, ledger, _, _ in random_walk(seed, 60):
        assert check_step(before, e, after, ledger) == []
        assert check_state(after, ledger) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_apply_is_pure(seed):
    for before, e, after, _, _, _ in random_walk(seed, 40):
        snapshot = before.key()
        apply_event(before, e)
        assert before.key() == snapshot
