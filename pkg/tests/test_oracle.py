from __future__ import annotations

import pytest
from conftest import random_walk
from hypothesis import given, settings
from hypothesis import strategies as st

from drl import oracle
from drl.events import Idle, Out, Receive, Send, SendRelease, Spawn
from drl.model import Created, KnowledgeSet, Refob, Token, initial_configuration
from drl.semantics import Ledger, apply_event

X_EXT = Refob(Token(0, 0), 0, 1)
Y_SELF = Refob(Token(0, 1), 0, 0)


def play(*events):
    k = initial_configuration()
    led = Ledger.initial(k)
    for t, e in enumerate(events, 1):
        led.observe(k, e, t)
        k = apply_event(k, e)
    return k, led


def test_busy_actor_is_not_terminated():
    k, led = play()
    assert oracle.terminated_set(k, led) == set()


def test_idle_actor_without_inverse_acquaintances_is_terminated():
    k, led = play(Idle(0))
    assert oracle.terminated_set(k, led) == {0}


def test_blocked_counts_system_messages():
    # A pending self-release keeps the actor unblocked even though it is idle.
    k, led = play(SendRelease(Y_SELF.token, 0, 0), Idle(0))
    assert not oracle.blocked(k, led, 0)
    assert oracle.terminated_set(k, led) == set()


def test_blocked_is_internal_only():
    k, led = play()
    with pytest.raises(ValueError):
        oracle.blocked(k, led, 1)


def test_pending_refob_keeps_target_reachable():
    # 0 spawns 2 and hands 2 a refob to 0; 2 has not received it yet, 0 goes idle.
    k, led = play(Spawn(Token(0, 2), 0, 2), Idle(2),
                  Send(Token(0, 2), (Y_SELF.token,), (Token(0, 3),), 0, 2, (0,)), Idle(0))
    assert oracle.terminated_set(k, led) == set()
    k2 = apply_event(k, Receive(Token(0, 2), 2, (Refob(Token(0, 3), 2, 0),)))
    led.observe(k, Receive(Token(0, 2), 2, (Refob(Token(0, 3), 2, 0),)), 5)
    k2 = apply_event(k2, Idle(2))
    # Both idle with empty mailboxes, reachable only from each other.
    assert oracle.terminated_set(k2, led) == {0, 2}


def test_receptionists_and_out_payload_targets_are_roots():
    k, led = play(Send(X_EXT.token, (Y_SELF.token,), (Token(0, 2),), 0, 1, (0,)))
    assert oracle.root_set(k) == {0}
    assert 0 not in oracle.terminated_set(apply_event(k, Idle(0)), led)
    k = apply_event(k, Out(X_EXT.token, 1, (Refob(Token(0, 2), 1, 0),)))
    assert k.rho == {0} and oracle.root_set(k) == {0}


def test_find_chain_direct_and_errors():
    k, led = play(Spawn(Token(0, 2), 0, 2))
    x = Refob(Token(0, 2), 0, 2)
    assert oracle.find_chain(k, led, x) == [x]
    with pytest.raises(ValueError):
        oracle.find_chain(k, led, Refob(Token(7, 7), 0, 2))
    with pytest.raises(ValueError):
        oracle.find_chain(k, led, X_EXT)


def test_chain_lemma_flags_a_missing_link():
    # Drop the CreatedUsing fact by hand: the new refob has no chain.
    k, led = play(Spawn(Token(0, 2), 0, 2), Spawn(Token(0, 3), 0, 3), Idle(3),
                  Send(Token(0, 3), (Token(0, 2),), (Token(0, 4),), 0, 3, (2,)))
    assert oracle.check_chain_lemma(k, led) == []
    phi = k.knowledge(0)
    broken = KnowledgeSet(phi.created, phi.released, phi.activated, frozenset(),
                          phi.sent, phi.recv)
    alpha = dict(k.alpha)
    alpha[0] = type(k.alpha[0])(k.alpha[0].mode, broken)
    problems = oracle.check_chain_lemma(k.evolve(alpha=alpha), led)
    assert problems == [f"no chain to unreleased refob {Refob(Token(0, 4), 3, 2)}"]


def test_literal_simple_garbage_test_misses_created_using_self():
    # 0 mints z: 2 -> 0 with its self-refob and goes idle before 2 receives it.
    k, led = play(Spawn(Token(0, 2), 0, 2), Idle(2),
                  Send(Token(0, 2), (Y_SELF.token,), (Token(0, 3),), 0, 2, (0,)), Idle(0))
    phi = k.knowledge(0)
    assert oracle.is_simple_garbage_local(0, phi, literal=True)
    assert not oracle.is_simple_garbage_local(0, phi)
    assert 0 not in oracle.terminated_set(k, led)


def test_literal_simple_garbage_test_misses_pending_self_release():
    k, led = play(SendRelease(Y_SELF.token, 0, 0), Idle(0))
    phi = k.knowledge(0)
    assert oracle.is_simple_garbage_local(0, phi, literal=True)
    assert not oracle.is_simple_garbage_local(0, phi)
    assert oracle.simple_garbage(k) == set()


def test_simple_garbage_positive_case():
    k, led = play(Idle(0))
    assert oracle.simple_garbage(k) == {0}
    assert not oracle.is_simple_garbage_local(2, KnowledgeSet.of(Created(Refob(Token(0, 2), 0, 2))))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_chain_lemma_and_simple_garbage_on_random_walks(seed):
    for _, _, k, led, _, _ in random_walk(seed, 60):
        assert oracle.check_chain_lemma(k, led) == []
        assert oracle.simple_garbage(k) <= oracle.terminated_set(k, led)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_terminated_actors_stay_terminated(seed):
    prev: set = set()
    for _, _, k, led, _, _ in random_walk(seed, 60):
        now = oracle.terminated_set(k, led)
        assert prev <= now
        prev = now
