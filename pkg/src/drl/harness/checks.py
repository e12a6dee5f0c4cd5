"""Runtime invariant checks shared by the random runner and the explorer.

Each check returns a list of human-readable problems; empty means it passed.
Per-step checks look at one transition, state checks at one configuration.
"""

from __future__ import annotations

import random
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from drl import aggregator, oracle
from drl.deduction import recv_count, sent_count
from drl.events import (
    Compaction, Event, SendInfo, SendRelease, Spawn, acting_actor, mentioned_actors,
)
from drl.model import (
    AppMsg,
    Activated,
    Configuration,
    Created,
    CreatedUsing,
    InfoMsg,
    Released,
    check_configuration,
    message_key,
)
from drl.semantics import Ledger, Lifecycle

# Net change in the number of undelivered messages for each rule.
_MESSAGE_DELTA = {
    "Spawn": 0, "Send": 1, "Receive": -1, "Idle": 0, "SendInfo": 1, "Info": -1,
    "SendRelease": 1, "Release": -1, "Compaction": 0, "Snapshot": 0, "In": 1,
    "Out": -1, "ReleaseOut": -1, "InfoOut": -1,
}


def _messages(k: Configuration, actors) -> Counter:
    return Counter((a, message_key(m)) for a in actors for m in k.mailbox(a))


def check_step(before: Configuration, e: Event, after: Configuration, ledger: Ledger) -> list[str]:
    """Locality, message conservation, and facts-remain-until-cancelled for one event.

    ``ledger`` must already reflect ``e``.
    """
    problems: list[str] = []
    touched = [a for a in set(before.mu) | set(after.mu)
               if before.mu.get(a) is not after.mu.get(a)]
    old, new = _messages(before, touched), _messages(after, touched)
    lost, gained = old - new, new - old
    delta = sum(gained.values()) - sum(lost.values())
    if delta != _MESSAGE_DELTA[e.label] or sum(lost.values()) > 1 or sum(gained.values()) > 1:
        problems.append(f"{e.label}: message multiset changed by +{dict(gained)} -{dict(lost)}")

    actor = acting_actor(e)
    allowed = {actor} if actor is not None else set()
    if isinstance(e, Spawn):
        allowed.add(e.child)
    changed = [a for a in set(before.alpha) | set(after.alpha)
               if before.alpha.get(a) is not after.alpha.get(a)
               and before.alpha.get(a) != after.alpha.get(a)]
    for a in changed:
        if a not in allowed:
            problems.append(f"{e.label}: state of non-acting actor {a} changed")

    for a in changed:
        sb, sa = before.alpha.get(a), after.alpha.get(a)
        if sb is None or sa is None:
            continue
        for f in sb.knowledge:
            if f in sa.knowledge or not isinstance(f, (Created, Released, CreatedUsing, Activated)):
                continue
            problems.extend(_removal_problems(a, f, e, ledger))
    return problems


def _removal_problems(a, f, e: Event, ledger: Ledger) -> list[str]:
    match f:
        case CreatedUsing(via, made):
            if not (isinstance(e, SendInfo) and e.via == via.token and e.created == made.token):
                return [f"{e.label}: {a} dropped {f} without sending Info"]
        case Created(r):
            if not isinstance(e, Compaction) or r.token not in ledger.release_received:
                return [f"{e.label}: {a} dropped Created({r}) before the release arrived"]
        case Released(r):
            if not isinstance(e, Compaction) or (
                    r.token not in ledger.info_received and r.token not in ledger.spawned):
                return [f"{e.label}: {a} dropped Released({r}) before the info arrived"]
        case Activated(r):
            if not (isinstance(e, SendRelease) and e.token == r.token):
                return [f"{e.label}: {a} dropped Activated({r}) without deactivating it"]
    return []


def check_release_is_final(k: Configuration, ledger: Ledger) -> list[str]:
    problems = []
    for b, ms in k.mu.items():
        for m in ms:
            if isinstance(m, AppMsg) and m.along.is_bottom:
                continue
            if ledger.status(m.along) == Lifecycle.RELEASED:
                problems.append(f"message {m} to {b} travels along released refob")
    return problems


def check_counts_now(k: Configuration, ledger: Ledger) -> list[str]:
    """Message-count lemma with both times equal to now, for every live internal refob."""
    problems = []
    for r in ledger.unreleased():
        st = ledger.status(r.token)
        if st == Lifecycle.INACTIVE or r.owner not in k.alpha or r.target not in k.alpha:
            continue
        n = sent_count(k.knowledge(r.owner), r.token)
        m = recv_count(k.knowledge(r.target), r.token)
        pending = sum(1 for msg in k.mailbox(r.target)
                      if isinstance(msg, (AppMsg, InfoMsg)) and msg.along == r.token)
        if max(n - m, 0) != pending:
            problems.append(f"{r}: sent {n} received {m} but {pending} in flight")
    return problems


def check_state(k: Configuration, ledger: Ledger) -> list[str]:
    problems = list(check_configuration(k))
    problems += check_release_is_final(k, ledger)
    problems += check_counts_now(k, ledger)
    return problems


def check_simple_garbage(k: Configuration, ledger: Ledger,
                         terminated: set | None = None) -> list[str]:
    if terminated is None:
        terminated = oracle.terminated_set(k, ledger)
    return [f"actor {b} passes the local simple-garbage test but is not terminated"
            for b in sorted(oracle.simple_garbage(k) - terminated)]


def check_safety(detected: set, terminated: set) -> list[str]:
    return [f"detected actor {b} is not terminated" for b in sorted(detected - terminated)]


def check_all_finalized_subsets(store: aggregator.SnapshotStore, terminated: set) -> list[str]:
    q = store.snapshots()
    return [f"finalized subset {sorted(s)} contains non-terminated actors"
            for s in aggregator.brute_force_finalized_subsets(q) if not s <= terminated]


@dataclass
class MsgCountSample:
    token: str
    t1: int
    t2: int
    expected: int
    observed: int


def sample_msg_counts(history: Sequence[Configuration], ledger: Ledger, rng: random.Random,
                      want: int, attempts: int = 400) -> list[MsgCountSample]:
    """Draw (refob, t1, t2) triples meeting the lemma's preconditions and evaluate both sides.

    ``history[t]`` is the configuration after ``t`` events.
    """
    tokens = sorted(t for t in ledger.refobs if not t.is_bottom)
    out: list[MsgCountSample] = []
    last = len(history) - 1
    if not tokens or last < 0:
        return out
    for _ in range(attempts):
        if len(out) >= want:
            break
        x = rng.choice(tokens)
        r = ledger.refobs[x]
        t1, t2 = rng.randint(0, last), rng.randint(0, last)
        s1, s2 = ledger.status_at(x, t1), ledger.status_at(x, t2)
        if s1 is not None and s1 >= Lifecycle.INACTIVE:
            continue
        if s2 is not None and s2 >= Lifecycle.RELEASED:
            continue
        k1, k2 = history[t1], history[t2]
        if r.owner not in k1.alpha or r.target not in k2.alpha:
            continue
        if t1 < t2 and ledger.sends_between(x, t1, t2):
            continue
        n = sent_count(k1.knowledge(r.owner), x)
        m = recv_count(k2.knowledge(r.target), x)
        out.append(MsgCountSample(str(x), t1, t2, max(n - m, 0),
                                  ledger.in_flight_count(x, t1, t2)))
    return out


def touches(e: Event, actors: set) -> bool:
    """Whether an event involves any of ``actors`` as a participant."""
    return bool(mentioned_actors(e) & actors)

