"""The DRL transition system.

``apply_*`` functions implement one rule each and return a new
:class:`~drl.model.Configuration`; they raise :class:`RejectedEvent` when a
premise fails. :func:`enabled_events` enumerates every event whose premises
hold, within :class:`ExplorationBounds`.

:class:`Ledger` is instrumentation: it follows each refob through
pending/active/inactive/released and logs which messages were sent and
received along which token. The rules never read it.
"""

from __future__ import annotations

import contextlib
import enum
import itertools
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

from drl.deduction import inc_recv, inc_sent, recv_count, sent_count
from drl.events import (
    Compaction,
    Event,
    Idle,
    In,
    Info,
    InfoOut,
    Out,
    Receive,
    Release,
    ReleaseOut,
    Send,
    SendInfo,
    SendRelease,
    Snapshot,
    Spawn,
    event_sort_key,
)
from drl.model import (
    BOTTOM,
    Activated,
    ActorState,
    Address,
    AppMsg,
    Configuration,
    Created,
    CreatedUsing,
    InfoMsg,
    KnowledgeSet,
    Message,
    Mode,
    Refob,
    ReleaseMsg,
    Released,
    Token,
    message_key,
    sorted_refobs,
)


class RejectedEvent(Exception):
    """An event whose premises do not hold in the configuration."""


class NotEnabled(RejectedEvent):
    """The message is present but its delivery guard does not hold yet."""


@dataclass(frozen=True)
class ExplorationBounds:
    max_actors: int = 6
    max_events_per_run: int = 300
    max_refobs_per_message: int = 2
    max_external_injections: int = 4
    allow_in: bool = True
    include_snapshots: bool = True

    def __post_init__(self) -> None:
        for name in ("max_actors", "max_events_per_run", "max_refobs_per_message",
                     "max_external_injections"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


# Deliberate rule corruptions for negative-control runs.
MUTATIONS = frozenset({"skip-inc-sent", "skip-created-using", "early-release"})
_active_mutations: set[str] = set()


@contextlib.contextmanager
def mutated(*names: str) -> Iterator[None]:
    unknown = set(names) - MUTATIONS
    if unknown:
        raise ValueError(f"unknown mutation(s): {sorted(unknown)}")
    saved = set(_active_mutations)
    _active_mutations.update(names)
    try:
        yield
    finally:
        _active_mutations.clear()
        _active_mutations.update(saved)


# -- helpers -------------------------------------------------------------------


def _require(cond: bool, why: str) -> None:
    if not cond:
        raise RejectedEvent(why)


def _busy(k: Configuration, a: Address) -> KnowledgeSet:
    st = k.alpha.get(a)
    _require(st is not None and st.busy, f"actor {a} is not a busy internal actor")
    return st.knowledge


def _idle(k: Configuration, a: Address) -> KnowledgeSet:
    st = k.alpha.get(a)
    _require(st is not None and st.idle, f"actor {a} is not an idle internal actor")
    return st.knowledge


def _set_actor(alpha, a: Address, mode: Mode, phi: KnowledgeSet) -> dict:
    out = dict(alpha)
    out[a] = ActorState(mode, phi)
    return out


def _push(mu, a: Address, m: Message) -> dict:
    out = dict(mu)
    out[a] = out.get(a, ()) + (m,)
    return out


def _pop(mu, a: Address, m: Message) -> dict:
    box = mu.get(a, ())
    _require(m in box, f"no message {m} for actor {a}")
    i = box.index(m)
    rest = box[:i] + box[i + 1:]
    out = dict(mu)
    if rest:
        out[a] = rest
    else:
        out.pop(a, None)
    return out


def _claim_tokens(k: Configuration, tokens: Sequence[Token]) -> dict:
    _require(len(set(tokens)) == len(tokens), "duplicate fresh tokens")
    seqs = dict(k.next_seq)
    for t in tokens:
        _require(k.is_fresh_token(t), f"token {t} is not fresh")
        seqs[t.creator] = max(seqs.get(t.creator, 0), t.seq + 1)
    return seqs


def spawn_self_token(k: Configuration, child: Address) -> Token:
    return Token(child, k.next_seq.get(child, 0))


def find_release_message(k: Configuration, x: Token, target: Address) -> ReleaseMsg | None:
    for m in k.mailbox(target):
        if isinstance(m, ReleaseMsg) and m.refob.token == x:
            return m
    return None


# -- standard actor rules ------------------------------------------------------


def apply_spawn(k: Configuration, x: Token, a: Address, b: Address) -> Configuration:
    phi = _busy(k, a)
    _require(k.is_fresh_address(b), f"address {b} is not fresh")
    y = spawn_self_token(k, b)
    seqs = _claim_tokens(k, [x, y])
    xr, yr = Refob(x, a, b), Refob(y, b, b)
    alpha = _set_actor(k.alpha, a, Mode.BUSY, phi.add(Activated(xr)))
    alpha[b] = ActorState(Mode.BUSY, KnowledgeSet.of(Created(xr), Created(yr), Activated(yr)))
    return k.evolve(alpha=alpha, next_address=b + 1, next_seq=seqs)


def apply_send(k: Configuration, x: Token, ys: Sequence[Token], zs: Sequence[Token],
               a: Address, b: Address, cs: Sequence[Address]) -> Configuration:
    phi = _busy(k, a)
    _require(len(ys) == len(zs) == len(cs), "via/created/targets lengths differ")
    _require(Refob(x, a, b) in phi.activated, f"{a} has no active refob {x} to {b}")
    for y, c in zip(ys, cs):
        _require(Refob(y, a, c) in phi.activated, f"{a} has no active refob {y} to {c}")
    seqs = _claim_tokens(k, list(zs))
    payload = [Refob(z, b, c) for z, c in zip(zs, cs)]
    if "skip-inc-sent" not in _active_mutations:
        phi = inc_sent(x, phi)
    if "skip-created-using" not in _active_mutations:
        phi = phi.add(*(CreatedUsing(Refob(y, a, c), z) for y, c, z in zip(ys, cs, payload)))
    return k.evolve(
        alpha=_set_actor(k.alpha, a, Mode.BUSY, phi),
        mu=_push(k.mu, b, AppMsg(x, sorted_refobs(payload))),
        next_seq=seqs,
    )


def apply_receive(k: Configuration, x: Token, b: Address, payload: Sequence[Refob]) -> Configuration:
    phi = _idle(k, b)
    msg = AppMsg(x, sorted_refobs(payload))
    mu = _pop(k.mu, b, msg)
    phi = inc_recv(x, phi).add(*(Activated(z) for z in msg.payload))
    return k.evolve(alpha=_set_actor(k.alpha, b, Mode.BUSY, phi), mu=mu)


def apply_idle(k: Configuration, a: Address) -> Configuration:
    phi = _busy(k, a)
    return k.evolve(alpha=_set_actor(k.alpha, a, Mode.IDLE, phi))


# -- release protocol ------------------------------------------------------------


def apply_send_info(k: Configuration, y: Token, z: Token, a: Address, b: Address,
                    c: Address) -> Configuration:
    phi = _busy(k, a)
    fact = CreatedUsing(Refob(y, a, c), Refob(z, b, c))
    _require(fact in phi, f"{a} holds no {fact}")
    phi = inc_sent(y, phi.remove(fact))
    return k.evolve(
        alpha=_set_actor(k.alpha, a, Mode.BUSY, phi),
        mu=_push(k.mu, c, InfoMsg(y, Refob(z, b, c))),
    )


def apply_info(k: Configuration, y: Token, z: Refob, c: Address) -> Configuration:
    phi = _idle(k, c)
    _require(z.target == c, f"info about {z} delivered to {c}")
    mu = _pop(k.mu, c, InfoMsg(y, z))
    phi = inc_recv(y, phi).add(Created(z))
    return k.evolve(alpha=_set_actor(k.alpha, c, Mode.IDLE, phi), mu=mu)


def apply_send_release(k: Configuration, x: Token, a: Address, b: Address) -> Configuration:
    phi = _busy(k, a)
    r = Refob(x, a, b)
    _require(r in phi.activated, f"{a} has no active refob {r}")
    _require(all(via != r for via, _ in phi.created_using),
             f"{a} still has CreatedUsing facts for {r}")
    n = sent_count(phi, x)
    phi = phi.remove(Activated(r)).with_counts(
        sent={t: v for t, v in phi.sent.items() if t != x})
    return k.evolve(
        alpha=_set_actor(k.alpha, a, Mode.BUSY, phi),
        mu=_push(k.mu, b, ReleaseMsg(r, n)),
    )


def apply_release(k: Configuration, x: Token, a: Address, b: Address) -> Configuration:
    phi = _idle(k, b)
    r = Refob(x, a, b)
    msg = find_release_message(k, x, b)
    _require(msg is not None and msg.refob == r, f"no release message for {r}")
    if recv_count(phi, x) != msg.count and "early-release" not in _active_mutations:
        raise NotEnabled(f"release of {r} waits: received {recv_count(phi, x)} of {msg.count}")
    mu = _pop(k.mu, b, msg)
    return k.evolve(alpha=_set_actor(k.alpha, b, Mode.IDLE, phi.add(Released(r))), mu=mu)


def apply_compaction(k: Configuration, x: Token, b: Address, c: Address) -> Configuration:
    phi = _idle(k, c)
    r = Refob(x, b, c)
    _require(r in phi.created and r in phi.released, f"{c} cannot compact {r}")
    phi = phi.remove(Created(r), Released(r))
    if x in phi.recv:
        phi = phi.with_counts(recv={t: v for t, v in phi.recv.items() if t != x})
    return k.evolve(alpha=_set_actor(k.alpha, c, Mode.IDLE, phi))


def apply_snapshot(k: Configuration, a: Address, store=None, t: int = 0) -> Configuration:
    """Leaves the configuration unchanged; records the idle actor's knowledge in ``store``."""
    phi = _idle(k, a)
    if store is not None:
        store.record(a, phi, t)
    return k


# -- composition with the outside world ------------------------------------------


def apply_in(k: Configuration, a: Address, payload: Sequence[Refob]) -> Configuration:
    _require(a in k.rho, f"{a} is not a receptionist")
    seqs = _claim_tokens(k, [r.token for r in payload])
    new_external: set[Address] = set()
    for r in payload:
        _require(r.owner == a, f"refob {r} in In payload not owned by {a}")
        if r.target in k.alpha:
            _require(r.target in k.rho, f"In exposes non-receptionist {r.target}")
        elif r.target not in k.chi:
            _require(k.is_fresh_address(r.target), f"address {r.target} is not fresh")
            new_external.add(r.target)
    next_address = max([k.next_address, *(e + 1 for e in new_external)])
    return k.evolve(
        mu=_push(k.mu, a, AppMsg(BOTTOM, sorted_refobs(payload))),
        chi=k.chi | new_external,
        next_address=next_address,
        next_seq=seqs,
    )


def apply_out(k: Configuration, x: Token, b: Address, payload: Sequence[Refob]) -> Configuration:
    _require(b in k.chi, f"{b} is not external")
    mu = _pop(k.mu, b, AppMsg(x, sorted_refobs(payload)))
    exposed = {r.target for r in payload} & set(k.alpha)
    return k.evolve(mu=mu, rho=k.rho | exposed)


def apply_drop_system_to_external(k: Configuration, message: Message, b: Address) -> Configuration:
    """ReleaseOut and InfoOut: system messages addressed outside are discarded."""
    _require(b in k.chi, f"{b} is not external")
    _require(isinstance(message, (ReleaseMsg, InfoMsg)), "only system messages are dropped")
    return k.evolve(mu=_pop(k.mu, b, message))


def apply_event(k: Configuration, e: Event, store=None, t: int = 0) -> Configuration:
    match e:
        case Spawn(x, a, b):
            return apply_spawn(k, x, a, b)
        case Send(x, ys, zs, a, b, cs):
            return apply_send(k, x, ys, zs, a, b, cs)
        case Receive(x, b, payload):
            return apply_receive(k, x, b, payload)
        case Idle(a):
            return apply_idle(k, a)
        case SendInfo(y, z, a, b, c):
            return apply_send_info(k, y, z, a, b, c)
        case Info(y, z, b, c):
            return apply_info(k, y, Refob(z, b, c), c)
        case SendRelease(x, a, b):
            return apply_send_release(k, x, a, b)
        case Release(x, a, b):
            return apply_release(k, x, a, b)
        case Compaction(x, b, c):
            return apply_compaction(k, x, b, c)
        case Snapshot(a):
            return apply_snapshot(k, a, store, t)
        case In(a, payload):
            return apply_in(k, a, payload)
        case Out(x, b, payload):
            return apply_out(k, x, b, payload)
        case ReleaseOut(x, b):
            msg = next((m for m in k.mailbox(b)
                        if isinstance(m, ReleaseMsg) and m.refob.token == x), None)
            _require(msg is not None, f"no release message along {x} for {b}")
            return apply_drop_system_to_external(k, msg, b)
        case InfoOut(y, z, owner, c):
            return apply_drop_system_to_external(k, InfoMsg(y, Refob(z, owner, c)), c)
    raise TypeError(f"not an event: {e!r}")


# -- enumeration -------------------------------------------------------------------


def actor_events(k: Configuration, a: Address, bounds: ExplorationBounds,
                 growth: bool = True) -> list[Event]:
    """Events the internal actor ``a`` can take part in as the acting actor.

    With ``growth=False``, Spawn and Send are left out.
    """
    st = k.alpha[a]
    phi = st.knowledge
    out: list[Event] = []
    if st.busy:
        out.append(Idle(a))
        if growth and len(k.alpha) < bounds.max_actors:
            out.append(Spawn(k.peek_tokens(a, 1)[0], a, k.next_address))
        active = sorted(phi.activated)
        for x in active if growth else ():
            for n in range(bounds.max_refobs_per_message + 1):
                zs = k.peek_tokens(a, n)
                for ys in itertools.combinations_with_replacement(active, n):
                    out.append(Send(
                        x.token, tuple(y.token for y in ys), zs, a, x.target,
                        tuple(y.target for y in ys)))
        for via, made in sorted(phi.created_using):
            out.append(SendInfo(via.token, made.token, a, made.owner, made.target))
        pending_via = {via for via, _ in phi.created_using}
        for x in active:
            if x not in pending_via:
                out.append(SendRelease(x.token, a, x.target))
    else:
        for m in sorted(set(k.mailbox(a)), key=message_key):
            if isinstance(m, AppMsg):
                out.append(Receive(m.along, a, m.payload))
            elif isinstance(m, InfoMsg):
                out.append(Info(m.along, m.created.token, m.created.owner, a))
            elif recv_count(phi, m.along) == m.count or "early-release" in _active_mutations:
                out.append(Release(m.along, m.refob.owner, a))
        for r in sorted(phi.created & phi.released):
            out.append(Compaction(r.token, r.owner, a))
        if bounds.include_snapshots:
            out.append(Snapshot(a))
    return out


NEW_EXTERNAL = -1


def environment_events(k: Configuration, bounds: ExplorationBounds,
                       injections_used: int = 0) -> list[Event]:
    out: list[Event] = []
    for b in sorted(k.chi):
        for m in sorted(set(k.mailbox(b)), key=message_key):
            if isinstance(m, AppMsg):
                out.append(Out(m.along, b, m.payload))
            elif isinstance(m, ReleaseMsg):
                out.append(ReleaseOut(m.along, b))
            else:
                out.append(InfoOut(m.along, m.created.token, m.created.owner, b))
    if bounds.allow_in and injections_used < bounds.max_external_injections:
        out.extend(in_events(k, bounds))
    return out


def in_events(k: Configuration, bounds: ExplorationBounds) -> list[Event]:
    out: list[Event] = []
    choices = sorted(k.rho) + sorted(k.chi) + [NEW_EXTERNAL]
    for a in sorted(k.rho):
        for n in range(bounds.max_refobs_per_message + 1):
            tokens = k.peek_tokens(a, n)
            for targets in itertools.combinations_with_replacement(choices, n):
                fresh = itertools.count(k.next_address)
                payload = tuple(
                    Refob(t, a, next(fresh) if c == NEW_EXTERNAL else c)
                    for t, c in zip(tokens, targets))
                out.append(In(a, payload))
    return out


def enabled_events(k: Configuration, bounds: ExplorationBounds,
                   injections_used: int = 0) -> list[Event]:
    """Every enabled event within ``bounds``, sorted by rule label then parameters."""
    out: list[Event] = []
    for a in k.internal():
        out.extend(actor_events(k, a, bounds))
    out.extend(environment_events(k, bounds, injections_used))
    return sorted(out, key=event_sort_key)


# -- ledger ----------------------------------------------------------------------------


class Lifecycle(enum.IntEnum):
    PENDING = 0
    ACTIVE = 1
    INACTIVE = 2
    RELEASED = 3


class LedgerError(AssertionError):
    pass


class Ledger:
    """Shadow bookkeeping of refob lifecycles and message traffic."""

    def __init__(self) -> None:
        self.refobs: dict[Token, Refob] = {}
        self.state: dict[Token, Lifecycle] = {}
        self.stamps: dict[Token, dict[Lifecycle, int]] = {}
        # token -> [sent_at, received_at | None, message] for App/Info messages along it
        self.traffic: dict[Token, list[list]] = {}
        self.spawned: set[Token] = set()
        self.info_received: dict[Token, int] = {}
        self.release_received: dict[Token, int] = {}
        self.destroyed: dict[Address, KnowledgeSet] = {}

    @classmethod
    def initial(cls, k: Configuration) -> Ledger:
        led = cls()
        for st in k.alpha.values():
            for r in st.knowledge.refobs():
                led._advance(r, Lifecycle.ACTIVE, 0)
                if r in st.knowledge.created:
                    led.spawned.add(r.token)
        return led

    def copy(self) -> Ledger:
        led = Ledger()
        led.refobs = dict(self.refobs)
        led.state = dict(self.state)
        led.stamps = {t: dict(s) for t, s in self.stamps.items()}
        led.traffic = {t: [list(rec) for rec in recs] for t, recs in self.traffic.items()}
        led.spawned = set(self.spawned)
        led.info_received = dict(self.info_received)
        led.release_received = dict(self.release_received)
        led.destroyed = dict(self.destroyed)
        return led

    def key(self) -> tuple:
        """Timestamp-free canonical form, for state deduplication."""
        return (tuple(sorted(self.state.items())), tuple(sorted(self.destroyed)))

    # queries

    def status(self, x: Token) -> Lifecycle | None:
        return self.state.get(x)

    def unreleased(self) -> list[Refob]:
        return [self.refobs[t] for t, s in sorted(self.state.items()) if s != Lifecycle.RELEASED]

    def status_at(self, x: Token, t: int) -> Lifecycle | None:
        """Lifecycle of ``x`` in the configuration reached after ``t`` events."""
        best = None
        for st, when in self.stamps.get(x, {}).items():
            if when <= t and (best is None or st > best):
                best = st
        return best

    def in_flight_count(self, x: Token, sent_by: int, received_by: int) -> int:
        """Messages along ``x`` sent at or before event ``sent_by`` and not received by ``received_by``."""
        return sum(
            1 for sent, got, _ in self.traffic.get(x, ())
            if sent <= sent_by and (got is None or got > received_by))

    def sends_between(self, x: Token, lo: int, hi: int) -> int:
        return sum(1 for sent, _, _ in self.traffic.get(x, ()) if lo < sent <= hi)

    # updates

    def _advance(self, r: Refob, st: Lifecycle, t: int) -> None:
        prev = self.state.get(r.token)
        known = self.refobs.setdefault(r.token, r)
        if known != r:
            raise LedgerError(f"token {r.token} names two refobs: {known} and {r}")
        if prev is not None and st < prev:
            raise LedgerError(f"{r} would move back from {prev.name} to {st.name}")
        if prev == st:
            return
        self.state[r.token] = st
        self.stamps.setdefault(r.token, {})[st] = t

    def _sent(self, m: Message, t: int) -> None:
        self.traffic.setdefault(m.along, []).append([t, None, m])

    def _received(self, m: Message, t: int) -> None:
        for rec in self.traffic.get(m.along, ()):
            if rec[1] is None and rec[2] == m:
                rec[1] = t
                return
        raise LedgerError(f"receipt of unsent message {m}")

    def observe(self, before: Configuration, e: Event, t: int) -> None:
        """Record the effect of event number ``t`` applied to ``before``."""
        match e:
            case Spawn(x, a, b):
                xr = Refob(x, a, b)
                yr = Refob(spawn_self_token(before, b), b, b)
                for r in (xr, yr):
                    self._advance(r, Lifecycle.ACTIVE, t)
                    self.spawned.add(r.token)
            case Send(x, ys, zs, a, b, cs):
                payload = [Refob(z, b, c) for z, c in zip(zs, cs)]
                for r in payload:
                    self._advance(r, Lifecycle.PENDING, t)
                self._sent(AppMsg(x, sorted_refobs(payload)), t)
            case Receive(x, b, payload):
                for r in payload:
                    self._advance(r, Lifecycle.ACTIVE, t)
                self._received(AppMsg(x, sorted_refobs(payload)), t)
            case SendInfo(y, z, a, b, c):
                self._sent(InfoMsg(y, Refob(z, b, c)), t)
            case Info(y, z, b, c):
                self._received(InfoMsg(y, Refob(z, b, c)), t)
                self.info_received[z] = t
            case SendRelease(x, a, b):
                self._advance(Refob(x, a, b), Lifecycle.INACTIVE, t)
            case Release(x, a, b):
                self._advance(Refob(x, a, b), Lifecycle.RELEASED, t)
                self.release_received[x] = t
            case In(a, payload):
                for r in payload:
                    self._advance(r, Lifecycle.PENDING, t)
                self._sent(AppMsg(BOTTOM, sorted_refobs(payload)), t)
            case Out(x, b, payload):
                for r in payload:
                    self._advance(r, Lifecycle.ACTIVE, t)
                self._received(AppMsg(x, sorted_refobs(payload)), t)
            case InfoOut(y, z, owner, c):
                self._received(InfoMsg(y, Refob(z, owner, c)), t)
            case ReleaseOut() | Idle() | Compaction() | Snapshot():
                pass
