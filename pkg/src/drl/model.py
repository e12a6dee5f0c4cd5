"""Domain values for the DRL protocol.

Everything here is an immutable value. Transition functions in
:mod:`drl.semantics` build new configurations instead of mutating old ones,
so a configuration can be shared freely between explorer branches.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

Address = int


@dataclass(frozen=True, order=True, slots=True)
class Token:
    """Globally unique refob identifier: creator address plus a local sequence number."""

    creator: int
    seq: int

    @property
    def is_bottom(self) -> bool:
        return self.creator < 0

    def __str__(self) -> str:
        return "bottom" if self.is_bottom else f"{self.creator}.{self.seq}"


#: Reserved token carried by messages from external actors.
BOTTOM = Token(-1, -1)


@dataclass(frozen=True, order=True, slots=True)
class Refob:
    token: Token
    owner: Address
    target: Address

    def __str__(self) -> str:
        return f"<{self.token}:{self.owner}->{self.target}>"


# -- facts -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Created:
    refob: Refob


@dataclass(frozen=True, slots=True)
class Released:
    refob: Refob


@dataclass(frozen=True, slots=True)
class CreatedUsing:
    via: Refob
    created: Refob


@dataclass(frozen=True, slots=True)
class Activated:
    refob: Refob


@dataclass(frozen=True, slots=True)
class SentCount:
    token: Token
    n: int


@dataclass(frozen=True, slots=True)
class RecvCount:
    token: Token
    n: int


Fact = Union[Created, Released, CreatedUsing, Activated, SentCount, RecvCount]


class KnowledgeSetError(ValueError):
    pass


@dataclass(frozen=True, eq=True)
class KnowledgeSet:
    """An actor's system-level facts.

    Message counts live in per-token maps, so at most one ``SentCount`` and
    one ``RecvCount`` per token can exist.
    """

    created: frozenset[Refob] = frozenset()
    released: frozenset[Refob] = frozenset()
    activated: frozenset[Refob] = frozenset()
    created_using: frozenset[tuple[Refob, Refob]] = frozenset()
    sent: Mapping[Token, int] = field(default_factory=dict)
    recv: Mapping[Token, int] = field(default_factory=dict)

    @classmethod
    def of(cls, *facts: Fact) -> KnowledgeSet:
        return EMPTY_KNOWLEDGE.add(*facts)

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash(self.key())

    def key(self) -> tuple:
        return self._key

    @cached_property
    def _key(self) -> tuple:
        return (
            tuple(sorted(self.created)),
            tuple(sorted(self.released)),
            tuple(sorted(self.activated)),
            tuple(sorted(self.created_using)),
            tuple(sorted(self.sent.items())),
            tuple(sorted(self.recv.items())),
        )

    @cached_property
    def derived_created(self) -> frozenset[Refob]:
        """Refobs ``r`` such that ``Created(r)`` is derivable (membership or CreatedUsing)."""
        return self.created | frozenset(c for _, c in self.created_using)

    def __iter__(self) -> Iterator[Fact]:
        for r in sorted(self.created):
            yield Created(r)
        for r in sorted(self.released):
            yield Released(r)
        for via, made in sorted(self.created_using):
            yield CreatedUsing(via, made)
        for r in sorted(self.activated):
            yield Activated(r)
        for t, n in sorted(self.sent.items()):
            yield SentCount(t, n)
        for t, n in sorted(self.recv.items()):
            yield RecvCount(t, n)

    def __len__(self) -> int:
        return (
            len(self.created)
            + len(self.released)
            + len(self.activated)
            + len(self.created_using)
            + len(self.sent)
            + len(self.recv)
        )

    def __contains__(self, fact: object) -> bool:
        match fact:
            case Created(r):
                return r in self.created
            case Released(r):
                return r in self.released
            case Activated(r):
                return r in self.activated
            case CreatedUsing(via, made):
                return (via, made) in self.created_using
            case SentCount(t, n):
                return self.sent.get(t) == n
            case RecvCount(t, n):
                return self.recv.get(t) == n
        return False

    def add(self, *facts: Fact) -> KnowledgeSet:
        created, released = set(self.created), set(self.released)
        activated, using = set(self.activated), set(self.created_using)
        sent, recv = dict(self.sent), dict(self.recv)
        for f in facts:
            match f:
                case Created(r):
                    created.add(r)
                case Released(r):
                    released.add(r)
                case Activated(r):
                    activated.add(r)
                case CreatedUsing(via, made):
                    if via.target != made.target:
                        raise KnowledgeSetError(f"CreatedUsing targets differ: {via} / {made}")
                    using.add((via, made))
                case SentCount(t, n):
                    if sent.get(t, n) != n:
                        raise KnowledgeSetError(f"second SentCount for {t}")
                    sent[t] = n
                case RecvCount(t, n):
                    if recv.get(t, n) != n:
                        raise KnowledgeSetError(f"second RecvCount for {t}")
                    recv[t] = n
                case _:
                    raise TypeError(f"not a fact: {f!r}")
        return KnowledgeSet(
            frozenset(created), frozenset(released), frozenset(activated),
            frozenset(using), sent, recv,
        )

    def remove(self, *facts: Fact) -> KnowledgeSet:
        """Remove facts; every one of them must be present."""
        created, released = set(self.created), set(self.released)
        activated, using = set(self.activated), set(self.created_using)
        sent, recv = dict(self.sent), dict(self.recv)
        for f in facts:
            if f not in self:
                raise KnowledgeSetError(f"fact not present: {f}")
            match f:
                case Created(r):
                    created.discard(r)
                case Released(r):
                    released.discard(r)
                case Activated(r):
                    activated.discard(r)
                case CreatedUsing(via, made):
                    using.discard((via, made))
                case SentCount(t, _):
                    del sent[t]
                case RecvCount(t, _):
                    del recv[t]
        return KnowledgeSet(
            frozenset(created), frozenset(released), frozenset(activated),
            frozenset(using), sent, recv,
        )

    def with_counts(self, *, sent: Mapping[Token, int] | None = None,
                    recv: Mapping[Token, int] | None = None) -> KnowledgeSet:
        return KnowledgeSet(
            self.created, self.released, self.activated, self.created_using,
            self.sent if sent is None else dict(sent),
            self.recv if recv is None else dict(recv),
        )

    def refobs(self) -> set[Refob]:
        """Every refob mentioned by some fact."""
        out = set(self.created) | self.released | self.activated
        for via, made in self.created_using:
            out.add(via)
            out.add(made)
        return out


EMPTY_KNOWLEDGE = KnowledgeSet()


# -- messages ----------------------------------------------------------------


@dataclass(frozen=True, order=True, slots=True)
class AppMsg:
    along: Token
    payload: tuple[Refob, ...] = ()

    def __post_init__(self) -> None:
        if list(self.payload) != sorted(set(self.payload)):
            object.__setattr__(self, "payload", tuple(sorted(set(self.payload))))


@dataclass(frozen=True, order=True, slots=True)
class InfoMsg:
    along: Token
    created: Refob


@dataclass(frozen=True, order=True, slots=True)
class ReleaseMsg:
    refob: Refob
    count: int

    @property
    def along(self) -> Token:
        return self.refob.token


Message = Union[AppMsg, InfoMsg, ReleaseMsg]

_MSG_RANK = {AppMsg: 0, InfoMsg: 1, ReleaseMsg: 2}


def message_key(m: Message) -> tuple:
    return (_MSG_RANK[type(m)], m)


# -- actors and configurations -----------------------------------------------


class Mode(enum.Enum):
    BUSY = "busy"
    IDLE = "idle"


@dataclass(frozen=True, slots=True)
class ActorState:
    mode: Mode
    knowledge: KnowledgeSet

    @property
    def busy(self) -> bool:
        return self.mode is Mode.BUSY

    @property
    def idle(self) -> bool:
        return self.mode is Mode.IDLE


@dataclass(frozen=True, eq=False)
class Configuration:
    """Global state: actors, undelivered messages, receptionists, externals.

    ``next_address`` and ``next_seq`` implement fresh-name generation: an
    address is fresh iff it is ``>= next_address``; a token ``(c, s)`` is fresh
    iff ``s >= next_seq.get(c, 0)``.
    """

    alpha: Mapping[Address, ActorState]
    mu: Mapping[Address, tuple[Message, ...]]
    rho: frozenset[Address]
    chi: frozenset[Address]
    next_address: int
    next_seq: Mapping[Address, int]

    def mailbox(self, a: Address) -> tuple[Message, ...]:
        return self.mu.get(a, ())

    def knowledge(self, a: Address) -> KnowledgeSet:
        return self.alpha[a].knowledge

    def internal(self) -> list[Address]:
        return sorted(self.alpha)

    def is_fresh_address(self, a: Address) -> bool:
        return a >= self.next_address

    def is_fresh_token(self, t: Token) -> bool:
        return not t.is_bottom and t.seq >= self.next_seq.get(t.creator, 0)

    def peek_tokens(self, creator: Address, n: int) -> tuple[Token, ...]:
        base = self.next_seq.get(creator, 0)
        return tuple(Token(creator, base + i) for i in range(n))

    def key(self) -> tuple:
        """Canonical hashable form; mailbox order is ignored."""
        return (
            tuple((a, s.mode.value, s.knowledge.key()) for a, s in sorted(self.alpha.items())),
            tuple(
                (a, tuple(sorted(ms, key=message_key)))
                for a, ms in sorted(self.mu.items()) if ms
            ),
            tuple(sorted(self.rho)),
            tuple(sorted(self.chi)),
            self.next_address,
            tuple(sorted(self.next_seq.items())),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def evolve(self, **changes) -> Configuration:
        fields_ = dict(
            alpha=self.alpha, mu=self.mu, rho=self.rho, chi=self.chi,
            next_address=self.next_address, next_seq=self.next_seq,
        )
        fields_.update(changes)
        return Configuration(**fields_)


def fresh_token(creator: Address, counters: dict[Address, int]) -> Token:
    """Issue the creator's next token and advance its counter."""
    seq = counters.get(creator, 0)
    counters[creator] = seq + 1
    return Token(creator, seq)


#: Address of the single internal actor in the initial configuration.
INITIAL_ACTOR: Address = 0
#: Address of the external actor it initially references.
INITIAL_EXTERNAL: Address = 1


def initial_configuration() -> Configuration:
    """One busy actor holding a refob to itself and one to an external actor."""
    a, e = INITIAL_ACTOR, INITIAL_EXTERNAL
    counters: dict[Address, int] = {}
    x = Refob(fresh_token(a, counters), a, e)
    y = Refob(fresh_token(a, counters), a, a)
    phi = KnowledgeSet.of(Activated(x), Created(y), Activated(y))
    return Configuration(
        alpha={a: ActorState(Mode.BUSY, phi)},
        mu={},
        rho=frozenset(),
        chi=frozenset({e}),
        next_address=2,
        next_seq=counters,
    )


def check_configuration(k: Configuration) -> list[str]:
    """Locality and bookkeeping invariants; returns human-readable problems."""
    problems = []
    internal = set(k.alpha)
    if not k.rho <= internal:
        problems.append(f"receptionists not internal: {sorted(k.rho - internal)}")
    if internal & k.chi:
        problems.append(f"actors both internal and external: {sorted(internal & k.chi)}")
    stray = {a for a, ms in k.mu.items() if ms} - internal - k.chi
    if stray:
        problems.append(f"mailboxes for unknown actors: {sorted(stray)}")
    for a in internal | k.chi:
        if a >= k.next_address:
            problems.append(f"address {a} not below next_address")
    return problems


def sorted_refobs(refobs: Iterable[Refob]) -> tuple[Refob, ...]:
    return tuple(sorted(set(refobs)))
