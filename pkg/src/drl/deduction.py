"""Derivability of facts from a knowledge set.

The fact language is shallow, so derivation is direct case analysis:
membership, default-zero message counts, ``Created`` implied by
``CreatedUsing``, and ``Unreleased`` as Created-and-not-Released
(negation as failure).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from drl.model import (
    Activated,
    Created,
    CreatedUsing,
    KnowledgeSet,
    Refob,
    Released,
    RecvCount,
    SentCount,
    Token,
)


@dataclass(frozen=True, slots=True)
class Unreleased:
    refob: Refob


Query = Union[Created, Released, Unreleased, Activated, CreatedUsing, SentCount, RecvCount]


def sent_count(phi: KnowledgeSet, x: Token) -> int:
    return phi.sent.get(x, 0)


def recv_count(phi: KnowledgeSet, x: Token) -> int:
    return phi.recv.get(x, 0)


def derives(phi: KnowledgeSet, q: Query) -> bool:
    match q:
        case Created(r):
            return r in phi.derived_created
        case Released(r):
            return r in phi.released
        case Unreleased(r):
            return r in phi.derived_created and r not in phi.released
        case Activated(r):
            return r in phi.activated
        case CreatedUsing(via, made):
            return (via, made) in phi.created_using
        case SentCount(t, n):
            return sent_count(phi, t) == n
        case RecvCount(t, n):
            return recv_count(phi, t) == n
    raise TypeError(f"not a query: {q!r}")


def inc_sent(x: Token, phi: KnowledgeSet) -> KnowledgeSet:
    sent = dict(phi.sent)
    sent[x] = sent.get(x, 0) + 1
    return phi.with_counts(sent=sent)


def inc_recv(x: Token, phi: KnowledgeSet) -> KnowledgeSet:
    recv = dict(phi.recv)
    recv[x] = recv.get(x, 0) + 1
    return phi.with_counts(recv=recv)
