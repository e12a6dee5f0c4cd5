"""Transition labels.

One frozen dataclass per rule. Field names double as the JSON parameter
names used in trace files.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import ClassVar, Union

from drl.model import Address, Refob, Token


@dataclass(frozen=True, slots=True)
class Spawn:
    label: ClassVar[str] = "Spawn"
    token: Token
    parent: Address
    child: Address


@dataclass(frozen=True, slots=True)
class Send:
    """Application message along ``token`` carrying refobs ``created[i]: recipient -> targets[i]``,
    each created using the sender's refob ``via[i]``."""

    label: ClassVar[str] = "Send"
    token: Token
    via: tuple[Token, ...]
    created: tuple[Token, ...]
    sender: Address
    recipient: Address
    targets: tuple[Address, ...]


@dataclass(frozen=True, slots=True)
class Receive:
    label: ClassVar[str] = "Receive"
    token: Token
    recipient: Address
    payload: tuple[Refob, ...]


@dataclass(frozen=True, slots=True)
class Idle:
    label: ClassVar[str] = "Idle"
    actor: Address


@dataclass(frozen=True, slots=True)
class SendInfo:
    label: ClassVar[str] = "SendInfo"
    via: Token
    created: Token
    sender: Address
    owner: Address
    target: Address


@dataclass(frozen=True, slots=True)
class Info:
    label: ClassVar[str] = "Info"
    via: Token
    created: Token
    owner: Address
    target: Address


@dataclass(frozen=True, slots=True)
class SendRelease:
    label: ClassVar[str] = "SendRelease"
    token: Token
    owner: Address
    target: Address


@dataclass(frozen=True, slots=True)
class Release:
    label: ClassVar[str] = "Release"
    token: Token
    owner: Address
    target: Address


@dataclass(frozen=True, slots=True)
class Compaction:
    label: ClassVar[str] = "Compaction"
    token: Token
    owner: Address
    target: Address


@dataclass(frozen=True, slots=True)
class Snapshot:
    label: ClassVar[str] = "Snapshot"
    actor: Address


@dataclass(frozen=True, slots=True)
class In:
    label: ClassVar[str] = "In"
    receptionist: Address
    payload: tuple[Refob, ...]


@dataclass(frozen=True, slots=True)
class Out:
    label: ClassVar[str] = "Out"
    token: Token
    external: Address
    payload: tuple[Refob, ...]


@dataclass(frozen=True, slots=True)
class ReleaseOut:
    label: ClassVar[str] = "ReleaseOut"
    token: Token
    external: Address


@dataclass(frozen=True, slots=True)
class InfoOut:
    label: ClassVar[str] = "InfoOut"
    via: Token
    created: Token
    owner: Address
    external: Address


Event = Union[
    Spawn, Send, Receive, Idle, SendInfo, Info, SendRelease, Release,
    Compaction, Snapshot, In, Out, ReleaseOut, InfoOut,
]

EVENT_TYPES: dict[str, type] = {
    cls.label: cls
    for cls in (Spawn, Send, Receive, Idle, SendInfo, Info, SendRelease, Release,
                Compaction, Snapshot, In, Out, ReleaseOut, InfoOut)
}

RULE_LABELS: tuple[str, ...] = tuple(EVENT_TYPES)


def event_params(e: Event) -> tuple:
    return tuple(getattr(e, f.name) for f in fields(e))


def event_sort_key(e: Event) -> tuple:
    return (e.label, event_params(e))


def acting_actor(e: Event) -> Address | None:
    """The internal actor whose step this is, or None for environment rules."""
    match e:
        case Spawn(parent=a) | Send(sender=a) | Idle(actor=a) | SendInfo(sender=a) \
                | SendRelease(owner=a) | Snapshot(actor=a):
            return a
        case Receive(recipient=a) | Info(target=a) | Release(target=a) | Compaction(target=a):
            return a
    return None


def mentioned_actors(e: Event) -> set[Address]:
    out: set[Address] = set()
    for f in fields(e):
        v = getattr(e, f.name)
        if f.name in ("via", "created", "token"):
            continue
        if isinstance(v, int):
            out.add(v)
        elif isinstance(v, tuple):
            for item in v:
                if isinstance(item, Refob):
                    out.update((item.owner, item.target))
                elif isinstance(item, int):
                    out.add(item)
    return out
