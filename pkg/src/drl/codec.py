"""JSON forms of protocol values, and canonical configuration hashes.

Tokens encode as ``"creator.seq"`` (``"bottom"`` for the external token) and
refobs as ``{"token", "owner", "target"}``. Maps with non-string keys become
sorted lists of pairs, so every encoding is deterministic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import fields
from functools import lru_cache
from typing import Any

from drl.aggregator import SnapshotStore
from drl.events import EVENT_TYPES, Event
from drl.model import (
    BOTTOM,
    ActorState,
    AppMsg,
    Configuration,
    InfoMsg,
    KnowledgeSet,
    Message,
    Mode,
    Refob,
    ReleaseMsg,
    Token,
    message_key,
)


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def token_to_json(t: Token) -> str:
    return str(t)


def token_from_json(s: str) -> Token:
    if s == "bottom":
        return BOTTOM
    c, _, n = s.partition(".")
    return Token(int(c), int(n))


def refob_to_json(r: Refob) -> dict:
    return {"token": str(r.token), "owner": r.owner, "target": r.target}


def refob_from_json(d: dict) -> Refob:
    return Refob(token_from_json(d["token"]), int(d["owner"]), int(d["target"]))


def knowledge_to_json(phi: KnowledgeSet) -> dict:
    return dict(_knowledge_json(phi))


@lru_cache(maxsize=8192)
def _knowledge_json(phi: KnowledgeSet) -> dict:
    # Shared between callers; configuration_to_json only serializes it.
    return {
        "created": [refob_to_json(r) for r in sorted(phi.created)],
        "released": [refob_to_json(r) for r in sorted(phi.released)],
        "activated": [refob_to_json(r) for r in sorted(phi.activated)],
        "created_using": [[refob_to_json(a), refob_to_json(b)]
                          for a, b in sorted(phi.created_using)],
        "sent": [[str(t), n] for t, n in sorted(phi.sent.items())],
        "recv": [[str(t), n] for t, n in sorted(phi.recv.items())],
    }


def knowledge_from_json(d: dict) -> KnowledgeSet:
    return KnowledgeSet(
        frozenset(refob_from_json(r) for r in d.get("created", [])),
        frozenset(refob_from_json(r) for r in d.get("released", [])),
        frozenset(refob_from_json(r) for r in d.get("activated", [])),
        frozenset((refob_from_json(a), refob_from_json(b)) for a, b in d.get("created_using", [])),
        {token_from_json(t): int(n) for t, n in d.get("sent", [])},
        {token_from_json(t): int(n) for t, n in d.get("recv", [])},
    )


def message_to_json(m: Message) -> dict:
    match m:
        case AppMsg(along, payload):
            return {"kind": "app", "along": str(along), "payload": [refob_to_json(r) for r in payload]}
        case InfoMsg(along, created):
            return {"kind": "info", "along": str(along), "created": refob_to_json(created)}
        case ReleaseMsg(refob, count):
            return {"kind": "release", "refob": refob_to_json(refob), "count": count}
    raise TypeError(f"not a message: {m!r}")


def message_from_json(d: dict) -> Message:
    kind = d["kind"]
    if kind == "app":
        return AppMsg(token_from_json(d["along"]), tuple(refob_from_json(r) for r in d["payload"]))
    if kind == "info":
        return InfoMsg(token_from_json(d["along"]), refob_from_json(d["created"]))
    if kind == "release":
        return ReleaseMsg(refob_from_json(d["refob"]), int(d["count"]))
    raise ValueError(f"unknown message kind {kind!r}")


def configuration_to_json(k: Configuration) -> dict:
    return {
        "actors": [
            {"address": a, "mode": st.mode.value, "knowledge": _knowledge_json(st.knowledge)}
            for a, st in sorted(k.alpha.items())
        ],
        "mailboxes": [
            {"address": a, "messages": [message_to_json(m) for m in sorted(ms, key=message_key)]}
            for a, ms in sorted(k.mu.items()) if ms
        ],
        "receptionists": sorted(k.rho),
        "externals": sorted(k.chi),
        "next_address": k.next_address,
        "next_seq": [[a, n] for a, n in sorted(k.next_seq.items())],
    }


def configuration_from_json(d: dict) -> Configuration:
    return Configuration(
        alpha={int(x["address"]): ActorState(Mode(x["mode"]), knowledge_from_json(x["knowledge"]))
               for x in d["actors"]},
        mu={int(x["address"]): tuple(message_from_json(m) for m in x["messages"])
            for x in d["mailboxes"]},
        rho=frozenset(d["receptionists"]),
        chi=frozenset(d["externals"]),
        next_address=int(d["next_address"]),
        next_seq={int(a): int(n) for a, n in d["next_seq"]},
    )


def configuration_hash(k: Configuration) -> str:
    return hashlib.sha256(dumps(configuration_to_json(k)).encode()).hexdigest()


def _value_to_json(v: Any) -> Any:
    if isinstance(v, Token):
        return str(v)
    if isinstance(v, Refob):
        return refob_to_json(v)
    if isinstance(v, tuple):
        return [_value_to_json(x) for x in v]
    return v


def event_to_json(e: Event) -> dict:
    out: dict[str, Any] = {"rule": e.label}
    for f in fields(e):
        out[f.name] = _value_to_json(getattr(e, f.name))
    return out


_TOKEN_FIELDS = {"token"}
_TOKEN_OR_TUPLE = {"via", "created"}


def event_from_json(d: dict) -> Event:
    try:
        cls = EVENT_TYPES[d["rule"]]
    except KeyError:
        raise ValueError(f"unknown rule {d.get('rule')!r}") from None
    kwargs: dict[str, Any] = {}
    for f in fields(cls):
        v = d[f.name]
        if f.name in _TOKEN_FIELDS or (f.name in _TOKEN_OR_TUPLE and isinstance(v, str)):
            kwargs[f.name] = token_from_json(v)
        elif f.name in _TOKEN_OR_TUPLE:
            kwargs[f.name] = tuple(token_from_json(x) for x in v)
        elif f.name == "payload":
            kwargs[f.name] = tuple(refob_from_json(r) for r in v)
        elif f.name == "targets":
            kwargs[f.name] = tuple(int(x) for x in v)
        else:
            kwargs[f.name] = int(v)
    return cls(**kwargs)


def store_to_json(store: SnapshotStore) -> dict:
    return {
        "snapshots": [
            {"actor": a, "taken_at": t, "knowledge": knowledge_to_json(phi)}
            for a, (phi, t) in sorted(store.entries.items())
        ]
    }


def store_from_json(d: dict) -> SnapshotStore:
    store = SnapshotStore()
    for x in d["snapshots"]:
        store.record(int(x["actor"]), knowledge_from_json(x["knowledge"]), int(x.get("taken_at", 0)))
    return store
