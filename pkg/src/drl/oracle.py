"""Ground truth computed from a configuration plus its :class:`~drl.semantics.Ledger`.

These analyses see things no actor can see (every refob ever created, every
message in transit), which is what makes them usable as test oracles for the
protocol's local reasoning.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable

from drl.deduction import recv_count, sent_count
from drl.model import AppMsg, Address, Configuration, InfoMsg, KnowledgeSet, Refob
from drl.semantics import Ledger, Lifecycle


def acquaintance_edges(ledger: Ledger) -> dict[Address, set[Address]]:
    """owner -> targets over every unreleased refob, including ones still in transit."""
    edges: dict[Address, set[Address]] = {}
    for r in ledger.unreleased():
        edges.setdefault(r.owner, set()).add(r.target)
    return edges


def blocked(k: Configuration, ledger: Ledger | None, a: Address) -> bool:
    """Idle, not a receptionist, and no undelivered messages of any kind."""
    if a not in k.alpha:
        raise ValueError(f"blocked() is defined for internal actors only, got {a}")
    return k.alpha[a].idle and a not in k.rho and not k.mailbox(a)


def reachable_from(sources: Iterable[Address], edges: dict[Address, set[Address]]) -> set[Address]:
    seen = set(sources)
    todo = deque(seen)
    while todo:
        a = todo.popleft()
        for b in edges.get(a, ()):
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return seen


def terminated_set(k: Configuration, ledger: Ledger) -> set[Address]:
    """Internal actors not potentially reachable from any unblocked or external actor."""
    sources = set(k.chi) | {a for a in k.alpha if not blocked(k, ledger, a)}
    live = reachable_from(sources, acquaintance_edges(ledger))
    return set(k.alpha) - live


def root_set(k: Configuration) -> set[Address]:
    roots = set(k.rho)
    for e in k.chi:
        for m in k.mailbox(e):
            if isinstance(m, AppMsg):
                roots.update(r.target for r in m.payload if r.target in k.alpha)
    return roots


def _chain_links(k: Configuration, ledger: Ledger, b: Address) -> dict[Refob, set[Refob]]:
    """x_i -> candidates x_{i+1} for chains into ``b``."""
    links: dict[Refob, set[Refob]] = {}
    for st in k.alpha.values():
        for via, made in st.knowledge.created_using:
            if via.target == b:
                links.setdefault(via, set()).add(made)
    for m in k.mailbox(b):
        if isinstance(m, InfoMsg) and m.along in ledger.refobs:
            links.setdefault(ledger.refobs[m.along], set()).add(m.created)
    return links


def chains_into(k: Configuration, ledger: Ledger, b: Address) -> dict[Refob, list[Refob]]:
    """For every refob into ``b`` that has a chain, one shortest such chain."""
    def unreleased(r: Refob) -> bool:
        st = ledger.status(r.token)
        return st is not None and st != Lifecycle.RELEASED and ledger.refobs[r.token] == r

    phi = k.knowledge(b)
    links = _chain_links(k, ledger, b)
    owner_facts = {a: st.knowledge for a, st in k.alpha.items()}
    found: dict[Refob, list[Refob]] = {}
    todo: deque[Refob] = deque()
    for r in sorted(phi.derived_created):
        if r.target == b and unreleased(r):
            found[r] = [r]
            todo.append(r)
    while todo:
        r = todo.popleft()
        for nxt in sorted(links.get(r, ())):
            if nxt in found or not unreleased(nxt):
                continue
            # CreatedUsing links must be held by the owner of r; Info links are in transit.
            held = r.owner in owner_facts and (r, nxt) in owner_facts[r.owner].created_using
            in_transit = InfoMsg(r.token, nxt) in k.mailbox(b)
            if held or in_transit:
                found[nxt] = found[r] + [nxt]
                todo.append(nxt)
    return found


def find_chain(k: Configuration, ledger: Ledger, x: Refob) -> list[Refob] | None:
    st = ledger.status(x.token)
    if st is None or st == Lifecycle.RELEASED:
        raise ValueError(f"{x} is not an unreleased refob")
    if x.target not in k.alpha:
        raise ValueError(f"target of {x} is not internal")
    return chains_into(k, ledger, x.target).get(x)


def check_chain_lemma(k: Configuration, ledger: Ledger) -> list[str]:
    problems = []
    roots = root_set(k)
    into: dict[Address, list[Refob]] = {}
    for r in ledger.unreleased():
        into.setdefault(r.target, []).append(r)
    for b in k.internal():
        if b not in into:
            continue
        chains = chains_into(k, ledger, b)
        if b in roots:
            external = [r for r in into[b] if r.owner in k.chi]
            if not any(r in chains for r in external):
                problems.append(f"root actor {b}: no external-owned refob has a chain")
        else:
            for r in into[b]:
                if r not in chains:
                    problems.append(f"no chain to unreleased refob {r}")
    return problems


def is_simple_garbage_local(b: Address, phi: KnowledgeSet, literal: bool = False) -> bool:
    """Local test an idle actor can run on its own knowledge set.

    Premises: no ``Created(x: A -> b)`` with ``A != b``, and matching send and
    receive counts on every self-refob. ``Created`` is read as derivable, so a
    refob ``z: A -> b`` that ``b`` minted with one of its own self-refobs
    (recorded only as ``CreatedUsing``) counts as a foreign inverse acquaintance.

    One more premise is added unless ``literal``: every self-refob ``b`` knows
    it created is still activated or already released. A self-refob that is
    neither has a release (or an Info ahead of it) still in flight to ``b``;
    the counts cannot see it, because deactivation drops the send count.
    ``literal=True`` checks only the first two premises, with ``Created``
    read as plain membership.
    """
    created = phi.created if literal else phi.derived_created
    for r in created:
        if r.target != b:
            continue
        if r.owner != b:
            return False
        if sent_count(phi, r.token) != recv_count(phi, r.token):
            return False
        if not literal and r not in phi.activated and r not in phi.released:
            return False
    return True


def simple_garbage(k: Configuration) -> set[Address]:
    return {a for a, st in k.alpha.items()
            if st.idle and is_simple_garbage_local(a, st.knowledge)}

