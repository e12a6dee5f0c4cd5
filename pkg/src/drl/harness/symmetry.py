"""State keys that identify states up to renaming of refob tokens.

The transition rules only ever compare tokens for equality (and draw fresh
ones), so two states that differ by a bijective renaming of tokens have the
same futures up to that renaming, and every property the explorer checks is
invariant under it.

:func:`canonical_key` renames tokens in an order derived from where each token
occurs. Ties fall back to the original token order, which keeps the key sound
(equal keys imply the states are renamings of each other) at the price of
sometimes keeping two isomorphic states apart.
"""

from __future__ import annotations

from drl.aggregator import SnapshotStore
from drl.model import AppMsg, Configuration, InfoMsg, KnowledgeSet, Refob, ReleaseMsg, Token
from drl.semantics import Ledger


def _ends(r: Refob) -> tuple[int, int]:
    return (r.owner, r.target)


def _knowledge_occurrences(tag: str, a: int, phi: KnowledgeSet, occ: dict) -> None:
    for r in phi.created:
        occ[r.token].append((tag + "C", a))
    for r in phi.released:
        occ[r.token].append((tag + "R", a))
    for r in phi.activated:
        occ[r.token].append((tag + "A", a))
    for via, made in phi.created_using:
        occ[via.token].append((tag + "U", a, 0, _ends(made)))
        occ[made.token].append((tag + "U", a, 1, _ends(via)))
    for t, n in phi.sent.items():
        occ.setdefault(t, []).append((tag + "S", a, n))
    for t, n in phi.recv.items():
        occ.setdefault(t, []).append((tag + "V", a, n))


def _signatures(k: Configuration, ledger: Ledger, store: SnapshotStore) -> dict[Token, tuple]:
    occ: dict[Token, list] = {t: [] for t in ledger.refobs}
    for a, st in k.alpha.items():
        _knowledge_occurrences("K", a, st.knowledge, occ)
    for a, (phi, _) in store.entries.items():
        _knowledge_occurrences("Q", a, phi, occ)
    for b, ms in k.mu.items():
        for m in ms:
            if isinstance(m, AppMsg):
                ends = tuple(sorted(_ends(r) for r in m.payload))
                occ.setdefault(m.along, []).append(("MA", b, ends))
                for r in m.payload:
                    occ[r.token].append(("MP", b, m.along.is_bottom))
            elif isinstance(m, InfoMsg):
                occ.setdefault(m.along, []).append(("MI", b, _ends(m.created)))
                occ[m.created.token].append(("MC", b))
            elif isinstance(m, ReleaseMsg):
                occ[m.refob.token].append(("ML", b, m.count))
    sig = {}
    for t, items in occ.items():
        r = ledger.refobs.get(t)
        if r is None:
            base = ((-1, -1), -1, False, False)
        else:
            base = (_ends(r), int(ledger.state[t]), t in ledger.spawned, t in ledger.info_received)
        sig[t] = (base, tuple(sorted(items)))
    return sig


def token_renaming(k: Configuration, ledger: Ledger, store: SnapshotStore) -> dict[Token, int]:
    sig = _signatures(k, ledger, store)
    order = sorted((t for t in sig if not t.is_bottom), key=lambda t: (sig[t], t))
    rename = {t: i for i, t in enumerate(order)}
    for t in sig:
        if t.is_bottom:
            rename[t] = -1
    return rename


def _knowledge_key(phi: KnowledgeSet, rn) -> tuple:
    def refs(rs):
        return tuple(sorted((rn[r.token], r.owner, r.target) for r in rs))
    return (
        refs(phi.created),
        refs(phi.released),
        refs(phi.activated),
        tuple(sorted(((rn[v.token], v.owner, v.target), (rn[m.token], m.owner, m.target))
                     for v, m in phi.created_using)),
        tuple(sorted((rn[t], n) for t, n in phi.sent.items())),
        tuple(sorted((rn[t], n) for t, n in phi.recv.items())),
    )


def _message_key(m, rn) -> tuple:
    if isinstance(m, AppMsg):
        return (0, rn[m.along], tuple(sorted((rn[r.token], r.owner, r.target) for r in m.payload)))
    if isinstance(m, InfoMsg):
        c = m.created
        return (1, rn[m.along], (rn[c.token], c.owner, c.target))
    r = m.refob
    return (2, (rn[r.token], r.owner, r.target), m.count)


def canonical_key(k: Configuration, ledger: Ledger, store: SnapshotStore) -> tuple:
    rn = token_renaming(k, ledger, store)
    return (
        tuple((a, st.mode.value, _knowledge_key(st.knowledge, rn))
              for a, st in sorted(k.alpha.items())),
        tuple((b, tuple(sorted(_message_key(m, rn) for m in ms)))
              for b, ms in sorted(k.mu.items()) if ms),
        tuple(sorted(k.rho)),
        tuple(sorted(k.chi)),
        k.next_address,
        tuple(sorted((rn[t], int(s), t in ledger.spawned, t in ledger.info_received)
                     for t, s in ledger.state.items())),
        tuple(sorted(ledger.destroyed)),
        tuple((a, _knowledge_key(phi, rn)) for a, (phi, _) in sorted(store.entries.items())),
    )
