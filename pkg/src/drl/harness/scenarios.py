"""Scripted, deterministic scenarios with hand-checked expectations.

Each scenario drives the transition rules through a fixed event sequence,
checks every step with the same invariants the random runner uses, and
evaluates a handful of named expectations about the states it reaches.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

from drl import oracle
from drl.aggregator import SnapshotStore
from drl.codec import event_to_json
from drl.deduction import recv_count, sent_count
from drl.events import (
    Compaction,
    Event,
    Idle,
    Info,
    Receive,
    Release,
    Send,
    SendInfo,
    SendRelease,
    Snapshot,
    Spawn,
)
from drl.harness.checks import check_state, check_step
from drl.model import (
    Activated,
    Address,
    AppMsg,
    Configuration,
    Created,
    CreatedUsing,
    KnowledgeSet,
    Refob,
    Released,
    Token,
    initial_configuration,
)
from drl.semantics import Ledger, apply_event


class ScenarioError(RuntimeError):
    pass


class Script:
    """A configuration plus ledger, advanced one named step at a time."""

    def __init__(self) -> None:
        self.k: Configuration = initial_configuration()
        self.ledger = Ledger.initial(self.k)
        self.store = SnapshotStore()
        self.t = 0
        self.events: list[Event] = []
        self.problems: list[str] = []

    def step(self, e: Event) -> Configuration:
        before = self.k
        after = apply_event(before, e, self.store, self.t + 1)
        self.t += 1
        self.ledger.observe(before, e, self.t)
        self.k = after
        self.events.append(e)
        self.problems += [f"event {self.t}: {p}" for p in check_step(before, e, after, self.ledger)]
        self.problems += [f"event {self.t}: {p}" for p in check_state(after, self.ledger)]
        self.problems += [f"event {self.t}: {p}"
                          for p in oracle.check_chain_lemma(after, self.ledger)]
        return after

    # -- lookups

    def ref(self, owner: Address, target: Address, skip: int = 0) -> Refob:
        """The ``skip``-th (by token order) active refob ``owner -> target``."""
        found = sorted(r for r in self.k.knowledge(owner).activated if r.target == target)
        if len(found) <= skip:
            raise ScenarioError(f"{owner} has no active refob to {target}")
        return found[skip]

    def knowledge(self, a: Address) -> KnowledgeSet:
        return self.k.knowledge(a)

    # -- one helper per rule the scenarios use

    def spawn(self, parent: Address) -> Address:
        child = self.k.next_address
        self.step(Spawn(self.k.peek_tokens(parent, 1)[0], parent, child))
        return child

    def idle(self, a: Address) -> None:
        self.step(Idle(a))

    def send(self, sender: Address, recipient: Address, *targets: Address,
             along: Refob | None = None) -> list[Refob]:
        """Send along ``along`` (default: the first active refob), creating one refob per target."""
        x = along or self.ref(sender, recipient)
        vias = [self.ref(sender, c) for c in targets]
        zs = self.k.peek_tokens(sender, len(targets))
        self.step(Send(x.token, tuple(v.token for v in vias), zs, sender, recipient,
                       tuple(targets)))
        return [Refob(z, recipient, c) for z, c in zip(zs, targets)]

    def receive(self, recipient: Address, along: Token | None = None) -> AppMsg:
        for m in self.k.mailbox(recipient):
            if isinstance(m, AppMsg) and (along is None or m.along == along):
                self.step(Receive(m.along, recipient, m.payload))
                return m
        raise ScenarioError(f"no application message for {recipient}")

    def send_info(self, creator: Address, made: Refob) -> None:
        via = next(v for v, m in self.knowledge(creator).created_using if m == made)
        self.step(SendInfo(via.token, made.token, creator, made.owner, made.target))

    def info(self, made: Refob) -> None:
        via = next(m.along for m in self.k.mailbox(made.target)
                   if getattr(m, "created", None) == made)
        self.step(Info(via, made.token, made.owner, made.target))

    def send_release(self, r: Refob) -> None:
        self.step(SendRelease(r.token, r.owner, r.target))

    def release(self, r: Refob) -> None:
        self.step(Release(r.token, r.owner, r.target))

    def compact(self, r: Refob) -> None:
        self.step(Compaction(r.token, r.owner, r.target))

    def snapshot(self, a: Address) -> KnowledgeSet:
        self.step(Snapshot(a))
        return self.store.entries[a][0]


@dataclass
class Expectation:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ScenarioResult:
    name: str
    expectations: list[Expectation]
    events: list[Event] = field(default_factory=list)
    problems: list[str] = field(default_factory=list)
    # Scenario-level names for the addresses involved.
    actors: dict[str, Address] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.problems and all(x.ok for x in self.expectations)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "actors": self.actors,
            "expectations": [{"name": x.name, "ok": x.ok, "detail": x.detail}
                             for x in self.expectations],
            "problems": self.problems,
            "events": [event_to_json(e) for e in self.events],
        }


def facts_about(phi: KnowledgeSet, token: Token) -> list[str]:
    """Every fact in ``phi`` that mentions ``token``."""
    out = [f"{kind}({r})" for kind, rs in
           (("Created", phi.created), ("Released", phi.released), ("Activated", phi.activated))
           for r in rs if r.token == token]
    out += [f"CreatedUsing({v}, {m})" for v, m in phi.created_using
            if token in (v.token, m.token)]
    if token in phi.sent:
        out.append(f"SentCount({token}, {phi.sent[token]})")
    if token in phi.recv:
        out.append(f"RecvCount({token}, {phi.recv[token]})")
    return out


def _expect(out: list[Expectation], name: str, got, want) -> None:
    out.append(Expectation(name, got == want, f"got {got!r}, want {want!r}"))


# -- the scenarios -------------------------------------------------------------


def fig1_actor_graph() -> ScenarioResult:
    """Six actors; F sends to D, drops its refob before delivery, and is then released by A.

    A stays busy throughout. Before and after C receives the message m from
    B (which carries a refob to E), F is the only terminated actor.
    """
    s = Script()
    a = 0
    b, c, d, e, f = (s.spawn(a) for _ in range(5))
    for x in (b, c, d, e, f):
        s.idle(x)
    s.send(a, b, c, e)
    s.send(a, c, d)
    s.send(a, f, d)
    s.receive(c)
    s.idle(c)
    s.receive(b)
    (to_e,) = s.send(b, c, e)  # m
    s.idle(b)
    s.receive(f)
    s.send(f, d)
    s.send_release(s.ref(f, d))
    s.idle(f)
    a_to_f = s.ref(a, f)
    s.send_release(a_to_f)
    s.release(a_to_f)

    ex: list[Expectation] = []

    def observe(tag: str) -> None:
        _expect(ex, f"{tag}: terminated set", sorted(oracle.terminated_set(s.k, s.ledger)), [f])
        edges = oracle.acquaintance_edges(s.ledger)
        ex.append(Expectation(f"{tag}: E is a potential acquaintance of C", e in edges.get(c, set()),
                              f"C's potential acquaintances: {sorted(edges.get(c, set()))}"))
        ex.append(Expectation(f"{tag}: D is potentially reachable from C",
                              d in oracle.reachable_from([c], edges)))

    _expect(ex, "m carries a pending refob C -> E", s.ledger.status(to_e.token).name, "PENDING")
    observe("before m is delivered")
    s.receive(c)
    observe("after m is delivered")
    return ScenarioResult("fig1", ex, s.events, s.problems,
                          {"A": a, "B": b, "C": c, "D": d, "E": e, "F": f})


def _fig2(info_first: bool) -> ScenarioResult:
    s = Script()
    a = 0
    b = s.spawn(a)
    c = s.spawn(a)
    s.idle(b)
    s.idle(c)
    x, y = s.ref(a, b), s.ref(a, c)
    (z,) = s.send(a, b, c)
    ex: list[Expectation] = []
    ex.append(Expectation("A records z as created using y", CreatedUsing(y, z) in s.knowledge(a)))
    s.receive(b)
    ex.append(Expectation("B activates z on receipt", Activated(z) in s.knowledge(b)))
    s.send_info(a, z)
    _expect(ex, "A holds no facts about z after SendInfo", facts_about(s.knowledge(a), z.token), [])
    s.send_release(z)
    s.idle(b)
    _expect(ex, "B holds no facts about z after SendRelease", facts_about(s.knowledge(b), z.token), [])
    if info_first:
        s.info(z)
        s.release(z)
    else:
        s.release(z)
        s.info(z)
    phi = s.knowledge(c)
    ex.append(Expectation("C knows Created(z) and Released(z)",
                          Created(z) in phi and Released(z) in phi))
    s.compact(z)
    _expect(ex, "C holds no facts about z after Compaction", facts_about(s.knowledge(c), z.token), [])
    _expect(ex, "z is released", s.ledger.status(z.token).name, "RELEASED")
    order = "info-first" if info_first else "release-first"
    return ScenarioResult(f"fig2/{order}", ex, s.events, s.problems,
                          {"A": a, "B": b, "C": c, "x": str(x.token), "y": str(y.token),
                           "z": str(z.token)})


def fig2_refob_lifecycle() -> ScenarioResult:
    """A creates z: B -> C using y; C sees the Info and Release in either order, then compacts."""
    parts = [_fig2(True), _fig2(False)]
    ex = [Expectation(f"{p.name}: {x.name}", x.ok, x.detail) for p in parts for x in p.expectations]
    return ScenarioResult("fig2", ex, parts[0].events + parts[1].events,
                          [f"{p.name}: {q}" for p in parts for q in p.problems], parts[0].actors)


def fig3_message_counts() -> ScenarioResult:
    """Per-token counts tell quiescent cuts from cuts with a message in flight.

    B sends C one message along x1, later releases x1 and sends one more
    along a fresh refob x2. B's two snapshots each hold a send count of 1.
    Counting per target address would pair B's second snapshot with C's
    snapshot from before the second message and see agreement; counting per
    token does not.
    """
    s = Script()
    a = 0
    c = s.spawn(a)
    b = s.spawn(a)
    s.idle(c)
    s.idle(b)
    (x1,) = s.send(a, b, c)
    s.receive(b)
    snaps: dict[str, tuple[KnowledgeSet, int]] = {}
    snaps["C@t0"] = (s.snapshot(c), s.t)
    s.send(b, c, along=x1)
    s.idle(b)
    snaps["B@t1"] = (s.snapshot(b), s.t)
    s.receive(c)
    s.idle(c)
    snaps["C@t2"] = (s.snapshot(c), s.t)
    (x2,) = s.send(a, b, c)
    s.receive(b)
    s.send_release(x1)
    s.send(b, c, along=x2)
    s.idle(b)
    snaps["B@t3"] = (s.snapshot(b), s.t)
    s.receive(c)
    s.idle(c)
    s.release(x1)
    snaps["C@t4"] = (s.snapshot(c), s.t)

    def owner_of(t: Token) -> Address:
        return s.ledger.refobs[t].owner

    def agree_by_token(pb: KnowledgeSet, pc: KnowledgeSet) -> bool:
        # C keeps a receive count for a released refob until compaction; it no longer matters.
        gone = {r.token for r in pc.released}
        tokens = {t for t in pb.sent if s.ledger.refobs[t].target == c} | \
                 {t for t in pc.recv if owner_of(t) == b}
        return all(sent_count(pb, t) == recv_count(pc, t) for t in tokens - gone)

    def agree_by_name(pb: KnowledgeSet, pc: KnowledgeSet) -> bool:
        sent = sum(n for t, n in pb.sent.items() if s.ledger.refobs[t].target == c)
        got = sum(n for t, n in pc.recv.items() if owner_of(t) == b)
        return sent == got

    def quiescent(tb: int, tc: int) -> bool:
        return all(s.ledger.in_flight_count(t, tb, tc) == 0 for t in (x1.token, x2.token))

    ex: list[Expectation] = []
    for bn in ("B@t1", "B@t3"):
        _expect(ex, f"{bn} holds one send count of 1", sorted(snaps[bn][0].sent.values()), [1])
    for bn in ("B@t1", "B@t3"):
        for cn in ("C@t0", "C@t2", "C@t4"):
            (pb, tb), (pc, tc) = snaps[bn], snaps[cn]
            agree, quiet = agree_by_token(pb, pc), quiescent(tb, tc)
            ex.append(Expectation(f"cut {bn},{cn}: per-token agreement implies no message in flight",
                                  quiet or not agree, f"agree={agree} quiescent={quiet}"))
    for bn, cn in (("B@t1", "C@t2"), ("B@t3", "C@t4")):
        ex.append(Expectation(f"cut {bn},{cn} agrees per token",
                              agree_by_token(snaps[bn][0], snaps[cn][0])))
    (pb, tb), (pc, tc) = snaps["B@t3"], snaps["C@t2"]
    ex.append(Expectation("cut B@t3,C@t2 has a message in flight", not quiescent(tb, tc)))
    ex.append(Expectation("cut B@t3,C@t2 disagrees per token", not agree_by_token(pb, pc)))
    ex.append(Expectation("cut B@t3,C@t2 agrees when counted per address",
                          agree_by_name(pb, pc)))
    return ScenarioResult("fig3", ex, s.events, s.problems,
                          {"A": a, "B": b, "C": c, "x1": str(x1.token), "x2": str(x2.token)})


def chain_example() -> ScenarioResult:
    """A1 spawns B; x1: A1 -> B begets x2: A2 -> B, which begets x3: A3 -> B.

    The chain to x3 is (x1, x2, x3) while A2 holds CreatedUsing(x2, x3), and
    still while the Info about x3 is in transit to B. Once B receives it, B
    knows Created(x3) and the chain is x3 alone.
    """
    s = Script()
    a1 = 0
    b = s.spawn(a1)
    a2 = s.spawn(a1)
    a3 = s.spawn(a1)
    for x in (b, a2, a3):
        s.idle(x)
    x1 = s.ref(a1, b)
    (x2, _) = s.send(a1, a2, b, a3)
    s.receive(a2)
    (x3,) = s.send(a2, a3, b)
    s.receive(a3)

    ex: list[Expectation] = []

    def chain() -> list[str] | None:
        found = oracle.find_chain(s.k, s.ledger, x3)
        return None if found is None else [str(r.token) for r in found]

    want = [str(x1.token), str(x2.token), str(x3.token)]
    ex.append(Expectation("B knows Created(x1) only", Created(x1) in s.knowledge(b)
                          and Created(x3) not in s.knowledge(b)))
    _expect(ex, "chain through CreatedUsing facts", chain(), want)
    s.send_info(a2, x3)
    _expect(ex, "chain through an Info message in transit", chain(), want)
    s.idle(a2)
    s.info(x3)
    _expect(ex, "direct chain once the Info is delivered", chain(), [str(x3.token)])
    return ScenarioResult("chain", ex, s.events, s.problems,
                          {"A1": a1, "B": b, "A2": a2, "A3": a3, "x1": str(x1.token),
                           "x2": str(x2.token), "x3": str(x3.token)})


SCENARIOS: dict[str, Callable[[], ScenarioResult]] = {
    "fig1": fig1_actor_graph,
    "fig2": fig2_refob_lifecycle,
    "fig3": fig3_message_counts,
    "chain": chain_example,
}


def workload_scenarios() -> list[str]:
    return list(SCENARIOS)


def run_scenario(name: str) -> ScenarioResult:
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    return fn()
