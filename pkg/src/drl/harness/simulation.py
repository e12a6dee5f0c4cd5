"""Seeded random runs with online invariant checking."""

from __future__ import annotations

import hashlib
import random
import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

from drl import oracle
from drl.aggregator import SnapshotStore, detect
from drl.codec import configuration_hash, dumps, event_to_json
from drl.events import Event, In, Snapshot
from drl.harness.checks import (
    check_safety,
    check_simple_garbage,
    check_state,
    check_step,
    sample_msg_counts,
    touches,
)
from drl.harness.policies import SnapshotPolicy
from drl.model import Address, initial_configuration
from drl.semantics import (
    ExplorationBounds,
    Ledger,
    actor_events,
    apply_event,
    environment_events,
    in_events,
)

RANDOM_BOUNDS = ExplorationBounds(include_snapshots=False)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a random run."""

    seed: int = 0
    bounds: ExplorationBounds = RANDOM_BOUNDS
    snapshot_policy: SnapshotPolicy = SnapshotPolicy()
    check_every: int = 10
    # After this many scheduled events, no more In, Spawn or Send: the system winds down.
    allow_in_until: int | None = None
    in_probability: float = 0.1
    # Relative weight of Idle against each other rule label a busy actor can take
    # before the cutoff; below 1 it keeps busy actors working longer.
    idle_weight: float = 0.25
    self_destruct: bool = False
    msg_count_samples: int = 0
    final_sweep: bool = True
    halt_on_violation: bool = False

    def __post_init__(self) -> None:
        if self.check_every <= 0:
            raise ValueError("check_every must be positive")
        if self.idle_weight <= 0:
            raise ValueError("idle_weight must be positive")
        if not 0.0 <= self.in_probability <= 1.0:
            raise ValueError("in_probability must be within [0, 1]")
        if self.allow_in_until is not None and self.allow_in_until < 0:
            raise ValueError("allow_in_until must be >= 0")

    def to_json(self) -> dict:
        d = asdict(self)
        d["snapshot_policy"] = str(self.snapshot_policy)
        return d

    @classmethod
    def from_json(cls, d: dict) -> RunConfig:
        d = dict(d)
        d["bounds"] = ExplorationBounds(**d["bounds"])
        d["snapshot_policy"] = SnapshotPolicy.parse(d["snapshot_policy"])
        return cls(**d)


@dataclass
class Violation:
    kind: str
    index: int
    detail: str


@dataclass
class TraceEntry:
    index: int
    source: str
    event: Event
    hash: str

    def to_json(self) -> dict:
        return {"type": "event", "index": self.index, "source": self.source,
                "event": event_to_json(self.event), "hash": self.hash}


@dataclass
class RunReport:
    seed: int
    config: dict
    events: int
    scheduled: int
    quiescent: bool
    rule_counts: dict[str, int]
    violations: list[Violation]
    terminated: list[Address]
    detected: list[Address]
    liveness_misses: list[Address]
    detection_latency: dict[str, int]
    checks: int
    simple_garbage_hits: int
    msg_count_samples: int
    msg_count_mismatches: list[dict]
    final_hash: str
    trace_digest: str
    destroyed: list[Address] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.msg_count_mismatches

    def to_json(self) -> dict:
        d = asdict(self)
        d["violations"] = [asdict(v) for v in self.violations]
        return d


class Simulation:
    """A configuration, its ledger, a snapshot store, and the event trace so far."""

    def __init__(self, cfg: RunConfig, record_history: bool = False) -> None:
        self.cfg = cfg
        self.k = initial_configuration()
        self.ledger = Ledger.initial(self.k)
        self.store = SnapshotStore()
        self.t = 0
        self.scheduled = 0
        self.injections = 0
        self.trace: list[TraceEntry] = []
        self.history = [self.k] if record_history else None
        self.violations: list[Violation] = []
        self.rule_counts: Counter[str] = Counter()
        self.destroyed: set[Address] = set()
        self.first_terminated: dict[Address, int] = {}
        self.first_detected: dict[Address, int] = {}
        self.prev_terminated: set[Address] = set()
        self.checks = 0
        self.simple_garbage_hits = 0
        self.finished: RunReport | None = None

    # -- stepping

    def violate(self, kind: str, detail: str) -> None:
        self.violations.append(Violation(kind, self.t, detail))

    def apply(self, e: Event, source: str) -> None:
        before = self.k
        if self.destroyed and touches(e, self.destroyed):
            self.violate("self-destruct", f"{e.label} involves a destroyed actor")
        after = apply_event(before, e, self.store, self.t + 1)
        self.t += 1
        self.ledger.observe(before, e, self.t)
        self.k = after
        self.rule_counts[e.label] += 1
        if isinstance(e, In):
            self.injections += 1
        self.trace.append(TraceEntry(self.t, source, e, configuration_hash(after)))
        if self.history is not None:
            self.history.append(after)
        for p in check_step(before, e, after, self.ledger):
            self.violate("step", p)

    def step_scheduled(self, e: Event) -> None:
        if isinstance(e, Snapshot):
            raise ValueError("snapshots are inserted by the snapshot policy, not scheduled")
        self.scheduled += 1
        self.apply(e, "scheduler")
        for s in self.cfg.snapshot_policy.after(e, self.k, self.scheduled):
            self.apply(s, "policy")
        if self.scheduled % self.cfg.check_every == 0:
            self.check()

    # -- workload

    @property
    def winding_down(self) -> bool:
        cut = self.cfg.allow_in_until
        return cut is not None and self.scheduled >= cut

    def candidate_groups(self) -> list[list[Event]]:
        """Enabled non-In events, grouped by acting actor (environment events last)."""
        bounds = self.cfg.bounds
        groups = []
        growth = not self.winding_down
        for a in self.k.internal():
            evs = [e for e in actor_events(self.k, a, bounds, growth)
                   if not isinstance(e, Snapshot)]
            if evs:
                groups.append(evs)
        env = environment_events(self.k, replace(bounds, allow_in=False))
        if env:
            groups.append(env)
        return groups

    def in_possible(self) -> bool:
        b = self.cfg.bounds
        return (b.allow_in and not self.winding_down and bool(self.k.rho)
                and self.injections < b.max_external_injections)

    def quiescent(self) -> bool:
        return not self.candidate_groups() and not self.in_possible()

    def choose(self, rng: random.Random) -> Event | None:
        groups = self.candidate_groups()
        if self.in_possible() and (not groups or rng.random() < self.cfg.in_probability):
            return rng.choice(in_events(self.k, self.cfg.bounds))
        if not groups:
            return None
        group = rng.choice(groups)
        labels = sorted({e.label for e in group})
        idle_weight = 1.0 if self.winding_down else self.cfg.idle_weight
        weights = [idle_weight if lab == "Idle" else 1.0 for lab in labels]
        label = rng.choices(labels, weights)[0]
        cands = [e for e in group if e.label == label]
        if label == "Send":
            fan_out = rng.choice(sorted({len(e.via) for e in cands}))
            cands = [e for e in cands if len(e.via) == fan_out]
        return rng.choice(cands)

    # -- checking

    def destroy(self, actors: set[Address]) -> None:
        alpha = dict(self.k.alpha)
        mu = dict(self.k.mu)
        for a in sorted(actors):
            if mu.get(a):
                self.violate("self-destruct", f"destroyed actor {a} had undelivered messages")
            self.ledger.destroyed[a] = alpha.pop(a).knowledge
            mu.pop(a, None)
        self.k = self.k.evolve(alpha=alpha, mu=mu)
        self.store.forget(actors)
        self.destroyed |= actors

    def check(self) -> set[Address]:
        """Run every state-level check; returns what the aggregator detected."""
        self.checks += 1
        k, ledger = self.k, self.ledger
        for p in check_state(k, ledger):
            self.violate("state", p)
        for p in oracle.check_chain_lemma(k, ledger):
            self.violate("chain-lemma", p)
        terminated = oracle.terminated_set(k, ledger)
        self.simple_garbage_hits += len(oracle.simple_garbage(k))
        for p in check_simple_garbage(k, ledger, terminated):
            self.violate("simple-garbage", p)
        shrunk = self.prev_terminated - terminated - self.destroyed
        if shrunk:
            self.violate("terminated-monotone", f"actors {sorted(shrunk)} stopped being terminated")
        self.prev_terminated = set(terminated)
        for a in terminated:
            self.first_terminated.setdefault(a, self.t)
        detected = detect(self.store)
        for p in check_safety(detected, terminated):
            self.violate("safety", p)
        for a in detected:
            self.first_detected.setdefault(a, self.t)
        if self.cfg.self_destruct and detected - self.destroyed:
            self.destroy(detected & terminated)
        return detected

    def finish(self) -> RunReport:
        if self.finished is not None:
            return self.finished
        quiescent = self.quiescent()
        if self.cfg.snapshot_policy.takes_snapshots and self.cfg.final_sweep:
            for a in self.k.internal():
                if self.k.alpha[a].idle:
                    self.apply(Snapshot(a), "sweep")
        detected = self.check()
        terminated = oracle.terminated_set(self.k, self.ledger)
        misses: list[Address] = []
        if self.cfg.snapshot_policy.takes_snapshots and self.cfg.final_sweep:
            misses = sorted(terminated - detected)
        samples = []
        if self.cfg.msg_count_samples and self.history is not None:
            rng = random.Random(f"drl-msg-counts-{self.cfg.seed}")
            samples = sample_msg_counts(self.history, self.ledger, rng, self.cfg.msg_count_samples)
        latency = {str(a): self.first_detected[a] - self.first_terminated[a]
                   for a in sorted(self.first_detected) if a in self.first_terminated}
        digest = hashlib.sha256()
        for entry in self.trace:
            digest.update(dumps(entry.to_json()).encode())
            digest.update(b"\n")
        self.finished = RunReport(
            seed=self.cfg.seed,
            config=self.cfg.to_json(),
            events=self.t,
            scheduled=self.scheduled,
            quiescent=quiescent,
            rule_counts=dict(sorted(self.rule_counts.items())),
            violations=list(self.violations),
            terminated=sorted(terminated),
            detected=sorted(detected | self.destroyed),
            liveness_misses=misses,
            detection_latency=latency,
            checks=self.checks,
            simple_garbage_hits=self.simple_garbage_hits,
            msg_count_samples=len(samples),
            msg_count_mismatches=[asdict(s) for s in samples if s.expected != s.observed],
            final_hash=configuration_hash(self.k),
            trace_digest=digest.hexdigest(),
            destroyed=sorted(self.destroyed),
        )
        return self.finished


def scheduler_rng(seed: int) -> random.Random:
    return random.Random(f"drl-scheduler-{seed}")


def run_random(cfg: RunConfig) -> tuple[RunReport, Simulation]:
    sim = Simulation(cfg, record_history=cfg.msg_count_samples > 0)
    rng = scheduler_rng(cfg.seed)
    while sim.scheduled < cfg.bounds.max_events_per_run:
        e = sim.choose(rng)
        if e is None:
            break
        sim.step_scheduled(e)
        if cfg.halt_on_violation and sim.violations:
            break
    return sim.finish(), sim


def mean_latency(reports: list[RunReport]) -> float | None:
    values = [v for r in reports for v in r.detection_latency.values()]
    return statistics.fmean(values) if values else None
