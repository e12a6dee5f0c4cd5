"""Trace files (JSON lines) and hash-verified replay.

A trace starts with a header line holding the run configuration, then one
line per applied event with the hash of the configuration it produced, then
an ``end`` line if the run finished. Replay re-drives a fresh
:class:`~drl.harness.simulation.Simulation` with the recorded scheduler
choices; policy and sweep snapshots are regenerated and compared like any
other entry.
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from drl.codec import dumps, event_from_json
from drl.harness.simulation import RunConfig, RunReport, Simulation
from drl.semantics import RejectedEvent

TRACE_VERSION = 1


def trace_lines(sim: Simulation) -> list[str]:
    lines = [dumps({"type": "header", "version": TRACE_VERSION, "config": sim.cfg.to_json()})]
    lines += [dumps(entry.to_json()) for entry in sim.trace]
    if sim.finished is not None:
        lines.append(dumps({"type": "end", "events": sim.t,
                            "trace_digest": sim.finished.trace_digest}))
    return lines


def write_trace(sim: Simulation, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(trace_lines(sim)) + "\n")


def read_trace(path: Path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


class TraceFormatError(ValueError):
    pass


@dataclass
class ReplayResult:
    ok: bool
    replayed: int
    divergence: int | None
    message: str
    report: RunReport | None

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "replayed": self.replayed,
            "divergence": self.divergence,
            "message": self.message,
            "report": None if self.report is None else self.report.to_json(),
        }


def replay(records: Iterable[dict]) -> ReplayResult:
    records = list(records)
    if not records or records[0].get("type") != "header":
        raise TraceFormatError("trace does not start with a header line")
    header = records[0]
    if header.get("version") != TRACE_VERSION:
        raise TraceFormatError(f"unsupported trace version {header.get('version')!r}")
    cfg = RunConfig.from_json(header["config"])
    entries = [r for r in records[1:] if r.get("type") == "event"]
    finished = any(r.get("type") == "end" for r in records[1:])
    sim = Simulation(cfg, record_history=cfg.msg_count_samples > 0)
    compared = 0

    def diverged(index: int, why: str) -> ReplayResult:
        return ReplayResult(False, compared, index, why, None)

    def compare_new() -> ReplayResult | None:
        nonlocal compared
        while compared < len(sim.trace) and compared < len(entries):
            got, want = sim.trace[compared].to_json(), entries[compared]
            if got["event"] != want["event"] or got["source"] != want["source"]:
                return diverged(want["index"], f"expected {want['source']} event "
                                f"{want['event']}, replay produced {got['event']}")
            if got["hash"] != want["hash"]:
                return diverged(want["index"], "configuration hash differs")
            compared += 1
        return None

    while compared < len(entries):
        rec = entries[compared]
        if rec["source"] == "sweep":
            break
        if rec["source"] != "scheduler":
            return diverged(rec["index"], f"unexpected {rec['source']} entry")
        try:
            event = event_from_json(rec["event"])
            sim.step_scheduled(event)
        except (RejectedEvent, KeyError, ValueError, TypeError) as exc:
            return diverged(rec["index"], f"event cannot be applied: {exc}")
        bad = compare_new()
        if bad:
            return bad

    report = None
    if finished:
        report = sim.finish()
        bad = compare_new()
        if bad:
            return bad
    if compared != len(entries):
        return diverged(entries[compared]["index"], "trace has entries the replay did not produce")
    if finished and len(sim.trace) != len(entries):
        return diverged(len(entries) + 1, "replay produced entries missing from the trace")
    return ReplayResult(True, compared, None, "ok", report)

