"""Many seeded runs, merged into one summary.

Runs share nothing, so they can be spread over worker processes; results are
merged in seed order, which keeps the summary independent of worker count.
"""

from __future__ import annotations

import statistics
from collections import Counter
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from drl.codec import dumps
from drl.harness.replay import trace_lines
from drl.harness.simulation import RunConfig, RunReport, run_random


@dataclass
class CampaignSummary:
    runs: int
    events: int
    violations: int
    violations_by_kind: dict[str, int]
    safety_violations: int
    liveness_misses: int
    terminated: int
    detections: int
    mean_detection_latency: float | None
    quiescent_runs: int
    msg_count_samples: int
    msg_count_mismatches: int
    failing_seeds: list[int]

    @property
    def ok(self) -> bool:
        return not self.violations and not self.msg_count_mismatches

    def to_json(self) -> dict:
        return {**vars(self), "ok": self.ok}


def summarize(reports: list[RunReport]) -> CampaignSummary:
    kinds: Counter[str] = Counter(v.kind for r in reports for v in r.violations)
    latencies = [v for r in reports for v in r.detection_latency.values()]
    return CampaignSummary(
        runs=len(reports),
        events=sum(r.events for r in reports),
        violations=sum(kinds.values()),
        violations_by_kind=dict(sorted(kinds.items())),
        safety_violations=kinds.get("safety", 0),
        liveness_misses=sum(len(r.liveness_misses) for r in reports),
        terminated=sum(len(r.terminated) for r in reports),
        detections=sum(len(r.detected) for r in reports),
        mean_detection_latency=statistics.fmean(latencies) if latencies else None,
        quiescent_runs=sum(r.quiescent for r in reports),
        msg_count_samples=sum(r.msg_count_samples for r in reports),
        msg_count_mismatches=sum(len(r.msg_count_mismatches) for r in reports),
        failing_seeds=[r.seed for r in reports if not r.ok or r.liveness_misses],
    )


def _run_one(job: tuple[RunConfig, str | None]) -> RunReport:
    cfg, trace_dir = job
    report, sim = run_random(cfg)
    if trace_dir is not None:
        path = Path(trace_dir) / f"run-{cfg.seed}.jsonl"
        path.write_text("\n".join(trace_lines(sim)) + "\n")
    return report


def run_campaign(seeds: Iterable[int], template: RunConfig, out: Path | None = None,
                 workers: int = 1, traces: bool = True) -> tuple[CampaignSummary, list[RunReport]]:
    """Run ``template`` once per seed; with ``out``, write report.json and traces/run-<seed>.jsonl."""
    trace_dir = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    if out is not None and traces:
        (out / "traces").mkdir(parents=True, exist_ok=True)
        trace_dir = str(out / "traces")
    jobs = [(replace(template, seed=s), trace_dir) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_one, jobs, chunksize=4))
    else:
        reports = [_run_one(j) for j in jobs]
    summary = summarize(reports)
    if out is not None:
        write_report(out / "report.json", summary, reports)
    return summary, reports


def write_report(path: Path, summary: CampaignSummary, reports: list[RunReport]) -> None:
    body = {"summary": summary.to_json(), "runs": [r.to_json() for r in reports]}
    path.write_text(dumps(body) + "\n")
