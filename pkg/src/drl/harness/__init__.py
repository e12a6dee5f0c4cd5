"""Drivers: random runs, exhaustive exploration, replay, scripted scenarios."""

from drl.harness.campaign import CampaignSummary, run_campaign
from drl.harness.explore import ExploreConfig, ExploreReport, explore
from drl.harness.policies import SnapshotPolicy
from drl.harness.replay import replay
from drl.harness.scenarios import run_scenario, workload_scenarios
from drl.harness.simulation import RunConfig, RunReport, run_random

__all__ = [
    "CampaignSummary",
    "ExploreConfig",
    "ExploreReport",
    "RunConfig",
    "RunReport",
    "SnapshotPolicy",
    "explore",
    "replay",
    "run_campaign",
    "run_random",
    "run_scenario",
    "workload_scenarios",
]
