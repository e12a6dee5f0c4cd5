"""Reference-listing termination detection for actor systems, as an executable model."""

from drl.aggregator import SnapshotStore, detect, is_finalized, maximum_finalized_subset
from drl.model import Configuration, KnowledgeSet, Refob, Token, initial_configuration
from drl.semantics import ExplorationBounds, Ledger, apply_event, enabled_events

__all__ = [
    "Configuration",
    "ExplorationBounds",
    "KnowledgeSet",
    "Ledger",
    "Refob",
    "SnapshotStore",
    "Token",
    "apply_event",
    "detect",
    "enabled_events",
    "initial_configuration",
    "is_finalized",
    "maximum_finalized_subset",
]
