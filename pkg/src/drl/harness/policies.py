"""When idle actors send snapshots to the aggregator."""

from __future__ import annotations

from dataclasses import dataclass

from drl.events import Event, Idle, Info, Release, Snapshot
from drl.model import Configuration

FINAL_ACTION_RULES = (Idle, Info, Release)


@dataclass(frozen=True)
class SnapshotPolicy:
    """``final-action``: snapshot right after each Idle/Info/Release.
    ``periodic:N``: every idle actor snapshots after every N-th scheduled event.
    ``never``: no snapshots at all."""

    kind: str = "final-action"
    every: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("final-action", "periodic", "never"):
            raise ValueError(f"unknown snapshot policy {self.kind!r}")
        if self.kind == "periodic" and self.every <= 0:
            raise ValueError("periodic snapshot policy needs a positive period")

    @classmethod
    def parse(cls, text: str) -> SnapshotPolicy:
        name, _, arg = text.partition(":")
        if name == "periodic":
            try:
                return cls("periodic", int(arg))
            except ValueError:
                raise ValueError(f"bad period in {text!r}") from None
        if arg:
            raise ValueError(f"policy {name!r} takes no argument")
        return cls(name)

    def __str__(self) -> str:
        return f"periodic:{self.every}" if self.kind == "periodic" else self.kind

    @property
    def takes_snapshots(self) -> bool:
        return self.kind != "never"

    def after(self, e: Event, k: Configuration, scheduled: int) -> list[Snapshot]:
        """Snapshots to insert after event ``e``, the ``scheduled``-th scheduler event."""
        if self.kind == "final-action":
            if isinstance(e, Idle):
                return [Snapshot(e.actor)]
            if isinstance(e, (Info, Release)) and k.alpha[e.target].idle:
                return [Snapshot(e.target)]
            return []
        if self.kind == "periodic" and scheduled % self.every == 0:
            return [Snapshot(a) for a in k.internal() if k.alpha[a].idle]
        return []
