"""Append-only run journal.

One JSON object per line, each with a strictly increasing sequence number, a
wall-clock timestamp, an event kind, and an event payload.  Everything except
the timestamp is deterministic for a fixed seed, so two runs can be compared
by stripping timestamps.  Resuming from a checkpoint truncates the journal
back to the checkpoint's sequence number and re-executes from there.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

EVENT_KINDS = (
    "run_started",
    "phase_started",
    "generation_completed",
    "individual_evaluated",
    "phase_completed",
    "search_stopped",
    "finalized",
)


@dataclass(frozen=True)
class JournalEvent:
    seq: int
    kind: str
    timestamp: float
    data: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "timestamp": self.timestamp,
            "data": self.data,
        }


class RunJournal:
    """Event log, optionally mirrored to a JSONL file."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[JournalEvent] = []

    @classmethod
    def load(cls, path: str | Path) -> "RunJournal":
        journal = cls(path)
        p = Path(path)
        if p.exists():
            with p.open() as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    raw = json.loads(line)
                    journal.events.append(JournalEvent(
                        seq=raw["seq"], kind=raw["kind"],
                        timestamp=raw["timestamp"], data=raw["data"],
                    ))
        return journal

    @property
    def next_seq(self) -> int:
        return self.events[-1].seq + 1 if self.events else 1

    def append(self, kind: str, data: dict) -> JournalEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = JournalEvent(
            seq=self.next_seq, kind=kind, timestamp=time.time(), data=data,
        )
        self.events.append(event)
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
        return event

    def truncate_to(self, seq: int) -> None:
        """Drop every event after ``seq`` (inclusive keep), rewriting the file."""
        self.events = [e for e in self.events if e.seq <= seq]
        if self.path is not None:
            text = "".join(
                json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events
            )
            self.path.write_text(text)

    def without_timestamps(self) -> list[dict]:
        """Comparable view of the whole journal."""
        return [{"seq": e.seq, "kind": e.kind, "data": e.data} for e in self.events]

    def replay_phase_history(self) -> list[dict]:
        """Reconstruct the per-phase record the engine built, from events alone."""
        phases: list[dict] = []
        current: dict | None = None
        for event in self.events:
            if event.kind == "phase_started":
                current = {
                    "phase_index": event.data["phase_index"],
                    "per_generation_fitnesses": [],
                    "best": None,
                }
            elif event.kind == "generation_completed" and current is not None:
                current["per_generation_fitnesses"].append(event.data["fitnesses"])
            elif event.kind == "phase_completed" and current is not None:
                current["best"] = event.data["best"]
                phases.append(current)
                current = None
        return phases
