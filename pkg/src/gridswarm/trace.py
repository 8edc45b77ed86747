"""Canonical trace emission, digesting, and invariant verification.

A trace is line-delimited JSON, one event per line, fields in a fixed order
per kind. The digest is SHA-256 over the exact byte stream, so determinism
checks reduce to digest equality.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

# Payload field order per event kind; canonicalization rejects unknown kinds.
EVENT_FIELDS: dict[str, tuple[str, ...]] = {
    "StatePublish": ("zone", "position", "intent", "job", "agent_tick"),
    "StateAck": ("zone", "peers"),
    "TickBroadcast": ("zone", "new_tick", "roster", "digest"),
    "TickAck": ("zone", "committed_tick", "digest"),
    "MarkDead": ("zone", "agent", "released_job"),
    "Resync": ("zone", "resync_tick"),
    "Election": ("zone", "leader", "since_tick", "reason"),
    "JobSpawn": ("job", "location", "priority", "zone", "rejected"),
    "Bid": ("job", "cost", "zone"),
    "Assign": ("job", "agent", "cost", "zone"),
    "Move": ("src", "dst"),
    "Complete": ("job", "agent", "zone"),
    "LoadReport": ("zone", "pending", "idle", "total"),
    "Mandate": ("mandate", "agent", "from_zone", "to_zone"),
    "ConflictResolved": ("zone", "kind_detail", "keeper", "yielder", "tick_used"),
}


class TraceFormatError(ValueError):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TraceWriter:
    """Collects events in canonical order and serializes them byte-exactly."""

    def __init__(self) -> None:
        self.events: list[dict] = []

    def emit(self, tick: int, kind: str, actor: str, **payload: Any) -> None:
        fields = EVENT_FIELDS.get(kind)
        if fields is None:
            raise ValueError(f"unknown event kind {kind!r}")
        event: dict[str, Any] = {"tick": tick, "kind": kind, "actor": actor}
        for name in fields:
            if name in payload:
                event[name] = payload.pop(name)
        if payload:
            raise ValueError(f"{kind}: unexpected payload fields {sorted(payload)}")
        self.events.append(event)

    def lines(self) -> list[str]:
        return [json.dumps(e, separators=(",", ":")) for e in self.events]

    def dump(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def digest(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


def trace_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def parse_trace(text: str) -> list[dict]:
    events = []
    for idx, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            event = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(idx, f"invalid JSON: {exc}") from exc
        if not isinstance(event, dict) or "kind" not in event or "tick" not in event:
            raise TraceFormatError(idx, "event must be an object with tick and kind")
        if event["kind"] not in EVENT_FIELDS:
            raise TraceFormatError(idx, f"unknown event kind {event['kind']!r}")
        events.append(event)
    return events


def verify_trace(trace: str | list[dict]) -> list[str]:
    """Scan a trace for protocol and safety violations; empty list means clean.

    Checks: pairwise-distinct positions per tick, no edge swaps, per-zone
    snapshot agreement per committed tick, per-agent tick monotonicity
    (jumps only across a resync), job/agent assignment exclusivity, leader
    uniqueness, and that assignments and mandates come from the right actors.
    """
    events = parse_trace(trace) if isinstance(trace, str) else trace
    violations: list[str] = []
    positions: dict[str, tuple] = {}
    committed: dict[str, int] = {}
    resynced_since: dict[str, bool] = {}
    snapshots: dict[tuple, str] = {}  # (zone, committed_tick) -> digest
    job_assignee: dict[str, Optional[str]] = {}
    agent_job: dict[str, Optional[str]] = {}
    leaders: dict[str, str] = {}  # zone-key -> leader

    def zkey(z: Any) -> str:
        return json.dumps(z)

    by_tick: dict[int, list[dict]] = {}
    for e in events:
        by_tick.setdefault(e["tick"], []).append(e)

    for tick in sorted(by_tick):
        moves: list[dict] = []
        for e in by_tick[tick]:
            kind, actor = e["kind"], e.get("actor")
            if kind == "StatePublish":
                positions[actor] = tuple(e["position"])
            elif kind == "Move":
                positions[actor] = tuple(e["dst"])
                moves.append(e)
            elif kind in ("TickAck", "TickBroadcast"):
                t = e["committed_tick"] if kind == "TickAck" else e["new_tick"]
                key = (zkey(e["zone"]), t)
                seen = snapshots.get(key)
                if seen is None:
                    snapshots[key] = e["digest"]
                elif seen != e["digest"]:
                    violations.append(
                        f"tick {tick}: snapshot disagreement in zone {e['zone']} at zone-tick {t}")
                last = committed.get(actor)
                if last is not None:
                    if t <= last:
                        violations.append(
                            f"tick {tick}: {actor} committed zone-tick {t} after {last}")
                    elif t != last + 1 and not resynced_since.get(actor):
                        violations.append(
                            f"tick {tick}: {actor} jumped from zone-tick {last} to {t} without resync")
                committed[actor] = t
                resynced_since[actor] = False
            elif kind == "Resync":
                resynced_since[actor] = True
                committed[actor] = e["resync_tick"]
            elif kind == "MarkDead":
                released = e.get("released_job")
                if released is not None:
                    job_assignee[released] = None
                agent_job[e["agent"]] = None
                resynced_since[e["agent"]] = True  # rejoin may jump
            elif kind == "Election":
                zone = zkey(e["zone"])
                new_leader = e["leader"]
                for other_zone, lead in list(leaders.items()):
                    if lead == new_leader and other_zone != zone:
                        del leaders[other_zone]
                leaders[zone] = new_leader
            elif kind == "Assign":
                zone = zkey(e["zone"])
                if leaders.get(zone) != actor:
                    violations.append(
                        f"tick {tick}: assignment of {e['job']} by non-leader {actor}")
                if job_assignee.get(e["job"]) is not None:
                    violations.append(f"tick {tick}: job {e['job']} double-assigned")
                if agent_job.get(e["agent"]) is not None:
                    violations.append(
                        f"tick {tick}: agent {e['agent']} holds two assignments")
                job_assignee[e["job"]] = e["agent"]
                agent_job[e["agent"]] = e["job"]
            elif kind == "Complete":
                job_assignee[e["job"]] = None
                agent_job[e["agent"]] = None
            elif kind == "Mandate":
                if actor != "super":
                    violations.append(
                        f"tick {tick}: mandate {e['mandate']} issued by {actor}, not the super-leader")
        # Safety over realized positions.
        occupied: dict[tuple, str] = {}
        for agent, pos in sorted(positions.items()):
            if pos in occupied:
                violations.append(
                    f"tick {tick}: vertex violation at {list(pos)} between {occupied[pos]} and {agent}")
            occupied[pos] = agent
        seen_moves = {(m["actor"], tuple(m["src"]), tuple(m["dst"])) for m in moves}
        for actor, src, dst in sorted(seen_moves):
            for other, osrc, odst in seen_moves:
                if other > actor and osrc == dst and odst == src:
                    violations.append(
                        f"tick {tick}: edge swap between {actor} and {other} across {list(src)}-{list(dst)}")
    return violations
