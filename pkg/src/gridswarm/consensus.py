"""Tick-synchronized leader-driven state replication primitives.

The decision functions here are pure; the engine wires them to the bus.
Snapshots are leader-authoritative: agents commit exactly the record set the
leader broadcast, which makes per-zone agreement hold by construction even
under message loss.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .world import Cell


class Phase(Enum):
    COLLECT_STATES = "collect_states"
    AWAIT_STATE_ACKS = "await_state_acks"
    TICK_BROADCAST = "tick_broadcast"
    AWAIT_TICK_ACKS = "await_tick_acks"


class Liveness(Enum):
    ALIVE = "alive"
    DEAD = "dead"
    RECOVERING = "recovering"


class RoleError(RuntimeError):
    """A consensus action was attempted by an actor without the required role."""


@dataclass(frozen=True)
class StateRecord:
    agent: str
    position: Cell
    intent: Cell
    job: Optional[str]
    priority: float
    tick: int

    def as_payload(self) -> list:
        return [self.agent, list(self.position), list(self.intent),
                self.job, self.priority, self.tick]

    @staticmethod
    def from_payload(p: list) -> "StateRecord":
        return StateRecord(agent=p[0], position=Cell(*p[1]), intent=Cell(*p[2]),
                           job=p[3], priority=p[4], tick=p[5])


@dataclass(frozen=True)
class ZoneSnapshot:
    tick: int
    records: tuple[StateRecord, ...]  # sorted by agent id

    def digest(self) -> str:
        blob = json.dumps([self.tick] + [r.as_payload() for r in self.records],
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def make_snapshot(tick: int, records: dict[str, StateRecord]) -> ZoneSnapshot:
    return ZoneSnapshot(tick=tick, records=tuple(records[a] for a in sorted(records)))


@dataclass(frozen=True)
class Advance:
    new_tick: int


@dataclass(frozen=True)
class Wait:
    pass


@dataclass(frozen=True)
class MarkDeadAndAdvance:
    missing: frozenset[str]
    new_tick: int


def leader_tick_decision(ack_set: set[str], expected: set[str], waited_steps: int,
                         timeout_steps: int, tick: int = 0,
                         caller_is_leader: bool = True) -> Advance | Wait | MarkDeadAndAdvance:
    """Advance when coverage is full, wait below the timeout, then mark the
    missing agents dead and advance over the reduced set."""
    if not caller_is_leader:
        raise RoleError("only the zone leader advances the tick")
    if ack_set >= expected:
        return Advance(new_tick=tick + 1)
    if waited_steps < timeout_steps:
        return Wait()
    return MarkDeadAndAdvance(missing=frozenset(expected - ack_set), new_tick=tick + 1)


def tick_gap_requires_resync(local_tick: int, new_tick: int) -> bool:
    """A broadcast skipping past local+1 means a missed round."""
    return new_tick > local_tick + 1


def resolve_overlap_tick(tick_i: int, tick_j: int, prio_i: float, prio_j: float,
                         id_i: str, id_j: str) -> int:
    """Tick used when agents from different zones meet in an overlap region:
    the higher-priority agent's tick, ties to the lower agent id."""
    if tick_i == tick_j:
        return tick_i
    if prio_i > prio_j:
        return tick_i
    if prio_j > prio_i:
        return tick_j
    return tick_i if id_i < id_j else tick_j
