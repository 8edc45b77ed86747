"""Jobs: controller spawning, distance-cost bidding, leader-mediated assignment."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .world import Cell, GridMap


class JobStatus(Enum):
    PENDING = "pending"
    ASSIGNED = "assigned"
    COMPLETED = "completed"


class SpawnRejected(ValueError):
    """Job placed on an obstacle or out of bounds."""


@dataclass
class Job:
    id: str
    location: Cell
    priority: float
    spawn_tick: int
    status: JobStatus = JobStatus.PENDING
    assignee: Optional[str] = None
    assign_tick: Optional[int] = None
    completion_tick: Optional[int] = None


@dataclass(frozen=True)
class Bid:
    agent: str
    job: str
    cost: Optional[int]  # None means unreachable


def spawn_job(grid: GridMap, job_id: str, location: Cell, priority: float,
              spawn_tick: int) -> Job:
    location = Cell(*location)
    if priority <= 0:
        raise SpawnRejected(f"job {job_id}: priority must be > 0")
    if not grid.is_free(location):
        raise SpawnRejected(f"job {job_id}: location {location} is not a free cell")
    return Job(id=job_id, location=location, priority=priority, spawn_tick=spawn_tick)


class CostField:
    """BFS distance fields from job locations, cached per location.

    Values equal shortest obstacle-respecting path lengths, i.e. exactly what
    an A* plan from the agent to the job would produce.
    """

    def __init__(self, grid: GridMap) -> None:
        self.grid = grid
        self._fields: dict[Cell, dict[Cell, int]] = {}

    def _field(self, origin: Cell) -> dict[Cell, int]:
        cached = self._fields.get(origin)
        if cached is not None:
            return cached
        dist = {origin: 0}
        queue = deque([origin])
        while queue:
            cur = queue.popleft()
            for n in self.grid.free_neighbors(cur):
                if n not in dist:
                    dist[n] = dist[cur] + 1
                    queue.append(n)
        self._fields[origin] = dist
        return dist

    def cost(self, position: Cell, job_location: Cell) -> Optional[int]:
        return self._field(Cell(*job_location)).get(Cell(*position))


def compute_job_cost(position: Cell, job: Job, grid: GridMap,
                     cache: Optional[CostField] = None) -> Optional[int]:
    """Moves along the shortest free path to the job; None if unreachable."""
    cache = cache or CostField(grid)
    return cache.cost(position, job.location)


def choose_assignee(bids: list[Bid]) -> Optional[Bid]:
    """Minimum-cost bid, ties to the lower agent id; None if nothing reachable."""
    usable = [b for b in bids if b.cost is not None]
    if not usable:
        return None
    return min(usable, key=lambda b: (b.cost, b.agent))
