"""Scenario files: schema validation, loading, and seeded scenario generation."""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

from .netsim import BusConfig, derive_seed
from .planner import PlannerParams
from .world import Cell, GridMap, build_partition, home_zone


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FaultEvent:
    tick: int
    kind: str  # kill | revive | partition | heal
    agent: Optional[str] = None
    groups: tuple[frozenset[str], ...] = ()


@dataclass(frozen=True)
class JobSpec:
    spawn_tick: int
    location: Cell
    priority: float


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridMap
    rows: int
    cols: int
    overlap: int
    agents: tuple[tuple[str, Cell], ...]
    jobs: tuple[JobSpec, ...]
    network: BusConfig
    planner: PlannerParams
    timeout_steps: int
    balance_period: int
    seed: int
    max_ticks: int
    faults: tuple[FaultEvent, ...]


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _cell(value: Any, where: str) -> Cell:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) for v in value)):
        raise ConfigError(f"{where}: expected [x, y] integer pair, got {value!r}")
    return Cell(*value)


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Strict parse; unknown keys anywhere are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be an object")
    _require_keys(data, {"map", "partition", "agents", "jobs", "network", "planner",
                         "consensus", "balance", "seed", "max_ticks", "faults"},
                  "scenario")
    m = data.get("map")
    if not isinstance(m, dict):
        raise ConfigError("map section is required")
    _require_keys(m, {"width", "height", "obstacles", "obstacle_rects"}, "map")
    obstacles = {_cell(c, "map.obstacles") for c in m.get("obstacles", [])}
    for rect in m.get("obstacle_rects", []):
        if not (isinstance(rect, (list, tuple)) and len(rect) == 4):
            raise ConfigError(f"map.obstacle_rects: expected [x0,y0,x1,y1], got {rect!r}")
        x0, y0, x1, y1 = rect
        obstacles.update(Cell(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1))
    try:
        grid = GridMap(width=m.get("width", 0), height=m.get("height", 0),
                       obstacles=frozenset(obstacles))
    except ValueError as exc:
        raise ConfigError(f"map: {exc}") from exc

    part = data.get("partition", {})
    _require_keys(part, {"rows", "cols", "overlap"}, "partition")
    rows, cols = part.get("rows", 1), part.get("cols", 1)
    overlap = part.get("overlap", 1)
    try:
        partition = build_partition(grid, rows, cols, overlap)
    except ValueError as exc:
        raise ConfigError(f"partition: {exc}") from exc

    agents: list[tuple[str, Cell]] = []
    seen_ids: set[str] = set()
    seen_cells: set[Cell] = set()
    for idx, a in enumerate(data.get("agents", [])):
        if not isinstance(a, dict):
            raise ConfigError(f"agents[{idx}]: expected object")
        _require_keys(a, {"id", "start"}, f"agents[{idx}]")
        aid = a.get("id")
        start = _cell(a.get("start"), f"agents[{idx}].start")
        if not isinstance(aid, str) or not aid:
            raise ConfigError(f"agents[{idx}]: id must be a non-empty string")
        if aid in seen_ids:
            raise ConfigError(f"agents[{idx}]: duplicate id {aid}")
        if aid in ("super", "controller"):
            raise ConfigError(f"agents[{idx}]: id {aid!r} is reserved")
        if not grid.is_free(start) or start in seen_cells:
            raise ConfigError(f"agents[{idx}]: start {start} not a distinct free cell")
        seen_ids.add(aid)
        seen_cells.add(start)
        agents.append((aid, start))

    jobs: list[JobSpec] = []
    for idx, j in enumerate(data.get("jobs", [])):
        if not isinstance(j, dict):
            raise ConfigError(f"jobs[{idx}]: expected object")
        _require_keys(j, {"spawn_tick", "location", "priority"}, f"jobs[{idx}]")
        loc = _cell(j.get("location"), f"jobs[{idx}].location")
        if not grid.in_bounds(loc):
            raise ConfigError(f"jobs[{idx}]: location {loc} out of bounds")
        prio = j.get("priority", 1.0)
        if not isinstance(prio, (int, float)) or prio <= 0:
            raise ConfigError(f"jobs[{idx}]: priority must be > 0")
        jobs.append(JobSpec(spawn_tick=int(j.get("spawn_tick", 0)), location=loc,
                            priority=float(prio)))

    net = data.get("network", {})
    _require_keys(net, {"drop_prob", "delay_steps", "partitions"}, "network")
    delay = net.get("delay_steps", 0)
    if isinstance(delay, list):
        delay = (delay[0], delay[1])
    try:
        network = BusConfig(drop_prob=float(net.get("drop_prob", 0.0)),
                            delay_steps=delay)
    except ValueError as exc:
        raise ConfigError(f"network: {exc}") from exc

    pl = data.get("planner", {})
    _require_keys(pl, {"f", "deadlock_threshold", "ramp_cap"}, "planner")
    try:
        planner = PlannerParams(f=float(pl.get("f", 1.0)),
                                deadlock_threshold=int(pl.get("deadlock_threshold", 2)),
                                ramp_cap=int(pl.get("ramp_cap", 8)))
    except ValueError as exc:
        raise ConfigError(f"planner: {exc}") from exc

    cons = data.get("consensus", {})
    _require_keys(cons, {"timeout_steps"}, "consensus")
    timeout_steps = int(cons.get("timeout_steps", 10))
    if timeout_steps < 1:
        raise ConfigError("consensus.timeout_steps must be >= 1")

    bal = data.get("balance", {})
    _require_keys(bal, {"period"}, "balance")
    period = int(bal.get("period", 10))
    if period < 1:
        raise ConfigError("balance.period must be >= 1")

    faults: list[FaultEvent] = []
    known_ids = {aid for aid, _ in agents}
    for idx, f in enumerate(data.get("faults", [])):
        _require_keys(f, {"tick", "kind", "agent", "groups"}, f"faults[{idx}]")
        kind = f.get("kind")
        if kind not in ("kill", "revive", "partition", "heal"):
            raise ConfigError(f"faults[{idx}]: unknown kind {kind!r}")
        agent = f.get("agent")
        if kind in ("kill", "revive"):
            if agent not in known_ids:
                raise ConfigError(f"faults[{idx}]: unknown agent {agent!r}")
        groups = tuple(frozenset(g) for g in f.get("groups", []))
        faults.append(FaultEvent(tick=int(f.get("tick", 0)), kind=kind,
                                 agent=agent, groups=groups))
    # Partition schedule under network.partitions is sugar for partition faults.
    for idx, entry in enumerate(net.get("partitions", [])):
        if not (isinstance(entry, list) and len(entry) == 2):
            raise ConfigError(f"network.partitions[{idx}]: expected [tick, groups]")
        step, groups = entry
        kind = "heal" if not groups else "partition"
        faults.append(FaultEvent(tick=int(step), kind=kind,
                                 groups=tuple(frozenset(g) for g in groups)))
    faults.sort(key=lambda f: (f.tick, f.kind, f.agent or ""))

    max_ticks = int(data.get("max_ticks", 1000))
    if max_ticks < 1:
        raise ConfigError("max_ticks must be >= 1")

    return ScenarioConfig(grid=grid, rows=rows, cols=cols, overlap=overlap,
                          agents=tuple(agents), jobs=tuple(jobs), network=network,
                          planner=planner, timeout_steps=timeout_steps,
                          balance_period=period, seed=int(data.get("seed", 0)),
                          max_ticks=max_ticks, faults=tuple(faults))


def load_scenario(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(data)


def _free_connected(grid: GridMap) -> bool:
    free = [Cell(x, y) for y in range(grid.height) for x in range(grid.width)
            if grid.is_free(Cell(x, y))]
    if not free:
        return False
    seen = {free[0]}
    queue = deque([free[0]])
    while queue:
        cur = queue.popleft()
        for n in grid.free_neighbors(cur):
            if n not in seen:
                seen.add(n)
                queue.append(n)
    return len(seen) == len(free)


def bench_scenario(n_agents: int, n_jobs: int, seed: int,
                   max_ticks: int = 5000) -> dict:
    """Fixed benchmark setup: 30x30 map, nine zones, rectangular obstacles.

    Agent starts and job placements are seeded; the obstacle layout is fixed
    so sweep cells are comparable.
    """
    rects = [[4, 4, 6, 6], [22, 4, 24, 6], [4, 22, 6, 24],
             [22, 22, 24, 24], [13, 13, 16, 16]]
    obstacles = set()
    for x0, y0, x1, y1 in rects:
        obstacles.update(Cell(x, y) for x in range(x0, x1 + 1)
                         for y in range(y0, y1 + 1))
    grid = GridMap(width=30, height=30, obstacles=frozenset(obstacles))
    free = [Cell(x, y) for y in range(30) for x in range(30)
            if grid.is_free(Cell(x, y))]
    rng = random.Random(derive_seed(seed, "bench", n_agents, n_jobs))
    starts = rng.sample(free, n_agents)
    agents = [{"id": f"a{i:02d}", "start": list(c)} for i, c in enumerate(starts)]
    jobs = [{"spawn_tick": rng.randint(0, 20),
             "location": list(rng.choice(free)),
             "priority": round(rng.uniform(1.2, 3.0), 2)}
            for _ in range(n_jobs)]
    return {
        "map": {"width": 30, "height": 30, "obstacle_rects": rects},
        "partition": {"rows": 3, "cols": 3, "overlap": 1},
        "agents": agents,
        "jobs": jobs,
        "network": {"drop_prob": 0.0, "delay_steps": 0},
        "planner": {},
        "consensus": {"timeout_steps": 10},
        "balance": {"period": 10},
        "seed": seed,
        "max_ticks": max_ticks,
        "faults": [],
    }


def random_scenario(seed: int, *, max_agents: int = 12, max_jobs: int = 15,
                    max_side: int = 30, drop_prob: float = 0.0,
                    delay: int = 0, max_ticks: int = 300) -> dict:
    """Seeded random scenario as a plain config dict.

    Maps use rectangular obstacles and are regenerated until the free space
    is connected, so every spawned job is reachable.
    """
    rng = random.Random(derive_seed(seed, "scenario"))
    width = rng.randint(10, max_side)
    height = rng.randint(10, max_side)
    rows = rng.choice([1, 2, 3])
    cols = rng.choice([1, 2, 3])
    rows = min(rows, height // 4) or 1
    cols = min(cols, width // 4) or 1
    for _ in range(50):
        rects = []
        for _ in range(rng.randint(0, 4)):
            w = rng.randint(1, max(1, width // 5))
            h = rng.randint(1, max(1, height // 5))
            x0 = rng.randint(0, width - w)
            y0 = rng.randint(0, height - h)
            rects.append([x0, y0, x0 + w - 1, y0 + h - 1])
        obstacles = set()
        for x0, y0, x1, y1 in rects:
            obstacles.update(Cell(x, y) for x in range(x0, x1 + 1)
                             for y in range(y0, y1 + 1))
        grid = GridMap(width=width, height=height, obstacles=frozenset(obstacles))
        if _free_connected(grid) and (width * height - len(obstacles)) >= 2 * max_agents:
            break
    else:
        rects = []
        grid = GridMap(width=width, height=height)

    free = [Cell(x, y) for y in range(height) for x in range(width)
            if grid.is_free(Cell(x, y))]
    n_agents = rng.randint(2, max_agents)
    starts = rng.sample(free, n_agents)
    agents = [{"id": f"a{i:02d}", "start": list(c)} for i, c in enumerate(starts)]
    n_jobs = rng.randint(1, max_jobs)
    jobs = [{"spawn_tick": rng.randint(0, 10),
             "location": list(rng.choice(free)),
             "priority": round(rng.uniform(1.2, 3.0), 2)}
            for _ in range(n_jobs)]
    return {
        "map": {"width": width, "height": height, "obstacle_rects": rects},
        "partition": {"rows": rows, "cols": cols, "overlap": 1},
        "agents": agents,
        "jobs": jobs,
        "network": {"drop_prob": drop_prob, "delay_steps": delay},
        "planner": {},
        "consensus": {"timeout_steps": 10},
        "balance": {"period": 10},
        "seed": seed,
        "max_ticks": max_ticks,
        "faults": [],
    }
