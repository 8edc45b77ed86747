"""Path planning and force-based cooperative conflict resolution.

Base paths come from A* with the Manhattan heuristic. Per-tick movement
conflicts between agents (vertex, edge, static) are resolved by a piecewise
force law: the lower-priority agent of a conflicting pair recomputes its
intent from a force vector, and agents stuck in a blocking cycle ramp their
force exponentially with their stuck counter until the cycle breaks.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .world import Cell, DIRECTIONS, GridMap


class ConflictKind(Enum):
    VERTEX = "vertex"
    EDGE = "edge"
    STATIC = "static"
    WAIT = "wait"
    NONE = "none"


@dataclass(frozen=True)
class KinematicState:
    agent: str
    current: Cell
    intent: Cell
    priority: float = 1.0
    stuck: int = 0
    has_job: bool = False


@dataclass(frozen=True)
class PlannerParams:
    f: float = 1.0
    deadlock_threshold: int = 2
    ramp_cap: int = 8

    def __post_init__(self) -> None:
        if self.f <= 0:
            raise ValueError("base force magnitude must be > 0")
        if self.deadlock_threshold < 1 or self.ramp_cap < 1:
            raise ValueError("thresholds must be >= 1")


class OpCounter:
    """Counts elementary conflict-resolution operations for scaling checks."""

    __slots__ = ("n",)

    def __init__(self) -> None:
        self.n = 0

    def tick(self, k: int = 1) -> None:
        self.n += k


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a.x - b.x) + abs(a.y - b.y)


def plan_path(grid: GridMap, start: Cell, goal: Cell) -> Optional[list[Cell]]:
    """Shortest 4-connected obstacle-respecting path, or None if unreachable.

    Open-list ties break on (f, h, y, x) so plans are deterministic.
    """
    start, goal = Cell(*start), Cell(*goal)
    if not grid.is_free(start) or not grid.is_free(goal):
        raise ValueError("start and goal must be free cells")
    if start == goal:
        return [start]
    h0 = manhattan(start, goal)
    open_heap: list[tuple[int, int, int, int]] = [(h0, h0, start.y, start.x)]
    g_score = {start: 0}
    parent: dict[Cell, Cell] = {}
    closed: set[Cell] = set()
    while open_heap:
        f, h, y, x = heapq.heappop(open_heap)
        cur = Cell(x, y)
        if cur in closed:
            continue
        if cur == goal:
            path = [cur]
            while cur in parent:
                cur = parent[cur]
                path.append(cur)
            path.reverse()
            return path
        closed.add(cur)
        g = g_score[cur]
        for n in grid.free_neighbors(cur):
            ng = g + 1
            if ng < g_score.get(n, math.inf):
                g_score[n] = ng
                parent[n] = cur
                nh = manhattan(n, goal)
                heapq.heappush(open_heap, (ng + nh, nh, n.y, n.x))
    return None


def classify_conflict(i: KinematicState, j: KinematicState) -> ConflictKind:
    """Pairwise conflict taxonomy over current cells and next-step intents.

    Precedence on simultaneous matches is Edge > Static > Vertex. The static
    case is recognized from either side of the pair (one agent intruding on a
    stationary one) so that vertex/edge results stay symmetric.
    """
    if i.agent == j.agent:
        raise ValueError("conflict classification needs two distinct agents")
    if i.intent == j.current and j.intent == i.current:
        return ConflictKind.EDGE
    if (i.intent == j.current and j.intent == j.current) or (
            j.intent == i.current and i.intent == i.current):
        return ConflictKind.STATIC
    if i.intent == j.intent:
        return ConflictKind.VERTEX
    if i.intent == i.current:
        return ConflictKind.WAIT
    return ConflictKind.NONE


def _unit_dir(state: KinematicState) -> tuple[float, float]:
    dx = state.intent.x - state.current.x
    dy = state.intent.y - state.current.y
    norm = math.hypot(dx, dy)
    if norm == 0:
        return (0.0, 0.0)
    return (dx / norm, dy / norm)


def random_safe_vector(state: KinematicState, grid: GridMap, rng: random.Random,
                       contested: Optional[Cell] = None) -> tuple[float, float]:
    """Unit vector toward a seeded-uniform free 4-neighbor, avoiding the contested cell.

    Zero vector when no safe neighbor exists.
    """
    if contested is None:
        contested = state.intent
    options = [n for n in grid.free_neighbors(state.current) if n != contested]
    if not options:
        return (0.0, 0.0)
    pick = options[rng.randrange(len(options))]
    return (float(pick.x - state.current.x), float(pick.y - state.current.y))


def compute_force(i: KinematicState, j: Optional[KinematicState],
                  conflict: ConflictKind, params: PlannerParams, grid: GridMap,
                  rng: random.Random, deadlock: bool = False) -> tuple[float, float]:
    """Piecewise force on agent `i`.

    No conflict: follow own intent direction. Conflict with `j`: align with
    j's direction scaled by own priority plus a random safe escape scaled by
    j's priority. Under deadlock the own-priority factor is ramped to
    priority**stuck (exponent capped).
    """
    f = params.f
    if j is None or conflict in (ConflictKind.NONE, ConflictKind.WAIT):
        dx, dy = _unit_dir(i)
        return (f * dx, f * dy)
    p_i = i.priority ** min(i.stuck, params.ramp_cap) if deadlock else i.priority
    jdx, jdy = _unit_dir(j)
    rx, ry = random_safe_vector(i, grid, rng)
    return (f * p_i * jdx + f * j.priority * rx,
            f * p_i * jdy + f * j.priority * ry)


# Candidate move order for tie-breaking: N, E, S, W, wait.
_MOVE_ORDER: tuple[Cell, ...] = (Cell(0, 1), Cell(1, 0), Cell(0, -1), Cell(-1, 0))


def quantize_move(force: tuple[float, float], current: Cell, grid: GridMap,
                  occupied: set[Cell]) -> Cell:
    """Map a force vector to the admissible move maximizing the dot product.

    Waiting scores 0; ties resolve in N, E, S, W, wait order. A zero force
    always waits.
    """
    fx, fy = force
    if fx == 0 and fy == 0:
        return current
    best: Optional[Cell] = None
    best_score = 0.0
    for d in _MOVE_ORDER:
        target = Cell(current.x + d.x, current.y + d.y)
        if not grid.is_free(target) or target in occupied:
            continue
        score = fx * d.x + fy * d.y
        if score < 0:
            continue
        if best is None or score > best_score:
            best, best_score = target, score
    return best if best is not None else current


def detect_deadlock(states: list[KinematicState], threshold: int) -> set[str]:
    """Agents whose stuck counter has matured inside a cycle of blocking relations.

    Agent i blocks j iff j intends i's current cell; since intents are single
    cells and positions are distinct, the blocking relation is a functional
    graph and cycles are found by pointer chasing.
    """
    by_cell = {s.current: s.agent for s in states}
    info = {s.agent: s for s in states}
    succ: dict[str, str] = {}
    for s in states:
        blocker = by_cell.get(s.intent)
        if blocker is not None and blocker != s.agent:
            succ[s.agent] = blocker
    on_cycle: set[str] = set()
    color: dict[str, int] = {}  # 0 visiting, 1 done
    for a in sorted(info):
        if a in color:
            continue
        trail = []
        node: Optional[str] = a
        while node is not None and node not in color:
            color[node] = 0
            trail.append(node)
            node = succ.get(node)
        if node is not None and color.get(node) == 0:
            on_cycle.update(trail[trail.index(node):])
        for t in trail:
            color[t] = 1
    return {a for a in on_cycle
            if info[a].stuck >= threshold and info[a].has_job}


def _blockers(states: list[KinematicState]) -> dict[str, KinematicState]:
    by_cell = {s.current: s for s in states}
    out = {}
    for s in states:
        b = by_cell.get(s.intent)
        if b is not None and b.agent != s.agent:
            out[s.agent] = b
    return out


def _rank_key(s: KinematicState) -> tuple[float, str]:
    # Higher priority first; ties keep the lower agent id ahead.
    return (-s.priority, s.agent)


def resolve_zone_step(states: list[KinematicState], grid: GridMap,
                      params: PlannerParams,
                      rng_for: Callable[[str], random.Random],
                      counter: Optional[OpCounter] = None,
                      log: Optional[list] = None) -> dict[str, Cell]:
    """Resolve one tick of movement for a set of co-located agents.

    Returns a collision-free intent per agent: no two intents share a cell
    and no pair swaps cells. Lower-priority members of conflicting pairs
    recompute their intent from the force law; agents in matured blocking
    cycles use the deadlock branch; anything still unsafe waits.
    """
    ops = counter or OpCounter()
    info = {s.agent: s for s in states}
    proposal = {s.agent: s.intent for s in states}
    cur_of = {s.agent: s.current for s in states}
    occ = {s.current: s.agent for s in states}
    if len(occ) != len(states):
        raise ValueError("agents must occupy distinct cells")

    deadlocked = detect_deadlock(states, params.deadlock_threshold)
    ops.tick(len(states))

    # Nearby pairs only: a pair can interact only if their current cells are
    # within Manhattan distance 2 (intents move at most one cell).
    pairs: list[tuple[str, str]] = []
    offsets = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)
               if abs(dx) + abs(dy) <= 2]
    for s in states:
        for dx, dy in offsets:
            ops.tick()
            other = occ.get(Cell(s.current.x + dx, s.current.y + dy))
            if other is not None and other > s.agent:
                pairs.append((s.agent, other))
    pairs.sort()

    def yield_order(a: KinematicState, b: KinematicState) -> tuple[KinematicState, KinematicState]:
        # Returns (keeper, yielder): lower priority yields, ties yield the higher id.
        if (a.priority, b.agent) > (b.priority, a.agent):
            return a, b
        return b, a

    for ai, aj in pairs:
        si, sj = info[ai], info[aj]
        kind = classify_conflict(si, sj)
        ops.tick()
        if kind not in (ConflictKind.VERTEX, ConflictKind.EDGE, ConflictKind.STATIC):
            continue
        keeper, yielder = yield_order(si, sj)
        force = compute_force(yielder, keeper, kind, params, grid,
                              rng_for(yielder.agent),
                              deadlock=yielder.agent in deadlocked)
        blocked = set(occ) - {yielder.current}
        proposal[yielder.agent] = quantize_move(force, yielder.current, grid, blocked)
        ops.tick(4)
        if log is not None:
            log.append((kind, keeper.agent, yielder.agent))

    # Matured blocking cycles get the ramped branch even without a pairwise
    # conflict (a rotation cycle classifies as no-conflict on every pair).
    blockers = _blockers(states)
    for agent in sorted(deadlocked):
        s = info[agent]
        j = blockers.get(agent)
        if j is None:
            continue
        force = compute_force(s, j, ConflictKind.STATIC, params, grid,
                              rng_for(agent), deadlock=True)
        blocked = set(occ) - {s.current}
        proposal[agent] = quantize_move(force, s.current, grid, blocked)
        ops.tick(4)
        if log is not None:
            log.append(("deadlock", j.agent, agent))

    # Final reservation pass, in priority rank order. An agent may enter a
    # cell only if it is unreserved and its occupant has already committed to
    # leave; this makes waiting always safe and excludes swaps outright.
    class _Ranked:
        __slots__ = ("s",)

        def __init__(self, s: KinematicState) -> None:
            self.s = s

        def __lt__(self, other: "_Ranked") -> bool:
            ops.tick()
            return _rank_key(self.s) < _rank_key(other.s)

    order = [r.s for r in sorted(_Ranked(s) for s in states)]
    final: dict[str, Cell] = {}
    reserved: set[Cell] = set()
    for s in order:
        target = proposal[s.agent]
        ops.tick()
        ok = target == s.current or (
            grid.is_free(target)
            and target not in reserved
            and (target not in occ
                 or (occ[target] in final and final[occ[target]] != target)))
        if not ok:
            target = s.current
        final[s.agent] = target
        reserved.add(target)

    # Safety: distinct targets and no swaps.
    assert len(set(final.values())) == len(final)
    for a, t in final.items():
        if t != cur_of[a]:
            back = occ.get(t)
            assert not (back is not None and final.get(back) == cur_of[a])
    return final
