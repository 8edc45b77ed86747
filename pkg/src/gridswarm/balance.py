"""Super-leader load monitoring and daisy-chain migration planning.

Imbalance is measured as deficit = pending_jobs - idle_agents per zone. Each
balancing period the planner moves surplus agents toward deficit zones one
zone-boundary hop at a time: a multi-zone transfer becomes a chain of
mandates, one per hop, so no single agent crosses more than one boundary per
period.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .world import Cell, GridMap, ZoneId


@dataclass(frozen=True)
class ZoneLoad:
    zone: ZoneId
    pending_jobs: int
    idle_agents: int
    total_agents: int

    def __post_init__(self) -> None:
        if self.idle_agents > self.total_agents:
            raise ValueError("idle_agents cannot exceed total_agents")


@dataclass(frozen=True)
class MigrationMandate:
    id: str
    agent: str
    from_zone: ZoneId
    to_zone: ZoneId
    issue_tick: int

    def __post_init__(self) -> None:
        dr = abs(self.from_zone[0] - self.to_zone[0])
        dc = abs(self.from_zone[1] - self.to_zone[1])
        if dr + dc != 1:
            raise ValueError("mandates move across exactly one zone boundary")


def compute_zone_loads(reports: dict[ZoneId, ZoneLoad],
                       previous: Optional[dict[ZoneId, ZoneLoad]] = None,
                       ) -> dict[ZoneId, int]:
    """Per-zone deficit; zones missing from `reports` carry their previous load."""
    merged = dict(previous or {})
    merged.update(reports)
    return {z: load.pending_jobs - load.idle_agents for z, load in merged.items()}


def _zone_path(src: ZoneId, dst: ZoneId, rows: int, cols: int) -> list[ZoneId]:
    """Deterministic shortest path on the 4-neighbor zone grid."""
    if src == dst:
        return [src]
    parent: dict[ZoneId, ZoneId] = {}
    seen = {src}
    queue = deque([src])
    while queue:
        r, c = queue.popleft()
        for nr, nc in sorted(((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))):
            if not (0 <= nr < rows and 0 <= nc < cols) or (nr, nc) in seen:
                continue
            parent[(nr, nc)] = (r, c)
            if (nr, nc) == dst:
                path = [dst]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            seen.add((nr, nc))
            queue.append((nr, nc))
    raise ValueError("zone grid is connected; unreachable zones are a bug")


def plan_daisy_chain(deficits: dict[ZoneId, int], rows: int, cols: int,
                     idle_by_zone: dict[ZoneId, list[str]], issue_tick: int,
                     start_id: int = 0) -> tuple[list[MigrationMandate], bool]:
    """Plan one period of migrations.

    Greedy matching: the largest deficit pulls from its nearest surplus zone
    (ties by zone id order); the unit of flow is realized as one mandate per
    hop, each hop staffed by an idle agent currently in that hop's source
    zone. A chain truncates at the first unstaffable hop and the stranded
    flow resumes next period. Returns (mandates, starved) where `starved`
    flags demand with no surplus anywhere.
    """
    deficits = dict(deficits)
    avail = {z: sorted(ids) for z, ids in idle_by_zone.items()}
    mandates: list[MigrationMandate] = []
    next_id = start_id
    starved = False
    for _ in range(sum(max(d, 0) for d in deficits.values()) + 1):
        targets = sorted((z for z, d in deficits.items() if d > 0),
                         key=lambda z: (-deficits[z], z))
        sources = [z for z, d in deficits.items() if d < 0 and avail.get(z)]
        if not targets:
            break
        if not sources:
            # Unstaffable surplus only delays the transfer; starvation means
            # there is demand left and no surplus anywhere to serve it.
            starved = not any(d < 0 for d in deficits.values())
            break
        target = targets[0]
        dist = lambda z: abs(z[0] - target[0]) + abs(z[1] - target[1])
        source = min(sources, key=lambda z: (dist(z), z))
        path = _zone_path(source, target, rows, cols)
        reached = source
        for frm, to in zip(path, path[1:]):
            agents = avail.get(frm)
            if not agents:
                break
            mandates.append(MigrationMandate(id=f"m{next_id}", agent=agents.pop(0),
                                             from_zone=frm, to_zone=to,
                                             issue_tick=issue_tick))
            next_id += 1
            reached = to
        deficits[source] = deficits.get(source, 0) + 1
        deficits[reached] = deficits.get(reached, 0) - 1
    return mandates, starved


def nearest_free_cell(grid: GridMap, point: tuple[float, float]) -> Optional[Cell]:
    """Free cell closest to a real-valued point (Euclidean, ties by y then x)."""
    best: Optional[Cell] = None
    best_key: Optional[tuple[float, int, int]] = None
    px, py = point
    for y in range(grid.height):
        for x in range(grid.width):
            c = Cell(x, y)
            if not grid.is_free(c):
                continue
            key = ((x - px) ** 2 + (y - py) ** 2, y, x)
            if best_key is None or key < best_key:
                best, best_key = c, key
    return best
