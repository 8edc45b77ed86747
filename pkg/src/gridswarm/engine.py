"""Deterministic tick-loop orchestrator.

One engine round attempts to advance every zone's logical tick by one via the
leader-gated consensus conversation on the simulated bus, then applies the
remaining phases in fixed order: scripted faults, job spawns, bid assignment,
periodic load balancing, per-zone conflict resolution, simultaneous movement,
and completion checks. Every run is a pure function of (config, seed).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Optional

from . import balance as bal
from . import consensus as cons
from . import election as elec
from . import jobs as jobmod
from . import planner as plan
from .netsim import Bus, derive_seed, zone_topic
from .scenario import ScenarioConfig, scenario_from_dict
from .trace import TraceWriter
from .world import (Cell, GridMap, ZoneId, build_partition, home_zone,
                    subscribed_zones, zone_centroid)

SUPER = "super"
CONTROLLER = "controller"


@dataclass
class Metrics:
    completed: bool = False
    makespan: Optional[int] = None
    rounds: int = 0
    migrations: int = 0
    collisions: int = 0
    ticks_halted: int = 0
    starvation: bool = False
    messages: dict[str, int] = field(default_factory=dict)
    job_waits: dict[str, tuple[Optional[int], Optional[int]]] = field(default_factory=dict)
    deficit_history: list[int] = field(default_factory=list)  # max zone deficit per period

    def flat(self) -> dict[str, Any]:
        waits_a = [w[0] for w in self.job_waits.values() if w[0] is not None]
        waits_c = [w[1] for w in self.job_waits.values() if w[1] is not None]
        out: dict[str, Any] = {
            "completed": self.completed,
            "makespan": self.makespan,
            "rounds": self.rounds,
            "migrations": self.migrations,
            "collisions": self.collisions,
            "ticks_halted": self.ticks_halted,
            "starvation": self.starvation,
            "mean_wait_assign": round(sum(waits_a) / len(waits_a), 3) if waits_a else None,
            "mean_wait_complete": round(sum(waits_c) / len(waits_c), 3) if waits_c else None,
            "deficit_history": ",".join(str(d) for d in self.deficit_history),
        }
        for topic, count in sorted(self.messages.items()):
            out[f"messages.{topic}"] = count
        return out


@dataclass
class AgentSim:
    id: str
    position: Cell
    powered: bool = True
    status: cons.Liveness = cons.Liveness.ALIVE
    local_tick: int = 0
    committed_round: int = -1
    stale_rounds: int = 0
    is_leader: bool = False
    led_zone: Optional[ZoneId] = None
    solo_rounds: int = 0
    home: ZoneId = (0, 0)
    subscribed: frozenset[ZoneId] = frozenset()
    job: Optional[str] = None
    mandate: Optional[bal.MigrationMandate] = None
    goal: Optional[Cell] = None
    path: Optional[list[Cell]] = None
    path_i: int = 0
    priority: float = 1.0
    stuck: int = 0

    @property
    def idle(self) -> bool:
        return self.job is None


@dataclass
class LeaderRound:
    zone: ZoneId
    leader: str
    tick: int
    expected: set[str]
    states: dict[str, cons.StateRecord] = field(default_factory=dict)
    state_acked: set[str] = field(default_factory=set)
    tick_acks: set[str] = field(default_factory=set)
    waited_states: int = 0
    waited_acks: int = 0
    probe_sent: bool = False
    confirm_ok: bool = False
    broadcast: bool = False
    advanced: bool = False
    complete: bool = False
    solicited: list[str] = field(default_factory=list)


@dataclass
class ZoneState:
    id: ZoneId
    leader: Optional[str] = None
    tick: int = 0
    snapshot: Optional[cons.ZoneSnapshot] = None
    pool: dict[str, jobmod.Job] = field(default_factory=dict)
    bids: dict[str, list[jobmod.Bid]] = field(default_factory=dict)


@dataclass
class ElectionState:
    election_id: int
    reason: elec.ElectionReason
    deadline: int
    candidacies: dict[str, tuple[float, int]] = field(default_factory=dict)


class SuperState:
    def __init__(self) -> None:
        self.roles: dict[ZoneId, Optional[str]] = {}
        self.elections: dict[ZoneId, ElectionState] = {}
        self.next_election = 0
        self.loads: dict[ZoneId, bal.ZoneLoad] = {}
        self.period_loads: dict[ZoneId, bal.ZoneLoad] = {}
        self.idle_ids: dict[ZoneId, list[str]] = {}
        self.controller_pending: dict[ZoneId, int] = {}
        self.mandate_counter = 0


class Simulation:
    """One deterministic scenario run."""

    def __init__(self, config: ScenarioConfig) -> None:
        self.cfg = config
        self.grid = config.grid
        self.partition = build_partition(self.grid, config.rows, config.cols,
                                         config.overlap)
        self.seed = config.seed
        self.timeout = config.timeout_steps
        self.trace = TraceWriter()
        self.metrics = Metrics()
        self.bus = Bus(config.network, config.seed)
        self.round = 0
        self.costs = jobmod.CostField(self.grid)
        self.jobs: dict[str, jobmod.Job] = {}
        self._spawn_idx = 0
        self._first_spawn_round: Optional[int] = None
        self._last_complete_round: Optional[int] = None

        self.zones = {z: ZoneState(id=z) for z in self.partition.zone_ids()}
        self.sup = SuperState()
        for z in self.zones:
            self.sup.roles[z] = None

        self.agents: dict[str, AgentSim] = {}
        for aid, start in config.agents:
            a = AgentSim(id=aid, position=start)
            a.home = home_zone(start, self.partition)
            self.agents[aid] = a

        self.bus.register(SUPER)
        self.bus.register(CONTROLLER)
        self.bus.subscribe(SUPER, "super/loads")
        self.bus.subscribe(SUPER, "super/election")
        for aid in sorted(self.agents):
            self.bus.register(aid)
            self.bus.subscribe(aid, "super/election")
            self.bus.subscribe(aid, "super/mandates")
            self._resubscribe(self.agents[aid])

    # ------------------------------------------------------------------ utils

    def _emit(self, kind: str, actor: str, **payload: Any) -> None:
        self.trace.emit(self.round, kind, actor, **payload)

    def _publish(self, sender: str, topic: str, payload: dict) -> bool:
        cls = topic.rsplit("/", 1)[-1] if topic.startswith("zone/") else topic.replace("/", "_")
        accepted = self.bus.publish(sender, topic, payload, tick=self.round)
        if accepted:
            self.metrics.messages[cls] = self.metrics.messages.get(cls, 0) + 1
        return accepted

    def _resubscribe(self, a: AgentSim) -> None:
        new = frozenset(subscribed_zones(a.position, self.partition))
        for z in sorted(a.subscribed - new):
            self.bus.unsubscribe(a.id, zone_topic(z, "db_update"))
            self.bus.unsubscribe(a.id, zone_topic(z, "global_tick"))
        for z in sorted(new - a.subscribed):
            self.bus.subscribe(a.id, zone_topic(z, "db_update"))
            self.bus.subscribe(a.id, zone_topic(z, "global_tick"))
        a.subscribed = new

    def _set_leader_subs(self, a: AgentSim, zone: ZoneId, on: bool) -> None:
        for suffix in ("state_ack", "tick_ack"):
            if on:
                self.bus.subscribe(a.id, zone_topic(zone, suffix))
            else:
                self.bus.unsubscribe(a.id, zone_topic(zone, suffix))

    def _members(self, zone: ZoneId) -> list[AgentSim]:
        return [a for aid, a in sorted(self.agents.items())
                if a.home == zone and a.status is cons.Liveness.ALIVE]

    def _active_leader(self, zone: ZoneId) -> Optional[AgentSim]:
        lid = self.zones[zone].leader
        if lid is None:
            return None
        a = self.agents[lid]
        if a.powered and a.is_leader and a.status is cons.Liveness.ALIVE and a.home == zone:
            return a
        return None

    def _record_for(self, a: AgentSim) -> cons.StateRecord:
        intent = a.position
        if a.path and a.path_i + 1 < len(a.path):
            intent = a.path[a.path_i + 1]
        return cons.StateRecord(agent=a.id, position=a.position, intent=intent,
                                job=a.job, priority=a.priority, tick=a.local_tick)

    def _force_rng(self, agent: str) -> random.Random:
        return random.Random(derive_seed(self.seed, "force", self.round, agent))

    # ------------------------------------------------------------ run control

    def run(self) -> tuple[Metrics, TraceWriter]:
        self._bootstrap()
        while self.round < self.cfg.max_ticks and not self._all_jobs_done():
            self.round += 1
            self._run_round()
        self.metrics.rounds = self.round
        self.metrics.completed = self._all_jobs_done()
        if (self.metrics.completed and self._first_spawn_round is not None
                and self._last_complete_round is not None):
            self.metrics.makespan = self._last_complete_round - self._first_spawn_round
        if not self.metrics.completed and not any(
                a.powered for a in self.agents.values()):
            self.metrics.starvation = True
        return self.metrics, self.trace

    def _all_jobs_done(self) -> bool:
        if self._spawn_idx < len(self.cfg.jobs):
            return False
        return all(j.status is jobmod.JobStatus.COMPLETED for j in self.jobs.values())

    def _bootstrap(self) -> None:
        for zone in sorted(self.zones):
            self._start_election(zone, elec.ElectionReason.BOOTSTRAP)
        for _ in range(2 * self.timeout + 6):
            for recipient, env in self.bus.step_deliver():
                self._handle(recipient, env, {})
            self._super_eval()
            if not self.sup.elections and self.bus.pending() == 0:
                break

    # ------------------------------------------------------------- the phases

    def _run_round(self) -> None:
        rounds = self._phase_consensus()
        self._phase_faults()
        self._phase_spawns()
        self._phase_assign(rounds)
        self._phase_balance()
        proposals, movable = self._phase_plan()
        self._phase_move(proposals, movable)
        self._phase_complete()

    # Phase 1: one consensus round per led zone, over shared bus steps.
    def _phase_consensus(self) -> dict[ZoneId, LeaderRound]:
        rounds: dict[ZoneId, LeaderRound] = {}
        for zone in sorted(self.zones):
            zs = self.zones[zone]
            zs.bids = {}
            leader = self._active_leader(zone)
            if leader is None:
                continue
            expected = {m.id for m in self._members(zone)}
            rounds[zone] = LeaderRound(zone=zone, leader=leader.id, tick=zs.tick,
                                       expected=expected)
        for aid in sorted(self.agents):
            a = self.agents[aid]
            if not a.powered:
                continue
            if a.status is cons.Liveness.ALIVE:
                rec = self._record_for(a)
                self._emit("StatePublish", aid, zone=list(a.home),
                           position=list(a.position), intent=list(rec.intent),
                           job=a.job, agent_tick=a.local_tick)
                for z in sorted(a.subscribed):
                    self._publish(aid, zone_topic(z, "db_update"),
                                  {"kind": "state", "record": rec})
            else:
                self._publish(aid, zone_topic(a.home, "db_update"),
                              {"kind": "resync_req", "agent": aid,
                               "tick": a.local_tick})
        peer_seen: dict[str, set[str]] = {}
        for _ in range(3 * self.timeout + 6):
            for recipient, env in self.bus.step_deliver():
                self._handle(recipient, env, rounds, peer_seen)
            for zone in sorted(rounds):
                self._leader_eval(rounds[zone])
            self._super_eval()
            if (all(lr.complete for lr in rounds.values())
                    and not self.sup.elections and self.bus.pending() == 0):
                break
        for zone in sorted(self.zones):
            lr = rounds.get(zone)
            has_live = any(a.powered and a.status is not cons.Liveness.DEAD
                           for a in self.agents.values() if a.home == zone)
            if has_live and (lr is None or not lr.advanced):
                self.metrics.ticks_halted += 1
            if lr is not None and not lr.advanced and lr.probe_sent and not lr.confirm_ok:
                # Probe unanswered: the leader halted this round suspecting
                # its own isolation; after two such rounds it steps down.
                leader = self.agents[lr.leader]
                leader.solo_rounds += 1
                if leader.solo_rounds >= 2 and leader.is_leader:
                    leader.is_leader = False
                    self._set_leader_subs(leader, zone, on=False)
                    leader.led_zone = None
                    if self.zones[zone].leader == lr.leader:
                        self.zones[zone].leader = None
                    self._publish(lr.leader, "super/election",
                                  {"kind": "stepdown", "zone": zone,
                                   "leader": lr.leader})
        # Cross-round staleness drives leader-loss reporting.
        for aid in sorted(self.agents):
            a = self.agents[aid]
            if not a.powered or a.is_leader:
                continue
            if a.committed_round == self.round:
                a.stale_rounds = 0
            else:
                a.stale_rounds += 1
                if a.stale_rounds >= 2 and a.stale_rounds % 2 == 0:
                    self._publish(aid, "super/election",
                                  {"kind": "leader_loss", "zone": a.home,
                                   "agent": aid, "tick": a.local_tick})
        return rounds

    def _leader_eval(self, lr: LeaderRound) -> None:
        if lr.complete:
            return
        leader = self.agents[lr.leader]
        if not leader.is_leader:  # demoted mid-round by a role broadcast
            lr.complete = True
            return
        if not lr.broadcast:
            others = lr.expected - {lr.leader}
            missing = others - set(lr.states)
            if not missing:
                self._leader_broadcast(lr)
                return
            lr.waited_states += 1
            if lr.waited_states < self.timeout:
                return
            if not lr.states and others:
                # Zero contact: suspect own isolation before declaring a
                # whole zone dead; the super-leader acts as the arbiter.
                if not lr.probe_sent:
                    lr.probe_sent = True
                    self._publish(lr.leader, "super/election",
                                  {"kind": "suspect", "zone": lr.zone,
                                   "leader": lr.leader})
                if lr.confirm_ok:
                    self._mark_dead(lr, missing)
                    self._leader_broadcast(lr)
                return
            self._mark_dead(lr, missing)
            self._leader_broadcast(lr)
        else:
            decision = cons.leader_tick_decision(
                lr.tick_acks | {lr.leader}, lr.expected, lr.waited_acks,
                self.timeout, tick=lr.tick)
            if isinstance(decision, cons.Advance):
                lr.complete = True
            elif isinstance(decision, cons.Wait):
                lr.waited_acks += 1
            else:
                self._mark_dead(lr, decision.missing)
                lr.complete = True

    def _mark_dead(self, lr: LeaderRound, missing: set[str]) -> None:
        for aid in sorted(missing):
            a = self.agents[aid]
            a.status = cons.Liveness.DEAD
            released = a.job
            if released is not None:
                job = self.jobs[released]
                job.status = jobmod.JobStatus.PENDING
                job.assignee = None
                job.assign_tick = None
                a.job = None
                a.goal = None
                a.path = None
                a.priority = 1.0
            self._emit("MarkDead", lr.leader, zone=list(lr.zone), agent=aid,
                       released_job=released)
            lr.expected.discard(aid)

    def _leader_broadcast(self, lr: LeaderRound) -> None:
        leader = self.agents[lr.leader]
        zs = self.zones[lr.zone]
        records = dict(lr.states)
        records[lr.leader] = self._record_for(leader)
        records = {a: r for a, r in records.items() if a in lr.expected}
        snapshot = cons.make_snapshot(lr.tick, records)
        new_tick = lr.tick + 1
        pending = sorted(j for j, job in zs.pool.items()
                         if job.status is jobmod.JobStatus.PENDING)
        lr.solicited = pending
        solicit = [[j, list(zs.pool[j].location), zs.pool[j].priority]
                   for j in pending]
        self._publish(lr.leader, zone_topic(lr.zone, "global_tick"),
                      {"kind": "tick", "new_tick": new_tick,
                       "roster": sorted(lr.expected), "snapshot": snapshot,
                       "solicit": solicit})
        if leader.idle:
            for job_id in pending:
                cost = self.costs.cost(leader.position, zs.pool[job_id].location)
                zs.bids.setdefault(job_id, []).append(
                    jobmod.Bid(agent=lr.leader, job=job_id, cost=cost))
                self._emit("Bid", lr.leader, job=job_id, cost=cost,
                           zone=list(lr.zone))
        zs.tick = new_tick
        zs.snapshot = snapshot
        leader.local_tick = new_tick
        leader.committed_round = self.round
        leader.stale_rounds = 0
        lr.broadcast = True
        lr.advanced = True
        self._emit("TickBroadcast", lr.leader, zone=list(lr.zone),
                   new_tick=new_tick, roster=sorted(lr.expected),
                   digest=snapshot.digest())

    # ---------------------------------------------------------- bus handlers

    def _handle(self, recipient: str, env, rounds: dict[ZoneId, LeaderRound],
                peer_seen: Optional[dict[str, set[str]]] = None) -> None:
        topic = env.topic
        payload = env.payload
        if recipient == SUPER:
            self._handle_super(env)
            return
        a = self.agents.get(recipient)
        if a is None or not a.powered:
            return
        if topic.startswith("zone/"):
            zone = self._topic_zone(topic)
            if topic.endswith("db_update"):
                self._handle_db_update(a, zone, env, rounds, peer_seen)
            elif topic.endswith("global_tick"):
                self._handle_global_tick(a, zone, payload, rounds)
            elif topic.endswith("state_ack"):
                lr = rounds.get(zone)
                if lr and lr.leader == recipient:
                    lr.state_acked.add(env.sender)
            elif topic.endswith("tick_ack"):
                self._handle_tick_ack(a, zone, env, rounds)
        elif topic == "super/election":
            self._handle_election_msg(a, payload, rounds)
        elif topic == "super/mandates":
            self._handle_mandate_msg(a, payload)

    @staticmethod
    def _topic_zone(topic: str) -> ZoneId:
        part = topic.split("/")[1]
        row, col = part.split(",")
        return (int(row), int(col))

    def _handle_db_update(self, a: AgentSim, zone: ZoneId, env,
                          rounds: dict[ZoneId, LeaderRound],
                          peer_seen: Optional[dict[str, set[str]]]) -> None:
        payload = env.payload
        lr = rounds.get(zone)
        is_zone_leader = lr is not None and lr.leader == a.id
        if payload["kind"] == "state":
            rec: cons.StateRecord = payload["record"]
            if is_zone_leader and env.sender in lr.expected:
                lr.states[env.sender] = rec
            if peer_seen is not None and a.status is cons.Liveness.ALIVE and zone == a.home:
                seen = peer_seen.setdefault(a.id, set())
                if env.sender not in seen:
                    first = not seen
                    seen.add(env.sender)
                    if first:
                        self._emit("StateAck", a.id, zone=list(zone),
                                   peers=sorted(seen))
                        self._publish(a.id, zone_topic(zone, "state_ack"),
                                      {"kind": "state_ack", "agent": a.id})
        elif payload["kind"] == "resync_req" and is_zone_leader:
            zs = self.zones[zone]
            if zs.snapshot is None:
                return
            self._publish(a.id, zone_topic(zone, "global_tick"),
                          {"kind": "resync_resp", "target": payload["agent"],
                           "tick": zs.tick, "snapshot": zs.snapshot,
                           "roster": sorted(lr.expected | {payload["agent"]})})

    def _handle_global_tick(self, a: AgentSim, zone: ZoneId, payload: dict,
                            rounds: dict[ZoneId, LeaderRound]) -> None:
        if payload["kind"] == "resync_resp":
            if payload["target"] != a.id or a.status is cons.Liveness.ALIVE:
                return
            a.status = cons.Liveness.ALIVE
            a.local_tick = payload["tick"]
            a.committed_round = self.round
            a.stale_rounds = 0
            # Rejoins the leader's expected set from the next round on; it has
            # not published state this round, so gating on it would stall.
            self._emit("Resync", a.id, zone=list(zone), resync_tick=payload["tick"])
            return
        if zone != a.home or a.is_leader:
            return
        if a.status is cons.Liveness.DEAD:
            return
        new_tick = payload["new_tick"]
        if a.status is cons.Liveness.RECOVERING:
            return  # resync path handles rejoining
        if a.id not in payload["roster"] or cons.tick_gap_requires_resync(
                a.local_tick, new_tick):
            a.status = cons.Liveness.RECOVERING
            self._publish(a.id, zone_topic(zone, "db_update"),
                          {"kind": "resync_req", "agent": a.id, "tick": a.local_tick})
            return
        if new_tick <= a.local_tick:
            return
        a.local_tick = new_tick
        a.committed_round = self.round
        a.stale_rounds = 0
        snapshot: cons.ZoneSnapshot = payload["snapshot"]
        bids = []
        if a.idle:
            for job_id, loc, _prio in payload["solicit"]:
                cost = self.costs.cost(a.position, Cell(*loc))
                bids.append([job_id, cost])
        self._emit("TickAck", a.id, zone=list(zone), committed_tick=new_tick,
                   digest=snapshot.digest())
        self._publish(a.id, zone_topic(zone, "tick_ack"),
                      {"kind": "tick_ack", "tick": new_tick, "bids": bids})

    def _handle_tick_ack(self, a: AgentSim, zone: ZoneId, env,
                         rounds: dict[ZoneId, LeaderRound]) -> None:
        lr = rounds.get(zone)
        if lr is None or lr.leader != a.id:
            return
        lr.tick_acks.add(env.sender)
        zs = self.zones[zone]
        for job_id, cost in env.payload.get("bids", []):
            if job_id in lr.solicited:
                zs.bids.setdefault(job_id, []).append(
                    jobmod.Bid(agent=env.sender, job=job_id, cost=cost))
                self._emit("Bid", env.sender, job=job_id, cost=cost, zone=list(zone))

    def _handle_election_msg(self, a: AgentSim, payload: dict,
                             rounds: dict[ZoneId, LeaderRound]) -> None:
        kind = payload["kind"]
        if kind == "solicit":
            zone = payload["zone"]
            if a.home != zone or a.status is not cons.Liveness.ALIVE:
                return
            dist = elec.centroid_distance(a.position, self.partition.zone(zone))
            self._publish(a.id, "super/election",
                          {"kind": "candidacy", "zone": zone,
                           "election": payload["election"], "agent": a.id,
                           "distance": dist, "tick": a.local_tick})
        elif kind == "role":
            zone = payload["zone"]
            leader_id = payload["leader"]
            if a.id == leader_id:
                if a.home != zone or a.status is not cons.Liveness.ALIVE:
                    return
                a.is_leader = True
                a.led_zone = zone
                a.solo_rounds = 0
                zs = self.zones[zone]
                zs.leader = a.id
                zs.tick = max(zs.tick, payload["since_tick"])
                if zs.tick > a.local_tick:
                    self._emit("Resync", a.id, zone=list(zone),
                               resync_tick=zs.tick)
                a.local_tick = max(a.local_tick, zs.tick)
                self._set_leader_subs(a, zone, on=True)
            elif a.is_leader and a.led_zone == zone:
                a.is_leader = False
                self._set_leader_subs(a, zone, on=False)
                a.led_zone = None
        elif kind == "suspect_ok":
            lr = rounds.get(payload["zone"])
            if lr is not None and lr.leader == a.id:
                lr.confirm_ok = True

    def _handle_mandate_msg(self, a: AgentSim, payload: dict) -> None:
        m: bal.MigrationMandate = payload["mandate"]
        if m.agent != a.id:
            return
        if (not a.idle or a.status is not cons.Liveness.ALIVE
                or a.home != m.from_zone):
            return  # busy, dead, or already moved: mandate lapses
        target_zone = self.partition.zone(m.to_zone)
        goal = bal.nearest_free_cell(self.grid, zone_centroid(target_zone))
        if goal is None:
            return
        a.mandate = m
        a.goal = goal
        a.path = None

    def _handle_super(self, env) -> None:
        payload = env.payload
        kind = payload.get("kind")
        if kind == "job_notice":
            # Counts as unserved demand until a leader's load report covers
            # the zone again; a fresh report pops the counter.
            zone = payload["zone"]
            self.sup.controller_pending[zone] = (
                self.sup.controller_pending.get(zone, 0) + 1)
        elif kind == "load":
            zone = payload["zone"]
            load = bal.ZoneLoad(zone=zone, pending_jobs=payload["pending"],
                                idle_agents=payload["idle"],
                                total_agents=payload["total"])
            self.sup.period_loads[zone] = load
            self.sup.idle_ids[zone] = payload["idle_ids"]
            self.sup.controller_pending.pop(zone, None)
            self._emit("LoadReport", SUPER, zone=list(zone),
                       pending=payload["pending"], idle=payload["idle"],
                       total=payload["total"])
        elif kind == "leader_loss":
            zone = payload["zone"]
            if zone not in self.sup.elections:
                self._start_election(zone, elec.ElectionReason.LEADER_DEAD)
        elif kind == "stepdown":
            zone = payload["zone"]
            if self.sup.roles.get(zone) == payload["leader"]:
                self.sup.roles[zone] = None
            if zone not in self.sup.elections:
                self._start_election(zone, elec.ElectionReason.LEADER_MIGRATED)
        elif kind == "candidacy":
            st = self.sup.elections.get(payload["zone"])
            if st is not None and st.election_id == payload["election"]:
                st.candidacies[payload["agent"]] = (payload["distance"],
                                                   payload["tick"])
        elif kind == "suspect":
            zone = payload["zone"]
            if self.sup.roles.get(zone) == payload["leader"]:
                self._publish(SUPER, "super/election",
                              {"kind": "suspect_ok", "zone": zone,
                               "leader": payload["leader"]})

    def _start_election(self, zone: ZoneId, reason: elec.ElectionReason) -> None:
        self.sup.next_election += 1
        self.sup.elections[zone] = ElectionState(
            election_id=self.sup.next_election, reason=reason,
            deadline=self.bus.now + self.timeout)
        self._publish(SUPER, "super/election",
                      {"kind": "solicit", "zone": zone,
                       "election": self.sup.next_election})

    def _super_eval(self) -> None:
        for zone in sorted(self.sup.elections):
            st = self.sup.elections[zone]
            if self.bus.now < st.deadline:
                continue
            del self.sup.elections[zone]
            if not st.candidacies:
                self.sup.roles[zone] = None
                continue
            winner = elec.elect_zone_leader(
                [elec.Candidacy(agent=aid, distance=d)
                 for aid, (d, _t) in sorted(st.candidacies.items())])
            since = max(t for _d, t in st.candidacies.values())
            self.sup.roles[zone] = winner
            self._publish(SUPER, "super/election",
                          {"kind": "role", "zone": zone, "leader": winner,
                           "since_tick": since})
            self._emit("Election", SUPER, zone=list(zone), leader=winner,
                       since_tick=since, reason=st.reason.value)

    # Phase 2: scripted faults.
    def _phase_faults(self) -> None:
        for f in self.cfg.faults:
            if f.tick != self.round:
                continue
            if f.kind == "kill":
                a = self.agents[f.agent]
                a.powered = False
                if a.is_leader:  # a rebooted robot does not retain leadership
                    zone = a.led_zone
                    a.is_leader = False
                    if zone is not None:
                        self._set_leader_subs(a, zone, on=False)
                        a.led_zone = None
                        if self.zones[zone].leader == a.id:
                            self.zones[zone].leader = None
            elif f.kind == "revive":
                a = self.agents[f.agent]
                a.powered = True
                if a.status is cons.Liveness.ALIVE:
                    # Never marked dead: a stale tick will trip the gap check.
                    a.stale_rounds = 0
            elif f.kind == "partition":
                self.bus.set_partition(f.groups)
            elif f.kind == "heal":
                self.bus.set_partition(())

    # Phase 3: job spawns from the independent controller.
    def _phase_spawns(self) -> None:
        while self._spawn_idx < len(self.cfg.jobs):
            spec = sorted(self.cfg.jobs, key=lambda s: s.spawn_tick)[self._spawn_idx]
            if spec.spawn_tick > self.round:
                break
            self._spawn_idx += 1
            job_id = f"j{self._spawn_idx - 1:03d}"
            try:
                job = jobmod.spawn_job(self.grid, job_id, spec.location,
                                       spec.priority, self.round)
            except jobmod.SpawnRejected:
                self._emit("JobSpawn", CONTROLLER, job=job_id,
                           location=list(spec.location), priority=spec.priority,
                           zone=None, rejected=True)
                continue
            zone = home_zone(job.location, self.partition)
            self.jobs[job_id] = job
            self.zones[zone].pool[job_id] = job
            self.metrics.job_waits[job_id] = (None, None)
            if self._first_spawn_round is None:
                self._first_spawn_round = self.round
            self._emit("JobSpawn", CONTROLLER, job=job_id,
                       location=list(job.location), priority=job.priority,
                       zone=list(zone), rejected=False)
            self._publish(CONTROLLER, "super/loads",
                          {"kind": "job_notice", "zone": zone})

    # Phase 4: leaders assign solicited jobs from bus-delivered bids.
    def _phase_assign(self, rounds: dict[ZoneId, LeaderRound]) -> None:
        for zone in sorted(rounds):
            lr = rounds[zone]
            if not lr.advanced:
                continue
            leader = self._active_leader(zone)
            if leader is None:
                continue
            zs = self.zones[zone]
            taken: set[str] = set()
            for job_id in lr.solicited:
                job = zs.pool.get(job_id)
                if job is None or job.status is not jobmod.JobStatus.PENDING:
                    continue
                bids = [b for b in zs.bids.get(job_id, [])
                        if b.agent not in taken and self.agents[b.agent].idle
                        and self.agents[b.agent].status is cons.Liveness.ALIVE]
                best = jobmod.choose_assignee(bids)
                if best is None:
                    continue
                a = self.agents[best.agent]
                job.status = jobmod.JobStatus.ASSIGNED
                job.assignee = best.agent
                job.assign_tick = self.round
                a.job = job_id
                a.goal = job.location
                a.priority = job.priority
                a.path = None
                a.mandate = None  # assignment takes precedence over migration
                taken.add(best.agent)
                waits = self.metrics.job_waits[job_id]
                self.metrics.job_waits[job_id] = (self.round - job.spawn_tick,
                                                  waits[1])
                self._emit("Assign", leader.id, job=job_id, agent=best.agent,
                           cost=best.cost, zone=list(zone))

    # Phase 5: periodic load reporting and daisy-chain planning.
    def _phase_balance(self) -> None:
        if self.round % self.cfg.balance_period != 0:
            return
        for zone in sorted(self.zones):
            leader = self._active_leader(zone)
            if leader is None:
                continue
            members = self._members(zone)
            pending = sum(1 for j in self.zones[zone].pool.values()
                          if j.status is jobmod.JobStatus.PENDING)
            idle_ids = sorted(m.id for m in members
                              if m.idle and m.mandate is None and m.powered)
            self._publish(leader.id, "super/loads",
                          {"kind": "load", "zone": zone, "pending": pending,
                           "idle": len(idle_ids), "total": len(members),
                           "idle_ids": idle_ids})
        # The super-leader plans on the loads delivered so far (previous
        # period's reports); this period's reports arrive next round.
        reports = dict(self.sup.period_loads)
        # Chains are staffed only from zones heard from this period; stale
        # rosters would mandate agents that have long since moved on.
        idle_by_zone = {z: list(self.sup.idle_ids.get(z, [])) for z in reports}
        self.sup.loads.update(reports)
        self.sup.period_loads = {}
        self.sup.idle_ids = {}
        deficits = bal.compute_zone_loads(reports, self.sup.loads)
        for zone, count in sorted(self.sup.controller_pending.items()):
            deficits[zone] = max(deficits.get(zone, 0), count)
        self.metrics.deficit_history.append(
            max([d for d in deficits.values() if d > 0], default=0))
        mandates, starved = bal.plan_daisy_chain(
            deficits, self.partition.rows, self.partition.cols, idle_by_zone,
            issue_tick=self.round, start_id=self.sup.mandate_counter)
        self.sup.mandate_counter += len(mandates)
        if starved:
            self.metrics.starvation = True
        for m in mandates:
            self._emit("Mandate", SUPER, mandate=m.id, agent=m.agent,
                       from_zone=list(m.from_zone), to_zone=list(m.to_zone))
            self._publish(SUPER, "super/mandates", {"kind": "mandate", "mandate": m})

    # Phases 6-7: per-zone conflict resolution, then simultaneous movement.
    def _plan_grid(self) -> GridMap:
        """Base map plus powered-off agents, which sit still indefinitely."""
        dead = frozenset(a.position for a in self.agents.values() if not a.powered)
        if not dead:
            return self.grid
        if getattr(self, "_plan_grid_key", None) != dead:
            self._plan_grid_key = dead
            self._plan_grid_cache = GridMap(width=self.grid.width,
                                            height=self.grid.height,
                                            obstacles=self.grid.obstacles | dead)
        return self._plan_grid_cache

    def _phase_plan(self) -> tuple[dict[str, Cell], set[str]]:
        grid = self._plan_grid()
        states: dict[str, plan.KinematicState] = {}
        movable: set[str] = set()
        for aid in sorted(self.agents):
            a = self.agents[aid]
            can_move = (a.powered and a.status is cons.Liveness.ALIVE
                        and a.committed_round == self.round)
            intent = a.position
            if can_move and a.goal is not None and a.position != a.goal:
                if not a.path or a.path_i >= len(a.path) or a.path[a.path_i] != a.position:
                    a.path = (plan.plan_path(grid, a.position, a.goal)
                              if grid.is_free(a.position) and grid.is_free(a.goal)
                              else None)
                    if a.path is None:  # boxed in for now; keep the plain route
                        a.path = plan.plan_path(self.grid, a.position, a.goal)
                    a.path_i = 0
                if a.path and a.path_i + 1 < len(a.path):
                    intent = a.path[a.path_i + 1]
            if can_move:
                movable.add(aid)
            states[aid] = plan.KinematicState(
                agent=aid, current=a.position, intent=intent,
                priority=a.priority, stuck=a.stuck,
                has_job=a.goal is not None and can_move)
        proposals: dict[str, Cell] = {aid: s.intent for aid, s in states.items()}
        for zone in sorted(self.zones):
            x0, y0, x1, y1 = self.partition.expanded_bounds(zone)
            group = [states[aid] for aid in sorted(states)
                     if x0 <= states[aid].current.x <= x1
                     and y0 <= states[aid].current.y <= y1
                     and self.agents[aid].powered]
            members = {s.agent for s in group if self.agents[s.agent].home == zone}
            if not members or len(group) < 2:
                continue
            log: list = []
            result = plan.resolve_zone_step(group, grid, self.cfg.planner,
                                            self._force_rng, log=log)
            for aid in sorted(members):
                proposals[aid] = result[aid]
            for kind, keeper, yielder in log:
                if yielder not in members:
                    continue
                ka, ya = self.agents[keeper], self.agents[yielder]
                if ka.home != ya.home:
                    tick_used = cons.resolve_overlap_tick(
                        ya.local_tick, ka.local_tick, ya.priority, ka.priority,
                        yielder, keeper)
                else:
                    tick_used = self.zones[ya.home].tick
                kind_name = kind.value if isinstance(kind, plan.ConflictKind) else kind
                self._emit("ConflictResolved", yielder, zone=list(zone),
                           kind_detail=kind_name, keeper=keeper, yielder=yielder,
                           tick_used=tick_used)
        for aid in sorted(states):
            if aid not in movable:
                proposals[aid] = self.agents[aid].position
        return proposals, movable

    def _phase_move(self, proposals: dict[str, Cell], movable: set[str]) -> None:
        order = sorted(self.agents.values(), key=lambda a: (-a.priority, a.id))
        occ = {a.position: a.id for a in self.agents.values()}
        final: dict[str, Cell] = {}
        reserved: set[Cell] = set()
        for a in order:
            target = proposals[a.id]
            ok = (a.id in movable and target != a.position
                  and self.grid.is_free(target)
                  and target not in reserved
                  and (target not in occ
                       or (occ[target] in final and final[occ[target]] != target)))
            if not ok:
                target = a.position
            final[a.id] = target
            reserved.add(target)
        for aid in sorted(self.agents):
            a = self.agents[aid]
            target = final[aid]
            if target != a.position:
                self._emit("Move", aid, src=list(a.position), dst=list(target))
                old = a.position
                a.position = target
                a.stuck = 0
                if a.path and a.path_i + 1 < len(a.path) and a.path[a.path_i + 1] == target:
                    a.path_i += 1
                else:
                    a.path = None
                self._after_move(a, old)
            else:
                if aid in movable and a.goal is not None and a.position != a.goal:
                    a.stuck += 1
                else:
                    a.stuck = 0
            if a.goal is not None and a.position == a.goal and a.job is None:
                a.goal = None
                a.path = None
        positions = [a.position for a in self.agents.values() if a.powered]
        clash = len(positions) - len(set(positions))
        if clash:
            self.metrics.collisions += clash

    def _after_move(self, a: AgentSim, old: Cell) -> None:
        new_home = home_zone(a.position, self.partition)
        if new_home != a.home:
            if a.is_leader and a.led_zone == a.home:
                zone = a.led_zone
                a.is_leader = False
                self._set_leader_subs(a, zone, on=False)
                a.led_zone = None
                if self.zones[zone].leader == a.id:
                    self.zones[zone].leader = None
                self._publish(a.id, "super/election",
                              {"kind": "stepdown", "zone": zone, "leader": a.id})
            a.home = new_home
            if a.mandate is not None and new_home == a.mandate.to_zone:
                self.metrics.migrations += 1
                a.mandate = None
                a.goal = None
                a.path = None
        self._resubscribe(a)

    # Phase 8: completion checks at committed positions.
    def _phase_complete(self) -> None:
        for aid in sorted(self.agents):
            a = self.agents[aid]
            if (a.job is None or not a.powered
                    or a.status is not cons.Liveness.ALIVE
                    or a.committed_round != self.round):
                continue
            job = self.jobs[a.job]
            if a.position != job.location:
                continue
            job.status = jobmod.JobStatus.COMPLETED
            job.completion_tick = self.round
            zone = home_zone(job.location, self.partition)
            leader = self.zones[zone].leader or aid
            self._emit("Complete", leader, job=job.id, agent=aid, zone=list(zone))
            waits = self.metrics.job_waits[job.id]
            self.metrics.job_waits[job.id] = (waits[0], self.round - job.spawn_tick)
            self._last_complete_round = self.round
            a.job = None
            a.goal = None
            a.path = None
            a.priority = 1.0


def run_scenario(config: ScenarioConfig | dict) -> tuple[Metrics, TraceWriter]:
    if isinstance(config, dict):
        config = scenario_from_dict(config)
    return Simulation(config).run()
