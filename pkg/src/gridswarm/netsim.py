"""Deterministic simulated publish/subscribe bus.

Replaces a real middleware transport with an in-process queue that supports
named topics, per-message delay, seeded probabilistic drop, and partition
injection. Delivery order is totally ordered by (deliver_at, sender, seq,
recipient) so identical seeds replay identically.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional


def derive_seed(*parts: Any) -> int:
    """Stable cross-process integer seed from arbitrary labeled parts."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def zone_topic(zone_id: tuple[int, int], suffix: str) -> str:
    row, col = zone_id
    return f"zone/{row},{col}/{suffix}"


class UnknownSenderError(KeyError):
    pass


class PartitionConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Envelope:
    seq: int
    sender: str
    topic: str
    sent_tick: int
    deliver_at: int
    payload: Any


@dataclass(frozen=True)
class BusConfig:
    drop_prob: float = 0.0
    delay_steps: int | tuple[int, int] = 0
    partitions: tuple[frozenset[str], ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0, 1]")
        d = self.delay_steps
        if isinstance(d, int):
            if d < 0:
                raise ValueError("delay_steps must be >= 0")
        else:
            lo, hi = d
            if lo < 0 or hi < lo:
                raise ValueError("delay range must satisfy 0 <= lo <= hi")


class Bus:
    """Single-owner message bus; mutated only between agent-logic phases."""

    def __init__(self, config: BusConfig, seed: int) -> None:
        self.config = config
        self.now = 0
        self._rng = random.Random(derive_seed(seed, "bus"))
        self._registered: set[str] = set()
        self._subs: dict[str, set[str]] = {}
        self._queue: list[tuple[int, str, str, int, str, Envelope]] = []
        self._seq: dict[tuple[str, str], int] = {}
        self._last_deliver_at: dict[tuple[str, str], int] = {}
        self._group: dict[str, int] = {}
        self.published = 0
        self.dropped = 0
        self.set_partition(config.partitions)

    def register(self, agent: str) -> None:
        self._registered.add(agent)

    def subscribe(self, agent: str, topic: str) -> None:
        self._subs.setdefault(topic, set()).add(agent)

    def unsubscribe(self, agent: str, topic: str) -> None:
        self._subs.get(topic, set()).discard(agent)

    def subscribers(self, topic: str) -> list[str]:
        return sorted(self._subs.get(topic, ()))

    def set_partition(self, partitions: Iterable[Iterable[str]]) -> None:
        """Replace the active partition map; an empty set heals everything."""
        groups = [frozenset(p) for p in partitions]
        seen: set[str] = set()
        for g in groups:
            if g & seen:
                raise PartitionConfigError("partition groups must be disjoint")
            seen |= g
        self._group = {}
        for idx, g in enumerate(groups):
            for a in g:
                self._group[a] = idx
        # Unlisted actors form the implicit rest group (-1).

    def reachable(self, a: str, b: str) -> bool:
        return self._group.get(a, -1) == self._group.get(b, -1)

    def _delay(self) -> int:
        d = self.config.delay_steps
        if isinstance(d, int):
            return d
        return self._rng.randint(d[0], d[1])

    def publish(self, sender: str, topic: str, payload: Any, tick: int = 0) -> bool:
        """Queue `payload` for every current subscriber; False if dropped."""
        if sender not in self._registered:
            raise UnknownSenderError(sender)
        if self.config.drop_prob > 0 and self._rng.random() < self.config.drop_prob:
            self.dropped += 1
            return False
        key = (sender, topic)
        seq = self._seq.get(key, 0) + 1
        self._seq[key] = seq
        # Clamp so per-(sender, topic) delivery stays FIFO under random delay.
        deliver_at = max(self.now + self._delay(), self._last_deliver_at.get(key, 0))
        self._last_deliver_at[key] = deliver_at
        env = Envelope(seq=seq, sender=sender, topic=topic, sent_tick=tick,
                       deliver_at=deliver_at, payload=payload)
        for sub in self.subscribers(topic):
            if sub == sender:
                continue
            if not self.reachable(sender, sub):
                continue
            heapq.heappush(self._queue, (deliver_at, sender, topic, seq, sub, env))
        self.published += 1
        return True

    def pending(self) -> int:
        return len(self._queue)

    def step_deliver(self) -> list[tuple[str, Envelope]]:
        """Advance one step and return everything due, in canonical order."""
        self.now += 1
        out: list[tuple[str, Envelope]] = []
        while self._queue and self._queue[0][0] <= self.now:
            _, _, _, _, recipient, env = heapq.heappop(self._queue)
            out.append((recipient, env))
        return out
