"""In-process topic bus with MQTT-style wildcards.

Delivery is at-most-once and in publish order per topic. A channel tap may
sit between ``publish`` and delivery; that is where the adversary harness
reads, drops, rewrites or injects traffic.
"""
from __future__ import annotations

import collections
import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Envelope:
    topic: str
    sender: str
    payload: bytes
    enqueue_time: int
    seq: int = 0


def topic_matches(pattern: str, topic: str) -> bool:
    """``+`` matches one level, a trailing ``#`` matches the rest."""
    pp, tp = pattern.split("/"), topic.split("/")
    for i, part in enumerate(pp):
        if part == "#":
            return True
        if i >= len(tp) or (part != "+" and part != tp[i]):
            return False
    return len(pp) == len(tp)


class Tap(Protocol):
    def __call__(self, env: Envelope) -> Iterable[Envelope]: ...


@dataclass
class Subscription:
    pattern: str
    queue: collections.deque = field(default_factory=collections.deque)

    def poll(self) -> Optional[Envelope]:
        return self.queue.popleft() if self.queue else None

    def peek(self) -> Optional[Envelope]:
        return self.queue[0] if self.queue else None

    def __len__(self) -> int:
        return len(self.queue)


class Transport(Protocol):
    """What actors need from a pub/sub channel; an external broker binding
    would implement the same two methods."""

    def publish(self, topic: str, payload: bytes, sender: str, now: int) -> list[Envelope]: ...

    def subscribe(self, pattern: str) -> Subscription: ...


class MessageBus:
    def __init__(self, tap: Optional[Tap] = None):
        self._subs: list[Subscription] = []
        self._lock = threading.Lock()
        self._seq = itertools.count(1)
        self.tap = tap
        self.log: list[Envelope] = []

    def subscribe(self, pattern: str) -> Subscription:
        sub = Subscription(pattern)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            self._subs.remove(sub)

    def publish(self, topic: str, payload: bytes, sender: str, now: int) -> list[Envelope]:
        """Publish and return the envelopes actually delivered (after the tap)."""
        env = Envelope(topic, sender, payload, now)
        out = list(self.tap(env)) if self.tap is not None else [env]
        delivered = []
        with self._lock:
            for e in out:
                e = Envelope(e.topic, e.sender, e.payload, e.enqueue_time, next(self._seq))
                targets = [s for s in self._subs if topic_matches(s.pattern, e.topic)]
                if not targets:
                    log.warning("no subscriber for topic %s", e.topic)
                for s in targets:
                    s.queue.append(e)
                self.log.append(e)
                delivered.append(e)
        return delivered

    def inject(self, env: Envelope) -> Envelope:
        """Deliver an envelope bypassing the tap (adversary injection)."""
        tap, self.tap = self.tap, None
        try:
            return self.publish(env.topic, env.payload, env.sender, env.enqueue_time)[0]
        finally:
            self.tap = tap


def pending(subs: Iterable[Subscription]) -> Optional[Subscription]:
    """The subscription holding the oldest undelivered envelope."""
    best = None
    for s in subs:
        head = s.peek()
        if head is not None and (best is None or head.seq < best.peek().seq):
            best = s
    return best


Handler = Callable[[Envelope], None]
