"""Dolev-Yao channel control: every envelope on the bus passes through here."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..crypto.curve import CurveParams, Point
from ..errors import WireError
from ..runtime.actors import TopicScheme, device_address
from ..runtime.bus import Envelope
from ..runtime.wire import decode_wire, encode_wire

ADVERSARY = "adversary"
ACTIONS = ("pass", "drop", "modify", "replay", "inject", "swap")


@dataclass
class Knowledge:
    """Everything the adversary holds: public keys, clocks, captured traffic, dumps."""

    params: CurveParams
    gw_pub: Point
    user_pub: Point
    sensor_pub: Point
    clock: object
    rng: random.Random
    prior: list[Envelope] = field(default_factory=list)
    seen: list[Envelope] = field(default_factory=list)
    dump: Optional[dict] = None

    def prior_of(self, kind: str) -> Envelope:
        for e in self.prior:
            if _kind(e.payload, self.params) == kind:
                return e
        raise LookupError(f"no {kind} captured in the prior session")


Forger = Callable[[Knowledge, Envelope], object]


@dataclass(frozen=True)
class TapRule:
    on: str
    do: str = "pass"
    forger: Optional[str] = None
    occurrence: int = 0  # 0 matches every occurrence
    direction: Optional[str] = None  # inject target: u2g | g2s | s2g | g2u

    def __post_init__(self):
        if self.do not in ACTIONS:
            raise ValueError(f"unknown tap action {self.do!r}")


@dataclass(frozen=True)
class TapRecord:
    action: str
    kind: str
    topic: str
    before: bytes
    after: tuple[tuple[str, bytes], ...]


def _kind(payload: bytes, params) -> str:
    try:
        return decode_wire(payload, params).kind
    except WireError:
        return "?"


class ChannelTap:
    """Applies ordered rules to passing envelopes and records every action."""

    def __init__(self, rules, knowledge: Knowledge, forgers: dict[str, Forger], scheme: TopicScheme = TopicScheme()):
        self.rules = list(rules)
        self.kn = knowledge
        self.forgers = forgers
        self.scheme = scheme
        self.transcript: list[TapRecord] = []
        self._counts: dict[str, int] = {}
        self._held: list[Envelope] = []

    def _rules_for(self, kind: str) -> list[TapRule]:
        n = self._counts[kind]
        return [r for r in self.rules if r.on == kind and r.occurrence in (0, n)]

    def _forge(self, name: str, env: Envelope) -> bytes:
        out = self.forgers[name](self.kn, env)
        return out if isinstance(out, bytes) else encode_wire(out, self.kn.params)

    def _target(self, sid: str, direction: str) -> str:
        p = self.kn.params
        return {
            "u2g": lambda: self.scheme.u2g(sid),
            "s2g": lambda: self.scheme.s2g(sid),
            "g2s": lambda: self.scheme.g2s(sid, device_address(self.kn.sensor_pub, p)),
            "g2u": lambda: self.scheme.g2u(sid, device_address(self.kn.user_pub, p)),
        }[direction]()

    def __call__(self, env: Envelope) -> list[Envelope]:
        kind = _kind(env.payload, self.kn.params)
        self._counts[kind] = self._counts.get(kind, 0) + 1
        self.kn.seen.append(env)
        forged = lambda topic, payload: Envelope(topic, ADVERSARY, payload, env.enqueue_time)
        out = [env]
        actions = []
        for rule in self._rules_for(kind) or [TapRule(kind)]:
            actions.append(rule.do)
            if rule.do == "drop":
                out = [e for e in out if e is not env]
            elif rule.do == "modify":
                out = [forged(env.topic, self._forge(rule.forger, env)) if e is env else e for e in out]
            elif rule.do == "replay":
                out = [forged(env.topic, self.kn.prior_of(kind).payload) if e is env else e for e in out]
            elif rule.do == "inject":
                sid, _ = self.scheme.parse(env.topic)
                out.append(forged(self._target(sid, rule.direction), self._forge(rule.forger, env)))
            elif rule.do == "swap":
                # splice the payloads of two sessions' copies of the same message
                if not self._held:
                    self._held.append(env)
                    out = []
                else:
                    first = self._held.pop()
                    out = [forged(first.topic, env.payload), forged(env.topic, first.payload)]
        self.transcript.append(TapRecord("+".join(actions), kind, env.topic, env.payload,
                                         tuple((e.topic, e.payload) for e in out)))
        return out
