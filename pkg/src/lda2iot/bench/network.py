"""Round-trip delay and throughput."""
from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

from ..crypto.curve import P256, CurveParams
from ..runtime.bus import Envelope, MessageBus
from ..runtime.deploy import Deployment
from ..runtime.wire import decode_wire
from .accounting import ENTITIES, CostReport, SizeModel, count_bits

REFERENCE_RTD_S = {"sensor": 0.4825, "user": 0.5282}
REFERENCE_THROUGHPUT_BPS = {"user": 162, "gateway": 233, "sensor": 91, "average": 19.48}


class _Stopwatch:
    """Pass-through tap noting when each message kind is first published."""

    def __init__(self):
        self.marks: dict[str, int] = {}

    def __call__(self, env: Envelope):
        kind = decode_wire(env.payload).kind
        self.marks.setdefault(kind, time.perf_counter_ns())
        return [env]


@dataclass
class RTDReport:
    runs: int
    user_rtd_s: list[float] = field(default_factory=list)
    sensor_rtd_s: list[float] = field(default_factory=list)
    gw_verify_allowed_ns: list[int] = field(default_factory=list)
    gw_verify_denied_ns: list[int] = field(default_factory=list)

    @staticmethod
    def _mean(xs):
        return statistics.fmean(xs) if xs else float("nan")

    @property
    def user_mean(self) -> float:
        return self._mean(self.user_rtd_s)

    @property
    def sensor_mean(self) -> float:
        return self._mean(self.sensor_rtd_s)

    @property
    def verify_allowed_mean(self) -> float:
        return self._mean(self.gw_verify_allowed_ns)

    @property
    def verify_denied_mean(self) -> float:
        return self._mean(self.gw_verify_denied_ns)


def measure_rtd(runs: int = 100, *, deployment: Optional[Deployment] = None, params: CurveParams = P256,
                seed: Optional[int] = None, allowed=(1, 3), denied=(5, 3)) -> RTDReport:
    """In-process round-trip delays plus gateway verification time for allowed and denied pairs.

    User RTD spans Message 1 to Message 6; sensor RTD spans its reply
    (Message 3) to the gateway's answer (Message 4).
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    dep = deployment
    if dep is None:
        dep = Deployment.create([allowed[0], denied[0]], [allowed[1], denied[1]], params=params,
                                rng=random.Random(seed))
        pairs = {"allowed": (0, 0), "denied": (1, 1)}
    else:
        pairs = {"allowed": (0, 0)}
    rep = RTDReport(runs)
    for _ in range(runs):
        for label, (i, j) in pairs.items():
            watch = _Stopwatch()
            out = dep.session(i, j, bus=MessageBus(tap=watch))
            m = watch.marks
            if label == "allowed":
                rep.gw_verify_allowed_ns.append(out.gateway_verify_ns)
                if "msg6" in m:
                    rep.user_rtd_s.append((m["msg6"] - m["msg1"]) / 1e9)
                if "msg4" in m:
                    rep.sensor_rtd_s.append((m["msg4"] - m["msg3"]) / 1e9)
            else:
                rep.gw_verify_denied_ns.append(out.gateway_verify_ns)
    return rep


def throughput_formula(packets: int, packet_bytes: int, seconds: float) -> float:
    """total packets received x packet size / total time (bytes per second)."""
    if seconds <= 0:
        raise ValueError("duration must be positive")
    return packets * packet_bytes / seconds


@dataclass
class ThroughputReport:
    duration_s: float
    bits_per_s: dict[str, float]
    packets_per_s: dict[str, float]


def measure_throughput(trace, duration_s: float, model: SizeModel = SizeModel()) -> ThroughputReport:
    """Bits and packets per second per sending entity over ``duration_s``.

    ``trace`` may be an envelope list or an already computed CostReport.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    rep = trace if isinstance(trace, CostReport) else count_bits(trace, model)
    bits = {e: rep.per_entity[e] / duration_s for e in ENTITIES}
    bits["total"] = rep.total / duration_s
    pkts = {e: sum(1 for m in rep.messages if m.sender == e) / duration_s for e in ENTITIES}
    pkts["total"] = len(rep.messages) / duration_s
    return ThroughputReport(duration_s, bits, pkts)
