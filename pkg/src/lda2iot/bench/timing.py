"""Primitive timing and per-party operation counts."""
from __future__ import annotations

import collections
import contextlib
import os
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Optional

from ..crypto.curve import P256, CurveParams, scalar_mult
from ..crypto.primitives import H, counting, hybrid_decrypt, hybrid_encrypt, keygen
from ..protocol import exchange
from ..runtime.deploy import Deployment

# operation-count formula per party: (hashes, encryptions + decryptions)
REFERENCE_OPS = {"user": (6, 2), "gateway": (13, 6), "sensor": (6, 3)}
REFERENCE_TOTAL_MS = 7.92
# per-device primitive costs in seconds reported for the original hardware
REFERENCE_DEVICE_SECONDS = {
    "user": {"T_E/T_D": 0.07083, "T_h": 0.00041, "T_P": 0.0607},
    "sensor": {"T_E/T_D": 0.08883, "T_h": 0.00084, "T_P": 0.0703},
    "gateway": {"T_E/T_D": 0.06783, "T_h": 0.00034, "T_P": 0.0589},
}


@dataclass(frozen=True)
class Stat:
    mean: float
    stdev: float
    trials: int

    @classmethod
    def of(cls, samples: list[float]) -> "Stat":
        sd = statistics.stdev(samples) if len(samples) > 1 else 0.0
        return cls(statistics.fmean(samples), sd, len(samples))


@dataclass
class TimingReport:
    profile: str
    stats: dict[str, Stat]
    op_counts: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def T_e(self) -> float:
        return (self.stats["T_E"].mean + self.stats["T_D"].mean) / 2

    def formula_totals(self) -> dict[str, float]:
        """Seconds per party under the reference operation-count formula, on this host."""
        th = self.stats["T_h"].mean
        return {who: h * th + e * self.T_e for who, (h, e) in REFERENCE_OPS.items()}

    def measured_totals(self) -> dict[str, float]:
        """Seconds per party under this implementation's counted operations."""
        th = self.stats["T_h"].mean
        return {who: c.get("hash", 0) * th + (c.get("enc", 0) + c.get("dec", 0)) * self.T_e
                for who, c in self.op_counts.items()}


@contextlib.contextmanager
def _one_core():
    """Pin to a single logical core while timing, where the platform allows."""
    if not hasattr(os, "sched_setaffinity"):
        yield
        return
    old = os.sched_getaffinity(0)
    try:
        os.sched_setaffinity(0, {min(old)})
    except OSError:
        pass
    try:
        yield
    finally:
        with contextlib.suppress(OSError):
            os.sched_setaffinity(0, old)


def _time(fn, trials: int) -> Stat:
    samples = []
    for _ in range(trials):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return Stat.of(samples)


def time_primitives(profile: str = "host", trials: int = 100, *, params: CurveParams = P256,
                    rng: Optional[random.Random] = None, with_op_counts: bool = True) -> TimingReport:
    """Mean and spread (seconds) of T_h, T_E, T_D and T_P over ``trials`` runs each."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = rng if rng is not None else random.Random()
    priv, pub = keygen(params, rng)
    fields = [rng.randbytes(32), rng.randbytes(32), rng.randbytes(32), rng.randbytes(16)]
    ct = hybrid_encrypt(pub, fields, params, rng)
    msg = rng.randbytes(96)
    k = rng.randrange(1, params.n)
    with _one_core():
        stats = {
            "T_h": _time(lambda: H(msg), trials),
            "T_E": _time(lambda: hybrid_encrypt(pub, fields, params, rng), trials),
            "T_D": _time(lambda: hybrid_decrypt(ct, priv, params), trials),
            "T_P": _time(lambda: scalar_mult(k, pub, params), trials),
        }
    rep = TimingReport(profile, stats)
    if with_op_counts:
        rep.op_counts = instrumented_op_counts(params=params, rng=rng)
    return rep


def instrumented_op_counts(user_level: int = 1, sensor_level: int = 1, *, params: CurveParams = P256,
                           rng: Optional[random.Random] = None) -> dict[str, dict[str, int]]:
    """Run one honest exchange step by step, tallying each party's primitive calls."""
    rng = rng if rng is not None else random.Random()
    dep = Deployment.create([user_level], [sensor_level], params=params, rng=rng)
    gw, u, s = dep.gateway, dep.users[0], dep.sensors[0].creds
    tally = {who: collections.Counter() for who in ("user", "gateway", "sensor")}
    now = 1_000_000
    with counting(tally["user"]):
        m1, uctx = exchange.login_and_build_msg1(u.creds, u.card, u.uid, u.password, s.pub, gw.pub, now, rng)
    with counting(tally["gateway"]):
        m2, gctx = exchange.gw_handle_msg1(gw, m1, now + 1)
    with counting(tally["sensor"]):
        m3, sctx = exchange.sensor_handle_msg2(s, gw.pub, m2, now + 2, rng)
    with counting(tally["gateway"]):
        m4 = exchange.gw_handle_msg3(gw, gctx, m3, now + 3, rng)
    with counting(tally["sensor"]):
        m5 = exchange.sensor_handle_msg4(s, sctx, m4, now + 4, rng)
    with counting(tally["gateway"]):
        m6, m7 = exchange.gw_handle_msg5(gw, gctx, m5, now + 5, rng)
    with counting(tally["user"]):
        ku = exchange.user_handle_msg6(u.creds, u.card, uctx, m6, now + 6)
    with counting(tally["sensor"]):
        ks = exchange.sensor_handle_msg7(s, sctx, m7, now + 6)
    if ku != ks:
        raise RuntimeError("instrumented session did not agree on a key")
    return {who: {k: c.get(k, 0) for k in ("hash", "enc", "dec")} for who, c in tally.items()}
