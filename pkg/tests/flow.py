"""Drive the seven step functions directly, keeping replayable snapshots."""
import copy
from dataclasses import dataclass, field

from lda2iot.protocol import exchange

START = 1_000_000
HOP = 3


@dataclass
class Flow:
    msgs: dict = field(default_factory=dict)
    sent_at: dict = field(default_factory=dict)
    redeliver: dict = field(default_factory=dict)
    ctx: dict = field(default_factory=dict)
    user_key: bytes = None
    sensor_key: bytes = None

    def replay(self, k, now):
        """Hand a copy of message k to a copy of its receiver's state at ``now``."""
        return self.redeliver[k](now)


def honest_flow(dep, i=0, j=0, *, t0=START, hop=HOP, upto=7) -> Flow:
    """Run the exchange until message ``upto`` has been produced (7 runs to the keys)."""
    gw, u, s = dep.gateway, dep.users[i], dep.sensors[j].creds
    rng = dep.rng
    f = Flow()
    t = t0
    m1, uctx = exchange.login_and_build_msg1(u.creds, u.card, u.uid, u.password, s.pub, gw.pub, t, rng)
    f.msgs[1], f.sent_at[1] = m1, t
    f.redeliver[1] = lambda now: exchange.gw_handle_msg1(gw, m1, now)
    t += hop
    m2, gctx = exchange.gw_handle_msg1(gw, m1, t)
    f.msgs[2], f.sent_at[2] = m2, m2.t2
    f.redeliver[2] = lambda now: exchange.sensor_handle_msg2(s, gw.pub, m2, now, rng)
    t += hop
    m3, sctx = exchange.sensor_handle_msg2(s, gw.pub, m2, t, rng)
    f.msgs[3], f.sent_at[3] = m3, m3.t3
    g3 = copy.deepcopy(gctx)
    f.redeliver[3] = lambda now: exchange.gw_handle_msg3(gw, copy.deepcopy(g3), m3, now, rng)
    f.ctx.update(user=uctx, gateway=gctx, sensor=sctx)
    if upto < 4:
        return f
    t += hop
    m4 = exchange.gw_handle_msg3(gw, gctx, m3, t, rng)
    f.msgs[4], f.sent_at[4] = m4, m4.t4
    s4 = copy.deepcopy(sctx)
    f.redeliver[4] = lambda now: exchange.sensor_handle_msg4(s, copy.deepcopy(s4), m4, now, rng)
    if upto < 5:
        return f
    t += hop
    m5 = exchange.sensor_handle_msg4(s, sctx, m4, t, rng)
    f.msgs[5], f.sent_at[5] = m5, m5.t5
    g5 = copy.deepcopy(gctx)
    f.redeliver[5] = lambda now: exchange.gw_handle_msg5(gw, copy.deepcopy(g5), m5, now, rng)
    t += hop
    m6, m7 = exchange.gw_handle_msg5(gw, gctx, m5, t, rng)
    f.msgs[6], f.msgs[7] = m6, m7
    f.sent_at[6] = f.sent_at[7] = m6.t6
    u6, s7 = copy.deepcopy(uctx), copy.deepcopy(sctx)
    f.redeliver[6] = lambda now: exchange.user_handle_msg6(u.creds, u.card, copy.deepcopy(u6), m6, now)
    f.redeliver[7] = lambda now: exchange.sensor_handle_msg7(s, copy.deepcopy(s7), m7, now)
    t += hop
    f.user_key = exchange.user_handle_msg6(u.creds, u.card, uctx, m6, t)
    f.sensor_key = exchange.sensor_handle_msg7(s, sctx, m7, t)
    return f
