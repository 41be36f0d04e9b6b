"""Attack scenarios as data, the named forgers they refer to, and the driver.

A scenario lists tap rules plus what must happen: which parties must
reject forged traffic and with which error. ``run_attack`` builds a fresh
honest deployment, optionally records a prior honest session for the
adversary, runs the attacked session under the tap and scores the result.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import random
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..crypto.curve import P256, CurveParams, encode_point
from ..crypto.primitives import DIGEST_BYTES, NONCE_BYTES, hybrid_decrypt, hybrid_encrypt
from ..errors import UnknownScenario
from ..protocol.types import IDENTITY_BYTES, LEVEL_BYTES, Msg1, Msg2, Msg3, Msg4, Msg5, Msg6, Msg7, ts_bytes
from ..runtime.actors import GatewayActor, VirtualClock, drive, publish_all, run_session
from ..runtime.bus import MessageBus
from ..runtime.deploy import Deployment
from ..runtime.wire import decode_wire
from .tap import ADVERSARY, ChannelTap, Knowledge, TapRecord, TapRule

# --- device compromise ----------------------------------------------------


def corrupt_user_device(user) -> dict:
    """Everything persisted on a user device: X1, X2, RU_i and the smart card.

    Neither the identity nor the password is stored, and per-session values
    such as r_t only ever live in session contexts, so they are absent.
    """
    creds, card = user.creds, user.card
    return {"X1": creds.X1, "X2": creds.X2, "RU_i": creds.priv, "card": card}


def corrupt_sensing_device(sensor) -> dict:
    """Everything persisted on a sensing device: Y1, Y2, RSN_j and D_j."""
    c = sensor.creds
    return {"Y1": c.Y1, "Y2": c.Y2, "RSN_j": c.priv, "D_j": c.D_j}


# --- forgers --------------------------------------------------------------

def _r(kn: Knowledge, n: int) -> bytes:
    return kn.rng.randbytes(n)


def _pt(kn: Knowledge, P) -> bytes:
    return encode_point(P, kn.params)


def forge_msg1(kn, env):
    """Message 1 with an attacker-chosen Temp0 (no access to K_s)."""
    temp0 = _r(kn, DIGEST_BYTES)
    m1 = hybrid_encrypt(kn.gw_pub, [temp0, _pt(kn, kn.user_pub), _pt(kn, kn.sensor_pub), _r(kn, NONCE_BYTES),
                                    _r(kn, DIGEST_BYTES)], kn.params, kn.rng)
    return Msg1(m1=m1, temp0=temp0, t1=kn.clock.now())


def forge_msg2(kn, env):
    """Temp1 built from public values and a guessed Y2."""
    now = kn.clock.now()
    temp1 = hashlib.sha256(_pt(kn, kn.sensor_pub) + _r(kn, DIGEST_BYTES) + _pt(kn, kn.gw_pub) + ts_bytes(now)).digest()
    return Msg2(temp1=temp1, t2=now)


def forge_msg3(kn, env):
    m3 = hybrid_encrypt(kn.gw_pub, [_r(kn, DIGEST_BYTES), _r(kn, DIGEST_BYTES), _r(kn, NONCE_BYTES)], kn.params, kn.rng)
    return Msg3(m3=m3, t3=kn.clock.now())


def forge_msg4(kn, env):
    m5 = hybrid_encrypt(kn.sensor_pub, [_r(kn, DIGEST_BYTES), _r(kn, IDENTITY_BYTES), _r(kn, NONCE_BYTES)],
                        kn.params, kn.rng)
    return Msg4(m5=m5, pub_u=kn.user_pub, t4=kn.clock.now())


def forge_msg5(kn, env):
    return Msg5(m6=_r(kn, DIGEST_BYTES), m7=_r(kn, DIGEST_BYTES), t5=kn.clock.now())


def forge_msg6(kn, env):
    fields = [_r(kn, DIGEST_BYTES) for _ in range(3)] + [_r(kn, NONCE_BYTES), _r(kn, NONCE_BYTES)]
    return Msg6(m13=hybrid_encrypt(kn.user_pub, fields, kn.params, kn.rng), t6=kn.clock.now())


def forge_msg7(kn, env):
    fields = [_r(kn, DIGEST_BYTES) for _ in range(3)] + [_r(kn, NONCE_BYTES)]
    return Msg7(m14=hybrid_encrypt(kn.sensor_pub, fields, kn.params, kn.rng), t6=kn.clock.now())


def flip_ciphertext(kn, env):
    """Flip one bit inside the first encrypted field of the message."""
    msg = decode_wire(env.payload, kn.params)
    for name in ("m1", "m3", "m13", "m14", "m5"):
        ct = getattr(msg, name, None)
        if ct is not None:
            body = bytearray(ct.body)
            body[0] ^= 1
            return dataclasses.replace(msg, **{name: type(ct)(ct.ephemeral, bytes(body), ct.tag)})
    raise ValueError(f"{msg.kind} carries no ciphertext")


FORGERS = {
    "forge_msg1": forge_msg1,
    "forge_msg2": forge_msg2,
    "forge_msg3": forge_msg3,
    "forge_msg4": forge_msg4,
    "forge_msg5": forge_msg5,
    "forge_msg6": forge_msg6,
    "forge_msg7": forge_msg7,
    "flip_ciphertext": flip_ciphertext,
}


# --- scenario data --------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    rules: tuple[TapRule, ...] = ()
    expect_error: Optional[str] = None
    prior_session: bool = False
    prior_gap_ms: Optional[int] = None  # default: just past the freshness window
    user_level: int = 1
    sensor_level: int = 1
    key_recovery: Optional[str] = None  # name of a passive key-recovery attempt
    two_sessions: bool = False
    asserted: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rules"] = [{k: v for k, v in asdict(r).items() if v not in (None, 0) or k == "on"} for r in self.rules]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        d["rules"] = tuple(TapRule(**r) for r in d.get("rules", ()))
        return cls(**d)


def load_scenarios(text: str) -> list[Scenario]:
    """Parse a JSON list (or single object) of scenario records."""
    data = json.loads(text)
    return [Scenario.from_dict(d) for d in (data if isinstance(data, list) else [data])]


def dump_scenarios(scenarios) -> str:
    return json.dumps([s.to_dict() for s in scenarios], indent=2, sort_keys=True)


_WHO = {1: "gateway", 2: "sensor", 3: "gateway", 4: "sensor", 5: "gateway", 6: "user", 7: "sensor"}


def _builtin() -> list[Scenario]:
    out = []
    for k in range(1, 8):
        out.append(Scenario(
            f"replay_msg{k}",
            f"Message {k} of an earlier session is replayed in place of the fresh one; the {_WHO[k]} must refuse it.",
            rules=(TapRule(f"msg{k}", "replay"),), expect_error="StaleTimestamp", prior_session=True,
        ))
    out += [
        Scenario("user_impersonation", "Message 1 built without K_s, carrying an attacker-chosen Temp0.",
                 rules=(TapRule("msg1", "modify", "forge_msg1"),), expect_error="VerificationFailure"),
        Scenario("sensor_impersonation_msg3", "Message 3 forged without Y2 or D_j.",
                 rules=(TapRule("msg3", "modify", "forge_msg3"),), expect_error="VerificationFailure"),
        Scenario("sensor_impersonation_msg5", "Message 5 forged with random M6 and M7.",
                 rules=(TapRule("msg5", "modify", "forge_msg5"),), expect_error="VerificationFailure"),
        Scenario("gateway_impersonation_msg2", "Temp1 forged without the sensor's Y2.",
                 rules=(TapRule("msg2", "modify", "forge_msg2"),), expect_error="VerificationFailure"),
        Scenario("gateway_impersonation_msg4", "M5 forged under the sensor's public key without Y2.",
                 rules=(TapRule("msg4", "modify", "forge_msg4"),), expect_error="VerificationFailure"),
        Scenario("gateway_impersonation_msg6", "M13 forged under the user's public key without X2.",
                 rules=(TapRule("msg6", "modify", "forge_msg6"),), expect_error="VerificationFailure"),
        Scenario("gateway_impersonation_msg7", "M14 forged under the sensor's public key.",
                 rules=(TapRule("msg7", "modify", "forge_msg7"),), expect_error="VerificationFailure"),
        Scenario("ciphertext_tamper", "One bit flipped inside the sealed payload of Message 1.",
                 rules=(TapRule("msg1", "modify", "flip_ciphertext"),), expect_error="IntegrityFailure"),
        Scenario("gateway_bypass",
                 "Message 1 never reaches the gateway; the adversary talks to sensor and user directly.",
                 rules=(TapRule("msg1", "drop"), TapRule("msg1", "inject", "forge_msg2", direction="g2s"),
                        TapRule("msg1", "inject", "forge_msg6", direction="g2u")),
                 expect_error="VerificationFailure"),
        Scenario("mitm_splice", "Two concurrent sessions with their Message 3 payloads swapped.",
                 rules=(TapRule("msg3", "swap"),), expect_error="VerificationFailure", two_sessions=True),
        Scenario("stolen_user_device",
                 "User device dump plus the full trace of a past session, used to rebuild that session's key.",
                 key_recovery="stolen_user_device"),
        Scenario("sensing_device_capture",
                 "Sensing device dump plus the full trace of a past session, used to rebuild that session's key.",
                 key_recovery="sensing_device_capture"),
        Scenario("level_side_channel",
                 "Brute force of the user's level tag from a device dump without K_s.",
                 key_recovery="level_side_channel"),
        Scenario("old_gateway_secrets",
                 "The gateway's long-term secrets leak after a failure and are run by a rogue gateway. "
                 "There is no revocation, so this documents current behaviour rather than asserting rejection.",
                 key_recovery="old_gateway_secrets", asserted=False),
        Scenario("stolen_user_device_fresh_login",
                 "A user-device dump is used to open a new session by skipping the local card check. "
                 "Documents current behaviour; the device-side login gate is the only barrier.",
                 key_recovery="stolen_user_device_fresh_login", asserted=False),
    ]
    return out


SCENARIOS: dict[str, Scenario] = {s.name: s for s in _builtin()}
SUITE = tuple(n for n, s in SCENARIOS.items() if s.asserted)


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise UnknownScenario(f"no scenario named {name!r}") from None


# --- outcomes -------------------------------------------------------------

@dataclass
class AttackOutcome:
    name: str
    victim_accepted_forgery: bool
    adversary_key_guess: Optional[bytes] = None
    key_recovered: bool = False
    protocol_result: str = ""
    rejections: list[tuple[str, str, str]] = field(default_factory=list)
    expected_error: Optional[str] = None
    transcript: list[TapRecord] = field(default_factory=list)
    asserted: bool = True
    detail: str = ""

    @property
    def expected_seen(self) -> bool:
        if self.expected_error is None:
            return True
        return bool(self.rejections) and all(err == self.expected_error for _, _, err in self.rejections)

    @property
    def passed(self) -> bool:
        return not self.victim_accepted_forgery and not self.key_recovered and self.expected_seen

    def export_transcript(self) -> str:
        return json.dumps([
            {"action": r.action, "kind": r.kind, "topic": r.topic, "before": r.before.decode(),
             "after": [[t, p.decode()] for t, p in r.after]} for r in self.transcript
        ], indent=1)


# --- passive key recovery -------------------------------------------------

def _decode_trace(trace, params):
    return {decode_wire(e.payload, params).kind: decode_wire(e.payload, params) for e in trace}


def _guess_with_budget(check, width: int, budget: int, rng: random.Random) -> Optional[bytes]:
    for _ in range(budget):
        cand = rng.randbytes(width)
        if check(cand):
            return cand
    return None


def _sk(m8, X2, Y2, t6, r1, r2, rt) -> bytes:
    return hashlib.sha256(m8 + X2 + Y2 + ts_bytes(t6) + r1 + r2 + rt).digest()


def recover_from_user_dump(dump: dict, trace, params, rng, budget: int = 100_000):
    """Decrypt M13 with RU_i; r_t is only checkable against Temp0 by guessing."""
    msgs = _decode_trace(trace, params)
    m8, m9, _m11, r1, r2 = hybrid_decrypt(msgs["msg6"].m13, dump["RU_i"], params)
    X2, t1 = dump["X2"], msgs["msg1"].t1
    rt = _guess_with_budget(lambda c: hashlib.sha256(X2 + ts_bytes(t1) + c).digest() == msgs["msg1"].temp0,
                            NONCE_BYTES, budget, rng)
    return _sk(m8, X2, m9, msgs["msg6"].t6, r1, r2, rt if rt is not None else rng.randbytes(NONCE_BYTES))


def recover_from_sensor_dump(dump: dict, trace, params, sensor_pub, gw_pub, rng, budget: int = 100_000):
    """Decrypt M5 and M14 with RSN_j; r_2 is only checkable against M6 by guessing."""
    msgs = _decode_trace(trace, params)
    _m4, _sid, r1 = hybrid_decrypt(msgs["msg4"].m5, dump["RSN_j"], params)
    m8, m10, _m12, rt = hybrid_decrypt(msgs["msg7"].m14, dump["RSN_j"], params)
    pre = encode_point(sensor_pub, params) + encode_point(gw_pub, params) + encode_point(msgs["msg4"].pub_u, params)
    t5 = ts_bytes(msgs["msg5"].t5)
    r2 = _guess_with_budget(lambda c: hashlib.sha256(pre + c + t5).digest() == msgs["msg5"].m6,
                            NONCE_BYTES, budget, rng)
    return _sk(m8, m10, dump["Y2"], msgs["msg7"].t6, r1, r2 if r2 is not None else rng.randbytes(NONCE_BYTES), rt)


def level_guess_attack(tag: bytes, ident: bytes, l_max: int, *, budget: int = 1_000_000,
                       rng: Optional[random.Random] = None, master: Optional[bytes] = None) -> AttackOutcome:
    """Try to confirm a level tag H(level || g || id) by guessing g.

    Without K_s every guess is a fresh random secret, so no candidate
    verifies within any feasible budget. Passing ``master`` is the control
    experiment in which the tag opens on the first sweep.
    """
    rng = rng if rng is not None else random.Random()
    found = None
    tries = 0
    levels = [lv.to_bytes(LEVEL_BYTES, "big") for lv in range(1, l_max + 1)]
    while tries < budget and found is None:
        g = master if master is not None else rng.randbytes(DIGEST_BYTES)
        for lv, lb in enumerate(levels, 1):
            tries += 1
            if hashlib.sha256(lb + g + ident).digest() == tag:
                found = lv
                break
            if tries >= budget:
                break
        if master is not None and found is None:
            break
    return AttackOutcome(
        name="level_side_channel" if master is None else "level_side_channel_control",
        victim_accepted_forgery=False,
        key_recovered=found is not None,
        protocol_result="level recovered" if found is not None else "level unconfirmed",
        detail=f"{tries} guesses" + (f", level {found}" if found is not None else ""),
        asserted=master is None,
    )


# --- driver ---------------------------------------------------------------

def _knowledge(dep: Deployment, clock, rng, i=0, j=0) -> Knowledge:
    return Knowledge(dep.gateway.params, dep.gateway.pub, dep.users[i].creds.pub, dep.sensors[j].creds.pub,
                     clock, rng)


def _score(name, scenario, bus, actors, tap, outcome_status) -> AttackOutcome:
    forged = {e.seq for e in bus.log if e.sender == ADVERSARY}
    receipts = [r for a in actors for r in a.receipts if r.seq in forged]
    accepted = any(r.accepted for r in receipts)
    rejections = [(r.role.value, r.kind, r.error) for r in sorted(receipts, key=lambda r: r.seq) if not r.accepted]
    return AttackOutcome(
        name=name,
        victim_accepted_forgery=accepted,
        protocol_result=outcome_status,
        rejections=rejections,
        expected_error=scenario.expect_error,
        transcript=tap.transcript if tap is not None else [],
        asserted=scenario.asserted,
    )


def run_attack(scenario, *, params: CurveParams = P256, seed: Optional[int] = None,
               rng: Optional[random.Random] = None, level_budget: int = 1_000_000) -> AttackOutcome:
    """Execute one scenario against a fresh honest deployment."""
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    rng = rng if rng is not None else random.Random(seed)
    adv_rng = random.Random(rng.getrandbits(64))
    n_pairs = 2 if scenario.two_sessions else 1
    dep = Deployment.create([scenario.user_level] * n_pairs, [scenario.sensor_level] * n_pairs, params=params, rng=rng)
    clock = VirtualClock()
    bus = MessageBus()
    gw = dep.gateway_actor()
    users = [dep.user_actor(k) for k in range(n_pairs)]
    sensors = [dep.sensor_actor(k) for k in range(n_pairs)]
    kn = _knowledge(dep, clock, adv_rng)

    if scenario.key_recovery is not None:
        return _key_recovery(scenario, dep, users[0], gw, sensors[0], bus, clock, kn, adv_rng, level_budget)

    if scenario.prior_session:
        prior = run_session(users[0], gw, sensors[0], bus, clock)
        kn.prior = list(prior.trace)
        gap = scenario.prior_gap_ms if scenario.prior_gap_ms is not None else dep.gateway.delta_t + 1
        clock.advance(gap)

    tap = ChannelTap(scenario.rules, kn, FORGERS)
    bus.tap = tap
    actors = [users[0], gw, sensors[0]]
    if scenario.two_sessions:
        for a in users + sensors + [gw]:
            a.attach(bus)
        for u, s in zip(users, sensors):
            _, out = u.start(s.creds.pub, clock.now())
            publish_all(bus, out, u.role, clock.now(), params)
        actors = users + sensors + [gw]
        drive(actors, bus, clock)
        status = ",".join(sorted({"agreed" if u.keys else "rejected" for u in users}))
    else:
        status = run_session(users[0], gw, sensors[0], bus, clock).status
    bus.tap = None
    return _score(scenario.name, scenario, bus, actors, tap, status)


def _key_recovery(scenario, dep, user, gw, sensor, bus, clock, kn, adv_rng, level_budget) -> AttackOutcome:
    params = dep.gateway.params
    name = scenario.key_recovery
    if name == "level_side_channel":
        dump = corrupt_user_device(dep.users[0])
        return level_guess_attack(dump["card"].B_i, dep.users[0].uid.value, dep.gateway.l_max,
                                  budget=level_budget, rng=adv_rng)

    if name == "old_gateway_secrets":
        # a rogue gateway runs on a copy of the leaked state, the real one is offline
        rogue = GatewayActor(copy.deepcopy(dep.gateway), adv_rng)
        out = run_session(user, rogue, sensor, bus, clock)
        return AttackOutcome(name=scenario.name, victim_accepted_forgery=out.agreed,
                             protocol_result=out.status, asserted=False,
                             detail="user and sensor accept a gateway running leaked long-term secrets"
                             if out.agreed else "rogue gateway rejected")

    if name == "stolen_user_device_fresh_login":
        # the password is unknown, so the card check is skipped and Message 1 built from the dump
        from ..protocol import exchange
        from ..runtime.actors import session_id
        dump = corrupt_user_device(dep.users[0])
        for a in (user, gw, sensor):
            a.attach(bus)
        msg, ctx = exchange.build_msg1(dep.users[0].creds, dump["card"], sensor.creds.pub, dep.gateway.pub,
                                       clock.now(), adv_rng, uid=dep.users[0].uid)
        sid = session_id(dep.users[0].creds.pub, sensor.creds.pub, clock.now(), params)
        user.sessions[sid] = ctx
        publish_all(bus, [(user.scheme.u2g(sid), msg)], user.role, clock.now(), params)
        drive([user, gw, sensor], bus, clock)
        ok = sid in user.keys and user.keys.get(sid) == sensor.keys.get(sid)
        return AttackOutcome(name=scenario.name, victim_accepted_forgery=ok,
                             protocol_result="agreed" if ok else "rejected", asserted=False,
                             detail="the dump alone suffices once the device-side password gate is bypassed"
                             if ok else "dump alone insufficient")

    # passive: one honest session captured in full, then the dump is taken
    out = run_session(user, gw, sensor, bus, clock)
    true_key = out.user_key
    if name == "stolen_user_device":
        guess = recover_from_user_dump(corrupt_user_device(dep.users[0]), out.trace, params, adv_rng)
    elif name == "sensing_device_capture":
        guess = recover_from_sensor_dump(corrupt_sensing_device(dep.sensors[0]), out.trace, params,
                                         dep.sensors[0].creds.pub, dep.gateway.pub, adv_rng)
    else:
        raise UnknownScenario(name)
    return AttackOutcome(name=scenario.name, victim_accepted_forgery=False, adversary_key_guess=guess,
                         key_recovered=guess == true_key, protocol_result=out.status)


def run_suite(names=None, **kw) -> list[AttackOutcome]:
    names = SUITE if names is None else names
    return [run_attack(get_scenario(n), **kw) for n in names]
