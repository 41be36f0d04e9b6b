"""Login-time key agreement: one pure step function per message.

Every handler takes the receiving party's long-lived state, its per-session
context, the incoming message and the receiver's clock reading ``now``. A
handler either returns the next message or raises a ProtocolError/CryptoError;
on failure the session context is marked aborted and refuses further input.

Hash inputs follow the initialisation-time definitions throughout:
X2 = H(UID || PUB_U || K_s) and Y2 = H(SID || PUB_S || K_s), and both ends
derive the session key as H(M8 || X2 || Y2 || T6 || r1 || r2 || rt).
"""
from __future__ import annotations

import contextlib
import random
import time
from typing import Iterator

from ..crypto.curve import Point, decode_point
from ..crypto.primitives import (
    DIGEST_BYTES,
    NONCE_BYTES,
    H,
    hybrid_decrypt,
    hybrid_encrypt,
    random_nonce,
)
from ..errors import (
    CryptoError,
    IdentityMismatch,
    InvalidPoint,
    ProtocolError,
    SessionClosed,
    UnknownSensor,
    UnknownUser,
    VerificationFailure,
)
from .access import access_check, check_freshness
from .setup import login_verify
from .types import (
    DEFAULT_DELTA_T_MS,
    IDENTITY_BYTES,
    GatewaySession,
    GatewayState,
    Msg1,
    Msg2,
    Msg3,
    Msg4,
    Msg5,
    Msg6,
    Msg7,
    Phase,
    Role,
    SensorCredentials,
    SensorSession,
    SessionContext,
    SmartCard,
    UserCredentials,
    UserSession,
    pt,
    ts_bytes,
)


@contextlib.contextmanager
def _step(ctx: SessionContext, expect: Phase, then: Phase) -> Iterator[None]:
    if ctx.closed:
        raise SessionClosed(f"{ctx.role.value} session is {ctx.phase.name.lower()}")
    try:
        if ctx.phase is not expect:
            raise VerificationFailure(f"message out of order: session awaits {ctx.phase.name}")
        yield
    except (ProtocolError, CryptoError) as exc:
        ctx.phase = Phase.ABORTED
        ctx.error = type(exc).__name__
        raise
    ctx.phase = then


def _fields(payload: list[bytes], widths: tuple[int, ...]) -> list[bytes]:
    if len(payload) != len(widths) or any(len(f) != w for f, w in zip(payload, widths)):
        raise VerificationFailure("decrypted payload has the wrong shape")
    return payload


def _point(data: bytes, params) -> Point:
    try:
        return decode_point(data, params)
    except InvalidPoint:
        raise VerificationFailure("payload carries an invalid point") from None


# --- user -> gateway ------------------------------------------------------

def build_msg1(
    user: UserCredentials,
    card: SmartCard,
    target_pub: Point,
    gw_pub: Point,
    now: int,
    rng: random.Random,
    *,
    uid=None,
    delta_t: int = DEFAULT_DELTA_T_MS,
) -> tuple[Msg1, UserSession]:
    """First message after a successful smart-card login."""
    params = user.params
    r_t = random_nonce(rng)
    temp0 = H(user.X2, ts_bytes(now), r_t)
    m1 = hybrid_encrypt(
        gw_pub,
        [temp0, pt(user.pub, params), pt(target_pub, params), r_t, card.B_i],
        params,
        rng,
    )
    ctx = UserSession(
        role=Role.USER,
        phase=Phase.AWAIT_MSG6,
        delta_t=delta_t,
        uid=uid if uid is not None else user.uid,
        gw_pub=gw_pub,
        target_pub=target_pub,
        r_t=r_t,
        t1=now,
    )
    return Msg1(m1=m1, temp0=temp0, t1=now), ctx


def login_and_build_msg1(
    user: UserCredentials,
    card: SmartCard,
    uid,
    password: bytes,
    target_pub: Point,
    gw_pub: Point,
    now: int,
    rng: random.Random,
    *,
    delta_t: int = DEFAULT_DELTA_T_MS,
) -> tuple[Msg1, UserSession]:
    login_verify(uid, password, card)
    return build_msg1(user, card, target_pub, gw_pub, now, rng, uid=uid, delta_t=delta_t)


def gw_handle_msg1(gw: GatewayState, msg: Msg1, now: int) -> tuple[Msg2, GatewaySession]:
    params = gw.params
    ctx = GatewaySession(role=Role.GATEWAY, phase=Phase.AWAIT_MSG1, delta_t=gw.delta_t)
    with _step(ctx, Phase.AWAIT_MSG1, Phase.AWAIT_MSG3):
        check_freshness(msg.t1, now, gw.delta_t)
        ctx.seen.append(msg.t1)
        p = params.point_bytes
        temp0, pub_u_b, pub_s_b, r_t, B_i = _fields(
            hybrid_decrypt(msg.m1, gw.priv, params),
            (DIGEST_BYTES, p, p, NONCE_BYTES, DIGEST_BYTES),
        )
        if temp0 != msg.temp0:
            raise VerificationFailure("clear and sealed copies of Temp0 differ")
        pub_u, pub_s = _point(pub_u_b, params), _point(pub_s_b, params)
        uid = gw.users.get(pub_u)
        if uid is None:
            raise UnknownUser("no user enrolled under that public key")
        X2 = H(uid.value, pub_u_b, gw.master)
        if H(X2, ts_bytes(msg.t1), r_t) != temp0:
            raise VerificationFailure("Temp0 does not verify")
        sid = gw.sensors.get(pub_s)
        if sid is None:
            raise UnknownSensor("no sensor enrolled under that public key")
        Y2 = H(sid.value, pub_s_b, gw.master)
        t2 = now
        temp1 = H(pub_s_b, Y2, pt(gw.pub, params), ts_bytes(t2))
        ctx.uid, ctx.sid, ctx.pub_u, ctx.pub_s = uid, sid, pub_u, pub_s
        ctx.r_t, ctx.B_i, ctx.X2, ctx.Y2, ctx.t1 = r_t, B_i, X2, Y2, msg.t1
    return Msg2(temp1=temp1, t2=t2), ctx


# --- gateway <-> sensor ---------------------------------------------------

def sensor_handle_msg2(
    sensor: SensorCredentials,
    gw_pub: Point,
    msg: Msg2,
    now: int,
    rng: random.Random,
    *,
    delta_t: int = DEFAULT_DELTA_T_MS,
) -> tuple[Msg3, SensorSession]:
    params = sensor.params
    ctx = SensorSession(role=Role.SENSOR, phase=Phase.AWAIT_MSG2, delta_t=delta_t, gw_pub=gw_pub)
    with _step(ctx, Phase.AWAIT_MSG2, Phase.AWAIT_MSG4):
        check_freshness(msg.t2, now, delta_t)
        ctx.seen.append(msg.t2)
        pub_s_b = pt(sensor.pub, params)
        if H(pub_s_b, sensor.Y2, pt(gw_pub, params), ts_bytes(msg.t2)) != msg.temp1:
            raise VerificationFailure("Temp1 does not verify")
        t3 = now
        m2 = H(sensor.Y2, ts_bytes(t3), pub_s_b)
        # r2 is drawn here and sealed for the gateway, which needs it for M13
        ctx.r_2 = random_nonce(rng)
        m3 = hybrid_encrypt(gw_pub, [m2, sensor.D_j, ctx.r_2], params, rng)
    return Msg3(m3=m3, t3=t3), ctx


def gw_handle_msg3(gw: GatewayState, ctx: GatewaySession, msg: Msg3, now: int, rng: random.Random) -> Msg4:
    """Authenticate the sensor, recover both levels and apply the access rule.

    Raises AccessDenied when the user level does not reach the sensor level;
    the runtime then sends the 0 signal to both user and sensor.
    """
    params = gw.params
    with _step(ctx, Phase.AWAIT_MSG3, Phase.AWAIT_MSG5):
        check_freshness(msg.t3, now, gw.delta_t)
        ctx.seen.append(msg.t3)
        m2, D_j, r_2 = _fields(
            hybrid_decrypt(msg.m3, gw.priv, params),
            (DIGEST_BYTES, DIGEST_BYTES, NONCE_BYTES),
        )
        started = time.perf_counter_ns()
        pub_s_b = pt(ctx.pub_s, params)
        try:
            if H(ctx.Y2, ts_bytes(msg.t3), pub_s_b) != m2:
                raise VerificationFailure("M2 does not verify")
            access_check(ctx.B_i, ctx.uid.value, D_j, ctx.sid.value, gw.master, gw.l_max)
        finally:
            ctx.verify_ns = time.perf_counter_ns() - started
        ctx.r_2 = r_2
        ctx.r_1 = random_nonce(rng)
        t4 = now
        pub_u_b = pt(ctx.pub_u, params)
        m4 = H(pub_u_b, ts_bytes(t4), pt(gw.pub, params), ctx.r_1, H(ctx.Y2))
        m5 = hybrid_encrypt(ctx.pub_s, [m4, ctx.sid.value, ctx.r_1], params, rng)
    return Msg4(m5=m5, pub_u=ctx.pub_u, t4=t4)


def sensor_handle_msg4(
    sensor: SensorCredentials, ctx: SensorSession, msg: Msg4, now: int, rng: random.Random
) -> Msg5:
    params = sensor.params
    with _step(ctx, Phase.AWAIT_MSG4, Phase.AWAIT_MSG7):
        check_freshness(msg.t4, now, ctx.delta_t)
        ctx.seen.append(msg.t4)
        m4, sid, r_1 = _fields(
            hybrid_decrypt(msg.m5, sensor.priv, params),
            (DIGEST_BYTES, IDENTITY_BYTES, NONCE_BYTES),
        )
        if not params.contains(msg.pub_u) or msg.pub_u.is_infinity:
            raise VerificationFailure("Message 4 carries an invalid user key")
        pub_u_b = pt(msg.pub_u, params)
        gw_b = pt(ctx.gw_pub, params)
        if H(pub_u_b, ts_bytes(msg.t4), gw_b, r_1, H(sensor.Y2)) != m4:
            raise VerificationFailure("M4 does not verify")
        if sid != sensor.sid.value:
            raise IdentityMismatch("M5 was issued for another sensor")
        t5 = now
        pub_s_b = pt(sensor.pub, params)
        m6 = H(pub_s_b, gw_b, pub_u_b, ctx.r_2, ts_bytes(t5))
        m7 = H(r_1, m6, sid, pub_s_b, ts_bytes(t5))
        ctx.pub_u, ctx.r_1 = msg.pub_u, r_1
    return Msg5(m6=m6, m7=m7, t5=t5)


def gw_handle_msg5(
    gw: GatewayState, ctx: GatewaySession, msg: Msg5, now: int, rng: random.Random
) -> tuple[Msg6, Msg7]:
    params = gw.params
    with _step(ctx, Phase.AWAIT_MSG5, Phase.DONE):
        check_freshness(msg.t5, now, gw.delta_t)
        ctx.seen.append(msg.t5)
        pub_s_b = pt(ctx.pub_s, params)
        if H(ctx.r_1, msg.m6, ctx.sid.value, pub_s_b, ts_bytes(msg.t5)) != msg.m7:
            raise VerificationFailure("M7 does not verify")
        r_3 = random_nonce(rng)
        t6 = now
        ts6 = ts_bytes(t6)
        gw_b = pt(gw.pub, params)
        pub_u_b = pt(ctx.pub_u, params)
        m8 = H(r_3, msg.m6, msg.m7, ts6)
        m9, m10 = ctx.Y2, ctx.X2
        m11 = H(pub_u_b, ctx.uid.value, gw_b, ts6)
        m12 = H(gw_b, ctx.sid.value, pub_s_b, ts6)
        m13 = hybrid_encrypt(ctx.pub_u, [m8, m9, m11, ctx.r_1, ctx.r_2], params, rng)
        m14 = hybrid_encrypt(ctx.pub_s, [m8, m10, m12, ctx.r_t], params, rng)
    return Msg6(m13=m13, t6=t6), Msg7(m14=m14, t6=t6)


# --- key derivation at the endpoints --------------------------------------

def session_key(m8: bytes, X2: bytes, Y2: bytes, t6: int, r_1: bytes, r_2: bytes, r_t: bytes) -> bytes:
    return H(m8, X2, Y2, ts_bytes(t6), r_1, r_2, r_t)


def user_handle_msg6(user: UserCredentials, card: SmartCard, ctx: UserSession, msg: Msg6, now: int) -> bytes:
    params = user.params
    with _step(ctx, Phase.AWAIT_MSG6, Phase.DONE):
        check_freshness(msg.t6, now, ctx.delta_t)
        ctx.seen.append(msg.t6)
        m8, m9, m11, r_1, r_2 = _fields(
            hybrid_decrypt(msg.m13, user.priv, params),
            (DIGEST_BYTES, DIGEST_BYTES, DIGEST_BYTES, NONCE_BYTES, NONCE_BYTES),
        )
        if H(pt(user.pub, params), ctx.uid.value, pt(ctx.gw_pub, params), ts_bytes(msg.t6)) != m11:
            raise VerificationFailure("M11 does not verify")
        ctx.key = session_key(m8, user.X2, m9, msg.t6, r_1, r_2, ctx.r_t)
    return ctx.key


def sensor_handle_msg7(sensor: SensorCredentials, ctx: SensorSession, msg: Msg7, now: int) -> bytes:
    params = sensor.params
    with _step(ctx, Phase.AWAIT_MSG7, Phase.DONE):
        check_freshness(msg.t6, now, ctx.delta_t)
        ctx.seen.append(msg.t6)
        m8, m10, m12, r_t = _fields(
            hybrid_decrypt(msg.m14, sensor.priv, params),
            (DIGEST_BYTES, DIGEST_BYTES, DIGEST_BYTES, NONCE_BYTES),
        )
        if H(pt(ctx.gw_pub, params), sensor.sid.value, pt(sensor.pub, params), ts_bytes(msg.t6)) != m12:
            raise VerificationFailure("M12 does not verify")
        ctx.key = session_key(m8, m10, sensor.Y2, msg.t6, ctx.r_1, ctx.r_2, r_t)
    return ctx.key
