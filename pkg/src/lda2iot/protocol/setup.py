"""Offline initialisation, user registration and smart-card login."""
from __future__ import annotations

import random

from ..crypto.curve import CurveParams
from ..crypto.primitives import NONCE_BYTES, H, keygen, pad_to, random_nonce, xor_bytes
from ..errors import BadCredentials, EmptyPassword, UnknownUser
from .access import level_tag
from .types import (
    DEFAULT_DELTA_T_MS,
    DEFAULT_L_MAX,
    IDENTITY_BYTES,
    CardDraft,
    GatewayState,
    Identity,
    RegistrationHeld,
    RegistrationRequest,
    Role,
    SensorCredentials,
    SmartCard,
    UserCredentials,
    check_level,
    pt,
)

MASTER_BYTES = 32


def gateway_init(
    params: CurveParams,
    rng: random.Random,
    *,
    delta_t: int = DEFAULT_DELTA_T_MS,
    l_max: int = DEFAULT_L_MAX,
) -> GatewayState:
    priv, pub = keygen(params, rng)
    return GatewayState(
        params=params,
        priv=priv,
        pub=pub,
        master=rng.randbytes(MASTER_BYTES),
        delta_t=delta_t,
        l_max=l_max,
    )


def _fresh_identity(gw: GatewayState, role: Role, rng: random.Random) -> Identity:
    taken = {i.value for i in gw.users.values()} | {i.value for i in gw.sensors.values()}
    while True:
        value = rng.randbytes(IDENTITY_BYTES)
        if value not in taken:
            return Identity(value, role)


def user_init(gw: GatewayState, rng: random.Random) -> UserCredentials:
    params = gw.params
    with gw._lock:
        priv, pub = keygen(params, rng)
        uid = _fresh_identity(gw, Role.USER, rng)
        X1 = H(priv.to_bytes(params.coord_bytes, "big"), uid.value, gw.master)
        X2 = H(uid.value, pt(pub, params), gw.master)
        gw.users[pub] = uid
    return UserCredentials(X1=X1, X2=X2, priv=priv, pub=pub, uid=uid, params=params)


def sensor_init(gw: GatewayState, level: int, rng: random.Random) -> SensorCredentials:
    check_level(level, gw.l_max)
    params = gw.params
    with gw._lock:
        priv, pub = keygen(params, rng)
        sid = _fresh_identity(gw, Role.SENSOR, rng)
        Y1 = H(priv.to_bytes(params.coord_bytes, "big"), sid.value, gw.master)
        Y2 = H(sid.value, pt(pub, params), gw.master)
        D_j = level_tag(level, gw.master, sid.value)
        gw.sensors[pub] = sid
    return SensorCredentials(Y1=Y1, Y2=Y2, priv=priv, pub=pub, sid=sid, D_j=D_j, params=params)


# --- registration ---------------------------------------------------------

def register_user_begin(
    password: bytes, uid: Identity, rng: random.Random
) -> tuple[RegistrationRequest, RegistrationHeld]:
    if not password:
        raise EmptyPassword("password must be non-empty")
    R_a = random_nonce(rng)
    R_b = random_nonce(rng)
    TPW = xor_bytes(H(password, R_a), pad_to(R_b))
    return RegistrationRequest(uid=uid.value), RegistrationHeld(R_a=R_a, R_b=R_b, TPW=TPW)


def register_user_gateway(gw: GatewayState, uid: Identity, level: int) -> CardDraft:
    check_level(level, gw.l_max)
    if uid.value not in {i.value for i in gw.users.values()}:
        raise UnknownUser("identity was never initialised by this gateway")
    return CardDraft(
        reg=H(uid.value, gw.master),
        B_i=level_tag(level, gw.master, uid.value),
        curve_name=gw.params.name,
    )


def register_user_finalize(
    draft: CardDraft, held: RegistrationHeld, uid: Identity, password: bytes
) -> SmartCard:
    h_uid = H(uid.value)
    TPW_prime = xor_bytes(held.TPW, pad_to(held.R_b))
    return SmartCard(
        reg_star=xor_bytes(draft.reg, pad_to(held.R_b)),
        L1=xor_bytes(h_uid, pad_to(held.R_a)),
        L2=H(uid.value, TPW_prime),
        B_i=draft.B_i,
        curve_name=draft.curve_name,
    )


def register_user(
    gw: GatewayState, uid: Identity, password: bytes, level: int, rng: random.Random
) -> SmartCard:
    """All three registration steps in one call (secure channel assumed)."""
    request, held = register_user_begin(password, uid, rng)
    draft = register_user_gateway(gw, Identity(request.uid, Role.USER), level)
    return register_user_finalize(draft, held, uid, password)


def login_verify(uid: Identity, password: bytes, card: SmartCard) -> None:
    """Smart-card reader check. Raises BadCredentials on mismatch."""
    R_a = xor_bytes(card.L1, H(uid.value))[:NONCE_BYTES]
    TPW = H(password, R_a)
    if H(uid.value, TPW) != card.L2:
        raise BadCredentials("identity or password rejected by the smart card")
