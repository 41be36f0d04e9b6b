"""Persistent, passphrase-encrypted gateway registry and smart-card files.

The registry file is a JSON envelope whose ``ciphertext`` holds the gateway
state sealed with AES-256-GCM under a scrypt-derived key. A separate HMAC
check value lets a wrong passphrase be told apart from a damaged file.
"""
from __future__ import annotations

import hashlib
import hmac
import json
import os
import random
from pathlib import Path
from typing import Any, Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..crypto.curve import PRESETS, CurveParams, Point, decode_point, encode_point, scalar_mult
from ..errors import CorruptStore, InvalidPoint, WrongPassphrase
from ..protocol.types import (
    GatewayState,
    Identity,
    Role,
    SensorCredentials,
    SmartCard,
    UserCredentials,
)

FORMAT = "lda2iot-registry"
VERSION = 1
SCRYPT = {"n": 1 << 14, "r": 8, "p": 1}


# --- sealing --------------------------------------------------------------

def _derive(passphrase: str, salt: bytes, kdf: dict) -> tuple[bytes, bytes]:
    km = hashlib.scrypt(passphrase.encode(), salt=salt, n=kdf["n"], r=kdf["r"], p=kdf["p"], dklen=64)
    return km[:32], km[32:]


def _canon(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _verifier(check_key: bytes) -> str:
    # depends on passphrase and kdf only, so header edits show up as corruption
    return hmac.new(check_key, b"passphrase check", hashlib.sha256).hexdigest()


def seal(payload: dict, passphrase: str, rng: Optional[random.Random] = None) -> bytes:
    """Encrypt a JSON-able dict. A seeded ``rng`` makes the output reproducible."""
    draw = (lambda n: rng.randbytes(n)) if rng is not None else os.urandom
    salt, nonce = draw(16), draw(12)
    header = {"format": FORMAT, "version": VERSION, "kdf": dict(SCRYPT, name="scrypt", salt=salt.hex()),
              "nonce": nonce.hex()}
    enc_key, check_key = _derive(passphrase, salt, SCRYPT)
    header["check"] = _verifier(check_key)
    body = AESGCM(enc_key).encrypt(nonce, _canon(payload), _canon(header))
    return _canon(dict(header, ciphertext=body.hex())) + b"\n"


def unseal(blob: bytes, passphrase: str) -> dict:
    try:
        doc = json.loads(blob)
        body = bytes.fromhex(doc.pop("ciphertext"))
        check = doc.pop("check")
        if doc.get("format") != FORMAT or doc.get("version") != VERSION:
            raise CorruptStore("unrecognised registry format or version")
        kdf = doc["kdf"]
        salt, nonce = bytes.fromhex(kdf["salt"]), bytes.fromhex(doc["nonce"])
        params = {k: int(kdf[k]) for k in ("n", "r", "p")}
    except CorruptStore:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CorruptStore(f"registry envelope unreadable: {exc}") from None
    enc_key, check_key = _derive(passphrase, salt, params)
    if not hmac.compare_digest(_verifier(check_key), str(check)):
        raise WrongPassphrase("passphrase does not open this registry")
    header = dict(doc, check=check)
    try:
        plain = AESGCM(enc_key).decrypt(nonce, body, _canon(header))
        return json.loads(plain)
    except (InvalidTag, ValueError) as exc:
        raise CorruptStore("registry contents fail integrity check") from exc


# --- record encodings -----------------------------------------------------

def curve_record(params: CurveParams) -> Any:
    if PRESETS.get(params.name) == params:
        return params.name
    return {k: getattr(params, k) for k in ("name", "p", "a", "b", "gx", "gy", "n")}


def curve_from_record(rec: Any) -> CurveParams:
    if isinstance(rec, str):
        if rec not in PRESETS:
            raise CorruptStore(f"unknown curve {rec!r}")
        return PRESETS[rec]
    return CurveParams(**rec)


def _pt(P: Point, params) -> str:
    return encode_point(P, params).hex()


def _unpt(h: str, params) -> Point:
    try:
        return decode_point(bytes.fromhex(h), params)
    except (InvalidPoint, ValueError) as exc:
        raise CorruptStore(f"stored point invalid: {exc}") from None


def state_to_record(gw: GatewayState) -> dict:
    p = gw.params
    with gw._lock:
        return {
            "curve": curve_record(p),
            "priv": format(gw.priv, "x"),
            "pub": _pt(gw.pub, p),
            "master": gw.master.hex(),
            "delta_t": gw.delta_t,
            "l_max": gw.l_max,
            "users": [[_pt(k, p), v.hex()] for k, v in gw.users.items()],
            "sensors": [[_pt(k, p), v.hex()] for k, v in gw.sensors.items()],
        }


def state_from_record(rec: dict) -> GatewayState:
    try:
        p = curve_from_record(rec["curve"])
        gw = GatewayState(
            params=p,
            priv=int(rec["priv"], 16),
            pub=_unpt(rec["pub"], p),
            master=bytes.fromhex(rec["master"]),
            users={_unpt(k, p): Identity(bytes.fromhex(v), Role.USER) for k, v in rec["users"]},
            sensors={_unpt(k, p): Identity(bytes.fromhex(v), Role.SENSOR) for k, v in rec["sensors"]},
            delta_t=int(rec["delta_t"]),
            l_max=int(rec["l_max"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptStore(f"gateway record unreadable: {exc}") from None
    if scalar_mult(gw.priv, p.generator, p) != gw.pub:
        raise CorruptStore("gateway key pair inconsistent")
    return gw


def user_to_record(u: UserCredentials) -> dict:
    p = u.params
    return {"X1": u.X1.hex(), "X2": u.X2.hex(), "priv": format(u.priv, "x"), "pub": _pt(u.pub, p),
            "uid": u.uid.hex(), "curve": curve_record(p)}


def user_from_record(rec: dict) -> UserCredentials:
    p = curve_from_record(rec["curve"])
    return UserCredentials(X1=bytes.fromhex(rec["X1"]), X2=bytes.fromhex(rec["X2"]), priv=int(rec["priv"], 16),
                           pub=_unpt(rec["pub"], p), uid=Identity(bytes.fromhex(rec["uid"]), Role.USER), params=p)


def sensor_to_record(s: SensorCredentials) -> dict:
    p = s.params
    return {"Y1": s.Y1.hex(), "Y2": s.Y2.hex(), "priv": format(s.priv, "x"), "pub": _pt(s.pub, p),
            "sid": s.sid.hex(), "D_j": s.D_j.hex(), "curve": curve_record(p)}


def sensor_from_record(rec: dict) -> SensorCredentials:
    p = curve_from_record(rec["curve"])
    return SensorCredentials(Y1=bytes.fromhex(rec["Y1"]), Y2=bytes.fromhex(rec["Y2"]), priv=int(rec["priv"], 16),
                             pub=_unpt(rec["pub"], p), sid=Identity(bytes.fromhex(rec["sid"]), Role.SENSOR),
                             D_j=bytes.fromhex(rec["D_j"]), params=p)


# --- registry files -------------------------------------------------------

def registry_save(path, state: GatewayState, passphrase: str, *, rng: Optional[random.Random] = None,
                  extra: Optional[dict] = None) -> None:
    """Write the gateway state (and optional extra records) sealed under ``passphrase``."""
    payload = {"gateway": state_to_record(state)}
    if extra:
        payload["extra"] = extra
    Path(path).write_bytes(seal(payload, passphrase, rng))


def registry_load_all(path, passphrase: str) -> tuple[GatewayState, dict]:
    payload = unseal(Path(path).read_bytes(), passphrase)
    if "gateway" not in payload:
        raise CorruptStore("registry has no gateway record")
    return state_from_record(payload["gateway"]), payload.get("extra", {})


def registry_load(path, passphrase: str) -> GatewayState:
    return registry_load_all(path, passphrase)[0]


# --- smart-card files -----------------------------------------------------

CARD_MAGIC = "lda2iot-smartcard"
CARD_VERSION = 1
_CARD_FIELDS = ("reg_star", "L1", "L2", "B_i")


def card_dumps(card: SmartCard) -> str:
    lines = [f"{CARD_MAGIC} v{CARD_VERSION}", f"curve {card.curve_name}"]
    lines += [f"{name} {getattr(card, name).hex()}" for name in _CARD_FIELDS]
    return "\n".join(lines) + "\n"


def card_loads(text: str) -> SmartCard:
    lines = text.strip().splitlines()
    if not lines or lines[0] != f"{CARD_MAGIC} v{CARD_VERSION}":
        raise CorruptStore("not a smart-card file of a supported version")
    fields = {}
    for line in lines[1:]:
        key, _, value = line.partition(" ")
        if key in fields:
            raise CorruptStore(f"duplicate card field {key}")
        fields[key] = value.strip()
    if set(fields) != {"curve", *_CARD_FIELDS}:
        raise CorruptStore(f"card fields {sorted(fields)} incomplete")
    try:
        return SmartCard(curve_name=fields["curve"], **{k: bytes.fromhex(fields[k]) for k in _CARD_FIELDS})
    except ValueError as exc:
        raise CorruptStore(f"card field invalid: {exc}") from None


def card_save(path, card: SmartCard) -> None:
    Path(path).write_text(card_dumps(card))


def card_load(path) -> SmartCard:
    return card_loads(Path(path).read_text())
