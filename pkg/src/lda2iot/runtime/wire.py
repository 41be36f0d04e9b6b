"""Canonical JSON wire format.

One JSON object per message: sorted keys, no whitespace, a ``type`` tag,
binary values as lowercase hex. Equal messages always encode to identical
bytes. Field widths are enforced on decode; curve membership of points is
left to the receiving handler so that tampering surfaces as a protocol
rejection rather than a parse error.
"""
from __future__ import annotations

import binascii
import json
from typing import Any

from ..crypto.curve import INFINITY, P256, CurveParams, Point, encode_point
from ..crypto.primitives import DIGEST_BYTES, TAG_BYTES, PayloadCiphertext
from ..errors import FieldWidthMismatch, MalformedWire, UnknownMessageTag
from ..protocol.types import (
    IDENTITY_BYTES,
    Abort,
    Msg1,
    Msg2,
    Msg3,
    Msg4,
    Msg5,
    Msg6,
    Msg7,
    RegistrationRequest,
    WireMessage,
)

# field name -> kind, per message tag
_LAYOUT: dict[str, tuple[type, dict[str, str]]] = {
    "msg1": (Msg1, {"m1": "ct", "temp0": "digest", "t1": "ts"}),
    "msg2": (Msg2, {"temp1": "digest", "t2": "ts"}),
    "msg3": (Msg3, {"m3": "ct", "t3": "ts"}),
    "msg4": (Msg4, {"m5": "ct", "pub_u": "point", "t4": "ts"}),
    "msg5": (Msg5, {"m6": "digest", "m7": "digest", "t5": "ts"}),
    "msg6": (Msg6, {"m13": "ct", "t6": "ts"}),
    "msg7": (Msg7, {"m14": "ct", "t6": "ts"}),
    "abort": (Abort, {"code": "code", "t": "ts"}),
    "reg_request": (RegistrationRequest, {"uid": "identity"}),
}

_MAX_TS = (1 << 63) - 1


def _hex(b: bytes) -> str:
    return b.hex()


def _enc_value(kind: str, value: Any, params: CurveParams) -> Any:
    if kind in ("digest", "identity"):
        return _hex(value)
    if kind in ("ts", "code"):
        return int(value)
    if kind == "point":
        return _hex(encode_point(value, params))
    if kind == "ct":
        return {"eph": _hex(encode_point(value.ephemeral, params)), "body": _hex(value.body), "tag": _hex(value.tag)}
    raise AssertionError(kind)


def encode_wire(msg: WireMessage, params: CurveParams = P256) -> bytes:
    _, layout = _LAYOUT[msg.kind]
    obj = {"type": msg.kind}
    for name, kind in layout.items():
        obj[name] = _enc_value(kind, getattr(msg, name), params)
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("ascii")


def _unhex(value: Any, name: str) -> bytes:
    if not isinstance(value, str):
        raise MalformedWire(f"field {name} must be a hex string")
    try:
        return binascii.unhexlify(value)
    except (binascii.Error, ValueError):
        raise MalformedWire(f"field {name} is not valid hex") from None


def _width(data: bytes, width: int, name: str) -> bytes:
    if len(data) != width:
        raise FieldWidthMismatch(f"field {name} is {len(data)} bytes, expected {width}")
    return data


def _raw_point(data: bytes, params: CurveParams, name: str) -> Point:
    if data == b"\x00":
        return INFINITY
    w = params.coord_bytes
    _width(data, params.point_bytes, name)
    if data[0] != 4:
        raise MalformedWire(f"field {name} is not an uncompressed point")
    return Point(int.from_bytes(data[1:1 + w], "big"), int.from_bytes(data[1 + w:], "big"))


def _dec_value(kind: str, value: Any, name: str, params: CurveParams) -> Any:
    if kind == "digest":
        return _width(_unhex(value, name), DIGEST_BYTES, name)
    if kind == "identity":
        return _width(_unhex(value, name), IDENTITY_BYTES, name)
    if kind == "ts":
        if type(value) is not int or not 0 <= value <= _MAX_TS:
            raise MalformedWire(f"field {name} must be a non-negative integer timestamp")
        return value
    if kind == "code":
        if type(value) is not int or value != 0:
            raise MalformedWire("abort code must be 0")
        return value
    if kind == "point":
        return _raw_point(_unhex(value, name), params, name)
    if kind == "ct":
        if not isinstance(value, dict) or set(value) != {"eph", "body", "tag"}:
            raise MalformedWire(f"field {name} must hold eph, body and tag")
        return PayloadCiphertext(
            ephemeral=_raw_point(_unhex(value["eph"], name + ".eph"), params, name + ".eph"),
            body=_unhex(value["body"], name + ".body"),
            tag=_width(_unhex(value["tag"], name + ".tag"), TAG_BYTES, name + ".tag"),
        )
    raise AssertionError(kind)


def decode_wire(data: bytes, params: CurveParams = P256) -> WireMessage:
    try:
        obj = json.loads(data)
    except (ValueError, UnicodeDecodeError):
        raise MalformedWire("payload is not a JSON document") from None
    if not isinstance(obj, dict) or "type" not in obj:
        raise MalformedWire("payload is not a tagged message object")
    tag = obj.pop("type")
    if tag not in _LAYOUT:
        raise UnknownMessageTag(f"unknown message type {tag!r}")
    cls, layout = _LAYOUT[tag]
    if set(obj) != set(layout):
        raise MalformedWire(f"{tag} fields {sorted(obj)} do not match {sorted(layout)}")
    return cls(**{name: _dec_value(kind, obj[name], name, params) for name, kind in layout.items()})
