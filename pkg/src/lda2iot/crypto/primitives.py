"""Hashing, randomness, key generation and the two encryption schemes.

Two public-key encryptions live here:

* point ElGamal (``ecc_encrypt_point`` / ``ecc_decrypt_point``) operates on
  curve points only, exactly ``(k*G, P_m + k*Q)``;
* the hybrid scheme (``hybrid_encrypt`` / ``hybrid_decrypt``) carries an
  ordered list of byte fields. An ephemeral ECDH point keys AES-256-GCM, and
  the ephemeral point is bound into the tag as associated data.

Protocol code calls the hybrid scheme for every encrypted message field.
"""
from __future__ import annotations

import contextlib
import contextvars
import hashlib
import random
import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import IntegrityFailure, InvalidPoint, MalformedCiphertext
from .curve import (
    INFINITY,
    CurveParams,
    Point,
    check_point,
    decode_point,
    encode_point,
    point_add,
    point_sub,
    scalar_mult,
)

DIGEST_BYTES = 32
NONCE_BYTES = 16
TAG_BYTES = 16

_KDF_LABEL = b"lda2iot/hybrid/v1"
_ZERO_IV = bytes(12)  # every key encrypts exactly one message

# ---------------------------------------------------------------------------
# Operation counting. Protocol-level hashes and public-key encryptions are
# tallied into whichever Counter is active, so a session can be instrumented
# per party without threading a meter through every call.

_tally: contextvars.ContextVar[Optional[Counter]] = contextvars.ContextVar("lda2iot_tally", default=None)


@contextlib.contextmanager
def counting(tally: Optional[Counter] = None) -> Iterator[Counter]:
    """Count ``hash``/``enc``/``dec``/``mult`` calls made inside the block."""
    tally = Counter() if tally is None else tally
    token = _tally.set(tally)
    try:
        yield tally
    finally:
        _tally.reset(token)


def _count(kind: str) -> None:
    t = _tally.get()
    if t is not None:
        t[kind] += 1


# ---------------------------------------------------------------------------

def hash_message(msg: bytes) -> bytes:
    """SHA-256 of ``msg``; the protocol's one-way function H."""
    _count("hash")
    return hashlib.sha256(msg).digest()


def H(*parts: bytes) -> bytes:
    """H(p1 || p2 || ...) over already-canonical byte strings."""
    return hash_message(b"".join(parts))


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"xor of unequal widths {len(a)} and {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


def pad_to(data: bytes, width: int = DIGEST_BYTES) -> bytes:
    """Right-pad with zero bytes (or truncate) to ``width``."""
    return data[:width].ljust(width, b"\x00")


def make_rng(seed: Optional[int] = None) -> random.Random:
    """Deterministic generator when seeded, OS entropy otherwise."""
    if seed is None:
        return random.SystemRandom()
    return random.Random(seed)


def random_nonce(rng: random.Random, bits: int = 8 * NONCE_BYTES) -> bytes:
    if bits <= 0 or bits % 8:
        raise ValueError("nonce width must be a positive multiple of 8 bits")
    return rng.randbytes(bits // 8)


def random_scalar(params: CurveParams, rng: random.Random) -> int:
    return rng.randrange(1, params.n)


def keygen(params: CurveParams, rng: random.Random) -> tuple[int, Point]:
    k = random_scalar(params, rng)
    return k, scalar_mult(k, params.generator, params)


# --- point ElGamal ---------------------------------------------------------

def ecc_encrypt_point(
    P_m: Point,
    recipient_pub: Point,
    params: CurveParams,
    rng: Optional[random.Random] = None,
    *,
    k: Optional[int] = None,
) -> tuple[Point, Point]:
    check_point(P_m, params)
    check_point(recipient_pub, params)
    if k is None:
        k = random_scalar(params, rng)
    return (
        scalar_mult(k, params.generator, params),
        point_add(P_m, scalar_mult(k, recipient_pub, params), params),
    )


def ecc_decrypt_point(ct: tuple[Point, Point], priv: int, params: CurveParams) -> Point:
    c1, c2 = ct
    check_point(c1, params)
    check_point(c2, params)
    return point_sub(c2, scalar_mult(priv, c1, params), params)


# --- hybrid payload encryption --------------------------------------------

@dataclass(frozen=True)
class PayloadCiphertext:
    ephemeral: Point
    body: bytes
    tag: bytes


def _frame(fields: Sequence[bytes]) -> bytes:
    out = [struct.pack(">H", len(fields))]
    for f in fields:
        if not f:
            raise ValueError("payload fields must be non-empty")
        out.append(struct.pack(">H", len(f)))
        out.append(f)
    return b"".join(out)


def _unframe(blob: bytes) -> list[bytes]:
    try:
        (count,), pos = struct.unpack_from(">H", blob, 0), 2
        fields = []
        for _ in range(count):
            (n,) = struct.unpack_from(">H", blob, pos)
            pos += 2
            if pos + n > len(blob):
                raise MalformedCiphertext("field runs past end of payload")
            fields.append(blob[pos:pos + n])
            pos += n
    except struct.error:
        raise MalformedCiphertext("truncated payload framing") from None
    if pos != len(blob):
        raise MalformedCiphertext("trailing bytes after payload fields")
    return fields


def _derive_key(eph: Point, shared: Point, params: CurveParams) -> bytes:
    return hashlib.sha256(
        _KDF_LABEL + encode_point(eph, params) + encode_point(shared, params)
    ).digest()


def hybrid_encrypt(
    recipient_pub: Point,
    fields: Sequence[bytes],
    params: CurveParams,
    rng: random.Random,
) -> PayloadCiphertext:
    check_point(recipient_pub, params)
    if recipient_pub.is_infinity:
        raise InvalidPoint("cannot encrypt to the point at infinity")
    _count("enc")
    k = random_scalar(params, rng)
    eph = scalar_mult(k, params.generator, params)
    shared = scalar_mult(k, recipient_pub, params)
    key = _derive_key(eph, shared, params)
    sealed = AESGCM(key).encrypt(_ZERO_IV, _frame(fields), encode_point(eph, params))
    return PayloadCiphertext(eph, sealed[:-TAG_BYTES], sealed[-TAG_BYTES:])


def hybrid_decrypt(ct: PayloadCiphertext, priv: int, params: CurveParams) -> list[bytes]:
    _count("dec")
    if len(ct.tag) != TAG_BYTES:
        raise MalformedCiphertext(f"tag must be {TAG_BYTES} bytes")
    if ct.ephemeral.is_infinity or not params.contains(ct.ephemeral):
        raise IntegrityFailure("ephemeral point rejected")
    shared = scalar_mult(priv, ct.ephemeral, params)
    key = _derive_key(ct.ephemeral, shared, params)
    try:
        blob = AESGCM(key).decrypt(_ZERO_IV, ct.body + ct.tag, encode_point(ct.ephemeral, params))
    except InvalidTag:
        raise IntegrityFailure("payload authentication failed") from None
    return _unframe(blob)


def ciphertext_to_bytes(ct: PayloadCiphertext, params: CurveParams) -> bytes:
    return encode_point(ct.ephemeral, params) + ct.tag + ct.body


def ciphertext_from_bytes(data: bytes, params: CurveParams) -> PayloadCiphertext:
    w = params.point_bytes
    if len(data) < w + TAG_BYTES:
        raise MalformedCiphertext("ciphertext too short")
    try:
        eph = decode_point(data[:w], params)
    except InvalidPoint:
        raise IntegrityFailure("ephemeral point rejected") from None
    return PayloadCiphertext(eph, data[w + TAG_BYTES:], data[w:w + TAG_BYTES])


__all__ = [
    "DIGEST_BYTES", "NONCE_BYTES", "TAG_BYTES", "INFINITY", "PayloadCiphertext",
    "counting", "hash_message", "H", "xor_bytes", "pad_to", "make_rng", "random_nonce",
    "random_scalar", "keygen", "ecc_encrypt_point", "ecc_decrypt_point",
    "hybrid_encrypt", "hybrid_decrypt", "ciphertext_to_bytes", "ciphertext_from_bytes",
]
