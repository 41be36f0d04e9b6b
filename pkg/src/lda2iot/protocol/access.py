"""Freshness windows, level-tag recovery and the level-dependent access rule."""
from __future__ import annotations

import contextlib
import contextvars
import enum

from ..crypto.primitives import H
from ..errors import AccessDenied, ClockSkew, LevelNotFound, StaleTimestamp
from .types import level_bytes

_freshness_on = contextvars.ContextVar("lda2iot_freshness", default=True)


@contextlib.contextmanager
def freshness_disabled():
    """Test hook: turn every freshness check into a no-op inside the block.

    Exists so the attack suite can prove it notices a missing replay
    defence. Never use it outside tests.
    """
    token = _freshness_on.set(False)
    try:
        yield
    finally:
        _freshness_on.reset(token)


def check_freshness(sent: int, now: int, delta_t: int) -> None:
    """Accept iff ``0 <= now - sent <= delta_t`` (inclusive upper bound)."""
    if not _freshness_on.get():
        return
    age = now - sent
    if age < 0:
        raise ClockSkew(f"timestamp {sent} is {-age} ms in the future")
    if age > delta_t:
        raise StaleTimestamp(f"message is {age} ms old, window is {delta_t} ms")


def level_tag(level: int, master: bytes, ident: bytes) -> bytes:
    """H(level || K_s || identity): the digest that hides a party's level."""
    return H(level_bytes(level), master, ident)


def recover_level(tag: bytes, ident: bytes, master: bytes, l_max: int) -> int:
    """Smallest level in ``1..l_max`` whose tag matches, by brute force."""
    for level in range(1, l_max + 1):
        if level_tag(level, master, ident) == tag:
            return level
    raise LevelNotFound("no level reproduces the presented tag")


class Access(enum.Enum):
    ALLOWED = "allowed"
    DENIED = "denied"


def lda_decide(user_level: int, sensor_level: int) -> Access:
    """Level 1 is the most privileged; a user reaches sensors at its own level or below."""
    return Access.ALLOWED if user_level <= sensor_level else Access.DENIED


def access_check(B_i: bytes, uid: bytes, D_j: bytes, sid: bytes, master: bytes, l_max: int) -> tuple[int, int]:
    """Recover both levels and enforce the access rule.

    The sensor tag is searched over the levels the user may reach first
    (``l_i..l_max``), so a granted request stops early while a refused one
    has to exhaust that range before the remaining levels are tried.
    Returns ``(l_i, l_j)`` or raises AccessDenied / LevelNotFound.
    """
    l_i = recover_level(B_i, uid, master, l_max)
    search = [*range(l_i, l_max + 1), *range(1, l_i)]
    l_j = next((lv for lv in search if level_tag(lv, master, sid) == D_j), None)
    if l_j is None:
        raise LevelNotFound("sensor tag matches no level")
    if lda_decide(l_i, l_j) is Access.DENIED:
        raise AccessDenied("user level does not reach the sensor level")
    return l_i, l_j
