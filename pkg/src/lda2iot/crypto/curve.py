"""Short-Weierstrass curves over prime fields.

Points are exposed in affine form. ``point_add`` follows the textbook chord
and tangent formulas directly; ``scalar_mult`` runs double-and-add on
Jacobian coordinates internally so that P-256 sessions stay cheap enough
for thousand-run property tests, and converts back to affine at the end.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from ..errors import InvalidCurve, InvalidPoint

try:  # faster big-integer arithmetic when available; results are identical
    from gmpy2 import mpz as _F
except ImportError:  # pragma: no cover
    _F = int


class Point(NamedTuple):
    """Affine point; ``INFINITY`` (both coordinates ``None``) is the identity."""

    x: Optional[int]
    y: Optional[int]

    @property
    def is_infinity(self) -> bool:
        return self.x is None


INFINITY = Point(None, None)


@dataclass(frozen=True)
class CurveParams:
    name: str
    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int
    _base_table: list = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        p, a, b = self.p, self.a, self.b
        if p < 3:
            raise InvalidCurve(f"modulus {p} too small")
        if (4 * a ** 3 + 27 * b ** 2) % p == 0:
            raise InvalidCurve("singular curve: 4a^3 + 27b^2 = 0 mod p")
        if not self.contains(self.generator):
            raise InvalidCurve("generator is not on the curve")
        if self.n < 2 or not _jac_to_affine(_jac_mult(self, self.n, self.gx, self.gy), self.p).is_infinity:
            raise InvalidCurve("n * G is not the point at infinity")

    @property
    def generator(self) -> Point:
        return Point(self.gx, self.gy)

    @property
    def coord_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def point_bytes(self) -> int:
        """Width of an uncompressed finite point on the wire."""
        return 1 + 2 * self.coord_bytes

    def contains(self, P: Point) -> bool:
        if P.is_infinity:
            return True
        x, y = P
        if not (0 <= x < self.p and 0 <= y < self.p):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % self.p == 0

    def points(self) -> list[Point]:
        """Every point of the group, infinity first. Only sensible for toy curves."""
        if self.p > 1 << 16:
            raise InvalidCurve("refusing to enumerate a large curve")
        pts = [INFINITY]
        for x in range(self.p):
            rhs = (x ** 3 + self.a * x + self.b) % self.p
            for y in range(self.p):
                if (y * y) % self.p == rhs:
                    pts.append(Point(x, y))
        return pts


def check_point(P: Point, params: CurveParams) -> Point:
    if not params.contains(P):
        raise InvalidPoint(f"{P} is not on {params.name}")
    return P


def point_neg(P: Point, params: CurveParams) -> Point:
    if P.is_infinity:
        return P
    return Point(P.x, (-P.y) % params.p)


def point_add(P: Point, Q: Point, params: CurveParams) -> Point:
    check_point(P, params)
    check_point(Q, params)
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    p = params.p
    if P.x == Q.x:
        if (P.y + Q.y) % p == 0:
            return INFINITY
        # tangent slope; here P == Q
        lam = (3 * P.x * P.x + params.a) * pow(2 * P.y, -1, p) % p
    else:
        lam = (Q.y - P.y) * pow(Q.x - P.x, -1, p) % p
    xr = (lam * lam - P.x - Q.x) % p
    yr = (lam * (P.x - xr) - P.y) % p
    return Point(xr, yr)


def point_sub(P: Point, Q: Point, params: CurveParams) -> Point:
    return point_add(P, point_neg(Q, params), params)


# --- Jacobian internals ---------------------------------------------------
# (X, Y, Z) represents (X/Z^2, Y/Z^3); Z == 0 is infinity.

_JAC_INF = (1, 1, 0)


def _jac_double(X, Y, Z, a, p):
    if Z == 0 or Y == 0:
        return _JAC_INF
    YY = Y * Y % p
    S = 4 * X * YY % p
    ZZ = Z * Z % p
    M = (3 * X * X + a * ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y * Z % p
    return X3, Y3, Z3


def _jac_add_affine(X1, Y1, Z1, x2, y2, a, p):
    if Z1 == 0:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    H = (U2 - X1) % p
    r = (S2 - Y1) % p
    if H == 0:
        if r == 0:
            return _jac_double(X1, Y1, Z1, a, p)
        return _JAC_INF
    HH = H * H % p
    HHH = H * HH % p
    V = X1 * HH % p
    X3 = (r * r - HHH - 2 * V) % p
    Y3 = (r * (V - X3) - Y1 * HHH) % p
    Z3 = Z1 * H % p
    return X3, Y3, Z3


def _jac_to_affine(J, p) -> Point:
    X, Y, Z = J
    if Z == 0:
        return INFINITY
    zi = pow(Z, -1, p)
    zi2 = zi * zi % p
    return Point(int(X * zi2 % p), int(Y * zi2 * zi % p))


_WNAF_W = 4


def _wnaf(k: int, w: int = _WNAF_W) -> list[int]:
    """Width-w non-adjacent form, least significant digit first."""
    digits = []
    full, half = 1 << w, 1 << (w - 1)
    while k:
        if k & 1:
            d = k & (full - 1)
            if d >= half:
                d -= full
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def _jac_mult(params: CurveParams, k: int, x: int, y: int):
    a, p = _F(params.a), _F(params.p)
    P = Point(x, y)
    # odd multiples P, 3P, 5P, ... in affine form for mixed additions
    odd = [P]
    twoP = point_add(P, P, params)
    for _ in range((1 << (_WNAF_W - 2)) - 1):
        odd.append(point_add(odd[-1], twoP, params))
    table = {}
    for i, Q in enumerate(odd):
        if not Q.is_infinity:
            table[2 * i + 1] = (_F(Q.x), _F(Q.y))
            table[-(2 * i + 1)] = (_F(Q.x), _F(-Q.y % params.p))
    R = _JAC_INF
    for d in reversed(_wnaf(k)):
        R = _jac_double(*R, a, p)
        # a missing digit means that multiple is infinity (small-order point)
        if d and d in table:
            R = _jac_add_affine(*R, *table[d], a, p)
    return R


_COMB_BITS = 4


def _base_table(params: CurveParams) -> list[list[tuple]]:
    # table[i][d] = d * 16^i * G (affine) for d = 1..15, built once per curve
    table = params._base_table
    if table is None:
        table = []
        step = params.generator
        for _ in range((params.n.bit_length() + _COMB_BITS) // _COMB_BITS + 1):
            row, acc = [None], INFINITY
            for _d in range(1, 1 << _COMB_BITS):
                acc = point_add(acc, step, params)
                row.append(None if acc.is_infinity else (_F(acc.x), _F(acc.y)))
            table.append(row)
            step = point_add(acc, step, params)
        object.__setattr__(params, "_base_table", table)
    return table


def scalar_mult(k: int, P: Point, params: CurveParams) -> Point:
    """Compute ``k * P``; ``0 * P`` is infinity.

    The generator uses a precomputed table of 4-bit windows; other points use
    width-4 NAF double-and-add in Jacobian coordinates.
    """
    check_point(P, params)
    if k < 0:
        return scalar_mult(-k, point_neg(P, params), params)
    if k == 0 or P.is_infinity:
        return INFINITY
    a, p = _F(params.a), _F(params.p)
    if P.x == params.gx and P.y == params.gy:
        k %= params.n
        table = _base_table(params)
        R = _JAC_INF
        i = 0
        mask = (1 << _COMB_BITS) - 1
        while k:
            d = k & mask
            if d and table[i][d] is not None:
                R = _jac_add_affine(*R, *table[i][d], a, p)
            k >>= _COMB_BITS
            i += 1
        return _jac_to_affine(R, p)
    return _jac_to_affine(_jac_mult(params, k, P.x, P.y), p)


# --- encoding -------------------------------------------------------------

def encode_point(P: Point, params: CurveParams) -> bytes:
    """``0x04 || x || y`` with fixed-width coordinates; infinity is ``b"\\x00"``."""
    if P.is_infinity:
        return b"\x00"
    w = params.coord_bytes
    return b"\x04" + P.x.to_bytes(w, "big") + P.y.to_bytes(w, "big")


def decode_point(data: bytes, params: CurveParams) -> Point:
    if data == b"\x00":
        return INFINITY
    w = params.coord_bytes
    if len(data) != 1 + 2 * w or data[0] != 4:
        raise InvalidPoint(f"bad point encoding of length {len(data)}")
    P = Point(int.from_bytes(data[1:1 + w], "big"), int.from_bytes(data[1 + w:], "big"))
    return check_point(P, params)


# --- presets and loading --------------------------------------------------

P256 = CurveParams(
    name="P-256",
    p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
    a=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFC,
    b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
    gx=0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
    gy=0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    n=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
)

# y^2 = x^3 + x + 1 over F_23: 28 points, cyclic, generated by (0, 1).
TOY23 = CurveParams(name="toy-23", p=23, a=1, b=1, gx=0, gy=1, n=28)

PRESETS = {c.name: c for c in (P256, TOY23)}


def curve_by_name(name: str) -> CurveParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidCurve(f"unknown curve {name!r}") from None


def load_curve(text: str) -> CurveParams:
    """Parse ``key = value`` lines (p, a, b, Gx, Gy, n and optional name).

    Integers may be decimal or ``0x`` hex. A lone ``preset = P-256`` line
    returns the named preset.
    """
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidCurve(f"cannot parse curve line {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        fields[key.lower()] = value
    if "preset" in fields:
        return curve_by_name(fields["preset"])
    try:
        ints = {k: int(fields[k], 0) for k in ("p", "a", "b", "gx", "gy", "n")}
    except KeyError as exc:
        raise InvalidCurve(f"missing curve field {exc.args[0]}") from None
    except ValueError as exc:
        raise InvalidCurve(str(exc)) from None
    p = ints["p"]
    return CurveParams(
        name=fields.get("name", "custom"),
        p=p,
        a=ints["a"] % p,
        b=ints["b"] % p,
        gx=ints["gx"],
        gy=ints["gy"],
        n=ints["n"],
    )


@functools.lru_cache(maxsize=None)
def point_order(P: Point, params: CurveParams) -> int:
    """Order of P by brute force (toy curves only)."""
    k, Q = 1, P
    while not Q.is_infinity:
        Q = point_add(Q, P, params)
        k += 1
        if k > 4 * params.p + 10:
            raise InvalidCurve("order search exceeded Hasse bound")
    return k
