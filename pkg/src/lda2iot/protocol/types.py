"""Protocol state, credentials and the wire message variants."""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from typing import ClassVar, Optional, Union

from ..crypto.curve import CurveParams, Point, encode_point
from ..crypto.primitives import DIGEST_BYTES, PayloadCiphertext
from ..errors import LevelOutOfRange

IDENTITY_BYTES = 20
TIMESTAMP_BYTES = 4
LEVEL_BYTES = 2
DEFAULT_DELTA_T_MS = 5_000
DEFAULT_L_MAX = 16


class Role(str, enum.Enum):
    USER = "user"
    GATEWAY = "gateway"
    SENSOR = "sensor"


@dataclass(frozen=True)
class Identity:
    value: bytes
    role: Role

    def __post_init__(self):
        if len(self.value) != IDENTITY_BYTES:
            raise ValueError(f"identity must be {IDENTITY_BYTES} bytes, got {len(self.value)}")

    def __bytes__(self) -> bytes:
        return self.value

    def hex(self) -> str:
        return self.value.hex()


# --- canonical field encodings used inside hash inputs --------------------

def ts_bytes(t: int) -> bytes:
    """Timestamps enter hashes as their low 32 bits, big-endian."""
    return (t & 0xFFFFFFFF).to_bytes(TIMESTAMP_BYTES, "big")


def level_bytes(level: int) -> bytes:
    return level.to_bytes(LEVEL_BYTES, "big")


def pt(P: Point, params: CurveParams) -> bytes:
    return encode_point(P, params)


def check_level(level: int, l_max: int) -> int:
    if not isinstance(level, int) or not 1 <= level <= l_max:
        raise LevelOutOfRange(f"level {level!r} outside 1..{l_max}")
    return level


# --- long-lived state -----------------------------------------------------

@dataclass
class GatewayState:
    params: CurveParams
    priv: int
    pub: Point
    master: bytes
    users: dict[Point, Identity] = field(default_factory=dict)
    sensors: dict[Point, Identity] = field(default_factory=dict)
    delta_t: int = DEFAULT_DELTA_T_MS
    l_max: int = DEFAULT_L_MAX
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    def __repr__(self) -> str:  # keep secrets out of logs
        return (f"GatewayState(curve={self.params.name}, users={len(self.users)}, "
                f"sensors={len(self.sensors)}, delta_t={self.delta_t}, l_max={self.l_max})")

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_lock", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.RLock()


@dataclass(frozen=True)
class UserCredentials:
    X1: bytes
    X2: bytes
    priv: int
    pub: Point
    uid: Identity
    params: CurveParams

    def __repr__(self) -> str:
        return f"UserCredentials(pub=({hex(self.pub.x)[:12]}..), curve={self.params.name})"


@dataclass(frozen=True)
class SensorCredentials:
    Y1: bytes
    Y2: bytes
    priv: int
    pub: Point
    sid: Identity
    D_j: bytes
    params: CurveParams

    def __repr__(self) -> str:
        return f"SensorCredentials(pub=({hex(self.pub.x)[:12]}..), curve={self.params.name})"


@dataclass(frozen=True)
class SmartCard:
    reg_star: bytes
    L1: bytes
    L2: bytes
    B_i: bytes
    curve_name: str

    def __post_init__(self):
        for name in ("reg_star", "L1", "L2", "B_i"):
            if len(getattr(self, name)) != DIGEST_BYTES:
                raise ValueError(f"smart card field {name} must be {DIGEST_BYTES} bytes")


@dataclass(frozen=True)
class CardDraft:
    """What the gateway hands back during registration, before blinding."""

    reg: bytes
    B_i: bytes
    curve_name: str


@dataclass(frozen=True)
class RegistrationHeld:
    """Values the user keeps locally between registration steps."""

    R_a: bytes
    R_b: bytes
    TPW: bytes


# --- wire messages --------------------------------------------------------

@dataclass(frozen=True)
class RegistrationRequest:
    kind: ClassVar[str] = "reg_request"
    uid: bytes


@dataclass(frozen=True)
class Msg1:
    kind: ClassVar[str] = "msg1"
    m1: PayloadCiphertext
    temp0: bytes
    t1: int


@dataclass(frozen=True)
class Msg2:
    kind: ClassVar[str] = "msg2"
    temp1: bytes
    t2: int


@dataclass(frozen=True)
class Msg3:
    kind: ClassVar[str] = "msg3"
    m3: PayloadCiphertext
    t3: int


@dataclass(frozen=True)
class Msg4:
    kind: ClassVar[str] = "msg4"
    m5: PayloadCiphertext
    pub_u: Point
    t4: int


@dataclass(frozen=True)
class Msg5:
    kind: ClassVar[str] = "msg5"
    m6: bytes
    m7: bytes
    t5: int


@dataclass(frozen=True)
class Msg6:
    kind: ClassVar[str] = "msg6"
    m13: PayloadCiphertext
    t6: int


@dataclass(frozen=True)
class Msg7:
    kind: ClassVar[str] = "msg7"
    m14: PayloadCiphertext
    t6: int


@dataclass(frozen=True)
class Abort:
    """The 0 signal."""

    kind: ClassVar[str] = "abort"
    t: int
    code: int = 0


ProtocolMessage = Union[Msg1, Msg2, Msg3, Msg4, Msg5, Msg6, Msg7, Abort]
WireMessage = Union[ProtocolMessage, RegistrationRequest]
MESSAGE_TYPES = (Msg1, Msg2, Msg3, Msg4, Msg5, Msg6, Msg7)


def timestamp_of(msg: ProtocolMessage) -> int:
    return {
        Msg1: lambda m: m.t1, Msg2: lambda m: m.t2, Msg3: lambda m: m.t3,
        Msg4: lambda m: m.t4, Msg5: lambda m: m.t5, Msg6: lambda m: m.t6,
        Msg7: lambda m: m.t6, Abort: lambda m: m.t,
    }[type(msg)](msg)


# Plaintext layout of each encrypted field: (name, kind) in order. Kinds are
# the size-model categories used by the bit accounting.
PAYLOAD_SCHEMAS: dict[str, tuple[tuple[str, str], ...]] = {
    "m1": (("temp0", "digest"), ("pub_u", "point"), ("pub_s", "point"), ("r_t", "nonce"), ("B_i", "digest")),
    "m3": (("m2", "digest"), ("D_j", "digest"), ("r_2", "nonce")),
    "m5": (("m4", "digest"), ("sid", "identity"), ("r_1", "nonce")),
    "m13": (("m8", "digest"), ("m9", "digest"), ("m11", "digest"), ("r_1", "nonce"), ("r_2", "nonce")),
    "m14": (("m8", "digest"), ("m10", "digest"), ("m12", "digest"), ("r_t", "nonce")),
}


# --- per-session state ----------------------------------------------------

class Phase(enum.IntEnum):
    AWAIT_MSG1 = 1
    AWAIT_MSG2 = 2
    AWAIT_MSG3 = 3
    AWAIT_MSG4 = 4
    AWAIT_MSG5 = 5
    AWAIT_MSG6 = 6
    AWAIT_MSG7 = 7
    DONE = 100
    ABORTED = 101


@dataclass
class SessionContext:
    role: Role
    phase: Phase
    delta_t: int = DEFAULT_DELTA_T_MS
    seen: list[int] = field(default_factory=list)
    error: Optional[str] = None
    key: Optional[bytes] = None

    @property
    def closed(self) -> bool:
        return self.phase in (Phase.DONE, Phase.ABORTED)


@dataclass
class UserSession(SessionContext):
    uid: Optional[Identity] = None
    gw_pub: Optional[Point] = None
    target_pub: Optional[Point] = None
    r_t: bytes = b""
    t1: int = 0


@dataclass
class GatewaySession(SessionContext):
    uid: Optional[Identity] = None
    sid: Optional[Identity] = None
    pub_u: Optional[Point] = None
    pub_s: Optional[Point] = None
    r_t: bytes = b""
    B_i: bytes = b""
    X2: bytes = b""
    Y2: bytes = b""
    r_1: bytes = b""
    r_2: bytes = b""
    t1: int = 0
    verify_ns: int = 0


@dataclass
class SensorSession(SessionContext):
    gw_pub: Optional[Point] = None
    pub_u: Optional[Point] = None
    r_1: bytes = b""
    r_2: bytes = b""
