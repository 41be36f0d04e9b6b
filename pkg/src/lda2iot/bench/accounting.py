"""Communication-cost accounting over a session trace.

Two policies: ``count-plaintext`` charges every field by its size-model
width, charging encrypted fields as the plaintext they carry, while
``count-wire`` charges the encoded bytes actually published.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InvalidConfig, UnknownField, WireError
from ..protocol.types import PAYLOAD_SCHEMAS
from ..runtime.wire import decode_wire

ENTITIES = ("user", "gateway", "sensor")
POLICIES = ("count-plaintext", "count-wire")

# published per-entity figures, printed beside measured values, never asserted
REFERENCE_BITS = {"user": 512, "gateway": 1344, "sensor": 704, "total": 2560}

# clear fields of each message and their size category; "sealed" expands to the payload schema
MESSAGE_FIELDS: dict[str, tuple[tuple[str, str], ...]] = {
    "msg1": (("m1", "sealed"), ("temp0", "digest"), ("t1", "timestamp")),
    "msg2": (("temp1", "digest"), ("t2", "timestamp")),
    "msg3": (("m3", "sealed"), ("t3", "timestamp")),
    "msg4": (("m5", "sealed"), ("pub_u", "point"), ("t4", "timestamp")),
    "msg5": (("m6", "digest"), ("m7", "digest"), ("t5", "timestamp")),
    "msg6": (("m13", "sealed"), ("t6", "timestamp")),
    "msg7": (("m14", "sealed"), ("t6", "timestamp")),
    "abort": (("code", "signal"), ("t", "timestamp")),
}


@dataclass(frozen=True)
class SizeModel:
    """Field widths in bits. Defaults: 160-bit identities and passwords,
    256-bit digests, 32-bit timestamps, 128-bit nonces, and 512-bit points
    (both affine coordinates of a 256-bit curve)."""

    identity: int = 160
    password: int = 160
    digest: int = 256
    timestamp: int = 32
    nonce: int = 128
    point: int = 512
    signal: int = 8
    policy: str = "count-plaintext"

    def __post_init__(self):
        for name in ("identity", "password", "digest", "timestamp", "nonce", "point", "signal"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"width {name} must be positive")
        if self.policy not in POLICIES:
            raise InvalidConfig(f"policy must be one of {POLICIES}")

    def width(self, category: str) -> int:
        if category not in ("identity", "password", "digest", "timestamp", "nonce", "point", "signal"):
            raise UnknownField(f"no width for field category {category!r}")
        return getattr(self, category)


@dataclass(frozen=True)
class MessageCost:
    index: int
    kind: str
    sender: str
    bits: int
    fields: tuple[tuple[str, int], ...] = ()


@dataclass
class CostReport:
    policy: str
    per_entity: dict[str, int] = field(default_factory=lambda: dict.fromkeys(ENTITIES, 0))
    messages: list[MessageCost] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.per_entity.values())

    def consistent(self) -> bool:
        """total = sum over entities = sum over messages, and each entity sums its messages."""
        by_sender = dict.fromkeys(ENTITIES, 0)
        for m in self.messages:
            by_sender[m.sender] += m.bits
        return by_sender == self.per_entity and self.total == sum(m.bits for m in self.messages)


def _field_bits(kind: str, model: SizeModel) -> list[tuple[str, int]]:
    if kind not in MESSAGE_FIELDS:
        raise UnknownField(f"no field layout for message {kind!r}")
    out = []
    for name, cat in MESSAGE_FIELDS[kind]:
        if cat == "sealed":
            if name not in PAYLOAD_SCHEMAS:
                raise UnknownField(f"no payload schema for {name!r}")
            out.extend((f"{name}.{sub}", model.width(c)) for sub, c in PAYLOAD_SCHEMAS[name])
        else:
            out.append((name, model.width(cat)))
    return out


def count_bits(trace, model: SizeModel = SizeModel()) -> CostReport:
    """Charge each envelope of ``trace`` to its sender under ``model``."""
    rep = CostReport(model.policy)
    for i, env in enumerate(trace):
        if env.sender not in ENTITIES:
            raise UnknownField(f"sender {env.sender!r} is not a protocol entity")
        try:
            kind = decode_wire(env.payload).kind
        except WireError as exc:
            raise UnknownField(f"envelope {i} does not decode: {exc}") from None
        if model.policy == "count-wire":
            fields = (("wire", 8 * len(env.payload)),)
        else:
            fields = tuple(_field_bits(kind, model))
        bits = sum(b for _, b in fields)
        rep.messages.append(MessageCost(i, kind, env.sender, bits, fields))
        rep.per_entity[env.sender] += bits
    return rep
