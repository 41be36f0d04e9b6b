"""Actor wrappers and the session driver.

Each actor owns its long-lived credentials and a table of per-session
contexts keyed by session id. Actors talk only through the bus; the driver
delivers the oldest pending envelope, advances the virtual clock by the hop
latency, and publishes whatever the receiving actor emits.
"""
from __future__ import annotations

import hashlib
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..crypto.curve import Point
from ..errors import (
    AccessDenied,
    CryptoError,
    PeerAborted,
    ProtocolError,
    SessionTimeout,
    VerificationFailure,
    WireError,
)
from ..protocol import exchange
from ..protocol.types import (
    DEFAULT_DELTA_T_MS,
    Abort,
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
    SmartCard,
    UserCredentials,
    UserSession,
    pt,
    ts_bytes,
)
from .bus import Envelope, MessageBus, Subscription, pending
from .wire import decode_wire, encode_wire

DEFAULT_HOP_MS = 5


class VirtualClock:
    """Millisecond clock that only moves when told to."""

    def __init__(self, start_ms: int = 1_700_000_000_000):
        self._now = start_ms

    def now(self) -> int:
        return self._now

    def advance(self, ms: int) -> int:
        self._now += ms
        return self._now

    def set(self, ms: int) -> None:
        self._now = ms


class WallClock:
    def now(self) -> int:
        return time.time_ns() // 1_000_000

    def advance(self, ms: int) -> int:
        return self.now()


def session_id(pub_u: Point, pub_s: Point, t1: int, params) -> str:
    """Routing id for topics; plain SHA-256 outside the protocol's hash count."""
    return hashlib.sha256(pt(pub_u, params) + pt(pub_s, params) + ts_bytes(t1)).hexdigest()


def device_address(pub: Point, params) -> str:
    return hashlib.sha256(pt(pub, params)).hexdigest()[:16]


def fingerprint(key: bytes) -> str:
    """Printable digest of a session key; the key itself is never shown."""
    return hashlib.sha256(key).hexdigest()[:16]


@dataclass(frozen=True)
class TopicScheme:
    prefix: str = "auth"

    def u2g(self, sid: str) -> str:
        return f"{self.prefix}/{sid}/u2g"

    def s2g(self, sid: str) -> str:
        return f"{self.prefix}/{sid}/s2g"

    def g2s(self, sid: str, dest: str) -> str:
        return f"{self.prefix}/{sid}/g2s/{dest}"

    def g2u(self, sid: str, dest: str) -> str:
        return f"{self.prefix}/{sid}/g2u/{dest}"

    def parse(self, topic: str) -> tuple[str, str]:
        """Return (session id, direction)."""
        parts = topic.split("/")
        if len(parts) < 3 or parts[0] != self.prefix:
            raise ValueError(f"topic {topic!r} is outside the scheme")
        return parts[1], parts[2]


@dataclass(frozen=True)
class Receipt:
    """What an actor did with one delivered envelope."""

    seq: int
    role: Role
    session: str
    kind: str
    accepted: bool
    error: Optional[str] = None


Outgoing = list[tuple[str, object]]


class Actor:
    role: Role

    def __init__(self, params, scheme: TopicScheme):
        self.params = params
        self.scheme = scheme
        self.receipts: list[Receipt] = []
        self.keys: dict[str, bytes] = {}
        self.subs: list[Subscription] = []
        self.bus: Optional[MessageBus] = None

    def inbox_patterns(self) -> list[str]:
        raise NotImplementedError

    def attach(self, bus: MessageBus) -> None:
        if self.bus is bus:
            return
        self.bus = bus
        self.subs = [bus.subscribe(p) for p in self.inbox_patterns()]

    def _note(self, env: Envelope, sid: str, kind: str, exc: Optional[BaseException] = None) -> None:
        self.receipts.append(Receipt(env.seq, self.role, sid, kind, exc is None,
                                     None if exc is None else type(exc).__name__))

    def deliver(self, env: Envelope, now: int) -> Outgoing:
        sid, _ = self.scheme.parse(env.topic)
        try:
            msg = decode_wire(env.payload, self.params)
        except WireError as exc:
            self._note(env, sid, "?", exc)
            return self.on_error(sid, exc, now)
        try:
            out = self.on_message(sid, msg, now)
        except (ProtocolError, CryptoError) as exc:
            self._note(env, sid, msg.kind, exc)
            return self.on_error(sid, exc, now)
        self._note(env, sid, msg.kind)
        return out

    def on_message(self, sid: str, msg, now: int) -> Outgoing:
        raise NotImplementedError

    def on_error(self, sid: str, exc: BaseException, now: int) -> Outgoing:
        return []

    def session_error(self, sid: str) -> Optional[str]:
        ctx = self.sessions.get(sid)
        return None if ctx is None else ctx.error


class UserActor(Actor):
    role = Role.USER

    def __init__(self, creds: UserCredentials, card: SmartCard, uid, password: bytes, gw_pub: Point,
                 rng: random.Random, *, delta_t: int = DEFAULT_DELTA_T_MS, scheme: TopicScheme = TopicScheme()):
        super().__init__(creds.params, scheme)
        self.creds, self.card, self.uid, self.password = creds, card, uid, password
        self.gw_pub, self.rng, self.delta_t = gw_pub, rng, delta_t
        self.address = device_address(creds.pub, self.params)
        self.sessions: dict[str, UserSession] = {}

    def inbox_patterns(self) -> list[str]:
        return [self.scheme.g2u("+", self.address)]

    def start(self, target_pub: Point, now: int) -> tuple[str, Outgoing]:
        """Smart-card login, then Message 1. BadCredentials leaves the channel untouched."""
        msg, ctx = exchange.login_and_build_msg1(
            self.creds, self.card, self.uid, self.password, target_pub, self.gw_pub, now, self.rng,
            delta_t=self.delta_t,
        )
        sid = session_id(self.creds.pub, target_pub, now, self.params)
        self.sessions[sid] = ctx
        return sid, [(self.scheme.u2g(sid), msg)]

    def on_message(self, sid, msg, now):
        ctx = self.sessions.get(sid)
        if ctx is None:
            raise VerificationFailure("no such session")
        if isinstance(msg, Abort):
            _abort(ctx)
            raise PeerAborted("gateway sent the 0 signal")
        if not isinstance(msg, Msg6):
            _abort(ctx, "VerificationFailure")
            raise VerificationFailure(f"unexpected {msg.kind}")
        self.keys[sid] = exchange.user_handle_msg6(self.creds, self.card, ctx, msg, now)
        return []


class SensorActor(Actor):
    role = Role.SENSOR

    def __init__(self, creds: SensorCredentials, gw_pub: Point, rng: random.Random, *,
                 delta_t: int = DEFAULT_DELTA_T_MS, scheme: TopicScheme = TopicScheme()):
        super().__init__(creds.params, scheme)
        self.creds, self.gw_pub, self.rng, self.delta_t = creds, gw_pub, rng, delta_t
        self.address = device_address(creds.pub, self.params)
        self.sessions: dict[str, SensorSession] = {}

    def inbox_patterns(self) -> list[str]:
        return [self.scheme.g2s("+", self.address)]

    def on_message(self, sid, msg, now):
        ctx = self.sessions.get(sid)
        if isinstance(msg, Msg2) and ctx is None:
            try:
                reply, ctx = exchange.sensor_handle_msg2(self.creds, self.gw_pub, msg, now, self.rng,
                                                         delta_t=self.delta_t)
            except (ProtocolError, CryptoError) as exc:
                self.sessions[sid] = SensorSession(role=Role.SENSOR, phase=Phase.ABORTED,
                                                   error=type(exc).__name__)
                raise
            self.sessions[sid] = ctx
            return [(self.scheme.s2g(sid), reply)]
        if ctx is None:
            raise VerificationFailure("no such session")
        if isinstance(msg, Abort):
            _abort(ctx)
            raise PeerAborted("gateway sent the 0 signal")
        if isinstance(msg, Msg4):
            return [(self.scheme.s2g(sid), exchange.sensor_handle_msg4(self.creds, ctx, msg, now, self.rng))]
        if isinstance(msg, Msg7):
            self.keys[sid] = exchange.sensor_handle_msg7(self.creds, ctx, msg, now)
            return []
        _abort(ctx, "VerificationFailure")
        raise VerificationFailure(f"unexpected {msg.kind}")

    def on_error(self, sid, exc, now):
        # tell the gateway so it can close the user's side as well
        if isinstance(exc, PeerAborted):
            return []
        return [(self.scheme.s2g(sid), Abort(t=now))]


@dataclass
class _Route:
    ctx: GatewaySession
    user_addr: str = ""
    sensor_addr: str = ""
    abort_sent: bool = False


class GatewayActor(Actor):
    """Serves many sessions at once, one context per session id."""

    role = Role.GATEWAY

    def __init__(self, state: GatewayState, rng: random.Random, *, scheme: TopicScheme = TopicScheme()):
        super().__init__(state.params, scheme)
        self.state, self.rng = state, rng
        self.routes: dict[str, _Route] = {}

    @property
    def sessions(self) -> dict[str, GatewaySession]:
        return {sid: r.ctx for sid, r in self.routes.items()}

    def inbox_patterns(self) -> list[str]:
        return [self.scheme.u2g("+"), self.scheme.s2g("+")]

    def on_message(self, sid, msg, now):
        route = self.routes.get(sid)
        if isinstance(msg, Msg1):
            if route is not None:
                raise VerificationFailure("session id already in use")
            try:
                reply, ctx = exchange.gw_handle_msg1(self.state, msg, now)
            except (ProtocolError, CryptoError) as exc:
                self.routes[sid] = _Route(GatewaySession(role=Role.GATEWAY, phase=Phase.ABORTED,
                                                         error=type(exc).__name__))
                raise
            route = _Route(ctx, device_address(ctx.pub_u, self.params), device_address(ctx.pub_s, self.params))
            self.routes[sid] = route
            return [(self.scheme.g2s(sid, route.sensor_addr), reply)]
        if route is None:
            raise VerificationFailure("no such session")
        ctx = route.ctx
        if isinstance(msg, Abort):
            was_open = not ctx.closed
            _abort(ctx)
            if was_open and route.user_addr and not route.abort_sent:
                route.abort_sent = True
                return [(self.scheme.g2u(sid, route.user_addr), Abort(t=now))]
            return []
        if isinstance(msg, Msg3):
            reply = exchange.gw_handle_msg3(self.state, ctx, msg, now, self.rng)
            return [(self.scheme.g2s(sid, route.sensor_addr), reply)]
        if isinstance(msg, Msg5):
            m6, m7 = exchange.gw_handle_msg5(self.state, ctx, msg, now, self.rng)
            return [(self.scheme.g2u(sid, route.user_addr), m6), (self.scheme.g2s(sid, route.sensor_addr), m7)]
        _abort(ctx, "VerificationFailure")
        raise VerificationFailure(f"unexpected {msg.kind}")

    def on_error(self, sid, exc, now):
        """Send the 0 signal to every party of the session the gateway can address."""
        route = self.routes.get(sid)
        if route is None or route.abort_sent or route.ctx.phase is not Phase.ABORTED:
            return []
        if route.ctx.error != type(exc).__name__:
            return []
        route.abort_sent = True
        out: Outgoing = []
        if route.user_addr:
            out.append((self.scheme.g2u(sid, route.user_addr), Abort(t=now)))
        if route.sensor_addr:
            out.append((self.scheme.g2s(sid, route.sensor_addr), Abort(t=now)))
        return out


def _abort(ctx, error: str = "PeerAborted") -> None:
    if not ctx.closed:
        ctx.phase = Phase.ABORTED
        ctx.error = error


def publish_all(bus: MessageBus, out: Outgoing, sender: Role, now: int, params) -> list[Envelope]:
    sent = []
    for topic, msg in out:
        sent.extend(bus.publish(topic, encode_wire(msg, params), sender.value, now))
    return sent


# --- driver ---------------------------------------------------------------

@dataclass
class SessionOutcome:
    session: str
    status: str  # agreed | denied | aborted | timeout
    user_key: Optional[bytes] = None
    sensor_key: Optional[bytes] = None
    error: Optional[str] = None
    aborted_by: Optional[Role] = None
    aborts_delivered: frozenset = frozenset()
    trace: list[Envelope] = field(default_factory=list)
    receipts: list[Receipt] = field(default_factory=list)
    gateway_verify_ns: int = 0
    elapsed_ms: int = 0

    @property
    def agreed(self) -> bool:
        return self.status == "agreed"

    @property
    def message_kinds(self) -> list[str]:
        return [decode_wire(e.payload).kind for e in self.trace]


Latency = Callable[[Envelope], int]


def drive(actors: list[Actor], bus: MessageBus, clock, *, hop_ms: int = DEFAULT_HOP_MS,
          latency: Optional[Latency] = None, max_deliveries: int = 256) -> int:
    """Deliver pending envelopes until the bus is quiet; returns deliveries made."""
    owner = {id(s): a for a in actors for s in a.subs}
    subs = [s for a in actors for s in a.subs]
    count = 0
    while True:
        sub = pending(subs)
        if sub is None:
            return count
        count += 1
        if count > max_deliveries:
            raise SessionTimeout(f"no quiescence after {max_deliveries} deliveries")
        env = sub.poll()
        clock.advance(latency(env) if latency is not None else hop_ms)
        actor = owner[id(sub)]
        out = actor.deliver(env, clock.now())
        publish_all(bus, out, actor.role, clock.now(), actor.params)


def run_session(user: UserActor, gateway: GatewayActor, sensor: SensorActor, bus: MessageBus, clock, *,
                target: Optional[Point] = None, hop_ms: int = DEFAULT_HOP_MS,
                latency: Optional[Latency] = None, max_deliveries: int = 256) -> SessionOutcome:
    """Run one login-and-key-agreement exchange to completion or first abort."""
    for a in (user, gateway, sensor):
        a.attach(bus)
    target = sensor.creds.pub if target is None else target
    log_start = len(bus.log)
    receipts_start = {a.role: len(a.receipts) for a in (user, gateway, sensor)}
    t0 = clock.now()
    try:
        sid, out = user.start(target, t0)
    except (ProtocolError, CryptoError) as exc:
        return SessionOutcome(session="", status="aborted", error=type(exc).__name__, aborted_by=Role.USER)
    publish_all(bus, out, Role.USER, t0, user.params)
    drive([user, gateway, sensor], bus, clock, hop_ms=hop_ms, latency=latency, max_deliveries=max_deliveries)

    receipts = sorted(
        (r for a in (user, gateway, sensor) for r in a.receipts[receipts_start[a.role]:] if r.session == sid),
        key=lambda r: r.seq,
    )
    first_err = next((r for r in receipts if not r.accepted and r.error != "PeerAborted"), None)
    aborted_at = frozenset(r.role for r in receipts if r.kind == "abort")
    uk, sk = user.keys.get(sid), sensor.keys.get(sid)
    gw_ctx = gateway.routes[sid].ctx if sid in gateway.routes else None
    if uk is not None and sk is not None and uk == sk:
        status = "agreed"
    elif first_err is not None and first_err.error == "AccessDenied":
        status = "denied"
    elif first_err is not None or aborted_at:
        status = "aborted"
    else:
        status = "timeout"
    return SessionOutcome(
        session=sid,
        status=status,
        user_key=uk,
        sensor_key=sk,
        error=None if first_err is None else first_err.error,
        aborted_by=None if first_err is None else first_err.role,
        aborts_delivered=aborted_at,
        trace=bus.log[log_start:],
        receipts=receipts,
        gateway_verify_ns=0 if gw_ctx is None else gw_ctx.verify_ns,
        elapsed_ms=clock.now() - t0,
    )
