"""A whole in-memory deployment: one gateway, enrolled users and sensors."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from ..crypto.curve import P256, CurveParams
from ..protocol.setup import gateway_init, register_user, sensor_init, user_init
from ..protocol.types import (
    DEFAULT_DELTA_T_MS,
    DEFAULT_L_MAX,
    GatewayState,
    SensorCredentials,
    SmartCard,
    UserCredentials,
)
from .actors import DEFAULT_HOP_MS, GatewayActor, SensorActor, SessionOutcome, UserActor, VirtualClock, run_session
from .bus import MessageBus


@dataclass
class EnrolledUser:
    creds: UserCredentials
    card: SmartCard
    password: bytes
    level: int

    @property
    def uid(self):
        return self.creds.uid


@dataclass
class EnrolledSensor:
    creds: SensorCredentials
    level: int


@dataclass
class Deployment:
    gateway: GatewayState
    users: list[EnrolledUser] = field(default_factory=list)
    sensors: list[EnrolledSensor] = field(default_factory=list)
    rng: random.Random = field(default_factory=random.Random)

    @classmethod
    def create(cls, user_levels=(1,), sensor_levels=(1,), *, params: CurveParams = P256, seed: Optional[int] = None,
               rng: Optional[random.Random] = None, delta_t: int = DEFAULT_DELTA_T_MS, l_max: int = DEFAULT_L_MAX):
        rng = rng if rng is not None else random.Random(seed)
        gw = gateway_init(params, rng, delta_t=delta_t, l_max=l_max)
        dep = cls(gateway=gw, rng=rng)
        for lvl in user_levels:
            dep.add_user(lvl)
        for lvl in sensor_levels:
            dep.add_sensor(lvl)
        return dep

    def add_user(self, level: int, password: Optional[bytes] = None) -> EnrolledUser:
        creds = user_init(self.gateway, self.rng)
        password = password if password is not None else b"pw-%d" % self.rng.getrandbits(32)
        card = register_user(self.gateway, creds.uid, password, level, self.rng)
        u = EnrolledUser(creds, card, password, level)
        self.users.append(u)
        return u

    def add_sensor(self, level: int) -> EnrolledSensor:
        s = EnrolledSensor(sensor_init(self.gateway, level, self.rng), level)
        self.sensors.append(s)
        return s

    # actors share the deployment rng so a seed fixes every draw
    def user_actor(self, i: int, password: Optional[bytes] = None) -> UserActor:
        u = self.users[i]
        pw = u.password if password is None else password
        return UserActor(u.creds, u.card, u.uid, pw, self.gateway.pub, self.rng, delta_t=self.gateway.delta_t)

    def sensor_actor(self, j: int) -> SensorActor:
        return SensorActor(self.sensors[j].creds, self.gateway.pub, self.rng, delta_t=self.gateway.delta_t)

    def gateway_actor(self) -> GatewayActor:
        return GatewayActor(self.gateway, self.rng)

    def session(self, i: int = 0, j: int = 0, *, bus: Optional[MessageBus] = None, clock=None,
                hop_ms: int = DEFAULT_HOP_MS, latency=None, password: Optional[bytes] = None) -> SessionOutcome:
        """One fresh session between user ``i`` and sensor ``j`` on new actors."""
        bus = bus if bus is not None else MessageBus()
        clock = clock if clock is not None else VirtualClock()
        return run_session(self.user_actor(i, password), self.gateway_actor(), self.sensor_actor(j), bus, clock,
                           hop_ms=hop_ms, latency=latency)
