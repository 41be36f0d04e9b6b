"""Real-or-random game: oracle queries against a live world plus a distinguisher runner.

The world runs honest sessions on demand. Execute returns only what crosses
the channel; Test answers once per experiment with either the real session
key or a uniformly random string of the same width, decided by a hidden
fair bit.
"""
from __future__ import annotations

import enum
import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..crypto.curve import P256, CurveParams
from ..crypto.primitives import DIGEST_BYTES
from ..errors import QueryOutOfOrder
from ..protocol.access import recover_level
from ..runtime.actors import SessionOutcome, VirtualClock
from ..runtime.bus import MessageBus
from ..runtime.deploy import Deployment
from ..runtime.wire import encode_wire
from .scenarios import corrupt_sensing_device, corrupt_user_device


class QueryKind(enum.Enum):
    REVEAL = "Reveal"
    EXECUTE = "Execute"
    SEND = "Send"
    CORRUPT_USER_DEVICE = "CorruptUserDevice"
    CORRUPT_SENSING_DEVICE = "CorruptSensingDevice"
    CORRUPT_USER_LEVEL = "CorruptUserLevel"
    CORRUPT_SENSING_LEVEL = "CorruptSensingLevel"
    TEST = "Test"


@dataclass(frozen=True)
class OracleQuery:
    kind: QueryKind
    target: object = None
    payload: Optional[bytes] = None


@dataclass
class Instance:
    handle: int
    user: int
    sensor: int
    outcome: SessionOutcome
    revealed: bool = False


@dataclass
class RORWorld:
    deployment: Deployment
    rng: random.Random
    clock: VirtualClock = field(default_factory=VirtualClock)
    instances: list[Instance] = field(default_factory=list)
    corrupted_users: set = field(default_factory=set)
    corrupted_sensors: set = field(default_factory=set)
    _bit: Optional[int] = None
    _tested: Optional[int] = None

    @classmethod
    def create(cls, n_users: int = 2, n_sensors: int = 2, *, params: CurveParams = P256, seed: Optional[int] = None):
        rng = random.Random(seed)
        dep = Deployment.create([1] * n_users, [1] * n_sensors, params=params, rng=rng)
        return cls(dep, random.Random(rng.getrandbits(64)))

    # --- queries ----------------------------------------------------------

    def execute(self, user: int = 0, sensor: int = 0) -> tuple[int, list[bytes]]:
        """Run an honest session; return its handle and the passive wire trace."""
        out = self.deployment.session(user, sensor, bus=MessageBus(), clock=self.clock)
        self.clock.advance(1)
        inst = Instance(len(self.instances), user, sensor, out)
        self.instances.append(inst)
        return inst.handle, [e.payload for e in out.trace]

    def _instance(self, handle: int) -> Instance:
        if not 0 <= handle < len(self.instances):
            raise QueryOutOfOrder(f"no session instance {handle}")
        return self.instances[handle]

    def reveal(self, handle: int) -> bytes:
        inst = self._instance(handle)
        if inst.outcome.user_key is None:
            raise QueryOutOfOrder("session holds no key")
        inst.revealed = True
        return inst.outcome.user_key

    def send(self, role: str, topic: str, payload: bytes) -> list[bytes]:
        """Deliver attacker bytes to a fresh actor of ``role``; return what it emits."""
        dep = self.deployment
        actor = {"gateway": dep.gateway_actor, "sensor": lambda: dep.sensor_actor(0),
                 "user": lambda: dep.user_actor(0)}[role]()
        bus = MessageBus()
        actor.attach(bus)
        bus.publish(topic, payload, "adversary", self.clock.now())
        replies = []
        for sub in actor.subs:
            while (env := sub.poll()) is not None:
                for _topic, msg in actor.deliver(env, self.clock.now()):
                    replies.append(encode_wire(msg, dep.gateway.params))
        return replies

    def corrupt_user_device(self, user: int) -> dict:
        self.corrupted_users.add(user)
        return corrupt_user_device(self.deployment.users[user])

    def corrupt_sensing_device(self, sensor: int) -> dict:
        self.corrupted_sensors.add(sensor)
        return corrupt_sensing_device(self.deployment.sensors[sensor])

    def corrupt_user_level(self, user: int) -> int:
        u = self.deployment.users[user]
        gw = self.deployment.gateway
        return recover_level(u.card.B_i, u.uid.value, gw.master, gw.l_max)

    def corrupt_sensing_level(self, sensor: int) -> int:
        s = self.deployment.sensors[sensor].creds
        gw = self.deployment.gateway
        return recover_level(s.D_j, s.sid.value, gw.master, gw.l_max)

    def test(self, handle: int) -> bytes:
        """Real key if the hidden bit is 1, random bytes of equal width otherwise."""
        if not self.instances:
            raise QueryOutOfOrder("Test before any session was executed")
        if self._bit is not None:
            raise QueryOutOfOrder("Test already asked in this experiment")
        inst = self._instance(handle)
        if inst.outcome.user_key is None:
            raise QueryOutOfOrder("tested session holds no key")
        self._bit = self.rng.getrandbits(1)
        self._tested = handle
        return inst.outcome.user_key if self._bit else self.rng.randbytes(DIGEST_BYTES)

    def fresh(self, handle: int) -> bool:
        inst = self._instance(handle)
        return not inst.revealed and inst.user not in self.corrupted_users and inst.sensor not in self.corrupted_sensors

    def finish(self, guess: int) -> tuple[bool, bool]:
        """Close the experiment: (guess correct, tested instance was fresh)."""
        if self._bit is None:
            raise QueryOutOfOrder("no Test query in this experiment")
        result = (guess == self._bit, self.fresh(self._tested))
        self._bit, self._tested = None, None
        return result


def oracle(query: OracleQuery, world: RORWorld):
    """Single entry point dispatching an OracleQuery onto the world."""
    k, t = query.kind, query.target
    if k is QueryKind.EXECUTE:
        return world.execute(*(t or (0, 0)))
    if k is QueryKind.REVEAL:
        return world.reveal(t)
    if k is QueryKind.SEND:
        role, topic = t
        return world.send(role, topic, query.payload)
    if k is QueryKind.CORRUPT_USER_DEVICE:
        return world.corrupt_user_device(t)
    if k is QueryKind.CORRUPT_SENSING_DEVICE:
        return world.corrupt_sensing_device(t)
    if k is QueryKind.CORRUPT_USER_LEVEL:
        return world.corrupt_user_level(t)
    if k is QueryKind.CORRUPT_SENSING_LEVEL:
        return world.corrupt_sensing_level(t)
    if k is QueryKind.TEST:
        return world.test(t)
    raise ValueError(k)


# --- distinguishers -------------------------------------------------------

Distinguisher = Callable[[list[bytes], bytes], int]


def trace_hash_distinguisher(trace: list[bytes], response: bytes) -> int:
    """Guess 'real' when the response correlates with a digest of the trace."""
    probe = hashlib.sha256(b"".join(trace)).digest()
    return (probe[0] ^ response[0]) & 1


def temp_field_distinguisher(trace: list[bytes], response: bytes) -> int:
    """Compare the response against hashes of every cleartext digest on the wire."""
    for raw in trace:
        obj = json.loads(raw)
        for v in obj.values():
            if isinstance(v, str) and len(v) == 2 * DIGEST_BYTES:
                if hashlib.sha256(bytes.fromhex(v)).digest() == response:
                    return 1
    return response[-1] & 1


DISTINGUISHERS: dict[str, Distinguisher] = {
    "trace_hash": trace_hash_distinguisher,
    "temp_fields": temp_field_distinguisher,
}


@dataclass
class DistinguisherReport:
    trials: int
    wins: int
    excluded: int
    excluded_wins: int
    sessions: int

    @property
    def success_rate(self) -> float:
        """Success over fresh experiments only."""
        return self.wins / self.trials if self.trials else float("nan")

    @property
    def unfresh_success_rate(self) -> float:
        return self.excluded_wins / self.excluded if self.excluded else float("nan")


def run_distinguisher(distinguisher: Distinguisher, *, trials: int = 10_000, sessions: Optional[int] = None,
                      seed: Optional[int] = None, params: CurveParams = P256,
                      reveal_first: bool = False) -> DistinguisherReport:
    """Empirical Test-query success of a trace-only adversary.

    By default every experiment runs its own honest session. A smaller
    ``sessions`` pool is quicker but reuses keys across experiments, which
    correlates a biased distinguisher's answers and widens the spread.
    With ``reveal_first`` the adversary issues Reveal on the tested instance
    and compares; those experiments are unfresh and reported separately (the
    control run, whose success should be 1).
    """
    sessions = trials if sessions is None else sessions
    world = RORWorld.create(params=params, seed=seed)
    handles = [world.execute(k % 2, k % 2)[0] for k in range(sessions)]
    traces = {h: [e.payload for e in world.instances[h].outcome.trace] for h in handles}
    pick = random.Random(world.rng.getrandbits(64))
    rep = DistinguisherReport(0, 0, 0, 0, sessions)
    for t in range(trials):
        h = handles[t] if sessions == trials else pick.choice(handles)
        known = world.reveal(h) if reveal_first else None
        resp = world.test(h)
        guess = int(resp == known) if reveal_first else distinguisher(traces[h], resp)
        correct, fresh = world.finish(guess)
        if fresh:
            rep.trials += 1
            rep.wins += correct
        else:
            rep.excluded += 1
            rep.excluded_wins += correct
    return rep
