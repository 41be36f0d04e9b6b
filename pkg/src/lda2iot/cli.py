"""Command-line entry point: init, register, session, attack, bench.

Exit codes: 0 key agreed (or command succeeded), 2 access denied,
1 any other error. Only key fingerprints are ever printed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .crypto.curve import curve_by_name
from .errors import InvalidConfig, LDAError, UnknownScenario, UnknownUser
from .protocol.setup import gateway_init, register_user, sensor_init, user_init
from .protocol.types import DEFAULT_DELTA_T_MS, DEFAULT_L_MAX
from .runtime.actors import GatewayActor, SensorActor, UserActor, VirtualClock, drive, fingerprint, publish_all
from .runtime.bus import MessageBus
from .runtime.deploy import Deployment, EnrolledSensor, EnrolledUser
from .runtime.store import (
    card_load,
    card_save,
    registry_load_all,
    registry_save,
    sensor_from_record,
    sensor_to_record,
    user_from_record,
    user_to_record,
)

log = logging.getLogger("lda2iot")

EXIT_OK, EXIT_ERROR, EXIT_DENIED = 0, 1, 2
PASSPHRASE_ENV = "LDA2IOT_PASSPHRASE"
FIXED_START_MS = 1_700_000_000_000

CAMPUS_USERS = [("director", 1), ("dean", 2), ("hod", 3), ("faculty", 4), ("clerk", 5)]
CAMPUS_SENSORS = [("director-office", 1), ("dean-office", 2), ("lab", 3), ("canteen", 4), ("parking", 5)] + [
    (f"room-{k:02d}", (k - 1) % 5 + 1) for k in range(6, 51)
]


@dataclass
class DeploymentConfig:
    curve: str = "P-256"
    delta_t: int = DEFAULT_DELTA_T_MS
    l_max: int = DEFAULT_L_MAX
    users: list = field(default_factory=lambda: [list(u) for u in CAMPUS_USERS])
    sensors: list = field(default_factory=lambda: [list(s) for s in CAMPUS_SENSORS])
    seed: Optional[int] = None
    store: str = "deployment.lda"
    transport: str = "inproc"

    def validate(self) -> "DeploymentConfig":
        try:
            curve_by_name(self.curve)
        except Exception as exc:
            raise InvalidConfig(str(exc)) from None
        if self.delta_t < 0 or self.l_max < 1:
            raise InvalidConfig("delta_t must be >= 0 and l_max >= 1")
        names = set()
        for group in (self.users, self.sensors):
            for name, level in group:
                if name in names:
                    raise InvalidConfig(f"duplicate device name {name!r}")
                names.add(name)
                if not isinstance(level, int) or not 1 <= level <= self.l_max:
                    raise InvalidConfig(f"level of {name!r} outside 1..{self.l_max}")
        if self.transport != "inproc" and ":" not in self.transport:
            raise InvalidConfig("transport must be 'inproc' or host:port")
        return self

    @classmethod
    def load(cls, path: Optional[str]) -> "DeploymentConfig":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from None
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise InvalidConfig(f"unknown config fields {sorted(unknown)}")
        return cls(**data)


def _config(args) -> DeploymentConfig:
    cfg = DeploymentConfig.load(args.config)
    for flag, attr in (("store", "store"), ("seed", "seed"), ("delta_t", "delta_t"), ("transport", "transport")):
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, attr, v)
    return cfg.validate()


def _passphrase(args) -> str:
    pw = args.passphrase or os.environ.get(PASSPHRASE_ENV)
    if not pw:
        raise InvalidConfig(f"no store passphrase: pass --passphrase or set {PASSPHRASE_ENV}")
    return pw


def _rng(cfg: DeploymentConfig, salt: int = 0) -> random.Random:
    return random.Random(None if cfg.seed is None else cfg.seed * 1_000_003 + salt)


def _clock(cfg: DeploymentConfig) -> VirtualClock:
    # the wall clock is read only here, and only when no seed pins the run
    return VirtualClock(FIXED_START_MS if cfg.seed is not None else time.time_ns() // 1_000_000)


# --- store helpers --------------------------------------------------------

@dataclass
class Loaded:
    cfg: DeploymentConfig
    gateway: object
    users: dict
    sensors: dict
    levels: dict


def _load(cfg: DeploymentConfig, passphrase: str) -> Loaded:
    if not Path(cfg.store).exists():
        raise InvalidConfig(f"no deployment at {cfg.store}; run init first")
    gw, extra = registry_load_all(cfg.store, passphrase)
    gw.delta_t = cfg.delta_t
    users = {n: user_from_record(r) for n, r in extra["users"].items()}
    sensors = {n: sensor_from_record(r) for n, r in extra["sensors"].items()}
    return Loaded(cfg, gw, users, sensors, extra.get("levels", {}))


def _deployment(ld: Loaded, rng: random.Random) -> Deployment:
    """In-memory deployment with every user registered at its configured level."""
    dep = Deployment(gateway=ld.gateway, rng=rng)
    for name, level in ld.cfg.users:
        creds = ld.users[name]
        pw = rng.randbytes(16)
        dep.users.append(EnrolledUser(creds, register_user(ld.gateway, creds.uid, pw, level, rng), pw, level))
    for name, level in ld.cfg.sensors:
        dep.sensors.append(EnrolledSensor(ld.sensors[name], level))
    return dep


# --- commands -------------------------------------------------------------

def cmd_init(args) -> int:
    cfg = _config(args)
    if cfg.transport != "inproc":
        log.info("transport %s recorded; sessions still run in process", cfg.transport)
    path = Path(cfg.store)
    if path.exists() and not args.force:
        print(f"error: {path} exists (use --force to overwrite)", file=sys.stderr)
        return EXIT_ERROR
    rng = _rng(cfg)
    gw = gateway_init(curve_by_name(cfg.curve), rng, delta_t=cfg.delta_t, l_max=cfg.l_max)
    users = {name: user_to_record(user_init(gw, rng)) for name, _ in cfg.users}
    sensors = {name: sensor_to_record(sensor_init(gw, level, rng)) for name, level in cfg.sensors}
    # the store path is left out so that equal seeds give byte-identical files anywhere
    saved = {k: v for k, v in dataclasses.asdict(cfg).items() if k != "store"}
    extra = {"users": users, "sensors": sensors, "config": saved}
    registry_save(path, gw, _passphrase(args), rng=_rng(cfg, 1), extra=extra)
    print(f"initialized {path}: {len(users)} users, {len(sensors)} sensors, "
          f"{len(users) + len(sensors)} credential records")
    return EXIT_OK


def _card_path(cfg: DeploymentConfig, user: str, given: Optional[str]) -> Path:
    return Path(given) if given else Path(cfg.store).with_name(f"{user}.card")


def cmd_register(args) -> int:
    cfg = _config(args)
    ld = _load(cfg, _passphrase(args))
    if args.user not in ld.users:
        raise UnknownUser(f"no user named {args.user!r} in {cfg.store}")
    level = args.level if args.level is not None else dict(map(tuple, cfg.users))[args.user]
    card = register_user(ld.gateway, ld.users[args.user].uid, args.password.encode(), level, _rng(cfg, 2))
    dest = _card_path(cfg, args.user, args.card)
    card_save(dest, card)
    print(f"smart card for {args.user} written to {dest}")
    return EXIT_OK


def _session_lines(args) -> list[tuple[str, str, str, Optional[str]]]:
    if args.batch:
        rows = []
        for line in Path(args.batch).read_text().splitlines():
            parts = line.split()
            if parts and not parts[0].startswith("#"):
                if len(parts) not in (3, 4):
                    raise InvalidConfig(f"batch line needs: user password sensor [card]: {line!r}")
                rows.append((parts[0], parts[1], parts[2], parts[3] if len(parts) == 4 else None))
        return rows
    if not (args.user and args.password is not None and args.sensor):
        raise InvalidConfig("session needs --user, --password and --sensor (or --batch)")
    return [(args.user, args.password, args.sensor, args.card)]


def cmd_session(args) -> int:
    cfg = _config(args)
    if cfg.transport != "inproc":
        print(f"error: no broker binding for transport {cfg.transport}; use inproc", file=sys.stderr)
        return EXIT_ERROR
    ld = _load(cfg, _passphrase(args))
    rng, clock, bus = _rng(cfg, 3), _clock(cfg), MessageBus()
    gw = GatewayActor(ld.gateway, rng)
    gw.attach(bus)
    started = []
    codes = []
    sensors: dict[str, SensorActor] = {}
    for user, password, sensor, card_path in _session_lines(args):
        if user not in ld.users or sensor not in ld.sensors:
            print(f"{user} -> {sensor}: error: unknown device", file=sys.stderr)
            codes.append(EXIT_ERROR)
            continue
        card = card_load(_card_path(cfg, user, card_path))
        ua = UserActor(ld.users[user], card, ld.users[user].uid, password.encode(), ld.gateway.pub, rng,
                       delta_t=cfg.delta_t)
        if sensor not in sensors:
            sensors[sensor] = SensorActor(ld.sensors[sensor], ld.gateway.pub, rng, delta_t=cfg.delta_t)
            sensors[sensor].attach(bus)
        ua.attach(bus)
        try:
            sid, out = ua.start(ld.sensors[sensor].pub, clock.now())
        except LDAError as exc:
            print(f"{user} -> {sensor}: login failed ({type(exc).__name__}); nothing was sent")
            codes.append(EXIT_ERROR)
            continue
        publish_all(bus, out, ua.role, clock.now(), ld.gateway.params)
        started.append((user, sensor, sid, ua, sensors[sensor]))
    drive([gw, *sensors.values(), *(s[3] for s in started)], bus, clock)
    for user, sensor, sid, ua, sa in started:
        uk, sk = ua.keys.get(sid), sa.keys.get(sid)
        gerr = gw.routes[sid].ctx.error if sid in gw.routes else None
        if uk is not None and uk == sk:
            print(f"{user} -> {sensor}: allowed, key agreed")
            print(f"  user   key fingerprint {fingerprint(uk)}")
            print(f"  sensor key fingerprint {fingerprint(sk)}")
            codes.append(EXIT_OK)
        elif gerr == "AccessDenied":
            print(f"{user} -> {sensor}: denied; gateway sent the 0 signal to user and sensor")
            codes.append(EXIT_DENIED)
        else:
            err = gerr or ua.sessions[sid].error or (sa.sessions.get(sid).error if sid in sa.sessions else None)
            print(f"{user} -> {sensor}: protocol error ({err or 'no reply'})")
            codes.append(EXIT_ERROR)
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_DENIED if EXIT_DENIED in codes else EXIT_OK


def cmd_attack(args) -> int:
    from .adversary.scenarios import SCENARIOS, SUITE, get_scenario, load_scenarios, run_attack

    cfg = _config(args)
    if args.list:
        for name, sc in SCENARIOS.items():
            print(f"{name:32s} {'asserted' if sc.asserted else 'documented'}  {sc.description}")
        return EXIT_OK
    scenarios = []
    if args.scenario_file:
        scenarios += load_scenarios(Path(args.scenario_file).read_text())
    try:
        names = args.names or ([] if scenarios else ["suite"])
        for n in names:
            scenarios += [get_scenario(s) for s in SUITE] if n == "suite" else [get_scenario(n)]
    except UnknownScenario as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_ERROR
    rng = _rng(cfg, 4)
    failed = False
    print(f"{'scenario':32s} {'result':10s} detail")
    for sc in scenarios:
        out = run_attack(sc, params=curve_by_name(cfg.curve), rng=random.Random(rng.getrandbits(64)),
                         level_budget=args.budget)
        if not sc.asserted:
            verdict = "documented"
        else:
            verdict = "pass" if out.passed else "FAIL"
            failed |= not out.passed
        rej = "; ".join(f"{who} rejected {kind}: {err}" for who, kind, err in out.rejections)
        print(f"{sc.name:32s} {verdict:10s} {rej or out.detail or out.protocol_result}")
        if args.export:
            Path(args.export).mkdir(parents=True, exist_ok=True)
            (Path(args.export) / f"{sc.name}.json").write_text(out.export_transcript())
    return EXIT_ERROR if failed else EXIT_OK


def cmd_bench(args) -> int:
    from . import bench

    cfg = _config(args)
    ld = _load(cfg, _passphrase(args))
    rng = _rng(cfg, 5)
    dep = _deployment(ld, rng)
    kind = args.kind
    if kind == "bits":
        out = dep.session(0, 0, clock=_clock(cfg))
        rep = bench.count_bits(out.trace, bench.SizeModel(policy=args.policy))
        text = bench.render_bits(rep, args.baseline)
    elif kind == "time":
        rep = bench.time_primitives(trials=args.trials, params=ld.gateway.params, rng=rng)
        text = bench.render_timing(rep, args.baseline)
    elif kind == "rtd":
        rep = bench.measure_rtd(args.runs, params=ld.gateway.params, seed=cfg.seed)
        text = bench.render_rtd(rep, args.baseline)
    else:
        t0 = time.perf_counter()
        traces = [dep.session(0, 0, clock=_clock(cfg)).trace for _ in range(args.runs)]
        elapsed = time.perf_counter() - t0
        rep = bench.measure_throughput([e for t in traces for e in t], elapsed,
                                       bench.SizeModel(policy=args.policy))
        text = bench.render_throughput(rep, args.baseline)
    print(text)
    dest = Path(args.out or f"bench-{kind}.json")
    dest.write_text(bench.to_json(rep))
    print(f"\nrecord written to {dest}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="deployment config (JSON)")
    common.add_argument("--store", help="registry file path")
    common.add_argument("--seed", type=int, help="fix every random draw and the virtual clock start")
    common.add_argument("--delta-t", type=int, dest="delta_t", help="freshness window in ms")
    common.add_argument("--transport", help="inproc (default) or broker host:port")
    common.add_argument("--passphrase", help=f"store passphrase (or set {PASSPHRASE_ENV})")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lda2iot", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init", parents=[common], help="create gateway and device credentials")
    s.add_argument("--force", action="store_true", help="overwrite an existing store")
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("register", parents=[common], help="issue a smart card")
    s.add_argument("--user", required=True)
    s.add_argument("--password", required=True)
    s.add_argument("--level", type=int)
    s.add_argument("--card", help="card file path")
    s.set_defaults(func=cmd_register)

    s = sub.add_parser("session", parents=[common], help="log in and agree a key with a sensor")
    s.add_argument("--user")
    s.add_argument("--password")
    s.add_argument("--sensor")
    s.add_argument("--card")
    s.add_argument("--batch", help="file of 'user password sensor [card]' lines run concurrently")
    s.set_defaults(func=cmd_session)

    s = sub.add_parser("attack", parents=[common], help="run attack scenarios")
    s.add_argument("names", nargs="*", help="scenario names, or 'suite' (default)")
    s.add_argument("--scenario-file", help="JSON scenario definitions")
    s.add_argument("--list", action="store_true")
    s.add_argument("--budget", type=int, default=1_000_000, help="level-guess budget")
    s.add_argument("--export", help="directory for transcripts")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("bench", parents=[common], help="measurement reports")
    s.add_argument("kind", choices=["bits", "time", "rtd", "throughput"])
    s.add_argument("--baseline", action="store_true", help="print reference rows")
    s.add_argument("--policy", choices=["count-plaintext", "count-wire"], default="count-plaintext")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--runs", type=int, default=100)
    s.add_argument("--out", help="machine-readable record path")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except LDAError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
