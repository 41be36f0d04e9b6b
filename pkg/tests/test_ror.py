import json

import pytest

from lda2iot.adversary import DISTINGUISHERS, OracleQuery, QueryKind, RORWorld, oracle, run_distinguisher
from lda2iot.errors import QueryOutOfOrder
from lda2iot.runtime import TopicScheme


@pytest.fixture
def world():
    return RORWorld.create(seed=8)


def test_execute_gives_clean_trace(world):
    h, trace = oracle(OracleQuery(QueryKind.EXECUTE, (0, 0)), world)
    assert [json.loads(p)["type"] for p in trace] == [f"msg{k}" for k in range(1, 8)]
    dep = world.deployment
    key = world.instances[h].outcome.user_key
    blob = b"".join(trace)
    for secret in (dep.users[0].uid.value, dep.sensors[0].creds.sid.value, dep.gateway.master, key):
        assert secret not in blob and secret.hex().encode() not in blob


def test_test_before_execute(world):
    with pytest.raises(QueryOutOfOrder):
        world.test(0)
    with pytest.raises(QueryOutOfOrder):
        world.finish(1)


def test_single_test_per_experiment(world):
    h, _ = world.execute()
    world.test(h)
    with pytest.raises(QueryOutOfOrder):
        world.test(h)
    world.finish(0)
    world.test(h)  # a new experiment may test again


def test_response_width_hides_bit(world):
    h, _ = world.execute()
    widths = set()
    for _ in range(20):
        widths.add(len(world.test(h)))
        world.finish(0)
    assert widths == {32}


def test_reveal_marks_unfresh(world):
    h, _ = world.execute()
    assert world.fresh(h)
    key = oracle(OracleQuery(QueryKind.REVEAL, h), world)
    assert not world.fresh(h)
    resp = world.test(h)
    correct, fresh = world.finish(int(resp == key))
    assert correct and not fresh


def test_corruption_marks_unfresh(world):
    h0, _ = world.execute(0, 0)
    h1, _ = world.execute(1, 1)
    dump = oracle(OracleQuery(QueryKind.CORRUPT_USER_DEVICE, 0), world)
    assert "RU_i" in dump
    assert not world.fresh(h0) and world.fresh(h1)
    oracle(OracleQuery(QueryKind.CORRUPT_SENSING_DEVICE, 1), world)
    assert not world.fresh(h1)
    assert oracle(OracleQuery(QueryKind.CORRUPT_USER_LEVEL, 0), world) == 1
    assert oracle(OracleQuery(QueryKind.CORRUPT_SENSING_LEVEL, 1), world) == 1


def test_send_query(world):
    h, trace = world.execute()
    sid = world.instances[h].outcome.session
    replies = oracle(OracleQuery(QueryKind.SEND, ("gateway", TopicScheme().u2g(sid)), trace[0]), world)
    # a replayed Message 1 is too old by now or verifies to a Message 2; either way no secret leaks
    assert all(json.loads(r)["type"] in ("msg2", "abort") for r in replies)


def test_distinguisher_smoke():
    for name, fn in DISTINGUISHERS.items():
        rep = run_distinguisher(fn, trials=200, seed=1)
        assert rep.trials == 200 and 0.35 < rep.success_rate < 0.65, name


def test_control_with_reveal_always_wins():
    rep = run_distinguisher(DISTINGUISHERS["trace_hash"], trials=50, seed=2, reveal_first=True)
    assert rep.trials == 0 and rep.excluded == 50 and rep.unfresh_success_rate == 1.0
