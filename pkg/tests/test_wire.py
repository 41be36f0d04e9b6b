import json

import pytest
from flow import honest_flow
from hypothesis import given
from hypothesis import strategies as st

from lda2iot.crypto import P256
from lda2iot.errors import FieldWidthMismatch, MalformedWire, UnknownMessageTag, WireError
from lda2iot.protocol import Abort, RegistrationRequest
from lda2iot.runtime import MessageBus, VirtualClock, decode_wire, encode_wire, run_session


@pytest.fixture
def messages(dep):
    f = honest_flow(dep)
    return [f.msgs[k] for k in range(1, 8)] + [Abort(t=123), RegistrationRequest(uid=b"\x07" * 20)]


def test_round_trip_every_variant(messages):
    for m in messages:
        blob = encode_wire(m)
        assert decode_wire(blob) == m
        assert encode_wire(decode_wire(blob)) == blob


def test_encoding_is_canonical(messages):
    for m in messages:
        blob = encode_wire(m)
        obj = json.loads(blob)
        assert obj["type"] == m.kind
        assert blob == json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
        for v in obj.values():
            if isinstance(v, str) and v != obj["type"]:
                assert v == v.lower()


def test_abort_code_is_numeric_zero():
    obj = json.loads(encode_wire(Abort(t=5)))
    assert obj == {"type": "abort", "code": 0, "t": 5}
    with pytest.raises(MalformedWire):
        decode_wire(b'{"code":1,"t":5,"type":"abort"}')


def test_decode_errors(messages):
    blob = encode_wire(messages[0])
    with pytest.raises(MalformedWire):
        decode_wire(blob[:-7])
    with pytest.raises(UnknownMessageTag):
        decode_wire(b'{"type":"msg9","t":1}')
    with pytest.raises(FieldWidthMismatch):
        decode_wire(json.dumps({"type": "reg_request", "uid": "00" * 19}).encode())
    with pytest.raises(FieldWidthMismatch):
        decode_wire(json.dumps({"type": "msg2", "temp1": "ab" * 31, "t2": 1}).encode())
    with pytest.raises(MalformedWire):
        decode_wire(json.dumps({"type": "msg2", "temp1": "zz" * 32, "t2": 1}).encode())
    with pytest.raises(MalformedWire):
        decode_wire(json.dumps({"type": "msg2", "temp1": "ab" * 32, "t2": 1, "extra": 0}).encode())
    with pytest.raises(MalformedWire):
        decode_wire(json.dumps({"type": "msg2", "temp1": "ab" * 32, "t2": -1}).encode())
    with pytest.raises(MalformedWire):
        decode_wire(b"[1,2,3]")


def test_trace_replays_through_decoder(dep):
    out = run_session(dep.user_actor(0), dep.gateway_actor(), dep.sensor_actor(0), MessageBus(), VirtualClock())
    decoded = [decode_wire(e.payload, P256) for e in out.trace]
    assert [m.kind for m in decoded] == [f"msg{k}" for k in range(1, 8)]
    assert [encode_wire(m) for m in decoded] == [e.payload for e in out.trace]


@given(st.binary(max_size=200))
def test_decoder_only_raises_wire_errors(data):
    try:
        decode_wire(data)
    except WireError:
        pass


@given(st.dictionaries(st.sampled_from(["type", "t", "code", "uid", "temp1", "t2"]),
                       st.one_of(st.integers(), st.text(max_size=8), st.none()), max_size=4))
def test_decoder_survives_structured_garbage(obj):
    try:
        decode_wire(json.dumps(obj).encode())
    except WireError:
        pass
