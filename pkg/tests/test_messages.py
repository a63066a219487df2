import struct

import pytest
from hypothesis import given, settings, strategies as st

from prsvanet import group as grp
from prsvanet import records, scheme
from prsvanet.actors import obu_generate
from prsvanet.errors import AuthenticationFailure, BadPayloadLength, MalformedElement
from prsvanet.messages import (
    BROADCAST_LEN,
    ENVELOPE_LEN,
    MESSAGE_LEN,
    Broadcast,
    Envelope,
    SafetyMessage,
    open_envelope,
    pad_payload,
)

RSU_PUB = grp.GEN_A ** 4242


def test_message_layout_is_bit_exact():
    m = SafetyMessage(0x0102, bytes(range(100)), 0x0A0B0C0D, RSU_PUB)
    raw = m.to_bytes()
    assert len(raw) == MESSAGE_LEN == 155
    assert raw[:2] == b"\x02\x01"
    assert raw[2:102] == bytes(range(100))
    assert raw[102:106] == b"\x0d\x0c\x0b\x0a"
    assert raw[106:] == grp.encode_a(RSU_PUB)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 0xFFFF), st.binary(min_size=100, max_size=100), st.integers(0, 2**32 - 1))
def test_message_roundtrip_property(t, payload, ts):
    m = SafetyMessage(t, payload, ts, RSU_PUB)
    assert SafetyMessage.from_bytes(m.to_bytes()) == m


@pytest.mark.parametrize("n", [0, 99, 101])
def test_payload_length_enforced(n):
    with pytest.raises(BadPayloadLength):
        SafetyMessage(1, bytes(n), 0, RSU_PUB)


def test_pad_payload():
    assert pad_payload(b"ab") == b"ab" + bytes(98)
    with pytest.raises(BadPayloadLength):
        pad_payload(bytes(101))


def test_endorsement_key_ignores_timestamp_only():
    a = SafetyMessage(1, bytes(100), 10, RSU_PUB)
    assert a.endorsement_key() == SafetyMessage(1, bytes(100), 99, RSU_PUB).endorsement_key()
    assert a.endorsement_key() != SafetyMessage(2, bytes(100), 10, RSU_PUB).endorsement_key()
    assert a.endorsement_key() != SafetyMessage(1, b"\x01" + bytes(99), 10, RSU_PUB).endorsement_key()
    assert a.digest() != SafetyMessage(1, bytes(100), 99, RSU_PUB).digest()


def test_envelope_layout_and_roundtrip(vehicle, rng):
    x_rsu = grp.random_scalar(rng)
    env = obu_generate(vehicle, 1, bytes(100), 5, grp.GEN_A ** x_rsu, rng)
    raw = env.to_bytes()
    assert len(raw) == len(env) == ENVELOPE_LEN
    (ct_len,) = struct.unpack_from("<H", raw, 49)
    assert ct_len == len(raw) - 51
    assert Envelope.from_bytes(raw) == env
    m_raw, sig_raw, x_raw = open_envelope(env, x_rsu)
    assert x_raw == grp.encode_b(vehicle.X)
    assert scheme.verify_level1(vehicle.X, m_raw, scheme.Level1Signature.from_bytes(sig_raw))


def test_envelope_bad_length_field(vehicle, rng):
    raw = obu_generate(vehicle, 1, bytes(100), 5, RSU_PUB, rng).to_bytes()
    with pytest.raises(MalformedElement):
        Envelope.from_bytes(raw[:-1])


def test_envelope_hint_is_authenticated(vehicle, rng):
    x_rsu = grp.random_scalar(rng)
    env = obu_generate(vehicle, 1, bytes(100), 5, grp.GEN_A ** x_rsu, rng)
    with pytest.raises(AuthenticationFailure):
        open_envelope(Envelope(env.psi * grp.GEN_A, env.ciphertext), x_rsu)


def test_broadcast_layout(ta_keys, vehicle, rsk, rng):
    m = SafetyMessage(3, bytes(100), 7, RSU_PUB)
    sig2 = scheme.resign(rsk, m.to_bytes(), scheme.sign_level1(vehicle.x, m.to_bytes()), rng)
    bc = Broadcast(m, sig2)
    raw = bc.to_bytes()
    assert len(raw) == BROADCAST_LEN == 155 + 49 + 97 + 49
    assert raw[:155] == m.to_bytes()
    assert raw[155:204] == grp.encode_a(sig2.sigma0)
    assert raw[204:301] == grp.encode_b(sig2.sigma1)
    assert raw[301:] == grp.encode_a(sig2.sigma2)
    assert Broadcast.from_bytes(raw) == bc


# -- key records -------------------------------------------------------------

def test_key_records_roundtrip(rng, tmp_path):
    ta = scheme.ta_keygen(rng)
    rsu = scheme.rsu_keygen(rng, b"junction-7")
    v = scheme.vehicle_keygen(rng, b"RID-42", b"pseudo")
    rsk = scheme.make_resign_key(ta, v.X, v.Y)
    for obj in (ta, rsu, v, rsk):
        kind, back = records.decode(records.encode(obj))
        assert back == obj
        path = tmp_path / "rec"
        records.write_record(path, records.encode(obj))
        assert records.read_record(path)[1] == obj
    assert records.decode(records.encode(ta, public=True)) == (records.TA_PUBLIC, ta.X)
    assert records.decode(records.encode(rsu, public=True))[1] == (rsu.X, b"junction-7")
    assert records.decode(records.encode(v, public=True))[1] == (v.X, v.Y, b"RID-42")


def test_record_kind_byte_and_layout(rng):
    v = scheme.vehicle_keygen(rng, b"AB", b"C")
    raw = records.encode(v)
    assert raw[0] == records.VEHICLE_SECRET
    assert raw[1:33] == grp.encode_scalar(v.x)
    assert raw[33:130] == grp.encode_b(v.X)
    assert raw[130:179] == grp.encode_a(v.Y)
    assert raw[179:] == b"\x02\x00AB\x01\x00C"


def test_registration_record_roundtrip(vehicle, rng):
    proof = scheme.make_registration_proof(vehicle, rng)
    kind, (X, Y, rid, back) = records.decode(
        records.encode_registration(vehicle.X, vehicle.Y, vehicle.rid, proof))
    assert kind == records.REGISTRATION
    assert (X, Y, rid, back) == (vehicle.X, vehicle.Y, vehicle.rid, proof)


def test_record_rejects_trailing_and_unknown(rng):
    raw = records.encode(scheme.ta_keygen(rng))
    with pytest.raises(MalformedElement):
        records.decode(raw + b"\x00")
    with pytest.raises(MalformedElement):
        records.decode(b"\x7f" + raw[1:])


def test_read_record_kind_check(rng, tmp_path):
    path = tmp_path / "ta.key"
    records.write_record(path, records.encode(scheme.ta_keygen(rng)))
    with pytest.raises(MalformedElement, match="expected rsu-secret"):
        records.read_record(path, records.RSU_SECRET)
