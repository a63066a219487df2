import pytest

from prsvanet import group as grp
from prsvanet import scheme
from prsvanet.actors import (
    Reason,
    RevocationList,
    ThresholdPolicy,
    obu_generate,
    rsu_process,
    rsu_sync_revocation,
    rsu_try_broadcast,
    ta_register_vehicle,
    ta_revoke,
    ta_trace,
    vehicle_verify_broadcast,
)
from prsvanet.errors import (
    AuthenticationFailure,
    BadPayloadLength,
    DuplicateKey,
    InconsistentCommitment,
    InvalidProof,
    UnknownKey,
    UnknownRSU,
)
from prsvanet.messages import Envelope, SafetyMessage, open_envelope, seal_envelope
from prsvanet.scheme import Level2Signature

PAYLOAD = b"ice on bridge".ljust(100, b"\x00")


def endorse(net, v, rsu, now=100, payload=PAYLOAD, msg_type=1):
    env = obu_generate(v, msg_type, payload, now, rsu.public, net.rng)
    return rsu_process(rsu, env, now)


# -- obu_generate / rsu_process ----------------------------------------------

def test_generate_then_process_accepts(network):
    rsu, v = network.rsus[0], network.vehicles[0]
    verdict = endorse(network, v, rsu)
    assert verdict.accepted and verdict.reason is None
    assert verdict.endorser == grp.encode_b(v.X)


def test_generate_bad_payload_length(network):
    with pytest.raises(BadPayloadLength):
        obu_generate(network.vehicles[0], 1, bytes(99), 0, network.rsus[0].public, network.rng)


def test_envelope_wrong_rsu_secret(network):
    env = obu_generate(network.vehicles[0], 1, PAYLOAD, 0, network.rsus[0].public, network.rng)
    with pytest.raises(AuthenticationFailure):
        open_envelope(env, network.rsus[0].keys.x + 1)


def test_envelope_for_other_rsu_is_decrypt_failure(make_network):
    net = make_network(n_rsus=2)
    env = obu_generate(net.vehicles[0], 1, PAYLOAD, 0, net.rsus[1].public, net.rng)
    assert rsu_process(net.rsus[0], env, 0).reason is Reason.DECRYPT_FAILURE


def test_message_naming_other_rsu_is_wrong_rsu_key(make_network):
    net = make_network(n_rsus=2)
    v, here, there = net.vehicles[0], net.rsus[0], net.rsus[1]
    m = SafetyMessage(1, PAYLOAD, 50, there.public)
    sig = scheme.sign_level1(v.x, m.to_bytes())
    env = seal_envelope(m, sig, v.X, here.public, net.rng)
    assert rsu_process(here, env, 50).reason is Reason.WRONG_RSU_KEY


def test_duplicate_endorser_rejected_first_kept(network):
    rsu, v = network.rsus[0], network.vehicles[0]
    rsu.policy = ThresholdPolicy(3)
    assert endorse(network, v, rsu, now=10).accepted
    again = endorse(network, v, rsu, now=12)
    assert again.reason is Reason.DUPLICATE_ENDORSER
    assert rsu.duplicates == 1
    (entries,) = rsu.pool.values()
    assert [e.arrival for e in entries] == [10]


def test_stale_and_future_timestamps(network):
    rsu, v = network.rsus[0], network.vehicles[0]
    old = obu_generate(v, 1, PAYLOAD, 0, rsu.public, network.rng)
    assert rsu_process(rsu, old, 301).reason is Reason.STALE_TIMESTAMP
    future = obu_generate(v, 1, PAYLOAD, 1000, rsu.public, network.rng)
    assert rsu_process(rsu, future, 600).reason is Reason.STALE_TIMESTAMP
    edge = obu_generate(v, 1, PAYLOAD, 0, rsu.public, network.rng)
    assert rsu_process(rsu, edge, 300).accepted


def test_forged_signature_is_bad_signature(network):
    rsu, v = network.rsus[0], network.vehicles[0]
    m = SafetyMessage(1, PAYLOAD, 5, rsu.public)
    fake = scheme.Level1Signature(grp.random_element_a(network.rng))
    env = seal_envelope(m, fake, v.X, rsu.public, network.rng)
    assert rsu_process(rsu, env, 5).reason is Reason.BAD_SIGNATURE


def test_unregistered_key_fails_key_check(network, rng):
    rsu = network.rsus[0]
    stranger = scheme.vehicle_keygen(rng, b"nobody")
    assert endorse(network, stranger, rsu).reason is Reason.REVOKED_KEY


def test_tampered_envelope_is_decrypt_failure(network):
    rsu, v = network.rsus[0], network.vehicles[0]
    env = obu_generate(v, 1, PAYLOAD, 5, rsu.public, network.rng)
    ct = bytearray(env.ciphertext)
    ct[40] ^= 1
    assert rsu_process(rsu, Envelope(env.psi, bytes(ct)), 5).reason is Reason.DECRYPT_FAILURE


# -- threshold and broadcast ---------------------------------------------------

def test_threshold_one_broadcasts_immediately(network):
    rsu = network.rsus[0]
    verdict = endorse(network, network.vehicles[0], rsu)
    bc = rsu_try_broadcast(rsu, verdict.endorsement_key, network.rng)
    assert bc is not None
    assert vehicle_verify_broadcast(network.ta.public, bc.message, bc.signature, 100)
    assert verdict.endorsement_key not in rsu.pool


def test_threshold_three(make_network):
    net = make_network(n_vehicles=3, threshold=3)
    rsu = net.rsus[0]
    keys = [endorse(net, v, rsu, now=100 + i).endorsement_key for i, v in enumerate(net.vehicles[:2])]
    assert rsu_try_broadcast(rsu, keys[-1], net.rng) is None
    k3 = endorse(net, net.vehicles[2], rsu, now=103).endorsement_key
    bc = rsu_try_broadcast(rsu, k3, net.rng)
    assert bc is not None
    assert vehicle_verify_broadcast(net.ta.public, bc.message, bc.signature, 104)
    # the earliest endorser's own message is the one that gets re-signed
    assert bc.message.timestamp == 100


def test_per_type_threshold(make_network):
    net = make_network(n_vehicles=2)
    rsu = net.rsus[0]
    rsu.policy = ThresholdPolicy(1, {7: 2})
    k = endorse(net, net.vehicles[0], rsu, msg_type=7).endorsement_key
    assert rsu_try_broadcast(rsu, k, net.rng) is None
    k = endorse(net, net.vehicles[1], rsu, msg_type=7).endorsement_key
    assert rsu_try_broadcast(rsu, k, net.rng) is not None


def test_density_scaled_threshold(make_network):
    net = make_network(n_vehicles=4)
    rsu = net.rsus[0]
    rsu.policy = ThresholdPolicy(1, density_scale=lambda n, seen: max(n, seen // 2))
    other = b"other event".ljust(100, b"\x00")
    for v in net.vehicles[:3]:
        endorse(net, v, rsu, payload=other)
    # 4 vehicles observed -> threshold 2
    k = endorse(net, net.vehicles[3], rsu).endorsement_key
    assert rsu.policy.threshold(1, rsu.observed_vehicles()) == 2
    assert rsu_try_broadcast(rsu, k, net.rng) is None


def test_strict_grouping_requires_identical_bytes(make_network):
    net = make_network(n_vehicles=2)
    rsu = net.rsus[0]
    rsu.policy = ThresholdPolicy(2, strict=True)
    k1 = endorse(net, net.vehicles[0], rsu, now=100).endorsement_key
    k2 = endorse(net, net.vehicles[1], rsu, now=101).endorsement_key
    assert k1 != k2
    assert rsu_try_broadcast(rsu, k2, net.rng) is None
    k3 = endorse(net, net.vehicles[1], rsu, now=100).endorsement_key
    assert k3 == k1


def test_threshold_policy_validation():
    with pytest.raises(ValueError):
        ThresholdPolicy(0)
    with pytest.raises(ValueError):
        ThresholdPolicy(1, {3: 0})


def test_pool_entries_expire(make_network):
    net = make_network(n_vehicles=2, threshold=2, window=50)
    rsu = net.rsus[0]
    endorse(net, net.vehicles[0], rsu, now=0)
    k = endorse(net, net.vehicles[1], rsu, now=60).endorsement_key
    assert rsu_try_broadcast(rsu, k, net.rng) is None
    assert len(rsu.pool[k]) == 1


# -- receiver ------------------------------------------------------------------

def _one_broadcast(net, now=100):
    rsu = net.rsus[0]
    k = endorse(net, net.vehicles[0], rsu, now=now).endorsement_key
    return rsu_try_broadcast(rsu, k, net.rng)


def test_replayed_broadcast_goes_stale(network):
    bc = _one_broadcast(network)
    assert vehicle_verify_broadcast(network.ta.public, bc.message, bc.signature, 100)
    assert not vehicle_verify_broadcast(network.ta.public, bc.message, bc.signature, 401)


def test_swapped_components_rejected(network):
    bc = _one_broadcast(network)
    s = bc.signature
    swapped = Level2Signature(s.sigma2, s.sigma1, s.sigma0)
    assert not vehicle_verify_broadcast(network.ta.public, bc.message, swapped, 100)


def test_receiver_accepts_raw_message_bytes(network):
    bc = _one_broadcast(network)
    assert vehicle_verify_broadcast(network.ta.public, bc.message.to_bytes(), bc.signature, 100)
    assert not vehicle_verify_broadcast(network.ta.public, b"short", bc.signature, 100)


def test_broadcast_carries_no_endorser_key(make_network):
    net = make_network(n_vehicles=3, threshold=3)
    rsu = net.rsus[0]
    for v in net.vehicles:
        k = endorse(net, v, rsu).endorsement_key
    raw = rsu_try_broadcast(rsu, k, net.rng).to_bytes()
    for v in net.vehicles:
        assert grp.encode_b(v.X) not in raw
        assert grp.encode_a(v.Y) not in raw


# -- TA: registration, revocation, tracing ------------------------------------------

def test_registration_distributes_resign_keys(make_network):
    net = make_network(n_rsus=3, n_vehicles=0)
    v = net.add_vehicle(b"late")
    for rsu in net.rsus:
        rsk = rsu.resign_keys[grp.encode_b(v.X)]
        assert scheme.check_resign_key(rsk, net.ta.public)
    assert net.ta.registry[grp.encode_b(v.X)] == b"late"
    # RSUs added afterwards receive the existing table too
    later = net.ta.add_rsu(b"L9", net.rng)
    assert grp.encode_b(v.X) in later.resign_keys


def test_registration_errors(network, rng):
    v = scheme.vehicle_keygen(rng, b"new")
    proof = scheme.make_registration_proof(v, rng)
    with pytest.raises(InvalidProof):
        ta_register_vehicle(network.ta, v.X, v.Y, v.rid, scheme.RegistrationProof(proof.a, proof.b + 1))
    with pytest.raises(InconsistentCommitment):
        ta_register_vehicle(network.ta, v.X, grp.GEN_A ** 5, v.rid, proof)
    ta_register_vehicle(network.ta, v.X, v.Y, v.rid, proof)
    with pytest.raises(DuplicateKey):
        ta_register_vehicle(network.ta, v.X, v.Y, v.rid, proof)


def test_revoke_then_endorse(network):
    rsu, v = network.rsus[0], network.vehicles[0]
    rl = ta_revoke(network.ta, v.X)
    rsu_sync_revocation(rsu, rl)
    assert endorse(network, v, rsu).reason is Reason.REVOKED_KEY
    assert endorse(network, network.vehicles[1], rsu).accepted


def test_revoke_unknown_key(network, rng):
    with pytest.raises(UnknownKey):
        ta_revoke(network.ta, scheme.vehicle_keygen(rng, b"x").X)


def test_revocation_versions_increase(network):
    v1 = ta_revoke(network.ta, network.vehicles[0].X).version
    v2 = ta_revoke(network.ta, network.vehicles[1].X).version
    assert v2 > v1
    rsu = network.rsus[0]
    rsu_sync_revocation(rsu, RevocationList(v2, frozenset()))
    rsu_sync_revocation(rsu, RevocationList(v1, frozenset()))
    assert rsu.revocation.version == v2


def test_trace_honest_broadcast(network):
    bc = _one_broadcast(network)
    assert ta_trace(network.ta, bc.message, bc.signature) == [network.vehicles[0].rid]


def test_trace_all_endorsers(make_network):
    net = make_network(n_vehicles=3, threshold=3)
    rsu = net.rsus[0]
    for i, v in enumerate(net.vehicles):
        k = endorse(net, v, rsu, now=100 + i).endorsement_key
    bc = rsu_try_broadcast(rsu, k, net.rng)
    assert sorted(ta_trace(net.ta, bc.message)) == sorted(v.rid for v in net.vehicles)
    record = rsu.traces[bc.message.digest()]
    assert record.signature == bc.signature


def test_trace_unknown_rsu(network):
    bc = _one_broadcast(network)
    foreign = SafetyMessage(1, PAYLOAD, 1, grp.GEN_A ** 77)
    with pytest.raises(UnknownRSU):
        ta_trace(network.ta, foreign, bc.signature)


def test_trace_never_broadcast(network):
    m = SafetyMessage(1, PAYLOAD, 1, network.rsus[0].public)
    assert ta_trace(network.ta, m) == []
