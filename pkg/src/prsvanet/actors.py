"""TA, RSU and OBU state machines.

Actors own their state and interact only by passing message values:
envelopes go OBU -> RSU, broadcasts go RSU -> vehicles, re-signature keys
and revocation lists go TA -> RSU.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import group as grp
from . import scheme
from .errors import (
    AuthenticationFailure,
    DuplicateKey,
    InconsistentCommitment,
    InvalidProof,
    MalformedElement,
    UnknownKey,
    UnknownRSU,
)
from .messages import (
    Broadcast,
    Envelope,
    SafetyMessage,
    open_envelope,
    seal_envelope,
)
from .scheme import Level1Signature, Level2Signature, ReSignKey, VehicleKeyPair

log = logging.getLogger(__name__)

DEFAULT_WINDOW = 300


class Reason(str, Enum):
    DECRYPT_FAILURE = "decrypt-failure"
    REVOKED_KEY = "revoked-key"
    BAD_SIGNATURE = "bad-signature"
    WRONG_RSU_KEY = "wrong-rsu-key"
    STALE_TIMESTAMP = "stale-timestamp"
    DUPLICATE_ENDORSER = "duplicate-endorser"


@dataclass(frozen=True)
class Verdict:
    reason: Optional[Reason] = None
    endorsement_key: Optional[bytes] = None
    endorser: Optional[bytes] = None

    @property
    def accepted(self) -> bool:
        return self.reason is None


@dataclass(frozen=True)
class RevocationList:
    version: int = 0
    revoked: frozenset = frozenset()

    def __contains__(self, X) -> bool:
        return _key_bytes(X) in self.revoked


@dataclass
class ThresholdPolicy:
    """Required number of distinct endorsers per message type.

    ``density_scale`` receives ``(n, observed)`` where ``observed`` is the
    number of distinct vehicles the RSU heard from inside the freshness
    window, and returns the adjusted threshold.  ``strict`` groups
    endorsements by the exact signed bytes instead of by event content.
    """

    default: int = 1
    per_type: dict = field(default_factory=dict)
    density_scale: Optional[Callable[[int, int], int]] = None
    strict: bool = False

    def __post_init__(self):
        if self.default < 1 or any(n < 1 for n in self.per_type.values()):
            raise ValueError("threshold must be >= 1")

    def threshold(self, msg_type: int, observed: int = 0) -> int:
        n = self.per_type.get(msg_type, self.default)
        if self.density_scale is not None:
            n = self.density_scale(n, observed)
        return max(1, int(n))


@dataclass(frozen=True)
class Endorsement:
    endorser: bytes
    message: SafetyMessage
    signature: Level1Signature
    arrival: int


@dataclass(frozen=True)
class TraceRecord:
    digest: bytes
    message: bytes
    endorsers: tuple
    signature: Level2Signature
    time: int


def _key_bytes(X) -> bytes:
    return X if isinstance(X, (bytes, bytearray)) else grp.encode_b(X)


def is_fresh(timestamp: int, now: int, window: int) -> bool:
    return abs(now - timestamp) <= window


# -- OBU -----------------------------------------------------------------

def obu_generate(keys: VehicleKeyPair, msg_type: int, payload: bytes, now: int,
                 rsu_pub, rng=None) -> Envelope:
    rsu_pub = grp.as_a(rsu_pub)
    message = SafetyMessage(msg_type, payload, now, rsu_pub)
    sig = scheme.sign_level1(keys.x, message.to_bytes())
    return seal_envelope(message, sig, keys.X, rsu_pub, rng)


def vehicle_verify_broadcast(X_ta, message, sig: Level2Signature, now: int,
                             window: int = DEFAULT_WINDOW) -> bool:
    """The whole receiver-side check; nothing but the TA key is consulted."""
    if isinstance(message, SafetyMessage):
        m = message
    else:
        try:
            m = SafetyMessage.from_bytes(message)
        except (MalformedElement, ValueError):
            return False
    if not is_fresh(m.timestamp, now, window):
        return False
    return scheme.verify_level2(X_ta, m.to_bytes(), sig)


class OnBoardUnit:
    def __init__(self, keys: VehicleKeyPair, X_ta, window: int = DEFAULT_WINDOW):
        self.keys = keys
        self.X_ta = X_ta
        self.window = window

    def generate(self, msg_type, payload, now, rsu_pub, rng=None) -> Envelope:
        return obu_generate(self.keys, msg_type, payload, now, rsu_pub, rng)

    def verify(self, broadcast: Broadcast, now: int) -> bool:
        return vehicle_verify_broadcast(self.X_ta, broadcast.message,
                                        broadcast.signature, now, self.window)


# -- RSU -----------------------------------------------------------------

class RoadsideUnit:
    def __init__(self, keys: scheme.RsuKeyPair, X_ta, policy: ThresholdPolicy | None = None,
                 window: int = DEFAULT_WINDOW):
        self.keys = keys
        self.X_ta = X_ta
        self.policy = policy or ThresholdPolicy()
        self.window = window
        self.resign_keys: dict[bytes, ReSignKey] = {}
        self.revocation = RevocationList()
        self.pool: dict[bytes, list[Endorsement]] = {}
        # endorsement key -> {endorser: arrival}; outlives pool consumption
        self._seen: dict[bytes, dict[bytes, int]] = {}
        self.traces: dict[bytes, TraceRecord] = {}
        self.duplicates = 0

    @property
    def public(self):
        return self.keys.X

    def install_resign_key(self, rsk: ReSignKey) -> None:
        self.resign_keys[grp.encode_b(rsk.X)] = rsk

    def sync_revocation(self, rl: RevocationList) -> None:
        if rl.version > self.revocation.version:
            self.revocation = rl

    def _group_key(self, m: SafetyMessage) -> bytes:
        return m.digest() if self.policy.strict else m.endorsement_key()

    def expire(self, now: int) -> None:
        for key in list(self._seen):
            fresh = {x: t for x, t in self._seen[key].items() if now - t <= self.window}
            if fresh:
                self._seen[key] = fresh
            else:
                del self._seen[key]
        for key in list(self.pool):
            fresh = [e for e in self.pool[key] if now - e.arrival <= self.window]
            if fresh:
                self.pool[key] = fresh
            else:
                del self.pool[key]

    def observed_vehicles(self) -> int:
        return len({x for seen in self._seen.values() for x in seen})

    def process(self, env: Envelope, now: int) -> Verdict:
        try:
            m_raw, sig_raw, x_raw = open_envelope(env, self.keys.x)
        except (AuthenticationFailure, MalformedElement):
            return Verdict(Reason.DECRYPT_FAILURE)
        try:
            message = SafetyMessage.from_bytes(m_raw)
            sig = Level1Signature.from_bytes(sig_raw)
            X = grp.decode_b(x_raw)
        except (MalformedElement, ValueError):
            return Verdict(Reason.BAD_SIGNATURE)
        # Unregistered keys fail the same key-validity check as revoked ones.
        if x_raw in self.revocation or x_raw not in self.resign_keys:
            return Verdict(Reason.REVOKED_KEY, endorser=x_raw)
        if not scheme.verify_level1(X, m_raw, sig):
            return Verdict(Reason.BAD_SIGNATURE, endorser=x_raw)
        if message.rsu_pub != self.keys.X:
            return Verdict(Reason.WRONG_RSU_KEY, endorser=x_raw)
        if not is_fresh(message.timestamp, now, self.window):
            return Verdict(Reason.STALE_TIMESTAMP, endorser=x_raw)

        self.expire(now)
        key = self._group_key(message)
        seen = self._seen.setdefault(key, {})
        if x_raw in seen:
            self.duplicates += 1
            return Verdict(Reason.DUPLICATE_ENDORSER, key, x_raw)
        seen[x_raw] = now
        self.pool.setdefault(key, []).append(Endorsement(x_raw, message, sig, now))
        return Verdict(None, key, x_raw)

    def try_broadcast(self, key: bytes, rng=None, now: int | None = None) -> Optional[Broadcast]:
        entries = self.pool.get(key)
        if not entries:
            return None
        n = self.policy.threshold(entries[0].message.msg_type, self.observed_vehicles())
        if len(entries) < n:
            return None
        chosen = min(entries, key=lambda e: e.arrival)
        m_raw = chosen.message.to_bytes()
        sig2 = scheme.resign(self.resign_keys[chosen.endorser], m_raw, chosen.signature, rng)
        digest = chosen.message.digest()
        when = chosen.arrival if now is None else now
        self.traces[digest] = TraceRecord(
            digest, m_raw, tuple(e.endorser for e in entries), sig2, when)
        del self.pool[key]
        log.debug("broadcast with %d endorsers", len(entries))
        return Broadcast(chosen.message, sig2)

    def lookup_trace(self, message) -> list[bytes]:
        m_raw = message.to_bytes() if isinstance(message, SafetyMessage) else bytes(message)
        record = self.traces.get(hashlib.sha256(m_raw).digest())
        return list(record.endorsers) if record else []


def rsu_process(rsu: RoadsideUnit, env: Envelope, now: int) -> Verdict:
    return rsu.process(env, now)


def rsu_try_broadcast(rsu: RoadsideUnit, key: bytes, rng=None) -> Optional[Broadcast]:
    return rsu.try_broadcast(key, rng)


def rsu_sync_revocation(rsu: RoadsideUnit, rl: RevocationList) -> None:
    rsu.sync_revocation(rl)


# -- TA ------------------------------------------------------------------

class TrustedAuthority:
    def __init__(self, rng=None, keys: scheme.TaKeyPair | None = None):
        self.keys = keys or scheme.ta_keygen(rng)
        self.registry: dict[bytes, bytes] = {}
        self.issued: dict[bytes, ReSignKey] = {}
        self.rsus: dict[bytes, RoadsideUnit] = {}
        self.revocation = RevocationList()

    @property
    def public(self):
        return self.keys.X

    def add_rsu(self, label: bytes = b"", rng=None, policy: ThresholdPolicy | None = None,
                window: int = DEFAULT_WINDOW) -> RoadsideUnit:
        rsu = RoadsideUnit(scheme.rsu_keygen(rng, label), self.keys.X, policy, window)
        for rsk in self.issued.values():
            rsu.install_resign_key(rsk)
        rsu.sync_revocation(self.revocation)
        self.rsus[grp.encode_a(rsu.public)] = rsu
        return rsu

    def register_vehicle(self, X, Y, rid: bytes, proof: scheme.RegistrationProof) -> ReSignKey:
        X, Y = grp.as_b(X), grp.as_a(Y)
        x_raw = grp.encode_b(X)
        if x_raw in self.registry:
            raise DuplicateKey("vehicle key already registered")
        if not scheme.verify_registration_proof(X, rid, proof):
            raise InvalidProof("registration proof rejected")
        if not scheme.check_commitment(X, Y):
            raise InconsistentCommitment("Y_i does not match X_i")
        rsk = scheme.make_resign_key(self.keys, X, Y)
        self.registry[x_raw] = rid
        self.issued[x_raw] = rsk
        for rsu in self.rsus.values():
            rsu.install_resign_key(rsk)
        return rsk

    def revoke(self, X) -> RevocationList:
        x_raw = _key_bytes(X)
        if x_raw not in self.registry:
            raise UnknownKey("cannot revoke an unregistered key")
        self.revocation = RevocationList(self.revocation.version + 1,
                                         self.revocation.revoked | {x_raw})
        return self.revocation

    def trace(self, message, sig: Level2Signature | None = None) -> list[bytes]:
        m = message if isinstance(message, SafetyMessage) else SafetyMessage.from_bytes(message)
        rsu = self.rsus.get(grp.encode_a(m.rsu_pub))
        if rsu is None:
            raise UnknownRSU("message names an RSU outside the directory")
        return [self.registry[x] for x in rsu.lookup_trace(m) if x in self.registry]


def ta_register_vehicle(ta: TrustedAuthority, X, Y, rid, proof) -> ReSignKey:
    return ta.register_vehicle(X, Y, rid, proof)


def ta_revoke(ta: TrustedAuthority, X) -> RevocationList:
    return ta.revoke(X)


def ta_trace(ta: TrustedAuthority, message, sig: Level2Signature | None = None) -> list[bytes]:
    return ta.trace(message, sig)


def register(ta: TrustedAuthority, keys: VehicleKeyPair, rng=None) -> ReSignKey:
    """Vehicle-side convenience: build the proof and register in one step."""
    proof = scheme.make_registration_proof(keys, rng)
    return ta.register_vehicle(keys.X, keys.Y, keys.rid, proof)
