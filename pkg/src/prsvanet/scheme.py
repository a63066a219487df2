"""Unidirectional proxy re-signature over an asymmetric pairing.

Vehicles sign with a BLS-style level-1 signature.  The TA hands each RSU a
re-signature key R_i that translates a vehicle's level-1 signature into a
level-2 signature verifiable under the TA key alone.

Placement: H2(M), level-1 signatures, sigma0, sigma2, R_i and RSU keys
live in group A; vehicle keys X_i, the TA key and sigma1 live in group B.
Because R_i must be in group A, each vehicle also publishes Y_i = gA^x_i;
the TA checks e(Y_i, gB) == e(gA, X_i) before deriving R_i from it.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import group as grp
from .errors import InconsistentCommitment, InvalidLevel1Signature
from .group import GEN_A, GEN_B, Q, ElementA, ElementB, pairing


@dataclass(frozen=True)
class TaKeyPair:
    x: int
    X: ElementB


@dataclass(frozen=True)
class RsuKeyPair:
    x: int
    X: ElementA
    label: bytes = b""


@dataclass(frozen=True)
class VehicleKeyPair:
    x: int
    X: ElementB
    Y: ElementA
    rid: bytes
    pseudo_id: bytes = b""

    @property
    def public_bytes(self) -> bytes:
        return grp.encode_b(self.X)


@dataclass(frozen=True)
class RegistrationProof:
    a: int
    b: int


@dataclass(frozen=True)
class ReSignKey:
    R: ElementA
    X: ElementB


@dataclass(frozen=True)
class Level1Signature:
    sigma: ElementA

    def to_bytes(self) -> bytes:
        return grp.encode_a(self.sigma)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Level1Signature":
        return cls(grp.decode_a(data))


@dataclass(frozen=True)
class Level2Signature:
    sigma0: ElementA
    sigma1: ElementB
    sigma2: ElementA

    ENCODED_LEN = 2 * grp.ELEMENT_A_LEN + grp.ELEMENT_B_LEN

    def to_bytes(self) -> bytes:
        return (grp.encode_a(self.sigma0) + grp.encode_b(self.sigma1)
                + grp.encode_a(self.sigma2))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Level2Signature":
        if len(data) != cls.ENCODED_LEN:
            raise grp.MalformedElement("level-2 signature has wrong length")
        la, lb = grp.ELEMENT_A_LEN, grp.ELEMENT_B_LEN
        return cls(grp.decode_a(data[:la]),
                   grp.decode_b(data[la:la + lb]),
                   grp.decode_a(data[la + lb:]))


# -- key generation ------------------------------------------------------

def ta_keygen(rng=None) -> TaKeyPair:
    x = grp.random_scalar(rng)
    return TaKeyPair(x, GEN_B ** x)


def rsu_keygen(rng=None, location_label: bytes = b"") -> RsuKeyPair:
    x = grp.random_scalar(rng)
    return RsuKeyPair(x, GEN_A ** x, location_label)


def vehicle_keygen(rng=None, rid: bytes = b"", pseudo_id: bytes | None = None) -> VehicleKeyPair:
    x = grp.random_scalar(rng)
    if pseudo_id is None:
        pseudo_id = grp.random_bytes(8, rng)
    return VehicleKeyPair(x, GEN_B ** x, GEN_A ** x, rid, pseudo_id)


# -- registration proof (Schnorr-style proof of knowledge of x_i) ---------

def _challenge(commitment: ElementB, rid: bytes) -> int:
    return grp.hash_to_scalar(grp.encode_b(commitment) + rid)


def make_registration_proof(keys: VehicleKeyPair, rng=None) -> RegistrationProof:
    t = grp.random_scalar(rng)
    a = _challenge(GEN_B ** t, keys.rid)
    return RegistrationProof(a, (t + keys.x * a) % Q)


def verify_registration_proof(X, rid: bytes, proof: RegistrationProof) -> bool:
    X = grp.as_b(X)
    if X == grp.identity_b() or not (0 < proof.a < Q and 0 <= proof.b < Q):
        return False
    commitment = (GEN_B ** proof.b) * (X ** (Q - proof.a))
    return proof.a == _challenge(commitment, rid)


def check_commitment(X, Y) -> bool:
    """True iff the group-A companion Y carries the same exponent as X."""
    if grp.as_b(X) == grp.identity_b():
        return False
    return pairing(grp.as_a(Y), GEN_B) == pairing(GEN_A, grp.as_b(X))


def make_resign_key(ta: TaKeyPair, X, Y) -> ReSignKey:
    """R_i = Y_i^(1/x_TA) = gA^(x_i/x_TA)."""
    X, Y = grp.as_b(X), grp.as_a(Y)
    if not check_commitment(X, Y):
        raise InconsistentCommitment("Y_i does not match X_i")
    return ReSignKey(Y ** pow(ta.x, -1, Q), X)


def check_resign_key(rsk: ReSignKey, X_ta) -> bool:
    return pairing(rsk.R, grp.as_b(X_ta)) == pairing(GEN_A, rsk.X)


# -- signing and verification -------------------------------------------

def sign_level1(x: int, message: bytes) -> Level1Signature:
    return Level1Signature(grp.hash_to_group(message) ** x)


def verify_level1(X, message: bytes, sig: Level1Signature) -> bool:
    X = grp.as_b(X)
    if X == grp.identity_b() or sig.sigma == grp.identity_a():
        return False
    return pairing(sig.sigma, GEN_B) == pairing(grp.hash_to_group(message), X)


def resign(rsk: ReSignKey, message: bytes, sig: Level1Signature, rng=None) -> Level2Signature:
    if not verify_level1(rsk.X, message, sig):
        raise InvalidLevel1Signature("level-1 signature does not verify")
    s = grp.random_scalar(rng)
    return Level2Signature(sig.sigma ** s, rsk.X ** s, rsk.R ** s)


def verify_level2(X_ta, message: bytes, sig: Level2Signature) -> bool:
    """Both checks, four pairings, no batching.

    e(sigma0, gB) == e(H2(M), sigma1) and e(gA, sigma1) == e(sigma2, X_TA).
    """
    X_ta = grp.as_b(X_ta)
    # All-identity components satisfy both equations trivially.
    if (sig.sigma0 == grp.identity_a() or sig.sigma2 == grp.identity_a()
            or sig.sigma1 == grp.identity_b()):
        return False
    h = grp.hash_to_group(message)
    first = pairing(sig.sigma0, GEN_B) == pairing(h, sig.sigma1)
    second = pairing(GEN_A, sig.sigma1) == pairing(sig.sigma2, X_ta)
    return first and second
