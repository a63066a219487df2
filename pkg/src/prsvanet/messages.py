"""Bit-exact wire formats for safety messages, envelopes and broadcasts.

All integers are little-endian::

    SafetyMessage = type(2) | payload(100) | timestamp(4) | X_RSU(49)
    Envelope      = psi(49) | ct_len(2) | ct
    Broadcast     = SafetyMessage | sigma0(49) | sigma1(97) | sigma2(49)

The envelope plaintext is ``M | sigma^(1) | X_i`` and the hint ``psi`` is
bound to the ciphertext as associated data.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from . import group as grp
from .errors import BadPayloadLength, MalformedElement
from .group import ElementA, ElementB
from .scheme import Level1Signature, Level2Signature

PAYLOAD_LEN = 100
MESSAGE_LEN = 2 + PAYLOAD_LEN + 4 + grp.ELEMENT_A_LEN
PLAINTEXT_LEN = MESSAGE_LEN + grp.ELEMENT_A_LEN + grp.ELEMENT_B_LEN
ENVELOPE_CONTEXT = b"PRSB-envelope"


@dataclass(frozen=True)
class SafetyMessage:
    msg_type: int
    payload: bytes
    timestamp: int
    rsu_pub: ElementA

    def __post_init__(self):
        if len(self.payload) != PAYLOAD_LEN:
            raise BadPayloadLength(
                f"payload must be exactly {PAYLOAD_LEN} bytes, got {len(self.payload)}")
        if not 0 <= self.msg_type <= 0xFFFF:
            raise ValueError("msg_type must fit in 2 bytes")
        if not 0 <= self.timestamp <= 0xFFFFFFFF:
            raise ValueError("timestamp must fit in 4 bytes")

    def to_bytes(self) -> bytes:
        return (struct.pack("<H", self.msg_type) + self.payload
                + struct.pack("<I", self.timestamp) + grp.encode_a(self.rsu_pub))

    @classmethod
    def from_bytes(cls, data: bytes) -> "SafetyMessage":
        if len(data) != MESSAGE_LEN:
            raise MalformedElement(f"safety message must be {MESSAGE_LEN} bytes")
        (msg_type,) = struct.unpack_from("<H", data, 0)
        payload = data[2:2 + PAYLOAD_LEN]
        (ts,) = struct.unpack_from("<I", data, 2 + PAYLOAD_LEN)
        rsu_pub = grp.decode_a(data[6 + PAYLOAD_LEN:])
        return cls(msg_type, bytes(payload), ts, rsu_pub)

    def endorsement_key(self) -> bytes:
        """Grouping key for threshold counting; the timestamp is excluded."""
        return hashlib.sha256(struct.pack("<H", self.msg_type) + self.payload
                              + grp.encode_a(self.rsu_pub)).digest()

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


def pad_payload(data: bytes) -> bytes:
    """Zero-pad to the fixed payload size; longer input is an error."""
    if len(data) > PAYLOAD_LEN:
        raise BadPayloadLength(f"payload longer than {PAYLOAD_LEN} bytes")
    return data + bytes(PAYLOAD_LEN - len(data))


@dataclass(frozen=True)
class Envelope:
    psi: ElementA
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        return grp.encode_a(self.psi) + struct.pack("<H", len(self.ciphertext)) + self.ciphertext

    @classmethod
    def from_bytes(cls, data: bytes) -> "Envelope":
        la = grp.ELEMENT_A_LEN
        if len(data) < la + 2:
            raise MalformedElement("envelope truncated")
        (n,) = struct.unpack_from("<H", data, la)
        if len(data) != la + 2 + n:
            raise MalformedElement("envelope length field mismatch")
        return cls(grp.decode_a(data[:la]), bytes(data[la + 2:]))

    def __len__(self):
        return grp.ELEMENT_A_LEN + 2 + len(self.ciphertext)


def seal_envelope(message: SafetyMessage, sig: Level1Signature, X: ElementB,
                  rsu_pub: ElementA, rng=None) -> Envelope:
    """Encrypt ``(M, sigma^(1), X_i)`` to an RSU under an ephemeral DH key."""
    r = grp.random_scalar(rng)
    psi = grp.GEN_A ** r
    key = grp.kdf(rsu_pub ** r, ENVELOPE_CONTEXT)
    plaintext = message.to_bytes() + sig.to_bytes() + grp.encode_b(X)
    nonce = grp.random_bytes(grp.NONCE_LEN, rng)
    return Envelope(psi, grp.aead_seal(key, plaintext, grp.encode_a(psi), nonce))


def open_envelope(env: Envelope, rsu_secret: int) -> tuple[bytes, bytes, bytes]:
    """Return raw ``(M, sigma^(1), X_i)`` bytes; raises AuthenticationFailure."""
    key = grp.kdf(env.psi ** rsu_secret, ENVELOPE_CONTEXT)
    plaintext = grp.aead_open(key, env.ciphertext, grp.encode_a(env.psi))
    if len(plaintext) != PLAINTEXT_LEN:
        raise MalformedElement("envelope plaintext has wrong length")
    m_end = MESSAGE_LEN
    s_end = m_end + grp.ELEMENT_A_LEN
    return plaintext[:m_end], plaintext[m_end:s_end], plaintext[s_end:]


@dataclass(frozen=True)
class Broadcast:
    message: SafetyMessage
    signature: Level2Signature

    def to_bytes(self) -> bytes:
        return self.message.to_bytes() + self.signature.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Broadcast":
        if len(data) != MESSAGE_LEN + Level2Signature.ENCODED_LEN:
            raise MalformedElement("broadcast has wrong length")
        return cls(SafetyMessage.from_bytes(data[:MESSAGE_LEN]),
                   Level2Signature.from_bytes(data[MESSAGE_LEN:]))


BROADCAST_LEN = MESSAGE_LEN + Level2Signature.ENCODED_LEN
ENVELOPE_LEN = grp.ELEMENT_A_LEN + 2 + grp.NONCE_LEN + PLAINTEXT_LEN + grp.TAG_LEN
