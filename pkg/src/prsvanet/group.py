"""Pairing group, hashing, key derivation and authenticated encryption.

Group A is the source group that messages hash into and that carries
signatures (BLS12-381 G1); group B carries long-term public keys of
vehicles and of the TA (BLS12-381 G2).  Arithmetic is delegated to
RELIC through ``petrelic``; everything above this module sees only the
functions and constants defined here.

Group operations are written multiplicatively: ``a * b`` combines two
elements and ``a ** k`` raises an element to an integer scalar.
"""

from __future__ import annotations

import hashlib
import os
import secrets
from typing import Optional, Union

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from petrelic.multiplicative.pairing import (
    G1,
    G2,
    GT,
    G1Element,
    G2Element,
    GTElement,
)

from .errors import AuthenticationFailure, MalformedElement

ElementA = G1Element
ElementB = G2Element
ElementT = GTElement

Q: int = int(G1.order())

GEN_A: ElementA = G1.generator()
GEN_B: ElementB = G2.generator()

SCALAR_LEN = 32
ELEMENT_A_LEN = 49
ELEMENT_B_LEN = 97
ELEMENT_T_LEN = 384
SYM_KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16

H1_DST = b"PRSB-H1"
H2_DST = b"PRSB-H2"

_BLOCK = hashlib.sha256().block_size
_DIGEST = hashlib.sha256().digest_size


def identity_a() -> ElementA:
    return G1.neutral_element()


def identity_b() -> ElementB:
    return G2.neutral_element()


def identity_t() -> ElementT:
    return GT.neutral_element()


def random_scalar(rng=None) -> int:
    """Uniform scalar in [1, q-1].

    ``rng`` is anything with ``randrange`` (``random.Random`` for seeded
    runs); the default is the OS CSPRNG.
    """
    if rng is None:
        return secrets.randbelow(Q - 1) + 1
    return rng.randrange(1, Q)


def random_bytes(n: int, rng=None) -> bytes:
    if rng is None:
        return os.urandom(n)
    return rng.randbytes(n)


def random_element_a(rng=None) -> ElementA:
    return GEN_A ** random_scalar(rng)


def random_element_b(rng=None) -> ElementB:
    return GEN_B ** random_scalar(rng)


# -- hashing -------------------------------------------------------------

def expand_message_xmd(msg: bytes, dst: bytes, length: int) -> bytes:
    """RFC 9380 expand_message_xmd with SHA-256."""
    ell = -(-length // _DIGEST)
    if ell > 255 or len(dst) > 255 or length > 0xFFFF:
        raise ValueError("expand_message_xmd: requested length too large")
    dst_prime = dst + bytes([len(dst)])
    msg_prime = (bytes(_BLOCK) + msg + length.to_bytes(2, "big")
                 + b"\x00" + dst_prime)
    b0 = hashlib.sha256(msg_prime).digest()
    blocks = [hashlib.sha256(b0 + b"\x01" + dst_prime).digest()]
    for i in range(2, ell + 1):
        prev = bytes(x ^ y for x, y in zip(b0, blocks[-1]))
        blocks.append(hashlib.sha256(prev + bytes([i]) + dst_prime).digest())
    return b"".join(blocks)[:length]


def hash_to_scalar(data: bytes) -> int:
    """Hash arbitrary bytes onto [1, q-1] (48 bytes of XMD output, bias < 2^-128)."""
    wide = int.from_bytes(expand_message_xmd(data, H1_DST, 48), "big")
    return wide % (Q - 1) + 1


def hash_to_group(data: bytes) -> ElementA:
    point = G1.hash_to_point(bytes([len(H2_DST)]) + H2_DST + data)
    if point == identity_a():
        # Unreachable for a sound map; kept so callers never see identity.
        raise MalformedElement("hash_to_group produced the identity")
    return point


def pairing(a: ElementA, b: ElementB) -> ElementT:
    return a.pair(b)


# -- canonical encodings -------------------------------------------------

def encode_scalar(k: int) -> bytes:
    return (k % Q).to_bytes(SCALAR_LEN, "big")


def decode_scalar(data: bytes) -> int:
    if len(data) != SCALAR_LEN:
        raise MalformedElement(f"scalar must be {SCALAR_LEN} bytes, got {len(data)}")
    k = int.from_bytes(data, "big")
    if not 0 < k < Q:
        raise MalformedElement("scalar out of range [1, q-1]")
    return k


def encode_a(x: ElementA) -> bytes:
    raw = x.to_binary()
    return raw if len(raw) == ELEMENT_A_LEN else bytes(ELEMENT_A_LEN)


def encode_b(x: ElementB) -> bytes:
    raw = x.to_binary()
    return raw if len(raw) == ELEMENT_B_LEN else bytes(ELEMENT_B_LEN)


def encode_t(x: ElementT) -> bytes:
    return x.to_binary()


def _decode_point(data, length, cls, identity, name):
    if not isinstance(data, (bytes, bytearray)) or len(data) != length:
        raise MalformedElement(f"{name} encoding must be {length} bytes")
    data = bytes(data)
    if data == bytes(length):
        return identity
    if data[0] not in (2, 3):
        raise MalformedElement(f"{name}: bad compression flag {data[0]:#x}")
    elem = cls.from_binary(data)
    # RELIC reports (but does not raise on) off-curve input; is_valid also
    # performs the prime-order subgroup check.
    if not elem.is_valid() or elem.to_binary() != data:
        raise MalformedElement(f"{name}: not a canonical subgroup element")
    return elem


def decode_a(data: bytes) -> ElementA:
    return _decode_point(data, ELEMENT_A_LEN, G1Element, identity_a(), "ElementA")


def decode_b(data: bytes) -> ElementB:
    return _decode_point(data, ELEMENT_B_LEN, G2Element, identity_b(), "ElementB")


def decode_t(data: bytes) -> ElementT:
    if len(data) != ELEMENT_T_LEN:
        raise MalformedElement(f"ElementT encoding must be {ELEMENT_T_LEN} bytes")
    elem = GTElement.from_binary(bytes(data))
    if elem.to_binary() != bytes(data):
        raise MalformedElement("ElementT: non-canonical encoding")
    return elem


def as_a(x: Union[ElementA, bytes]) -> ElementA:
    return x if isinstance(x, G1Element) else decode_a(x)


def as_b(x: Union[ElementB, bytes]) -> ElementB:
    return x if isinstance(x, G2Element) else decode_b(x)


# -- symmetric layer -----------------------------------------------------

def kdf(shared: ElementA, context: bytes = b"") -> bytes:
    """HKDF-SHA256 over the canonical encoding of a DH shared element."""
    return HKDF(
        algorithm=hashes.SHA256(),
        length=SYM_KEY_LEN,
        salt=b"PRSB-KDF",
        info=context,
    ).derive(encode_a(shared))


def aead_seal(key: bytes, plaintext: bytes, associated: bytes = b"",
              nonce: Optional[bytes] = None) -> bytes:
    """ChaCha20-Poly1305; output is ``nonce || ciphertext || tag``."""
    if nonce is None:
        nonce = os.urandom(NONCE_LEN)
    if len(nonce) != NONCE_LEN:
        raise ValueError("nonce must be 12 bytes")
    return nonce + ChaCha20Poly1305(key).encrypt(nonce, plaintext, associated)


def aead_open(key: bytes, ciphertext: bytes, associated: bytes = b"") -> bytes:
    if len(ciphertext) < NONCE_LEN + TAG_LEN:
        raise AuthenticationFailure("ciphertext too short")
    nonce, body = ciphertext[:NONCE_LEN], ciphertext[NONCE_LEN:]
    try:
        return ChaCha20Poly1305(key).decrypt(nonce, body, associated)
    except InvalidTag:
        raise AuthenticationFailure("AEAD tag mismatch") from None
