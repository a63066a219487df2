"""Tagged binary records for keys and protocol objects, hex-wrapped for files.

Record layout: ``kind(1) | canonical element bytes | length-prefixed fields``.
Variable-length fields (RID, pseudo-identity, RSU label) carry a 2-byte
little-endian length prefix.
"""

from __future__ import annotations

import struct
from pathlib import Path

from . import group as grp
from .errors import MalformedElement
from .messages import Broadcast, Envelope
from .scheme import (
    RegistrationProof,
    ReSignKey,
    RsuKeyPair,
    TaKeyPair,
    VehicleKeyPair,
)

TA_SECRET = 0x01
TA_PUBLIC = 0x02
RSU_SECRET = 0x03
RSU_PUBLIC = 0x04
VEHICLE_SECRET = 0x05
VEHICLE_PUBLIC = 0x06
RESIGN_KEY = 0x07
REGISTRATION = 0x08
ENVELOPE = 0x10
BROADCAST = 0x11

KIND_NAMES = {
    TA_SECRET: "ta-secret", TA_PUBLIC: "ta-public",
    RSU_SECRET: "rsu-secret", RSU_PUBLIC: "rsu-public",
    VEHICLE_SECRET: "vehicle-secret", VEHICLE_PUBLIC: "vehicle-public",
    RESIGN_KEY: "resign-key", REGISTRATION: "registration",
    ENVELOPE: "envelope", BROADCAST: "broadcast",
}


def _lp(data: bytes) -> bytes:
    return struct.pack("<H", len(data)) + data


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedElement("record truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def lp(self) -> bytes:
        (n,) = struct.unpack("<H", self.take(2))
        return self.take(n)

    def a(self):
        return grp.decode_a(self.take(grp.ELEMENT_A_LEN))

    def b(self):
        return grp.decode_b(self.take(grp.ELEMENT_B_LEN))

    def scalar(self):
        return grp.decode_scalar(self.take(grp.SCALAR_LEN))

    def done(self):
        if self.pos != len(self.data):
            raise MalformedElement("trailing bytes in record")


def encode(obj, public: bool = False) -> bytes:
    """Serialize a key or protocol object; ``public`` drops secret parts."""
    if isinstance(obj, TaKeyPair):
        if public:
            return bytes([TA_PUBLIC]) + grp.encode_b(obj.X)
        return bytes([TA_SECRET]) + grp.encode_scalar(obj.x) + grp.encode_b(obj.X)
    if isinstance(obj, RsuKeyPair):
        if public:
            return bytes([RSU_PUBLIC]) + grp.encode_a(obj.X) + _lp(obj.label)
        return (bytes([RSU_SECRET]) + grp.encode_scalar(obj.x) + grp.encode_a(obj.X)
                + _lp(obj.label))
    if isinstance(obj, VehicleKeyPair):
        if public:
            return (bytes([VEHICLE_PUBLIC]) + grp.encode_b(obj.X) + grp.encode_a(obj.Y)
                    + _lp(obj.rid))
        return (bytes([VEHICLE_SECRET]) + grp.encode_scalar(obj.x) + grp.encode_b(obj.X)
                + grp.encode_a(obj.Y) + _lp(obj.rid) + _lp(obj.pseudo_id))
    if isinstance(obj, ReSignKey):
        return bytes([RESIGN_KEY]) + grp.encode_a(obj.R) + grp.encode_b(obj.X)
    if isinstance(obj, Envelope):
        return bytes([ENVELOPE]) + obj.to_bytes()
    if isinstance(obj, Broadcast):
        return bytes([BROADCAST]) + obj.to_bytes()
    raise TypeError(f"cannot encode {type(obj).__name__}")


def encode_registration(X, Y, rid: bytes, proof: RegistrationProof) -> bytes:
    return (bytes([REGISTRATION]) + grp.encode_b(X) + grp.encode_a(Y)
            + grp.encode_scalar(proof.a) + proof.b.to_bytes(grp.SCALAR_LEN, "big") + _lp(rid))


def decode(data: bytes):
    """Inverse of :func:`encode`; returns ``(kind, object)``.

    Public vehicle records decode to ``(X, Y, rid)``, public TA/RSU records
    to their element (plus label for RSUs), registrations to
    ``(X, Y, rid, proof)``.
    """
    if not data:
        raise MalformedElement("empty record")
    kind, r = data[0], _Reader(bytes(data[1:]))
    if kind == TA_SECRET:
        x = r.scalar()
        obj = TaKeyPair(x, r.b())
    elif kind == TA_PUBLIC:
        obj = r.b()
    elif kind == RSU_SECRET:
        x = r.scalar()
        X = r.a()
        obj = RsuKeyPair(x, X, r.lp())
    elif kind == RSU_PUBLIC:
        X = r.a()
        obj = (X, r.lp())
    elif kind == VEHICLE_SECRET:
        x = r.scalar()
        X, Y = r.b(), r.a()
        obj = VehicleKeyPair(x, X, Y, r.lp(), r.lp())
    elif kind == VEHICLE_PUBLIC:
        X, Y = r.b(), r.a()
        obj = (X, Y, r.lp())
    elif kind == RESIGN_KEY:
        R = r.a()
        obj = ReSignKey(R, r.b())
    elif kind == REGISTRATION:
        X, Y = r.b(), r.a()
        a = r.scalar()
        b = int.from_bytes(r.take(grp.SCALAR_LEN), "big")
        obj = (X, Y, r.lp(), RegistrationProof(a, b))
    elif kind == ENVELOPE:
        obj = Envelope.from_bytes(r.take(len(r.data)))
    elif kind == BROADCAST:
        obj = Broadcast.from_bytes(r.take(len(r.data)))
    else:
        raise MalformedElement(f"unknown record kind {kind:#x}")
    r.done()
    return kind, obj


def write_record(path, record: bytes) -> None:
    Path(path).write_text(record.hex() + "\n")


def read_record(path, expect=None):
    text = Path(path).read_text().strip()
    try:
        raw = bytes.fromhex(text)
    except ValueError:
        raise MalformedElement(f"{path}: not a hex record") from None
    kind, obj = decode(raw)
    if expect is not None:
        allowed = expect if isinstance(expect, (tuple, set, frozenset)) else (expect,)
        if kind not in allowed:
            want = "/".join(KIND_NAMES[k] for k in allowed)
            raise MalformedElement(f"{path}: expected {want}, found {KIND_NAMES[kind]}")
    return kind, obj
