"""Closed-form storage, communication and verification-time comparisons.

All arithmetic is exact (``fractions.Fraction``), so values such as
3 * 4.5 + 11 * 0.6 come out as exactly 201/10.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .errors import UnsupportedProtocol


class ProtocolId(str, Enum):
    LAB = "LAB"
    GSB1 = "GSB1"
    GSB2 = "GSB2"
    GSB3 = "GSB3"
    RSUB = "RSUB"
    PRSB = "PRSB"


GSB = (ProtocolId.GSB1, ProtocolId.GSB2, ProtocolId.GSB3)


@dataclass(frozen=True)
class CostConstants:
    n_okey: int = 10**4
    n_obu: int = 10**7
    n_rsu: int = 10**4
    n_rkey: int = 10**4
    t_pmul: Fraction = Fraction(3, 5)
    t_pair: Fraction = Fraction(9, 2)

    def __post_init__(self):
        for name in ("n_okey", "n_obu", "n_rsu", "n_rkey", "t_pmul", "t_pair"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULTS = CostConstants()


def _pid(p) -> ProtocolId:
    return p if isinstance(p, ProtocolId) else ProtocolId(str(p).upper())


def storage_units(p, m: int, c: CostConstants = DEFAULTS) -> int:
    """OBU storage units with ``m`` revoked OBUs."""
    p = _pid(p)
    if m < 0:
        raise ValueError("m must be >= 0")
    if p is ProtocolId.LAB:
        return (m + 1) * c.n_okey
    if p in GSB:
        return m + 1
    return 2


# Per-message overhead for a single message; RSUB amortises its 70-byte
# key-generation cost over the k messages sharing one anonymous key.
_SINGLE = {
    ProtocolId.LAB: 181,
    ProtocolId.GSB1: 197,
    ProtocolId.GSB3: 133,
    ProtocolId.PRSB: 2 + 20 + 20 + 20 + 20,
}


def per_message_bytes(p, k: int = 1, n_ring: int = 1) -> Fraction:
    p = _pid(p)
    if p is ProtocolId.GSB2:
        return Fraction(60 * n_ring + 60)
    if p is ProtocolId.RSUB:
        return Fraction(70, k) + 40 + 147
    return Fraction(_SINGLE[p])


def comm_overhead_bytes(p, k: int = 1, n_ring: int = 1) -> int:
    """Total cryptographic overhead for sending ``k`` messages."""
    if k < 1 or n_ring < 1:
        raise ValueError("k and n_ring must be >= 1")
    total = per_message_bytes(p, k, n_ring) * k
    assert total.denominator == 1
    return int(total)


def comp_time_ms(p, m: int = 0, c: CostConstants = DEFAULTS) -> Fraction:
    """Receiver-side verification time for one message."""
    p = _pid(p)
    if m < 0:
        raise ValueError("m must be >= 0")
    if p is ProtocolId.PRSB:
        return 4 * c.t_pair
    if p is ProtocolId.RSUB:
        return 3 * c.t_pair + 11 * c.t_pmul
    if p is ProtocolId.GSB1:
        return 6 * c.t_pmul + (4 + m) * c.t_pair
    raise UnsupportedProtocol(f"no computation-time formula for {p.value}")


def cost_ratio(numerator, denominator, m: int = 0, c: CostConstants = DEFAULTS) -> Fraction:
    return comp_time_ms(numerator, m, c) / comp_time_ms(denominator, m, c)


# -- table / figure emission ---------------------------------------------

def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else repr(float(x))
    return str(x)


def fig2_rows(ms: Iterable[int], c: CostConstants = DEFAULTS):
    for m in ms:
        yield {"m": m,
               "LAB": storage_units(ProtocolId.LAB, m, c),
               "GSB": storage_units(ProtocolId.GSB1, m, c),
               "RSUB": storage_units(ProtocolId.RSUB, m, c),
               "PRSB": storage_units(ProtocolId.PRSB, m, c)}


def fig3_rows(ms: Iterable[int], c: CostConstants = DEFAULTS):
    for m in ms:
        yield {"m": m,
               "T_PG": cost_ratio(ProtocolId.PRSB, ProtocolId.GSB1, m, c),
               "T_RG": cost_ratio(ProtocolId.RSUB, ProtocolId.GSB1, m, c)}


def fig5_rows(ks: Iterable[int], n_ring: int = 2):
    for k in ks:
        row = {"k": k}
        for p in ProtocolId:
            row[p.value] = comm_overhead_bytes(p, k, n_ring)
        yield row


TABLE5_K_FORMULAS = {
    ProtocolId.LAB: "181k",
    ProtocolId.GSB1: "197k",
    ProtocolId.GSB2: "(60n+60)k",
    ProtocolId.GSB3: "133k",
    ProtocolId.RSUB: "70+187k",
    ProtocolId.PRSB: "82k",
}


def table5_rows(n_ring: int = 2):
    for p in ProtocolId:
        yield {"protocol": p.value,
               "single_message_bytes": comm_overhead_bytes(p, 1, n_ring),
               "k_messages": TABLE5_K_FORMULAS[p]}


FIG_COLUMNS = {
    "2": ["m", "LAB", "GSB", "RSUB", "PRSB"],
    "3": ["m", "T_PG", "T_RG"],
    "5": ["k"] + [p.value for p in ProtocolId],
    "table5": ["protocol", "single_message_bytes", "k_messages"],
}


def to_csv(rows, columns) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_num(row[col]) for col in columns])
    return out.getvalue()


def emit_tables(m_range: Iterable[int] = range(0, 101), k_range: Iterable[int] = range(1, 61),
                c: CostConstants = DEFAULTS, n_ring: int = 2) -> dict[str, str]:
    """CSV text for each dataset, keyed by its CLI id."""
    m_range, k_range = list(m_range), list(k_range)
    if not m_range or not k_range:
        raise ValueError("ranges must be non-empty")
    return {
        "2": to_csv(fig2_rows(m_range, c), FIG_COLUMNS["2"]),
        "3": to_csv(fig3_rows(m_range, c), FIG_COLUMNS["3"]),
        "5": to_csv(fig5_rows(k_range, n_ring), FIG_COLUMNS["5"]),
        "table5": to_csv(table5_rows(n_ring), FIG_COLUMNS["table5"]),
    }
