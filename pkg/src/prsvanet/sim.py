"""Deterministic discrete-event driver for TA / RSU / OBU scenarios.

Time is an integer-second virtual clock.  Mobility is reduced to a
schedule saying which RSU each vehicle talks to: vehicle ``i`` is attached
to RSU ``(i + t // dwell) % num_rsus``.  Every ``event_interval`` seconds
each RSU area sees one traffic event, and every vehicle attached to it
endorses that event after a random delay of up to ``jitter`` seconds.

All randomness flows from ``Scenario.seed``; the same scenario always
produces the same counters.  Wall-clock timings are collected only when
asked for, since they can never be reproducible.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import random
import statistics
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import group as grp
from . import scheme
from .actors import (
    DEFAULT_WINDOW,
    Reason,
    ThresholdPolicy,
    TrustedAuthority,
    obu_generate,
    register,
    vehicle_verify_broadcast,
)
from .errors import ConfigError, UnknownAdversaryKind
from .messages import (
    BROADCAST_LEN,
    PAYLOAD_LEN,
    Envelope,
    SafetyMessage,
    seal_envelope,
)

ADVERSARY_KINDS = ("replay", "forge", "sybil", "revoked-sender")
OUTCOMES = ("accepted",) + tuple(r.value for r in Reason)

# Event priorities inside one tick: TA actions before deliveries.
_PRIO_ADMIN = 0
_PRIO_DELIVER = 1


@dataclass
class AdversarySpec:
    kind: str
    rate: float = 1.0
    target: int = 0
    start: int = 0
    stop: Optional[int] = None
    limit: Optional[int] = None
    count: int = 1
    delay: Optional[int] = None

    @classmethod
    def from_dict(cls, d: dict) -> "AdversarySpec":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown adversary fields: {sorted(unknown)}")
        return cls(**known)


@dataclass
class Scenario:
    seed: int = 0
    num_vehicles: int = 10
    num_rsus: int = 1
    duration: int = 60
    event_interval: int = 10
    jitter: int = 2
    dwell: int = 30
    msg_types: dict = field(default_factory=lambda: {1: 1.0})
    threshold: int = 1
    per_type_threshold: dict = field(default_factory=dict)
    window: int = DEFAULT_WINDOW
    strict: bool = False
    receivers: int = 1
    adversaries: list = field(default_factory=list)
    expect_broadcasts: bool = False

    def __post_init__(self):
        self.msg_types = {int(k): float(v) for k, v in self.msg_types.items()}
        self.per_type_threshold = {int(k): int(v) for k, v in self.per_type_threshold.items()}
        self.adversaries = [a if isinstance(a, AdversarySpec) else AdversarySpec.from_dict(a)
                            for a in self.adversaries]

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"bad scenario file: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def policy(self) -> ThresholdPolicy:
        return ThresholdPolicy(self.threshold, dict(self.per_type_threshold), strict=self.strict)

    def validate(self) -> None:
        positive = ("num_vehicles", "num_rsus", "duration", "event_interval",
                    "dwell", "threshold", "window")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.jitter < 0 or self.receivers < 0:
            raise ConfigError("jitter and receivers must be >= 0")
        if not self.msg_types or any(w < 0 for w in self.msg_types.values()) \
                or sum(self.msg_types.values()) <= 0:
            raise ConfigError("msg_types needs at least one positive weight")
        if any(not 0 <= t <= 0xFFFF for t in self.msg_types):
            raise ConfigError("msg_type ids must fit in 2 bytes")
        if any(n < 1 for n in self.per_type_threshold.values()):
            raise ConfigError("thresholds must be >= 1")
        for adv in self.adversaries:
            if adv.kind not in ADVERSARY_KINDS:
                raise UnknownAdversaryKind(adv.kind)
            if not 0 <= adv.target < self.num_rsus:
                raise ConfigError(f"adversary target {adv.target} out of range")
            if adv.rate <= 0 or adv.count < 0:
                raise ConfigError("adversary rate must be > 0 and count >= 0")
        if self.expect_broadcasts and not self.adversaries:
            needed = min(self.policy().threshold(t) for t in self.msg_types)
            if needed > self.num_vehicles:
                raise ConfigError(
                    f"threshold {needed} exceeds fleet size {self.num_vehicles}; "
                    "no broadcast can ever be produced")


class MetricsReport:
    """Ordered counters plus optional wall-clock samples."""

    COUNTERS = [
        ("envelopes_injected", "count"),
        ("envelopes_accepted", "count"),
        *[(f"rejected.{r.value}", "count") for r in Reason],
        ("broadcasts_emitted", "count"),
        ("broadcasts_verified", "count"),
        ("verify_failures", "count"),
        ("traces_attempted", "count"),
        ("trace_successes", "count"),
        ("trace_misses", "count"),
        ("trace_extras", "count"),
        ("bytes.envelope_total", "bytes"),
        ("bytes.broadcast_total", "bytes"),
        ("bytes.envelope_each", "bytes"),
        ("bytes.broadcast_each", "bytes"),
    ]

    def __init__(self):
        self.counts: Counter = Counter()
        self.outcomes: dict[str, Counter] = {}
        self.timings: dict[str, list[float]] = {}

    def __getitem__(self, name: str) -> int:
        return self.counts[name]

    def rejected(self, reason) -> int:
        return self.counts[f"rejected.{Reason(reason).value}"]

    def outcome(self, source: str, bucket: str) -> int:
        return self.outcomes.get(source, Counter())[bucket]

    def rows(self):
        for name, unit in self.COUNTERS:
            yield name, self.counts[name], unit
        for source in sorted(self.outcomes):
            for bucket in OUTCOMES:
                yield f"outcome.{source}.{bucket}", self.outcomes[source][bucket], "count"
        for op in sorted(self.timings):
            samples = self.timings[op]
            yield f"time.{op}.median", f"{statistics.median(samples):.4f}", "ms"
            yield f"time.{op}.mean", f"{statistics.fmean(samples):.4f}", "ms"
            yield f"time.{op}.samples", len(samples), "count"

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["name", "value", "unit"])
        writer.writerows(self.rows())
        return out.getvalue()

    def summary(self) -> str:
        c = self.counts
        lines = [
            f"envelopes: {c['envelopes_injected']} injected, {c['envelopes_accepted']} accepted",
        ]
        for r in Reason:
            if c[f"rejected.{r.value}"]:
                lines.append(f"  rejected {r.value}: {c[f'rejected.{r.value}']}")
        lines.append(f"broadcasts: {c['broadcasts_emitted']} emitted, "
                     f"{c['broadcasts_verified']} verified, {c['verify_failures']} failed")
        lines.append(f"tracing: {c['trace_successes']}/{c['traces_attempted']} exact "
                     f"({c['trace_misses']} missed, {c['trace_extras']} extra)")
        lines.append(f"wire: {c['bytes.envelope_total']} B envelopes, "
                     f"{c['bytes.broadcast_total']} B broadcasts")
        for op in sorted(self.timings):
            lines.append(f"  {op}: median {statistics.median(self.timings[op]):.3f} ms")
        return "\n".join(lines)


class _World:
    def __init__(self, s: Scenario, timing: bool):
        self.s = s
        self.rng = random.Random(s.seed)
        self.timing = timing
        self.report = MetricsReport()
        self.ta = TrustedAuthority(self.rng)
        self.rsus = [self.ta.add_rsu(f"L{j}".encode(), self.rng, s.policy(), s.window)
                     for j in range(s.num_rsus)]
        self.vehicles = []
        for i in range(s.num_vehicles):
            self.vehicles.append(self.enrol(f"RID-{i:06d}".encode()))
        self.queue: list = []
        self._seq = 0
        self.captured: list[list[tuple[int, Envelope]]] = [[] for _ in self.rsus]
        # (rsu, event id) -> [(arrival, rid)] accepted since the last broadcast
        self.truth: dict[tuple[int, object], list[tuple[int, bytes]]] = {}
        self.key_to_event: dict[tuple[int, bytes], object] = {}
        self.report.counts["bytes.broadcast_each"] = BROADCAST_LEN
        for adv in s.adversaries:
            self.report.outcomes.setdefault(adv.kind, Counter())
        self.report.outcomes.setdefault("honest", Counter())

    def enrol(self, rid: bytes) -> scheme.VehicleKeyPair:
        keys = scheme.vehicle_keygen(self.rng, rid)
        register(self.ta, keys, self.rng)
        return keys

    def schedule(self, when: int, prio: int, action, *args):
        self._seq += 1
        heapq.heappush(self.queue, (when, prio, self._seq, action, args))

    def _timed(self, op, fn, *args):
        if not self.timing:
            return fn(*args)
        t0 = time.perf_counter()
        out = fn(*args)
        self.report.timings.setdefault(op, []).append((time.perf_counter() - t0) * 1e3)
        return out

    def attached(self, i: int, now: int) -> int:
        return (i + now // self.s.dwell) % self.s.num_rsus

    def new_payload(self, rng) -> bytes:
        return rng.randbytes(PAYLOAD_LEN)

    def pick_type(self, rng) -> int:
        types = list(self.s.msg_types)
        return rng.choices(types, weights=[self.s.msg_types[t] for t in types])[0]

    # -- delivery path ----------------------------------------------------

    def deliver(self, now: int, j: int, env: Envelope, source: str, event, rid):
        rsu = self.rsus[j]
        rsu.sync_revocation(self.ta.revocation)
        c = self.report.counts
        c["envelopes_injected"] += 1
        c["bytes.envelope_total"] += len(env)
        c["bytes.envelope_each"] = len(env)
        verdict = self._timed("rsu_process", rsu.process, env, now)
        bucket = "accepted" if verdict.accepted else verdict.reason.value
        self.report.outcomes[source][bucket] += 1
        if source == "honest":
            self.captured[j].append((now, env))
        if not verdict.accepted:
            c[f"rejected.{verdict.reason.value}"] += 1
            return
        c["envelopes_accepted"] += 1
        self.key_to_event[(j, verdict.endorsement_key)] = event
        self.truth.setdefault((j, event), []).append((now, rid))
        bc = self._timed("resign", rsu.try_broadcast, verdict.endorsement_key, self.rng, now)
        if bc is not None:
            self.on_broadcast(now, j, bc, event)

    def on_broadcast(self, now, j, bc, event):
        c = self.report.counts
        c["broadcasts_emitted"] += 1
        c["bytes.broadcast_total"] += len(bc.to_bytes())
        for _ in range(self.s.receivers):
            ok = self._timed("verify_broadcast", _verify, self.ta.public, bc, now, self.s.window)
            c["broadcasts_verified" if ok else "verify_failures"] += 1
        window = self.s.window
        truth = {rid for t, rid in self.truth.pop((j, event), []) if now - t <= window}
        got = set(self.ta.trace(bc.message, bc.signature))
        c["traces_attempted"] += 1
        c["trace_misses"] += len(truth - got)
        c["trace_extras"] += len(got - truth)
        if got == truth and got:
            c["trace_successes"] += 1

    # -- honest traffic ---------------------------------------------------

    def honest_event(self, now: int, j: int, event):
        msg_type = self.pick_type(self.rng)
        payload = self.new_payload(self.rng)
        for i in range(len(self.vehicles)):
            if self.attached(i, now) != j:
                continue
            t = min(now + self.rng.randint(0, self.s.jitter), self.s.duration - 1)
            self.schedule(t, _PRIO_DELIVER, self.honest_endorse, i, j, msg_type, payload, event)

    def honest_endorse(self, now, i, j, msg_type, payload, event):
        keys = self.vehicles[i]
        env = self._timed("generate", _generate, keys, msg_type, payload, now,
                          self.rsus[j].public, self.rng)
        self.deliver(now, j, env, "honest", event, keys.rid)

    def run(self) -> MetricsReport:
        s = self.s
        for k, t in enumerate(range(0, s.duration, s.event_interval)):
            for j in range(s.num_rsus):
                self.schedule(t, _PRIO_DELIVER, self.honest_event, j, ("honest", k, j))
        for idx, spec in enumerate(s.adversaries):
            inject_adversary(spec.kind, spec).install(self, idx)
        while self.queue:
            when, _, _, action, args = heapq.heappop(self.queue)
            if when >= s.duration:
                continue
            action(when, *args)
        return self.report


_generate = obu_generate


def _verify(X_ta, bc, now, window):
    return vehicle_verify_broadcast(X_ta, bc.message, bc.signature, now, window)


# -- adversaries ---------------------------------------------------------

class Adversary:
    kind = ""

    def __init__(self, spec: AdversarySpec):
        self.spec = spec

    def times(self, duration: int) -> list[int]:
        spec = self.spec
        stop = duration if spec.stop is None else min(spec.stop, duration)
        out, k = [], 0
        while True:
            t = int(spec.start + k / spec.rate)
            if t >= stop or (spec.limit is not None and k >= spec.limit):
                return out
            out.append(t)
            k += 1

    def install(self, world: _World, idx: int) -> None:
        self.idx = idx
        self.rng = random.Random(f"{world.s.seed}/{self.kind}/{idx}")
        self.setup(world)
        for n, t in enumerate(self.times(world.s.duration)):
            world.schedule(t, _PRIO_DELIVER, self.act, world, (self.kind, idx, n))

    def setup(self, world: _World) -> None:
        pass

    def act(self, now, world, event) -> None:
        raise NotImplementedError


class ForgeAdversary(Adversary):
    """Random level-1 signatures under a registered victim's key."""

    kind = "forge"

    def act(self, now, world, event):
        j = self.spec.target
        victim = world.vehicles[self.rng.randrange(len(world.vehicles))]
        rsu_pub = world.rsus[j].public
        m = SafetyMessage(world.pick_type(self.rng), world.new_payload(self.rng), now, rsu_pub)
        fake = scheme.Level1Signature(grp.random_element_a(self.rng))
        env = seal_envelope(m, fake, victim.X, rsu_pub, self.rng)
        world.deliver(now, j, env, self.kind, event, victim.rid)


class ReplayAdversary(Adversary):
    """Resends the newest honest envelope that is at least ``delay`` seconds old."""

    kind = "replay"

    def act(self, now, world, event):
        j = self.spec.target
        delay = world.s.window + 1 if self.spec.delay is None else self.spec.delay
        old = [env for t, env in world.captured[j] if t <= now - delay]
        if not old:
            return
        world.deliver(now, j, old[-1], self.kind, event, None)


class SybilAdversary(Adversary):
    """One legitimately registered key endorsing its own event 1 + count times."""

    kind = "sybil"

    def setup(self, world):
        self.keys = world.enrol(f"SYBIL-{self.idx:03d}".encode())

    def act(self, now, world, event):
        j = self.spec.target
        msg_type, payload = world.pick_type(self.rng), world.new_payload(self.rng)
        for _ in range(1 + self.spec.count):
            env = _generate(self.keys, msg_type, payload, now, world.rsus[j].public, self.rng)
            world.deliver(now, j, env, self.kind, event, self.keys.rid)


class RevokedSenderAdversary(Adversary):
    """A registered vehicle that keeps endorsing after the TA revoked it."""

    kind = "revoked-sender"

    def setup(self, world):
        self.keys = world.enrol(f"REVOKED-{self.idx:03d}".encode())
        world.schedule(self.spec.start, _PRIO_ADMIN, self.revoke, world)

    def revoke(self, now, world):
        world.ta.revoke(self.keys.X)

    def act(self, now, world, event):
        j = self.spec.target
        env = _generate(self.keys, world.pick_type(self.rng), world.new_payload(self.rng),
                        now, world.rsus[j].public, self.rng)
        world.deliver(now, j, env, self.kind, event, self.keys.rid)


_ADVERSARIES = {cls.kind: cls for cls in
                (ForgeAdversary, ReplayAdversary, SybilAdversary, RevokedSenderAdversary)}


def inject_adversary(kind: str, params=None) -> Adversary:
    if kind not in _ADVERSARIES:
        raise UnknownAdversaryKind(kind)
    if params is None:
        params = AdversarySpec(kind)
    elif isinstance(params, dict):
        params = AdversarySpec.from_dict({"kind": kind, **params})
    return _ADVERSARIES[kind](params)


def run_scenario(s: Scenario, timing: bool = False) -> MetricsReport:
    s.validate()
    return _World(s, timing).run()


# -- primitive micro-benchmarks ------------------------------------------

@dataclass
class TimingTable:
    iterations: int
    samples: dict

    def median(self, op: str) -> float:
        return statistics.median(self.samples[op])

    def mean(self, op: str) -> float:
        return statistics.fmean(self.samples[op])

    @property
    def verify_pairing_ratio(self) -> float:
        return self.median("verify_level2") / self.median("pairing")

    def rows(self):
        for op in self.samples:
            yield op, f"{self.median(op):.4f}", f"{self.mean(op):.4f}"

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["name", "value", "unit"])
        for op, med, mean in self.rows():
            writer.writerow([f"{op}.median", med, "ms"])
            writer.writerow([f"{op}.mean", mean, "ms"])
        writer.writerow(["verify_level2_over_pairing", f"{self.verify_pairing_ratio:.3f}", "ratio"])
        return out.getvalue()

    def summary(self) -> str:
        lines = [f"{'operation':<16}{'median ms':>12}{'mean ms':>12}"]
        for op, med, mean in self.rows():
            lines.append(f"{op:<16}{med:>12}{mean:>12}")
        lines.append(f"verify_level2 / pairing = {self.verify_pairing_ratio:.3f} (expected ~4)")
        return "\n".join(lines)


def measure_primitives(iterations: int = 100, seed: int = 0, warmup: int = 5) -> TimingTable:
    """Median/mean wall time per primitive, operations interleaved per round."""
    if iterations < 30:
        raise ValueError("iterations must be >= 30")
    rng = random.Random(seed)
    ta = scheme.ta_keygen(rng)
    v = scheme.vehicle_keygen(rng, b"bench")
    rsk = scheme.make_resign_key(ta, v.X, v.Y)
    msg = rng.randbytes(155)
    sig1 = scheme.sign_level1(v.x, msg)
    sig2 = scheme.resign(rsk, msg, sig1, rng)
    k = grp.random_scalar(rng)
    h = grp.hash_to_group(msg)
    ops = {
        "pairing": lambda: grp.pairing(h, v.X),
        "exp_a": lambda: h ** k,
        "exp_b": lambda: v.X ** k,
        "hash_to_group": lambda: grp.hash_to_group(msg),
        "sign": lambda: scheme.sign_level1(v.x, msg),
        "verify_level1": lambda: scheme.verify_level1(v.X, msg, sig1),
        "resign": lambda: scheme.resign(rsk, msg, sig1, rng),
        "verify_level2": lambda: scheme.verify_level2(ta.X, msg, sig2),
    }
    samples = {op: [] for op in ops}
    for _ in range(warmup):
        for fn in ops.values():
            fn()
    clock = time.perf_counter
    for _ in range(iterations):
        for op, fn in ops.items():
            t0 = clock()
            fn()
            samples[op].append((clock() - t0) * 1e3)
    return TimingTable(iterations, samples)
