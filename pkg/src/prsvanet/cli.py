"""Command-line entry point.

Exit codes: 0 success, 1 verification or protocol rejection, 2 usage or
configuration error.  All state lives in the files named on the command
line.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from . import group as grp
from . import perf, records, scheme
from .actors import (
    DEFAULT_WINDOW,
    RevocationList,
    RoadsideUnit,
    ThresholdPolicy,
    obu_generate,
    vehicle_verify_broadcast,
)
from .errors import (
    BadPayloadLength,
    ConfigError,
    MalformedElement,
    PRSError,
    UnknownKey,
    UnknownRSU,
)
from .messages import pad_payload

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _rng(args):
    return None if args.seed is None else random.Random(args.seed)


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_json(path, default):
    p = Path(path)
    return json.loads(p.read_text()) if p.exists() else default


def _save_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _empty_registry():
    return {"vehicles": {}, "revocation": {"version": 0, "revoked": []}}


# -- subcommands ---------------------------------------------------------

def cmd_keygen(args):
    rng = _rng(args)
    out = Path(args.out)
    if args.role == "ta":
        keys = scheme.ta_keygen(rng)
    elif args.role == "rsu":
        keys = scheme.rsu_keygen(rng, args.label.encode())
    else:
        if not args.rid:
            raise UsageError("--rid is required for --role vehicle")
        keys = scheme.vehicle_keygen(rng, args.rid.encode())
        proof = scheme.make_registration_proof(keys, rng)
        records.write_record(out.with_name(out.name + ".req"),
                             records.encode_registration(keys.X, keys.Y, keys.rid, proof))
    records.write_record(out, records.encode(keys))
    records.write_record(out.with_name(out.name + ".pub"), records.encode(keys, public=True))
    print(f"wrote {out} and {out}.pub")
    return EXIT_OK


def cmd_register(args):
    _, ta = records.read_record(args.ta, records.TA_SECRET)
    _, (X, Y, rid, proof) = records.read_record(args.request, records.REGISTRATION)
    registry = _load_json(args.registry, _empty_registry()) if args.registry else _empty_registry()
    x_hex = grp.encode_b(X).hex()
    if x_hex in registry["vehicles"]:
        print("duplicate-key: vehicle already registered", file=sys.stderr)
        return EXIT_FAIL
    if not scheme.verify_registration_proof(X, rid, proof):
        print("invalid-proof: registration proof rejected", file=sys.stderr)
        return EXIT_FAIL
    if not scheme.check_commitment(X, Y):
        print("inconsistent-commitment: Y does not match X", file=sys.stderr)
        return EXIT_FAIL
    rsk = scheme.make_resign_key(ta, X, Y)
    records.write_record(args.out, records.encode(rsk))
    if args.registry:
        registry["vehicles"][x_hex] = rid.hex()
        _save_json(args.registry, registry)
    print(f"registered {rid.decode(errors='replace')}; re-signature key in {args.out}")
    return EXIT_OK


def _payload(args) -> bytes:
    if args.payload_hex is not None:
        raw = bytes.fromhex(args.payload_hex)
    else:
        raw = (args.payload or "").encode()
    return pad_payload(raw)


def cmd_sign(args):
    _, keys = records.read_record(args.key, records.VEHICLE_SECRET)
    _, rsu = records.read_record(args.rsu, (records.RSU_PUBLIC, records.RSU_SECRET))
    rsu_pub = rsu.X if isinstance(rsu, scheme.RsuKeyPair) else rsu[0]
    now = int(time.time()) if args.timestamp is None else args.timestamp
    env = obu_generate(keys, args.type, _payload(args), now, rsu_pub, _rng(args))
    records.write_record(args.out, records.encode(env))
    print(f"wrote envelope {args.out} ({len(env)} bytes)")
    return EXIT_OK


def _revocation(registry) -> RevocationList:
    rl = registry["revocation"]
    return RevocationList(rl["version"], frozenset(bytes.fromhex(x) for x in rl["revoked"]))


def _trace_entry(record):
    return {"message": record.message.hex(),
            "endorsers": [x.hex() for x in record.endorsers],
            "signature": record.signature.to_bytes().hex(),
            "time": record.time}


def cmd_resign(args):
    _, keys = records.read_record(args.rsu, records.RSU_SECRET)
    policy = ThresholdPolicy(args.threshold)
    rsu = RoadsideUnit(keys, None, policy, args.window)
    for path in args.rsk:
        _, rsk = records.read_record(path, records.RESIGN_KEY)
        rsu.install_resign_key(rsk)
    if args.registry:
        rsu.sync_revocation(_revocation(_load_json(args.registry, _empty_registry())))
    now = int(time.time()) if args.now is None else args.now
    rng = _rng(args)
    broadcast, rejected = None, 0
    for path in args.envelope:
        _, env = records.read_record(path, records.ENVELOPE)
        verdict = rsu.process(env, now)
        if not verdict.accepted:
            print(f"{path}: rejected ({verdict.reason.value})", file=sys.stderr)
            rejected += 1
            continue
        broadcast = rsu.try_broadcast(verdict.endorsement_key, rng, now) or broadcast
    if broadcast is None:
        print("no broadcast: threshold not reached", file=sys.stderr)
        return EXIT_FAIL
    records.write_record(args.out, records.encode(broadcast))
    if args.trace_db:
        db = _load_json(args.trace_db, {})
        table = db.setdefault(grp.encode_a(keys.X).hex(), {})
        for digest, rec in rsu.traces.items():
            table[digest.hex()] = _trace_entry(rec)
        _save_json(args.trace_db, db)
    print(f"wrote broadcast {args.out}")
    return EXIT_FAIL if rejected and args.strict else EXIT_OK


def cmd_verify(args):
    _, X_ta = records.read_record(args.ta, (records.TA_PUBLIC, records.TA_SECRET))
    if isinstance(X_ta, scheme.TaKeyPair):
        X_ta = X_ta.X
    try:
        _, bc = records.read_record(args.broadcast, records.BROADCAST)
    except MalformedElement as exc:
        print(f"invalid: {exc}")
        return EXIT_FAIL
    now = int(time.time()) if args.now is None else args.now
    ok = vehicle_verify_broadcast(X_ta, bc.message, bc.signature, now, args.window)
    print("valid" if ok else "invalid")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_trace(args):
    registry = _load_json(args.registry, None)
    if registry is None:
        raise UsageError(f"registry {args.registry} not found")
    db = _load_json(args.trace_db, {})
    _, bc = records.read_record(args.broadcast, records.BROADCAST)
    table = db.get(grp.encode_a(bc.message.rsu_pub).hex())
    if table is None:
        raise UnknownRSU("message names an RSU outside the trace directory")
    entry = table.get(bc.message.digest().hex())
    rids = []
    if entry:
        rids = [bytes.fromhex(registry["vehicles"][x]).decode(errors="replace")
                for x in entry["endorsers"] if x in registry["vehicles"]]
    if args.format == "csv":
        _emit(args, "rid\n" + "".join(f"{r}\n" for r in rids))
    else:
        _emit(args, "".join(f"{r}\n" for r in rids) or "no trace record\n")
    return EXIT_OK


def cmd_revoke(args):
    registry = _load_json(args.registry, None)
    if registry is None:
        raise UsageError(f"registry {args.registry} not found")
    kind, obj = records.read_record(args.key, (records.VEHICLE_PUBLIC, records.VEHICLE_SECRET))
    X = obj.X if kind == records.VEHICLE_SECRET else obj[0]
    x_hex = grp.encode_b(X).hex()
    if x_hex not in registry["vehicles"]:
        raise UnknownKey("cannot revoke an unregistered key")
    rl = registry["revocation"]
    if x_hex not in rl["revoked"]:
        rl["revoked"].append(x_hex)
    rl["version"] += 1
    _save_json(args.registry, registry)
    print(f"revocation list version {rl['version']} ({len(rl['revoked'])} keys)")
    return EXIT_OK


def cmd_simulate(args):
    from .sim import Scenario, run_scenario

    try:
        scenario = Scenario.from_json(Path(args.scenario).read_text())
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    if args.seed is not None:
        scenario.seed = args.seed
    if args.threshold is not None:
        scenario.threshold = args.threshold
    if args.window is not None:
        scenario.window = args.window
    scenario.validate()
    if args.save_scenario:
        Path(args.save_scenario).write_text(scenario.to_json() + "\n")
    report = run_scenario(scenario, timing=args.timing)
    _emit(args, report.to_csv() if args.format == "csv" else report.summary() + "\n")
    return EXIT_OK if report["verify_failures"] == 0 else EXIT_FAIL


def cmd_bench(args):
    from .sim import measure_primitives

    table = measure_primitives(args.iterations, seed=args.seed or 0)
    _emit(args, table.to_csv() if args.format == "csv" else table.summary() + "\n")
    return EXIT_OK


def cmd_tables(args):
    ms = range(args.m_min, args.m_max + 1)
    ks = range(1, args.k_max + 1)
    if not ms or not ks:
        raise UsageError("empty m or k range")
    if args.fig == "2":
        csv_text = perf.to_csv(perf.fig2_rows(ms), perf.FIG_COLUMNS["2"])
    elif args.fig == "3":
        csv_text = perf.to_csv(perf.fig3_rows(ms), perf.FIG_COLUMNS["3"])
    elif args.fig == "5":
        csv_text = perf.to_csv(perf.fig5_rows(ks, args.n_ring), perf.FIG_COLUMNS["5"])
    else:
        csv_text = perf.to_csv(perf.table5_rows(args.n_ring), perf.FIG_COLUMNS["table5"])
    if args.format == "text":
        rows = [line.split(",") for line in csv_text.splitlines()]
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        csv_text = "".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n" for r in rows)
    _emit(args, csv_text)
    return EXIT_OK


# -- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prsvanet",
                                     description="Proxy re-signature VANET authentication toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        p.add_argument("--seed", type=int, default=None, help="deterministic randomness")
        return p

    p = add("keygen", cmd_keygen, "generate a TA, RSU or vehicle key pair")
    p.add_argument("--role", choices=("ta", "rsu", "vehicle"), required=True)
    p.add_argument("--out", required=True, help="secret key file; .pub (and .req) written alongside")
    p.add_argument("--rid", help="vehicle real identity")
    p.add_argument("--label", default="", help="RSU location label")

    p = add("register", cmd_register, "TA: verify a vehicle registration and issue R_i")
    p.add_argument("--ta", required=True)
    p.add_argument("--request", required=True, help="vehicle .req file")
    p.add_argument("--registry", help="JSON registry updated in place")
    p.add_argument("--out", required=True, help="re-signature key file")

    p = add("sign", cmd_sign, "OBU: sign a safety message and seal it to an RSU")
    p.add_argument("--key", required=True)
    p.add_argument("--rsu", required=True, help="RSU public (or secret) key file")
    p.add_argument("--type", type=int, default=1)
    p.add_argument("--payload", help="text payload, zero-padded to 100 bytes")
    p.add_argument("--payload-hex")
    p.add_argument("--timestamp", type=int)
    p.add_argument("--out", required=True)

    p = add("resign", cmd_resign, "RSU: check envelopes and re-sign once the threshold is met")
    p.add_argument("--rsu", required=True)
    p.add_argument("--rsk", action="append", required=True, help="re-signature key (repeatable)")
    p.add_argument("--envelope", action="append", required=True, help="envelope (repeatable)")
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--now", type=int)
    p.add_argument("--registry", help="registry JSON providing the revocation list")
    p.add_argument("--trace-db", help="JSON trace evidence table updated in place")
    p.add_argument("--strict", action="store_true", help="exit 1 if any envelope was rejected")
    p.add_argument("--out", required=True)

    p = add("verify", cmd_verify, "vehicle: verify a broadcast under the TA key")
    p.add_argument("--ta", required=True)
    p.add_argument("--broadcast", required=True)
    p.add_argument("--now", type=int)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)

    p = add("trace", cmd_trace, "TA: recover endorser identities of a broadcast")
    p.add_argument("--registry", required=True)
    p.add_argument("--trace-db", required=True)
    p.add_argument("--broadcast", required=True)
    p.add_argument("--format", choices=("csv", "text"), default="text")
    p.add_argument("--out")

    p = add("revoke", cmd_revoke, "TA: add a vehicle key to the revocation list")
    p.add_argument("--registry", required=True)
    p.add_argument("--key", required=True, help="vehicle public or secret key file")

    p = add("simulate", cmd_simulate, "run a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--threshold", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--timing", action="store_true", help="append wall-clock timings")
    p.add_argument("--save-scenario", help="write the effective scenario (after overrides)")
    p.add_argument("--out")

    p = add("bench", cmd_bench, "time the primitives")
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--format", choices=("csv", "text"), default="text")
    p.add_argument("--out")

    p = add("tables", cmd_tables, "emit figure/table data from the analytic model")
    p.add_argument("--fig", choices=("2", "3", "5", "table5"), required=True)
    p.add_argument("--m-min", type=int, default=0)
    p.add_argument("--m-max", type=int, default=100)
    p.add_argument("--k-max", type=int, default=60)
    p.add_argument("--n-ring", type=int, default=2)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "iterations", 100) < 30:
        parser.print_usage(sys.stderr)
        print("error: --iterations must be >= 30", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "threshold", None) is not None and args.threshold < 1:
        parser.print_usage(sys.stderr)
        print("error: --threshold must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigError, UnknownRSU, UnknownKey, MalformedElement,
            BadPayloadLength, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PRSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
