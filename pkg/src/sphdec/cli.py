"""Command line entry points: construct, encode, decode, sweep."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .channel import ebn0_to_params
from .codes import bit_reverse_permute, encode, spec_to_json
from .decoder import stack_sphere_decode
from .metrics import MetricKind
from .sim import (
    FAMILIES,
    SweepConfig,
    format_records,
    run_sweep,
    sweep_header,
    write_records,
)

OUT_DIR_ENV = "SPHDEC_OUT_DIR"


class UsageError(Exception):
    """Bad or contradictory command line options (exit code 2)."""


def _resolve_out(path: str | None) -> str | None:
    """Relative output paths land in $SPHDEC_OUT_DIR when it is set."""
    if path is None:
        return None
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _build_code(family: str, n: int, k: int):
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise UsageError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    return builder(n, k)


def _parse_metrics(text: str) -> list[MetricKind]:
    try:
        return [MetricKind(tok.strip().lower()) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"unknown metric in {text!r}; choose from m0,m1,m2,m3")


def _parse_ebn0(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"cannot parse Eb/N0 list {text!r}")


def _bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _parse_payload(text: str, spec) -> np.ndarray:
    """Accept a full N-length source block, K info bits, or 0x-hex info bits."""
    t = text.strip()
    if t.lower().startswith("0x"):
        value = int(t, 16)
        if value >> spec.K:
            raise UsageError(f"hex payload needs more than K={spec.K} bits")
        bits = np.array([(value >> (spec.K - 1 - i)) & 1 for i in range(spec.K)], dtype=np.uint8)
        return _embed_info(bits, spec)
    if set(t) - {"0", "1"}:
        raise UsageError("payload must be a 0/1 bit string or 0x-prefixed hex")
    bits = np.array([int(c) for c in t], dtype=np.uint8)
    if bits.size == spec.N:
        return bits
    if bits.size == spec.K:
        return _embed_info(bits, spec)
    raise UsageError(f"payload must have N={spec.N} or K={spec.K} bits, got {bits.size}")


def _embed_info(bits: np.ndarray, spec) -> np.ndarray:
    v = np.zeros(spec.N, dtype=np.uint8)
    v[spec.info_positions] = bits
    return bit_reverse_permute(v)


def cmd_construct(args) -> int:
    spec = _build_code(args.family, args.n, args.k)
    print(json.dumps(spec_to_json(spec), indent=2))
    return 0


def cmd_encode(args) -> int:
    spec = _build_code(args.family, args.n, args.k)
    u = _parse_payload(args.payload, spec)
    x, _v = encode(u, spec)
    if args.format == "hex":
        print(np.packbits(x).tobytes().hex())
    else:
        print(_bits_to_str(x))
    return 0


def _read_reals(path: str) -> np.ndarray:
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ValueError(f"no values found in {path}")
    return np.array([float(tok) for tok in tokens])


def cmd_decode(args) -> int:
    spec = _build_code(args.family, args.n, args.k)
    params = ebn0_to_params(args.ebn0, spec.N, spec.K)
    y = _read_reals(args.input)
    kind = _parse_metrics(args.metric)
    if len(kind) != 1:
        raise UsageError("decode takes exactly one metric")
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        res = stack_sphere_decode(y, spec, params, kind[0], trace=trace)
    finally:
        if trace is not None:
            trace.close()
    out = {
        "u_hat": _bits_to_str(res.u_hat),
        "v_hat": _bits_to_str(res.v_hat),
        "info_bits": _bits_to_str(res.v_hat[spec.info_positions]),
        "sed": res.final_radius_sq,
        "stats": {
            "node_visits": res.stats.node_visits,
            "pops": res.stats.pops,
            "max_stack": res.stats.max_stack,
            "radius_updates": res.stats.radius_updates,
        },
    }
    print(json.dumps(out, indent=2))
    return 0


def _sweep_config(args) -> SweepConfig:
    code_flags = [args.family, args.n, args.k, args.ebn0]
    if args.config:
        if any(f is not None for f in code_flags):
            raise UsageError("--config cannot be combined with --family/--n/--k/--ebn0")
        with open(args.config, "r", encoding="utf-8") as fh:
            return SweepConfig.from_json(json.load(fh))
    missing = [
        name
        for name, val in (("--family", args.family), ("--n", args.n), ("--k", args.k), ("--ebn0", args.ebn0))
        if val is None
    ]
    if missing:
        raise UsageError(f"sweep requires {', '.join(missing)} (or --config)")
    return SweepConfig(
        family=args.family,
        n=args.n,
        K=args.k,
        ebn0_db_list=_parse_ebn0(args.ebn0),
        kinds=_parse_metrics(args.metric),
        trials_per_point=args.trials,
        master_seed=args.seed,
        min_block_errors=args.min_errors,
    )


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        records = run_sweep(config, trace=trace, workers=args.workers)
    finally:
        if trace is not None:
            trace.close()
    header = sweep_header(config)
    out = _resolve_out(args.out or config.output_path)
    if out:
        write_records(records, out, args.format, header)
        print(out)
    else:
        sys.stdout.write(format_records(records, args.format, header))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphdec",
        description="Polar/Reed-Muller coding with maximum-likelihood stack sphere decoding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_code_flags(p, required=True):
        p.add_argument("--family", choices=sorted(FAMILIES), required=required)
        p.add_argument("--n", type=int, required=required)
        p.add_argument("--k", type=int, required=required)

    p = sub.add_parser("construct", help="print a code spec as JSON")
    add_code_flags(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("encode", help="encode a block (bit string or 0x-hex payload)")
    add_code_flags(p)
    p.add_argument("payload", help="N source bits, K info bits, or 0x-hex info bits")
    p.add_argument("--format", choices=["bits", "hex"], default="bits")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode one block from a file of reals")
    add_code_flags(p)
    p.add_argument("input", help="file of received reals ('-' for stdin)")
    p.add_argument("--ebn0", type=float, required=True, help="Eb/N0 in dB")
    p.add_argument("--metric", default="m1")
    p.add_argument("--trace", help="write the per-pop decoder trace to this file")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="Monte-Carlo BLER/complexity sweep")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--ebn0", help="comma-separated Eb/N0 list in dB")
    p.add_argument("--metric", default="m1", help="comma-separated metric kinds")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--config", help="JSON sweep configuration file")
    p.add_argument("--out", help="output path (relative paths use $%s)" % OUT_DIR_ENV)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--trace", help="stream decoder traces to this file")
    p.add_argument("--workers", type=int, default=1,
                   help="trial parallelism (results identical apart from wall time)")
    p.set_defaults(func=cmd_sweep)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code is None else int(exc.code)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
