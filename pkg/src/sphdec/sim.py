"""Monte-Carlo sweep harness: block-error rate and search-complexity curves.

Each sweep point transmits uniformly random information blocks over the AWGN
channel and decodes the identical received vector once per metric kind, so
complexity comparisons between kinds are paired and the per-point BLER is the
same for every kind.  Trials are seeded individually from the master seed, so
a configuration reproduces its results exactly (modulo measured wall time).
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import asdict, dataclass
from time import perf_counter
from typing import Sequence

import numpy as np

from .channel import bpsk_map, ebn0_to_params, transmit, trial_rng
from .codes import CodeSpec, bit_reverse_permute, construct_polar, construct_rm, encode, spec_to_json
from .decoder import stack_sphere_decode
from .metrics import MetricKind

CSV_COLUMNS = (
    "ebn0_db",
    "metric",
    "trials",
    "block_errors",
    "bler",
    "avg_node_visits",
    "avg_pops",
    "avg_max_stack",
    "wall_time_s",
)

NODE_VISIT_DEFINITION = (
    "one node visit per child path generated during expansion; "
    "frozen levels generate one child, information levels two"
)
ENERGY_CONVENTION = "E=1 fixed; Eb=E*N/K (rate-adjusted); N0=Eb/10**(ebn0_db/10)"
SEED_SPLIT_RULE = (
    "per-trial generator = default_rng(SeedSequence((master_seed, ebn0_index, trial_index)))"
)

FAMILIES = {"polar": construct_polar, "rm": construct_rm}


@dataclass
class SweepConfig:
    """One sweep: a code, an Eb/N0 grid, metric kinds, and trial bookkeeping.

    min_block_errors > 0 lets a point stop early once that many block errors
    have accumulated (the recorded trial count reflects this); 0 disables
    early stopping.
    """

    family: str
    n: int
    K: int
    ebn0_db_list: Sequence[float]
    kinds: Sequence[MetricKind]
    trials_per_point: int
    master_seed: int
    min_block_errors: int = 100
    output_path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {sorted(FAMILIES)}, got {self.family!r}")
        self.ebn0_db_list = [float(x) for x in self.ebn0_db_list]
        if not self.ebn0_db_list:
            raise ValueError("ebn0_db_list must be nonempty")
        if any(b <= a for a, b in zip(self.ebn0_db_list, self.ebn0_db_list[1:])):
            raise ValueError("ebn0_db_list must be strictly increasing")
        self.kinds = [MetricKind(k) for k in self.kinds]
        if not self.kinds:
            raise ValueError("kinds must be nonempty")
        if len(set(self.kinds)) != len(self.kinds):
            raise ValueError("kinds must not repeat")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.min_block_errors < 0:
            raise ValueError("min_block_errors must be >= 0")

    def build_spec(self) -> CodeSpec:
        return FAMILIES[self.family](self.n, self.K)

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["kinds"] = [k.value for k in self.kinds]
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SweepConfig":
        return cls(
            family=doc["family"],
            n=int(doc["n"]),
            K=int(doc["K"]),
            ebn0_db_list=doc["ebn0_db_list"],
            kinds=doc["kinds"],
            trials_per_point=int(doc["trials_per_point"]),
            master_seed=int(doc["master_seed"]),
            min_block_errors=int(doc.get("min_block_errors", 100)),
            output_path=doc.get("output_path"),
        )


@dataclass
class SweepRecord:
    """Aggregated outcome of one (Eb/N0, metric kind) sweep point.

    wall_time_s is the total decode time spent on this cell; everything else
    is deterministic given the configuration.
    """

    ebn0_db: float
    metric: str
    trials: int
    block_errors: int
    bler: float
    avg_node_visits: float
    avg_pops: float
    avg_max_stack: float
    wall_time_s: float


def _run_trials(spec, params, kinds, master_seed, e_idx, t_start, t_stop, trace=None):
    """Decode trials [t_start, t_stop) of one sweep point.

    Every kind decodes the identical received vector of a trial, so per-kind
    comparisons are paired.  Returns per-kind [errors, visits, pops,
    stack_peaks, seconds]; all but the seconds are exact integers, so sums
    over trial ranges do not depend on how the range was split.
    """
    info = spec.info_positions
    acc = {kind: [0, 0, 0, 0, 0.0] for kind in kinds}
    for t in range(t_start, t_stop):
        rng = trial_rng(master_seed, e_idx, t)
        v = np.zeros(spec.N, dtype=np.uint8)
        v[info] = rng.integers(0, 2, size=spec.K, dtype=np.uint8)
        u = bit_reverse_permute(v)
        x, _ = encode(u, spec)
        y = transmit(bpsk_map(x), params, rng)
        for kind in kinds:
            t0 = perf_counter()
            res = stack_sphere_decode(y, spec, params, kind, trace=trace)
            a = acc[kind]
            a[4] += perf_counter() - t0
            if np.any(res.v_hat != v):
                a[0] += 1
            a[1] += res.stats.node_visits
            a[2] += res.stats.pops
            a[3] += res.stats.max_stack
    return acc


def _run_trials_star(args):
    return _run_trials(*args)


def run_sweep(config: SweepConfig, *, trace=None, workers: int = 1) -> list[SweepRecord]:
    """Run the sweep and return one record per (Eb/N0, kind) point.

    At a fixed (master seed, point, trial), every kind decodes the identical
    received vector; aggregation is by trial index, so results do not depend
    on scheduling.  ``workers > 1`` spreads trial ranges over processes;
    every field except wall_time_s is identical to a sequential run.  Early
    stopping and tracing require the sequential path, so either forces
    ``workers = 1``.
    """
    spec = config.build_spec()
    if trace is not None or config.min_block_errors > 0:
        workers = 1
    records: list[SweepRecord] = []
    for e_idx, ebn0 in enumerate(config.ebn0_db_list):
        params = ebn0_to_params(ebn0, spec.N, spec.K)
        totals = {kind: [0, 0, 0, 0, 0.0] for kind in config.kinds}
        trials = 0
        if workers > 1:
            total = config.trials_per_point
            step = max(1, min(256, total // (workers * 8)))
            tasks = [
                (spec, params, config.kinds, config.master_seed, e_idx, t, min(t + step, total))
                for t in range(0, total, step)
            ]
            with multiprocessing.Pool(workers) as pool:
                for acc in pool.imap(_run_trials_star, tasks):
                    for kind in config.kinds:
                        for i in range(4):
                            totals[kind][i] += acc[kind][i]
                        totals[kind][4] += acc[kind][4]
            trials = total
        else:
            for t in range(config.trials_per_point):
                acc = _run_trials(spec, params, config.kinds,
                                  config.master_seed, e_idx, t, t + 1, trace)
                for kind in config.kinds:
                    for i in range(4):
                        totals[kind][i] += acc[kind][i]
                    totals[kind][4] += acc[kind][4]
                trials = t + 1
                if config.min_block_errors > 0 and min(
                    totals[k][0] for k in config.kinds
                ) >= config.min_block_errors:
                    break
        for kind in config.kinds:
            errors, visits, pops, stacks, seconds = totals[kind]
            records.append(
                SweepRecord(
                    ebn0_db=ebn0,
                    metric=kind.value,
                    trials=trials,
                    block_errors=errors,
                    bler=errors / trials,
                    avg_node_visits=visits / trials,
                    avg_pops=pops / trials,
                    avg_max_stack=stacks / trials,
                    wall_time_s=seconds,
                )
            )
    return records


def sweep_header(config: SweepConfig) -> dict:
    """Metadata written next to the records: code, channel, seed, conventions."""
    spec = config.build_spec()
    return {
        "code": spec_to_json(spec),
        "family": config.family,
        "ebn0_db_list": list(config.ebn0_db_list),
        "E": 1.0,
        "N0_list": [ebn0_to_params(db, spec.N, spec.K).N0 for db in config.ebn0_db_list],
        "kinds": [k.value for k in config.kinds],
        "trials_per_point": config.trials_per_point,
        "master_seed": config.master_seed,
        "min_block_errors": config.min_block_errors,
        "energy_convention": ENERGY_CONVENTION,
        "node_visit_definition": NODE_VISIT_DEFINITION,
        "seed_split_rule": SEED_SPLIT_RULE,
    }


def _format_value(value) -> str:
    # repr round-trips floats exactly, keeping files bit-stable and parseable
    return repr(value) if isinstance(value, float) else str(value)


def format_records(records: Sequence[SweepRecord], fmt: str = "csv", header: dict | None = None) -> str:
    """Render records as CSV (fixed column order) or JSON (mirrored fields)."""
    if not records:
        raise ValueError("records must be nonempty")
    if fmt == "csv":
        lines = []
        if header is not None:
            lines.append("# " + json.dumps(header, sort_keys=True))
        lines.append(",".join(CSV_COLUMNS))
        for rec in records:
            d = asdict(rec)
            lines.append(",".join(_format_value(d[c]) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps({"header": header, "records": [asdict(r) for r in records]}, indent=2) + "\n"
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def write_records(records: Sequence[SweepRecord], path, fmt: str = "csv", header: dict | None = None) -> None:
    text = format_records(records, fmt, header)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


_INT_FIELDS = {"trials", "block_errors"}


def _record_from_strings(values: Sequence[str]) -> SweepRecord:
    kwargs = {}
    for name, raw in zip(CSV_COLUMNS, values):
        if name == "metric":
            kwargs[name] = raw
        elif name in _INT_FIELDS:
            kwargs[name] = int(raw)
        else:
            kwargs[name] = float(raw)
    return SweepRecord(**kwargs)


def parse_records(text: str, fmt: str = "csv") -> tuple[dict | None, list[SweepRecord]]:
    """Inverse of format_records; returns (header, records)."""
    if fmt == "csv":
        header = None
        records = []
        saw_columns = False
        for line in text.splitlines():
            if not line:
                continue
            if line.startswith("#"):
                header = json.loads(line.lstrip("# "))
                continue
            if not saw_columns:
                if tuple(line.split(",")) != CSV_COLUMNS:
                    raise ValueError(f"unexpected CSV columns: {line}")
                saw_columns = True
                continue
            records.append(_record_from_strings(line.split(",")))
        return header, records
    if fmt == "json":
        doc = json.loads(text)
        return doc.get("header"), [SweepRecord(**r) for r in doc["records"]]
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def read_records(path, fmt: str = "csv") -> tuple[dict | None, list[SweepRecord]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read records from {path}: {exc}") from exc
    return parse_records(text, fmt)


def bler_monotonicity_flags(records: Sequence[SweepRecord]) -> list[str]:
    """Flag (never fail) BLER increases along the sweep beyond 2 binomial sigma.

    Returns human-readable warnings for any metric kind whose estimated BLER
    rises with Eb/N0 by more than twice the combined standard error.
    """
    flags = []
    by_kind: dict[str, list[SweepRecord]] = {}
    for rec in records:
        by_kind.setdefault(rec.metric, []).append(rec)
    for kind, recs in by_kind.items():
        recs = sorted(recs, key=lambda r: r.ebn0_db)
        for prev, cur in zip(recs, recs[1:]):
            var = (
                prev.bler * (1 - prev.bler) / prev.trials
                + cur.bler * (1 - cur.bler) / cur.trials
            )
            if cur.bler > prev.bler + 2.0 * var ** 0.5:
                flags.append(
                    f"{kind}: BLER rose from {prev.bler:.3g} at {prev.ebn0_db} dB "
                    f"to {cur.bler:.3g} at {cur.ebn0_db} dB (beyond 2 sigma)"
                )
    return flags
