#!/usr/bin/env python3
"""Average search complexity (node visits) of the sort keys on (64, 57) codes.

Compares the conventional length-first key m0 against the ML key m1 and its
high-SNR simplification m2 on identical received vectors.  m0 costs millions
of visits per decode below 4 dB; budget accordingly or drop it from --kinds.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sphdec.sim import SweepConfig, run_sweep, sweep_header, write_records  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=["polar", "rm"], default="polar")
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--ebn0", default="3,4,5,6")
    ap.add_argument("--kinds", default="m0,m1,m2")
    ap.add_argument("--seed", type=int, default=20260802)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args()

    cfg = SweepConfig(
        family=args.family, n=6, K=57,
        ebn0_db_list=[float(tok) for tok in args.ebn0.split(",")],
        kinds=[tok.strip() for tok in args.kinds.split(",")],
        trials_per_point=args.trials, master_seed=args.seed, min_block_errors=0,
    )
    records = run_sweep(cfg, workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"complexity_{args.family}_64_57.csv"
    write_records(records, out, "csv", sweep_header(cfg))
    print(f"wrote {out}")

    by_point: dict[float, dict[str, float]] = {}
    for r in records:
        by_point.setdefault(r.ebn0_db, {})[r.metric] = r.avg_node_visits
    for db, kinds in sorted(by_point.items()):
        cells = "  ".join(f"{k}={v:.0f}" for k, v in kinds.items())
        line = f"{db:4.1f} dB  avg visits: {cells}"
        if "m0" in kinds and "m1" in kinds:
            line += f"  (m0/m1 = {kinds['m0'] / kinds['m1']:.1f}x)"
        print(line)


if __name__ == "__main__":
    main()
