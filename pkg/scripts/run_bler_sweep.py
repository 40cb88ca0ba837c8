#!/usr/bin/env python3
"""Block-error-rate sweep for the (64, 57) polar and Reed-Muller codes.

Writes one CSV per code family; plot ebn0_db vs bler (log y) to compare the
two codes and confirm the metric kinds overlap.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sphdec.sim import (  # noqa: E402
    SweepConfig,
    bler_monotonicity_flags,
    run_sweep,
    sweep_header,
    write_records,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5000, help="trials per sweep point")
    ap.add_argument("--ebn0", default="2,3,4,5,6", help="comma-separated Eb/N0 grid in dB")
    ap.add_argument("--kinds", default="m1,m2", help="metric kinds (m0 is very slow at 2-3 dB)")
    ap.add_argument("--seed", type=int, default=20260801)
    ap.add_argument("--min-errors", type=int, default=200, help="early-stop error target (0 = off)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=".")
    args = ap.parse_args()

    ebn0 = [float(tok) for tok in args.ebn0.split(",")]
    kinds = [tok.strip() for tok in args.kinds.split(",")]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for family in ("polar", "rm"):
        cfg = SweepConfig(
            family=family, n=6, K=57, ebn0_db_list=ebn0, kinds=kinds,
            trials_per_point=args.trials, master_seed=args.seed,
            min_block_errors=args.min_errors,
        )
        records = run_sweep(cfg, workers=args.workers)
        out = out_dir / f"bler_{family}_64_57.csv"
        write_records(records, out, "csv", sweep_header(cfg))
        print(f"{family}: wrote {out}")
        for r in records:
            print(
                f"  {r.ebn0_db:4.1f} dB  {r.metric}  bler={r.bler:.5f} "
                f"({r.block_errors}/{r.trials})  avg_visits={r.avg_node_visits:.0f}"
            )
        for flag in bler_monotonicity_flags(records):
            print(f"  warning: {flag}")


if __name__ == "__main__":
    main()
