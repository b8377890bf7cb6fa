"""Small-sample size/power grid (n1 = n2 = 5) from configs/small_sample.cfg.

    python scripts/small_sample.py --reps 5000 --out results/small_sample.csv
"""

import argparse
import os
from dataclasses import replace

from bfmeantest.harness import load_config, reports_to_csv, run_scenario

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--config", default=os.path.join(HERE, "..", "configs", "small_sample.cfg"))
    ap.add_argument("--reps", type=int, help="override the replication count")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="small_sample.csv")
    args = ap.parse_args()

    specs = load_config(args.config)
    if args.reps:
        specs = [replace(s, reps=args.reps) for s in specs]
    reports = []
    for spec in specs:
        rep = run_scenario(spec, workers=args.threads)
        reports.append(rep)
        cells = "  ".join(f"{k}={v.rejection_rate:.4f}" for k, v in rep.results.items())
        print(f"{spec.label:<16} {cells}", flush=True)
    with open(args.out, "w") as fh:
        fh.write(reports_to_csv(reports))


if __name__ == "__main__":
    main()
