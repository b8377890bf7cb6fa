"""Power against the sparsity level p0 for both random alternatives, S1-S4.

The sample sizes and dimension of these grids are not pinned anywhere; the
defaults (n1 = n2 = 30, p = 100) are adjustable.  Output is long-format CSV
ready for plotting.
"""

import argparse

from bfmeantest.harness import ScenarioSpec, power_curve, reports_to_csv
from bfmeantest.simgen import MeanSpec, SigmaSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--p", type=int, default=100)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20240)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--tests", default="BF2,BS,CQ,SD,PB")
    ap.add_argument("--out", default="sparsity.csv")
    args = ap.parse_args()

    reports = []
    for sigma in ("S1", "S2", "S3", "S4"):
        for alt in ("alt1", "alt2"):
            base = ScenarioSpec(SigmaSpec(sigma, args.p), MeanSpec(alt), args.n, args.n,
                                reps=args.reps, seed=args.seed, tests=args.tests,
                                label=f"{sigma}_{alt}")
            for rep in power_curve(base, "p0", [0.5, 0.6, 0.7, 0.8, 0.9], workers=args.threads):
                reports.append(rep)
                cells = "  ".join(f"{k}={v.rejection_rate:.4f}" for k, v in rep.results.items())
                print(f"{sigma} {alt} p0={rep.scenario.mean.p0:.1f} {cells}", flush=True)
    with open(args.out, "w") as fh:
        fh.write(reports_to_csv(reports))


if __name__ == "__main__":
    main()
