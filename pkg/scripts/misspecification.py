"""Size and power under centered chi-square innovations, p = 200, S4 and S5.

Sweeps n1 = n2 over 20..60 with the sparse +-0.4 alternative.
"""

import argparse

from bfmeantest.harness import ScenarioSpec, power_curve, reports_to_csv
from bfmeantest.simgen import InnovationSpec, MeanSpec, SigmaSpec

TESTS = ("BF2", "BS", "CQ", "SD", "PB")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--reps", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=20240)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="misspecification.csv")
    args = ap.parse_args()

    reports = []
    for sigma in ("S4", "S5"):
        for mean in ("null", "sparse_pm"):
            base = ScenarioSpec(SigmaSpec(sigma, 200), MeanSpec(mean), 20, 20,
                                InnovationSpec("centered_chi2"), reps=args.reps,
                                seed=args.seed, tests=TESTS, label=f"{sigma}_{mean}")
            for rep in power_curve(base, "n", [20, 30, 40, 50, 60], workers=args.threads):
                reports.append(rep)
                cells = "  ".join(f"{k}={v.rejection_rate:.4f}" for k, v in rep.results.items())
                print(f"{sigma} {mean:<9} n={rep.scenario.n1:<3} {cells}", flush=True)
    with open(args.out, "w") as fh:
        fh.write(reports_to_csv(reports))


if __name__ == "__main__":
    main()
