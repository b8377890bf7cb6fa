"""Acceptance criteria, each at its stated tolerance.

Every criterion records one PASS/FAIL line (printed in the pytest terminal
summary, or directly when this file is run as a script).  Criteria that are
known not to reproduce are marked ``xfail(strict=True)``: they still run in
full and print FAIL, and the suite turns red if they ever start passing.
"""

from __future__ import annotations

import functools
import math
import os
import sys
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from bfmeantest.baselines import cq_numerator
from bfmeantest.bf import Form, chi2_ratio_expectation, log_multigamma
from bfmeantest.core import pooled_summary, regularize_diag, trace_u, trace_u2_hat
from bfmeantest.data import load_csv, run_pairwise
from bfmeantest.harness import (
    ScenarioSpec,
    null_statistic_diagnostics,
    reports_to_csv,
    run_scenario,
    theoretical_vs_empirical,
)
from bfmeantest.simgen import (
    InnovationSpec,
    MeanSpec,
    SigmaSpec,
    build_sigma,
    sample_pair,
    sqrt_psd,
    stream,
)

sys.path.insert(0, os.path.dirname(__file__))
from oracles import (  # noqa: E402
    chi2_ratio_monte_carlo,
    cq_numerator_loops,
    log_multigamma_mp,
)

pytestmark = pytest.mark.slow

SEED = 20240
RESULTS: list[tuple[str, bool, str]] = []


def record(label: str, ok: bool, detail: str) -> bool:
    RESULTS.append((label, bool(ok), detail))
    return ok


# ---------------------------------------------------------------------------
# small-sample table: n1 = n2 = 5

SMALL_SAMPLE_REF = {
    # (sigma, p): (BF size, BF power, SD size, SD power)
    ("S1", 160): (0.0528, 0.7584, 0.0794, 0.6960),
    ("S2", 160): (0.0562, 0.6258, 0.0856, 0.6058),
    ("S3", 160): (0.0538, 0.6430, 0.0780, 0.6120),
    ("S4", 160): (0.0568, 0.6494, 0.0812, 0.6168),
    ("S1", 200): (0.0552, 0.8138, 0.0854, 0.7560),
    ("S2", 200): (0.0560, 0.6974, 0.0778, 0.6570),
    ("S3", 200): (0.0566, 0.7162, 0.0774, 0.6766),
    ("S4", 200): (0.0568, 0.7404, 0.0776, 0.7002),
}


@functools.lru_cache(maxsize=None)
def small_sample_cell(sigma: str, p: int, mean: str):
    spec = ScenarioSpec(SigmaSpec(sigma, p), MeanSpec(mean), 5, 5, reps=5000, seed=SEED,
                        tests=("BF2", "SD"), label=f"{sigma}/p={p}/{mean}")
    return run_scenario(spec)


def _cells(mean):
    return {key: small_sample_cell(*key, mean) for key in SMALL_SAMPLE_REF}


def test_01_small_sample_size():
    sizes = _cells("null")
    bad = []
    for key, rep in sizes.items():
        got, want = rep.rate("BF2"), SMALL_SAMPLE_REF[key][0]
        if abs(got - want) > 0.010:
            bad.append(f"{key[0]}/p={key[1]} {got:.4f} vs {want:.4f}")
    worst = max(abs(r.rate("BF2") - SMALL_SAMPLE_REF[k][0]) for k, r in sizes.items())
    assert record("1 small-sample grid BF2 size within 0.010 (8 cells)", not bad,
                  f"max |diff| {worst:.4f}" + (f"; off: {', '.join(bad)}" if bad else ""))


def test_02_small_sample_power():
    sizes, powers = _cells("null"), _cells("block_pm")
    bad = []
    for key, rep in powers.items():
        got, want = rep.rate("BF2"), SMALL_SAMPLE_REF[key][1]
        if abs(got - want) > 0.03:
            bad.append(f"BF2 {key[0]}/p={key[1]} {got:.4f} vs {want:.4f}")
    for key in (("S1", 160), ("S4", 200)):
        got, want = powers[key].rate("SD"), SMALL_SAMPLE_REF[key][3]
        if abs(got - want) > 0.03:
            bad.append(f"SD {key[0]}/p={key[1]} {got:.4f} vs {want:.4f}")
    for key, rep in sizes.items():
        if not rep.rate("BF2") < rep.rate("SD"):
            bad.append(f"size order {key[0]}/p={key[1]}")
    worst = max(abs(r.rate("BF2") - SMALL_SAMPLE_REF[k][1]) for k, r in powers.items())
    assert record("2 small-sample grid BF2/SD power within 0.03, BF2 size < SD size", not bad,
                  f"max BF2 |diff| {worst:.4f}" + (f"; off: {', '.join(bad)}" if bad else ""))


# ---------------------------------------------------------------------------
# misspecified innovations, p = 200, sparse +-0.4 alternative

MISSPEC_N = (20, 30, 40, 50, 60)
MISSPEC_TESTS = ("BF2", "BS", "CQ", "SD", "PB")
MISSPEC_PINNED = {("S4", 20): (0.0394, 0.7974), ("S5", 60): (0.0502, 0.6960)}


def _misspec(sigma, n, mean, reps, tests):
    spec = ScenarioSpec(SigmaSpec(sigma, 200), MeanSpec(mean), n, n,
                        InnovationSpec("centered_chi2"), reps=reps, seed=SEED, tests=tests,
                        label=f"{sigma}/n={n}/{mean}")
    return run_scenario(spec)


@functools.lru_cache(maxsize=None)
def misspec_size(sigma, n):
    reps = 5000 if (sigma, n) in MISSPEC_PINNED else 2000
    return _misspec(sigma, n, "null", reps, MISSPEC_TESTS)


@pytest.mark.xfail(strict=True, reason="S5 power cell does not reproduce; see decisions ledger")
def test_03_misspecification():
    bad, notes = [], []
    for (sigma, n), (size_ref, power_ref) in MISSPEC_PINNED.items():
        size = misspec_size(sigma, n).rate("BF2")
        power = _misspec(sigma, n, "sparse_pm", 5000, ("BF2",)).rate("BF2")
        notes.append(f"{sigma}/n={n} size {size:.4f} ({size_ref}) power {power:.4f} ({power_ref})")
        if abs(size - size_ref) > 0.012:
            bad.append(f"{sigma}/n={n} size")
        if abs(power - power_ref) > 0.03:
            bad.append(f"{sigma}/n={n} power")
    for sigma in ("S4", "S5"):
        for n in MISSPEC_N:
            for name, res in misspec_size(sigma, n).results.items():
                if not 0.03 <= res.rejection_rate <= 0.08:
                    bad.append(f"{name} size {res.rejection_rate:.4f} at {sigma}/n={n}")
    assert record("3 misspecification cells and size band [0.03, 0.08]", not bad,
                  "; ".join(notes) + (f"; off: {', '.join(bad)}" if bad else ""))


# ---------------------------------------------------------------------------
# ordering under sparsity designs, n1 = n2 = 30, p = 100


def test_04_ordering():
    def rates(sigma, alt):
        spec = ScenarioSpec(SigmaSpec(sigma, 100), MeanSpec(alt), 30, 30, reps=2000, seed=SEED,
                            tests=("BF2", "BS", "CQ", "PB"))
        rep = run_scenario(spec)
        return {k: v.rejection_rate for k, v in rep.results.items()}

    bad, notes = [], []
    for sigma in ("S3", "S4"):
        r = rates(sigma, "alt2")
        margin = r["BF2"] - max(r["BS"], r["CQ"], r["PB"])
        notes.append(f"{sigma}/alt2 margin {margin:.3f}")
        if margin < 0.05:
            bad.append(f"{sigma}/alt2")
    for alt in ("alt1", "alt2"):
        r = rates("S1", alt)
        gap = abs(r["BF2"] - r["BS"])
        notes.append(f"S1/{alt} |BF-BS| {gap:.3f}")
        if gap > 0.05:
            bad.append(f"S1/{alt}")
    assert record("4 sparsity ordering (BF dominant under S3/S4, tied under S1)", not bad,
                  "; ".join(notes))


# ---------------------------------------------------------------------------


def test_05_null_normality():
    spec = ScenarioSpec(SigmaSpec("S1", 200), n1=100, n2=100, reps=2000, seed=SEED,
                        tests=("BF1",))
    diag = null_statistic_diagnostics(spec)["BF1"]
    assert record("5 BF1 null statistics pass KS vs N(0,1) at 0.01", diag.ks_pvalue > 0.01,
                  f"KS D={diag.ks_distance:.4f}, p={diag.ks_pvalue:.3f}")


def test_06_trace_ratio_consistency():
    bad, worst = [], {200: 0.0, 800: 0.0}
    tol = {200: 0.05, 800: 0.02}
    for kind in ("S1", "S2", "S3", "S4"):
        sigma = build_sigma(SigmaSpec(kind, 200))
        root = sqrt_psd(sigma)
        lam = 1.0 / (np.diag(sigma) + 1.0)
        U = lam[:, None] * sigma
        tu, tu2 = np.trace(U), np.sum(U * U.T)
        for n in (200, 800):
            r1, r2 = [], []
            for rep in range(200):
                rngs = (stream(SEED, rep, 0), stream(SEED, rep, 1))
                x1, x2 = sample_pair(0.0, 0.0, root, n // 2, n // 2, None, rngs)
                s = pooled_summary(x1, x2)
                reg = regularize_diag(s, 1.0)
                r1.append(trace_u(s, reg) / tu)
                r2.append(trace_u2_hat(s, reg) / tu2)
            dev = max(abs(np.mean(r1) - 1), abs(np.mean(r2) - 1))
            worst[n] = max(worst[n], dev)
            if dev > tol[n]:
                bad.append(f"{kind}/n={n}")
    assert record("6 trace estimator ratios within 1+-0.05 (n=200), 1+-0.02 (n=800)", not bad,
                  f"max |ratio-1| {worst[200]:.4f} (n=200), {worst[800]:.4f} (n=800)")


def test_07_power_agreement():
    p, n, alpha = 200, 100, 0.05
    n0 = n * n / (2 * n)
    lam = np.full(p, 0.5)  # S1 with k = 1
    tr_u2 = float(np.sum(lam**2))
    spec = ScenarioSpec(SigmaSpec("S1", p), n1=n, n2=n, reps=2000, seed=SEED, tests=("BF1",))
    bad, notes = [], []
    for target in (0.3, 0.5, 0.8):
        shift = stats.norm.isf(alpha) + stats.norm.ppf(target)
        c = math.sqrt(shift * math.sqrt(2 * tr_u2) / (n0 * lam.sum()))
        theory, emp = theoretical_vs_empirical(spec, np.full(p, c))
        notes.append(f"{theory:.2f}->{emp:.4f}")
        if abs(theory - emp) > 0.05:
            bad.append(f"{target}")
    assert record("7 theoretical vs empirical BF1 power within 0.05", not bad, ", ".join(notes))


def test_08_oracles():
    failures = []
    rng = np.random.default_rng(SEED)
    # dense trace oracle
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(2, 30))
        x1 = rng.normal(size=(int(rng.integers(3, 12)), p)) * rng.uniform(0.2, 4, size=p)
        x2 = rng.normal(size=(int(rng.integers(3, 12)), p)) * rng.uniform(0.2, 4, size=p)
        s = pooled_summary(x1, x2)
        L = np.diag(1 / (np.diag(s.S) + 1.0))
        U = L @ s.S
        want = np.trace(U @ U) - np.trace(U) ** 2 / (s.n - 2)
        worst = max(worst, abs(trace_u2_hat(s, regularize_diag(s, 1.0)) - want) / abs(want))
    if worst > 1e-10:
        failures.append(f"trace_u2_hat rel {worst:.2e}")
    # Monte Carlo chi-square ratios, one form per point
    points = [(a, df) for df in (3, 8, 18, 58, 198) for a in (0.1, 1.0, 10.0, 100.0)]
    forms = list(Form)
    worst_z = 0.0
    for i, (a, df) in enumerate(points):
        form = forms[i % 3]
        means, ses = chi2_ratio_monte_carlo(a, df, 10_000_000, seed=SEED + i)
        got = chi2_ratio_expectation(a, df, form)
        z = abs(got - means[i % 3]) / ses[i % 3]
        worst_z = max(worst_z, z)
        if z > 3:
            failures.append(f"chi2 {form.value} a={a} df={df} z={z:.2f}")
    # quadruple loop CQ oracle
    worst_cq = 0.0
    for _ in range(10):
        n1, n2, p = (int(v) for v in rng.integers(2, 7, size=3))
        x1, x2 = rng.normal(size=(n1, p)), rng.normal(size=(n2, p))
        want = cq_numerator_loops(x1, x2)
        worst_cq = max(worst_cq, abs(cq_numerator(x1, x2) - want) / max(1.0, abs(want)))
    if worst_cq > 1e-12:
        failures.append(f"cq rel {worst_cq:.2e}")
    # extended-precision multigamma
    worst_mg = 0.0
    for p, x in [(1, 0.3), (2, 1.7), (5, 4.0), (20, 30.5), (100, 77.0), (300, 400.0)]:
        want = log_multigamma_mp(p, x)
        worst_mg = max(worst_mg, abs(log_multigamma(p, x) - want) / abs(want))
    if worst_mg > 1e-10:
        failures.append(f"multigamma rel {worst_mg:.2e}")
    assert record("8 oracle equivalences", not failures,
                  f"trace {worst:.1e}, chi2 max z {worst_z:.2f}, cq {worst_cq:.1e}, "
                  f"multigamma {worst_mg:.1e}" + (f"; off: {failures}" if failures else ""))


def test_09_determinism_across_workers():
    spec = ScenarioSpec(SigmaSpec("S3", 60), MeanSpec("alt2"), 8, 9, reps=240, seed=SEED,
                        tests=("BF1", "BF2", "BS", "CQ", "SD", "PB"))
    one = reports_to_csv([run_scenario(spec, workers=1)]).encode()
    eight = reports_to_csv([run_scenario(spec, workers=8)]).encode()
    assert record("9 identical CSV bytes on 1 and 8 workers", one == eight,
                  f"{len(one)} bytes")


SRBCT_ENV = "BFMEANTEST_SRBCT"


@pytest.mark.skipif(not os.environ.get(SRBCT_ENV), reason=f"set {SRBCT_ENV} to a SRBCT CSV")
def test_10_srbct_optional():
    """Expects a CSV with one row per sample and a label column.

    The label column name comes from ``BFMEANTEST_SRBCT_LABEL`` (default
    ``class``); labels are mapped to B, N, E, R by their first letter
    (BL, NB, EWS, RMS).
    """
    label = os.environ.get("BFMEANTEST_SRBCT_LABEL", "class")
    table = load_csv(os.environ[SRBCT_ENV], label_column=label)
    letters = tuple(str(lab).strip().upper()[:1] for lab in table.labels)
    table = replace(table, labels=letters)
    res = run_pairwise(table, "bf2,bs,cq,sd,pb")
    by_pair: dict = {}
    for r in res:
        by_pair.setdefault(frozenset(r.pair.split("-")), {})[r.test] = r
    bad = []
    for pair in ("BN", "BE", "BR", "NE"):
        cell = by_pair[frozenset(pair)]
        most = min(cell.values(), key=lambda r: r.log_p if r.ok else np.inf)
        if most.test != "BF2" or not cell["BF2"].statistic > 0:
            bad.append(pair)
    sizes = sorted(table.group_sizes().values())
    assert record("10 SRBCT: BF most extreme on BN/BE/BR/NE", not bad,
                  f"group sizes {sizes}" + (f"; off: {bad}" if bad else ""))


def summary_lines() -> list[str]:
    return [f"{'PASS' if ok else 'FAIL'}  {label}: {detail}" for label, ok, detail in RESULTS]


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for fn in tests:
        if fn is test_10_srbct_optional and not os.environ.get(SRBCT_ENV):
            RESULTS.append(("10 SRBCT (optional)", True, "skipped, dataset not supplied"))
            continue
        try:
            fn()
        except AssertionError:
            pass
        print(summary_lines()[-1], flush=True)
