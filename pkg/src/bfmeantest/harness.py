"""Monte Carlo size/power engine.

A replication ``r`` of a scenario draws its data from streams keyed by
``(seed, r)``, evaluates every requested test and records the statistic.
Replications are split into contiguous chunks for a process pool and merged
back in replication order, so a report is identical for any worker count.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from .baselines import KRule, PbConfig
from .bf import DEFAULT_K, asymptotic_power
from .core import InputError
from .registry import evaluate, parse_tests
from .simgen import (
    GROUP1,
    GROUP2,
    MEAN,
    InnovationKind,
    InnovationSpec,
    MeanKind,
    MeanSpec,
    SigmaKind,
    SigmaSpec,
    build_mean,
    build_sigma,
    fixed_mean_stream,
    sample_pair,
    sqrt_psd,
    stream,
)

MIN_DIAGNOSTIC_REPS = 50


class ReplicationError(RuntimeError):
    """A test failed inside a replication of a strict run."""


@dataclass(frozen=True)
class ScenarioSpec:
    sigma: SigmaSpec
    mean: MeanSpec = field(default_factory=MeanSpec)
    n1: int = 30
    n2: int = 30
    innov: InnovationSpec = field(default_factory=InnovationSpec)
    alpha: float = 0.05
    reps: int = 5000
    seed: int = 0
    tests: tuple = ("BF2", "SD")
    k_bf: float = DEFAULT_K
    pb_cfg: PbConfig = field(default_factory=PbConfig)
    strict: bool = True
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tests", parse_tests(self.tests))
        if self.reps < 1:
            raise InputError("reps must be at least 1")
        if not 0 < self.alpha < 1:
            raise InputError("alpha must lie in (0, 1)")
        if self.n1 < 2 or self.n2 < 2:
            raise InputError("each group needs at least two observations")

    @property
    def p(self) -> int:
        return self.sigma.p

    def key(self) -> dict:
        """Flat scenario description used as the leading CSV columns."""
        return {
            "label": self.label,
            "sigma": self.sigma.kind.value,
            "p": self.p,
            "n1": self.n1,
            "n2": self.n2,
            "mean": self.mean.kind.value,
            "p0": self.mean.p0 if self.mean.is_random else "",
            "innov": self.innov.kind.value,
            "alpha": self.alpha,
            "reps": self.reps,
            "seed": self.seed,
            "k_bf": self.k_bf,
        }


@dataclass(frozen=True)
class TestSummary:
    __test__ = False

    test: str
    rejection_rate: float
    mc_standard_error: float
    mean_statistic: float
    failures: int
    valid: int


@dataclass
class McReport:
    scenario: ScenarioSpec
    results: dict
    statistics: dict = field(repr=False)
    wall_time: float = 0.0

    def rate(self, test: str) -> float:
        return self.results[test].rejection_rate

    def rows(self) -> list[dict]:
        out = []
        for name, res in self.results.items():
            row = dict(self.scenario.key())
            row.update(test=name, rate=res.rejection_rate, se=res.mc_standard_error,
                       mean_stat=res.mean_statistic, failures=res.failures)
            out.append(row)
        return out

    def to_document(self) -> dict:
        s = self.scenario
        return {
            "scenario": {
                **s.key(),
                "sigma_seed": s.sigma.seed,
                "tests": list(s.tests),
                "pb_m": s.pb_cfg.m,
                "strict": s.strict,
            },
            "results": [asdict(r) for r in self.results.values()],
            "wall_time": self.wall_time,
        }


# ---------------------------------------------------------------------------
# replication engine

_SETUP_CACHE: dict = {}


def _setup(spec: ScenarioSpec):
    key = (spec.sigma, spec.mean, spec.seed)
    if key not in _SETUP_CACHE:
        _SETUP_CACHE.clear()
        sigma = build_sigma(spec.sigma)
        root = sqrt_psd(sigma)
        fixed = None
        if not (spec.mean.is_random and spec.mean.redraw):
            fixed = build_mean(spec.mean, sigma, fixed_mean_stream(spec.seed))
        _SETUP_CACHE[key] = (sigma, root, fixed)
    return _SETUP_CACHE[key]


def replication_data(spec: ScenarioSpec, rep: int):
    """Regenerate the two samples of replication ``rep``."""
    sigma, root, fixed = _setup(spec)
    mu2 = fixed if fixed is not None else build_mean(spec.mean, sigma, stream(spec.seed, rep, MEAN))
    rngs = (stream(spec.seed, rep, GROUP1), stream(spec.seed, rep, GROUP2))
    return sample_pair(0.0, mu2, root, spec.n1, spec.n2, spec.innov, rngs)


def _run_chunk(spec: ScenarioSpec, start: int, stop: int) -> np.ndarray:
    out = np.full((stop - start, len(spec.tests)), np.nan)
    for i, rep in enumerate(range(start, stop)):
        x1, x2 = replication_data(spec, rep)
        res = evaluate(x1, x2, spec.tests, spec.k_bf, spec.pb_cfg, collect_errors=True)
        for j, name in enumerate(spec.tests):
            r = res[name]
            if isinstance(r, Exception):
                if spec.strict:
                    raise ReplicationError(
                        f"replication {rep}, test {name}: {type(r).__name__}: {r}") from r
                continue
            out[i, j] = r.statistic
    return out


def _chunks(reps: int, workers: int) -> list[tuple[int, int]]:
    n_chunks = 1 if workers <= 1 else min(reps, 4 * workers)
    edges = np.linspace(0, reps, n_chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate_statistics(spec: ScenarioSpec, workers: int = 1, progress: bool = False) -> np.ndarray:
    """Statistics of every replication, shape ``(reps, len(tests))``; NaN marks failures."""
    chunks = _chunks(spec.reps, workers)
    if workers <= 1:
        parts = []
        step = max(1, spec.reps // 10)
        for start in range(0, spec.reps, step):
            parts.append(_run_chunk(spec, start, min(spec.reps, start + step)))
            if progress:
                print(f"[{spec.label or spec.sigma.kind.value}] {min(spec.reps, start + step)}"
                      f"/{spec.reps}", file=sys.stderr, flush=True)
        return np.concatenate(parts, axis=0)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, spec, a, b) for a, b in chunks]
        parts = []
        for (a, b), fut in zip(chunks, futures):
            parts.append(fut.result())
            if progress:
                print(f"[{spec.label or spec.sigma.kind.value}] {b}/{spec.reps}",
                      file=sys.stderr, flush=True)
    return np.concatenate(parts, axis=0)


def summarize(spec: ScenarioSpec, statistics: np.ndarray, wall_time: float = 0.0) -> McReport:
    crit = stats.norm.isf(spec.alpha)
    results, per_test = {}, {}
    for j, name in enumerate(spec.tests):
        col = statistics[:, j]
        ok = np.isfinite(col)
        valid = int(ok.sum())
        if valid:
            # p <= alpha  <=>  statistic >= u_{1-alpha}
            rate = float(np.mean(col[ok] >= crit))
            mean_stat = float(np.mean(col[ok]))
            se = math.sqrt(rate * (1.0 - rate) / valid)
        else:
            rate = se = mean_stat = float("nan")
        results[name] = TestSummary(name, rate, se, mean_stat, spec.reps - valid, valid)
        per_test[name] = col
    return McReport(scenario=spec, results=results, statistics=per_test, wall_time=wall_time)


def run_scenario(spec: ScenarioSpec, workers: int = 1, progress: bool = False) -> McReport:
    t0 = time.perf_counter()
    statistics = simulate_statistics(spec, workers, progress)
    return summarize(spec, statistics, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class NullDiagnostics:
    test: str
    statistics: np.ndarray
    ks_distance: float
    ks_pvalue: float


def null_statistic_diagnostics(spec: ScenarioSpec, workers: int = 1) -> dict:
    """Sorted null statistics and a Kolmogorov-Smirnov fit to N(0, 1), per test."""
    if spec.mean.kind is not MeanKind.NULL_ZERO:
        raise InputError("null diagnostics need a NULL_ZERO mean")
    if spec.reps < MIN_DIAGNOSTIC_REPS:
        raise InputError(f"insufficient replications ({spec.reps} < {MIN_DIAGNOSTIC_REPS})")
    report = run_scenario(spec, workers)
    out = {}
    for name, col in report.statistics.items():
        values = np.sort(col[np.isfinite(col)])
        ks = stats.kstest(values, "norm")
        out[name] = NullDiagnostics(name, values, float(ks.statistic), float(ks.pvalue))
    return out


SWEEP_AXES = ("p0", "n", "p")


def sweep_spec(base: ScenarioSpec, axis: str, value) -> ScenarioSpec:
    if axis == "p0":
        return replace(base, mean=replace(base.mean, p0=float(value)))
    if axis == "n":
        return replace(base, n1=int(value), n2=int(value))
    if axis == "p":
        return replace(base, sigma=replace(base.sigma, p=int(value)))
    raise InputError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def power_curve(base_spec: ScenarioSpec, axis: str, values, workers: int = 1,
                progress: bool = False) -> list[McReport]:
    values = list(values)
    if not values:
        raise InputError("power_curve needs at least one sweep value")
    return [run_scenario(sweep_spec(base_spec, axis, v), workers, progress) for v in values]


def theoretical_vs_empirical(spec: ScenarioSpec, delta, test: str = "BF1",
                             workers: int = 1) -> tuple[float, float]:
    """Limiting power next to the simulated rejection rate for mean difference ``delta``."""
    delta = np.asarray(delta, dtype=float)
    sigma = build_sigma(spec.sigma)
    n0 = spec.n1 * spec.n2 / (spec.n1 + spec.n2)
    theory = asymptotic_power(delta, sigma, spec.k_bf, n0, spec.alpha)
    fixed = replace(spec, mean=MeanSpec(MeanKind.FIXED, values=tuple(delta)), tests=(test,))
    return theory, run_scenario(fixed, workers).rate(test)


# ---------------------------------------------------------------------------
# serialization

CSV_FIELDS = ["label", "sigma", "p", "n1", "n2", "mean", "p0", "innov", "alpha", "reps",
              "seed", "k_bf", "test", "rate", "se", "mean_stat", "failures"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rep in reports:
        for row in rep.rows():
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def reports_to_json(reports) -> str:
    return json.dumps([r.to_document() for r in reports], indent=2)


_TRUE = {"1", "true", "yes", "on"}


def scenario_from_mapping(cfg) -> ScenarioSpec:
    """Build a scenario from string key/value pairs (config file or CLI flags)."""
    get = cfg.get
    if get("p") in (None, ""):
        raise InputError("scenario is missing p")
    try:
        p = int(get("p"))
        sigma = SigmaSpec(SigmaKind(str(get("sigma", "S1")).upper()), p,
                          seed=int(get("sigma_seed", 0)))
        mean_kind = MeanKind(str(get("mean", "null")).lower())
        values = None
        if mean_kind is MeanKind.FIXED:
            values = tuple(float(v) for v in str(get("values")).split(","))
        mean = MeanSpec(
            mean_kind,
            p0=float(get("p0", 0.5)),
            frac=float(get("frac")) if get("frac") not in (None, "") else None,
            mag=float(get("mag")) if get("mag") not in (None, "") else None,
            values=values,
            redraw=str(get("redraw", "true")).lower() in _TRUE,
        )
        pb_k = get("pb_k")
        pb = PbConfig(m=float(get("pb_m", 0.0)),
                      k_rule=KRule.EXPLICIT if pb_k not in (None, "") else KRule.SCALED_MAX_EIGEN,
                      k=float(pb_k) if pb_k not in (None, "") else None)
        n = get("n")
        n1 = int(get("n1", n if n is not None else 30))
        n2 = int(get("n2", n if n is not None else n1))
        return ScenarioSpec(
            sigma=sigma, mean=mean, n1=n1, n2=n2,
            innov=InnovationSpec(InnovationKind(str(get("innov", "gaussian")).lower())),
            alpha=float(get("alpha", 0.05)),
            reps=int(get("reps", 5000)),
            seed=int(get("seed", 0)),
            tests=get("tests", "BF2,SD"),
            k_bf=float(get("k", DEFAULT_K)),
            pb_cfg=pb,
            strict=str(get("strict", "true")).lower() in _TRUE,
            label=str(get("label", "")),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"invalid scenario: {exc}") from exc


def load_config(path) -> list[ScenarioSpec]:
    """Read scenarios from an INI-style ``key = value`` file.

    Each section is one scenario (its name becomes the label unless given);
    ``[DEFAULT]`` values are shared.  A file without sections is one scenario.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError:
        parser = configparser.ConfigParser(interpolation=None)
        parser.read_string("[scenario]\n" + text)
    specs = []
    for name in parser.sections():
        section = dict(parser[name])
        section.setdefault("label", name)
        specs.append(scenario_from_mapping(section))
    if not specs:
        raise InputError(f"{path} defines no scenarios")
    return specs
