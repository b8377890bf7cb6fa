"""Named access to every implemented test, evaluated from one shared summary."""

from __future__ import annotations

from .baselines import PbConfig, t_bs, t_cq, t_pb, t_sd
from .bf import DEFAULT_K, TestOutcome, correction_coefficients, t_bf1, t_bf2
from .core import TwoSampleSummary, pooled_summary

TEST_IDS = ("BF1", "BF2", "BS", "CQ", "SD", "PB")


def parse_tests(tests) -> tuple[str, ...]:
    """Normalize ``"bf1,sd"`` or an iterable of names to upper-case ids."""
    if isinstance(tests, str):
        tests = [t for t in tests.split(",") if t.strip()]
    out = tuple(t.strip().upper() for t in tests)
    unknown = [t for t in out if t not in TEST_IDS]
    if unknown:
        raise ValueError(f"unknown test id(s) {unknown}; choose from {', '.join(TEST_IDS)}")
    if not out:
        raise ValueError("no tests requested")
    return out


def evaluate(x1, x2, tests, k: float = DEFAULT_K, pb_cfg: PbConfig | None = None,
             summary: TwoSampleSummary | None = None, collect_errors: bool = False):
    """Evaluate ``tests`` on one pair of samples.

    Returns a dict ``name -> TestOutcome``.  With ``collect_errors`` a failing
    test maps to the raised exception instead of propagating it.
    """
    summary = summary if summary is not None else pooled_summary(x1, x2)
    out: dict[str, TestOutcome | Exception] = {}
    for name in tests:
        try:
            if name == "BF1":
                res = t_bf1(summary, k)
            elif name == "BF2":
                res = t_bf2(summary, k, correction_coefficients(summary, k))
            elif name == "BS":
                res = t_bs(summary)
            elif name == "CQ":
                res = t_cq(x1, x2, summary)
            elif name == "SD":
                res = t_sd(summary)
            elif name == "PB":
                res = t_pb(summary, pb_cfg)
            else:
                raise ValueError(f"unknown test id {name!r}")
        except (ArithmeticError, ValueError) as exc:
            if not collect_errors:
                raise
            res = exc
        out[name] = res
    return out
