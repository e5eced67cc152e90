"""Self-contained statistical verification helpers.

Chi-square and Kolmogorov-Smirnov machinery with embedded critical values
(regularized incomplete gamma by series/continued fraction, asymptotic KS
constant), so the verification harness carries no external stats
dependency.  All tests return a TestReport; pass means the statistic fell
below the critical value (one-sided convention throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "TestReport",
    "chi2_cdf",
    "chi2_sf",
    "chi2_critical",
    "normal_cdf",
    "ks_critical",
    "ks_statistic",
    "ks_one_sample",
    "chi_square_independence",
    "chi_square_gof",
    "chi_square_two_sample",
    "pearson_correlation",
]


@dataclass
class TestReport:
    """One verification verdict: pass iff statistic < critical_value."""

    name: str
    statistic: float
    critical_value: float
    alpha: float
    passed: bool
    sample_sizes: tuple[int, ...]
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "passed": self.passed,
            "sample_sizes": list(self.sample_sizes),
            "seed": self.seed,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# embedded distribution functions
# ---------------------------------------------------------------------------

def _gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), series + continued fraction."""
    if x < 0.0 or a <= 0.0:
        raise ValueError("need x >= 0 and a > 0")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        # series expansion around 0
        term = 1.0 / a
        total = term
        k = a
        for _ in range(1000):
            k += 1.0
            term *= x / k
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    # Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    frac = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        frac *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    q = frac * math.exp(-x + a * math.log(x) - math.lgamma(a))
    return 1.0 - q


def chi2_cdf(x: float, df: float) -> float:
    if x <= 0.0:
        return 0.0
    return _gamma_p(df / 2.0, x / 2.0)


def chi2_sf(x: float, df: float) -> float:
    return 1.0 - chi2_cdf(x, df)


def chi2_critical(df: float, alpha: float) -> float:
    """Upper-alpha quantile of chi-square, by bisection on the sf."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    lo, hi = 0.0, max(10.0, df)
    while chi2_sf(hi, df) > alpha:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def ks_critical(n: int, alpha: float) -> float:
    """Asymptotic one-sample critical value c(alpha)/sqrt(n)."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


# ---------------------------------------------------------------------------
# tests
# ---------------------------------------------------------------------------

def ks_statistic(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    cdf_vals = np.array([cdf(float(x)) for x in xs])
    upper = np.max(np.arange(1, n + 1) / n - cdf_vals)
    lower = np.max(cdf_vals - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_one_sample(
    samples: Sequence[float],
    cdf: Callable[[float], float],
    alpha: float = 0.01,
    *,
    name: str = "ks_one_sample",
    seed: int | None = None,
) -> TestReport:
    """One-sample KS test against a fully specified CDF (n >= 20)."""
    xs = np.asarray(samples, dtype=float)
    if len(xs) < 20:
        raise ValueError(f"need at least 20 samples, got {len(xs)}")
    if not np.all(np.isfinite(xs)):
        raise ValueError("samples must be finite")
    stat = ks_statistic(xs, cdf)
    crit = ks_critical(len(xs), alpha)
    return TestReport(
        name=name,
        statistic=stat,
        critical_value=crit,
        alpha=alpha,
        passed=stat < crit,
        sample_sizes=(len(xs),),
        seed=seed,
    )


def _merge_sparse(table: np.ndarray, min_expected: float) -> tuple[np.ndarray, bool]:
    """Merge smallest-margin rows/columns until expected counts clear the bar.

    Deterministic: repeatedly fuse the two rows (then columns) with the
    smallest marginals while some expected cell count is below
    ``min_expected`` and more than two categories remain.
    """
    merged = False

    def expected(t: np.ndarray) -> np.ndarray:
        return np.outer(t.sum(axis=1), t.sum(axis=0)) / t.sum()

    t = table.astype(float)
    while expected(t).min() < min_expected:
        if t.shape[0] <= 2 and t.shape[1] <= 2:
            break
        if t.shape[0] >= t.shape[1] and t.shape[0] > 2:
            order = np.argsort(t.sum(axis=1), kind="stable")
            a, b = sorted(order[:2])
            t[a] += t[b]
            t = np.delete(t, b, axis=0)
        else:
            order = np.argsort(t.sum(axis=0), kind="stable")
            a, b = sorted(order[:2])
            t[:, a] += t[:, b]
            t = np.delete(t, b, axis=1)
        merged = True
    return t, merged


def chi_square_independence(
    labels_a: Sequence,
    labels_b: Sequence,
    alpha: float = 0.01,
    *,
    min_expected: float = 5.0,
    name: str = "chi2_independence",
    seed: int | None = None,
) -> TestReport:
    """Pearson chi-square test of independence for paired discrete labels."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError("label sequences must have equal length")
    cats_a = sorted(set(a))
    cats_b = sorted(set(b))
    if len(cats_a) < 2 or len(cats_b) < 2:
        raise ValueError("independence test needs >= 2 categories on each side")
    ia = {c: i for i, c in enumerate(cats_a)}
    ib = {c: i for i, c in enumerate(cats_b)}
    table = np.zeros((len(cats_a), len(cats_b)))
    for x, y in zip(a, b):
        table[ia[x], ib[y]] += 1.0
    table, merged = _merge_sparse(table, min_expected)
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    stat = float(np.sum((table - expected) ** 2 / expected))
    df = (table.shape[0] - 1) * (table.shape[1] - 1)
    crit = chi2_critical(df, alpha)
    return TestReport(
        name=name,
        statistic=stat,
        critical_value=crit,
        alpha=alpha,
        passed=stat < crit,
        sample_sizes=(len(a),),
        seed=seed,
        details={"df": df, "cells_merged": merged, "shape": list(table.shape)},
    )


def chi_square_gof(
    counts: Sequence[float],
    probs: Sequence[float],
    alpha: float = 0.01,
    *,
    min_expected: float = 5.0,
    name: str = "chi2_gof",
    seed: int | None = None,
) -> TestReport:
    """Goodness of fit of observed counts against fixed cell probabilities."""
    obs = np.asarray(counts, dtype=float)
    pr = np.asarray(probs, dtype=float)
    if obs.shape != pr.shape:
        raise ValueError("counts and probs must align")
    if np.any(pr < 0) or pr.sum() <= 0:
        raise ValueError("probs must be nonnegative with positive total")
    pr = pr / pr.sum()
    n = obs.sum()
    exp = n * pr
    # fuse ascending-expectation cells until the bar is met
    order = np.argsort(exp, kind="stable")
    obs, exp = obs[order], exp[order]
    merged = False
    while len(exp) > 2 and exp.min() < min_expected:
        obs[1] += obs[0]
        exp[1] += exp[0]
        obs, exp = obs[1:], exp[1:]
        merged = True
    if len(exp) < 2:
        raise ValueError("too few cells after merging")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    df = len(exp) - 1
    crit = chi2_critical(df, alpha)
    return TestReport(
        name=name,
        statistic=stat,
        critical_value=crit,
        alpha=alpha,
        passed=stat < crit,
        sample_sizes=(int(n),),
        seed=seed,
        details={"df": df, "cells_merged": merged},
    )


def chi_square_two_sample(
    counts_a: Sequence[float],
    counts_b: Sequence[float],
    alpha: float = 0.01,
    *,
    min_expected: float = 5.0,
    name: str = "chi2_two_sample",
    seed: int | None = None,
) -> TestReport:
    """Homogeneity test of two binned samples over the same cells."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("need two aligned 1-D count vectors")
    table, merged = _merge_sparse(np.stack([a, b]), min_expected)
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / table.sum()
    stat = float(np.sum((table - expected) ** 2 / expected))
    df = table.shape[1] - 1
    crit = chi2_critical(df, alpha)
    return TestReport(
        name=name,
        statistic=stat,
        critical_value=crit,
        alpha=alpha,
        passed=stat < crit,
        sample_sizes=(int(a.sum()), int(b.sum())),
        seed=seed,
        details={"df": df, "cells_merged": merged, "bins": int(table.shape[1])},
    )


def pearson_correlation(x: Sequence[float], y: Sequence[float]) -> float:
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    xv = xv - xv.mean()
    yv = yv - yv.mean()
    denom = math.sqrt(float(xv @ xv) * float(yv @ yv))
    if denom == 0.0:
        return 0.0
    return float(xv @ yv) / denom
