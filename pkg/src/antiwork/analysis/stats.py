"""Two-group rank tests with Bonferroni starring."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from ..errors import ConfigError
from .. import kernels

# Exact null distribution is used for untied samples up to this pooled size.
EXACT_MAX_N = 20


class RankTest(NamedTuple):
    z: float
    p: float


def _normal_two_sided(z: float) -> float:
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def rank_sum_u(sample_a, sample_b) -> float:
    """Mann-Whitney U of sample a (midranks for ties)."""
    a = np.asarray(sample_a, dtype=float)
    ranks = rankdata(np.concatenate([a, np.asarray(sample_b, dtype=float)]))
    return float(ranks[: a.size].sum() - a.size * (a.size + 1) / 2.0)


def exact_rank_sum_p(u: float, n_a: int, n_b: int) -> float:
    """Two-sided p = 2 * min(P(U <= u), P(U >= u)) under the untied null."""
    counts = kernels.rank_sum_null_counts(n_a, n_b)
    total = counts.sum()
    k = int(round(u))
    lower = counts[: k + 1].sum() / total
    upper = counts[k:].sum() / total
    return float(min(1.0, 2.0 * min(lower, upper)))


def rank_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> RankTest:
    """Two-sample Wilcoxon rank-sum (Mann-Whitney) test.

    z uses the tie-corrected normal approximation with continuity correction
    and is signed by U_a - n_a*n_b/2.  p is two-sided: from the exact null
    distribution when there are no ties and the pooled size is at most
    ``EXACT_MAX_N``, otherwise from the normal approximation.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ConfigError("rank_test needs two non-empty samples")
    n_a, n_b = a.size, b.size
    N = n_a + n_b
    pooled = np.concatenate([a, b])
    u = rank_sum_u(a, b)
    mu = n_a * n_b / 2.0
    _, tie_sizes = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_sizes**3 - tie_sizes))
    var = n_a * n_b / 12.0 * ((N + 1) - tie_term / (N * (N - 1))) if N > 1 else 0.0
    dev = u - mu
    if var <= 0:
        z = 0.0
    else:
        z = math.copysign(max(abs(dev) - 0.5, 0.0), dev) / math.sqrt(var)
    if tie_term == 0 and N <= EXACT_MAX_N:
        p = exact_rank_sum_p(u, n_a, n_b)
    else:
        p = _normal_two_sided(z) if var > 0 else 1.0
    return RankTest(float(z), float(p))


def signed_rank_test(x: Sequence[float], y: Sequence[float]) -> RankTest:
    """Paired Wilcoxon signed-rank test (zero differences dropped), normal
    approximation with tie correction and continuity correction.

    z is signed by T+ - E[T+], so positive means x tends to exceed y.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if d.ndim != 1 or len(x) != len(y):
        raise ConfigError("signed_rank_test needs equal-length paired samples")
    d = d[d != 0]
    n = d.size
    if n == 0:
        return RankTest(0.0, 1.0)
    ranks = rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    mean = n * (n + 1) / 4.0
    _, ties = np.unique(np.abs(d), return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties**3 - ties)) / 48.0
    if var <= 0:
        return RankTest(0.0, 1.0)
    dev = t_plus - mean
    z = math.copysign(max(abs(dev) - 0.5, 0.0), dev) / math.sqrt(var)
    return RankTest(z, _normal_two_sided(z))


# ---------------------------------------------------------------- corrected results

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


@dataclass(frozen=True)
class StatTestResult:
    category: str
    mean_a: float
    mean_b: float
    z: float
    p: float
    stars: str = ""

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")


def stars_for(p: float, n_tests: int) -> str:
    for level, stars in STAR_LEVELS:
        if p < level / n_tests:
            return stars
    return ""


def correct_and_star(results: Sequence[StatTestResult], n_tests: int | None = None) -> list[StatTestResult]:
    """Bonferroni-starred copies: *** p < .001/N, ** p < .01/N, * p < .05/N."""
    n = len(results) if n_tests is None else n_tests
    if n < 1:
        raise ConfigError("number of tests must be at least 1")
    return [replace(r, stars=stars_for(r.p, n)) for r in results]


def compare_groups(values_a: dict[str, Sequence[float]], values_b: dict[str, Sequence[float]],
                   paired: bool = False) -> list[StatTestResult]:
    """Test every category present in both groups, then star with N = number of categories."""
    out = []
    test = signed_rank_test if paired else rank_test
    for cat in values_a:
        a, b = values_a[cat], values_b[cat]
        z, p = test(a, b)
        out.append(StatTestResult(cat, float(np.mean(a)), float(np.mean(b)), z, p))
    return correct_and_star(out)


def write_results_csv(results: Sequence[StatTestResult], path: str | Path,
                      group_names: tuple[str, str] = ("Antiwork", "Neutral")) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Category", group_names[0], group_names[1], "z", "p", "stars"])
        for r in results:
            w.writerow([r.category, f"{r.mean_a:.3f}", f"{r.mean_b:.3f}", f"{r.z:.3f}", f"{r.p:.6g}", r.stars])
