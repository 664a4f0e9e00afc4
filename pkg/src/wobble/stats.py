"""Distribution summaries and two-sample tests over wobbliness values.

Quantiles use linear interpolation on (n-1) positions; outliers follow the
Tukey rule (further than 1.5 IQR from either quartile). The variance-equality
tests are mean-centered Levene and Fligner-Killeen; Kolmogorov-Smirnov covers
the general two-sample case. Each test offers an exact-statistic permutation
p-value as a small-sample fallback. Degenerate inputs (no spread anywhere)
return p = 1 with a flag rather than NaN so ROC sweeps stay ordered.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import _ppnd16_numpy
from .special import chi2_sf, f_sf, kolmogorov_sf


@dataclass
class BoxplotSummary:
    q25: float
    q50: float
    q75: float
    lower_fence: float
    upper_fence: float
    outlier_indices: list
    mean: float

    def to_json(self) -> dict:
        return {
            "q25": self.q25, "q50": self.q50, "q75": self.q75,
            "lower_fence": self.lower_fence, "upper_fence": self.upper_fence,
            "outlier_indices": [int(i) for i in self.outlier_indices],
            "mean": self.mean,
        }


@dataclass
class TestResult:
    statistic: float
    p_value: float
    test_name: str
    sample_sizes: tuple
    outliers_removed: bool = False
    degenerate: bool = False

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic, "p_value": self.p_value,
            "test_name": self.test_name, "sample_sizes": list(self.sample_sizes),
            "outliers_removed": self.outliers_removed, "degenerate": self.degenerate,
        }


@dataclass
class RocCurve:
    """Threshold sweep; lower score = more positive (scores are p-values)."""

    points: list  # (threshold, fpr, tpr), starts at (0,0), ends at (1,1)
    auc: float

    def to_json(self) -> dict:
        return {"points": [[t, f, p] for t, f, p in self.points], "auc": self.auc}

    def to_csv(self) -> str:
        lines = ["threshold,fpr,tpr"]
        lines += [f"{t},{f},{p}" for t, f, p in self.points]
        return "\n".join(lines) + "\n"


def _check_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("values must be non-empty")
    if np.any(np.isnan(v)):
        raise ValueError("values contain NaN")
    return v


def quantile(values, q: float) -> float:
    """Linear-interpolation quantile: position q*(n-1) on sorted values."""
    v = _check_values(values)
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be in [0, 1]")
    sv = np.sort(v)
    p = q * (sv.size - 1)
    lo = int(math.floor(p))
    hi = min(lo + 1, sv.size - 1)
    frac = p - lo
    return float(sv[lo] + frac * (sv[hi] - sv[lo]))


def boxplot_summary(values) -> BoxplotSummary:
    v = _check_values(values)
    q25, q50, q75 = quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)
    iqr = q75 - q25
    lower, upper = q25 - 1.5 * iqr, q75 + 1.5 * iqr
    outliers = np.nonzero((v < lower) | (v > upper))[0]
    return BoxplotSummary(
        q25=q25, q50=q50, q75=q75, lower_fence=lower, upper_fence=upper,
        outlier_indices=list(outliers), mean=float(v.mean()),
    )


def remove_outliers(values) -> np.ndarray:
    """Drop Tukey outliers. All-equal samples are returned unchanged, and so
    is any sample whose removal would come out empty."""
    v = _check_values(values)
    if np.all(v == v[0]):
        return v.copy()
    summary = boxplot_summary(v)
    keep = np.ones(v.size, dtype=bool)
    keep[summary.outlier_indices] = False
    if not keep.any():
        return v.copy()
    return v[keep]


# ---------------------------------------------------------------------------
# Two-sample tests


def levene_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Mean-centered Levene W for two groups; inf when one group has spread
    and the other none, nan when nothing has spread."""
    za = np.abs(a - a.mean())
    zb = np.abs(b - b.mean())
    na, nb = za.size, zb.size
    zbar = (za.sum() + zb.sum()) / (na + nb)
    num = (na + nb - 2) * (na * (za.mean() - zbar) ** 2 + nb * (zb.mean() - zbar) ** 2)
    den = ((za - za.mean()) ** 2).sum() + ((zb - zb.mean()) ** 2).sum()
    if den == 0.0:
        return math.nan if num == 0.0 else math.inf
    return num / den


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Exact two-sample sup-distance between ECDFs."""
    sa, sb = np.sort(a), np.sort(b)
    grid = np.concatenate([sa, sb])
    cdf_a = np.searchsorted(sa, grid, side="right") / sa.size
    cdf_b = np.searchsorted(sb, grid, side="right") / sb.size
    return float(np.abs(cdf_a - cdf_b).max())


def _midrank(v: np.ndarray) -> np.ndarray:
    """1-based average ranks with midranks for ties."""
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    upper = np.cumsum(counts)
    avg = (upper - counts + 1 + upper) / 2.0
    return avg[inverse]


def fligner_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Fligner-Killeen normal-scores statistic for two groups."""
    za = np.abs(a - np.median(a))
    zb = np.abs(b - np.median(b))
    pooled = np.concatenate([za, zb])
    n = pooled.size
    ranks = _midrank(pooled)
    scores = _ppnd16_numpy(0.5 + ranks / (2.0 * (n + 1)))
    var = scores.var(ddof=1)
    if var == 0.0:
        return math.nan
    grand = scores.mean()
    na = za.size
    means = (scores[:na].mean(), scores[na:].mean())
    return (na * (means[0] - grand) ** 2 + zb.size * (means[1] - grand) ** 2) / var


def _permutation_pvalue(a, b, stat_fn, observed, n_permutations, seed) -> float:
    if not math.isfinite(observed):
        observed = math.inf if observed > 0 else 0.0
    pooled = np.concatenate([a, b])
    na = a.size
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_permutations):
        rng.shuffle(pooled)
        s = stat_fn(pooled[:na], pooled[na:])
        if math.isnan(s):
            s = 0.0
        if s >= observed - 1e-12:
            hits += 1
    return (hits + 1) / (n_permutations + 1)


def _run_test(name, a, b, min_size, stat_fn, asymptotic_p, method, n_permutations, seed):
    a = _check_values(a)
    b = _check_values(b)
    if a.size < min_size or b.size < min_size:
        raise ValueError(f"{name} test requires sample sizes >= {min_size}")
    observed = stat_fn(a, b)
    degenerate = math.isnan(observed)
    if degenerate:
        return TestResult(0.0, 1.0, name, (a.size, b.size), degenerate=True)
    if method == "permutation":
        p = _permutation_pvalue(a, b, stat_fn, observed, n_permutations, seed)
    else:
        p = asymptotic_p(observed, a.size, b.size)
    return TestResult(float(observed), float(min(1.0, max(0.0, p))), name, (a.size, b.size))


def levene_test(a, b, method: str = "asymptotic", n_permutations: int = 10000,
                seed: int = 0) -> TestResult:
    """H0: equal variance. Mean-centered Levene with F(1, N-2) upper tail."""
    def pval(stat, na, nb):
        return 0.0 if math.isinf(stat) else f_sf(stat, 1, na + nb - 2)
    return _run_test("levene", a, b, 2, levene_statistic, pval, method, n_permutations, seed)


def fligner_test(a, b, method: str = "asymptotic", n_permutations: int = 10000,
                 seed: int = 0) -> TestResult:
    """H0: equal variance. Fligner-Killeen normal scores, chi-square(1) tail."""
    def pval(stat, na, nb):
        return chi2_sf(stat, 1)
    return _run_test("fligner", a, b, 2, fligner_statistic, pval, method, n_permutations, seed)


def ks_test(a, b, method: str = "asymptotic", n_permutations: int = 10000,
            seed: int = 0) -> TestResult:
    """H0: same distribution. Two-sample Smirnov D, asymptotic Kolmogorov p."""
    def pval(stat, na, nb):
        return kolmogorov_sf(stat * math.sqrt(na * nb / (na + nb)))
    return _run_test("ks", a, b, 1, ks_statistic, pval, method, n_permutations, seed)


TESTS = {"levene": levene_test, "fligner": fligner_test, "ks": ks_test}


def roc_auc(scores, truth) -> RocCurve:
    """ROC over a p-value threshold sweep; a smaller score is a stronger
    positive call. AUC by trapezoid equals Mann-Whitney pair counting with
    half-credit ties."""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if s.shape != t.shape or s.ndim != 1:
        raise ValueError("scores and truth must be equal-length vectors")
    n_pos = int(t.sum())
    n_neg = int(s.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("truth must contain at least one positive and one negative")
    order = np.argsort(s, kind="stable")
    s_sorted, t_sorted = s[order], t[order]
    points = [(-math.inf, 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < s.size:
        j = i
        while j < s.size and s_sorted[j] == s_sorted[i]:
            tp += bool(t_sorted[j])
            fp += not t_sorted[j]
            j += 1
        points.append((float(s_sorted[i]), fp / n_neg, tp / n_pos))
        i = j
    fprs = np.array([p[1] for p in points])
    tprs = np.array([p[2] for p in points])
    auc = float(np.trapezoid(tprs, fprs))
    return RocCurve(points=points, auc=auc)
