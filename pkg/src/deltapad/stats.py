"""Nonparametric statistics for the study analysis.

Kruskal-Wallis omnibus, Mann-Whitney U post-hoc, a chi-square survival
function built on the regularized incomplete gamma, and descriptive
summaries. Ties are handled with midranks and the usual corrections; tests
are two-sided. Small inputs switch to exact permutation enumeration.
"""

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple
import math

from .errors import DegenerateGroups, InvalidDf, TooFew

# exact-permutation thresholds
KW_EXACT_MAX_N = 10
MWU_EXACT_MAX_N = 12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # "exact" | "approximate"
    df: int = None


def midranks(values):
    """Ranks 1..N with ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _tie_term(values):
    counts = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return sum(c ** 3 - c for c in counts.values())


def _kw_h(rank_sums, sizes, n_total, tie_correction):
    h = 12.0 / (n_total * (n_total + 1)) * sum(
        r * r / n for r, n in zip(rank_sums, sizes)) - 3.0 * (n_total + 1)
    return h / tie_correction


def kruskal_wallis(groups) -> TestResult:
    """Kruskal-Wallis H with tie correction.

    p comes from the chi-square survival function with df = k-1, or from
    exact enumeration of all group assignments when the pooled N <= 10.
    All-identical samples are the degenerate case: H = 0, p = 1.
    """
    groups = [list(g) for g in groups]
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise DegenerateGroups("need at least 2 nonempty groups")
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    if n < 3:
        raise DegenerateGroups("need at least 3 observations")
    k = len(groups)
    sizes = [len(g) for g in groups]
    df = k - 1
    tie = _tie_term(pooled)
    correction = 1.0 - tie / (n ** 3 - n)
    if correction <= 0.0:  # every value identical
        return TestResult(0.0, 1.0, "exact" if n <= KW_EXACT_MAX_N else "approximate", df)
    ranks = midranks(pooled)
    rank_sums = []
    idx = 0
    for size in sizes:
        rank_sums.append(sum(ranks[idx:idx + size]))
        idx += size
    h_obs = _kw_h(rank_sums, sizes, n, correction)

    if n <= KW_EXACT_MAX_N:
        # enumerate every assignment of the pooled indexes to the group
        # sizes; ranks are fixed, only membership changes
        threshold = h_obs - 1e-12
        total = 0
        extreme = 0
        all_idx = frozenset(range(n))

        def recurse(remaining, gi, sums):
            nonlocal total, extreme
            if gi == k - 1:
                last = sum(ranks[i] for i in remaining)
                total += 1
                if _kw_h(sums + [last], sizes, n, correction) >= threshold:
                    extreme += 1
                return
            for combo in combinations(sorted(remaining), sizes[gi]):
                s = sum(ranks[i] for i in combo)
                recurse(remaining - frozenset(combo), gi + 1, sums + [s])

        recurse(all_idx, 0, [])
        return TestResult(h_obs, extreme / total, "exact", df)

    return TestResult(h_obs, chi_square_sf(h_obs, df), "approximate", df)


def mann_whitney_u(a, b) -> TestResult:
    """Two-sided Mann-Whitney U for the first sample.

    U(a, b) + U(b, a) = len(a) * len(b). Exact enumeration of all rank
    splits when n_a + n_b <= 12, else the tie-corrected normal
    approximation with continuity correction.
    """
    a, b = list(a), list(b)
    if not a or not b:
        raise DegenerateGroups("both samples must be nonempty")
    na, nb = len(a), len(b)
    n = na + nb
    pooled = a + b
    ranks = midranks(pooled)
    r_a = sum(ranks[:na])
    u_obs = r_a - na * (na + 1) / 2.0

    tie = _tie_term(pooled)
    if tie == n ** 3 - n:  # all values identical
        return TestResult(u_obs, 1.0, "exact" if n <= MWU_EXACT_MAX_N else "approximate")

    if n <= MWU_EXACT_MAX_N:
        total = 0
        le = 0
        ge = 0
        for combo in combinations(range(n), na):
            u = sum(ranks[i] for i in combo) - na * (na + 1) / 2.0
            total += 1
            if u <= u_obs + 1e-12:
                le += 1
            if u >= u_obs - 1e-12:
                ge += 1
        p = min(1.0, 2.0 * min(le / total, ge / total))
        return TestResult(u_obs, p, "exact")

    mu = na * nb / 2.0
    sigma_sq = na * nb / 12.0 * ((n + 1) - tie / (n * (n - 1)))
    if sigma_sq <= 0:
        return TestResult(u_obs, 1.0, "approximate")
    # continuity correction pulls the statistic half a step toward the mean
    diff = u_obs - mu
    if diff > 0:
        diff -= 0.5
    elif diff < 0:
        diff += 0.5
    z = diff / math.sqrt(sigma_sq)
    p = min(1.0, 2.0 * _normal_sf(abs(z)))
    return TestResult(u_obs, p, "approximate")


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def chi_square_sf(x: float, df) -> float:
    """Upper tail of the chi-square distribution.

    Q(df/2, x/2), the regularized upper incomplete gamma, evaluated by the
    power series for x/2 < df/2 + 1 and by the Lentz continued fraction
    otherwise. Absolute error below 1e-10 across the tested domain.
    """
    if df is None or df < 1 or df != int(df):
        raise InvalidDf(f"df must be an integer >= 1, got {df}")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 1.0
    a = df / 2.0
    s = x / 2.0
    if s < a + 1.0:
        return 1.0 - _gamma_p_series(a, s)
    return _gamma_q_cf(a, s)


def _gamma_p_series(a: float, s: float) -> float:
    """P(a, s) by power series (converges fast for s < a + 1)."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(1000):
        ap += 1.0
        term *= s / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-s + a * math.log(s) - math.lgamma(a))


def _gamma_q_cf(a: float, s: float) -> float:
    """Q(a, s) by modified Lentz continued fraction (good for s >= a + 1)."""
    tiny = 1e-300
    b = s + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
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
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-s + a * math.log(s) - math.lgamma(a))


class DescribeResult(NamedTuple):
    mean: float
    sd: float


def describe(samples) -> DescribeResult:
    """Mean and sample standard deviation (n - 1 denominator)."""
    xs = list(samples)
    n = len(xs)
    if n < 2:
        raise TooFew(f"need at least 2 samples for sd, got {n}")
    mean = sum(xs) / n
    var = sum((v - mean) ** 2 for v in xs) / (n - 1)
    return DescribeResult(mean, math.sqrt(var))
