"""Statistics tests.

The exact-path oracles here are written from scratch: a brute-force
enumerator over group assignments for Kruskal-Wallis and one over rank
splits for Mann-Whitney. scipy is used only as a second opinion for the
asymptotic paths and the chi-square tail.
"""

import math
import random
from itertools import combinations

import pytest
import scipy.integrate
import scipy.stats

from deltapad.errors import DegenerateGroups, InvalidDf, TooFew
from deltapad.stats import (
    chi_square_sf,
    describe,
    kruskal_wallis,
    mann_whitney_u,
    midranks,
)


def oracle_ranks(values):
    """Average ranks, written independently of the implementation."""
    s = sorted(values)
    out = []
    for v in values:
        lo = s.index(v) + 1
        hi = lo + s.count(v) - 1
        out.append((lo + hi) / 2)
    return out


def oracle_kw_h(groups):
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = oracle_ranks(pooled)
    idx = 0
    h = 0.0
    for g in groups:
        rs = sum(ranks[idx:idx + len(g)])
        idx += len(g)
        h += rs * rs / len(g)
    h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1)
    # tie correction
    ties = sum(pooled.count(v) ** 3 - pooled.count(v) for v in set(pooled))
    return h / (1 - ties / (n ** 3 - n))


def oracle_kw_exact_p(groups):
    """Enumerate all assignments of the pooled values to the group sizes."""
    pooled = [v for g in groups for v in g]
    sizes = [len(g) for g in groups]
    h_obs = oracle_kw_h(groups)
    total = [0]
    extreme = [0]

    def rec(remaining, gi, built):
        if gi == len(sizes) - 1:
            total[0] += 1
            if oracle_kw_h(built + [[pooled[i] for i in remaining]]) >= h_obs - 1e-12:
                extreme[0] += 1
            return
        for combo in combinations(remaining, sizes[gi]):
            rest = [i for i in remaining if i not in combo]
            rec(rest, gi + 1, built + [[pooled[i] for i in combo]])

    rec(tuple(range(len(pooled))), 0, [])
    return extreme[0] / total[0]


def oracle_mwu_exact_p(a, b):
    pooled = list(a) + list(b)
    ranks = oracle_ranks(pooled)
    na = len(a)
    u_obs = sum(ranks[:na]) - na * (na + 1) / 2
    us = []
    for combo in combinations(range(len(pooled)), na):
        us.append(sum(ranks[i] for i in combo) - na * (na + 1) / 2)
    le = sum(1 for u in us if u <= u_obs + 1e-12) / len(us)
    ge = sum(1 for u in us if u >= u_obs - 1e-12) / len(us)
    return min(1.0, 2 * min(le, ge))


def test_midranks_ties():
    assert midranks([10, 20, 20, 30]) == [1.0, 2.5, 2.5, 4.0]
    assert midranks([5, 5, 5]) == [2.0, 2.0, 2.0]


def test_kw_worked_example():
    res = kruskal_wallis([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert res.statistic == pytest.approx(7.2)
    assert res.method == "exact"
    assert res.df == 2
    assert res.p_value == pytest.approx(6 / 1680)


def test_kw_approximate_above_exact_cutoff():
    groups = [[1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12]]  # N = 12
    res = kruskal_wallis(groups)
    assert res.method == "approximate"
    assert res.p_value == pytest.approx(chi_square_sf(res.statistic, 2))
    ref = scipy.stats.kruskal(*groups)
    assert res.statistic == pytest.approx(ref.statistic)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-10)


def test_kw_exact_matches_bruteforce_on_random_small_inputs():
    rng = random.Random(7)
    for trial in range(12):
        k = rng.choice([2, 3])
        sizes = [rng.randint(2, 4) for _ in range(k)]
        while sum(sizes) > 10:
            sizes[sizes.index(max(sizes))] -= 1
        groups = [[rng.randint(0, 6) for _ in range(s)] for s in sizes]
        if len({v for g in groups for v in g}) == 1:
            continue
        res = kruskal_wallis(groups)
        assert res.method == "exact"
        assert res.statistic == pytest.approx(oracle_kw_h(groups))
        assert res.p_value == pytest.approx(oracle_kw_exact_p(groups))


def test_kw_monotone_transform_invariance():
    rng = random.Random(3)
    groups = [[rng.uniform(0, 5) for _ in range(6)] for _ in range(3)]
    h1 = kruskal_wallis(groups).statistic
    cubed = [[v ** 3 for v in g] for g in groups]
    h2 = kruskal_wallis(cubed).statistic
    assert h1 == pytest.approx(h2, abs=1e-12)


def test_kw_ties_against_scipy():
    groups = [[1, 1, 2, 3, 5, 5, 5], [2, 2, 3, 4, 4, 6, 7],
              [1, 3, 3, 4, 6, 6, 8]]
    res = kruskal_wallis(groups)
    ref = scipy.stats.kruskal(*groups)
    assert res.statistic == pytest.approx(ref.statistic)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-10)


def test_kw_degenerate_identical_values():
    res = kruskal_wallis([[3, 3, 3], [3, 3], [3, 3, 3]])
    assert res.statistic == 0.0
    assert res.p_value == 1.0


def test_kw_structural_errors():
    with pytest.raises(DegenerateGroups):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(DegenerateGroups):
        kruskal_wallis([[1, 2], []])
    with pytest.raises(DegenerateGroups):
        kruskal_wallis([[1], [2]])


def test_mwu_worked_example():
    res = mann_whitney_u([1, 2], [3, 4])
    assert res.statistic == 0.0
    assert res.method == "exact"
    assert res.p_value == pytest.approx(1 / 3)


def test_mwu_u_values_complement():
    rng = random.Random(5)
    a = [rng.uniform(0, 10) for _ in range(5)]
    b = [rng.uniform(0, 10) for _ in range(6)]
    ra = mann_whitney_u(a, b)
    rb = mann_whitney_u(b, a)
    assert ra.statistic + rb.statistic == pytest.approx(len(a) * len(b))
    assert ra.p_value == pytest.approx(rb.p_value)


def test_mwu_exact_matches_bruteforce():
    rng = random.Random(2)
    for _ in range(12):
        na, nb = rng.randint(2, 6), rng.randint(2, 6)
        if na + nb > 12:
            continue
        a = [rng.randint(0, 8) for _ in range(na)]
        b = [rng.randint(0, 8) for _ in range(nb)]
        if len(set(a + b)) == 1:
            continue
        res = mann_whitney_u(a, b)
        assert res.method == "exact"
        assert res.p_value == pytest.approx(oracle_mwu_exact_p(a, b))


def test_mwu_identical_samples():
    res = mann_whitney_u([2, 2], [2, 2])
    assert res.statistic == pytest.approx(2.0)  # n*n/2
    assert res.p_value == 1.0


def test_mwu_exact_vs_approx_gap_eight_v_eight():
    """Balanced n=8: asymptotic p stays within 0.02 of exact."""
    rng = random.Random(13)
    worst = 0.0
    for _ in range(40):
        a = [rng.gauss(0, 1) for _ in range(8)]
        b = [rng.gauss(rng.choice([0.0, 0.6, 1.2]), 1) for _ in range(8)]
        pooled = a + b
        ranks = oracle_ranks(pooled)
        u = sum(ranks[:8]) - 8 * 9 / 2
        # approximate path from the implementation (n=16 > exact cutoff)
        approx = mann_whitney_u(a, b)
        assert approx.method == "approximate"
        exact = oracle_mwu_exact_p(a, b)
        worst = max(worst, abs(approx.p_value - exact))
    assert worst < 0.02


def test_mwu_against_scipy_large():
    rng = random.Random(17)
    a = [rng.gauss(0, 1) for _ in range(15)]
    b = [rng.gauss(0.4, 1) for _ in range(18)]
    res = mann_whitney_u(a, b)
    ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                   use_continuity=True, method="asymptotic")
    assert res.statistic == pytest.approx(ref.statistic)
    assert res.p_value == pytest.approx(ref.pvalue, abs=1e-9)


def test_mwu_empty_group():
    with pytest.raises(DegenerateGroups):
        mann_whitney_u([], [1, 2])


def test_chi_square_sf_boundaries():
    for df in (1, 2, 5, 10):
        assert chi_square_sf(0.0, df) == 1.0


def test_chi_square_sf_golden():
    assert chi_square_sf(3.841, 1) == pytest.approx(0.05, abs=1e-3)


def test_chi_square_sf_against_integration():
    def density(t, df):
        return (t ** (df / 2 - 1) * math.exp(-t / 2)
                / (2 ** (df / 2) * math.gamma(df / 2)))

    for df in (1, 2, 3, 7, 12):
        for x in (0.3, 1.0, 2.5, 6.0, 15.0, 40.0):
            tail, err = scipy.integrate.quad(density, x, math.inf, args=(df,))
            assert chi_square_sf(x, df) == pytest.approx(tail, abs=1e-10)


def test_chi_square_sf_monotone_decreasing():
    prev = 1.0
    for i in range(1, 200):
        x = i * 0.25
        v = chi_square_sf(x, 3)
        assert v <= prev
        prev = v


def test_chi_square_sf_invalid_df():
    with pytest.raises(InvalidDf):
        chi_square_sf(1.0, 0)
    with pytest.raises(InvalidDf):
        chi_square_sf(1.0, 1.5)
    with pytest.raises(ValueError):
        chi_square_sf(-1.0, 2)


def test_describe():
    mean, sd = describe([1, 2, 3])
    assert mean == 2.0
    assert sd == 1.0
    assert describe([4.0, 4.0, 4.0]).sd == 0.0
    with pytest.raises(TooFew):
        describe([1.0])
    with pytest.raises(TooFew):
        describe([])
