import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from rocftp.diagnostics import (
    kolmogorov_sf,
    ks_statistic,
    mode_masses,
    qq_outliers,
    summary_stats,
)
from rocftp.targets import CATALOG, parse_target


def test_summary_small_example():
    s = summary_stats([1, 2, 3, 4, 5])
    assert s.as_tuple() == (1, 2, 3, 3, 4, 5)


def test_summary_constant():
    assert set(summary_stats([2.5] * 3).as_tuple()) == {2.5}


def test_summary_type7_quartiles():
    # type-7 on {1,2,3,4}: q1 = 1 + 0.75 = 1.75
    s = summary_stats([4, 1, 3, 2])
    assert (s.q1, s.median, s.q3) == (1.75, 2.5, 3.25)


def test_summary_empty():
    with pytest.raises(ValueError):
        summary_stats([])


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30),
       st.floats(0.1, 10), st.floats(-100, 100))
def test_summary_is_affine(xs, a, b):
    s = summary_stats(xs).as_tuple()
    t = summary_stats([a * x + b for x in xs]).as_tuple()
    assert t == pytest.approx([a * v + b for v in s], abs=1e-7)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.8, 1.0, 1.36, 1.63, 2.5, 4.0])
def test_kolmogorov_series_matches_scipy(lam):
    assert kolmogorov_sf(lam) == pytest.approx(special.kolmogorov(lam), rel=1e-10, abs=1e-300)


def test_ks_at_quantile_positions(case1):
    n = 400
    x = case1.quantile((np.arange(1, n + 1) - 0.5) / n)
    d, p = ks_statistic(x, case1)
    assert d == pytest.approx(0.5 / n, abs=1e-12)
    assert p == 1.0


def test_ks_matches_scipy_and_ignores_order(case1):
    x = np.random.default_rng(3).normal(size=500)
    d, p = ks_statistic(x, case1)
    ref = stats.kstest(x, "norm", method="asymp")
    assert d == pytest.approx(ref.statistic, abs=1e-12)
    assert p == pytest.approx(ref.pvalue, rel=1e-3)
    assert ks_statistic(x[::-1], case1) == (d, p)


def test_ks_total_mismatch(case1):
    d, p = ks_statistic(np.full(1000, -50.0), case1)
    assert d > 0.999 and p < 1e-100


def test_ks_calibration(case1):
    rng = np.random.default_rng(11)
    passes = sum(ks_statistic(rng.normal(size=10_000), case1)[1] > 0.01 for _ in range(100))
    assert passes >= 98


def test_ks_empty(case1):
    with pytest.raises(ValueError):
        ks_statistic([], case1)


def test_qq_outliers_perfect_and_monotone():
    t = CATALOG["case4"].target
    n = 500
    perfect = t.quantile((np.arange(1, n + 1) - 0.5) / n)
    assert qq_outliers(perfect, t, 1e-6)[0] == 0
    noisy = perfect + np.random.default_rng(0).normal(0, 0.4, n)
    counts = [qq_outliers(noisy, t, d)[0] for d in (0.05, 0.2, 0.5, 1.0, 1e9)]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 0
    with pytest.raises(ValueError):
        qq_outliers(noisy, t, 0.0)


def test_mode_masses_partition():
    t = parse_target("0.25*N(-4,1)+0.75*N(4,1)")
    x = np.r_[np.full(30, -4.0), np.full(70, 4.0)]
    m = mode_masses(x, t)
    assert [(b.lo, b.hi) for b in m] == [(-np.inf, 0.0), (0.0, np.inf)]
    assert [b.observed for b in m] == [0.3, 0.7]
    assert [b.expected for b in m] == pytest.approx([0.25, 0.75], abs=1e-4)
