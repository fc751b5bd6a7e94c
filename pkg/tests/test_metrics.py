import io
import math

import numpy as np
import pytest
from scipy import stats

from swimsim.metrics import (
    DistributionSummary,
    InsufficientData,
    ccdf,
    contact_duration_distribution,
    contacts_per_pair,
    dichotomy,
    export_points,
    fit_exponential_tail,
    fit_power_law_head,
    fit_report,
    inter_contact_distribution,
    kolmogorov_distance,
    attach_fits,
    write_ccdf_csv,
)
from swimsim.traceio import ContactRecord


def test_ccdf_of_constant_sample():
    s = ccdf([1, 1, 1])
    assert s.values.tolist() == [1.0]
    assert s.ccdf.tolist() == [0.0]
    assert s.evaluate(0.5) == 1.0


def test_ccdf_small_example():
    s = ccdf([1, 2, 3, 4])
    assert s.evaluate(2) == 0.5
    assert s.points() == [(1.0, 0.75), (2.0, 0.5), (3.0, 0.25), (4.0, 0.0)]
    assert s.evaluate(0) == 1.0


def test_ccdf_rejects_bad_input():
    with pytest.raises(InsufficientData):
        ccdf([])
    with pytest.raises(ValueError):
        ccdf([1.0, -2.0])


def test_ccdf_matches_exponential_law():
    x = np.random.default_rng(0).exponential(100.0, size=100_000)
    s = ccdf(x)
    grid = np.linspace(0, 800, 400)
    assert np.max(np.abs(s.evaluate(grid) - np.exp(-grid / 100.0))) < 0.01
    # same quantity through scipy's own Kolmogorov-Smirnov statistic
    assert stats.kstest(x, "expon", args=(0, 100.0)).statistic < 0.01


def test_power_law_fit_recovers_slope():
    xs = np.geomspace(600, 43200, 40)
    s = DistributionSummary.from_points(xs, 3.0 * xs**-0.5)
    fit = fit_power_law_head(s)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-9)
    assert fit.r2 == pytest.approx(1.0)


def test_exponential_fit_recovers_rate():
    xs = np.linspace(1, 5, 30)
    s = DistributionSummary.from_points(xs, np.exp(-2 * xs))
    fit = fit_exponential_tail(s, (1, None))
    assert fit.rate == pytest.approx(2.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)


def test_flat_segment_fits_to_zero():
    xs = np.linspace(100, 1000, 20)
    s = DistributionSummary.from_points(xs, np.full(20, 0.3))
    assert fit_exponential_tail(s, (100, 1000)).rate == 0.0
    assert fit_power_law_head(s, (100, 1000)).slope == pytest.approx(0.0, abs=1e-12)


def test_r2_prefers_the_right_family():
    xs = np.geomspace(600, 43200, 50)
    pl = DistributionSummary.from_points(xs, xs**-0.6)
    assert fit_power_law_head(pl).r2 > fit_exponential_tail(pl, (600, 43200)).r2
    ys = np.linspace(43200, 200000, 50)
    ex = DistributionSummary.from_points(ys, np.exp(-ys / 20000))
    assert fit_exponential_tail(ex).r2 > fit_power_law_head(ex, (43200, None)).r2


def test_dichotomy_on_constructed_curve():
    head = np.geomspace(600, 43200, 30)
    tail = np.linspace(45000, 150000, 30)
    p_head = (head / 600) ** -0.4
    p_tail = p_head[-1] * np.exp(-(tail - 43200) / 15000)
    s = DistributionSummary.from_points(np.concatenate([head, tail]), np.concatenate([p_head, p_tail]))
    d = dichotomy(s)
    assert d["head_ok"] and d["tail_ok"]


def test_fit_needs_enough_points():
    s = DistributionSummary.from_points([700, 800, 900], [0.5, 0.4, 0.3])
    with pytest.raises(InsufficientData):
        fit_power_law_head(s)
    attach_fits(s)
    assert s.head_fit is None and s.tail_fit is None
    assert "head_fit=insufficient_data" in "\n".join(fit_report("x", s))


def test_contact_duration_and_inter_contact():
    contacts = [ContactRecord(0, 1, 0, 10), ContactRecord(0, 1, 30, 35), ContactRecord(1, 2, 0, 20)]
    d = contact_duration_distribution(contacts)
    assert sorted(d.samples.tolist()) == [5, 10, 20]
    assert inter_contact_distribution(contacts).samples.tolist() == [20]


def test_contacts_per_pair_includes_silent_pairs():
    contacts = [ContactRecord(0, 1, t, t + 1) for t in range(0, 40, 10)]
    s = contacts_per_pair(contacts, 3, 86400)
    assert sorted(s.samples.tolist()) == [0, 0, 4]
    assert s.stats["total_contacts"] == 4
    assert s.stats["mean_contacts_per_pair_day"] == pytest.approx(4 / 6)
    with pytest.raises(InsufficientData):
        contacts_per_pair([], 1, 86400)


def test_contacts_per_pair_published_average():
    # 22459 contacts among 41 devices over 3 days
    pairs = [(a, b) for a in range(41) for b in range(a + 1, 41)]
    contacts = [ContactRecord(*pairs[i % len(pairs)], float(i), float(i) + 1) for i in range(22459)]
    mean = contacts_per_pair(contacts, 41, 3 * 86400).stats["mean_contacts_per_pair_day"]
    assert abs(mean - 4.6) / 4.6 <= 0.02


def test_kolmogorov_distance():
    a = ccdf([1, 2, 3, 4])
    assert kolmogorov_distance(a, a) == 0.0
    assert kolmogorov_distance(a, ccdf([10, 20])) == 1.0
    assert kolmogorov_distance(a, ccdf([1, 2])) == pytest.approx(0.5)


def test_export_small_is_exact_and_large_is_thinned():
    s = ccdf([1, 2, 3])
    xs, ps = export_points(s)
    assert xs.tolist() == [1, 2, 3]
    big = ccdf(np.random.default_rng(1).exponential(50, 5000))
    xs, ps = export_points(big, max_points=100)
    assert len(xs) == 100 and np.all(np.diff(ps) <= 0)
    buf = io.StringIO()
    write_ccdf_csv(s, buf)
    assert buf.getvalue().splitlines()[0] == "value,ccdf"
    assert len(buf.getvalue().splitlines()) == 4
