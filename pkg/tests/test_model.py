import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swimsim.errors import ParameterError
from swimsim.metrics import fit_bounded_pareto_slope
from swimsim.model import (
    CellGrid,
    CellIndex,
    ModelParams,
    NodeModelState,
    Point,
    bounded_pareto_ppf,
    build_grid,
    cell_center,
    cell_weight,
    choose_destination,
    destination_probabilities,
    distance_decay,
    distance_decay_map,
    leg_kinematics,
    sample_waiting_time,
)


@pytest.mark.parametrize("radius, m", [(0.1, 15), (1.0, 2), (0.05, 29)])
def test_build_grid_examples(radius, m):
    g = build_grid(radius)
    assert g.cells_per_side == m
    assert g.cell_side == pytest.approx(1 / m)


@pytest.mark.parametrize("radius", [0.0, -0.1, 1.5])
def test_build_grid_rejects_bad_radius(radius):
    with pytest.raises(ParameterError):
        build_grid(radius)


@given(st.floats(min_value=0.01, max_value=0.99))
def test_grid_diagonal_never_exceeds_radius(radius):
    g = build_grid(radius)
    assert g.cell_side * math.sqrt(2) <= radius * (1 + 1e-12)
    assert g.cells_per_side == math.ceil(math.sqrt(2) / radius) or g.cells_per_side == math.ceil(math.sqrt(2) / radius) + 1
    # smallest such grid
    assert math.sqrt(2) / (g.cells_per_side - 1) > radius or g.cells_per_side == 1


@given(st.floats(0, 1), st.floats(0, 1))
def test_every_point_maps_to_one_cell(x, y):
    g = build_grid(0.1)
    cell = g.cell_of((x, y))
    assert g.contains(cell)
    c = cell_center(g, cell)
    half = g.cell_side / 2
    assert abs(c.x - x) <= half + 1e-12 and abs(c.y - y) <= half + 1e-12


def test_cell_center_examples():
    assert cell_center(CellGrid(2), CellIndex(0, 0)) == (0.25, 0.25)
    assert cell_center(CellGrid(2), CellIndex(1, 1)) == (0.75, 0.75)
    c = cell_center(CellGrid(15), CellIndex(0, 0))
    assert c.x == pytest.approx(1 / 30) and c.y == pytest.approx(1 / 30)
    with pytest.raises(ParameterError):
        cell_center(CellGrid(2), CellIndex(2, 0))


def test_distance_decay_examples():
    g = CellGrid(2)
    centre = cell_center(g, CellIndex(1, 1))
    assert distance_decay(centre, CellIndex(1, 1), g, 0.05) == 1.0
    # home displaced by (1, 1) from the cell centre: d = sqrt(2)
    far = (centre.x - 1.0, centre.y - 1.0)
    assert distance_decay(far, CellIndex(1, 1), g, 0.05) == pytest.approx(1 / (1 + 0.05 * math.sqrt(2)) ** 2)
    assert distance_decay(far, CellIndex(1, 1), g, 0.05) == pytest.approx(0.8723, abs=5e-5)
    assert distance_decay(far, CellIndex(1, 1), g, 0.0) == 1.0


def test_decay_lower_bound_on_unit_square():
    # worst case is the diagonal: every decay value stays above 1/(1+k*sqrt2)^2
    g = build_grid(0.1)
    homes = [(0, 0), (1, 1), (0, 1), (1, 0), (0.5, 0.5)]
    worst = min(distance_decay_map(h, g, 0.05).min() for h in homes)
    assert worst >= 1 / (1 + 0.05 * math.sqrt(2)) ** 2
    assert worst > 0.872


def test_cell_weight_examples():
    g = CellGrid(2)
    node = NodeModelState(home=Point(0.1, 0.2), grid=g)
    cell = CellIndex(1, 0)
    p1 = ModelParams(alpha=1.0)
    assert cell_weight(node, cell, g, p1) == distance_decay(node.home, cell, g, p1.distance_scale_k)
    assert cell_weight(node, cell, g, ModelParams(alpha=0.0)) == 0.0
    # pick k so that the decay is exactly 0.9
    d = math.hypot(0.1 - 0.25, 0.2 - 0.75)
    k = (1 / math.sqrt(0.9) - 1) / d
    node.set_seen(cell, 0.2)
    assert cell_weight(node, cell, g, ModelParams(alpha=0.75, distance_scale_k=k)) == pytest.approx(0.725)


def test_seen_bounds_enforced():
    node = NodeModelState(home=Point(0.5, 0.5), grid=CellGrid(2))
    assert not node.seen.any()
    with pytest.raises(ParameterError):
        node.set_seen(CellIndex(0, 0), 1.5)


def test_alpha_one_favours_home_cell():
    g = CellGrid(2)
    home = cell_center(g, CellIndex(0, 1))
    node = NodeModelState(home=home, grid=g)
    p = destination_probabilities(node, ModelParams(alpha=1.0))
    assert g.unflat(int(np.argmax(p))) == CellIndex(0, 1)


def test_single_cell_grid_always_chosen():
    g = CellGrid(1)
    node = NodeModelState(home=Point(0.3, 0.3), grid=g)
    rng = np.random.default_rng(3)
    for _ in range(50):
        cell, pt = choose_destination(node, g, ModelParams(), rng)
        assert cell == CellIndex(0, 0)
        assert 0 <= pt.x <= 1 and 0 <= pt.y <= 1


def test_destination_point_inside_chosen_cell():
    g = build_grid(0.1)
    node = NodeModelState(home=Point(0.8, 0.1), grid=g)
    rng = np.random.default_rng(0)
    for _ in range(500):
        cell, pt = choose_destination(node, g, ModelParams(), rng)
        assert g.cell_of(pt) == cell


def test_all_zero_weights_fall_back_to_uniform():
    g = build_grid(0.1)
    node = NodeModelState(home=Point(0.5, 0.5), grid=g)
    p = destination_probabilities(node, ModelParams(alpha=0.0))
    assert np.allclose(p, 1 / g.cell_count)


@settings(max_examples=50)
@given(
    st.floats(0.01, 1.0),
    st.floats(0, 1), st.floats(0, 1),
    st.lists(st.floats(0, 1), min_size=225, max_size=225),
)
def test_probabilities_normalised(alpha, hx, hy, seen):
    g = build_grid(0.1)
    node = NodeModelState(home=Point(hx, hy), grid=g, seen=np.array(seen))
    p = destination_probabilities(node, ModelParams(alpha=alpha))
    assert abs(p.sum() - 1.0) < 1e-12
    assert (p > 0).all()


@settings(max_examples=30)
@given(st.floats(0.01, 1.0), st.floats(0, 1), st.floats(0, 1), st.floats(0.001, 10))
def test_weight_monotone_in_distance(alpha, hx, hy, k):
    g = build_grid(0.1)
    node = NodeModelState(home=Point(hx, hy), grid=g)
    params = ModelParams(alpha=alpha, distance_scale_k=k)
    w = np.array([cell_weight(node, g.unflat(i), g, params) for i in range(g.cell_count)])
    d = np.hypot(g.centers()[:, 0] - hx, g.centers()[:, 1] - hy)
    order = np.argsort(d, kind="stable")
    assert np.all(np.diff(w[order]) <= 1e-15)


def test_scaling_weights_leaves_distribution_unchanged():
    g = build_grid(0.1)
    rng = np.random.default_rng(1)
    seen = rng.random(g.cell_count) * 0.3
    node = NodeModelState(home=Point(0.2, 0.9), grid=g, seen=seen)
    params = ModelParams()
    w = params.alpha * node.decay(params.distance_scale_k) + (1 - params.alpha) * seen
    scaled = 7.5 * w
    assert np.allclose(w / w.sum(), scaled / scaled.sum(), rtol=0, atol=1e-15)
    assert np.allclose(destination_probabilities(node, params), w / w.sum())


def test_waiting_time_bounds_and_degenerate_support():
    p = ModelParams()
    rng = np.random.default_rng(5)
    t = sample_waiting_time(p, rng, size=20000)
    assert t.min() >= p.waiting_min and t.max() <= p.waiting_max
    narrow = ModelParams(waiting_min=60.0, waiting_max=60.0 + 1e-6)
    t = sample_waiting_time(narrow, rng, size=1000)
    assert np.all(np.abs(t - 60.0) <= 1e-6)


def test_waiting_time_inverse_cdf_against_quadrature():
    # analytic CDF from the normalised density integrated numerically
    from scipy import integrate

    a, lo, hi = 1.45, 60.0, 14400.0
    norm = integrate.quad(lambda t: t**-a, lo, hi)[0]
    for u in (0.05, 0.3, 0.5, 0.9, 0.99):
        t = bounded_pareto_ppf(u, a, lo, hi)
        assert integrate.quad(lambda s: s**-a, lo, t)[0] / norm == pytest.approx(u, abs=1e-9)


def test_waiting_time_slope_recovered():
    p = ModelParams()
    t = sample_waiting_time(p, np.random.default_rng(11), size=100_000)
    assert 1.40 <= fit_bounded_pareto_slope(t, p.waiting_min, p.waiting_max) <= 1.50


def test_waiting_ccdf_loglog_slope():
    # away from the cap, P(T > t) falls like t^-(a-1)
    p = ModelParams()
    t = np.sort(sample_waiting_time(p, np.random.default_rng(2), size=200_000))
    xs = np.geomspace(120, 1200, 12)
    cc = 1 - np.searchsorted(t, xs) / t.size
    hi_mass = (p.waiting_max ** (1 - p.waiting_slope))
    lo_mass = (p.waiting_min ** (1 - p.waiting_slope))
    exact = (xs ** (1 - p.waiting_slope) - hi_mass) / (lo_mass - hi_mass)
    assert np.allclose(cc, exact, atol=0.005)


def test_leg_kinematics_examples():
    p = ModelParams(leg_duration=120.0)
    assert leg_kinematics((0, 0), (0, 0), p) == (0.0, 0.0)
    leg = leg_kinematics((0.1, 0.1), (0.4, 0.5), p)
    assert leg.duration == 120.0
    assert leg.speed == pytest.approx(0.5 / 120)
    assert leg_kinematics((0, 0), (1, 1), p).duration == leg_kinematics((0.5, 0.5), (0.51, 0.5), p).duration


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(alpha=1.2)
    with pytest.raises(ParameterError):
        ModelParams(radius=1.0)
    with pytest.raises(ParameterError):
        ModelParams(waiting_min=100, waiting_max=50)
    with pytest.raises(ParameterError):
        ModelParams(waiting_slope=1.0)


def test_sampling_is_deterministic_per_seed():
    g = build_grid(0.1)
    node = NodeModelState(home=Point(0.4, 0.4), grid=g)
    draws = []
    for _ in range(2):
        rng = np.random.default_rng(99)
        draws.append([choose_destination(node, g, ModelParams(), rng) for _ in range(20)]
                     + [sample_waiting_time(ModelParams(), rng) for _ in range(20)])
    assert draws[0] == draws[1]
