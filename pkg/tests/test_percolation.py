import numpy as np
import pytest

from wrlab.geometry import Configuration, ConnectivityParams, Window, build_components, has_crossing
from wrlab.intensity import HomogeneousLebesgue, VoronoiEdges
from wrlab.percolation import (
    estimate_critical_intensity,
    estimate_crossing_probability,
    largest_component_fraction,
    target_percolation_proxy,
    threshold_from_rows,
)

WIN = Window.cube(8.0, 2)


def conf_of(points):
    return Configuration(np.asarray(points, dtype=float))


def test_largest_component_fraction_trivias():
    assert largest_component_fraction(Configuration.empty(2), 1.0, WIN) == 0.0
    assert largest_component_fraction(conf_of([[4.0, 4.0]]), 1.0, WIN) == 1.0
    two = conf_of([[1.0, 1.0], [7.0, 7.0]])
    assert largest_component_fraction(two, 0.5, WIN) == 0.5


def test_target_proxy_trivials():
    delta = Window(np.array([3.5, 3.5]), np.array([4.5, 4.5]))
    assert not target_percolation_proxy(Configuration.empty(2), 0.5, WIN, delta)
    # chain from the center to the boundary with spacing exactly 2a
    xs = np.arange(4.0, 0.4, -1.0)
    chain = conf_of([[x, 4.0] for x in xs])
    assert target_percolation_proxy(chain, 0.5, WIN, delta)
    # deep interior cluster: meets delta but never reaches the boundary
    interior = conf_of([[4.0, 4.0], [4.8, 4.0]])
    assert not target_percolation_proxy(interior, 0.5, WIN, delta)


def test_target_proxy_requires_delta_inside_window():
    with pytest.raises(ValueError):
        target_percolation_proxy(Configuration.empty(2), 0.5, WIN, Window.cube(20.0, 2))


def test_scan_validation():
    model = HomogeneousLebesgue(1.0)
    with pytest.raises(ValueError):
        estimate_crossing_probability(model, [], 0.5, 8.0, 4)
    with pytest.raises(ValueError):
        estimate_crossing_probability(model, [1.0, 0.5], 0.5, 8.0, 4)
    with pytest.raises(ValueError):
        estimate_crossing_probability(model, [0.5, 1.0], 0.5, 1.0, 4)


def test_scan_zero_activity_row_is_exactly_zero():
    rows = estimate_crossing_probability(HomogeneousLebesgue(1.0), [0.0], 0.5, 8.0, 12, seed=3)
    assert rows[0].crossing_successes == 0
    assert rows[0].crossing.value == 0.0
    assert rows[0].largest_fraction.value == 0.0


def test_scan_per_seed_monotone_in_activity():
    rows, indicators = estimate_crossing_probability(
        HomogeneousLebesgue(1.0),
        [0.4, 0.9, 1.4, 1.9, 2.6],
        0.5,
        10.0,
        40,
        seed=7,
        return_indicators=True,
    )
    # coupled thinning: each replicate's indicator row is non-decreasing
    assert (np.diff(indicators.astype(int), axis=1) >= 0).all()
    probs = [row.crossing.value for row in rows]
    assert probs == sorted(probs)


def test_crossing_monotone_in_radius():
    rng = np.random.default_rng(2)
    win = Window.cube(6.0, 2)
    for _ in range(150):
        conf = Configuration(rng.uniform(0, 6, size=(int(rng.integers(1, 40)), 2)))
        small = build_components(conf, ConnectivityParams(0.4), win)
        large = build_components(conf, ConnectivityParams(0.8), win)
        crossed_small = has_crossing(small, conf, win, 0)
        crossed_large = has_crossing(large, conf, win, 0)
        assert crossed_large or not crossed_small


def test_threshold_interpolation():
    rows = estimate_crossing_probability(
        HomogeneousLebesgue(1.0), [0.6, 1.0, 1.4, 1.8, 2.4], 0.5, 12.0, 60, seed=10
    )
    z_star = threshold_from_rows(rows, 0.5)
    assert 0.6 < z_star < 2.4


def test_threshold_requires_bracketing():
    rows = estimate_crossing_probability(HomogeneousLebesgue(1.0), [0.01], 0.5, 8.0, 10, seed=1)
    with pytest.raises(ValueError, match="bracket"):
        threshold_from_rows(rows, 0.5)


def test_critical_intensity_bisection_terminates_and_is_sane():
    est = estimate_critical_intensity(
        HomogeneousLebesgue(1.0), 0.5, 12.0, 0.5, tolerance=0.15, seed=5, replicates=60
    )
    # the known continuum threshold for this radius is about 1.44
    assert 0.7 < est.value < 2.5
    assert est.stderr > 0.0


def test_critical_intensity_rejects_bad_bracket():
    with pytest.raises(ValueError, match="bracket"):
        estimate_critical_intensity(
            HomogeneousLebesgue(1.0),
            0.5,
            10.0,
            0.5,
            tolerance=0.1,
            seed=2,
            replicates=40,
            z_bracket=(8.0, 12.0),
        )
    with pytest.raises(ValueError):
        estimate_critical_intensity(
            HomogeneousLebesgue(1.0), 0.5, 10.0, 1.5, tolerance=0.1, seed=2
        )


def test_critical_intensity_decreases_with_radius():
    small = estimate_critical_intensity(
        HomogeneousLebesgue(1.0), 0.4, 10.0, 0.5, tolerance=0.2, seed=8, replicates=60
    )
    large = estimate_critical_intensity(
        HomogeneousLebesgue(1.0), 0.8, 10.0, 0.5, tolerance=0.1, seed=8, replicates=60
    )
    assert large.value < small.value


def test_critical_intensity_voronoi_environment_finite():
    est = estimate_critical_intensity(
        VoronoiEdges(1.0), 0.5, 10.0, 0.5, tolerance=0.2, seed=9, replicates=50
    )
    assert np.isfinite(est.value) and est.value > 0.0
