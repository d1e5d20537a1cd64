import numpy as np
import pytest
from scipy.stats import t as student_t

from cdscascade.errors import CalibrationDiverged
from cdscascade.harness import SystemConfig, calibrated_amplitude
from cdscascade.market import (
    Portfolio, ShockVector, calibrate_amplitude, draw_portfolio,
    draw_shocks, initial_distress, solo_failure_probability,
)

# frozen output of the default-seed calibration (1e7 trials)
PINNED_AMPLITUDE = 1.58204470e-03


@pytest.fixture(scope="module")
def default_amplitude():
    return calibrated_amplitude(SystemConfig())


# -- portfolios


def test_single_asset_portfolio_is_all_in():
    p = draw_portfolio(50, 1, seed=0)
    np.testing.assert_array_equal(p.allocation, np.ones((50, 1)))


def test_two_asset_rows_are_exact_complements():
    p = draw_portfolio(1000, 2, seed=1)
    np.testing.assert_array_equal(
        p.allocation[:, 1], 1.0 - p.allocation[:, 0])
    assert np.all(p.allocation >= 0) and np.all(p.allocation <= 1)


def test_two_asset_first_weight_is_uniform():
    p = draw_portfolio(10**5, 2, seed=2)
    assert p.allocation[:, 0].mean() == pytest.approx(0.5, abs=0.005)


def test_general_m_rows_on_simplex():
    p = draw_portfolio(500, 5, seed=3)
    assert p.allocation.shape == (500, 5)
    np.testing.assert_allclose(p.allocation.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p.allocation >= 0)


def test_portfolio_determinism_and_validation():
    a = draw_portfolio(100, 2, seed=7)
    b = draw_portfolio(100, 2, seed=7)
    np.testing.assert_array_equal(a.allocation, b.allocation)
    with pytest.raises(ValueError):
        draw_portfolio(100, 0, seed=7)


# -- shocks


def test_shock_parameter_validation():
    with pytest.raises(ValueError):
        draw_shocks(2, 0.0, 1.5, seed=0)
    with pytest.raises(ValueError):
        draw_shocks(2, -1.0, 1.5, seed=0)
    with pytest.raises(ValueError):
        draw_shocks(2, 1.0, 1.0, seed=0)


def test_shock_symmetry_median_and_tail():
    # returns are i.i.d. across asset classes, so one wide vector stands
    # in for many draws
    ref_tail = 2 * student_t.sf(5, 1.5)
    for seed in (0, 1, 4):
        sv = draw_shocks(10**6, 2.0, 1.5, seed)
        assert sv.returns.size == 10**6
        t_draws = sv.returns / sv.amplitude
        assert abs(np.median(t_draws)) <= 0.002
        assert np.mean(sv.returns < 0) == pytest.approx(0.5, abs=0.01)
        emp_tail = np.mean(np.abs(t_draws) > 5)
        assert emp_tail == pytest.approx(ref_tail, rel=0.10)


def test_shock_determinism():
    a = draw_shocks(10, 0.5, 1.5, seed=3)
    b = draw_shocks(10, 0.5, 1.5, seed=3)
    np.testing.assert_array_equal(a.returns, b.returns)


# -- initial distress


def test_distress_hand_values():
    full = Portfolio(allocation=np.array([[1.0]]))
    down = ShockVector(returns=np.array([-0.1]), amplitude=0.1, dof=1.5)
    np.testing.assert_allclose(
        initial_distress(np.array([100.0]), full, down), [10.0])
    up = ShockVector(returns=np.array([0.2]), amplitude=0.2, dof=1.5)
    np.testing.assert_allclose(
        initial_distress(np.array([100.0]), full, up), [0.0])


def test_distress_nets_across_asset_classes():
    split = Portfolio(allocation=np.array([[0.5, 0.5]]))
    sv = ShockVector(returns=np.array([-0.2, 0.1]), amplitude=0.2, dof=1.5)
    np.testing.assert_allclose(
        initial_distress(np.array([50.0]), split, sv), [2.5])


def test_distress_nonnegative_and_linear_in_external():
    rng = np.random.default_rng(0)
    p = draw_portfolio(200, 2, seed=5)
    sv = draw_shocks(2, 0.03, 1.5, seed=6)
    e = rng.uniform(0.1, 2.0, size=200)
    d1 = initial_distress(e, p, sv)
    d2 = initial_distress(2.0 * e, p, sv)
    assert np.all(d1 >= 0)
    np.testing.assert_allclose(d2, 2.0 * d1, rtol=1e-12)


# -- amplitude calibration


def test_calibration_pins_to_frozen_value(default_amplitude):
    assert default_amplitude == pytest.approx(PINNED_AMPLITUDE, rel=1e-8)


def test_independent_recheck_hits_target_band(default_amplitude):
    for seed in (11, 12):
        p = solo_failure_probability(
            default_amplitude, 0.07, 2, 1.5, seed, trials=10**7)
        assert 0.8e-3 <= p <= 1.2e-3


def test_failure_probability_monotone_in_amplitude(default_amplitude):
    p2 = solo_failure_probability(
        2.0 * default_amplitude, 0.07, 2, 1.5, seed=13, trials=10**6)
    assert p2 > 1e-3


def test_calibration_reproducible_across_seeds(default_amplitude):
    other = calibrate_amplitude(0.07, 1e-3, 2, 1.5, seed=202, trials=10**7)
    assert other == pytest.approx(default_amplitude, rel=0.05)


def test_zero_reference_gamma_diverges():
    # P(loss > 0) = 0.5 at every amplitude by symmetry
    with pytest.raises(CalibrationDiverged):
        calibrate_amplitude(0.0, 1e-3, 2, 1.5, seed=0, trials=10**5)


def test_target_probability_validation():
    with pytest.raises(ValueError):
        calibrate_amplitude(0.07, 0.7, 2, 1.5, seed=0, trials=10**5)
    with pytest.raises(ValueError):
        calibrate_amplitude(0.07, 0.0, 2, 1.5, seed=0, trials=10**5)
