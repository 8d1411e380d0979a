import numpy as np
import pytest
from scipy import special

from memfract import memfractance
from memfract.errors import DegenerateCurveError, DomainError, InputError
from memfract.fraccalc import FracOrderPair, vertex_guard
from memfract.models import SweepShape
from memfract.polyfit import PolyModel, fit_piecewise, fit_poly
from memfract.synth import simulate_linear_element, triangular_sweep

FAST = dict(grid_points=401, scan_points=400)


@pytest.fixture(scope="module")
def resistor_models():
    run = simulate_linear_element("resistor", 1000.0, triangular_sweep(0.5, 401, 0.01))
    v_model, _ = fit_poly(run.time, run.voltage, 10)
    i_model, _ = fit_poly(run.time, run.current, 10)
    return v_model, i_model, run


def _current_with_charge_roots(alpha, roots, t_max=10.0):
    """
    Current whose charge q has D^alpha q = t^(1 - alpha) * prod(t - root), built
    from the power rule applied backwards.
    """
    target = np.polynomial.polynomial.polyfromroots([0.0, *roots])
    j = np.arange(len(target))
    charge = np.zeros(len(target))
    charge[1:] = target[1:] * special.gamma(j[1:] + 1 - alpha) / special.gamma(j[1:] + 1)
    current = charge[1:] * j[1:]
    return PolyModel.from_power_coefficients(current, (0.0, t_max))


def test_alpha_grid_should_hit_integer_orders_exactly():
    alphas = memfractance.alpha_grid(0.01)

    assert len(alphas) == 201
    assert alphas[100] == 1.0
    assert alphas[-1] == 2.0


def test_alpha_grid_with_coarse_step_should_fail():
    with pytest.raises(InputError):
        memfractance.alpha_grid(0.5)


def test_memfractance_of_resistor_at_orders_one_should_be_the_resistance(resistor_models):
    v_model, i_model, _ = resistor_models

    curve = memfractance.memfractance(
        v_model, i_model, FracOrderPair(alpha1=1.0, alpha2=1.0), grid_points=401
    )

    assert curve.median == pytest.approx(1000.0, rel=1e-6)
    assert curve.relative_range < 0.01
    assert len(curve.t_grid) == len(curve.values)
    assert curve.t_grid[0] > 0


def test_memfractance_with_zero_voltage_should_be_zero():
    i_model = PolyModel.from_power_coefficients([1.0, 0.5], (0.0, 2.0))
    v_model = PolyModel.from_power_coefficients([0.0, 0.0], (0.0, 2.0))

    curve = memfractance.memfractance(v_model, i_model, FracOrderPair(alpha1=0.5, alpha2=0.5))

    assert not curve.values.any()
    assert curve.range_value == 0.0


def test_memfractance_should_report_the_denominator_roots_as_singular():
    i_model = _current_with_charge_roots(0.5, [2.0, 7.0])
    v_model = PolyModel.from_power_coefficients([1.0], (0.0, 10.0))

    curve = memfractance.memfractance(v_model, i_model, FracOrderPair(alpha1=1.0, alpha2=0.5))

    roots = [t for t in curve.singular_points if abs(t - 2.0) < 1e-3 or abs(t - 7.0) < 1e-3]
    assert len(roots) >= 2
    assert np.all(np.isfinite(curve.values))


def test_memfractance_with_vanishing_current_should_be_degenerate():
    v_model = PolyModel.from_power_coefficients([1.0, 1.0], (0.0, 1.0))
    i_model = PolyModel.from_power_coefficients([0.0, 0.0], (0.0, 1.0))

    with pytest.raises(DegenerateCurveError):
        memfractance.memfractance(v_model, i_model, FracOrderPair(alpha1=1.0, alpha2=1.0))


def test_memfractance_with_mismatched_domains_should_fail():
    v_model = PolyModel.from_power_coefficients([1.0, 1.0], (0.0, 1.0))
    i_model = PolyModel.from_power_coefficients([1.0, 1.0], (0.0, 2.0))

    with pytest.raises(DomainError):
        memfractance.memfractance(v_model, i_model, FracOrderPair(alpha1=1.0, alpha2=1.0))


def test_denominator_zeros_of_linear_current_at_order_one_should_find_the_root():
    i_model = PolyModel.from_power_coefficients([-5.0, 1.0], (0.0, 10.0))

    locus = memfractance.denominator_zeros(i_model, 1.0)

    assert locus.parameter == 1.0
    assert locus.zeros == [pytest.approx(5.0, abs=1e-6)]


def test_denominator_zeros_of_constructed_charge_should_recover_both_roots():
    i_model = _current_with_charge_roots(0.5, [2.0, 7.0])

    locus = memfractance.denominator_zeros(i_model, 0.5)

    assert locus.zeros == [pytest.approx(2.0, abs=1e-6), pytest.approx(7.0, abs=1e-6)]


def test_denominator_zeros_inside_an_interval_should_ignore_the_others():
    i_model = _current_with_charge_roots(0.5, [2.0, 7.0])

    locus = memfractance.denominator_zeros(i_model, 0.5, interval=(4.0, 10.0))

    assert locus.zeros == [pytest.approx(7.0, abs=1e-6)]


def test_numerator_zeros_should_use_the_flux_of_the_voltage():
    v_model = _current_with_charge_roots(0.3, [4.0])

    assert memfractance.numerator_zeros(v_model, 0.3).zeros == [pytest.approx(4.0, abs=1e-6)]


def test_zero_loci_should_follow_the_order_of_the_parameters():
    i_model = PolyModel.from_power_coefficients([-5.0, 1.0], (0.0, 10.0))
    alphas = np.array([0.5, 1.0, 1.5])

    loci = memfractance.zero_loci(i_model, alphas, scan_points=400, threads=3)

    assert [locus.parameter for locus in loci] == [0.5, 1.0, 1.5]
    assert loci[1].zeros == [pytest.approx(5.0, abs=1e-6)]


def test_admissible_couples_of_proportional_models_should_include_the_diagonal():
    i_model = _current_with_charge_roots(0.5, [2.0, 7.0])
    v_model = PolyModel.from_power_coefficients(3.0 * i_model.coefficients, i_model.domain)

    couples = memfractance.admissible_couples(v_model, i_model, alpha_step=0.1, scan_points=400)

    diagonal = {(pair.alpha1, pair.alpha2) for pair in couples if pair.alpha1 == pair.alpha2}
    assert len(diagonal) == 21


def test_range_map_should_be_square_in_the_alpha_grid(resistor_models):
    v_model, i_model, _ = resistor_models

    range_map = memfractance.range_map(v_model, i_model, alpha_step=0.1, threads=2, **FAST)

    assert len(range_map.alphas) == 21
    assert len(range_map.ranges) == 21 and len(range_map.ranges[0]) == 21
    assert range_map.admissible[10][10]
    assert range_map.ranges[10][10] == pytest.approx(0.0, abs=1e-2)


def test_optimize_orders_of_resistor_should_land_on_orders_one(resistor_models):
    v_model, i_model, _ = resistor_models

    optimum, coarse_map = memfractance.optimize_orders(
        v_model, i_model, alpha_step=0.05, refine_step=0.01, threads=4, **FAST
    )
    curve = memfractance.memfractance(v_model, i_model, optimum.orders, grid_points=401)

    assert abs(optimum.orders.alpha1 - 1.0) <= 0.05
    assert abs(optimum.orders.alpha2 - 1.0) <= 0.05
    assert curve.range_value / abs(np.mean(curve.values)) < 0.02
    assert FracOrderPair(alpha1=1.0, alpha2=1.0) in optimum.admissible
    assert len(coarse_map.alphas) == 41


def test_optimize_orders_should_not_depend_on_the_thread_count(resistor_models):
    v_model, i_model, _ = resistor_models

    single, single_map = memfractance.optimize_orders(
        v_model, i_model, alpha_step=0.1, refine_step=None, threads=1, **FAST
    )
    pooled, pooled_map = memfractance.optimize_orders(
        v_model, i_model, alpha_step=0.1, refine_step=None, threads=8, **FAST
    )

    assert single.json() == pooled.json()
    assert single_map.json() == pooled_map.json()


def test_reconstruct_compare_of_models_on_their_own_predictions_should_be_perfect(resistor_models):
    v_model, i_model, run = resistor_models
    refit_run = run.copy(update={"voltage": v_model(run.time), "current": i_model(run.time)})

    result = memfractance.reconstruct_compare(v_model, i_model, refit_run)

    assert result.voltage_stats.r_squared == pytest.approx(1.0)
    assert result.current_stats.r_squared == pytest.approx(1.0)
    assert len(result.voltage_model) == run.n_samples


def test_reconstruct_compare_of_the_fitted_run_should_report_the_fit(resistor_models):
    v_model, i_model, run = resistor_models

    result = memfractance.reconstruct_compare(v_model, i_model, run)

    assert 0.99 < result.voltage_stats.r_squared < 1.0


def test_memfractance_should_scale_inversely_with_the_current(resistor_models):
    v_model, i_model, _ = resistor_models
    quarter = PolyModel.from_chebyshev(0.25 * i_model.chebyshev, i_model.domain, i_model.scale)
    orders = FracOrderPair(alpha1=1.0, alpha2=1.0)

    curve = memfractance.memfractance(v_model, i_model, orders, grid_points=401)
    scaled = memfractance.memfractance(v_model, quarter, orders, grid_points=401)

    np.testing.assert_allclose(scaled.values, 4.0 * curve.values, rtol=1e-12)
    assert scaled.range_value == pytest.approx(4.0 * curve.range_value, rel=1e-12)

    optimum, _ = memfractance.optimize_orders(
        v_model, i_model, alpha_step=0.1, refine_step=None, threads=2, **FAST
    )
    scaled_optimum, _ = memfractance.optimize_orders(
        v_model, quarter, alpha_step=0.1, refine_step=None, threads=2, **FAST
    )
    assert scaled_optimum.orders == optimum.orders
    assert scaled_optimum.range_value == pytest.approx(4.0 * optimum.range_value, rel=1e-9)


def test_zero_scans_of_piecewise_model_should_stay_off_the_vertex():
    run = simulate_linear_element("resistor", 1000.0, triangular_sweep(0.5, 401, 0.01, SweepShape.TENT))
    i_model, _ = fit_piecewise(run.time, run.current, 2.0, 10)
    guard = vertex_guard(i_model)

    locus = memfractance.denominator_zeros(i_model, 0.5, scan_points=400)
    loci = memfractance.zero_loci(i_model, np.array([0.5, 1.0, 1.5]), scan_points=400, threads=1)

    assert loci[0] == locus
    for zeros in [locus.zeros, *(each.zeros for each in loci)]:
        assert all(abs(t - 2.0) >= guard for t in zeros)
