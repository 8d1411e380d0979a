import numpy as np
import pytest
from pydantic import ValidationError

from memfract import score
from memfract.errors import OpenSweepError
from memfract.models import SweepShape
from memfract.synth import (
    MemristorParams,
    simulate_linear_element,
    simulate_memristor,
    triangular_sweep,
)


@pytest.fixture(scope="module")
def memristor_run():
    return simulate_memristor(MemristorParams(), triangular_sweep(1.0, 401, 0.002))


def test_memristance_degree_of_resistor_should_be_zero():
    run = simulate_linear_element("resistor", 1000.0, triangular_sweep(0.5, 401, 0.01))

    result = score.memristance_degree(run)

    assert result.value == pytest.approx(0.0, abs=1e-9)
    assert result.pinch_closeness == pytest.approx(1.0)
    assert result.frequency_available is False


def test_memristance_degree_of_memristor_should_be_high(memristor_run):
    result = score.memristance_degree(memristor_run)

    near_zero = np.abs(memristor_run.voltage) < 1e-9
    assert np.all(np.abs(memristor_run.current[near_zero]) < 1e-9)
    assert result.value >= 0.5
    assert result.pinch_closeness == pytest.approx(1.0, abs=1e-9)
    assert result.lobe_area_norm > score.ScoreWeights().lobe_gate


def test_memristance_degree_of_capacitor_should_be_low():
    run = simulate_linear_element("capacitor", 1e-6, triangular_sweep(1.0, 401, 0.01))

    result = score.memristance_degree(run)

    assert result.pinch_closeness < 0.05
    assert result.value < 0.3


def test_memristance_degree_of_open_sweep_should_fail():
    run = simulate_linear_element("resistor", 1000.0, triangular_sweep(0.5, 401, 0.01, SweepShape.TENT))

    with pytest.raises(OpenSweepError, match="near 0 V"):
        score.memristance_degree(run)


def test_memristance_degree_with_faster_companion_should_see_the_lobes_shrink(memristor_run):
    faster = simulate_memristor(MemristorParams(), triangular_sweep(1.0, 401, 0.001))

    result = score.memristance_degree(memristor_run, [faster])

    assert result.frequency_available is True
    assert result.frequency_divergence > 0
    assert 0.0 <= result.value <= 1.0


def test_frequency_divergence_with_a_single_delay_should_be_unavailable(memristor_run):
    assert score.frequency_divergence([memristor_run, memristor_run]) == (0.0, False)


def test_pinch_closeness_of_silent_run_should_be_one():
    run = simulate_memristor(MemristorParams(), triangular_sweep(0.0, 101, 0.01))

    assert score.pinch_closeness(run) == 1.0
    assert score.lobe_area_norm(run) == 0.0


def test_score_weights_that_do_not_sum_to_one_should_fail():
    with pytest.raises(ValidationError, match="sum to 1"):
        score.ScoreWeights(lobe=0.5, pinch=0.5, frequency=0.5)


def test_memristance_degree_should_renormalize_without_companions(memristor_run):
    weights = score.ScoreWeights(lobe=0.4, pinch=0.4, frequency=0.2)

    result = score.memristance_degree(memristor_run, weights=weights)

    expected = (result.lobe_area_norm + result.pinch_closeness) / 2
    assert result.value == pytest.approx(expected)


def test_memristance_degree_should_not_depend_on_the_units(memristor_run):
    rescaled = memristor_run.copy(
        update={"voltage": 2.0 * memristor_run.voltage, "current": 0.5 * memristor_run.current}
    )

    result = score.memristance_degree(memristor_run)
    rescaled_result = score.memristance_degree(rescaled)

    assert rescaled_result.value == pytest.approx(result.value, rel=1e-12)
    assert rescaled_result.lobe_area_norm == pytest.approx(result.lobe_area_norm, rel=1e-12)
    assert rescaled_result.pinch_closeness == pytest.approx(result.pinch_closeness, rel=1e-12)


def test_lobe_area_norm_should_grow_with_the_resistance_ratio():
    sweep = triangular_sweep(0.5, 401, 0.0002)
    areas = []
    for r_off in [1500.0, 2500.0, 4000.0]:
        # initial resistance held at 1 kOhm so only the on/off ratio changes
        x0 = (r_off - 1000.0) / (r_off - 100.0)
        params = MemristorParams(r_on=100.0, r_off=r_off, w0=x0 * 10e-9)
        areas.append(score.lobe_area_norm(simulate_memristor(params, sweep)))

    assert areas == sorted(areas)
    assert areas[0] < areas[-1]
