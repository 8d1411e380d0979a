import numpy as np
import pytest
from pydantic import ValidationError

from memfract.errors import InputError
from memfract.models import ElementKind, SweepShape
from memfract.synth import (
    MemristorParams,
    simulate_linear_element,
    simulate_memristor,
    triangular_sweep,
)


def test_triangular_sweep_should_peak_inside_the_record():
    sweep = triangular_sweep(0.5, 401, 0.1)

    assert sweep.t_max == pytest.approx(40.0)
    assert 0 < np.argmax(sweep.voltage) < 400
    assert sweep.voltage.max() == pytest.approx(0.5)
    assert sweep.sweep_range == (-0.5, 0.5)


def test_bipolar_sweep_should_be_odd_about_its_midpoint():
    sweep = triangular_sweep(1.0, 401, 0.01)

    np.testing.assert_allclose(sweep.voltage[::-1], -sweep.voltage, atol=1e-12)
    assert sweep.voltage[0] == 0.0
    assert sweep.voltage[-1] == pytest.approx(0.0, abs=1e-12)


def test_tent_sweep_should_turn_at_mid_record():
    sweep = triangular_sweep(0.5, 401, 0.01, SweepShape.TENT)

    assert sweep.voltage[0] == pytest.approx(-0.5)
    assert sweep.voltage[200] == pytest.approx(0.5)
    assert sweep.voltage[-1] == pytest.approx(-0.5)
    assert np.argmax(sweep.voltage) == 200


def test_triangular_sweep_with_too_few_samples_should_fail():
    with pytest.raises(InputError):
        triangular_sweep(1.0, 4, 0.01)


def test_memristor_with_equal_resistances_should_be_ohmic():
    sweep = triangular_sweep(1.0, 401, 0.01)

    run = simulate_memristor(MemristorParams(r_on=1000.0, r_off=1000.0), sweep)

    np.testing.assert_allclose(run.current, sweep.voltage / 1000.0, rtol=1e-12, atol=0)


def test_memristor_under_zero_amplitude_should_draw_no_current():
    run = simulate_memristor(MemristorParams(), triangular_sweep(0.0, 101, 0.01))

    assert not run.current.any()


def test_default_memristor_should_trace_a_pinched_loop():
    sweep = triangular_sweep(1.0, 401, 0.002)

    run = simulate_memristor(MemristorParams(), sweep)

    assert run.current[0] == 0.0
    assert run.current[200] == pytest.approx(0.0, abs=1e-12)
    # same voltage, rising vs falling branch of the positive lobe
    assert sweep.voltage[50] == pytest.approx(sweep.voltage[150])
    assert run.current[150] > 1.5 * run.current[50]
    # negative lobe mirrors the positive one
    assert sweep.voltage[250] == pytest.approx(sweep.voltage[350])
    assert run.current[250] < 0 and run.current[350] < 0
    assert run.current[250] != pytest.approx(run.current[350])


def test_memristor_params_should_default_w0_to_half_the_device():
    assert MemristorParams(d=4e-9).w0 == pytest.approx(2e-9)


def test_memristor_params_with_state_outside_device_should_fail():
    with pytest.raises(ValidationError):
        MemristorParams(w0=20e-9)


def test_resistor_should_follow_ohms_law():
    sweep = triangular_sweep(0.5, 401, 0.01)

    run = simulate_linear_element(ElementKind.RESISTOR, 1000.0, sweep)

    assert sweep.voltage[100] == pytest.approx(0.5)
    assert run.current[100] == pytest.approx(0.5e-3)
    assert run.label == "synthetic resistor"


def test_capacitor_on_a_ramp_should_draw_constant_current():
    sweep = triangular_sweep(1.0, 401, 0.01)
    slope = 1.0 / (100 * 0.01)

    run = simulate_linear_element("capacitor", 1e-6, sweep)

    np.testing.assert_allclose(run.current[10:90], 1e-6 * slope, rtol=1e-9)
    np.testing.assert_allclose(run.current[110:290], -1e-6 * slope, rtol=1e-9)


def test_inductor_over_a_completed_sweep_should_return_to_zero_current():
    sweep = triangular_sweep(1.0, 401, 0.01)

    run = simulate_linear_element("inductor", 1e-3, sweep)

    assert abs(run.current[-1]) < 1e-9 * np.max(np.abs(run.current))
    assert run.current[200] > 0


def test_linear_element_with_unknown_kind_should_fail():
    with pytest.raises(InputError, match="unknown element kind"):
        simulate_linear_element("diode", 1.0, triangular_sweep(1.0, 11, 0.01))


def test_linear_element_with_non_positive_value_should_fail():
    with pytest.raises(InputError, match="must be positive"):
        simulate_linear_element("resistor", 0.0, triangular_sweep(1.0, 11, 0.01))


def test_doubling_the_step_delay_should_double_t_max_exactly():
    sweep = triangular_sweep(0.5, 401, 0.01)
    slower = triangular_sweep(0.5, 401, 0.02)

    assert slower.t_max == 2 * sweep.t_max
    np.testing.assert_array_equal(slower.voltage, sweep.voltage)


def test_triangular_sweep_with_negative_peak_should_fail():
    with pytest.raises(InputError, match="v_peak"):
        triangular_sweep(-0.5, 401, 0.01)
