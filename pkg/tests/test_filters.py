import numpy as np
import pytest

from bilateral_il.filters import (
    AdmittanceParams,
    DobState,
    FilterState,
    admittance_step,
    dob_step,
    lowpass_step,
    pseudo_derivative_step,
)
from bilateral_il.sim import InertiaParams


def run(step, fs, inputs, dt, *extra):
    out = []
    for u in inputs:
        y, fs = step(fs, u, *extra, dt) if extra else step(fs, u, dt)
        out.append(y)
    return np.array(out), fs


def test_lowpass_first_step_hand_value():
    y, _ = lowpass_step(FilterState.zeros(20.0, 0.001), 1.0, 0.001)
    assert y == pytest.approx(0.02 / 1.02)


def test_lowpass_step_response_matches_continuous():
    g, dt = 20.0, 0.001
    k = np.arange(1, 1001)
    y, _ = run(lowpass_step, FilterState.zeros(g, dt), np.ones(k.size), dt)
    late = k * dt >= 5 / g
    assert np.allclose(y[late], 1 - np.exp(-g * k[late] * dt), rtol=0.01)


def test_pseudo_derivative_of_ramp_approaches_slope():
    g, dt, slope = 20.0, 0.001, 0.7
    t = np.arange(1, 1001) * dt
    y, _ = run(pseudo_derivative_step, FilterState.zeros(g, dt), slope * t, dt)
    late = t >= 5 / g
    assert np.allclose(y[late], slope * (1 - np.exp(-g * t[late])), rtol=0.01)


def test_pseudo_derivative_primed_at_rest_gives_zero():
    fs = FilterState.at_rest(np.array([0.3, -1.2]), 20.0, 0.001)
    y, _ = pseudo_derivative_step(fs, np.array([0.3, -1.2]), 0.001)
    assert np.all(y == 0)


def test_filter_rejects_wrong_dt():
    with pytest.raises(ValueError):
        lowpass_step(FilterState.zeros(20.0, 0.001), 1.0, 0.002)


def test_filter_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        FilterState.zeros(0.0, 0.001)


def test_admittance_steady_state():
    params = AdmittanceParams(np.array([0.2]), 30.0)
    fs = FilterState.zeros(30.0, 0.001, 1)
    for _ in range(2000):
        v, fs = admittance_step(fs, np.array([0.6]), params, 0.001)
    assert v[0] == pytest.approx(0.6 / (30.0 * 0.2), rel=0.01)
    assert params.d[0] == pytest.approx(6.0)


def test_admittance_is_linear_and_decoupled():
    params = AdmittanceParams(np.array([0.2, 0.5]), 30.0)
    fs = FilterState.zeros(30.0, 0.001, 2)
    a, _ = admittance_step(fs, np.array([1.0, 0.0]), params, 0.001)
    b, _ = admittance_step(fs, np.array([0.0, 2.0]), params, 0.001)
    c, _ = admittance_step(fs, np.array([1.0, 2.0]), params, 0.001)
    assert np.allclose(a + b, c)
    assert a[1] == 0 and b[0] == 0


def test_dob_estimates_constant_disturbance_on_nominal_plant():
    # J dw/dt = u - d with u = 0: the estimate converges to d
    j = InertiaParams(np.array([0.939]))
    dt, d = 0.001, 0.5
    ds = DobState.zeros(10.0, dt, 1)
    w = np.zeros(1)
    u = np.zeros(1)
    for _ in range(int(5 / 10.0 / dt) + 1):
        d_hat, ds = dob_step(ds, w, u, j, dt)
        w = w + dt * (u - d) / j.j
    assert d_hat[0] == pytest.approx(d, rel=0.02)
