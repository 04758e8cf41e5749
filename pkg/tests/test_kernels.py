"""Compiled core vs numpy fallback: identical contracts, matching numbers."""

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

import lagctrl.kernels as kernels
import lagctrl.kernels._numpy as knp

_core = pytest.importorskip("lagctrl.kernels._core")


@pytest.fixture(scope="module")
def problem_arrays(rng):
    M, steps = 96, 300
    dx = np.pi / M
    dt = 0.4 * dx / 2.0
    f = 0.05 * rng.standard_normal((steps, M + 1))
    f[:, 0] = f[:, -1] = 0.0
    g = 0.01 * rng.standard_normal((steps, M))
    return M, steps, dt, dx, f, g


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")


def test_linear_run_equivalence(problem_arrays):
    M, steps, dt, dx, f, g = problem_arrays
    out_py = knp.linear_run(f, g, dt, dx, 1.3, 0.5)
    out_cy = _core.linear_run(f, g, dt, dx, 1.3, 0.5)
    assert out_py[-2:] == out_cy[-2:]  # status, bad_step
    for a, b in zip(out_py[:-2], out_cy[:-2]):
        assert np.max(np.abs(a - b)) <= 1e-12


def test_nonlinear_run_equivalence(problem_arrays):
    M, steps, dt, dx, f, g = problem_arrays
    out_py = knp.nonlinear_run(f, dt, dx, 1.3, 1.4, 0.5, 0.1)
    out_cy = _core.nonlinear_run(f, dt, dx, 1.3, 1.4, 0.5, 0.1)
    assert out_py[-2:] == out_cy[-2:]
    for a, b in zip(out_py[:-2], out_cy[:-2]):
        assert np.max(np.abs(a - b)) <= 1e-12


def test_advect_equivalence(problem_arrays):
    M, steps, dt, dx, f, g = problem_arrays
    u_hist = knp.nonlinear_run(f, dt, dx, 1.3, 1.4, 0.5, 0.1)[0]
    x = np.linspace(0.0, np.pi, M + 1)
    d_hist = np.ascontiguousarray(PchipInterpolator(x, u_hist, axis=1).derivative()(x))
    seeds = np.array([0.2, 0.9, 1.7, 2.8])
    for sub in (1, 3):
        pa = knp.advect_rk4(u_hist, d_hist, seeds, dt, dx, sub)
        pb = _core.advect_rk4(u_hist, d_hist, seeds, dt, dx, sub)
        assert np.max(np.abs(pa - pb)) <= 1e-13


def test_failure_statuses_agree():
    M, steps = 32, 8
    dx = np.pi / M
    f = np.zeros((steps, M + 1))
    # time step far above the acoustic CFL bound
    out_py = knp.linear_run(f + 0.1, f[:, :M] * 0, 0.5, dx, 1.3, 0.5)
    out_cy = _core.linear_run(f + 0.1, f[:, :M] * 0, 0.5, dx, 1.3, 0.5)
    assert out_py[-2:] == out_cy[-2:] == (kernels.STATUS_CFL, 1)

    f_nan = f.copy()
    f_nan[0, 5] = np.nan
    out_py = knp.linear_run(f_nan, f[:, :M] * 0, 1e-4, dx, 1.3, 0.5)
    out_cy = _core.linear_run(f_nan, f[:, :M] * 0, 1e-4, dx, 1.3, 0.5)
    assert out_py[-2:] == out_cy[-2:] == (kernels.STATUS_NONFINITE, 1)
