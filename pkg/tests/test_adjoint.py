import numpy as np
import pytest

from _oracles import xi_reference
from lagctrl.adjoint import (
    AdjointField,
    Cutoff,
    chi_eval,
    forcing_batch,
    forcing_eval,
    xi_batch,
    xi_eval,
    zeta_batch,
)

FIELD = AdjointField(alpha=0.3, c=1.3, T=2.0, nmax=2048, accel=True)
CUT = Cutoff(1.5, 2.5, 0.1)


class TestCutoff:
    def test_plateau_value_is_exactly_one(self):
        assert chi_eval(CUT, 2.0) == 1.0
        assert chi_eval(CUT, 1.6) == 1.0
        assert chi_eval(CUT, 2.4) == 1.0

    def test_support_boundary_exactly_zero(self):
        assert chi_eval(CUT, 1.5) == 0.0
        assert chi_eval(CUT, 2.5) == 0.0
        assert chi_eval(CUT, 0.7) == 0.0
        assert chi_eval(CUT, 3.1) == 0.0

    def test_half_transition_value(self):
        # g(s)=exp(-1/s) blend is symmetric, so the mid-transition value is
        # 1/2 while the far factor sits on its plateau
        assert chi_eval(CUT, 1.5 + 0.05) == pytest.approx(0.5, abs=1e-12)

    def test_range_and_monotone_rise(self):
        x = np.linspace(1.5, 2.5, 501)
        vals = chi_eval(CUT, x)
        assert np.all((vals >= 0.0) & (vals <= 1.0))
        rise = vals[(x > 1.5) & (x < 1.6)]
        assert np.all(np.diff(rise) >= 0.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            Cutoff(0.5, 2.5, 0.1)  # window must stay right of 1
        with pytest.raises(ValueError):
            Cutoff(1.5, 2.5, 0.6)  # margin eats the window


class TestXiSeries:
    def test_terminal_condition_exactly_zero(self):
        for x in (0.7, 1.9, 2.4):
            assert xi_eval(FIELD, FIELD.T, x) == 0.0
        row = xi_batch(FIELD, [0.5, 2.0], np.linspace(0.1, 3.0, 7))
        assert np.all(row[1] == 0.0)

    def test_boundary_values_exactly_zero(self):
        for t in (0.0, 0.5, 1.7):
            assert xi_eval(FIELD, t, 0.0) == 0.0
            assert xi_eval(FIELD, t, np.pi) == 0.0
        cols = xi_batch(FIELD, [0.5], [0.0, 1.0, np.pi])
        assert cols[0, 0] == 0.0 and cols[0, 2] == 0.0 and cols[0, 1] != 0.0

    def test_against_extended_precision_reference(self):
        ref = xi_reference()
        assert ref["nmax"] == 10**7
        plain = AdjointField(0.3, 1.3, 2.0, nmax=10**5, accel=False)
        for t, x, val in ref["points"]:
            assert abs(xi_eval(plain, t, x) - val) <= 1e-6
            assert abs(xi_eval(FIELD, t, x) - val) <= 1e-6

    def test_batch_matches_pointwise(self, rng):
        t = np.sort(rng.uniform(0.0, 2.0, 5))
        x = np.sort(rng.uniform(0.0, np.pi, 5))
        mat = xi_batch(FIELD, t, x)
        for i in range(5):
            for j in range(5):
                assert mat[i, j] == pytest.approx(
                    xi_eval(FIELD, t[i], x[j]), abs=1e-13
                )

    def test_single_entry_batch_reduces_to_eval(self):
        assert xi_batch(FIELD, [1.0], [2.0])[0, 0] == pytest.approx(
            xi_eval(FIELD, 1.0, 2.0), abs=1e-15
        )

    def test_source_position_symmetry(self):
        # the series depends on (alpha, x) only through sin(n*alpha)*sin(n*x)
        swapped = AdjointField(alpha=2.0, c=1.3, T=2.0, nmax=2048, accel=True)
        assert xi_eval(FIELD, 0.8, 2.0) == pytest.approx(
            xi_eval(swapped, 0.8, 0.3), rel=1e-11
        )

    def test_truncation_convergence_plain(self):
        ref = xi_eval(AdjointField(0.3, 1.3, 2.0, nmax=1 << 16), 1.0, 2.0)
        errs = [
            abs(xi_eval(AdjointField(0.3, 1.3, 2.0, nmax=N, accel=False), 1.0, 2.0) - ref)
            for N in (256, 1024, 4096)
        ]
        assert errs[0] > errs[1] > errs[2]

    def test_acceleration_beats_plain_sum(self):
        ref = xi_eval(AdjointField(0.3, 1.3, 2.0, nmax=1 << 16), 1.0, 2.0)
        plain = abs(xi_eval(AdjointField(0.3, 1.3, 2.0, nmax=512, accel=False), 1.0, 2.0) - ref)
        accel = abs(xi_eval(AdjointField(0.3, 1.3, 2.0, nmax=512, accel=True), 1.0, 2.0) - ref)
        assert accel < 1e-3 * plain

    def test_bounded_at_large_truncation(self):
        big = AdjointField(0.3, 1.3, 2.0, nmax=1 << 14)
        t = np.linspace(0.0, 2.0, 21)
        x = np.linspace(1.05, 3.1, 41)
        assert np.max(np.abs(xi_batch(big, t, x))) < 1.0

    def test_domain_validation(self):
        with pytest.raises(ValueError):
            xi_eval(FIELD, -0.1, 1.0)
        with pytest.raises(ValueError):
            xi_eval(FIELD, 2.3, 1.0)
        with pytest.raises(ValueError):
            xi_eval(FIELD, 1.0, 3.5)

    def test_resonant_mode_detection(self):
        assert AdjointField(0.3, 1.0, 2.0).resonant_mode == 2
        assert AdjointField(0.3, 1.5, 2.0).resonant_mode == 3
        assert FIELD.resonant_mode is None

    def test_resonant_series_finite_and_terminal_zero(self):
        res = AdjointField(0.3, 1.0, 2.0, nmax=256)
        vals = xi_batch(res, [0.0, 1.0, 2.0], [1.7, 2.2])
        assert np.all(np.isfinite(vals))
        assert np.all(vals[2] == 0.0)

    def test_field_validation(self):
        with pytest.raises(ValueError):
            AdjointField(alpha=3.5, c=1.3, T=2.0)
        with pytest.raises(ValueError):
            AdjointField(alpha=0.3, c=1.3, T=-1.0)
        with pytest.raises(ValueError):
            AdjointField(alpha=0.3, c=1.3, T=2.0, nmax=0)


class TestForcing:
    def test_vanishes_outside_window(self):
        assert forcing_eval(FIELD, CUT, 1.0, 0.9) == 0.0
        assert forcing_eval(FIELD, CUT, 1.0, 2.8) == 0.0

    def test_vanishes_at_terminal_time(self):
        assert forcing_eval(FIELD, CUT, FIELD.T, 2.0) == 0.0

    def test_product_of_factors(self):
        t, x = 1.0, 2.0
        assert forcing_eval(FIELD, CUT, t, x) == pytest.approx(
            chi_eval(CUT, x) * xi_eval(FIELD, t, x), rel=1e-14
        )

    def test_batch_support(self):
        t = np.linspace(0.0, 2.0, 4)
        x = np.array([0.5, 1.3, 2.0, 2.9])
        tab = forcing_batch(FIELD, CUT, t, x)
        assert np.all(tab[:, 0] == 0.0)
        assert np.all(tab[:, 3] == 0.0)
        assert np.any(tab[:, 2] != 0.0)


class TestAdjointSystemResidual:
    def test_interior_residual_refines_quadratically(self):
        # -xi_t - c^2 zeta_x - xi_xx should vanish away from the source;
        # central differences expose an O(h^2) residual trend
        fld = AdjointField(0.3, 1.3, 2.0, nmax=4096)
        c2 = fld.c**2
        t0, x0 = 1.0, 2.0
        resids = []
        for h in (4e-2, 2e-2, 1e-2):
            ts = np.array([t0 - h, t0, t0 + h])
            xs = np.array([x0 - h, x0, x0 + h])
            XI = xi_batch(fld, ts, xs)
            ZE = zeta_batch(fld, ts, xs)
            xi_t = (XI[2, 1] - XI[0, 1]) / (2 * h)
            zeta_x = (ZE[1, 2] - ZE[1, 0]) / (2 * h)
            xi_xx = (XI[1, 0] - 2 * XI[1, 1] + XI[1, 2]) / h**2
            resids.append(abs(-xi_t - c2 * zeta_x - xi_xx))
        assert resids[0] / resids[1] > 3.0
        assert resids[1] / resids[2] > 3.0

    def test_zeta_terminal_zero(self):
        z = zeta_batch(FIELD, [2.0], [1.7, 2.2])
        assert np.all(z == 0.0)
