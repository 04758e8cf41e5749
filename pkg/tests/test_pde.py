import numpy as np
import pytest

from lagctrl.adjoint import AdjointField, Cutoff, chi_eval, forcing_batch
from lagctrl.pde import (
    CflViolation,
    FieldHistory,
    FluidState,
    GasModel,
    Grid,
    LinearState,
    NonFiniteField,
    VacuumApproach,
    solve_linearized,
    solve_nonlinear,
)


@pytest.fixture(scope="module")
def forcing_table(gas, grid_small):
    field = AdjointField(0.3, gas.c, 2.0)
    cut = Cutoff(1.5, 2.5, 0.1)
    return forcing_batch(field, cut, grid_small.t_mid, grid_small.x_nodes)


class TestGrid:
    def test_from_cfl_hits_horizon_exactly(self):
        grid = Grid.from_cfl(128, 2.0, 1.3)
        assert grid.steps * grid.dt == pytest.approx(2.0, abs=1e-15)
        assert grid.dt <= 0.5 * grid.dx / (1.3 + 0.1)

    def test_staggered_geometry(self):
        grid = Grid(M=8, dt=0.01, steps=10)
        assert grid.x_nodes.shape == (9,)
        assert grid.x_centers.shape == (8,)
        assert grid.x_centers[0] == pytest.approx(grid.dx / 2)
        assert grid.t_mid[0] == pytest.approx(grid.dt / 2)

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(M=2, dt=0.01, steps=10)
        with pytest.raises(ValueError):
            Grid(M=16, dt=-0.01, steps=10)


class TestGasModel:
    def test_pressure_derivative_at_rest_density(self):
        for gamma in (1.0, 1.4, 2.0):
            gas = GasModel(c=1.3, gamma=gamma)
            h = 1e-6
            dp = (gas.pressure(1 + h) - gas.pressure(1 - h)) / (2 * h)
            assert dp == pytest.approx(1.3**2, rel=1e-8)

    def test_isothermal_law_is_linear(self):
        gas = GasModel(c=2.0, gamma=1.0)
        rho = np.linspace(0.5, 2.0, 7)
        assert np.allclose(gas.pressure(rho), 4.0 * rho, rtol=1e-14)

    def test_validation(self):
        with pytest.raises(ValueError):
            GasModel(c=-1.0)
        with pytest.raises(ValueError):
            GasModel(c=1.0, gamma=0.5)


class TestStates:
    def test_fluid_state_guards(self):
        with pytest.raises(ValueError):
            FluidState(rho=np.array([1.0, -0.1]), u=np.zeros(3), t=0.0)
        with pytest.raises(ValueError):
            FluidState(rho=np.ones(2), u=np.array([0.1, 0.0, 0.0]), t=0.0)

    def test_linear_state_guards(self):
        with pytest.raises(ValueError):
            LinearState(eta=np.zeros(2), v=np.array([0.0, 1.0, 0.1]), t=0.0)


class TestLinearSolver:
    def test_zero_data_stays_zero(self, gas, grid_small):
        hist, diag = solve_linearized(None, None, grid_small, gas)
        assert np.all(hist.values == 0.0)
        assert diag.sup_v_l2 == 0.0 and diag.sup_eta_l2 == 0.0

    def test_zero_mean_density_without_source(self, gas, grid_small, forcing_table):
        _, diag = solve_linearized(forcing_table, None, grid_small, gas)
        assert diag.eta_int_drift <= 1e-12

    def test_mean_tracks_source(self, gas):
        grid = Grid.from_cfl(64, 1.0, 1.3, u_headroom=1.0)
        g = np.ones((grid.steps, grid.M))
        _, diag = solve_linearized(None, g, grid, gas)
        assert diag.eta_int_drift <= 1e-12

    def test_forcing_shape_rejected(self, gas, grid_small):
        with pytest.raises(ValueError):
            solve_linearized(np.zeros((3, 3)), None, grid_small, gas)

    def test_callable_sampler(self, gas):
        grid = Grid.from_cfl(32, 0.5, 1.3)
        hist, _ = solve_linearized(
            lambda t, x: 0.01 * np.sin(x)[None, :] * np.ones_like(t)[:, None],
            None,
            grid,
            gas,
        )
        assert np.any(hist.values != 0.0)

    def test_cfl_violation_raises(self, gas):
        grid = Grid(M=64, dt=0.1, steps=5)  # way over the acoustic CFL
        with pytest.raises(CflViolation):
            solve_linearized(np.zeros((5, 65)), None, grid, gas)

    def test_nan_forcing_detected(self, gas):
        grid = Grid.from_cfl(32, 0.1, 1.3)
        f = np.zeros((grid.steps, 33))
        f[0, 10] = np.nan
        with pytest.raises(NonFiniteField):
            solve_linearized(f, None, grid, gas)

    def test_energy_bound_stable_under_refinement(self, gas):
        field = AdjointField(0.3, gas.c, 2.0)
        cut = Cutoff(1.5, 2.5, 0.1)
        ratios = []
        for M in (128, 256):
            grid = Grid.from_cfl(M, 2.0, gas.c)
            tab = forcing_batch(field, cut, grid.t_mid, grid.x_nodes)
            _, diag = solve_linearized(tab, None, grid, gas)
            ratios.append(diag.bound_ratio)
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert abs(ratios[1] - ratios[0]) <= 0.05 * ratios[0]


class TestManufacturedSolution:
    # compensating sources make eta* = sin(t)cos(3x), v* = sin(t)sin(2x) exact
    @staticmethod
    def _sources(gas):
        c2 = gas.c**2

        def g(t, x):
            return np.cos(t) * np.cos(3 * x) + 2 * np.sin(t) * np.cos(2 * x)

        def f(t, x):
            return (
                np.cos(t) * np.sin(2 * x)
                - 3 * c2 * np.sin(t) * np.sin(3 * x)
                + 4 * np.sin(t) * np.sin(2 * x)
            )

        return f, g

    def _final_error(self, gas, grid):
        f, g = self._sources(gas)
        fm = f(grid.t_mid[:, None], grid.x_nodes[None, :])
        gm = g(grid.t_mid[:, None], grid.x_centers[None, :])
        hist, _ = solve_linearized(fm, gm, grid, gas)
        v_exact = np.sin(grid.T) * np.sin(2 * grid.x_nodes)
        return np.sqrt(grid.dx * np.sum((hist.values[-1] - v_exact) ** 2))

    def test_first_order_in_time(self, gas):
        errs = [
            self._final_error(gas, Grid.from_cfl(M, 1.0, gas.c, u_headroom=1.2))
            for M in (64, 128, 256)
        ]
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 0.8

    def test_second_order_in_space(self, gas):
        errs = [
            self._final_error(gas, Grid(M=M, dt=1.0 / 4000, steps=4000))
            for M in (16, 32, 64)
        ]
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 1.7


class TestNonlinearSolver:
    def test_rest_state_is_exact_fixed_point(self, gas, grid_small):
        hist, diag = solve_nonlinear(None, grid_small, gas)
        assert np.all(hist.values == 0.0)
        assert np.all(diag.rho_final == 1.0)
        assert diag.mass_drift == 0.0

    def test_mass_conserved_to_rounding(self, gas, grid_small, forcing_table):
        _, diag = solve_nonlinear(0.05 * forcing_table, grid_small, gas)
        assert diag.mass_drift <= 1e-12

    def test_positivity_reported(self, gas, grid_small, forcing_table):
        _, diag = solve_nonlinear(0.05 * forcing_table, grid_small, gas)
        assert 0.9 < diag.min_rho <= 1.0

    def test_linearization_error_is_second_order(self, gas, grid_small, forcing_table):
        v_hist, _ = solve_linearized(forcing_table, None, grid_small, gas)
        ratios = []
        for eps in (1e-2, 5e-3, 2.5e-3):
            u_hist, _ = solve_nonlinear(eps * forcing_table, grid_small, gas)
            err = np.sqrt(
                grid_small.dx
                * grid_small.dt
                * np.sum((u_hist.values - eps * v_hist.values) ** 2)
            )
            ratios.append(err / eps**2)
        # ||u_eps - eps*v|| / eps^2 stays bounded as eps -> 0
        assert max(ratios) <= 2.0 * min(ratios)

    def test_vacuum_guard_triggers(self, gas):
        grid = Grid.from_cfl(256, 2.0, gas.c, u_headroom=5.0)
        steady = 10.0 * np.tile(chi_eval(Cutoff(1.5, 2.5, 0.1), grid.x_nodes), (grid.steps, 1))
        with pytest.raises(VacuumApproach):
            solve_nonlinear(steady, grid, gas)

    def test_cfl_guard_triggers(self, gas, grid_small, forcing_table):
        with pytest.raises(CflViolation):
            solve_nonlinear(20.0 * forcing_table, grid_small, gas)


class TestFieldHistory:
    def test_binary_roundtrip(self, tmp_path, rng):
        hist = FieldHistory(rng.standard_normal((11, 17)), dt=0.05, label="v")
        path = tmp_path / "run.lcns"
        hist.save(path)
        back = FieldHistory.load(path)
        assert np.array_equal(back.values, hist.values)
        assert back.dt == hist.dt
        assert back.M == 16 and back.steps == 10

    def test_header_layout(self, tmp_path):
        import struct

        hist = FieldHistory(np.arange(8.0).reshape(2, 4), dt=0.125)
        path = tmp_path / "layout.lcns"
        hist.save(path)
        raw = path.read_bytes()
        magic, version, M, steps, dt = struct.unpack_from("<4sIIId", raw)
        assert (magic, version, M, steps, dt) == (b"LCNS", 1, 3, 1, 0.125)
        assert len(raw) == struct.calcsize("<4sIIId") + 8 * 8

    def test_window_views_not_saved(self, tmp_path):
        hist = FieldHistory(np.zeros((4, 5)), dt=0.1)
        with pytest.raises(ValueError, match="window"):
            hist.window(1, 3).save(tmp_path / "w.lcns")

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bogus.lcns"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ValueError):
            FieldHistory.load(path)

    def test_csv_roundtrip_of_values(self, tmp_path):
        vals = np.arange(12.0).reshape(3, 4)
        hist = FieldHistory(vals, dt=0.5, label="u")
        path = tmp_path / "hist.csv"
        hist.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,x,u"
        assert len(lines) == 1 + 3 * 4
        t, x, v = (float(s) for s in lines[1].split(","))
        assert (t, x, v) == (0.0, 0.0, 0.0)
        t, x, v = (float(s) for s in lines[-1].split(","))
        assert t == 1.0 and x == pytest.approx(np.pi) and v == 11.0

    def test_window(self):
        vals = np.arange(30.0).reshape(6, 5)
        hist = FieldHistory(vals, dt=0.1)
        sub = hist.window(2, 5)
        assert sub.steps == 3
        assert sub.t0 == pytest.approx(0.2)
        assert np.array_equal(sub.values, vals[2:6])
        with pytest.raises(ValueError):
            hist.window(4, 2)
