"""Finite-difference solvers for the linearized and full nonlinear systems.

Both use a staggered grid (density-like variables at cell centers, velocity
at nodes) on [0, pi] and a semi-implicit march: viscosity backward in time
through a tridiagonal solve, pressure/flux coupling explicit with the mass
update applied first, convection by first-order upwinding.  Homogeneous
Dirichlet velocity ends make the conservative mass flux telescope, so total
mass is conserved to rounding and the rest state is an exact fixed point.

Field histories can be written as CSV triples or in a compact binary format
(see :meth:`FieldHistory.save`): magic ``LCNS``, u32 version, u32 M,
u32 steps, f64 dt, then (steps+1) x (M+1) row-major float64, all
little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels

LCNS_MAGIC = b"LCNS"
LCNS_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


class CflViolation(RuntimeError):
    """Time step exceeded the advective CFL bound during a run."""


class NonFiniteField(RuntimeError):
    """NaN or Inf detected in the evolving fields."""


class VacuumApproach(RuntimeError):
    """Density fell below the positivity floor; forcing too strong."""


@dataclass(frozen=True)
class GasModel:
    """Barotropic pressure law p(rho) = (c**2/gamma) * rho**gamma.

    Scaled so p'(1) = c**2 exactly; gamma = 1 gives the isothermal law.
    The viscosity is fixed to one.
    """

    c: float = 1.3
    gamma: float = 1.4

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError(f"sound speed must be positive, got {self.c}")
        if self.gamma < 1:
            raise ValueError(f"adiabatic exponent must be >= 1, got {self.gamma}")

    def pressure(self, rho):
        return (self.c * self.c / self.gamma) * np.asarray(rho) ** self.gamma


@dataclass(frozen=True)
class Grid:
    """Uniform staggered grid on [0, pi] with a fixed time step."""

    M: int
    dt: float
    steps: int
    cfl: float = 0.5

    def __post_init__(self):
        if self.M < 4:
            raise ValueError(f"need at least 4 cells, got {self.M}")
        if self.dt <= 0 or self.steps < 1:
            raise ValueError("time step and step count must be positive")

    @classmethod
    def from_cfl(cls, M, T, c, cfl=0.5, u_headroom=0.1):
        """Pick dt from the advective CFL with headroom for |u| <= u_headroom."""
        dx = np.pi / M
        dt_max = cfl * dx / (c + u_headroom)
        steps = int(np.ceil(T / dt_max))
        return cls(M=M, dt=T / steps, steps=steps, cfl=cfl)

    @property
    def dx(self) -> float:
        return np.pi / self.M

    @property
    def T(self) -> float:
        return self.steps * self.dt

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.M + 1)

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.dx

    @property
    def t_nodes(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    @property
    def t_mid(self) -> np.ndarray:
        """Half-step times where forcings are sampled."""
        return (np.arange(self.steps) + 0.5) * self.dt


@dataclass(frozen=True)
class FluidState:
    """Nonlinear state: cell densities, node velocities, current time."""

    rho: np.ndarray
    u: np.ndarray
    t: float

    def __post_init__(self):
        if np.any(self.rho <= 0):
            raise ValueError("density must stay positive")
        if self.u[0] != 0.0 or self.u[-1] != 0.0:
            raise ValueError("velocity must vanish at both ends")


@dataclass(frozen=True)
class LinearState:
    """Linearized state: cell density perturbation, node velocity, time."""

    eta: np.ndarray
    v: np.ndarray
    t: float

    def __post_init__(self):
        if self.v[0] != 0.0 or self.v[-1] != 0.0:
            raise ValueError("velocity must vanish at both ends")


@dataclass
class FieldHistory:
    """Node-velocity snapshots at every step, for flow-map replay."""

    values: np.ndarray  # (steps+1, M+1)
    dt: float
    t0: float = 0.0
    label: str = "u"

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("history must be a 2-D (steps+1, M+1) array")

    @property
    def steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def M(self) -> int:
        return self.values.shape[1] - 1

    @property
    def dx(self) -> float:
        return np.pi / self.M

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.steps + 1) * self.dt

    def window(self, start: int, stop: int) -> "FieldHistory":
        """Sub-history over snapshot indices [start, stop]."""
        if not (0 <= start < stop <= self.steps):
            raise ValueError(f"window [{start}, {stop}] outside 0..{self.steps}")
        return FieldHistory(
            self.values[start : stop + 1].copy(),
            dt=self.dt,
            t0=self.t0 + start * self.dt,
            label=self.label,
        )

    def save(self, path) -> None:
        """Binary snapshot file; header documented in the module docstring.

        Only full histories are stored (the format carries no start time);
        :meth:`window` views live in memory only.
        """
        if self.t0 != 0.0:
            raise ValueError("cannot save a window view (t0 != 0)")
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(LCNS_MAGIC, LCNS_VERSION, self.M, self.steps, self.dt))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "FieldHistory":
        with open(path, "rb") as fh:
            magic, version, M, steps, dt = _HEADER.unpack(fh.read(_HEADER.size))
            if magic != LCNS_MAGIC:
                raise ValueError(f"{path}: not a LCNS history file")
            if version != LCNS_VERSION:
                raise ValueError(f"{path}: unsupported version {version}")
            data = np.fromfile(fh, dtype="<f8", count=(steps + 1) * (M + 1))
        return cls(data.reshape(steps + 1, M + 1), dt=dt)

    def to_csv(self, path, stride_t: int = 1, stride_x: int = 1) -> None:
        """(t, x, value) triples; strides thin the output for plotting."""
        x = np.linspace(0.0, np.pi, self.M + 1)[::stride_x]
        t = self.times[::stride_t]
        vals = self.values[::stride_t, ::stride_x]
        with open(path, "w") as fh:
            fh.write(f"t,x,{self.label}\n")
            for i, ti in enumerate(t):
                for xj, vij in zip(x, vals[i]):
                    fh.write(f"{ti:.17g},{xj:.17g},{vij:.17g}\n")


@dataclass(frozen=True)
class EnergyDiag:
    """Measured quantities of the linear energy inequality."""

    sup_eta_l2: float
    sup_v_l2: float
    vx_l2: float  # (int_0^T ||v_x||^2 dt)^(1/2)
    forcing_l2: float
    source_l2: float
    bound_ratio: float  # LHS / (||f|| + ||g||), the measured constant
    eta_int_drift: float  # max |int eta dx - int g dx dt|, zero-mean check


@dataclass(frozen=True)
class NonlinDiag:
    """Small-data regime ledger for a nonlinear run."""

    mass_drift: float
    min_rho: float
    sup_state_h1: float  # sup_t (||rho-1||_H1 + ||u||_H1)
    ux_h1_l2: float  # (int ||u_x||_H1^2 dt)^(1/2)
    forcing_l2: float
    bound_ratio: float
    rho_final: np.ndarray


def _sample(sampler, t_grid, x_grid, shape):
    """Accept a table, a broadcasting callable f(t_vec, x_vec), or None."""
    if sampler is None:
        return np.zeros(shape)
    if isinstance(sampler, np.ndarray):
        if sampler.shape != shape:
            raise ValueError(f"forcing table has shape {sampler.shape}, need {shape}")
        return np.ascontiguousarray(sampler, dtype=float)
    table = np.asarray(sampler(t_grid, x_grid), dtype=float)
    if table.shape != shape:
        raise ValueError(f"sampler returned shape {table.shape}, need {shape}")
    return np.ascontiguousarray(table)


def _raise_for_status(status, bad_step, dt):
    if status == kernels.STATUS_CFL:
        raise CflViolation(f"CFL bound violated at step {bad_step} (t={bad_step * dt:.6g})")
    if status == kernels.STATUS_NONFINITE:
        raise NonFiniteField(f"non-finite field at step {bad_step} (t={bad_step * dt:.6g})")
    if status == kernels.STATUS_VACUUM:
        raise VacuumApproach(
            f"density under positivity floor at step {bad_step} (t={bad_step * dt:.6g})"
        )


def solve_linearized(f, g, grid: Grid, gas: GasModel):
    """Run the linearized system from zero data; returns (history, EnergyDiag).

    ``f`` (node forcing) and ``g`` (cell source) may be (steps, M+1) /
    (steps, M) tables sampled at half-step times, callables f(t_vec, x_vec)
    returning such tables, or None.
    """
    f_mid = _sample(f, grid.t_mid, grid.x_nodes, (grid.steps, grid.M + 1))
    g_mid = _sample(g, grid.t_mid, grid.x_centers, (grid.steps, grid.M))
    v_hist, eta, eta_l2, v_l2, vx_l2sq, eta_int, status, bad = kernels.linear_run(
        f_mid, g_mid, grid.dt, grid.dx, gas.c, grid.cfl
    )
    _raise_for_status(status, bad, grid.dt)

    f_l2 = np.sqrt(grid.dt * grid.dx * np.sum(f_mid * f_mid))
    g_l2 = np.sqrt(grid.dt * grid.dx * np.sum(g_mid * g_mid))
    lhs = np.max(eta_l2) + np.max(v_l2) + np.sqrt(grid.dt * np.sum(vx_l2sq))
    data = f_l2 + g_l2
    # with g present int eta dx grows by int g; report drift relative to it
    g_cum = np.concatenate([[0.0], np.cumsum(grid.dt * grid.dx * np.sum(g_mid, axis=1))])
    diag = EnergyDiag(
        sup_eta_l2=float(np.max(eta_l2)),
        sup_v_l2=float(np.max(v_l2)),
        vx_l2=float(np.sqrt(grid.dt * np.sum(vx_l2sq))),
        forcing_l2=float(f_l2),
        source_l2=float(g_l2),
        bound_ratio=float(lhs / data) if data > 0 else 0.0,
        eta_int_drift=float(np.max(np.abs(eta_int - g_cum))),
    )
    return FieldHistory(v_hist, dt=grid.dt, label="v"), diag


def solve_nonlinear(f, grid: Grid, gas: GasModel, rho_floor: float = 0.1):
    """Run the full system from rest; returns (history, NonlinDiag).

    Raises CflViolation / NonFiniteField / VacuumApproach when the forcing
    pushes the state out of the small-data regime.
    """
    f_mid = _sample(f, grid.t_mid, grid.x_nodes, (grid.steps, grid.M + 1))
    u_hist, rho, mass, rho_min, state_h1, ux_h1sq, status, bad = kernels.nonlinear_run(
        f_mid, grid.dt, grid.dx, gas.c, gas.gamma, grid.cfl, rho_floor
    )
    _raise_for_status(status, bad, grid.dt)

    f_l2 = np.sqrt(grid.dt * grid.dx * np.sum(f_mid * f_mid))
    lhs = np.max(state_h1) + np.sqrt(grid.dt * np.sum(ux_h1sq))
    diag = NonlinDiag(
        mass_drift=float(np.max(np.abs(mass - mass[0]))),
        min_rho=float(np.min(rho_min)),
        sup_state_h1=float(np.max(state_h1)),
        ux_h1_l2=float(np.sqrt(grid.dt * np.sum(ux_h1sq))),
        forcing_l2=float(f_l2),
        bound_ratio=float(lhs / f_l2) if f_l2 > 0 else 0.0,
        rho_final=rho,
    )
    return FieldHistory(u_hist, dt=grid.dt, label="u"), diag
