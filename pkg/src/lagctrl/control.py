"""Endpoint map and Newton shooting for the control amplitudes.

theta(eps) advances the nonlinear system under the combined forcing
sum_i eps_i * f_i and reports where the particles seeded at the source
points land at time T.  synthesize() solves theta(eps) = beta by a
quasi-Newton iteration whose initial Jacobian is the Gram matrix (the exact
derivative at eps = 0), falling back to a finite-difference Jacobian if the
residual stalls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adjoint import AdjointField, Cutoff, forcing_batch
from .flowmap import IntegratorOptions, advect_many
from .gram import GramReport, gram_matrix, linear_predict
from .pde import CflViolation, GasModel, Grid, NonFiniteField, VacuumApproach, solve_nonlinear

log = logging.getLogger("lagctrl.control")


class AmplitudeTooLarge(RuntimeError):
    """Forcing left the small-data regime (vacuum, CFL, or blow-up)."""


class Diverged(RuntimeError):
    """Newton iteration hit the iteration cap or the damping floor."""


@dataclass(frozen=True)
class ControlProblem:
    """Source points, targets, horizon, and the control window geometry."""

    alphas: tuple
    betas: tuple
    T: float
    omega: tuple
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        a, b = np.asarray(self.alphas), np.asarray(self.betas)
        if a.size == 0 or a.size != b.size:
            raise ValueError("alphas and betas must be nonempty and equally long")
        for name, arr in (("alphas", a), ("betas", b)):
            if np.any(arr <= 0.0) or np.any(arr >= 1.0):
                raise ValueError(f"{name} must lie strictly inside (0, 1)")
            if np.any(np.diff(arr) <= 0.0):
                raise ValueError(f"{name} must be strictly increasing")
        if len(self.omega) != 2 or not (1.0 <= self.omega[0] < self.omega[1] <= np.pi):
            raise ValueError(f"omega {self.omega} must be an interval inside (1, pi)")
        if self.eta <= 0 or 2.0 * self.eta >= self.omega[1] - self.omega[0]:
            raise ValueError(f"eta {self.eta} must satisfy 0 < 2*eta < |omega|")
        if self.T <= 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")

    @property
    def d(self) -> int:
        return len(self.alphas)

    @property
    def displacement(self) -> np.ndarray:
        return np.asarray(self.betas) - np.asarray(self.alphas)


@dataclass
class SynthesisReport:
    """Outcome of the shooting iteration, JSON-friendly."""

    epsilon: np.ndarray
    residual: np.ndarray  # theta(eps) - beta
    iterations: int
    jacobian_source: str  # "gram" or "finite_difference"
    converged: bool
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "epsilon": [float(e) for e in self.epsilon],
            "residual": [float(r) for r in self.residual],
            "iterations": self.iterations,
            "jacobian_source": self.jacobian_source,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


class ShootingOperator:
    """Caches the per-point forcing tables; theta(eps) is then one solve.

    The forcing is linear in eps, so the d tables are combined per call
    instead of re-summing the adjoint series.
    """

    def __init__(
        self,
        problem: ControlProblem,
        gas: GasModel,
        grid: Grid,
        nmax: int = 2048,
        accel: bool = True,
        substeps: int = 1,
        rho_floor: float = 0.1,
    ):
        if abs(grid.T - problem.T) > 1e-12 * max(problem.T, 1.0):
            raise ValueError(f"grid horizon {grid.T} does not match problem T {problem.T}")
        self.problem = problem
        self.gas = gas
        self.grid = grid
        self.opts = IntegratorOptions(substeps=substeps)
        self.rho_floor = rho_floor
        cutoff = Cutoff(problem.omega[0], problem.omega[1], problem.eta)
        self.tables = [
            forcing_batch(
                AdjointField(a, gas.c, problem.T, nmax=nmax, accel=accel),
                cutoff,
                grid.t_mid,
                grid.x_nodes,
            )
            for a in problem.alphas
        ]
        self.last_history = None
        self.last_diag = None

    def forcing(self, epsilon) -> np.ndarray:
        epsilon = np.asarray(epsilon, dtype=float)
        if epsilon.shape != (self.problem.d,):
            raise ValueError(f"need {self.problem.d} amplitudes, got shape {epsilon.shape}")
        out = np.zeros_like(self.tables[0])
        for e, tab in zip(epsilon, self.tables):
            if e != 0.0:
                out += e * tab
        return out

    def theta(self, epsilon, record: bool = True) -> np.ndarray:
        """Terminal particle positions for the given amplitudes.

        ``record=False`` skips storing the run on the operator, so probe
        evaluations may run concurrently.
        """
        try:
            history, diag = solve_nonlinear(
                self.forcing(epsilon), self.grid, self.gas, rho_floor=self.rho_floor
            )
        except (VacuumApproach, NonFiniteField, CflViolation) as exc:
            raise AmplitudeTooLarge(f"amplitudes {np.asarray(epsilon)} out of regime: {exc}") from exc
        if record:
            self.last_history, self.last_diag = history, diag
        pos = advect_many(history, np.asarray(self.problem.alphas), self.opts)
        return pos[-1]


def theta(epsilon, problem: ControlProblem, gas: GasModel, grid: Grid, **kwargs) -> np.ndarray:
    """One-shot endpoint map; builds the operator and discards it."""
    return ShootingOperator(problem, gas, grid, **kwargs).theta(epsilon)


def _fd_jacobian(op: ShootingOperator, eps: np.ndarray, threads: int = 1) -> np.ndarray:
    """Central finite-difference d(theta)/d(eps); 2d nonlinear solves.

    Probe solves are independent and may run on a thread pool; the Jacobian
    is assembled in index order so results do not depend on scheduling.
    """
    d = eps.size
    h = 1e-4 * np.linalg.norm(eps) + 1e-6
    probes = []
    for i in range(d):
        step = np.zeros(d)
        step[i] = h
        probes.extend([eps + step, eps - step])
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(lambda e: op.theta(e, record=False), probes))
    else:
        outs = [op.theta(e, record=False) for e in probes]
    J = np.empty((d, d))
    for i in range(d):
        J[:, i] = (outs[2 * i] - outs[2 * i + 1]) / (2.0 * h)
    return J


_MAX_DAMPINGS = 20
_STALL_LIMIT = 3


def synthesize(
    problem: ControlProblem,
    gas: GasModel,
    grid: Grid,
    nmax: int = 2048,
    accel: bool = True,
    quad_panels: int = 16,
    quad_nodes: int = 8,
    tol_pos: float = 1e-6,
    max_iter: int = 25,
    substeps: int = 1,
    rho_floor: float = 0.1,
    degeneracy_rtol: float = 1e-12,
    threads: int = 1,
    initial_guess=None,
    gram_report: GramReport | None = None,
    operator: ShootingOperator | None = None,
) -> SynthesisReport:
    """Solve theta(eps) = beta; returns the report or raises Diverged.

    The Gram matrix (exact Jacobian at zero amplitude) drives the iteration;
    after _STALL_LIMIT consecutive non-contracting steps it is replaced by a
    central finite-difference Jacobian.  Steps that increase the residual are
    halved, and regime failures during a trial step are treated the same way.
    Per-iteration lines are logged as
    ``iter=K residual=R step=S dampings=D jacobian=SRC``.
    """
    if gram_report is None:
        gram_report = gram_matrix(
            problem,
            gas,
            nmax=nmax,
            panels=quad_panels,
            nodes=quad_nodes,
            accel=accel,
            degeneracy_rtol=degeneracy_rtol,
        )
    op = operator or ShootingOperator(
        problem, gas, grid, nmax=nmax, accel=accel, substeps=substeps, rho_floor=rho_floor
    )
    beta = np.asarray(problem.betas)
    eps = (
        np.asarray(initial_guess, dtype=float)
        if initial_guess is not None
        else linear_predict(problem, gram_report)
    )

    jac_source = "gram"
    J = gram_report.matrix
    diagnostics = []
    stall = 0
    res = beta - op.theta(eps)
    res_norm = float(np.max(np.abs(res)))

    for it in range(max_iter + 1):
        log.info(
            "iter=%02d residual=%.3e step=%.3e dampings=%d jacobian=%s",
            it,
            res_norm,
            0.0 if it == 0 else float(np.max(np.abs(step))),
            0 if it == 0 else dampings,
            jac_source,
        )
        diagnostics.append(
            {
                "iteration": it,
                "residual_norm": res_norm,
                "step_norm": 0.0 if it == 0 else float(np.max(np.abs(step))),
                "dampings": 0 if it == 0 else dampings,
                "jacobian": jac_source,
            }
        )
        if res_norm <= tol_pos:
            return SynthesisReport(
                epsilon=eps,
                residual=-res,
                iterations=it,
                jacobian_source=jac_source,
                converged=True,
                diagnostics=diagnostics,
            )
        if it == max_iter:
            break

        if stall >= _STALL_LIMIT and jac_source == "gram":
            jac_source = "finite_difference"
            J = _fd_jacobian(op, eps, threads=threads)
        step = np.linalg.solve(J, res)

        dampings = 0
        while True:
            trial = eps + step
            try:
                trial_res = beta - op.theta(trial)
                trial_norm = float(np.max(np.abs(trial_res)))
            except AmplitudeTooLarge:
                trial_norm = np.inf
            if trial_norm <= res_norm or dampings >= _MAX_DAMPINGS:
                break
            step *= 0.5
            dampings += 1
        if dampings >= _MAX_DAMPINGS and trial_norm > res_norm:
            raise Diverged(
                f"damping floor hit at iteration {it} (residual {res_norm:.3e})"
            )
        stall = stall + 1 if trial_norm > 0.5 * res_norm else 0
        eps, res, res_norm = trial, trial_res, trial_norm

    raise Diverged(f"no convergence in {max_iter} iterations (residual {res_norm:.3e})")
