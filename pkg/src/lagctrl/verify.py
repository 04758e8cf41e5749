"""Stand-alone numerical verification battery.

Covers the closed-form factorization of the sine Vandermonde determinant
det(sin(i*alpha_j)), the second-kind Chebyshev-style polynomials behind it,
and the cross-module identities: Gram entries against time-integrated linear
responses (duality), the small-amplitude expansion of the endpoint map, and
the Gram positivity/Cauchy-Schwarz structure.  Each check reports a measured
error against its tolerance instead of raising.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .adjoint import AdjointField, Cutoff, forcing_batch
from .control import ControlProblem, ShootingOperator
from .gram import DegenerateGram, gram_matrix
from .pde import GasModel, Grid, solve_linearized

_BRUTE_LIMIT = 12
_REL_FLOOR = 1e-15


class SizeLimit(ValueError):
    """Brute-force determinant requested beyond the d <= 12 cost guard."""


@dataclass(frozen=True)
class TrigDetCase:
    """One determinant comparison: closed form vs LU factorization."""

    alphas: tuple
    closed_form: float
    brute_force: float
    rel_error: float


def trig_vandermonde_closed(alphas) -> float:
    """2^(d(d-1)) * prod sin(a_i) * prod_{i<j} sin((a_i-a_j)/2) sin((a_i+a_j)/2)."""
    a = np.asarray(alphas, dtype=float)
    d = a.size
    if d < 1:
        raise ValueError("need at least one point")
    val = 2.0 ** (d * (d - 1)) * np.prod(np.sin(a))
    for i in range(d):
        for j in range(i + 1, d):
            val *= np.sin(0.5 * (a[i] - a[j])) * np.sin(0.5 * (a[i] + a[j]))
    return float(val)


def _lu_det(A):
    """Partial-pivot elimination determinant; dtype-preserving."""
    A = A.copy()
    d = A.shape[0]
    det = A.dtype.type(1.0)
    for k in range(d):
        piv = k + int(np.argmax(np.abs(A[k:, k])))
        if piv != k:
            A[[k, piv]] = A[[piv, k]]
            det = -det
        if A[k, k] == 0:
            return A.dtype.type(0.0)
        det *= A[k, k]
        A[k + 1 :, k:] -= np.outer(A[k + 1 :, k] / A[k, k], A[k, k:])
    return det


def _brute_mpmath(alphas, magnitude):
    """Arbitrary-precision determinant, digits chosen from the target size.

    Elimination noise is absolute (~eps * matrix scale), so once |D| falls
    toward the noise floor a fixed-precision determinant carries no relative
    accuracy; escalate until eps sits far below |D|.
    """
    import mpmath

    d = len(alphas)
    dps = max(30, 25 + int(np.ceil(-np.log10(max(magnitude, 1e-280)))))
    with mpmath.workdps(dps):
        A = mpmath.matrix(d, d)
        for i in range(d):
            for j in range(d):
                A[i, j] = mpmath.sin((i + 1) * mpmath.mpf(float(alphas[j])))
        return float(mpmath.det(A))


_ESCALATE_BELOW = 1e-4


def trig_vandermonde_brute(alphas) -> float:
    """LU determinant of the matrix with entry (i, j) = sin(i * alpha_j).

    Runs in extended precision, escalating to arbitrary precision for
    near-degenerate tuples where elimination noise would otherwise dominate
    the tiny determinant.
    """
    a = np.asarray(alphas, dtype=float)
    d = a.size
    if d > _BRUTE_LIMIT:
        raise SizeLimit(f"brute-force determinant limited to d <= {_BRUTE_LIMIT}, got {d}")
    rows = np.arange(1, d + 1, dtype=np.longdouble)
    det = float(_lu_det(np.sin(np.outer(rows, a.astype(np.longdouble)))))
    if abs(det) < _ESCALATE_BELOW:
        # magnitude hint from the (relatively accurate) closed form
        det = _brute_mpmath(a, abs(trig_vandermonde_closed(a)))
    return det


def trig_case(alphas) -> TrigDetCase:
    closed = trig_vandermonde_closed(alphas)
    brute = trig_vandermonde_brute(alphas)
    rel = abs(closed - brute) / max(abs(brute), _REL_FLOOR)
    return TrigDetCase(tuple(float(a) for a in alphas), closed, brute, rel)


def random_increasing_tuples(d: int, count: int, rng, min_gap: float = 1e-3):
    """Strictly increasing tuples in (0, pi) with a minimal consecutive gap.

    The gap keeps the determinant away from rounding-dominated near-zeros
    while still exercising every pair factor.
    """
    out = []
    while len(out) < count:
        a = np.sort(rng.uniform(min_gap, np.pi - min_gap, size=d))
        if d == 1 or np.min(np.diff(a)) >= min_gap:
            out.append(a)
    return out


def trig_battery(dims, count: int, seed: int, min_gap: float = 1e-3):
    """Worst relative error of closed vs brute over random tuples per d."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = 0
    for d in dims:
        for a in random_increasing_tuples(d, count, rng, min_gap):
            worst = max(worst, trig_case(a).rel_error)
            cases += 1
    return worst, cases


def chebyshev_S(i: int):
    """Coefficients (ascending, exact ints) of S_i with sin(i*t) = S_i(cos t) sin t.

    Recurrence S_{i+1}(x) = 2x S_i(x) - S_{i-1}(x); degree i-1 and leading
    coefficient 2^(i-1).
    """
    if i < 1 or int(i) != i:
        raise ValueError(f"index must be a positive integer, got {i}")
    prev, cur = [1], [0, 2]
    if i == 1:
        return prev
    for _ in range(2, i):
        nxt = [0] + [2 * c for c in cur]
        for k, c in enumerate(prev):
            nxt[k] -= c
        prev, cur = cur, nxt
    return cur


@dataclass
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "skip"
    measured: float
    tolerance: float
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "details": self.details,
            "seconds": self.seconds,
        }


@dataclass
class VerifyReport:
    checks: list

    @property
    def all_passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks], "all_passed": self.all_passed}

    def table(self) -> str:
        lines = [f"{'check':<26} {'status':<6} {'measured':>12} {'tolerance':>12}  time"]
        for c in self.checks:
            lines.append(
                f"{c.name:<26} {c.status.upper():<6} {c.measured:>12.3e} "
                f"{c.tolerance:>12.3e}  {c.seconds:.2f}s"
            )
        return "\n".join(lines)


def duality_gap(
    problem: ControlProblem, gas: GasModel, grid: Grid, gram, nmax, accel, threads: int = 1
):
    """max_ij relative gap between int_0^T v_i(t, alpha_j) dt and G_ij.

    The linear response v_i to the i-th forcing is computed by the PDE
    solver, sampled at the source points by monotone-cubic interpolation and
    integrated by the trapezoid rule; the Gram side comes from spectral
    quadrature, so the two routes share no code.  The d independent runs may
    share a thread pool; rows are assembled in index order.
    """
    cutoff = Cutoff(problem.omega[0], problem.omega[1], problem.eta)
    target = np.asarray(problem.alphas)

    def response_row(a):
        fld = AdjointField(a, gas.c, problem.T, nmax=nmax, accel=accel)
        table = forcing_batch(fld, cutoff, grid.t_mid, grid.x_nodes)
        hist, _ = solve_linearized(table, None, grid, gas)
        v_at_alpha = PchipInterpolator(grid.x_nodes, hist.values, axis=1)(target)
        return np.trapezoid(v_at_alpha, dx=grid.dt, axis=0)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(response_row, problem.alphas))
    else:
        rows = [response_row(a) for a in problem.alphas]
    entries = np.vstack(rows)
    worst = float(np.max(np.abs(entries - gram.matrix) / np.abs(gram.matrix)))
    return worst, entries


def linearization_ladder(op: ShootingOperator, reference, eps_values):
    """E(eps) = max_ij |(theta_j(eps e_i) - alpha_j)/eps - ref_ij| per eps.

    ``reference`` is the (d, d) response matrix the quotients converge to.
    """
    reference = np.asarray(reference)
    alphas = np.asarray(op.problem.alphas)
    d = op.problem.d
    errors = []
    for eps in eps_values:
        worst = 0.0
        for i in range(d):
            amp = np.zeros(d)
            amp[i] = eps
            quotient = (op.theta(amp) - alphas) / eps
            worst = max(worst, float(np.max(np.abs(quotient - reference[i]))))
        errors.append(worst)
    return errors


def identity_suite(
    problem: ControlProblem,
    gas: GasModel,
    grid: Grid,
    nmax: int = 2048,
    accel: bool = True,
    quad_panels: int = 16,
    quad_nodes: int = 8,
    trig_tuples: int = 1000,
    trig_dmax: int = 6,
    seed: int = 12345,
    eps_ladder=(1e-2, 5e-3, 2.5e-3),
    duality_rtol: float = 0.02,
    ladder_ratio: float = 0.7,
    trig_rtol: float = 1e-10,
    threads: int = 1,
    only=None,
) -> VerifyReport:
    """Run the verification battery; failures are reported, never raised."""
    checks = []
    selected = None if only is None else {s.strip() for s in only}

    def wanted(name):
        return selected is None or name in selected

    if wanted("trig"):
        t0 = time.perf_counter()
        worst, cases = trig_battery(range(1, trig_dmax + 1), trig_tuples, seed)
        checks.append(
            CheckResult(
                "trig",
                "pass" if worst <= trig_rtol else "fail",
                worst,
                trig_rtol,
                {"cases": cases, "dims": list(range(1, trig_dmax + 1))},
                time.perf_counter() - t0,
            )
        )

    if wanted("chebyshev"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(seed + 1)
        worst = 0.0
        for i in range(1, 13):
            coeffs = chebyshev_S(i)
            theta = rng.uniform(0.0, np.pi, size=32)
            lhs = np.sin(i * theta)
            rhs = np.polynomial.polynomial.polyval(np.cos(theta), coeffs) * np.sin(theta)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        checks.append(
            CheckResult(
                "chebyshev",
                "pass" if worst <= 1e-12 else "fail",
                worst,
                1e-12,
                {"max_index": 12},
                time.perf_counter() - t0,
            )
        )

    gram = None
    gram_failed = None
    need_gram = any(wanted(n) for n in ("gram", "duality", "linearization"))
    if need_gram:
        t0 = time.perf_counter()
        try:
            gram = gram_matrix(
                problem, gas, nmax=nmax, panels=quad_panels, nodes=quad_nodes, accel=accel
            )
        except DegenerateGram as exc:
            gram_failed = str(exc)

    if wanted("gram"):
        if gram is None:
            checks.append(
                CheckResult("gram", "skip", 0.0, 0.0, {"reason": gram_failed}, 0.0)
            )
        else:
            asym = float(np.max(np.abs(gram.matrix - gram.matrix.T)))
            cs_slack = 0.0
            for i in range(problem.d):
                for j in range(i + 1, problem.d):
                    cs_slack = max(
                        cs_slack,
                        float(
                            gram.matrix[i, j] ** 2
                            - gram.matrix[i, i] * gram.matrix[j, j]
                        ),
                    )
            ok = gram.min_eigenvalue > 0 and asym <= 1e-12 and cs_slack <= 1e-12
            checks.append(
                CheckResult(
                    "gram",
                    "pass" if ok else "fail",
                    max(asym, cs_slack),
                    1e-12,
                    {
                        "min_eigenvalue": gram.min_eigenvalue,
                        "condition_number": gram.condition_number,
                        "det": gram.det,
                    },
                    time.perf_counter() - t0,
                )
            )

    pde_entries = None
    if wanted("duality") or wanted("linearization"):
        if gram is not None:
            t0 = time.perf_counter()
            worst, pde_entries = duality_gap(
                problem, gas, grid, gram, nmax, accel, threads=threads
            )
            duality_seconds = time.perf_counter() - t0

    if wanted("duality"):
        if gram is None:
            checks.append(
                CheckResult("duality", "skip", 0.0, duality_rtol, {"reason": gram_failed}, 0.0)
            )
        else:
            checks.append(
                CheckResult(
                    "duality",
                    "pass" if worst <= duality_rtol else "fail",
                    worst,
                    duality_rtol,
                    {"pde_entries": pde_entries.tolist(), "M": grid.M},
                    duality_seconds,
                )
            )

    if wanted("linearization"):
        if gram is None:
            checks.append(
                CheckResult(
                    "linearization", "skip", 0.0, ladder_ratio, {"reason": gram_failed}, 0.0
                )
            )
        else:
            # reference is the discrete linear response: the remainder then
            # measures pure nonlinearity, independent of the discretization
            # gap that the duality check quantifies
            t0 = time.perf_counter()
            op = ShootingOperator(problem, gas, grid, nmax=nmax, accel=accel)
            errors = linearization_ladder(op, pde_entries, eps_ladder)
            ratios = [errors[k + 1] / errors[k] for k in range(len(errors) - 1)]
            worst = max(ratios) if ratios else 0.0
            checks.append(
                CheckResult(
                    "linearization",
                    "pass" if worst <= ladder_ratio else "fail",
                    worst,
                    ladder_ratio,
                    {"eps": list(eps_ladder), "errors": errors},
                    time.perf_counter() - t0,
                )
            )

    return VerifyReport(checks)
