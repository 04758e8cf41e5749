"""Adjoint control fields: truncated sine series and the smooth window.

Each source point alpha carries a backward-in-time field

    xi(t, x) = (2/pi) * sum_n sin(n*alpha) * k_n(T - t) * sin(n*x),

with k_n the spectral mode kernel.  The coefficients decay like
exp(-c**2*(T-t))/n**2, so an optional acceleration sums that leading tail
layer in closed form through

    sum_{n>=1} cos(n*y)/n**2 = y**2/4 - pi*y/2 + pi**2/6   (0 <= y <= 2*pi)

and leaves an O(1/n**4) remainder to the truncated sum.  The physical
forcing is xi windowed by a C-infinity cutoff supported in the control
interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import mode_j_table, mode_kernel, mode_kernel_table


@dataclass(frozen=True)
class Cutoff:
    """Smooth window: 0 outside (omega_lo, omega_hi), 1 on the eta-inset."""

    omega_lo: float
    omega_hi: float
    eta: float

    def __post_init__(self):
        if not (1.0 <= self.omega_lo < self.omega_hi <= np.pi):
            raise ValueError(
                f"control window ({self.omega_lo}, {self.omega_hi}) must lie in (1, pi)"
            )
        if self.eta <= 0 or 2.0 * self.eta >= self.omega_hi - self.omega_lo:
            raise ValueError(
                f"cutoff margin eta={self.eta} must satisfy 0 < 2*eta < window width"
            )

    @property
    def width(self) -> float:
        return self.omega_hi - self.omega_lo


def _smoothstep(s):
    """exp(-1/s) blend: exactly 0 for s <= 0, exactly 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    if np.any(mid):
        sm = s[mid]
        g0 = np.exp(-1.0 / sm)
        g1 = np.exp(-1.0 / (1.0 - sm))
        out[mid] = g0 / (g0 + g1)
    return out


def chi_eval(cutoff: Cutoff, x):
    """Window value(s) in [0, 1]; accepts scalars or arrays."""
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    val = _smoothstep((x - cutoff.omega_lo) / cutoff.eta) * _smoothstep(
        (cutoff.omega_hi - x) / cutoff.eta
    )
    return float(val[0]) if scalar else val


@dataclass(frozen=True)
class AdjointField:
    """Series data for the field attached to one source point.

    ``alpha`` may be anywhere in (0, pi) -- the series makes sense there and
    the alpha/x symmetry tests use it -- although control problems place
    sources in (0, 1).  ``nmax`` is the truncation order; ``accel`` turns the
    closed-form tail layer on.
    """

    alpha: float
    c: float
    T: float
    nmax: int = 2048
    accel: bool = True

    def __post_init__(self):
        if not (0.0 < self.alpha < np.pi):
            raise ValueError(f"source point {self.alpha} must lie in (0, pi)")
        if self.c <= 0:
            raise ValueError(f"sound speed must be positive, got {self.c}")
        if self.T <= 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.nmax < 1:
            raise ValueError(f"truncation order must be >= 1, got {self.nmax}")

    @property
    def resonant_mode(self):
        """The integer 2c when there is one within the truncation, else None."""
        n0 = 2.0 * self.c
        if n0 == np.floor(n0) and 1 <= int(n0) <= self.nmax:
            return int(n0)
        return None


def _cos_series_closed(y):
    # sum cos(n*y)/n**2 on [0, 2*pi]
    return y * y / 4.0 - np.pi * y / 2.0 + np.pi * np.pi / 6.0


def _sin_tail_closed(alpha, x):
    """sum_{n>=1} sin(n*alpha)*sin(n*x)/n**2 in closed form."""
    return 0.5 * (_cos_series_closed(np.abs(x - alpha)) - _cos_series_closed(x + alpha))


def _check_domain(field, t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0) or np.any(t > field.T):
        raise ValueError(f"times must lie in [0, {field.T}]")
    if np.any(x < 0) or np.any(x > np.pi):
        raise ValueError("positions must lie in [0, pi]")
    return t, x


def xi_eval(field: AdjointField, t: float, x: float) -> float:
    """Pointwise field value; plain mode sum, one term per n."""
    t, x = _check_domain(field, t, x)
    # Terminal condition and sine boundary values are exact zeros of the
    # series; enforce them exactly rather than through rounded sin(n*pi).
    if float(t) == field.T or float(x) in (0.0, float(np.pi)):
        return 0.0
    tau = field.T - float(t)
    n = np.arange(1, field.nmax + 1, dtype=float)
    kern = mode_kernel_table(field.nmax, field.c, [tau])[0]
    terms = np.sin(n * field.alpha) * kern * np.sin(n * float(x))
    if not field.accel:
        return (2.0 / np.pi) * float(np.sum(terms))
    damp = np.exp(-field.c**2 * tau)
    terms -= np.sin(n * field.alpha) * np.sin(n * float(x)) * damp / n**2
    closed = damp * _sin_tail_closed(field.alpha, float(x))
    return (2.0 / np.pi) * (float(np.sum(terms)) + closed)


def xi_batch(field: AdjointField, t_grid, x_grid) -> np.ndarray:
    """Field on a tensor grid, entry (k, l) = xi(t_k, x_l).

    Assembled as one (times x modes) @ (modes x positions) product, which is
    what makes the quadrature and forcing tables affordable at large nmax.
    """
    t_grid, x_grid = _check_domain(field, np.atleast_1d(t_grid), np.atleast_1d(x_grid))
    tau = field.T - t_grid
    n = np.arange(1, field.nmax + 1, dtype=float)
    coeff = mode_kernel_table(field.nmax, field.c, tau) * np.sin(n * field.alpha)
    sin_nx = np.sin(np.outer(n, x_grid))
    if not field.accel:
        out = (2.0 / np.pi) * (coeff @ sin_nx)
    else:
        damp = np.exp(-field.c**2 * tau)[:, None]
        coeff = coeff - damp * (np.sin(n * field.alpha) / n**2)
        closed = damp * _sin_tail_closed(field.alpha, x_grid)[None, :]
        out = (2.0 / np.pi) * (coeff @ sin_nx + closed)
    # Exact zeros: terminal condition (every kernel vanishes at tau = 0; the
    # accelerated closed tail would otherwise leave the truncation residue)
    # and the sine boundary at x = 0, pi.
    out[tau == 0.0, :] = 0.0
    out[:, (x_grid == 0.0) | (x_grid == float(np.pi))] = 0.0
    return out


def forcing_eval(field: AdjointField, cutoff: Cutoff, t: float, x: float) -> float:
    """Windowed field chi(x)*xi(t, x); identically zero outside the window."""
    return chi_eval(cutoff, x) * xi_eval(field, t, x)


def forcing_batch(field: AdjointField, cutoff: Cutoff, t_grid, x_grid) -> np.ndarray:
    """Forcing table chi(x_l)*xi(t_k, x_l) for solver and quadrature grids."""
    return xi_batch(field, t_grid, x_grid) * chi_eval(cutoff, np.atleast_1d(x_grid))[None, :]


def _sin_over_n_closed(y):
    # sum sin(n*y)/n, odd and 2*pi-periodic, (pi - y)/2 on (0, 2*pi)
    y = np.asarray(y, dtype=float)
    r = np.mod(y, 2.0 * np.pi)
    out = np.where(r == 0.0, 0.0, 0.5 * (np.pi - r))
    return out


def zeta_batch(field: AdjointField, t_grid, x_grid) -> np.ndarray:
    """Companion component of the adjoint pair on a tensor grid.

    zeta(t, x) = (2/pi) * sum_n n*sin(n*alpha)*j_n(T-t)*cos(n*x) with j_n the
    time-integrated mode kernel.  Used by the interior residual diagnostics;
    carries the same closed-form tail treatment as xi (the tail layer here is
    (1 - exp(-c**2*tau))/c**2 / n**2).
    """
    t_grid, x_grid = _check_domain(field, np.atleast_1d(t_grid), np.atleast_1d(x_grid))
    tau = field.T - t_grid
    n = np.arange(1, field.nmax + 1, dtype=float)
    jtab = mode_j_table(field.nmax, field.c, tau)
    coeff = jtab * (n * np.sin(n * field.alpha))
    cos_nx = np.cos(np.outer(n, x_grid))
    if not field.accel:
        return (2.0 / np.pi) * (coeff @ cos_nx)
    qinf = (-np.expm1(-field.c**2 * tau) / field.c**2)[:, None]
    coeff = coeff - qinf * (np.sin(n * field.alpha) / n)
    closed = qinf * (
        0.5
        * (
            _sin_over_n_closed(field.alpha + x_grid)
            + _sin_over_n_closed(field.alpha - x_grid)
        )
    )[None, :]
    return (2.0 / np.pi) * (coeff @ cos_nx + closed)
