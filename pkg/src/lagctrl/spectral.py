"""Eigen-structure of the linearized acoustic-viscous operator, mode by mode.

Fourier mode n of the linearized system evolves under the 2x2 block

    A_n = [[0, c*n], [-c*n, -n**2]]

whose eigenvalues split into an oscillatory pair (n < 2c), a double root
at the resonance n = 2c, and a real overdamped pair (n > 2c).  The adjoint
control-field series is driven by the scalar "mode kernel"

    k_n(tau) = (exp(mu_n*tau) - exp(lambda_n*tau)) / (mu_n - lambda_n),

the divided difference of exp over the spectrum; at resonance it degenerates
to the confluent limit tau*exp(-n**2*tau/2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Below this, the two-exponential difference loses too many digits and the
# kernel switches to a truncated divided-difference expansion.
GAP_SAFEGUARD = 1e-6

# expm1-based evaluation overflows once gap*tau is huge; the plain difference
# is cancellation-free there anyway.
_EXPM1_CUTOFF = 50.0


class Branch(enum.Enum):
    OSCILLATORY = "oscillatory"
    RESONANT = "resonant"
    OVERDAMPED = "overdamped"


@dataclass(frozen=True)
class ModeEigen:
    """Eigenvalue pair of the n-th mode block for sound speed c.

    ``lam`` and ``mu`` satisfy lam + mu = -n**2 and lam*mu = (c*n)**2.
    On the oscillatory branch they are conjugate; ``decay`` and ``freq``
    expose the real decomposition so downstream series stay in real
    arithmetic.
    """

    n: int
    c: float
    branch: Branch
    lam: complex
    mu: complex

    @property
    def decay(self) -> float:
        return self.lam.real

    @property
    def freq(self) -> float:
        """Oscillation frequency; zero off the oscillatory branch."""
        return self.mu.imag

    @property
    def gap(self) -> complex:
        return self.mu - self.lam


def eigen_pair(n: int, c: float) -> ModeEigen:
    """Eigenvalues of the n-th mode block, classified by branch."""
    if n < 1 or int(n) != n:
        raise ValueError(f"mode index must be a positive integer, got {n}")
    if c <= 0:
        raise ValueError(f"sound speed must be positive, got {c}")
    n = int(n)
    half = 0.5 * n * n
    if n == 2.0 * c:
        lam = complex(-half)
        return ModeEigen(n, c, Branch.RESONANT, lam, lam)
    if n < 2.0 * c:
        omega = n * np.sqrt(c * c - 0.25 * n * n)
        return ModeEigen(
            n, c, Branch.OSCILLATORY, complex(-half, -omega), complex(-half, omega)
        )
    # Overdamped: compute mu without subtractive cancellation for n >> 2c,
    # then recover lam from the exact trace.
    disc = 1.0 - 4.0 * c * c / (n * n)
    mu = -2.0 * c * c / (1.0 + np.sqrt(disc))
    lam = -float(n * n) - mu
    return ModeEigen(n, c, Branch.OVERDAMPED, complex(lam), complex(mu))


def _kernel_overdamped(lam: float, gap: float, tau: float) -> float:
    z = gap * tau
    if z < GAP_SAFEGUARD:
        return tau * np.exp(lam * tau) * (1.0 + z / 2.0 + z * z / 6.0)
    if z <= _EXPM1_CUTOFF:
        return tau * np.exp(lam * tau) * np.expm1(z) / z
    return (np.exp((lam + gap) * tau) - np.exp(lam * tau)) / gap


def mode_kernel(n: int, c: float, tau: float) -> float:
    """Divided-difference kernel k_n(tau); real on every branch.

    Oscillatory modes use exp(-n**2*tau/2)*sin(omega*tau)/omega, the
    resonant mode the confluent limit tau*exp(-n**2*tau/2), and overdamped
    modes a cancellation-safe evaluation of the two-exponential form.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    eig = eigen_pair(n, c)
    if eig.branch is Branch.RESONANT:
        return tau * np.exp(eig.decay * tau)
    if eig.branch is Branch.OSCILLATORY:
        # tau*sinc pulls the omega -> 0 limit in smoothly.
        return np.exp(eig.decay * tau) * tau * np.sinc(eig.freq * tau / np.pi)
    return _kernel_overdamped(eig.lam.real, eig.gap.real, tau)


def mode_kernel_table(nmax: int, c: float, taus) -> np.ndarray:
    """k_n(tau) for n = 1..nmax on a vector of lags; shape (len(taus), nmax).

    Vectorized counterpart of :func:`mode_kernel` used to assemble the
    adjoint series over quadrature and solver grids.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(taus < 0):
        raise ValueError("all lags must be nonnegative")
    n = np.arange(1, nmax + 1, dtype=float)
    half = 0.5 * n * n
    out = np.empty((taus.size, nmax))

    osc = n < 2.0 * c
    res = n == 2.0 * c
    over = ~(osc | res)
    t = taus[:, None]

    if np.any(osc):
        no = n[osc]
        omega = no * np.sqrt(c * c - 0.25 * no * no)
        out[:, osc] = np.exp(-half[osc] * t) * t * np.sinc(omega * t / np.pi)
    if np.any(res):
        out[:, res] = t * np.exp(-half[res] * t)
    if np.any(over):
        no = n[over]
        disc = 1.0 - 4.0 * c * c / (no * no)
        mu = -2.0 * c * c / (1.0 + np.sqrt(disc))
        lam = -no * no - mu
        gap = mu - lam
        z = gap * t
        small = z < GAP_SAFEGUARD
        mid = (z >= GAP_SAFEGUARD) & (z <= _EXPM1_CUTOFF)
        elam = np.exp(lam * t)
        vals = np.where(small, t * elam * (1.0 + z / 2.0 + z * z / 6.0), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(mid, t * elam * np.expm1(np.minimum(z, _EXPM1_CUTOFF)) / np.where(z == 0, 1.0, z), vals)
        big = z > _EXPM1_CUTOFF
        if np.any(big):
            emu = np.exp(mu * t)
            vals = np.where(big, (emu - elam) / gap, vals)
        out[:, over] = vals
    return out


def mode_j_table(nmax: int, c: float, taus) -> np.ndarray:
    """Time integral j_n(tau) = int_0^tau k_n(s) ds, shape (len(taus), nmax).

    Drives the companion density-like component of the adjoint pair; only
    needed for residual diagnostics, so the near-resonant confluent case is
    approximated by the double-root formula (relative error O(gap*tau)).
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    n = np.arange(1, nmax + 1, dtype=float)
    half = 0.5 * n * n
    out = np.empty((taus.size, nmax))
    t = taus[:, None]

    osc = n < 2.0 * c
    res = n == 2.0 * c
    over = ~(osc | res)

    if np.any(osc):
        no = n[osc]
        m = -half[osc]
        omega = no * np.sqrt(c * c - 0.25 * no * no)
        emt = np.exp(m * t)
        num = m * emt * np.sin(omega * t) - omega * (emt * np.cos(omega * t) - 1.0)
        out[:, osc] = num / (omega * (c * c * no * no))
    if np.any(res):
        m = -half[res]
        out[:, res] = (np.exp(m * t) * (m * t - 1.0) + 1.0) / (m * m)
    if np.any(over):
        no = n[over]
        disc = 1.0 - 4.0 * c * c / (no * no)
        mu = -2.0 * c * c / (1.0 + np.sqrt(disc))
        lam = -no * no - mu
        gap = mu - lam
        z = gap * t
        with np.errstate(over="ignore"):
            gmu = np.expm1(mu * t) / mu
            glam = np.expm1(lam * t) / lam
        safe = (gmu - glam) / gap
        m = 0.5 * (lam + mu)
        confluent = (np.exp(m * t) * (m * t - 1.0) + 1.0) / (m * m)
        out[:, over] = np.where(np.abs(z) < GAP_SAFEGUARD, confluent, safe)
    return out


def semigroup_block(n: int, c: float, t: float) -> np.ndarray:
    """2x2 real matrix of the mode-n solution block at time t.

    Equals expm(-A_n*t); satisfies S(0) = I and S(s+t) = S(s)S(t).  Values
    grow like exp(n**2*t/2) for t > 0, so this is meant for moderate n*t
    (the series assembly never materializes these blocks).
    """
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    eig = eigen_pair(n, c)
    A = np.array([[0.0, c * n], [-c * n, -float(n * n)]])
    m = -0.5 * n * n
    B = A - m * np.eye(2)
    s = -t
    if eig.branch is Branch.OSCILLATORY:
        w = eig.freq
        phi0 = np.cos(w * s)
        phi1 = s * np.sinc(w * s / np.pi)
    elif eig.branch is Branch.RESONANT:
        phi0 = 1.0
        phi1 = s
    else:
        h = 0.5 * eig.gap.real
        phi0 = np.cosh(h * s)
        phi1 = s if h == 0.0 else np.sinh(h * s) / h
    return np.exp(m * s) * (phi0 * np.eye(2) + phi1 * B)
