"""Independent oracles used by the test suite.

These deliberately avoid the library's evaluation paths: the series oracle
sums the raw two-exponential kernel in extended precision, and the block
oracle integrates the matrix exponential by adaptive quadrature.
"""

import json
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).parent / "fixtures"

XI_REFERENCE_POINTS = [
    (t, x)
    for t in (0.2, 0.6, 1.0, 1.4, 1.8)
    for x in (1.6, 1.8, 2.0, 2.2, 2.4)
]
XI_REFERENCE_N = 10**7


def _brute_kernel_chunk(n, c, tau):
    """Two-exponential kernel on a longdouble mode chunk for one lag."""
    disc = 1 - 4 * c * c / (n * n)
    kern = np.empty_like(n)
    osc = disc < 0
    if np.any(osc):
        no = n[osc]
        om = no * np.sqrt(c * c - no * no / 4)
        kern[osc] = np.exp(-no * no * tau / 2) * np.sin(om * tau) / om
    over = disc > 0
    if np.any(over):
        no = n[over]
        root = np.sqrt(disc[over])
        lam = -no * no / 2 - no * no / 2 * root
        mu = -no * no / 2 + no * no / 2 * root
        # exp(lam*tau) underflows even in longdouble once lam*tau < -11400
        low = lam * tau
        small = np.where(low > -11400.0, np.exp(np.maximum(low, -11400.0)), 0.0)
        kern[over] = (np.exp(mu * tau) - small) / (mu - lam)
    res = disc == 0
    if np.any(res):
        kern[res] = tau * np.exp(-n[res] * n[res] * tau / 2)
    return kern


def brute_force_xi_grid(alpha, c, T, ts, xs, nmax, chunk=10**6):
    """Raw truncated series in longdouble on a t/x grid, shared mode arrays."""
    ld = np.longdouble
    alpha, c, T = ld(alpha), ld(c), ld(T)
    ts = [ld(t) for t in ts]
    xs = [ld(x) for x in xs]
    totals = np.zeros((len(ts), len(xs)), dtype=ld)
    for start in range(1, nmax + 1, chunk):
        n = np.arange(start, min(start + chunk - 1, nmax) + 1, dtype=ld)
        sin_na = np.sin(n * alpha)
        sin_nx = [np.sin(n * x) for x in xs]
        for it, t in enumerate(ts):
            kern = _brute_kernel_chunk(n, c, T - t) * sin_na
            for ix in range(len(xs)):
                totals[it, ix] += np.sum(kern * sin_nx[ix])
    return (ld(2) / ld(np.pi) * totals).astype(float)


def brute_force_xi(alpha, c, T, t, x, nmax, chunk=10**6):
    """Single-point wrapper over the grid evaluator."""
    return float(brute_force_xi_grid(alpha, c, T, [t], [x], nmax, chunk)[0, 0])


def divided_difference_complex(n, c, tau):
    """Complex-arithmetic divided difference of exp over the mode spectrum."""
    import cmath

    disc = complex(1 - 4 * c * c / (n * n))
    root = cmath.sqrt(disc)
    lam = -n * n / 2 - n * n / 2 * root
    mu = -n * n / 2 + n * n / 2 * root
    if mu == lam:
        return (tau * cmath.exp(lam * tau)).real
    return ((cmath.exp(mu * tau) - cmath.exp(lam * tau)) / (mu - lam)).real


def kernel_block_oracle(n, c, tau):
    """integral_0^tau [expm(A_n s)]_22 ds by scipy expm + adaptive quadrature."""
    from scipy.integrate import quad
    from scipy.linalg import expm

    A = np.array([[0.0, c * n], [-c * n, -float(n * n)]])
    val, _ = quad(lambda s: expm(A * s)[1, 1], 0.0, tau, limit=200, epsabs=1e-14, epsrel=1e-14)
    return val


def xi_reference(alpha=0.3, c=1.3, T=2.0):
    """Load (or compute once and store) the extended-precision series values."""
    path = FIXTURES / "xi_reference.json"
    if path.exists():
        return json.loads(path.read_text())
    ts = sorted({t for t, _ in XI_REFERENCE_POINTS})
    xs = sorted({x for _, x in XI_REFERENCE_POINTS})
    grid = brute_force_xi_grid(alpha, c, T, ts, xs, XI_REFERENCE_N)
    data = {
        "alpha": alpha,
        "c": c,
        "T": T,
        "nmax": XI_REFERENCE_N,
        "dtype": str(np.longdouble),
        "points": [
            [t, x, float(grid[ts.index(t), xs.index(x)])]
            for (t, x) in XI_REFERENCE_POINTS
        ],
    }
    FIXTURES.mkdir(exist_ok=True)
    path.write_text(json.dumps(data, indent=1))
    return data
