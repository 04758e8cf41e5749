"""Gram matrix of the windowed control fields and the linear predictor.

G_ij = int_0^T int_omega chi * xi_i * xi_j dx dt is both the Gram matrix of
the windowed fields in L2((0,T) x omega) and the Jacobian at zero amplitude
of the endpoint map, so its determinant decides solvability of the shooting
problem and G^{-1}(beta - alpha) is the first-order amplitude guess.
Entries carry the (length^2 * time) units of that inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .adjoint import AdjointField, Cutoff, chi_eval, xi_batch


class DegenerateGram(RuntimeError):
    """Gram matrix numerically singular; control synthesis ill-posed."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class GramReport:
    """d x d Gram matrix with determinant and conditioning diagnostics."""

    d: int
    matrix: np.ndarray
    det: float
    min_eigenvalue: float
    max_eigenvalue: float
    condition_number: float
    quad_panels: int
    quad_nodes: int
    nmax: int

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "det": self.det,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "condition_number": self.condition_number,
            "quad_panels": self.quad_panels,
            "quad_nodes": self.quad_nodes,
            "nmax": self.nmax,
        }


def gauss_panels(a: float, b: float, panels: int, nodes: int):
    """Composite Gauss-Legendre rule on [a, b]: (points, weights)."""
    if b <= a:
        raise ValueError(f"empty integration interval [{a}, {b}]")
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def gram_from_samples(xi_list, wt, wx, chi_vals) -> np.ndarray:
    """Assemble sum_kl wt_k * wx_l * chi_l * xi_i[k,l] * xi_j[k,l].

    Kept separate so linearity checks (e.g. scaling chi) can reuse the
    exact assembly path.
    """
    weights = wt[:, None] * (wx * chi_vals)[None, :]
    d = len(xi_list)
    G = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            G[i, j] = G[j, i] = float(np.sum(weights * xi_list[i] * xi_list[j]))
    return G


def gram_matrix(
    problem,
    gas,
    nmax: int = 2048,
    panels: int = 16,
    nodes: int = 8,
    accel: bool = True,
    degeneracy_rtol: float = 1e-12,
) -> GramReport:
    """Quadrature of the Gram matrix over (0, T) x omega.

    Composite Gauss-Legendre in both variables; the panel count guards the
    mild boundary layer of the kernels near t = T.  Raises DegenerateGram
    (with the report attached) when the spectrum is numerically singular.
    """
    t_pts, t_wts = gauss_panels(0.0, problem.T, panels, nodes)
    x_pts, x_wts = gauss_panels(problem.omega[0], problem.omega[1], panels, nodes)
    cutoff = Cutoff(problem.omega[0], problem.omega[1], problem.eta)
    chi_vals = chi_eval(cutoff, x_pts)
    xi_list = [
        xi_batch(AdjointField(a, gas.c, problem.T, nmax=nmax, accel=accel), t_pts, x_pts)
        for a in problem.alphas
    ]
    G = gram_from_samples(xi_list, t_wts, x_wts, chi_vals)
    G = 0.5 * (G + G.T)  # scrub quadrature asymmetry before det/eig

    eigvals = np.linalg.eigvalsh(G)
    lo, hi = float(eigvals[0]), float(eigvals[-1])
    report = GramReport(
        d=problem.d,
        matrix=G,
        det=float(np.linalg.det(G)),
        min_eigenvalue=lo,
        max_eigenvalue=hi,
        condition_number=float(hi / lo) if lo > 0 else float("inf"),
        quad_panels=panels,
        quad_nodes=nodes,
        nmax=nmax,
    )
    if lo <= degeneracy_rtol * max(hi, 0.0):
        raise DegenerateGram(
            f"Gram spectrum [{lo:.3e}, {hi:.3e}] under relative floor {degeneracy_rtol:g}",
            report=report,
        )
    return report


def linear_predict(problem, report: GramReport) -> np.ndarray:
    """First-order amplitudes: solve G * eps = beta - alpha (SPD solve)."""
    rhs = np.asarray(problem.betas) - np.asarray(problem.alphas)
    try:
        return cho_solve(cho_factor(report.matrix), rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded upstream
        raise DegenerateGram(f"Gram matrix not positive definite: {exc}", report=report)
