"""Eigenfunction-expansion propagator for the transformed problem.

H = P^2 + V is discretized by second differences on the uniform y grid with
Dirichlet-zero truncation, the transformed initial condition exp(-f) C0 is
projected onto the lowest modes, and the concentration is reassembled as

    C(y, t) = sum_n a_n exp(f(y)) exp(-E_n t) psi_n(y).
"""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConvergenceFailureError, GridMismatchError, GridTooSmallError
from .fdsolver import ConcentrationField

DEFAULT_PARSEVAL_TAIL = 1e-10
DEFAULT_MODE_CAP = 256


@dataclass(frozen=True)
class SpectralBasis:
    """Lowest eigenpairs of H on the truncation interval.

    modes[n] samples psi_n on y_grid (zero at both endpoints) with discrete
    trapezoid normalization sum psi_m psi_n dy = delta_mn.
    """

    y_grid: np.ndarray
    energies: np.ndarray
    modes: np.ndarray
    n_modes: int

    @property
    def dy(self):
        return float((self.y_grid[-1] - self.y_grid[0]) / (self.y_grid.size - 1))


def build_basis(smap, n_modes, bc="dirichlet_zero"):
    """Diagonalize the symmetric tridiagonal -psi'' + V psi on the map grid."""
    if bc != "dirichlet_zero":
        raise ValueError("only dirichlet_zero truncation is supported")
    y = smap.y_grid
    n = y.size
    if n_modes < 1 or n_modes > n - 2:
        raise GridTooSmallError(f"n_modes must be in [1, {n - 2}] for this grid")
    dy = (y[-1] - y[0]) / (n - 1)
    if np.any(np.abs(np.diff(y) - dy) > 1e-9 * abs(dy)):
        raise GridMismatchError("map grid must be uniform in y")
    diag = 2.0 / dy**2 + smap.V[1:-1]
    off = np.full(n - 3, -1.0 / dy**2)
    try:
        energies, vecs = eigh_tridiagonal(
            diag, off, select="i", select_range=(0, n_modes - 1)
        )
    except LinAlgError as exc:
        raise ConvergenceFailureError(str(exc)) from exc
    modes = np.zeros((n_modes, n))
    modes[:, 1:-1] = vecs.T / np.sqrt(dy)
    for k in range(n_modes):
        lead = modes[k, np.argmax(np.abs(modes[k]))]
        if lead < 0:
            modes[k] = -modes[k]
    return SpectralBasis(y_grid=y, energies=energies, modes=modes, n_modes=n_modes)


def _trapezoid_weights(y):
    w = np.full(y.size, (y[-1] - y[0]) / (y.size - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def project_initial(basis, smap, c0):
    """Coefficients a_n = <psi_n, exp(-f) C0> by trapezoid quadrature.

    C0 is resampled onto the map's x locations by cubic interpolation when
    the grids differ; the map must not extend beyond the sampled data.
    """
    x_pts = smap.x_of_y
    cx = c0.x_grid
    if cx.size == x_pts.size and np.allclose(cx, x_pts, rtol=0.0, atol=1e-12 * (cx[-1] - cx[0])):
        vals = c0.values
    else:
        span = cx[-1] - cx[0]
        if x_pts[0] < cx[0] - 1e-12 * span or x_pts[-1] > cx[-1] + 1e-12 * span:
            raise GridMismatchError("map extends beyond the sampled initial condition")
        vals = CubicSpline(cx, c0.values)(np.clip(x_pts, cx[0], cx[-1]))
    phi0 = np.exp(-smap.f) * vals
    w = _trapezoid_weights(basis.y_grid)
    return basis.modes @ (w * phi0)


def choose_n_modes(coeffs, tail=DEFAULT_PARSEVAL_TAIL, cap=DEFAULT_MODE_CAP):
    """Smallest mode count whose Parseval tail falls below the threshold."""
    sq = np.asarray(coeffs, dtype=float) ** 2
    total = np.concatenate((np.cumsum(sq[::-1])[::-1], [0.0]))
    for m in range(1, sq.size + 1):
        if total[m] < tail:
            return min(m, cap)
    return min(sq.size, cap)


def propagate(basis, smap, coeffs, t, x_eval=None):
    """Evolve the expansion to time t and map back to the x grid.

    Uses the leading len(coeffs) modes.  The natural output grid is the
    map's x locations; pass x_eval to resample onto another uniform grid.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size > basis.n_modes:
        raise GridMismatchError("more coefficients than basis modes")
    amp = coeffs * np.exp(-basis.energies[: coeffs.size] * t)
    c_y = np.exp(smap.f) * (amp @ basis.modes[: coeffs.size])
    x_nat = smap.x_of_y
    if x_eval is None:
        return ConcentrationField(x_nat, c_y, float(t))
    x_eval = np.asarray(x_eval, dtype=float)
    span = x_nat[-1] - x_nat[0]
    if x_eval[0] < x_nat[0] - 1e-12 * span or x_eval[-1] > x_nat[-1] + 1e-12 * span:
        raise GridMismatchError("x_eval extends beyond the map range")
    vals = CubicSpline(x_nat, c_y)(np.clip(x_eval, x_nat[0], x_nat[-1]))
    return ConcentrationField(x_eval, vals, float(t))
