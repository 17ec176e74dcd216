"""Change of variable to Schrödinger form and related operators.

For invertible y(x) = integral_{x0}^{x} dz / sqrt(D(z)) the transport
equation becomes -dC/dt = H_f C with H_f = exp(f) (P^2 + V) exp(-f) in the
transformed coordinate.  The drift exponent has the closed form

    f = (1/2) ln A - (1/4) ln D + const,

fixed here by f = 0 at y = 0, and the effective potential is evaluated
pointwise from

    V(y) = (df/dy)^2 - d2f/dy2 + d/dx ( D d(ln A)/dx )

with the x-derivative taken at x(y).  V is stored in the unit-diffusion
(y) convention; for constant D the x-convention potential is V / d0.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    GridTooSmallError,
    OutOfDomainError,
    OutOfRangeError,
    QuadratureFailureError,
)
from .fdsolver import ConcentrationField

TRANSFORM_ABS_TOL = 1e-10
_QUAD_LIMIT = 47620          # ~1e6 integrand evaluations at 21 per panel
_TABLE_QUAD_LIMIT = 200      # per-interval table refinement
_FD_REL_STEP = 1e-5          # central-difference step for d2f/dy2 (non-constant D)


def _quad(fn, a, b, epsabs=TRANSFORM_ABS_TOL, limit=_QUAD_LIMIT):
    out = quad(fn, a, b, epsabs=epsabs, epsrel=0.0, limit=limit, full_output=True)
    if len(out) > 3:
        raise QuadratureFailureError(str(out[3]).strip())
    return out[0]


def transform_coordinate(model, profile, x, x0):
    """y(x) = integral_{x0}^{x} dz / sqrt(D(z)), by adaptive quadrature."""
    profile.require_in_domain(x0)
    profile.require_in_domain(x)

    def integrand(z):
        return 1.0 / np.sqrt(float(model.value(profile, z)))

    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return _quad(integrand, float(x0), float(arr))
    return np.array([_quad(integrand, float(x0), xi) for xi in arr.ravel()]).reshape(arr.shape)


@dataclass(frozen=True)
class SchrodingerMap:
    """Transformed problem on a uniform y grid.

    x_of_y inverts the change of variable on the grid; f and V are the drift
    exponent and effective potential sampled at the same points.
    """

    y_grid: np.ndarray
    x_of_y: np.ndarray
    f: np.ndarray
    V: np.ndarray
    x0: float
    d0: float = None
    meta: dict = field(default_factory=dict)
    x_table: np.ndarray = None
    y_table: np.ndarray = None
    profile: object = None
    model: object = None

    def potential_x(self):
        """Rescale V to the x-convention H = d0 (P^2 + V); constant D only."""
        if self.d0 is None:
            raise ValueError("x-convention potential requires constant diffusion")
        return self.V / self.d0

    def to_csv(self, path):
        lines = ["y,x,f,V"]
        for row in zip(self.y_grid, self.x_of_y, self.f, self.V):
            lines.append(",".join(f"{v:.17g}" for v in row))
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")


def _drift_slope(model, profile, x):
    """df/dy at x: -(1/2) sqrt(D) d/dx ln(sqrt(D)/A)."""
    a, a1, _ = profile.area_derivs(x)
    d = model.value(profile, x)
    d1 = model.derivative(profile, x)
    return -0.5 * np.sqrt(d) * (0.5 * d1 / d - a1 / a)


def build_schrodinger_map(model, profile, x0, n_points, x_lo=None, x_hi=None):
    """Construct the map on [x_lo, x_hi] (defaults to the profile domain)."""
    lo, hi = profile.domain
    x_lo = lo if x_lo is None else float(x_lo)
    x_hi = hi if x_hi is None else float(x_hi)
    if not (np.isfinite(x_lo) and np.isfinite(x_hi)) or x_hi <= x_lo:
        raise OutOfDomainError("need finite truncation bounds x_lo < x_hi")
    if n_points < 3:
        raise GridTooSmallError("n_points must be at least 3")
    profile.require_in_domain([x_lo, x_hi])
    if not (x_lo <= x0 <= x_hi):
        raise OutOfDomainError("x0 must lie within the truncation bounds")

    def integrand(z):
        return 1.0 / np.sqrt(float(model.value(profile, z)))

    n_fine = max(4 * (n_points - 1), 2000)
    x_table = np.linspace(x_lo, x_hi, n_fine + 1)
    pieces = [
        _quad(integrand, x_table[k], x_table[k + 1], epsabs=1e-13, limit=_TABLE_QUAD_LIMIT)
        for k in range(n_fine)
    ]
    y_rel = np.concatenate(([0.0], np.cumsum(pieces)))
    shift = _quad(integrand, x_lo, float(x0), epsabs=1e-13, limit=_TABLE_QUAD_LIMIT)
    y_table = y_rel - shift
    if np.any(np.diff(y_table) <= 0):
        raise QuadratureFailureError("transform is not strictly increasing")

    y_grid = np.linspace(y_table[0], y_table[-1], n_points)
    inverse = PchipInterpolator(y_table, x_table)
    x_of_y = inverse(y_grid)
    x_of_y[0], x_of_y[-1] = x_lo, x_hi

    a, a1, a2 = profile.area_derivs(x_of_y)
    d = np.asarray(model.value(profile, x_of_y), dtype=float)
    d1 = np.asarray(model.derivative(profile, x_of_y), dtype=float)

    f = 0.5 * np.log(a) - 0.25 * np.log(d)
    a0_, _, _ = profile.area_derivs(x0)
    d0_ = float(model.value(profile, x0))
    f = f - (0.5 * np.log(a0_) - 0.25 * np.log(d0_))

    g = -0.5 * np.sqrt(d) * (0.5 * d1 / d - a1 / a)
    if model.kind == "constant":
        fpp = 0.5 * d * (a2 / a - (a1 / a) ** 2)
    else:
        h = _FD_REL_STEP * np.maximum(1.0, np.abs(x_of_y))
        lo_d, hi_d = profile.domain
        if np.isfinite(lo_d):
            h = np.minimum(h, (x_of_y - lo_d) / 2.0)
        if np.isfinite(hi_d):
            h = np.minimum(h, (hi_d - x_of_y) / 2.0)
        fpp = np.sqrt(d) * (
            _drift_slope(model, profile, x_of_y + h)
            - _drift_slope(model, profile, x_of_y - h)
        ) / (2.0 * h)
    last = d1 * (a1 / a) + d * (a2 / a - (a1 / a) ** 2)
    v = g * g - fpp + last

    return SchrodingerMap(
        y_grid=y_grid,
        x_of_y=x_of_y,
        f=f,
        V=v,
        x0=float(x0),
        d0=model.d0 if model.kind == "constant" else None,
        meta={"profile": profile.meta(), "diffusion": model.meta(), "n_points": n_points},
        x_table=x_table,
        y_table=y_table,
        profile=profile,
        model=model,
    )


def invert_coordinate(smap, y):
    """x with |y(x) - y| <= 1e-8, by bracketed root finding on the cached table."""
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).astype(float)
    yt, xt = smap.y_table, smap.x_table
    model, profile = smap.model, smap.profile

    def integrand(z):
        return 1.0 / np.sqrt(float(model.value(profile, z)))

    out = np.empty_like(flat)
    for i, yi in enumerate(flat):
        if yi < yt[0] or yi > yt[-1]:
            raise OutOfRangeError(f"y={yi:g} outside map range [{yt[0]:g}, {yt[-1]:g}]")
        j = int(np.searchsorted(yt, yi)) - 1
        j = min(max(j, 0), xt.size - 2)

        def local(xv, _j=j, _yi=yi):
            return yt[_j] + _quad(
                integrand, xt[_j], xv, epsabs=1e-13, limit=_TABLE_QUAD_LIMIT
            ) - _yi

        # bracketed root; table cells are narrow so this converges fast
        fa, fb = local(xt[j]), local(xt[j + 1])
        if fa == 0.0:
            out[i] = xt[j]
        elif fb == 0.0:
            out[i] = xt[j + 1]
        else:
            out[i] = brentq(local, xt[j], xt[j + 1], xtol=1e-13, rtol=8.9e-16)
    return out[0] if scalar else out.reshape(arr.shape)


@dataclass(frozen=True)
class SusyPair:
    """Partner potentials W^2 + W' and W^2 - W' from a superpotential sample."""

    x: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    energy_scale: float


def susy_partner_potentials(x, w, energy_scale=1.0):
    """Partner potentials from W sampled on a uniform grid (central differences).

    The derivative uses second-order one-sided stencils at the ends, so
    v_plus - v_minus = 2 W' holds exactly at every sample.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 1 or x.shape != w.shape or x.size < 3:
        raise GridTooSmallError("need at least 3 samples of W on a 1-D grid")
    dx = np.diff(x)
    if np.any(np.abs(dx - dx.mean()) > 1e-9 * abs(dx.mean())):
        raise ValueError("W must be sampled on a uniform grid")
    if energy_scale <= 0:
        raise ValueError("energy_scale must be positive")
    h = dx.mean()
    wp = np.empty_like(w)
    wp[1:-1] = (w[2:] - w[:-2]) / (2.0 * h)
    wp[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h)
    wp[-1] = (3.0 * w[-1] - 4.0 * w[-2] + w[-3]) / (2.0 * h)
    return SusyPair(x=x, v_plus=w * w + wp, v_minus=w * w - wp, energy_scale=float(energy_scale))


def apply_fj_generator(model, profile, c):
    """Discrete right-hand side d/dx [ D A d/dx (C/A) ] on the field's grid.

    Second-order flux form at interior nodes; one-sided second-order stencils
    at the two end nodes.  Used for residual checks of closed-form solutions,
    so the grid must lie strictly inside the profile domain.
    """
    x = c.x_grid
    if x.size < 4:
        raise GridTooSmallError("generator needs at least 4 nodes")
    profile.require_in_domain(x)
    dx = c.dx
    mids = 0.5 * (x[:-1] + x[1:])
    g = np.asarray(model.value(profile, mids)) * np.asarray(profile.area(mids))
    u = c.values / np.asarray(profile.area(x))
    flux = g * np.diff(u) / dx
    out = np.empty_like(c.values)
    out[1:-1] = np.diff(flux) / dx
    out[0] = (-2.0 * flux[0] + 3.0 * flux[1] - flux[2]) / dx
    out[-1] = (2.0 * flux[-1] - 3.0 * flux[-2] + flux[-3]) / dx
    return ConcentrationField(x, out, c.time)
