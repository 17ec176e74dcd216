"""Channel cross-sections and diffusion models.

A channel of revolution is described by its cross-sectional area A(x) on an
open interval where A > 0.  The geometry enters the transport problem only
through A and its first two derivatives: the effective (entropic) potential
for constant diffusion is

    V(x) = (1/2) A''(x)/A(x) - (1/4) (d ln A / dx)^2

and the Reguera-Rubi position-dependent diffusion coefficient is

    D(x) = D0 / sqrt(1 + R'(x)^2),   R(x) = sqrt(A(x)/pi).
"""

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import NonPositiveAreaError, OutOfDomainError


def _scalar_in(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(values, scalar):
    return values[()] if scalar else values


class ChannelProfile:
    """Base class: supplies A, A', A'' and the open domain where A > 0."""

    family = "base"
    domain = (-np.inf, np.inf)

    def contains(self, x):
        lo, hi = self.domain
        arr, _ = _scalar_in(x)
        return (arr > lo) & (arr < hi)

    def require_in_domain(self, x):
        arr, _ = _scalar_in(x)
        ok = self.contains(arr)
        if not np.all(ok):
            bad = float(np.ravel(arr)[int(np.argmin(np.ravel(ok)))])
            lo, hi = self.domain
            raise OutOfDomainError(
                f"x={bad:g} outside {self.family} domain ({lo:g}, {hi:g})"
            )

    def area_derivs(self, x):
        raise NotImplementedError

    def area(self, x):
        return self.area_derivs(x)[0]

    def meta(self):
        return {"family": self.family}


class ConicalProfile(ChannelProfile):
    """Cone of revolution: A(x) = pi (1 + slope*x)^2.

    The apex at x = -1/slope is excluded; the domain is the half-line on
    which 1 + slope*x > 0 (either side, depending on the sign of slope).
    """

    family = "conical"

    def __init__(self, slope):
        if slope == 0.0:
            raise ValueError("slope must be nonzero; use ThroatProfile(0, ...) for a cylinder")
        self.slope = float(slope)
        apex = -1.0 / self.slope
        self.domain = (apex, np.inf) if self.slope > 0 else (-np.inf, apex)

    def area_derivs(self, x):
        arr, scalar = _scalar_in(x)
        u = 1.0 + self.slope * arr
        a = np.pi * u * u
        a1 = 2.0 * np.pi * self.slope * u
        a2 = np.full_like(arr, 2.0 * np.pi * self.slope**2)
        return _maybe_scalar(a, scalar), _maybe_scalar(a1, scalar), _maybe_scalar(a2, scalar)

    def meta(self):
        return {"family": self.family, "slope": self.slope}


class ThroatProfile(ChannelProfile):
    """Exponential throat: A(x) = exp(rate*x + offset), defined on all of R.

    rate = 0 gives a uniform cylinder.
    """

    family = "throat"

    def __init__(self, rate, offset=0.0):
        self.rate = float(rate)
        self.offset = float(offset)

    def area_derivs(self, x):
        arr, scalar = _scalar_in(x)
        a = np.exp(self.rate * arr + self.offset)
        return (
            _maybe_scalar(a, scalar),
            _maybe_scalar(self.rate * a, scalar),
            _maybe_scalar(self.rate**2 * a, scalar),
        )

    def meta(self):
        return {"family": self.family, "rate": self.rate, "offset": self.offset}


class SinusoidalProfile(ChannelProfile):
    """Periodically pinched channel: A(x) = amplitude * sin(wavenumber*x)^2.

    The area vanishes at multiples of pi/wavenumber, so a profile covers one
    open cell (cell*pi/w, (cell+1)*pi/w) between adjacent pinch points.
    """

    family = "sinusoidal"

    def __init__(self, amplitude, wavenumber, cell=0):
        if amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if wavenumber <= 0:
            raise ValueError("wavenumber must be positive")
        self.amplitude = float(amplitude)
        self.wavenumber = float(wavenumber)
        self.cell = int(cell)
        half = np.pi / self.wavenumber
        self.domain = (self.cell * half, (self.cell + 1) * half)

    def area_derivs(self, x):
        arr, scalar = _scalar_in(x)
        b, g = self.amplitude, self.wavenumber
        s = np.sin(g * arr)
        a = b * s * s
        a1 = b * g * np.sin(2.0 * g * arr)
        a2 = 2.0 * b * g * g * np.cos(2.0 * g * arr)
        return _maybe_scalar(a, scalar), _maybe_scalar(a1, scalar), _maybe_scalar(a2, scalar)

    def meta(self):
        return {
            "family": self.family,
            "amplitude": self.amplitude,
            "wavenumber": self.wavenumber,
            "cell": self.cell,
        }


class GaussianAreaProfile(ChannelProfile):
    """Log-quadratic area: A(x) = exp(curvature*x^2 + tilt*x + log_scale).

    Any sign of curvature is accepted here; positivity of curvature is only
    required by the eigenmode solution (see the analytic module).
    """

    family = "gaussian_area"

    def __init__(self, curvature, tilt=0.0, log_scale=0.0):
        self.curvature = float(curvature)
        self.tilt = float(tilt)
        self.log_scale = float(log_scale)

    def area_derivs(self, x):
        arr, scalar = _scalar_in(x)
        a_, b_ = self.curvature, self.tilt
        w = 2.0 * a_ * arr + b_
        area = np.exp(a_ * arr * arr + b_ * arr + self.log_scale)
        return (
            _maybe_scalar(area, scalar),
            _maybe_scalar(w * area, scalar),
            _maybe_scalar((w * w + 2.0 * a_) * area, scalar),
        )

    def meta(self):
        return {
            "family": self.family,
            "curvature": self.curvature,
            "tilt": self.tilt,
            "log_scale": self.log_scale,
        }


class TabulatedProfile(ChannelProfile):
    """Empirical geometry from (x, A) samples, interpolated monotone-cubically.

    Positivity is verified on a dense refinement at construction.  Second
    derivatives of the interpolant are only piecewise continuous, so they
    carry an accuracy warning in the metadata.
    """

    family = "tabulated"

    def __init__(self, x, area):
        x = np.asarray(x, dtype=float)
        area = np.asarray(area, dtype=float)
        if x.ndim != 1 or x.shape != area.shape or x.size < 4:
            raise ValueError("need matching 1-D x and area arrays with at least 4 samples")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x samples must be strictly increasing")
        if np.any(area <= 0):
            raise NonPositiveAreaError("tabulated area samples must be positive")
        self._spline = PchipInterpolator(x, area)
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        dense = np.linspace(x[0], x[-1], 10 * x.size)
        if np.min(self._spline(dense)) <= 0:
            raise NonPositiveAreaError("interpolated area dips to zero inside the table")
        self.domain = (float(x[0]), float(x[-1]))
        self._x = x

    def area_derivs(self, x):
        arr, scalar = _scalar_in(x)
        a = self._spline(arr)
        if np.any(a <= 0):
            raise NonPositiveAreaError("interpolated area is non-positive")
        return (
            _maybe_scalar(a, scalar),
            _maybe_scalar(self._d1(arr), scalar),
            _maybe_scalar(self._d2(arr), scalar),
        )

    def meta(self):
        return {
            "family": self.family,
            "n_samples": int(self._x.size),
            "a2_accuracy_warning": True,
        }


class DiffusionModel:
    """Base class for diffusion coefficients D(x) > 0."""

    kind = "base"

    def value(self, profile, x):
        raise NotImplementedError

    def derivative(self, profile, x):
        """dD/dx, needed by the coordinate transform machinery."""
        raise NotImplementedError

    def meta(self):
        return {"kind": self.kind}


class ConstantDiffusion(DiffusionModel):
    """D(x) = d0 everywhere."""

    kind = "constant"

    def __init__(self, d0):
        if d0 <= 0:
            raise ValueError("d0 must be positive")
        self.d0 = float(d0)

    def value(self, profile, x):
        arr, scalar = _scalar_in(x)
        return _maybe_scalar(np.full_like(arr, self.d0), scalar)

    def derivative(self, profile, x):
        arr, scalar = _scalar_in(x)
        return _maybe_scalar(np.zeros_like(arr), scalar)

    def meta(self):
        return {"kind": self.kind, "d0": self.d0}


class RegueraRubiDiffusion(DiffusionModel):
    """Curvature-corrected coefficient D = d0 / sqrt(1 + R'^2), R = sqrt(A/pi)."""

    kind = "reguera_rubi"

    def __init__(self, d0):
        if d0 <= 0:
            raise ValueError("d0 must be positive")
        self.d0 = float(d0)

    @staticmethod
    def _radius_derivs(profile, x):
        a, a1, a2 = profile.area_derivs(x)
        r = np.sqrt(a / np.pi)
        r1 = a1 / (2.0 * np.sqrt(np.pi * a))
        r2 = (2.0 * a * a2 - a1 * a1) / (4.0 * np.sqrt(np.pi) * a**1.5)
        return r, r1, r2

    def value(self, profile, x):
        _, r1, _ = self._radius_derivs(profile, x)
        return self.d0 / np.sqrt(1.0 + r1 * r1)

    def derivative(self, profile, x):
        _, r1, r2 = self._radius_derivs(profile, x)
        return -self.d0 * r1 * r2 / (1.0 + r1 * r1) ** 1.5

    def meta(self):
        return {"kind": self.kind, "d0": self.d0}


class TabulatedDiffusion(DiffusionModel):
    """D(x) from (x, D) samples, interpolated monotone-cubically.

    Covers coefficients with no closed form (the exponential-coefficient
    benchmark is expressed this way).  Samples must be positive.
    """

    kind = "tabulated"

    def __init__(self, x, values):
        x = np.asarray(x, dtype=float)
        values = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != values.shape or x.size < 4:
            raise ValueError("need matching 1-D x and D arrays with at least 4 samples")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x samples must be strictly increasing")
        if np.any(values <= 0):
            raise ValueError("diffusion samples must be positive")
        self._spline = PchipInterpolator(x, values)
        self._d1 = self._spline.derivative(1)
        self.range = (float(x[0]), float(x[-1]))

    def value(self, profile, x):
        arr, scalar = _scalar_in(x)
        lo, hi = self.range
        if np.any(arr < lo) or np.any(arr > hi):
            raise OutOfDomainError(f"x outside tabulated diffusion range [{lo:g}, {hi:g}]")
        return _maybe_scalar(self._spline(arr), scalar)

    def derivative(self, profile, x):
        arr, scalar = _scalar_in(x)
        return _maybe_scalar(self._d1(arr), scalar)

    def meta(self):
        return {"kind": self.kind}


def area_derivs(profile, x):
    """Return (A, dA/dx, d2A/dx2) at x, which must lie in the profile domain."""
    profile.require_in_domain(x)
    return profile.area_derivs(x)


def entropic_potential(profile, x):
    """Geometric effective potential V = A''/(2A) - ((ln A)')^2 / 4."""
    a, a1, a2 = area_derivs(profile, x)
    return 0.5 * a2 / a - 0.25 * (a1 / a) ** 2


def diffusion_coefficient(model, profile, x):
    """Evaluate D(x) for the given model on the profile domain."""
    profile.require_in_domain(x)
    return model.value(profile, x)
