"""Closed-form channel-diffusion solutions.

Conical, throat and sinusoidal channels evolve a Gaussian packet through a
shared spreading factor whose variance parameter grows as sigma^2 + t*d0;
the geometry contributes a multiplicative shape and, for the throat and
sinusoidal cases, a uniform exponential rate.  The log-quadratic (Gaussian
area) channel evolves oscillator eigenmodes instead.

Two normalization conventions coexist for the Gaussian packet: the evolved
form carries (sigma^2/2pi)^(1/4) / sqrt(sigma^2 + t*d0) while the plain
initial condition uses (2 pi sigma^2)^(-1/2); they differ by the constant
(2 pi sigma^2)^(1/4).  GaussianInit.prefactor selects which one the t = 0
profile reproduces; comparisons downstream normalize by total mass, which
removes the distinction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    NegativeCurvatureError,
    NonPositiveTimeError,
    OutOfDomainError,
)
from .fdsolver import ConcentrationField
from .mapping import build_schrodinger_map

PREFACTOR_EVOLVED = "evolved"
PREFACTOR_INITIAL = "initial"


@dataclass(frozen=True)
class GaussianInit:
    """Gaussian packet parameters: width sigma, center, prefactor convention."""

    sigma: float
    center: float = 0.0
    prefactor: str = PREFACTOR_EVOLVED

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.prefactor not in (PREFACTOR_EVOLVED, PREFACTOR_INITIAL):
            raise ValueError("prefactor must be 'evolved' or 'initial'")


@dataclass(frozen=True)
class EigenmodeInit:
    """Oscillator level and area curvature for the Gaussian channel."""

    level: int
    curvature: float

    def __post_init__(self):
        if self.level < 0 or int(self.level) != self.level:
            raise ValueError("level must be a non-negative integer")
        if self.curvature <= 0:
            raise NegativeCurvatureError("curvature must be positive for normalizable modes")


def _check_time(t):
    if not np.iscomplexobj(t) and np.any(np.asarray(t) < 0):
        raise ValueError("t must be non-negative")


def _spread(init, d0, x, t):
    """Common Gaussian spreading factor with the selected prefactor."""
    s2 = init.sigma**2 + t * d0
    out = (init.sigma**2 / (2.0 * np.pi)) ** 0.25 / np.sqrt(s2) * np.exp(
        -((x - init.center) ** 2) / (4.0 * s2)
    )
    if init.prefactor == PREFACTOR_INITIAL:
        out = out * (2.0 * np.pi * init.sigma**2) ** -0.25
    return out


def heat_kernel(d0, t, x, xp):
    """Free propagator (4 pi d0 t)^(-1/2) exp(-(x - xp)^2 / (4 d0 t)), t > 0."""
    if np.any(np.asarray(t) <= 0):
        raise NonPositiveTimeError("heat kernel needs t > 0")
    return np.exp(-((np.asarray(x, dtype=float) - xp) ** 2) / (4.0 * d0 * t)) / np.sqrt(
        4.0 * np.pi * d0 * t
    )


def conical_solution(slope, d0, init, x, t):
    """Gaussian evolution in a cone: C = (1 + slope*x) * spread(x, t).

    slope = 0 reduces to plain Gaussian spreading in a uniform channel.
    """
    _check_time(t)
    xarr = np.asarray(x, dtype=float)
    u = 1.0 + slope * xarr
    if slope != 0.0 and np.any(u <= 0):
        raise OutOfDomainError("x beyond the cone apex")
    return u * _spread(init, d0, xarr, t)


def throat_solution(rate, offset, d0, init, x, t):
    """Exponential-throat evolution: e^{-d0 rate^2 t/4} e^{rate x/2} spread.

    The area offset only rescales A and cancels from the dynamics, so it
    does not appear in the solution.
    """
    _check_time(t)
    xarr = np.asarray(x, dtype=float)
    decay = np.exp(-d0 * rate**2 * t / 4.0)
    return decay * np.exp(0.5 * rate * xarr) * _spread(init, d0, xarr, t)


def sinusoidal_solution(amplitude, wavenumber, d0, init, x, t):
    """One-cell sinusoidal evolution: e^{d0 w^2 t} sin(w x) spread.

    x must lie within one closed cell [k pi/w, (k+1) pi/w]; the solution
    vanishes at the cell boundaries.  The area amplitude cancels from the
    dynamics and does not appear.
    """
    _check_time(t)
    if wavenumber <= 0:
        raise OutOfDomainError("wavenumber must be positive")
    xarr = np.asarray(x, dtype=float)
    half = np.pi / wavenumber
    k = np.floor(np.median(np.atleast_1d(xarr)) / half)
    tol = 1e-12 * max(1.0, half)
    if np.any(xarr < k * half - tol) or np.any(xarr > (k + 1) * half + tol):
        raise OutOfDomainError("x values must lie within a single sinusoidal cell")
    grow = np.exp(d0 * wavenumber**2 * t)
    return grow * np.sin(wavenumber * xarr) * _spread(init, d0, xarr, t)


def hermite_function(n, u):
    """Orthonormal oscillator eigenfunctions of -psi'' + u^2 psi.

    Stable three-term recurrence on the normalized functions:
    psi_{k+1} = sqrt(2/(k+1)) u psi_k - sqrt(k/(k+1)) psi_{k-1}.
    """
    u = np.asarray(u, dtype=float)
    psi_prev = np.pi**-0.25 * np.exp(-0.5 * u * u)
    if n == 0:
        return psi_prev
    psi = np.sqrt(2.0) * u * psi_prev
    for k in range(1, n):
        psi, psi_prev = (
            np.sqrt(2.0 / (k + 1.0)) * u * psi - np.sqrt(k / (k + 1.0)) * psi_prev,
            psi,
        )
    return psi


def oscillator_eigenfunction(n, curvature, zeta):
    """Normalized eigenfunction of -psi'' + curvature^2 zeta^2 psi."""
    if curvature <= 0:
        raise NegativeCurvatureError("curvature must be positive")
    return curvature**0.25 * hermite_function(n, np.sqrt(curvature) * np.asarray(zeta, dtype=float))


def gaussian_channel_solution(curvature, tilt, d0, init, x, t):
    """Eigenmode evolution in a log-quadratic channel.

    With zeta = x + tilt/(2*curvature) completing the square of ln A, mode n
    evolves as

        C = e^{-d0 a t} e^{a zeta^2 / 2} e^{-2 d0 a (n + 1/2) t} psi_n(zeta),

    a uniform decay at total rate 2 d0 a (n + 1).
    """
    _check_time(t)
    if curvature <= 0:
        raise NegativeCurvatureError("curvature must be positive")
    if init.curvature != curvature:
        raise ValueError("init.curvature must match the channel curvature")
    a = float(curvature)
    zeta = np.asarray(x, dtype=float) + tilt / (2.0 * a)
    mode = oscillator_eigenfunction(init.level, a, zeta)
    rate = d0 * a + 2.0 * d0 * a * (init.level + 0.5)
    return np.exp(-rate * t) * np.exp(0.5 * a * zeta * zeta) * mode


def stationary_profile(profile, model, x_lo=None, x_hi=None, n_points=401, x0=None):
    """Sample exp(f) on a uniform grid; flag whether it is truly stationary.

    exp(f) does not evolve only when the effective potential vanishes, so
    the flag is True exactly when max|V| < 1e-10 on the transformed grid.
    For nonzero constant V the profile decays uniformly instead.
    """
    lo, hi = profile.domain
    x_lo = lo if x_lo is None else float(x_lo)
    x_hi = hi if x_hi is None else float(x_hi)
    if not (np.isfinite(x_lo) and np.isfinite(x_hi)):
        raise OutOfDomainError("unbounded profile domain: supply x_lo and x_hi")
    if x0 is None:
        x0 = 0.5 * (x_lo + x_hi)
    smap = build_schrodinger_map(model, profile, x0, n_points, x_lo, x_hi)
    x = np.linspace(x_lo, x_hi, n_points)
    a = np.asarray(profile.area(x), dtype=float)
    d = np.asarray(model.value(profile, x), dtype=float)
    a0_ = float(profile.area(x0))
    d0_ = float(model.value(profile, x0))
    f = 0.5 * np.log(a / a0_) - 0.25 * np.log(d / d0_)
    stationary = bool(np.max(np.abs(smap.V)) < 1e-10)
    return ConcentrationField(x, np.exp(f), 0.0), stationary
