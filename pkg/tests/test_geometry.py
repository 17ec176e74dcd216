import numpy as np
import pytest

from fickjacobs import (
    ConicalProfile,
    ConstantDiffusion,
    GaussianAreaProfile,
    NonPositiveAreaError,
    OutOfDomainError,
    RegueraRubiDiffusion,
    SinusoidalProfile,
    TabulatedDiffusion,
    TabulatedProfile,
    ThroatProfile,
    area_derivs,
    diffusion_coefficient,
    entropic_potential,
)


def fd_potential(profile, x, h=1e-4):
    """Independent oracle: build V from area samples alone."""
    am = profile.area(x - h)
    a0 = profile.area(x)
    ap = profile.area(x + h)
    a2 = (ap - 2.0 * a0 + am) / h**2
    dlog = (np.log(ap) - np.log(am)) / (2.0 * h)
    return 0.5 * a2 / a0 - 0.25 * dlog**2


def sample_interior(profile, rng, n=100, margin=0.02):
    lo, hi = profile.domain
    lo = max(lo, -8.0)
    hi = min(hi, 8.0)
    span = hi - lo
    return lo + span * (margin + (1 - 2 * margin) * rng.random(n))


class TestAreaDerivs:
    def test_conical_at_origin(self):
        a, a1, a2 = area_derivs(ConicalProfile(1.0), 0.0)
        assert a == pytest.approx(np.pi, abs=1e-15)
        assert a1 == pytest.approx(2 * np.pi, abs=1e-15)
        assert a2 == pytest.approx(2 * np.pi, abs=1e-15)

    def test_cylinder_constant_area(self):
        prof = ThroatProfile(0.0, 0.0)
        for x in (-3.0, 0.0, 7.5):
            assert area_derivs(prof, x) == (1.0, 0.0, 0.0)

    def test_sinusoidal_against_finite_differences(self):
        prof = SinusoidalProfile(1.0, 1.0)
        x, h = np.pi / 2, 1e-5
        a1_fd = (prof.area(x + h) - prof.area(x - h)) / (2 * h)
        a2_fd = (prof.area(x + h) - 2 * prof.area(x) + prof.area(x - h)) / h**2
        a, a1, a2 = area_derivs(prof, x)
        assert a == pytest.approx(1.0, abs=1e-14)
        assert a1 == pytest.approx(a1_fd, abs=1e-9) and a1 == pytest.approx(0.0, abs=1e-14)
        assert a2 == pytest.approx(a2_fd, abs=1e-5) and a2 == pytest.approx(-2.0, abs=1e-12)

    def test_vectorized_matches_scalar(self):
        prof = GaussianAreaProfile(0.3, -0.2, 0.1)
        xs = np.array([-1.0, 0.0, 2.5])
        a, a1, a2 = area_derivs(prof, xs)
        for i, x in enumerate(xs):
            s = area_derivs(prof, float(x))
            assert (a[i], a1[i], a2[i]) == s

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomainError):
            area_derivs(ConicalProfile(1.0), -1.0)
        with pytest.raises(OutOfDomainError):
            area_derivs(SinusoidalProfile(1.0, 2.0), np.pi)

    def test_negative_slope_domain(self):
        prof = ConicalProfile(-0.5)
        assert prof.domain == (-np.inf, 2.0)
        area_derivs(prof, 1.9)
        with pytest.raises(OutOfDomainError):
            area_derivs(prof, 2.0)

    def test_zero_slope_rejected(self):
        with pytest.raises(ValueError):
            ConicalProfile(0.0)


class TestEntropicPotential:
    def test_conical_vanishes(self):
        rng = np.random.default_rng(7)
        prof = ConicalProfile(2.0)
        xs = sample_interior(prof, rng)
        assert np.max(np.abs(entropic_potential(prof, xs))) <= 1e-12
        assert entropic_potential(prof, 1.3) == pytest.approx(0.0, abs=1e-12)

    def test_throat_constant(self):
        prof = ThroatProfile(2.0, 0.3)
        for x in (-4.0, 0.0, 5.0):
            assert entropic_potential(prof, x) == pytest.approx(1.0, rel=1e-12)

    def test_sinusoidal_constant(self):
        prof = SinusoidalProfile(2.5, 3.0)
        assert entropic_potential(prof, 0.2) == pytest.approx(-9.0, rel=1e-12)

    def test_gaussian_area_closed_form(self):
        prof = GaussianAreaProfile(0.5, 0.0, 0.0)
        assert entropic_potential(prof, 2.0) == pytest.approx(1.5, rel=1e-12)
        # quadratic-in-x with the completed-square shift, any tilt
        prof = GaussianAreaProfile(0.7, 1.1, -0.4)
        x = 1.8
        zeta = x + 1.1 / (2 * 0.7)
        assert entropic_potential(prof, x) == pytest.approx(0.7 + 0.7**2 * zeta**2, rel=1e-12)

    def test_negative_curvature_allowed(self):
        prof = GaussianAreaProfile(-0.5, 0.0, 0.0)
        x = 0.8
        assert entropic_potential(prof, x) == pytest.approx(-0.5 + 0.25 * x**2, rel=1e-12)

    @pytest.mark.parametrize(
        "prof,margin",
        [
            (ConicalProfile(1.5), 0.05),
            (ThroatProfile(0.8, 0.1), 0.05),
            # near the pinch points the oracle's own truncation error blows
            # up as h^2/d^4, so sampling keeps a wall margin there
            (SinusoidalProfile(1.2, 2.0), 0.25),
            (GaussianAreaProfile(0.4, 0.3, 0.0), 0.05),
        ],
        ids=["conical", "throat", "sinusoidal", "gaussian_area"],
    )
    def test_agrees_with_area_sample_oracle(self, prof, margin):
        rng = np.random.default_rng(11)
        xs = sample_interior(prof, rng, n=100, margin=margin)
        v = entropic_potential(prof, xs)
        v_fd = fd_potential(prof, xs)
        assert np.max(np.abs(v - v_fd)) <= 1e-6

    def test_constant_area_profile(self):
        prof = ThroatProfile(0.0, 0.7)
        xs = np.linspace(-5, 5, 50)
        assert np.all(entropic_potential(prof, xs) == 0.0)


class TestDiffusionCoefficient:
    def test_reguera_rubi_conical_is_flat(self):
        lam, d0 = 1.0, 2.0
        model = RegueraRubiDiffusion(d0)
        prof = ConicalProfile(lam)
        expected = d0 / np.sqrt(1 + lam**2)
        for x in (0.0, 1.0, 6.3):
            assert diffusion_coefficient(model, prof, x) == pytest.approx(expected, rel=1e-14)

    def test_reguera_rubi_cylinder(self):
        model = RegueraRubiDiffusion(3.0)
        prof = ThroatProfile(0.0, 0.2)
        assert diffusion_coefficient(model, prof, 1.0) == 3.0

    def test_reguera_rubi_throat_against_fd_oracle(self):
        # oracle: differentiate R = sqrt(A/pi) numerically, step 1e-6
        model = RegueraRubiDiffusion(1.0)
        prof = ThroatProfile(1.0, 0.0)
        x, h = 0.0, 1e-6
        r = lambda z: np.sqrt(prof.area(z) / np.pi)
        rp = (r(x + h) - r(x - h)) / (2 * h)
        expected = 1.0 / np.sqrt(1.0 + rp**2)
        assert diffusion_coefficient(model, prof, x) == pytest.approx(expected, rel=1e-9)

    def test_never_exceeds_d0(self):
        rng = np.random.default_rng(3)
        model = RegueraRubiDiffusion(1.7)
        for prof in (ConicalProfile(2.0), ThroatProfile(1.3), SinusoidalProfile(1.0, 1.0)):
            xs = sample_interior(prof, rng, n=100, margin=0.05)
            assert np.all(diffusion_coefficient(model, prof, xs) <= 1.7 + 1e-15)

    def test_constant_kind(self):
        model = ConstantDiffusion(0.25)
        assert diffusion_coefficient(model, ThroatProfile(1.0), 2.0) == 0.25

    def test_tabulated_model(self):
        xs = np.linspace(0.0, 3.0, 400)
        model = TabulatedDiffusion(xs, np.exp(xs))
        prof = ThroatProfile(0.0)
        assert model.value(prof, 1.5) == pytest.approx(np.exp(1.5), rel=1e-8)
        with pytest.raises(OutOfDomainError):
            model.value(prof, 4.0)


class TestTabulatedProfile:
    def test_matches_source_function(self):
        xs = np.linspace(0.1, 3.0, 600)
        prof = TabulatedProfile(xs, np.pi * (1 + xs) ** 2)
        a, a1, a2 = area_derivs(prof, 1.5)
        assert a == pytest.approx(np.pi * 2.5**2, rel=1e-8)
        assert a1 == pytest.approx(2 * np.pi * 2.5, rel=1e-6)
        # interpolant second derivatives are the weak spot; hence the meta flag
        assert a2 == pytest.approx(2 * np.pi, rel=5e-3)

    def test_meta_carries_second_derivative_warning(self):
        xs = np.linspace(0.0, 1.0, 50)
        prof = TabulatedProfile(xs, 1.0 + xs)
        assert prof.meta()["a2_accuracy_warning"] is True

    def test_construction_errors(self):
        xs = np.linspace(0, 1, 20)
        with pytest.raises(NonPositiveAreaError):
            TabulatedProfile(xs, xs - 0.5)
        with pytest.raises(ValueError):
            TabulatedProfile(xs[::-1], 1.0 + xs)
