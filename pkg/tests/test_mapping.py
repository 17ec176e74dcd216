import numpy as np
import pytest

import fickjacobs.mapping as mapping
from fickjacobs import (
    ConcentrationField,
    ConicalProfile,
    ConstantDiffusion,
    GridTooSmallError,
    OutOfDomainError,
    OutOfRangeError,
    QuadratureFailureError,
    RegueraRubiDiffusion,
    SinusoidalProfile,
    TabulatedDiffusion,
    ThroatProfile,
    apply_fj_generator,
    build_schrodinger_map,
    entropic_potential,
    invert_coordinate,
    susy_partner_potentials,
    transform_coordinate,
)


def exp_diffusion(rate, lo=-1.0, hi=6.0, n=4001):
    xs = np.linspace(lo, hi, n)
    return TabulatedDiffusion(xs, np.exp(rate * xs))


class TestTransform:
    def test_constant_coefficient_is_linear(self):
        prof = ThroatProfile(0.0)
        model = ConstantDiffusion(4.0)
        xs = np.array([-2.0, 0.5, 3.0])
        assert transform_coordinate(model, prof, xs, 0.0) == pytest.approx(xs / 2.0, abs=1e-12)

    def test_reguera_rubi_conical_closed_form(self):
        lam, d0 = 1.0, 1.0
        prof = ConicalProfile(lam)
        model = RegueraRubiDiffusion(d0)
        scale = np.sqrt(np.sqrt(1 + lam**2) / d0)
        for x in (0.5, 2.0, 7.25):
            y = transform_coordinate(model, prof, x, 0.0)
            assert y == pytest.approx(x * scale, rel=1e-10)

    def test_exponential_coefficient_antiderivative_oracle(self):
        # closed form: y = (2/rate)(1 - exp(-rate x / 2))
        rate = 1.0
        model = exp_diffusion(rate)
        prof = ThroatProfile(0.0)
        for x in (0.3, 1.7, 4.0):
            expected = (2.0 / rate) * (1.0 - np.exp(-rate * x / 2.0))
            assert transform_coordinate(model, prof, x, 0.0) == pytest.approx(expected, abs=1e-8)

    def test_monotone_in_x(self):
        rng = np.random.default_rng(5)
        prof = ConicalProfile(1.0)
        model = RegueraRubiDiffusion(0.7)
        xs = np.sort(rng.uniform(-0.9, 9.0, 60))
        ys = transform_coordinate(model, prof, xs, 0.0)
        assert np.all(np.diff(ys) > 0)

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomainError):
            transform_coordinate(ConstantDiffusion(1.0), ConicalProfile(1.0), -1.5, 0.0)

    def test_quadrature_budget_exhaustion(self, monkeypatch):
        monkeypatch.setattr(mapping, "_QUAD_LIMIT", 1)
        xs = np.linspace(-1.0, 30.0, 20000)
        model = TabulatedDiffusion(xs, 2.0 + np.sin(40.0 * xs))
        with pytest.raises(QuadratureFailureError):
            transform_coordinate(model, ThroatProfile(0.0), 29.5, 0.0)


class TestInvert:
    def test_round_trip_three_models(self):
        rng = np.random.default_rng(12)
        cases = [
            (ConstantDiffusion(2.0), ConicalProfile(1.0), (-0.5, 9.5)),
            (RegueraRubiDiffusion(1.0), ConicalProfile(1.0), (-0.5, 9.5)),
            (exp_diffusion(1.0, -1.0, 6.0), ThroatProfile(0.0), (-0.5, 5.5)),
        ]
        for model, prof, (lo, hi) in cases:
            smap = build_schrodinger_map(model, prof, 0.0, 201, lo, hi)
            xs = rng.uniform(lo, hi, 100)
            ys = transform_coordinate(model, prof, xs, 0.0)
            back = invert_coordinate(smap, ys)
            assert np.max(np.abs(back - xs)) <= 1e-8

    def test_constant_model_linear_inverse(self):
        model = ConstantDiffusion(4.0)
        prof = ThroatProfile(0.0)
        smap = build_schrodinger_map(model, prof, 0.0, 101, -4.0, 4.0)
        assert invert_coordinate(smap, 1.0) == pytest.approx(2.0, abs=1e-10)

    def test_reguera_rubi_conical_linear_inverse(self):
        lam, d0 = 1.0, 1.0
        model = RegueraRubiDiffusion(d0)
        prof = ConicalProfile(lam)
        smap = build_schrodinger_map(model, prof, 0.0, 101, -0.5, 8.0)
        y = 2.0
        expected = y * np.sqrt(d0 / np.sqrt(1 + lam**2))
        assert invert_coordinate(smap, y) == pytest.approx(expected, abs=1e-9)

    def test_out_of_range(self):
        smap = build_schrodinger_map(ConstantDiffusion(1.0), ThroatProfile(0.0), 0.0, 51, 0.0, 1.0)
        with pytest.raises(OutOfRangeError):
            invert_coordinate(smap, 2.0)


class TestSchrodingerMap:
    def test_conical_constant_d_zero_potential(self):
        smap = build_schrodinger_map(ConstantDiffusion(1.0), ConicalProfile(1.0), 0.0, 201, 0.0, 12.0)
        assert np.max(np.abs(smap.V)) <= 1e-13

    def test_cylinder_trivial_map(self):
        smap = build_schrodinger_map(ConstantDiffusion(1.0), ThroatProfile(0.0), 0.0, 101, -5.0, 5.0)
        assert np.max(np.abs(smap.f)) == 0.0
        assert np.max(np.abs(smap.V)) == 0.0

    def test_throat_dzero_scaling_and_x_convention(self):
        d0, rate = 2.0, 1.5
        prof = ThroatProfile(rate)
        smap = build_schrodinger_map(ConstantDiffusion(d0), prof, 0.0, 151, -3.0, 3.0)
        assert smap.V == pytest.approx(np.full(151, d0 * rate**2 / 4.0), rel=1e-12)
        vx = smap.potential_x()
        target = entropic_potential(prof, invert_coordinate(smap, smap.y_grid[40]))
        assert vx[40] == pytest.approx(target, abs=1e-8)

    def test_drift_is_half_log_area_for_constant_d(self):
        prof = SinusoidalProfile(2.0, 1.0)
        smap = build_schrodinger_map(ConstantDiffusion(3.0), prof, np.pi / 2, 101, 0.3, np.pi - 0.3)
        ref = 0.5 * np.log(prof.area(smap.x_of_y))
        shift = ref - smap.f
        assert np.max(np.abs(shift - shift[0])) <= 1e-8
        i0 = np.argmin(np.abs(smap.y_grid))
        assert abs(smap.f[i0]) <= 1e-8

    def test_y_of_x0_is_zero(self):
        smap = build_schrodinger_map(ConstantDiffusion(1.0), ConicalProfile(1.0), 2.0, 101, 0.0, 8.0)
        assert transform_coordinate(ConstantDiffusion(1.0), ConicalProfile(1.0), 2.0, 2.0) == 0.0
        assert np.interp(0.0, smap.y_grid, smap.x_of_y) == pytest.approx(2.0, abs=1e-10)

    def test_variable_d_potential_matches_constant_limit(self):
        # a nearly flat tabulated model must reproduce the constant-D potential
        prof = ThroatProfile(1.0)
        xs = np.linspace(-3.0, 3.0, 3001)
        model = TabulatedDiffusion(xs, np.full(xs.size, 2.0))
        smap = build_schrodinger_map(model, prof, 0.0, 101, -2.0, 2.0)
        ref = build_schrodinger_map(ConstantDiffusion(2.0), prof, 0.0, 101, -2.0, 2.0)
        assert smap.V == pytest.approx(ref.V, abs=1e-6)
        assert smap.f == pytest.approx(ref.f, abs=1e-8)

    def test_csv_dump(self, tmp_path):
        smap = build_schrodinger_map(ConstantDiffusion(1.0), ThroatProfile(1.0), 0.0, 11, -1.0, 1.0)
        path = tmp_path / "map.csv"
        smap.to_csv(path)
        text = path.read_text().splitlines()
        assert text[0] == "y,x,f,V"
        assert len(text) == 12


class TestSusy:
    def test_linear_superpotential(self):
        x = np.linspace(-2.0, 2.0, 401)
        pair = susy_partner_potentials(x, x, 1.0)
        i0 = np.argmin(np.abs(x))
        assert pair.v_plus[i0] == pytest.approx(1.0, abs=1e-10)
        assert pair.v_minus[i0] == pytest.approx(-1.0, abs=1e-10)

    def test_zero_superpotential(self):
        x = np.linspace(0.0, 1.0, 11)
        pair = susy_partner_potentials(x, np.zeros(11), 2.0)
        assert np.all(pair.v_plus == 0.0) and np.all(pair.v_minus == 0.0)

    def test_tanh_against_analytic_derivative(self):
        # W = tanh -> V_minus = 1 - 2 sech^2, V_plus = 1 (exactly, since W' = sech^2)
        x = np.linspace(-3.0, 3.0, 1201)
        pair = susy_partner_potentials(x, np.tanh(x))
        idx = np.linspace(30, 1170, 10).astype(int)
        sech2 = 1.0 / np.cosh(x[idx]) ** 2
        assert pair.v_minus[idx] == pytest.approx(1.0 - 2.0 * sech2, abs=1e-7)
        assert pair.v_plus[idx] == pytest.approx(np.ones(10), abs=1e-7)

    def test_partner_difference_identity(self):
        rng = np.random.default_rng(2)
        x = np.linspace(-1.0, 4.0, 173)
        w = np.sin(x) + 0.3 * rng.standard_normal(x.size)
        pair = susy_partner_potentials(x, w)
        h = x[1] - x[0]
        wp = np.empty_like(w)
        wp[1:-1] = (w[2:] - w[:-2]) / (2 * h)
        wp[0] = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * h)
        wp[-1] = (3 * w[-1] - 4 * w[-2] + w[-3]) / (2 * h)
        assert np.array_equal(pair.v_plus - pair.v_minus, 2.0 * wp)

    def test_grid_too_small(self):
        with pytest.raises(GridTooSmallError):
            susy_partner_potentials([0.0, 1.0], [0.0, 1.0])


class TestGenerator:
    def test_equilibrium_annihilated(self):
        prof = ConicalProfile(1.0)
        x = np.linspace(0.5, 8.0, 501)
        c = ConcentrationField(x, prof.area(x), 0.0)
        out = apply_fj_generator(ConstantDiffusion(1.0), prof, c)
        assert np.max(np.abs(out.values)) <= 1e-11 * np.max(c.values)

    def test_constant_flux_steady_state(self):
        # C = sqrt(A) carries uniform flux in a cone; the residual is O(dx^2)
        prof = ConicalProfile(1.0)
        errs = []
        for n in (201, 401):
            x = np.linspace(0.5, 8.0, n)
            c = ConcentrationField(x, np.sqrt(prof.area(x)), 0.0)
            out = apply_fj_generator(ConstantDiffusion(1.0), prof, c)
            errs.append(np.max(np.abs(out.values)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)

    def test_matches_analytic_time_derivative(self):
        # complex-step d/dt of the conical closed form as the oracle
        from fickjacobs import GaussianInit, conical_solution

        prof = ConicalProfile(1.0)
        model = ConstantDiffusion(1.0)
        init = GaussianInit(1.0, 4.0)
        h = 1e-20
        errs = []
        for n in (401, 801):
            x = np.linspace(0.5, 9.5, n)
            c = ConcentrationField(x, conical_solution(1.0, 1.0, init, x, 0.5), 0.5)
            dcdt = np.imag(conical_solution(1.0, 1.0, init, x, 0.5 + 1j * h)) / h
            out = apply_fj_generator(model, prof, c)
            errs.append(np.max(np.abs(out.values - dcdt)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.3)

    def test_grid_must_be_interior(self):
        prof = SinusoidalProfile(1.0, 1.0)
        x = np.linspace(0.0, np.pi, 64)
        c = ConcentrationField(x, np.sin(x) ** 2, 0.0)
        with pytest.raises(OutOfDomainError):
            apply_fj_generator(ConstantDiffusion(1.0), prof, c)


class TestSimilarityIdentity:
    @staticmethod
    def _mismatch(n):
        # H_f u vs e^f (P^2+V) e^{-f} u, both by second differences
        prof = ThroatProfile(1.3)
        smap = build_schrodinger_map(ConstantDiffusion(1.0), prof, 0.0, n, -3.0, 3.0)
        y, f, v = smap.y_grid, smap.f, smap.V
        dy = y[1] - y[0]
        u = np.exp(-((y - 0.2) ** 2)) * (1.0 + 0.3 * y)

        def d1(g):
            out = np.empty_like(g)
            out[1:-1] = (g[2:] - g[:-2]) / (2 * dy)
            out[0] = out[1]
            out[-1] = out[-2]
            return out

        def d2(g):
            out = np.empty_like(g)
            out[1:-1] = (g[2:] - 2 * g[1:-1] + g[:-2]) / dy**2
            out[0] = out[1]
            out[-1] = out[-2]
            return out

        fp, fpp = d1(f), d2(f)
        lhs = -d2(u) + 2.0 * fp * d1(u) + (fpp - fp**2 + v) * u
        w = np.exp(-f) * u
        rhs = np.exp(f) * (-d2(w) + v * w)
        return np.max(np.abs(lhs - rhs)[2:-2])

    def test_second_order_convergence(self):
        coarse = self._mismatch(201)
        fine = self._mismatch(401)
        assert 3.5 <= coarse / fine <= 4.5
