import numpy as np
import pytest

from ncqed.lattice import (
    GridSpec,
    ScalarField,
    constant_field,
    dump_field_csv,
    dump_modes_csv,
    integrate,
    load_field_csv,
    make_field,
    multiply,
    partial_derivative,
    plane_wave,
    random_band_limited,
    translate,
)

TWO_PI = 2.0 * np.pi


class TestGridSpec:
    def test_defaults(self, grid2):
        assert grid2.d == 2
        assert grid2.n == (32, 32)
        assert grid2.length == (TWO_PI, TWO_PI)
        assert grid2.volume == pytest.approx(TWO_PI ** 2)

    @pytest.mark.parametrize("n", [7, 12, 4, 33])
    def test_rejects_bad_point_counts(self, n):
        with pytest.raises(ValueError):
            GridSpec(d=2, n=(n, 32), length=(TWO_PI, TWO_PI))

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            GridSpec(d=5, n=(8,) * 5, length=(1.0,) * 5)
        with pytest.raises(ValueError):
            GridSpec(d=2, n=(32, 32), length=(0.0, TWO_PI))

    def test_mismatched_axis_counts(self):
        with pytest.raises(ValueError):
            GridSpec(d=3, n=(32, 32), length=(TWO_PI,) * 3)


class TestMakeField:
    def test_single_mode_is_plane_wave(self, grid2):
        f = make_field(grid2, [((1, 0), 1.0)])
        x = grid2.coordinates()
        want = np.exp(1j * (x[0] + 0 * x[1]))
        assert np.abs(f.values - want).max() < 1e-13

    def test_empty_mode_list_is_zero(self, grid2):
        f = make_field(grid2, [])
        assert f.max_abs() == 0.0

    def test_out_of_range_mode_rejected(self, grid2):
        with pytest.raises(ValueError, match="outside representable band"):
            make_field(grid2, [((20, 0), 1.0)])
        with pytest.raises(ValueError, match="wrong dimension"):
            make_field(grid2, [((1, 0, 0), 1.0)])

    def test_random_band_limited_is_deterministic(self, grid2):
        a = random_band_limited(grid2, cutoff=8, rng=7)
        b = random_band_limited(grid2, cutoff=8, rng=7)
        assert np.array_equal(a.values, b.values)
        assert a.real and a.is_conjugate_symmetric()

    def test_random_band_limited_respects_cutoff(self, grid2):
        f = random_band_limited(grid2, cutoff=4, rng=3)
        idx, _ = f.sparse_modes()
        assert np.abs(idx).max() <= 4

    def test_sampler_spec(self, grid2):
        f = make_field(grid2, lambda x0, x1: np.cos(x0) * np.sin(x1))
        assert f.real
        g = plane_wave(grid2, (1, 0), 0.5) + plane_wave(grid2, (-1, 0), 0.5)
        h = plane_wave(grid2, (0, 1), -0.5j) + plane_wave(grid2, (0, -1), 0.5j)
        assert (f - multiply(g, h)).max_abs() < 1e-13


class TestSpectralCalculus:
    def test_derivative_eigenfunction(self, grid2):
        f = plane_wave(grid2, (1, 0))
        df = partial_derivative(f, 0)
        assert np.abs(df.values - 1j * f.values).max() < 1e-13

    def test_derivative_of_constant(self, grid2):
        assert partial_derivative(constant_field(grid2, 3.0), 1).max_abs() == 0.0

    def test_mixed_derivatives_commute(self, grid2):
        f = random_band_limited(grid2, cutoff=8, rng=5)
        d01 = partial_derivative(partial_derivative(f, 0), 1)
        d10 = partial_derivative(partial_derivative(f, 1), 0)
        assert (d01 - d10).max_abs() < 1e-12

    def test_axis_bound(self, grid2):
        with pytest.raises(ValueError):
            partial_derivative(constant_field(grid2), 2)

    def test_integral_of_one(self, grid2):
        assert integrate(constant_field(grid2, 1.0)) == pytest.approx(TWO_PI ** 2)

    def test_integral_of_wave_vanishes(self, grid2):
        assert abs(integrate(plane_wave(grid2, (1, 0)))) < 1e-12

    def test_parseval_pairing(self, grid2, rng):
        f = random_band_limited(grid2, 6, rng)
        g = random_band_limited(grid2, 6, rng)
        direct = integrate(multiply(f, g))
        fm = f.modes
        gm = g.modes
        flipped = gm
        for ax in range(2):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        pairing = (fm * flipped).sum() * grid2.volume
        assert abs(direct - pairing) < 1e-10

    def test_total_derivative_integrates_to_zero(self, grid2, rng):
        f = random_band_limited(grid2, 8, rng, real=False)
        assert abs(integrate(partial_derivative(f, 0))) < 1e-12

    def test_product_rule_when_resolved(self, grid2, rng):
        f = random_band_limited(grid2, 5, rng)
        g = random_band_limited(grid2, 5, rng)
        lhs = partial_derivative(multiply(f, g), 1)
        rhs = multiply(partial_derivative(f, 1), g) \
            + multiply(f, partial_derivative(g, 1))
        assert (lhs - rhs).max_abs() < 1e-11


class TestTranslate:
    def test_zero_shift_is_identity(self, grid2, rng):
        f = random_band_limited(grid2, 6, rng)
        assert (translate(f, [0.0, 0.0]) - f).max_abs() == 0.0

    def test_plane_wave_phase(self, grid2):
        f = plane_wave(grid2, (2, -1))
        delta = [0.3, 0.7]
        got = translate(f, delta)
        assert np.abs(got.values - np.exp(1j * (2 * 0.3 - 1 * 0.7)) * f.values).max() < 1e-13

    def test_integral_preserved(self, grid2, rng):
        f = random_band_limited(grid2, 8, rng, real=False)
        assert abs(integrate(translate(f, [0.21, -1.3])) - integrate(f)) < 1e-12

    def test_real_preserved(self, grid2, rng):
        f = random_band_limited(grid2, 4, rng)
        t = translate(f, [0.5, 0.1])
        assert t.real and t.max_imag() < 1e-12


class TestViews:
    def test_fourier_round_trip(self, grid2, rng):
        f = random_band_limited(grid2, 10, rng, real=False)
        back = ScalarField(grid2, values=f.values.copy())
        assert np.abs(back.modes - f.modes).max() < 1e-12

    def test_values_immutable(self, grid2):
        f = plane_wave(grid2, (1, 1))
        with pytest.raises(ValueError):
            f.values[0, 0] = 0.0

    def test_dealiased_product_matches_pointwise_in_band(self, grid2, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        p = multiply(f, g)
        assert not p.overflow
        assert np.abs(p.values - f.values * g.values).max() < 1e-13

    def test_product_overflow_flagged(self, grid2, rng):
        f = random_band_limited(grid2, 12, rng)
        g = random_band_limited(grid2, 12, rng)
        assert multiply(f, g).overflow

    def test_grid_mismatch_rejected(self, grid2, grid3):
        with pytest.raises(ValueError):
            multiply(constant_field(grid2), constant_field(grid3))


class TestCsv:
    def test_field_round_trip(self, tmp_path, rng):
        grid = GridSpec.square(2, 8)
        f = random_band_limited(grid, 2, rng)
        path = tmp_path / "field.csv"
        dump_field_csv(f, path)
        header = path.read_text().splitlines()[0]
        assert header == "axis0,axis1,re,im"
        back = load_field_csv(grid, path)
        assert (back - f).max_abs() < 1e-15

    def test_mode_dump_columns(self, tmp_path):
        grid = GridSpec.square(2, 8)
        f = plane_wave(grid, (1, 0))
        path = tmp_path / "modes.csv"
        dump_modes_csv(f, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "m0,m1,re,im"
        assert len(lines) == 1 + grid.site_count

    def test_row_count_validated(self, tmp_path):
        grid = GridSpec.square(2, 8)
        path = tmp_path / "short.csv"
        path.write_text("axis0,axis1,re,im\n0.0,0.0,1.0,0.0\n")
        with pytest.raises(ValueError, match="rows"):
            load_field_csv(grid, path)
