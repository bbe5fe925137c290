import cmath

import numpy as np
import pytest

from ncqed.lattice import (
    GridSpec,
    constant_field,
    integrate,
    make_field,
    multiply,
    plane_wave,
    random_band_limited,
)
from ncqed.staralg import (
    DeltaShift,
    PolyField,
    ThetaMatrix,
    _star_dense_plane,
    _star_sparse,
    deformed_star,
    star_anticommutator,
    star_chain,
    star_commutator,
    star_poly,
    star_spectral,
    star_truncated,
)


class TestThetaMatrix:
    def test_antisymmetry_enforced(self):
        with pytest.raises(ValueError):
            ThetaMatrix(np.array([[0.0, 0.1], [0.1, 0.0]]))

    def test_flags(self):
        th = ThetaMatrix.from_pairs(3, {(1, 2): 0.2})
        assert th.is_space_space and not th.is_zero
        assert th.magnitude == pytest.approx(0.2)
        th2 = ThetaMatrix.from_pairs(3, {(0, 1): 0.1, (1, 2): 0.2})
        assert not th2.is_space_space
        assert th2.space_space_part().planes() == [(1, 2, 0.2)]

    def test_planes(self, theta01):
        assert theta01.planes() == [(0, 1, 0.1)]


class TestStarSpectral:
    def test_plane_wave_phase_instance(self, grid2, theta01):
        # theta^{mn} k_m q_n = 0.1 for k=(1,0), q=(0,1) => phase exp(-0.05i)
        f = plane_wave(grid2, (1, 0))
        g = plane_wave(grid2, (0, 1))
        got = star_spectral(f, g, theta01)
        want = np.exp(-0.05j) * plane_wave(grid2, (1, 1)).values
        assert np.abs(got.values - want).max() < 1e-12

    def test_zero_theta_is_pointwise(self, grid2, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        p = star_spectral(f, g, ThetaMatrix.zero(2))
        assert np.abs(p.values - f.values * g.values).max() < 1e-12

    def test_constant_operand_exact(self, grid2, theta01, rng):
        g = random_band_limited(grid2, 5, rng)
        c = constant_field(grid2, 2.0 - 1.0j)
        left = star_spectral(c, g, theta01)
        right = star_spectral(g, c, theta01)
        assert (left - g * (2.0 - 1.0j)).max_abs() < 1e-13
        assert (right - g * (2.0 - 1.0j)).max_abs() < 1e-13

    def test_grid_mismatch_rejected(self, grid2, grid3, theta01):
        with pytest.raises(ValueError):
            star_spectral(constant_field(grid2), constant_field(grid3), theta01)
        with pytest.raises(ValueError):
            star_spectral(constant_field(grid3), constant_field(grid3), theta01)

    def test_bandwidth_overflow_flagged(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 12, rng)
        g = random_band_limited(grid2, 12, rng)
        assert star_spectral(f, g, theta01).overflow

    def test_trace_property(self, grid2, theta01, rng):
        worst = 0.0
        for _ in range(5):
            f = random_band_limited(grid2, 6, rng)
            g = random_band_limited(grid2, 6, rng)
            worst = max(worst, abs(integrate(star_spectral(f, g, theta01))
                                   - integrate(multiply(f, g))))
        assert worst < 1e-10

    def test_hermiticity(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 5, rng, real=False)
        g = random_band_limited(grid2, 5, rng, real=False)
        lhs = star_spectral(f, g, theta01).conj()
        rhs = star_spectral(g.conj(), f.conj(), theta01)
        assert (lhs - rhs).max_abs() < 1e-12

    def test_dense_and_sparse_paths_agree(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 7, rng, real=False)
        g = random_band_limited(grid2, 6, rng, real=False)
        a = _star_sparse(f, g, theta01)
        b = _star_dense_plane(f, g, theta01, theta01.planes()[0])
        assert np.abs(a.modes - b.modes).max() < 1e-13

    def test_dense_path_3d_spectators(self, grid3, theta12_3d, rng):
        f = random_band_limited(grid3, 2, rng, real=False)
        g = random_band_limited(grid3, 2, rng, real=False)
        a = _star_sparse(f, g, theta12_3d)
        b = _star_dense_plane(f, g, theta12_3d, theta12_3d.planes()[0])
        assert np.abs(a.modes - b.modes).max() < 1e-13

    def test_multi_plane_theta(self, grid3, rng):
        th = ThetaMatrix.from_pairs(3, {(0, 1): 0.07, (1, 2): 0.05})
        f = plane_wave(grid3, (1, 1, 0))
        g = plane_wave(grid3, (0, 1, 1))
        kf = grid3.k_factors()
        k = np.array([1, 1, 0]) * kf
        q = np.array([0, 1, 1]) * kf
        phase = cmath.exp(-0.5j * float(k @ th.entries @ q))
        got = star_spectral(f, g, th)
        want = plane_wave(grid3, (1, 2, 1)).values * phase
        assert np.abs(got.values - want).max() < 1e-12


class TestCommutators:
    def test_self_commutator_vanishes(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 5, rng)
        assert star_commutator(f, f, theta01).max_abs() < 1e-12

    def test_plane_wave_commutator(self, grid2, theta01):
        # [e^{ikx}, e^{iqx}]_* = -2i sin(phi) e^{i(k+q)x}, phi = theta k q / 2
        f = plane_wave(grid2, (1, 0))
        g = plane_wave(grid2, (0, 1))
        got = star_commutator(f, g, theta01)
        want = -2j * np.sin(0.05) * plane_wave(grid2, (1, 1)).values
        assert np.abs(got.values - want).max() < 1e-13

    def test_zero_theta(self, grid2, rng):
        th0 = ThetaMatrix.zero(2)
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        assert star_commutator(f, g, th0).max_abs() < 1e-13
        anti = star_anticommutator(f, g, th0)
        assert np.abs(anti.values - 2 * f.values * g.values).max() < 1e-12

    def test_anticommutator_of_reals_is_real(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        anti = star_anticommutator(f, g, theta01)
        assert anti.real and anti.max_imag() < 1e-13


class TestStarTruncated:
    def test_order_zero_is_pointwise(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        t0 = star_truncated(f, g, theta01, 0)
        assert np.abs(t0.values - f.values * g.values).max() < 1e-13

    def test_plane_wave_order2_remainder(self, grid2, theta01):
        # Taylor remainder of the phase: |exp(-0.05i) - (1 - 0.05i - 0.00125)|
        f = plane_wave(grid2, (1, 0))
        g = plane_wave(grid2, (0, 1))
        err = (star_truncated(f, g, theta01, 2)
               - star_spectral(f, g, theta01)).max_abs()
        analytic = abs(cmath.exp(-0.05j) - (1 - 0.05j - 0.00125))
        assert err == pytest.approx(analytic, rel=1e-6)
        assert err == pytest.approx(2.08e-5, rel=2e-3)

    def test_halving_theta_quarters_order1_error(self, grid2, rng):
        f = random_band_limited(grid2, 3, rng)
        g = random_band_limited(grid2, 3, rng)
        errs = []
        for tv in (0.1, 0.05, 0.025):
            th = ThetaMatrix.from_pairs(2, {(0, 1): tv})
            errs.append((star_truncated(f, g, th, 1)
                         - star_spectral(f, g, th)).max_abs())
        assert 3.5 < errs[0] / errs[1] < 4.5
        assert 3.5 < errs[1] / errs[2] < 4.5

    def test_order_scaling_exponents(self, grid2, rng):
        f = random_band_limited(grid2, 3, rng)
        g = random_band_limited(grid2, 3, rng)
        for order in (0, 1, 2):
            errs = []
            for tv in (0.1, 0.05):
                th = ThetaMatrix.from_pairs(2, {(0, 1): tv})
                errs.append((star_truncated(f, g, th, order)
                             - star_spectral(f, g, th)).max_abs())
            exponent = np.log(errs[0] / errs[1]) / np.log(2.0)
            assert abs(exponent - (order + 1)) < 0.2


class TestPolyBackend:
    def test_coordinate_commutator(self, theta01):
        x0 = PolyField.coordinate(2, 0)
        x1 = PolyField.coordinate(2, 1)
        comm = star_poly(x0, x1, theta01) - star_poly(x1, x0, theta01)
        assert set(comm.coeffs) == {(0, 0)}
        assert comm.coeffs[(0, 0)] == pytest.approx(0.1j, abs=1e-15)

    def test_same_coordinate_squares(self, theta01):
        x0 = PolyField.coordinate(2, 0)
        sq = star_poly(x0, x0, theta01)
        assert sq.coeffs == {(2, 0): pytest.approx(1.0 + 0j)}

    def test_symmetrized_product_is_pointwise(self, theta01):
        x0 = PolyField.coordinate(2, 0)
        x1 = PolyField.coordinate(2, 1)
        sym = (star_poly(x0, x1, theta01) + star_poly(x1, x0, theta01)) * 0.5
        assert sym.allclose(x0 * x1, 1e-15)

    def test_truncated_series_terminates_on_polys(self, grid2, theta01):
        x0 = PolyField.coordinate(2, 0)
        x1 = PolyField.coordinate(2, 1)
        p = x0 * x0 + 2.0 * x1
        q = x1 * x0 - 3.0
        exact = star_poly(p, q, theta01)
        trunc = star_truncated(p, q, theta01,
                               order=p.total_degree + q.total_degree)
        assert exact.allclose(trunc, 1e-14)
        sampled = (exact.sample(grid2) - trunc.sample(grid2)).max_abs()
        assert sampled < 1e-10

    def test_degree_cap_enforced(self, theta01):
        x0 = PolyField.coordinate(2, 0)
        big = x0
        for _ in range(8):
            big = big * x0  # degree 9
        with pytest.raises(ValueError, match="cap"):
            star_poly(big, big, theta01)

    def test_spectral_agrees_with_analytic_on_trig(self, grid2, theta01):
        f = make_field(grid2, [((1, 0), 0.8), ((-1, 0), 0.8),
                               ((0, 2), 0.3 + 0.1j), ((0, -2), 0.3 - 0.1j)])
        g = make_field(grid2, [((0, 1), 1.1), ((0, -1), 1.1),
                               ((2, 1), -0.4j), ((-2, -1), 0.4j)])
        got = star_spectral(f, g, theta01)
        kf = grid2.k_factors()
        coords = grid2.coordinates()
        want = np.zeros(grid2.shape, dtype=complex)
        fi, fc = f.sparse_modes()
        gi, gc = g.sparse_modes()
        for mk, ck in zip(fi, fc):
            for mq, cq in zip(gi, gc):
                kp, qp = mk * kf, mq * kf
                phase = cmath.exp(-0.5j * float(kp @ theta01.entries @ qp))
                arg = sum((kp[m] + qp[m]) * coords[m] for m in range(2))
                want += ck * cq * phase * np.exp(1j * arg)
        assert np.abs(got.values - want).max() < 1e-10


class TestChainsAndCyclicity:
    def test_single_element(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 4, rng)
        assert star_chain([f], theta01) is f

    def test_empty_rejected(self, theta01):
        with pytest.raises(ValueError):
            star_chain([], theta01)

    def test_associativity(self, grid2, theta01, rng):
        worst = 0.0
        for _ in range(5):
            f = random_band_limited(grid2, 4, rng)
            g = random_band_limited(grid2, 4, rng)
            h = random_band_limited(grid2, 4, rng)
            lhs = star_spectral(star_spectral(f, g, theta01), h, theta01)
            rhs = star_spectral(f, star_spectral(g, h, theta01), theta01)
            worst = max(worst, (lhs - rhs).max_abs())
        assert worst < 1e-10

    def test_cyclic_invariance_of_integral(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        h = random_band_limited(grid2, 4, rng)
        i_fgh = integrate(star_chain([f, g, h], theta01))
        assert abs(i_fgh - integrate(star_chain([g, h, f], theta01))) < 1e-10
        assert abs(i_fgh - integrate(star_chain([h, f, g], theta01))) < 1e-10

    def test_reversal_is_complex_conjugation(self, grid2, theta01, rng):
        """For real fields the reversed chain integrates to the conjugate.

        The two integrals agree exactly when the imaginary part vanishes
        and only then; see the acceptance notes on the literal reversal
        equality.
        """
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        h = random_band_limited(grid2, 4, rng)
        i_fgh = integrate(star_chain([f, g, h], theta01))
        i_hgf = integrate(star_chain([h, g, f], theta01))
        assert abs(i_hgf - i_fgh.conjugate()) < 1e-12

    def test_reversal_with_repeated_endpoint_is_cyclic(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        i1 = integrate(star_chain([f, g, f], theta01))
        i2 = integrate(star_chain([f, g, f][::-1], theta01))
        assert abs(i1 - i2) < 1e-12


class TestDeformedStar:
    def test_zero_shift_is_plain_star(self, grid2, theta01, rng):
        f = random_band_limited(grid2, 4, rng)
        g = random_band_limited(grid2, 4, rng)
        got = deformed_star(f, g, theta01, DeltaShift.zero(2))
        assert (got - star_spectral(f, g, theta01)).max_abs() == 0.0

    def test_integral_equality(self, grid2, theta01, rng):
        shift = DeltaShift.constant_shift([0.01, 0.0])
        worst = 0.0
        for _ in range(5):
            f = random_band_limited(grid2, 5, rng)
            g = random_band_limited(grid2, 5, rng)
            worst = max(worst, abs(
                integrate(deformed_star(f, g, theta01, shift))
                - integrate(star_spectral(f, g, theta01))))
        assert worst < 1e-10

    def test_plane_wave_translation_phase(self, grid2, theta01):
        shift = DeltaShift.constant_shift([0.25, -0.1])
        f = plane_wave(grid2, (1, 0))
        g = plane_wave(grid2, (0, 1))
        got = deformed_star(f, g, theta01, shift)
        phase = np.exp(1j * (1 * 0.25 + 1 * (-0.1)))
        want = star_spectral(f, g, theta01).values * phase
        assert np.abs(got.values - want).max() < 1e-13

    def test_nonconstant_shift_rejected(self, grid2, theta01, rng):
        bad = DeltaShift(vector=np.zeros(2), residual=0.5, constant=False)
        f = random_band_limited(grid2, 4, rng)
        with pytest.raises(ValueError, match="not constant"):
            deformed_star(f, f, theta01, bad)
