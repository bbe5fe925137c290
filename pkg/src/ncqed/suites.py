"""Verification suites run against a scenario.

Each suite measures a family of identities and returns one record per
check: a name, a stable anchor naming the claim being exercised, the
measured value, the tolerance it was held to, and the verdict.  Records
whose tolerance is ``None`` are measurements that are reported rather
than asserted (fitted constants, constancy residuals).

Suites draw their randomness from a seed sequence derived from the
scenario seed and the suite name, so a scenario reproduces its report
byte for byte.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field

import numpy as np

from . import dynamics, geometry, ordering
from .gaugefield import (
    GaugeField,
    field_strength,
    gauge_transform_infinitesimal,
    raise_indices,
    random_gauge_field,
)
from .lattice import (
    GridSpec,
    ScalarField,
    constant_field,
    integrate,
    make_field,
    multiply,
    partial_derivative,
    plane_wave,
    random_band_limited,
    translate,
    zeros_field,
)
from .staralg import (
    DeltaShift,
    PolyField,
    StarCache,
    ThetaMatrix,
    deformed_star,
    star_chain,
    star_commutator,
    star_poly,
    star_spectral,
    star_truncated,
)

__all__ = ["Check", "SuiteContext", "SUITES", "run_suite"]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    anchor: str
    value: float
    tol: float | None
    passed: bool

    @classmethod
    def against(cls, suite: str, name: str, anchor: str, value: float,
                tol: float) -> "Check":
        return cls(suite, name, anchor, float(value), float(tol),
                   bool(value <= tol))

    @classmethod
    def report_only(cls, suite: str, name: str, anchor: str,
                    value: float) -> "Check":
        return cls(suite, name, anchor, float(value), None, True)


@dataclass
class SuiteContext:
    """Resolved scenario state shared by the suites."""

    grid: GridSpec
    theta: ThetaMatrix
    theta_case: str
    metric_preset: str
    metric_epsilon: float
    metric_wave: tuple[int, ...] | None
    manual_delta: np.ndarray
    coupling: float
    seed: int
    tolerances: dict
    artifacts: dict[str, ScalarField] = field(default_factory=dict)
    _bundles: dict = field(default_factory=dict)

    def rng(self, label: str) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.seed, _stable_hash(label)]))

    def bundle(self) -> geometry.MetricBundle:
        key = ("scenario",)
        if key not in self._bundles:
            self._bundles[key] = geometry.build_metric(
                self.metric_preset, self.grid, epsilon=self.metric_epsilon,
                wave=self.metric_wave)
        return self._bundles[key]

    def flat_bundle(self) -> geometry.MetricBundle:
        key = ("flat",)
        if key not in self._bundles:
            self._bundles[key] = geometry.build_metric("minkowski", self.grid)
        return self._bundles[key]

    def conformal_bundle(self) -> geometry.MetricBundle:
        """Reference curved bundle, independent of the scenario preset."""
        if self.metric_preset == "conformal":
            return self.bundle()
        key = ("conformal-ref",)
        if key not in self._bundles:
            self._bundles[key] = geometry.build_metric(
                "conformal", self.grid, epsilon=0.01,
                wave=(0,) * (self.grid.d - 1) + (1,))
        return self._bundles[key]

    @property
    def theta_ss(self) -> ThetaMatrix:
        return self.theta.space_space_part()

    @property
    def probe_cutoff(self) -> int:
        return max(1, min(self.grid.n) // 16)

    @property
    def field_cutoff(self) -> int:
        return max(1, min(self.grid.n) // 8)


def _stable_hash(label: str) -> int:
    h = 0
    for ch in label.encode():
        h = (h * 131 + ch) % (2 ** 31 - 1)
    return h


def _nonzero_theta(ctx: SuiteContext) -> ThetaMatrix:
    if not ctx.theta.is_zero:
        return ctx.theta
    return ThetaMatrix.from_pairs(ctx.grid.d, {(0, 1): 0.1})


# -- identities -------------------------------------------------------------


def identities_suite(ctx: SuiteContext) -> list[Check]:
    checks: list[Check] = []
    grid, theta = ctx.grid, ctx.theta
    tol_trace = ctx.tolerances["trace"]
    tol_assoc = ctx.tolerances["associativity"]
    rng = ctx.rng("identities")
    cut = ctx.field_cutoff

    worst_trace = 0.0
    worst_cyclic = 0.0
    worst_revconj = 0.0
    worst_assoc = 0.0
    worst_herm = 0.0
    for _ in range(20):
        f = random_band_limited(grid, cut, rng)
        g = random_band_limited(grid, cut, rng)
        h = random_band_limited(grid, cut, rng)
        worst_trace = max(worst_trace, abs(
            integrate(star_spectral(f, g, theta)) - integrate(multiply(f, g))))
        i_fgh = integrate(star_chain([f, g, h], theta))
        i_ghf = integrate(star_chain([g, h, f], theta))
        i_hfg = integrate(star_chain([h, f, g], theta))
        i_hgf = integrate(star_chain([h, g, f], theta))
        worst_cyclic = max(worst_cyclic, abs(i_fgh - i_ghf), abs(i_fgh - i_hfg))
        worst_revconj = max(worst_revconj, abs(i_hgf - i_fgh.conjugate()))
        lhs = star_spectral(star_spectral(f, g, theta), h, theta)
        rhs = star_spectral(f, star_spectral(g, h, theta), theta)
        worst_assoc = max(worst_assoc, (lhs - rhs).max_abs())
        ca = star_spectral(f, g, theta).conj()
        cb = star_spectral(g.conj(), f.conj(), theta)
        worst_herm = max(worst_herm, (ca - cb).max_abs())
    checks.append(Check.against("identities", "trace_20_random_pairs",
                                "trace-property", worst_trace, tol_trace))
    checks.append(Check.against("identities", "cyclic_rotations_20_triples",
                                "cyclic-integral-invariance", worst_cyclic,
                                tol_trace))
    checks.append(Check.against("identities", "reversal_conjugation_20_triples",
                                "reversal-conjugation", worst_revconj, tol_trace))
    checks.append(Check.against("identities", "associativity_20_triples",
                                "star-associativity", worst_assoc, tol_assoc))
    checks.append(Check.against("identities", "hermiticity_20_pairs",
                                "star-hermiticity", worst_herm, 1e-12))

    f = random_band_limited(grid, cut, rng)
    g = random_band_limited(grid, cut, rng)
    z = star_spectral(f, g, ThetaMatrix.zero(grid.d))
    checks.append(Check.against(
        "identities", "zero_theta_pointwise_reduction",
        "commutative-limit",
        float(np.abs(z.values - f.values * g.values).max()), 1e-12))
    c = constant_field(grid, 1.7 - 0.4j)
    worst = ((star_spectral(c, g, theta) - g * (1.7 - 0.4j)).max_abs())
    checks.append(Check.against("identities", "constant_operand_absorbed",
                                "constant-absorption", worst, 1e-13))

    checks.append(_plane_wave_phase_check(ctx, "identities"))
    checks.extend(_backend_checks(ctx))
    checks.extend(_scaling_checks(ctx))
    return checks


def _plane_wave_phase_check(ctx: SuiteContext, suite: str) -> Check:
    grid, theta = ctx.grid, ctx.theta
    base = [(1, 0), (0, 1), (1, 1), (2, 1), (1, -2)]
    kf = grid.k_factors()
    worst = 0.0
    for mk in base:
        for mq in base:
            k = _embed(mk, grid.d)
            q = _embed(mq, grid.d)
            kp = np.asarray(k) * kf
            qp = np.asarray(q) * kf
            phase = cmath.exp(-0.5j * float(kp @ theta.entries @ qp))
            got = star_spectral(plane_wave(grid, k), plane_wave(grid, q), theta)
            want = plane_wave(grid, tuple(np.add(k, q))).values * phase
            worst = max(worst, float(np.abs(got.values - want).max()))
    return Check.against(suite, "plane_wave_phase_5x5", "plane-wave-phase",
                         worst, 1e-12)


def _embed(mode, d):
    return tuple(list(mode) + [0] * (d - len(mode)))


def _backend_checks(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid = ctx.grid
    theta = _nonzero_theta(ctx)
    mu, nu, tau = theta.planes()[0]
    x_mu = PolyField.coordinate(grid.d, mu)
    x_nu = PolyField.coordinate(grid.d, nu)
    comm = star_poly(x_mu, x_nu, theta) - star_poly(x_nu, x_mu, theta)
    want = PolyField.const(grid.d, 1j * tau)
    defect = max(abs(comm.coeffs.get(k, 0.0) - want.coeffs.get(k, 0.0))
                 for k in set(comm.coeffs) | set(want.coeffs))
    checks.append(Check.against("identities", "coordinate_commutator_exact",
                                "poly-coordinate-commutator", defect, 1e-14))

    p = x_mu * x_mu + 2.0 * x_nu
    q = x_nu * x_mu - 3.0
    exact = star_poly(p, q, theta)
    trunc = star_truncated(p, q, theta, order=p.total_degree + q.total_degree)
    diff = (exact.sample(grid) - trunc.sample(grid)).max_abs()
    checks.append(Check.against("identities", "poly_vs_truncated_sampled",
                                "backend-agreement", diff,
                                ctx.tolerances["trace"]))

    f = make_field(grid, [(_embed((1, 0), grid.d), 0.8),
                          (_embed((-1, 0), grid.d), 0.8),
                          (_embed((0, 2), grid.d), 0.3 + 0.1j),
                          (_embed((0, -2), grid.d), 0.3 - 0.1j)])
    g = make_field(grid, [(_embed((0, 1), grid.d), 1.1),
                          (_embed((0, -1), grid.d), 1.1),
                          (_embed((2, 1), grid.d), -0.4j),
                          (_embed((-2, -1), grid.d), 0.4j)])
    got = star_spectral(f, g, theta)
    want = _analytic_trig_star(f, g, theta)
    checks.append(Check.against("identities", "spectral_vs_analytic_trig",
                                "backend-agreement",
                                float(np.abs(got.values - want).max()),
                                ctx.tolerances["trace"]))
    return checks


def _analytic_trig_star(f: ScalarField, g: ScalarField,
                        theta: ThetaMatrix) -> np.ndarray:
    """Plane-wave-by-plane-wave product via the analytic phase, scalar math."""
    grid = f.grid
    kf = grid.k_factors()
    fi, fc = f.sparse_modes()
    gi, gc = g.sparse_modes()
    coords = grid.coordinates()
    out = np.zeros(grid.shape, dtype=np.complex128)
    for (mk, ck) in zip(fi, fc):
        for (mq, cq) in zip(gi, gc):
            kp = mk * kf
            qp = mq * kf
            phase = cmath.exp(-0.5j * float(kp @ theta.entries @ qp))
            wave = np.zeros(grid.shape, dtype=np.complex128)
            arg = sum((kp[m] + qp[m]) * coords[m] for m in range(grid.d))
            wave = np.exp(1j * arg)
            out += ck * cq * phase * wave
    return out


def _scaling_checks(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid = ctx.grid
    base = _nonzero_theta(ctx)
    rng = ctx.rng("identities-scaling")
    cut = max(1, min(grid.n) // 10)
    f = random_band_limited(grid, cut, rng)
    g = random_band_limited(grid, cut, rng)
    for order in (0, 1, 2):
        errs = []
        for scale in (1.0, 0.5):
            th = ThetaMatrix(base.entries * scale)
            e = (star_truncated(f, g, th, order) - star_spectral(f, g, th)).max_abs()
            errs.append(e)
        exponent = float(np.log(errs[0] / errs[1]) / np.log(2.0))
        checks.append(Check.against(
            "identities", f"truncation_order_{order}_exponent",
            "truncation-order-scaling", abs(exponent - (order + 1)), 0.2))
    return checks


# -- ordering ----------------------------------------------------------------


def ordering_suite(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid, theta = ctx.grid, ctx.theta
    tol = ctx.tolerances["trace"]
    rng = ctx.rng("ordering")

    for n in (2, 3, 4):
        cut = 2 if n <= 3 else max(1, min(grid.n) // 16)
        fields = [random_band_limited(grid, cut, rng) for _ in range(n)]
        ops = ordering.OperandList(fields)
        cache = StarCache(theta)
        total = integrate(ordering.symmetric_star(ops, theta, cache))
        worst = max(abs(total - integrate(
            ordering.reduced_symmetric_star(i, ops, theta, cache)))
            for i in range(n))
        checks.append(Check.against(
            "ordering", f"pivot_reduction_n{n}_all_pivots",
            "ordering-pivot-reduction", worst, tol))

    fields5 = [random_band_limited(grid, 1, rng) for _ in range(5)]
    ops5 = ordering.OperandList(fields5)
    cache = StarCache(theta)
    total5 = integrate(ordering.symmetric_star(ops5, theta, cache))
    red5 = integrate(ordering.reduced_symmetric_star(2, ops5, theta, cache))
    checks.append(Check.against("ordering", "pivot_reduction_n5_sampled",
                                "ordering-pivot-reduction",
                                abs(total5 - red5), tol))

    fields = [random_band_limited(grid, 2, rng) for _ in range(3)]
    s1 = ordering.symmetric_star(ordering.OperandList(fields), theta)
    s2 = ordering.symmetric_star(
        ordering.OperandList([fields[2], fields[0], fields[1]]), theta)
    checks.append(Check.against("ordering", "permutation_invariance_bitwise",
                                "ordering-permutation-invariance",
                                float(np.abs(s1.modes - s2.modes).max()), 0.0))
    checks.append(Check.against("ordering", "real_operands_real_output",
                                "ordering-hermiticity", s1.max_imag(), 1e-12))

    checks.extend(_variation_checks(ctx, rng))
    return checks


def _variation_checks(ctx: SuiteContext, rng) -> list[Check]:
    checks = []
    grid, theta = ctx.grid, ctx.theta
    fd_tol = ctx.tolerances["fd_relative"]
    b = random_band_limited(grid, 2, rng)
    c = random_band_limited(grid, 2, rng)
    a = random_band_limited(grid, 2, rng)
    probe = random_band_limited(grid, ctx.probe_cutoff, rng)

    for m, build in ((1, lambda A: [b, c, A]),
                     (2, lambda A: [b, A, A]),
                     (3, lambda A: [A, A, A])):
        labels = ["B", "C"][:3 - m] + ["A"] * m

        def I_of(A):
            return integrate(ordering.symmetric_star(
                ordering.OperandList(build(A), labels=labels), theta)).real

        eps = 1e-4
        fd1 = (I_of(a + probe * eps) - I_of(a + probe * (-eps))) / (2 * eps)
        fd2 = (I_of(a + probe * (eps / 2)) - I_of(a + probe * (-eps / 2))) / eps
        fd = (4 * fd2 - fd1) / 3.0
        coeff = ordering.variation_coefficient(
            ordering.OperandList(build(a), labels=labels), "A", theta)
        ip = integrate(multiply(probe, coeff)).real
        rel = abs(fd - ip) / max(abs(fd), abs(ip), 1e-300)
        checks.append(Check.against(
            "ordering", f"variation_rule_m{m}_vs_fd",
            "ordering-variation-rule", rel, fd_tol))
    return checks


# -- geometry ----------------------------------------------------------------


def geometry_suite(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid = ctx.grid
    d = grid.d
    theta = _nonzero_theta(ctx)
    flat = ctx.flat_bundle()

    worst = max(flat.riem[m][a][al][be].max_abs()
                for m in range(d) for a in range(d)
                for al in range(d) for be in range(d))
    checks.append(Check.against("geometry", "flat_riemann_zero",
                                "flat-curvature-vanishes", worst, 0.0))
    ds_flat = geometry.delta_shift(flat, theta)
    checks.append(Check.against("geometry", "flat_shift_zero",
                                "flat-curvature-vanishes",
                                float(np.abs(ds_flat.field).max()), 0.0))

    conf = ctx.conformal_bundle()
    gv = conf.g_values()
    iv = np.stack([np.stack([conf.ginv[m][n].values for n in range(d)])
                   for m in range(d)])
    prod = np.einsum("mk...,kn...->mn...", gv, iv)
    ident = np.einsum("mn,...->mn...", np.eye(d), np.ones(grid.shape))
    checks.append(Check.against("geometry", "metric_inverse_roundtrip",
                                "metric-inverse-roundtrip",
                                float(np.abs(prod - ident).max()), 1e-10))

    eps = ctx.metric_epsilon if ctx.metric_preset == "conformal" else 0.01
    wave = (ctx.metric_wave if ctx.metric_preset == "conformal"
            else (0,) * (d - 1) + (1,))
    coords = grid.coordinates()
    kf = grid.k_factors()
    arg = sum(wave[m] * kf[m] * coords[m] for m in range(d))
    phi = eps * np.cos(arg)
    checks.append(Check.against(
        "geometry", "conformal_volume_factor",
        "conformal-area-factor",
        float(np.abs(conf.sqrt_mg.values - np.exp(d * phi)).max()), 1e-10))

    if d == 2:
        dphi0 = partial_derivative(
            make_field(grid, lambda *x: phi, real=True), 0).values
        checks.append(Check.against(
            "geometry", "conformal_connection_g000",
            "conformal-connection",
            float(np.abs(conf.gamma[0][0][0].values - dphi0).max()), 1e-8))
        box_phi = (wave[0] * kf[0]) ** 2 * phi - sum(
            (wave[m] * kf[m]) ** 2 for m in range(1, d)) * phi
        closed = -2.0 * np.exp(-2 * phi) * box_phi
        R = geometry.ricci_scalar(conf)
        checks.append(Check.against(
            "geometry", "conformal_ricci_closed_form",
            "conformal-curvature-closed-form",
            float(np.abs(R.values - closed).max()), 1e-6))

    worst = max((conf.riem[m][a][al][be] + conf.riem[m][a][be][al]).max_abs()
                for m in range(d) for a in range(d)
                for al in range(d) for be in range(d))
    checks.append(Check.against("geometry", "riemann_last_pair_antisymmetry",
                                "curvature-antisymmetry", worst, 1e-10))

    worst = 0.0
    for m, a, al, be in itertools.product(range(d), repeat=4):
        cyc = (conf.riem[m][a][al][be] + conf.riem[m][al][be][a]
               + conf.riem[m][be][a][al])
        worst = max(worst, cyc.max_abs())
    checks.append(Check.against("geometry", "riemann_first_bianchi_cyclic",
                                "curvature-cyclic-identity", worst, 1e-8))

    ds = geometry.delta_shift(conf, theta)
    stencil = geometry.delta_shift_stencil(conf, theta)
    checks.append(Check.against("geometry", "shift_vs_stencil_assembly",
                                "shift-stencil-crosscheck",
                                float(np.abs(ds.field - stencil).max()), 1e-8))
    ds2 = geometry.delta_shift(conf, ThetaMatrix(theta.entries * 2.0))
    num = float(np.abs(ds2.field - 4.0 * ds.field).max())
    den = max(float(np.abs(ds2.field).max()), 1e-300)
    checks.append(Check.against("geometry", "shift_quadratic_theta_scaling",
                                "shift-quadratic-scaling", num / den, 1e-6))
    checks.append(Check.report_only("geometry", "shift_constancy_residual",
                                    "shift-constancy", ds.residual))
    return checks


# -- field equations ---------------------------------------------------------


def eom_suite(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid = ctx.grid
    d = grid.d
    fd_tol = ctx.tolerances["fd_relative"]
    rng = ctx.rng("eom")
    flat = ctx.flat_bundle()
    th0 = ThetaMatrix.zero(d)

    A = random_gauge_field(grid, ctx.probe_cutoff, rng, amplitude=0.7,
                           coupling=ctx.coupling)
    res = dynamics.eom_residual_sym(A, flat, th0)
    F = field_strength(A, th0)
    Fup = raise_indices(F, flat)
    worst = 0.0
    for k in range(d):
        div = None
        for m in range(d):
            t = partial_derivative(Fup[k, m], m)
            div = t if div is None else div + t
        worst = max(worst, (res[k] + div).max_abs())
    checks.append(Check.against("eom", "classical_limit_divergence",
                                "classical-limit-eom", worst, 1e-12))

    Anull = _null_wave(grid, ctx.coupling)
    rnull = dynamics.eom_residual_sym(Anull, flat, th0)
    checks.append(Check.against("eom", "null_wave_residual",
                                "null-wave-solution",
                                max(r.max_abs() for r in rnull), 1e-10))

    for case, th, resfn in (
            ("space_space", ctx.theta_ss, dynamics.eom_residual_sym),
            ("time_space", ctx.theta, dynamics.eom_residual_time_space)):
        worst = 0.0
        for idx in range(2):
            Ar = random_gauge_field(grid, ctx.probe_cutoff, rng,
                                    amplitude=0.6, coupling=ctx.coupling)
            probe = random_gauge_field(grid, ctx.probe_cutoff, rng,
                                       amplitude=0.5, coupling=ctx.coupling)
            for bundle in (flat, ctx.bundle()):
                fd = dynamics.fd_action_gradient(Ar, bundle, th, case, probe)
                ip = dynamics.residual_probe_pairing(
                    resfn(Ar, bundle, th), probe)
                rel = abs(fd.value - ip) / max(abs(fd.value), abs(ip), 1e-300)
                worst = max(worst, rel)
        checks.append(Check.against(
            "eom", f"variational_consistency_{case}",
            f"variational-consistency-{case.replace('_', '-')}",
            worst, fd_tol))

    th_ss = ctx.theta_ss
    sf = dynamics.script_F(A, flat, th_ss)
    worst = max((sf[k][m] + sf[m][k]).max_abs()
                for k in range(d) for m in range(d))
    checks.append(Check.against("eom", "dressed_strength_antisymmetry",
                                "dressed-strength-antisymmetry", worst, 1e-10))

    r_sym = dynamics.eom_residual_sym(A, flat, th_ss)
    r_scr = dynamics.eom_residual_scriptF(A, flat, th_ss)
    c, dev = _fit_ratio(r_scr, r_sym)
    checks.append(Check.against("eom", "form_ratio_flat_deviation",
                                "eom-form-ratio", dev, 1e-6))
    checks.append(Check.report_only("eom", "form_ratio_flat_fitted",
                                    "eom-form-ratio", c.real))
    curved = ctx.bundle()
    if curved.preset != "minkowski" and not th_ss.is_zero:
        r_sym = dynamics.eom_residual_sym(A, curved, th_ss)
        r_scr = dynamics.eom_residual_scriptF(A, curved, th_ss)
        c, dev = _fit_ratio(r_scr, r_sym)
        checks.append(Check.report_only("eom", "form_ratio_curved_fitted",
                                        "eom-form-ratio", c.real))
        checks.append(Check.report_only("eom", "form_ratio_curved_deviation",
                                        "eom-form-ratio", dev))

    lam = random_band_limited(grid, 1, rng, amplitude=1.0)
    lam = lam * (1e-3 / max(lam.max_abs(), 1e-300))
    lam = ScalarField(grid, modes=lam.modes, real=True)
    Abig = random_gauge_field(grid, ctx.probe_cutoff, rng, amplitude=2.0,
                              coupling=ctx.coupling)
    th_cov = _nonzero_theta(ctx)
    Fb = field_strength(Abig, th_cov)
    At = gauge_transform_infinitesimal(Abig, lam, th_cov)
    worst = 0.0
    for mu in range(d):
        for nu in range(mu + 1, d):
            dF = field_strength(At, th_cov)[mu, nu] - Fb[mu, nu]
            lin = star_commutator(Fb[mu, nu], lam, th_cov) * (-1j * Abig.coupling)
            scale = max(lin.max_abs(), 1e-300)
            worst = max(worst, (dF - lin).max_abs() / scale)
    checks.append(Check.against("eom", "gauge_covariance_first_order",
                                "gauge-covariance", worst, 1e-3))

    ctx.artifacts.update({f"eom_residual_{k}": res[k] for k in range(d)})
    return checks


def _null_wave(grid: GridSpec, coupling: float) -> GaugeField:
    d = grid.d
    if d == 2:
        k = (1, 1)
        pol = (0.2, 0.2)
    else:
        k = (1, 1) + (0,) * (d - 2)
        pol = (0.0,) * (d - 1) + (0.3,)
    coords = grid.coordinates()
    kf = grid.k_factors()
    arg = sum(k[m] * kf[m] * coords[m] for m in range(d))
    comps = []
    for mu in range(d):
        if pol[mu]:
            comps.append(make_field(grid, lambda *x: pol[mu] * np.cos(arg),
                                    real=True))
        else:
            comps.append(zeros_field(grid))
    return GaugeField(tuple(comps), coupling=coupling)


def _fit_ratio(num: list[ScalarField], den: list[ScalarField]):
    """Least-squares constant c with num ~ c * den, and the relative misfit."""
    top = 0.0 + 0.0j
    bot = 0.0
    for a, b in zip(num, den):
        top += complex(np.vdot(b.values, a.values))
        bot += float(np.vdot(b.values, b.values).real)
    c = top / max(bot, 1e-300)
    worst = 0.0
    scale = max(max(a.max_abs() for a in num), 1e-300)
    for a, b in zip(num, den):
        worst = max(worst, float(np.abs(a.values - c * b.values).max()))
    return c, worst / scale


# -- stress tensors ----------------------------------------------------------


def stress_suite(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid = ctx.grid
    d = grid.d
    rng = ctx.rng("stress")
    flat = ctx.flat_bundle()
    th0 = ThetaMatrix.zero(d)

    worst_sym = {"space_space": 0.0, "time_space": 0.0}
    worst_imag = 0.0
    for idx in range(2):
        A = random_gauge_field(grid, ctx.probe_cutoff, rng, amplitude=0.7,
                               coupling=ctx.coupling)
        for bundle in (flat, ctx.bundle()):
            T_ss = dynamics.stress_space_space(A, bundle, ctx.theta_ss)
            T_ts = dynamics.stress_time_space(A, bundle, ctx.theta)
            worst_sym["space_space"] = max(worst_sym["space_space"],
                                           T_ss.symmetry_defect())
            worst_sym["time_space"] = max(worst_sym["time_space"],
                                          T_ts.symmetry_defect())
            worst_imag = max(worst_imag, T_ss.max_imag(), T_ts.max_imag())
    for case, val in worst_sym.items():
        checks.append(Check.against("stress", f"symmetry_{case}",
                                    "stress-symmetry", val, 1e-10))
    checks.append(Check.against("stress", "reality_residue",
                                "stress-reality", worst_imag, 1e-10))

    A = random_gauge_field(grid, ctx.probe_cutoff, rng, amplitude=0.7,
                           coupling=ctx.coupling)
    T_cl = dynamics.classical_stress_values(A, flat)
    worst_ss = worst_ts = 0.0
    T_ss = dynamics.stress_space_space(A, flat, th0)
    T_ts = dynamics.stress_time_space(A, flat, th0)
    for l in range(d):
        for k in range(d):
            worst_ss = max(worst_ss, float(
                np.abs(T_ss[l, k].values - T_cl[l, k]).max()))
            worst_ts = max(worst_ts, float(
                np.abs(T_ts[l, k].values - T_cl[l, k]).max()))
    checks.append(Check.against("stress", "classical_limit_space_space",
                                "stress-classical-limit", worst_ss, 1e-12))
    checks.append(Check.against("stress", "classical_limit_time_space",
                                "stress-classical-limit", worst_ts, 1e-12))
    top = sum(float(np.vdot(T_cl[l, k], T_ts[l, k].values).real)
              for l in range(d) for k in range(d))
    bot = sum(float(np.vdot(T_cl[l, k], T_cl[l, k]).real)
              for l in range(d) for k in range(d))
    checks.append(Check.report_only("stress", "classical_prefactor_fitted",
                                    "stress-classical-limit",
                                    top / max(bot, 1e-300)))

    curved = ctx.bundle()
    Tc_ss = dynamics.stress_space_space(A, curved, th0)
    Tc_ts = dynamics.stress_time_space(A, curved, th0)
    agree = max((Tc_ss[l, k] - Tc_ts[l, k]).max_abs()
                for l in range(d) for k in range(d))
    checks.append(Check.against("stress", "case_agreement_theta_zero",
                                "stress-case-agreement", agree, 1e-10))

    checks.extend(_measure_variation_checks(ctx, rng))

    T_dump = dynamics.stress_time_space(A, curved, ctx.theta)
    ctx.artifacts.update({f"stress_T{l}{k}": T_dump[l, k]
                          for l in range(d) for k in range(d)})
    return checks


def _measure_variation_checks(ctx: SuiteContext, rng) -> list[Check]:
    checks = []
    grid = ctx.grid
    d = grid.d
    flat = ctx.flat_bundle()
    theta = _nonzero_theta(ctx)
    zero = zeros_field(grid)
    eps = 1e-3
    bump = make_field(grid, lambda *x: eps * np.cos(x[1]) + 0.0 * x[0],
                      real=True)

    dg_up = np.full((d, d), zero, dtype=object)
    dg_up[0][0] = bump
    got = dynamics.delta_sqrt_g_variation(flat, dg_up, theta, variance="upper")
    eta = flat.eta()
    gp = np.einsum("mn,...->mn...", eta, np.ones(grid.shape, dtype=complex))
    gp[0, 0] = eta[0, 0] - bump.values  # lowered perturbation of g_{00}
    mats = np.moveaxis(gp, (0, 1), (-2, -1))
    oracle = np.sqrt(-np.linalg.det(mats)) - 1.0
    checks.append(Check.against("stress", "measure_variation_first_order",
                                "measure-variation-oracle",
                                float(np.abs(got.values - oracle).max()),
                                10.0 * eps ** 2))

    conf = ctx.conformal_bundle()
    th_small = ThetaMatrix(theta.entries * (0.01 / max(theta.magnitude, 1e-300)))
    cross = make_field(grid, lambda *x: 1e-2 * np.cos(x[0]) + 0.0 * x[1],
                       real=True)
    dg_up = np.full((d, d), zero, dtype=object)
    dg_up[0][0] = cross
    dg_low = np.empty((d, d), dtype=object)
    for m in range(d):
        for n in range(d):
            acc = None
            for a in range(d):
                for b in range(d):
                    t = multiply(multiply(conf.g[m][a], conf.g[n][b]),
                                 dg_up[a][b])
                    acc = t if acc is None else acc + t
            dg_low[m][n] = acc * (-1.0)
    up = dynamics.delta_sqrt_g_variation(conf, dg_up, th_small, variance="upper")
    lo = dynamics.delta_sqrt_g_variation(conf, dg_low, th_small, variance="lower")
    checks.append(Check.against("stress", "measure_variation_index_identity",
                                "measure-variation-index-identity",
                                (up - lo).max_abs(), 1e-8))
    return checks


# -- shifted star product ----------------------------------------------------


def deformed_suite(ctx: SuiteContext) -> list[Check]:
    checks = []
    grid, theta = ctx.grid, ctx.theta
    tol = ctx.tolerances["trace"]
    rng = ctx.rng("deformed")
    manual = DeltaShift.constant_shift(ctx.manual_delta)

    worst = 0.0
    for _ in range(5):
        f = random_band_limited(grid, ctx.field_cutoff, rng)
        g = random_band_limited(grid, ctx.field_cutoff, rng)
        worst = max(worst, abs(integrate(deformed_star(f, g, theta, manual))
                               - integrate(star_spectral(f, g, theta))))
    checks.append(Check.against("deformed", "integral_equality_manual_shift",
                                "shifted-product-integral", worst, tol))

    flat_shift = geometry.delta_shift(ctx.flat_bundle(), theta)
    f = random_band_limited(grid, ctx.field_cutoff, rng)
    g = random_band_limited(grid, ctx.field_cutoff, rng)
    got = deformed_star(f, g, theta, flat_shift)
    checks.append(Check.against("deformed", "flat_metric_zero_shift",
                                "shifted-product-integral",
                                (got - star_spectral(f, g, theta)).max_abs(),
                                1e-12))

    k = _embed((1, 0), grid.d)
    q = _embed((0, 1), grid.d)
    kf = grid.k_factors()
    phase = cmath.exp(1j * float(np.add(np.asarray(k) * kf,
                                        np.asarray(q) * kf) @ manual.vector))
    got = deformed_star(plane_wave(grid, k), plane_wave(grid, q), theta, manual)
    want = star_spectral(plane_wave(grid, k), plane_wave(grid, q), theta)
    checks.append(Check.against("deformed", "plane_wave_translation_phase",
                                "shifted-plane-wave-phase",
                                float(np.abs(got.values - want.values * phase).max()),
                                1e-12))

    checks.append(_shifted_action_check(ctx, manual))
    return checks


def _shifted_action_check(ctx: SuiteContext, shift: DeltaShift) -> Check:
    """Action with every ingredient translated by the constant shift.

    Star chains of uniformly translated operands are the translation of
    the chain, so the integral must not move.
    """
    rng = ctx.rng("deformed-action")
    A = random_gauge_field(ctx.grid, ctx.probe_cutoff, rng, amplitude=0.6,
                           coupling=ctx.coupling)
    bundle = ctx.bundle()
    th = ctx.theta_ss
    base = dynamics.action(A, bundle, th, "space_space").value
    A_sh = GaugeField(tuple(_as_real(translate(A[mu], shift.vector))
                            for mu in range(ctx.grid.d)),
                      coupling=ctx.coupling)
    bundle_sh = _translate_bundle(bundle, shift.vector)
    shifted = dynamics.action(A_sh, bundle_sh, th, "space_space").value
    scale = max(abs(base), 1.0)
    return Check.against("deformed", "shifted_action_integral",
                         "shifted-action-integral",
                         abs(shifted - base) / scale,
                         ctx.tolerances["trace"])


def _as_real(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, modes=f.modes, real=True, overflow=f.overflow)


def _translate_bundle(bundle: geometry.MetricBundle, vec) -> geometry.MetricBundle:
    d = bundle.grid.d
    g = np.empty((d, d), dtype=object)
    gi = np.empty((d, d), dtype=object)
    for m in range(d):
        for n in range(d):
            g[m][n] = translate(bundle.g[m][n], vec)
            gi[m][n] = translate(bundle.ginv[m][n], vec)
    from dataclasses import replace
    return replace(bundle, g=g, ginv=gi,
                   sqrt_mg=translate(bundle.sqrt_mg, vec),
                   gamma=None, riem=None)


SUITES = {
    "identities": identities_suite,
    "ordering": ordering_suite,
    "geometry": geometry_suite,
    "eom": eom_suite,
    "stress": stress_suite,
    "deformed": deformed_suite,
}


def run_suite(name: str, ctx: SuiteContext) -> list[Check]:
    return SUITES[name](ctx)
