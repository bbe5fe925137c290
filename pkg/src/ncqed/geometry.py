"""Background metric machinery on the periodic lattice.

A :class:`MetricBundle` carries the metric, its pointwise inverse,
``sqrt(-det g)``, Christoffel symbols and the Riemann tensor, all as
lattice fields with spectral derivatives.  Presets are periodic by
construction so the spectral calculus stays exact; the flat preset is
built from exact constant modes so curvature vanishes identically, not
just to rounding.

``delta_shift`` assembles the translation vector

    Delta^mu = -(theta^{ab} theta^{alpha beta} / (2 sqrt(-g)))
               d_b R^mu_{a alpha beta}

(the squared-i prefactor in front of the curvature term is evaluated to
-1) and reports how far the result is from constant.  A finite-difference
assembly of the same formula, sharing nothing with the spectral path but
the metric samples, acts as an independent oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .lattice import (
    GridSpec,
    ScalarField,
    constant_field,
    field_from_values,
    multiply,
    partial_derivative,
)
from .staralg import DeltaShift, ThetaMatrix

__all__ = [
    "MetricBundle",
    "build_metric",
    "christoffel",
    "riemann",
    "delta_shift",
    "delta_shift_stencil",
    "ricci_scalar",
]


def _object_array(shape):
    return np.empty(shape, dtype=object)


@dataclass(frozen=True)
class MetricBundle:
    """Metric and derived tensors; read-only after construction.

    ``g``/``ginv``/``gamma``/``riem`` are object arrays of ScalarFields
    indexed as g[mu][nu], gamma[lam][mu][nu], riem[mu][a][al][be].
    """

    grid: GridSpec
    preset: str
    g: np.ndarray
    ginv: np.ndarray
    sqrt_mg: ScalarField
    gamma: np.ndarray | None = None
    riem: np.ndarray | None = None

    def eta(self) -> np.ndarray:
        e = np.eye(self.grid.d)
        e[0, 0] = -1.0
        return e

    def g_values(self) -> np.ndarray:
        d = self.grid.d
        out = np.empty((d, d) + self.grid.shape, dtype=np.complex128)
        for mu in range(d):
            for nu in range(d):
                out[mu, nu] = self.g[mu][nu].values
        return out

    def is_flat(self) -> bool:
        if self.riem is None:
            return False
        d = self.grid.d
        return all(self.riem[m][a][al][be].max_abs() == 0.0
                   for m in range(d) for a in range(d)
                   for al in range(d) for be in range(d))


def _fields_from_value_matrix(grid: GridSpec, vals: np.ndarray) -> np.ndarray:
    d = grid.d
    out = _object_array((d, d))
    for mu in range(d):
        for nu in range(mu, d):
            f = field_from_values(grid, np.ascontiguousarray(vals[mu, nu]))
            out[mu][nu] = f
            out[nu][mu] = f
    return out


def build_metric(preset: str, grid: GridSpec, epsilon: float = 0.0,
                 wave=None, with_curvature: bool = True) -> MetricBundle:
    """Construct a metric bundle from a named preset.

    Presets: ``minkowski``; ``conformal`` with g = exp(2 phi) eta and
    phi = epsilon cos(k.x); ``diag_wave`` perturbing g_{11} by
    epsilon cos(k.x).  The Lorentzian signature is checked at every
    site; a perturbation large enough to flip the determinant sign is
    rejected.
    """
    d = grid.d
    eta = np.eye(d)
    eta[0, 0] = -1.0

    if preset == "minkowski":
        g = _object_array((d, d))
        for mu in range(d):
            for nu in range(mu, d):
                f = constant_field(grid, eta[mu, nu])
                g[mu][nu] = f
                g[nu][mu] = f
        ginv = g  # diag(+-1) is its own inverse
        bundle = MetricBundle(grid=grid, preset=preset, g=g, ginv=ginv,
                              sqrt_mg=constant_field(grid, 1.0))
        if with_curvature:
            bundle = riemann(christoffel(bundle))
        return bundle

    if wave is None:
        wave = (0, 1) if d == 2 else tuple([0] * (d - 1) + [1])
    wave = tuple(int(w) for w in wave)
    if len(wave) != d:
        raise ValueError(f"wave vector must have {d} components")
    coords = grid.coordinates()
    kf = grid.k_factors()
    phase = sum(wave[mu] * kf[mu] * coords[mu] for mu in range(d))
    bump = epsilon * np.cos(phase)

    if preset == "conformal":
        weyl = np.exp(2.0 * bump)
        gvals = np.einsum("mn,...->mn...", eta, np.broadcast_to(weyl, grid.shape))
    elif preset == "diag_wave":
        gvals = np.einsum("mn,...->mn...", eta, np.ones(grid.shape))
        gvals[1, 1] = 1.0 + np.broadcast_to(bump, grid.shape)
    else:
        raise ValueError(f"unknown metric preset {preset!r}")

    mats = np.moveaxis(gvals, (0, 1), (-2, -1))
    det = np.linalg.det(mats)
    if not (det < 0).all():
        bad = np.unravel_index(int(np.argmax(det)), grid.shape)
        raise ValueError(
            f"metric loses Lorentzian signature at site {bad}: det g = "
            f"{det[bad]:+.6e}; reduce epsilon")
    inv = np.moveaxis(np.linalg.inv(mats), (-2, -1), (0, 1))

    g = _fields_from_value_matrix(grid, gvals.astype(np.complex128))
    ginv = _fields_from_value_matrix(grid, inv.astype(np.complex128))
    sqrt_mg = field_from_values(grid, np.sqrt(-det).astype(np.complex128))
    bundle = MetricBundle(grid=grid, preset=preset, g=g, ginv=ginv,
                          sqrt_mg=sqrt_mg)
    if with_curvature:
        bundle = riemann(christoffel(bundle))
    return bundle


def christoffel(bundle: MetricBundle) -> MetricBundle:
    """Levi-Civita connection from spectral metric derivatives."""
    d = bundle.grid.d
    dg = _object_array((d, d, d))  # dg[mu][s][n] = d_mu g_{s n}
    for mu in range(d):
        for s in range(d):
            for n in range(s, d):
                f = partial_derivative(bundle.g[s][n], mu)
                dg[mu][s][n] = f
                dg[mu][n][s] = f
    gamma = _object_array((d, d, d))
    for lam in range(d):
        for mu in range(d):
            for nu in range(mu, d):
                acc = None
                for s in range(d):
                    term = dg[mu][s][nu] + dg[nu][s][mu] - dg[s][mu][nu]
                    prod = multiply(bundle.ginv[lam][s], term)
                    acc = prod if acc is None else acc + prod
                f = acc * 0.5
                gamma[lam][mu][nu] = f
                gamma[lam][nu][mu] = f
    return replace(bundle, gamma=gamma)


def riemann(bundle: MetricBundle) -> MetricBundle:
    """Curvature tensor R^mu_{a al be}, antisymmetrized exactly in (al, be)."""
    if bundle.gamma is None:
        bundle = christoffel(bundle)
    d = bundle.grid.d
    gam = bundle.gamma
    dgam = _object_array((d, d, d, d))  # dgam[al][mu][be][a] = d_al Gamma^mu_{be a}
    for al in range(d):
        for mu in range(d):
            for be in range(d):
                for a in range(be, d):
                    f = partial_derivative(gam[mu][be][a], al)
                    dgam[al][mu][be][a] = f
                    dgam[al][mu][a][be] = f
    riem = _object_array((d, d, d, d))
    zero = constant_field(bundle.grid, 0.0)
    for mu in range(d):
        for a in range(d):
            for al in range(d):
                riem[mu][a][al][al] = zero
                for be in range(al + 1, d):
                    acc = dgam[al][mu][be][a] - dgam[be][mu][al][a]
                    for s in range(d):
                        acc = acc + multiply(gam[mu][al][s], gam[s][be][a])
                        acc = acc - multiply(gam[mu][be][s], gam[s][al][a])
                    riem[mu][a][al][be] = acc
                    riem[mu][a][be][al] = -acc
    return replace(bundle, riem=riem)


def ricci_scalar(bundle: MetricBundle) -> ScalarField:
    """Scalar curvature g^{a b} R^mu_{a mu b}."""
    if bundle.riem is None:
        bundle = riemann(bundle)
    d = bundle.grid.d
    acc = None
    for a in range(d):
        for b in range(d):
            ric = None
            for mu in range(d):
                t = bundle.riem[mu][a][mu][b]
                ric = t if ric is None else ric + t
            term = multiply(bundle.ginv[a][b], ric)
            acc = term if acc is None else acc + term
    return acc


def _delta_from_parts(grid: GridSpec, theta: ThetaMatrix, sqrt_mg_vals,
                      dR) -> np.ndarray:
    """Assemble Delta^mu values given d_b R^mu_{a al be} as dR[b][mu][a][al][be]."""
    d = grid.d
    th = theta.entries
    out = np.zeros((d,) + grid.shape, dtype=np.complex128)
    for mu in range(d):
        for a, b, al, be in itertools.product(range(d), repeat=4):
            w = th[a, b] * th[al, be]
            if w == 0.0:
                continue
            out[mu] += w * dR[b][mu][a][al][be]
    # squared-i prefactor evaluated to -1
    return -out / (2.0 * sqrt_mg_vals)


def delta_shift(bundle: MetricBundle, theta: ThetaMatrix,
                tol: float | None = None) -> DeltaShift:
    """Shift vector from the theta-weighted curvature gradient.

    The constant part is the lattice mean; ``residual`` is the largest
    deviation from it.  ``constant`` is judged against ``tol``, default
    1e-6 * |theta|^2.
    """
    if bundle.riem is None:
        bundle = riemann(bundle)
    d = bundle.grid.d
    if theta.d != d:
        raise ValueError("theta dimension does not match the metric bundle")
    if tol is None:
        tol = 1e-6 * theta.magnitude ** 2
    if theta.is_zero or bundle.is_flat():
        return DeltaShift(vector=np.zeros(d), residual=0.0, constant=True,
                          field=np.zeros((d,) + bundle.grid.shape))
    dR = _object_array((d, d, d, d, d))
    for b in range(d):
        for mu in range(d):
            for a in range(d):
                for al in range(d):
                    for be in range(d):
                        dR[b][mu][a][al][be] = partial_derivative(
                            bundle.riem[mu][a][al][be], b).values
    field = _delta_from_parts(bundle.grid, theta, bundle.sqrt_mg.values, dR)
    mean = field.reshape(d, -1).mean(axis=1)
    residual = float(np.abs(field - mean.reshape((d,) + (1,) * d)).max())
    return DeltaShift(vector=mean.real, residual=residual,
                      constant=residual <= tol, field=field)


# -- independent stencil oracle -------------------------------------------

_STENCIL_8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0,
                       4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _stencil_deriv(vals: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    out = np.zeros_like(vals)
    for offset, w in zip(range(-4, 5), _STENCIL_8):
        if w:
            out += w * np.roll(vals, -offset, axis=axis)
    return out / spacing


def delta_shift_stencil(bundle: MetricBundle, theta: ThetaMatrix) -> np.ndarray:
    """Term-by-term finite-difference assembly of the shift vector.

    Re-derives the connection, the curvature and its gradient from the
    raw metric samples with eighth-order periodic stencils and plain
    pointwise products, so it shares no code path with the spectral
    route.
    """
    grid = bundle.grid
    d = grid.d
    h = [grid.length[mu] / grid.n[mu] for mu in range(d)]
    gv = np.real(bundle.g_values())
    mats = np.moveaxis(gv, (0, 1), (-2, -1))
    ginv = np.moveaxis(np.linalg.inv(mats), (-2, -1), (0, 1))
    sqrt_mg = np.sqrt(-np.linalg.det(mats))

    dg = np.empty((d, d, d) + grid.shape)
    for mu in range(d):
        for s in range(d):
            for n in range(d):
                dg[mu, s, n] = _stencil_deriv(gv[s, n], mu, h[mu])
    gamma = np.zeros((d, d, d) + grid.shape)
    for lam, mu, nu in itertools.product(range(d), repeat=3):
        for s in range(d):
            gamma[lam, mu, nu] += 0.5 * ginv[lam, s] * (
                dg[mu, s, nu] + dg[nu, s, mu] - dg[s, mu, nu])
    dgam = np.empty((d, d, d, d) + grid.shape)
    for al, mu, be, a in itertools.product(range(d), repeat=4):
        dgam[al, mu, be, a] = _stencil_deriv(gamma[mu, be, a], al, h[al])
    riem = np.zeros((d, d, d, d) + grid.shape)
    for mu, a, al, be in itertools.product(range(d), repeat=4):
        r = dgam[al, mu, be, a] - dgam[be, mu, al, a]
        for s in range(d):
            r += gamma[mu, al, s] * gamma[s, be, a]
            r -= gamma[mu, be, s] * gamma[s, al, a]
        riem[mu, a, al, be] = r

    th = theta.entries
    out = np.zeros((d,) + grid.shape)
    for mu in range(d):
        for a, b, al, be in itertools.product(range(d), repeat=4):
            w = th[a, b] * th[al, be]
            if w == 0.0:
                continue
            out[mu] += w * _stencil_deriv(riem[mu, a, al, be], b, h[b])
    return -out / (2.0 * sqrt_mg)
