"""Noncommutative U(1) potential and field strength.

The curvature picks up a star-commutator term on top of the abelian
curl:

    F_{mu nu} = d_mu A_nu - d_nu A_mu - i e [A_mu, A_nu]_*

Lower-index F is the primary object; raised versions go through
``raise_indices`` so the choice of metric ordering is explicit.  The
infinitesimal gauge transformation is provided as a test harness for
covariance checks, not as part of the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import MetricBundle
from .lattice import (
    GridSpec,
    ScalarField,
    load_field_csv,
    multiply,
    partial_derivative,
    random_band_limited,
    zeros_field,
)
from .ordering import OperandList, symmetric_star
from .staralg import StarCache, ThetaMatrix, star_commutator

__all__ = [
    "GaugeField",
    "FieldStrength",
    "field_strength",
    "raise_indices",
    "gauge_transform_infinitesimal",
    "random_gauge_field",
    "load_gauge_field_csv",
]


@dataclass(frozen=True)
class GaugeField:
    """Real potential components A_mu on a shared grid, plus the coupling."""

    components: tuple[ScalarField, ...]
    coupling: float = 1.0

    def __post_init__(self):
        grid = self.components[0].grid
        for mu, a in enumerate(self.components):
            if a.grid != grid:
                raise ValueError("potential components live on different grids")
            if not a.real:
                raise ValueError(f"component A_{mu} is not flagged real")
        if len(self.components) != grid.d:
            raise ValueError(
                f"need {grid.d} components, got {len(self.components)}")

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    def __getitem__(self, mu: int) -> ScalarField:
        return self.components[mu]

    def shifted(self, probe: "GaugeField", scale: float) -> "GaugeField":
        return GaugeField(tuple(a + p * scale for a, p in
                                zip(self.components, probe.components)),
                          coupling=self.coupling)


@dataclass(frozen=True)
class FieldStrength:
    """Antisymmetric lower-index F_{mu nu} as an object matrix of fields."""

    components: np.ndarray

    @property
    def grid(self) -> GridSpec:
        return self.components[0][1].grid

    def __getitem__(self, idx) -> ScalarField:
        mu, nu = idx
        return self.components[mu][nu]

    def max_antisymmetry_defect(self) -> float:
        d = self.components.shape[0]
        worst = 0.0
        for mu in range(d):
            for nu in range(d):
                s = self.components[mu][nu] + self.components[nu][mu]
                worst = max(worst, s.max_abs())
        return worst


def field_strength(A: GaugeField, theta: ThetaMatrix) -> FieldStrength:
    """Curvature of the potential; antisymmetric by construction."""
    d = A.grid.d
    comps = np.empty((d, d), dtype=object)
    zero = zeros_field(A.grid)
    for mu in range(d):
        comps[mu][mu] = zero
        for nu in range(mu + 1, d):
            f = partial_derivative(A[nu], mu) - partial_derivative(A[mu], nu)
            if A.coupling != 0.0 and not theta.is_zero:
                f = f - 1j * A.coupling * star_commutator(A[mu], A[nu], theta)
            f = ScalarField(f.grid, modes=f.modes, real=True, overflow=f.overflow)
            comps[mu][nu] = f
            comps[nu][mu] = -f
    return FieldStrength(components=comps)


def raise_indices(F: FieldStrength, bundle: MetricBundle,
                  mode: str = "pointwise",
                  theta: ThetaMatrix | None = None) -> FieldStrength:
    """Raise both indices with the inverse metric.

    ``pointwise`` contracts with plain dealiased products; ``star-sym``
    uses the symmetric star ordering of the two metric factors and F,
    which needs ``theta``.  Both agree when theta vanishes.
    """
    if bundle.grid != F.grid:
        raise ValueError("metric bundle and field strength grids differ")
    d = bundle.grid.d
    out = np.empty((d, d), dtype=object)
    zero = zeros_field(bundle.grid)
    if mode == "pointwise":
        for mu in range(d):
            out[mu][mu] = zero
            for nu in range(mu + 1, d):
                acc = None
                for al in range(d):
                    for be in range(d):
                        t = multiply(multiply(bundle.ginv[mu][al],
                                              bundle.ginv[nu][be]),
                                     F[al, be])
                        acc = t if acc is None else acc + t
                out[mu][nu] = acc
                out[nu][mu] = -acc
    elif mode == "star-sym":
        if theta is None:
            raise ValueError("star-sym raising needs theta")
        cache = StarCache(theta)
        for mu in range(d):
            out[mu][mu] = zero
            for nu in range(mu + 1, d):
                acc = None
                for al in range(d):
                    for be in range(d):
                        ops = OperandList(
                            [bundle.ginv[mu][al], bundle.ginv[nu][be], F[al, be]],
                            labels=["g1", "g2", "F"])
                        t = symmetric_star(ops, theta, cache)
                        acc = t if acc is None else acc + t
                out[mu][nu] = acc
                out[nu][mu] = -acc
    else:
        raise ValueError(f"unknown raising mode {mode!r}")
    return FieldStrength(components=out)


def gauge_transform_infinitesimal(A: GaugeField, lam: ScalarField,
                                  theta: ThetaMatrix) -> GaugeField:
    """First-order transformation A_mu -> A_mu + d_mu lam - i e [A_mu, lam]_*."""
    if not lam.real:
        raise ValueError("gauge parameter must be real")
    comps = []
    for mu in range(A.grid.d):
        a = A[mu] + partial_derivative(lam, mu)
        if A.coupling != 0.0 and not theta.is_zero:
            a = a - 1j * A.coupling * star_commutator(A[mu], lam, theta)
        comps.append(ScalarField(a.grid, modes=a.modes, real=True,
                                 overflow=a.overflow))
    return GaugeField(tuple(comps), coupling=A.coupling)


def random_gauge_field(grid: GridSpec, cutoff: int,
                       rng: np.random.Generator | int | None = None,
                       amplitude: float = 1.0, coupling: float = 1.0) -> GaugeField:
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    comps = tuple(random_band_limited(grid, cutoff, rng, real=True,
                                      amplitude=amplitude)
                  for _ in range(grid.d))
    return GaugeField(comps, coupling=coupling)


def load_gauge_field_csv(grid: GridSpec, paths, coupling: float = 1.0) -> GaugeField:
    """Assemble a potential from one position-dump CSV per component."""
    paths = list(paths)
    if len(paths) != grid.d:
        raise ValueError(f"need {grid.d} component files, got {len(paths)}")
    comps = []
    for mu, p in enumerate(paths):
        f = load_field_csv(grid, p)
        if not f.is_conjugate_symmetric():
            raise ValueError(f"component file {p} does not hold a real field")
        comps.append(ScalarField(f.grid, values=f.values, real=True))
    return GaugeField(tuple(comps), coupling=coupling)
