"""Actions, field equations and energy-momentum tensors for both theta cases.

The theory splits on whether the noncommutativity matrix mixes time:

* space-space (``theta^{0i} = 0``): the Lagrangian density is the full
  symmetric star ordering of (F, g^{-1}, g^{-1}, F) and the measure
  joins it through one more star, removable under the integral.
* time-space: metric factors multiply pointwise and only the F pair
  keeps its star.

Field equations are obtained as the true functional derivative of the
action with respect to the potential.  The sign and every combinatorial
factor are pinned by ``fd_action_gradient``, a central-difference probe
of the action with a Richardson consistency check: for every
configuration the contraction of the residual with a probe must equal
the directional derivative of the action.

Index-summed symmetric orderings are evaluated permutation by
permutation with contractions staged left to right; pairwise star
products are memoized by operand identity so the n! chains share work.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .gaugefield import FieldStrength, GaugeField, field_strength
from .geometry import MetricBundle
from .lattice import (
    GridSpec,
    ScalarField,
    integrate,
    multiply,
    partial_derivative,
    zeros_field,
)
from .ordering import OperandList, symmetric_star
from .staralg import (
    StarCache,
    ThetaMatrix,
    star_anticommutator,
    star_chain,
    star_commutator,
    star_spectral,
)

__all__ = [
    "ActionValue",
    "StressTensor",
    "FDGradient",
    "lagrangian_space_space",
    "lagrangian_time_space",
    "action",
    "script_F",
    "eom_residual_sym",
    "eom_residual_scriptF",
    "eom_residual_time_space",
    "fd_action_gradient",
    "residual_probe_pairing",
    "stress_time_space",
    "stress_space_space",
    "delta_sqrt_g_variation",
    "classical_lagrangian_values",
    "classical_stress_values",
]

CASES = ("space_space", "time_space")


@dataclass(frozen=True)
class ActionValue:
    """Real action value with the residual imaginary part kept as a diagnostic."""

    value: float
    case: str
    imag_residue: float


@dataclass(frozen=True)
class StressTensor:
    """Lower-index energy-momentum components T[lam][kap]."""

    components: np.ndarray
    case: str

    @property
    def grid(self) -> GridSpec:
        return self.components[0][0].grid

    def __getitem__(self, idx) -> ScalarField:
        lam, kap = idx
        return self.components[lam][kap]

    def symmetry_defect(self) -> float:
        d = self.components.shape[0]
        worst = 0.0
        for lam in range(d):
            for kap in range(lam + 1, d):
                diff = self.components[lam][kap] - self.components[kap][lam]
                worst = max(worst, diff.max_abs())
        return worst

    def max_imag(self) -> float:
        d = self.components.shape[0]
        return max(self.components[l][k].max_imag()
                   for l in range(d) for k in range(d))


@dataclass(frozen=True)
class FDGradient:
    """Central-difference directional derivative of the action.

    ``value`` is the Richardson-extrapolated estimate from steps eps and
    eps/2; ``gap`` the relative spread between the two raw estimates.  A
    large gap flags that the probe hit the rounding floor.
    """

    value: float
    gap: float
    flagged: bool


# -- staged evaluation of index-summed symmetric orderings -----------------


@dataclass(frozen=True)
class TensorOperand:
    """Operand of an index-summed star chain: components plus index labels.

    ``comps`` is a scalar field for label-free operands, otherwise an
    object array with one axis per label.  Every label must appear on
    exactly two operands (contracted) or be listed free.
    """

    comps: object
    labels: tuple[str, ...] = ()


def _fold_pair(state, operand, cache: StarCache, d: int):
    s_comps, s_labels = state
    o_comps, o_labels = operand.comps, operand.labels
    common = tuple(l for l in s_labels if l in o_labels)
    out_labels = tuple([l for l in s_labels if l not in common]
                       + [l for l in o_labels if l not in common])

    def comp(comps, labels, assign):
        if not labels:
            return comps
        return comps[tuple(assign[l] for l in labels)]

    if not out_labels:
        acc = None
        for com in itertools.product(range(d), repeat=len(common)):
            assign = dict(zip(common, com))
            t = cache.star(comp(s_comps, s_labels, assign),
                           comp(o_comps, o_labels, assign))
            acc = t if acc is None else acc + t
        return acc, ()

    out = np.empty((d,) * len(out_labels), dtype=object)
    for free in itertools.product(range(d), repeat=len(out_labels)):
        assign = dict(zip(out_labels, free))
        acc = None
        for com in itertools.product(range(d), repeat=len(common)):
            assign.update(zip(common, com))
            t = cache.star(comp(s_comps, s_labels, assign),
                           comp(o_comps, o_labels, assign))
            acc = t if acc is None else acc + t
        out[free] = acc
    return out, out_labels


def symmetric_star_indexed(operands: list[TensorOperand], theta: ThetaMatrix,
                           free: tuple[str, ...], grid: GridSpec,
                           cache: StarCache | None = None):
    """Symmetric star ordering summed over contracted index labels.

    Returns a scalar field when ``free`` is empty, otherwise an object
    array indexed in the order of ``free``.  Equivalent to applying the
    scalar ``symmetric_star`` to every index assignment and summing, but
    shares the pairwise products across the n! orderings.
    """
    n = len(operands)
    d = grid.d
    if cache is None:
        cache = StarCache(theta)
    total = None
    for perm in itertools.permutations(range(n)):
        first = operands[perm[0]]
        state = (first.comps, first.labels)
        for pos in perm[1:]:
            state = _fold_pair(state, operands[pos], cache, d)
        comps, labels = state
        if tuple(labels) != tuple(free):
            if set(labels) != set(free):
                raise ValueError(f"free labels {labels} != requested {free}")
            src = [labels.index(l) for l in free]
            re = np.empty((d,) * len(free), dtype=object)
            for idx in itertools.product(range(d), repeat=len(free)):
                orig = tuple(idx[src.index(i)] for i in range(len(free)))
                re[idx] = comps[tuple(idx[free.index(labels[i])]
                                      for i in range(len(labels)))]
            comps = re
        if total is None:
            total = comps
        elif free:
            out = np.empty_like(total)
            for idx in itertools.product(range(d), repeat=len(free)):
                out[idx] = total[idx] + comps[idx]
            total = out
        else:
            total = total + comps
    norm = 1.0 / math.factorial(n)
    if free:
        out = np.empty_like(total)
        for idx in itertools.product(range(d), repeat=len(free)):
            out[idx] = total[idx] * norm
        return out
    return total * norm


def _require_space_space(theta: ThetaMatrix, what: str) -> None:
    if not theta.is_space_space:
        raise ValueError(
            f"{what} is defined for space-space noncommutativity; "
            f"theta has time-space entries {theta.entries[0]}")


# -- Lagrangians and actions ------------------------------------------------


def lagrangian_space_space(F: FieldStrength, bundle: MetricBundle,
                           theta: ThetaMatrix,
                           cache: StarCache | None = None) -> ScalarField:
    """-(1/4) x symmetric star ordering of (F_{ab}, g^{am}, g^{bn}, F_{mn})."""
    _require_space_space(theta, "the symmetric-ordered Lagrangian")
    ops = [
        TensorOperand(F.components, ("a", "b")),
        TensorOperand(bundle.ginv, ("a", "m")),
        TensorOperand(bundle.ginv, ("b", "n")),
        TensorOperand(F.components, ("m", "n")),
    ]
    dens = symmetric_star_indexed(ops, theta, (), bundle.grid, cache)
    return dens * (-0.25)


def lagrangian_time_space(F: FieldStrength, bundle: MetricBundle,
                          theta: ThetaMatrix,
                          cache: StarCache | None = None) -> ScalarField:
    """-(1/4) g^{ma} g^{nb} (F_{mn} * F_{ab}) with pointwise metric factors."""
    d = bundle.grid.d
    if cache is None:
        cache = StarCache(theta)
    acc = None
    for m, n, a, b in itertools.product(range(d), repeat=4):
        if m == n or a == b:
            continue
        t = multiply(multiply(bundle.ginv[m][a], bundle.ginv[n][b]),
                     cache.star(F[m, n], F[a, b]))
        acc = t if acc is None else acc + t
    if acc is None:
        acc = zeros_field(bundle.grid)
    return acc * (-0.25)


def action(A: GaugeField, bundle: MetricBundle, theta: ThetaMatrix,
           case: str, cache: StarCache | None = None) -> ActionValue:
    """Integrated action for the requested noncommutativity case."""
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}; expected one of {CASES}")
    if cache is None:
        cache = StarCache(theta)
    F = field_strength(A, theta)
    if case == "space_space":
        _require_space_space(theta, "the space-space action")
        dens = lagrangian_space_space(F, bundle, theta, cache)
        total = integrate(star_spectral(bundle.sqrt_mg, dens, theta))
    else:
        dens = lagrangian_time_space(F, bundle, theta, cache)
        total = integrate(multiply(bundle.sqrt_mg, dens))
    return ActionValue(value=float(total.real), case=case,
                       imag_residue=abs(float(total.imag)))


# -- field equations --------------------------------------------------------


def _k_tensor(F: FieldStrength, bundle: MetricBundle, theta: ThetaMatrix,
              cache: StarCache) -> np.ndarray:
    """K^{km} = sum_{ab} S_*(sqrt(-g), F_{ab}, g^{ka}, g^{mb})."""
    ops = [
        TensorOperand(bundle.sqrt_mg, ()),
        TensorOperand(F.components, ("a", "b")),
        TensorOperand(bundle.ginv, ("k", "a")),
        TensorOperand(bundle.ginv, ("m", "b")),
    ]
    return symmetric_star_indexed(ops, theta, ("k", "m"), bundle.grid, cache)


def _covariant_divergence(kern: np.ndarray, A: GaugeField,
                          theta: ThetaMatrix) -> list[ScalarField]:
    """-( d_m kern^{km} - i e [A_m, kern^{km}]_* ) per free index k."""
    d = A.grid.d
    out = []
    for k in range(d):
        acc = None
        for m in range(d):
            t = partial_derivative(kern[k][m], m)
            if A.coupling != 0.0 and not theta.is_zero:
                t = t - 1j * A.coupling * star_commutator(A[m], kern[k][m], theta)
            acc = t if acc is None else acc + t
        out.append(-acc)
    return out


def eom_residual_sym(A: GaugeField, bundle: MetricBundle, theta: ThetaMatrix,
                     cache: StarCache | None = None) -> list[ScalarField]:
    """Functional derivative of the space-space action per component.

    Vanishes exactly on solutions.  Defined as dS/dA_k, so it carries an
    overall minus relative to the bare divergence of the symmetric-ordered
    kernel; the FD oracle fixes this orientation.
    """
    _require_space_space(theta, "the symmetric-ordered field equations")
    if cache is None:
        cache = StarCache(theta)
    F = field_strength(A, theta)
    kern = _k_tensor(F, bundle, theta, cache)
    return _covariant_divergence(kern, A, theta)


def script_F(A: GaugeField, bundle: MetricBundle, theta: ThetaMatrix,
             cache: StarCache | None = None) -> np.ndarray:
    """Metric-dressed field strength entering the compact equation of motion.

    scriptF^{km} = {g^{ka}, g^{mb}}_* * F_{ab} * sqrt(-g)
                 + sqrt(-g) * F_{ab} * {g^{ka}, g^{mb}}_*

    summed over a, b, with the anticommutator carrying no 1/2.  With a
    constant metric and theta = 0 this reduces to 4 F^{km}; that factor
    is part of the convention and is accounted for wherever the two
    residual forms are compared.
    """
    _require_space_space(theta, "the metric-dressed field strength")
    if cache is None:
        cache = StarCache(theta)
    d = bundle.grid.d
    F = field_strength(A, theta)
    out = np.empty((d, d), dtype=object)
    for k in range(d):
        for m in range(d):
            acc = None
            for a, b in itertools.product(range(d), repeat=2):
                if a == b:
                    continue
                braces = cache.star(bundle.ginv[k][a], bundle.ginv[m][b]) \
                    + cache.star(bundle.ginv[m][b], bundle.ginv[k][a])
                t = star_chain([braces, F[a, b], bundle.sqrt_mg], theta, cache) \
                    + star_chain([bundle.sqrt_mg, F[a, b], braces], theta, cache)
                acc = t if acc is None else acc + t
            out[k][m] = acc if acc is not None else zeros_field(bundle.grid)
    return out


def eom_residual_scriptF(A: GaugeField, bundle: MetricBundle,
                         theta: ThetaMatrix,
                         cache: StarCache | None = None) -> list[ScalarField]:
    """Compact form d_m scriptF^{km} - i e [A_m, scriptF^{km}]_*.

    Proportional to :func:`eom_residual_sym` in the constant-metric or
    commuting limits (factor -4 with the conventions used here); for a
    curved metric at nonzero theta the two orderings differ and their
    pointwise ratio is something to measure, not assert.
    """
    _require_space_space(theta, "the compact field equations")
    if cache is None:
        cache = StarCache(theta)
    kern = script_F(A, bundle, theta, cache)
    d = A.grid.d
    out = []
    for k in range(d):
        acc = None
        for m in range(d):
            t = partial_derivative(kern[k][m], m)
            if A.coupling != 0.0 and not theta.is_zero:
                t = t - 1j * A.coupling * star_commutator(A[m], kern[k][m], theta)
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def eom_residual_time_space(A: GaugeField, bundle: MetricBundle,
                            theta: ThetaMatrix,
                            cache: StarCache | None = None) -> list[ScalarField]:
    """Functional derivative of the pointwise-metric action.

    Kernel: V^{km} = (1/2) sum_{ab} { sqrt(-g) g^{ka} g^{mb}, F_{ab} }_*.
    Supplied so the variational consistency check covers both cases.
    """
    if cache is None:
        cache = StarCache(theta)
    d = bundle.grid.d
    F = field_strength(A, theta)
    kern = np.empty((d, d), dtype=object)
    for k in range(d):
        for m in range(d):
            acc = None
            for a, b in itertools.product(range(d), repeat=2):
                if a == b:
                    continue
                h = multiply(bundle.sqrt_mg,
                             multiply(bundle.ginv[k][a], bundle.ginv[m][b]))
                t = star_anticommutator(h, F[a, b], theta)
                acc = t if acc is None else acc + t
            kern[k][m] = (acc * 0.5) if acc is not None else zeros_field(bundle.grid)
    return _covariant_divergence(kern, A, theta)


def residual_probe_pairing(residual: list[ScalarField],
                           probe: GaugeField) -> float:
    """sum_k int residual_k * probe_k — the pairing the FD gradient must match."""
    total = 0.0 + 0.0j
    for k, r in enumerate(residual):
        total += integrate(multiply(r, probe[k]))
    return float(total.real)


def fd_action_gradient(A: GaugeField, bundle: MetricBundle, theta: ThetaMatrix,
                       case: str, probe: GaugeField, eps: float = 1e-3,
                       gap_tol: float = 1e-4) -> FDGradient:
    """Directional derivative of the action along ``probe`` by central
    differences at steps eps and eps/2, Richardson-extrapolated.
    """
    def grad(h: float) -> float:
        sp = action(A.shifted(probe, +h), bundle, theta, case).value
        sm = action(A.shifted(probe, -h), bundle, theta, case).value
        return (sp - sm) / (2.0 * h)

    g1 = grad(eps)
    g2 = grad(eps / 2.0)
    value = (4.0 * g2 - g1) / 3.0
    scale = max(abs(g1), abs(g2), 1e-300)
    gap = abs(g2 - g1) / scale
    return FDGradient(value=value, gap=gap, flagged=gap > gap_tol)


# -- energy-momentum tensors -------------------------------------------------


def _sym2(a: ScalarField, b: ScalarField, theta: ThetaMatrix,
          cache: StarCache) -> ScalarField:
    out = (cache.star(a, b) + cache.star(b, a)) * 0.5
    if a.real and b.real:
        return ScalarField(out.grid, modes=out.modes, real=True,
                           overflow=out.overflow)
    return out


def stress_time_space(A: GaugeField, bundle: MetricBundle,
                      theta: ThetaMatrix,
                      cache: StarCache | None = None) -> StressTensor:
    """T_{lk} = S_*(g_{lk}, L) + g^{mn} S_*(F_{mk}, F_{nl}) for the
    pointwise-metric case; the measure slot of the first ordering is
    already stripped by the formal sqrt(-g) derivative."""
    if cache is None:
        cache = StarCache(theta)
    d = bundle.grid.d
    F = field_strength(A, theta)
    dens = lagrangian_time_space(F, bundle, theta, cache)
    comps = np.empty((d, d), dtype=object)
    for lam in range(d):
        for kap in range(d):
            t = _sym2(bundle.g[lam][kap], dens, theta, cache)
            for m, n in itertools.product(range(d), repeat=2):
                if m == kap or n == lam:
                    continue
                t = t + multiply(bundle.ginv[m][n],
                                 _sym2(F[m, kap], F[n, lam], theta, cache))
            comps[lam][kap] = t
    return StressTensor(components=comps, case="time_space")


def stress_space_space(A: GaugeField, bundle: MetricBundle,
                       theta: ThetaMatrix,
                       cache: StarCache | None = None) -> StressTensor:
    """T_{lk} = S_*(g_{lk}, L) + S_*(g^{nb}, F_{ln}, F_{kb}) for the
    symmetric-ordered case, both sqrt(-g) slots stripped."""
    _require_space_space(theta, "the symmetric-ordered stress tensor")
    if cache is None:
        cache = StarCache(theta)
    d = bundle.grid.d
    F = field_strength(A, theta)
    dens = lagrangian_space_space(F, bundle, theta, cache)
    pair_ops = [
        TensorOperand(bundle.ginv, ("n", "b")),
        TensorOperand(F.components, ("l", "n")),
        TensorOperand(F.components, ("k", "b")),
    ]
    quad = symmetric_star_indexed(pair_ops, theta, ("l", "k"), bundle.grid, cache)
    comps = np.empty((d, d), dtype=object)
    for lam in range(d):
        for kap in range(d):
            comps[lam][kap] = _sym2(bundle.g[lam][kap], dens, theta, cache) \
                + quad[lam][kap]
    return StressTensor(components=comps, case="space_space")


def delta_sqrt_g_variation(bundle: MetricBundle, dg: np.ndarray,
                           theta: ThetaMatrix, variance: str = "upper",
                           cache: StarCache | None = None) -> ScalarField:
    """First-order response of sqrt(-g) to a metric perturbation.

    With an upper-index perturbation: -(1/2) S_*(sqrt(-g), g_{mn}, dg^{mn});
    with a lower-index one: +(1/2) S_*(sqrt(-g), g^{mn}, dg_{mn}).
    """
    if cache is None:
        cache = StarCache(theta)
    d = bundle.grid.d
    if variance == "upper":
        metric, sign = bundle.g, -0.5
    elif variance == "lower":
        metric, sign = bundle.ginv, +0.5
    else:
        raise ValueError(f"variance must be 'upper' or 'lower', got {variance!r}")
    acc = None
    for m, n in itertools.product(range(d), repeat=2):
        ops = OperandList([bundle.sqrt_mg, metric[m][n], dg[m][n]],
                          labels=["sqrt", f"g{m}{n}", f"dg{m}{n}"])
        t = symmetric_star(ops, theta, cache)
        acc = t if acc is None else acc + t
    return acc * sign


# -- directly coded classical references ------------------------------------


def classical_lagrangian_values(A: GaugeField, bundle: MetricBundle) -> np.ndarray:
    """Commutative Maxwell density -(1/4) F_{mn} F^{mn} from plain samples."""
    d = A.grid.d
    Fv = np.zeros((d, d) + A.grid.shape, dtype=np.complex128)
    for m in range(d):
        for n in range(d):
            Fv[m, n] = (partial_derivative(A[n], m).values
                        - partial_derivative(A[m], n).values)
    gi = np.stack([np.stack([bundle.ginv[m][n].values for n in range(d)])
                   for m in range(d)])
    return -0.25 * np.einsum("mn...,ma...,nb...,ab...->...", Fv, gi, gi, Fv)


def classical_stress_values(A: GaugeField, bundle: MetricBundle) -> np.ndarray:
    """g_{lk} L + g^{mn} F_{mk} F_{nl} from plain samples, shape (d, d, grid)."""
    d = A.grid.d
    Fv = np.zeros((d, d) + A.grid.shape, dtype=np.complex128)
    for m in range(d):
        for n in range(d):
            Fv[m, n] = (partial_derivative(A[n], m).values
                        - partial_derivative(A[m], n).values)
    gv = bundle.g_values()
    gi = np.stack([np.stack([bundle.ginv[m][n].values for n in range(d)])
                   for m in range(d)])
    dens = -0.25 * np.einsum("mn...,ma...,nb...,ab...->...", Fv, gi, gi, Fv)
    quad = np.einsum("mn...,mk...,nl...->lk...", gi, Fv, Fv)
    return np.einsum("lk...,...->lk...", gv, dens) + quad
