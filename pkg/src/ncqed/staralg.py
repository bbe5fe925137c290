"""Moyal star products on the lattice, plus the constant-shift variant.

Three interoperable backends compute ``f * g``:

* ``star_spectral`` — exact twisted convolution of the band-limited
  representatives, with the plane-wave kernel
  ``exp(-(i/2) theta^{mu nu} k_mu q_nu)`` attached to each mode pair.
  Small mode tables go through a vectorized sparse pair sum; dense
  fields with at most one independent noncommuting plane go through a
  mixed position/mode transform that costs a few batched FFTs.
* ``star_truncated`` — the bidifferential expansion cut at order 0, 1
  or 2; also works on the exact polynomial backend, where a high enough
  order terminates the series.
* ``star_poly`` — exact Moyal product of multivariate polynomials in
  the coordinates, used for the coordinate-algebra checks.

Everything is dealiased the same way as pointwise products: mode sums
that leave the representable band are dropped and flagged.

Sign convention, fixed once and used everywhere: on plane waves
``e^{ikx} * e^{iqx} = e^{i(k+q)x} exp(-(i/2) theta^{mu nu} k_mu q_nu)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import (
    GridSpec,
    ScalarField,
    multiply,
    pad_modes,
    translate,
    truncate_modes,
    zeros_field,
)

__all__ = [
    "ThetaMatrix",
    "DeltaShift",
    "PolyField",
    "star_spectral",
    "star_truncated",
    "star_poly",
    "star_commutator",
    "star_anticommutator",
    "star_chain",
    "deformed_star",
    "StarCache",
]

# Above this many mode pairs the dense mixed-transform path is cheaper
# than the sparse pair sum (single-plane theta only).
_DENSE_PAIR_THRESHOLD = 200_000
_PAIR_CHUNK = 2_000_000


@dataclass(frozen=True)
class ThetaMatrix:
    """Constant antisymmetric noncommutativity matrix theta^{mu nu}."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"theta must be square, got shape {m.shape}")
        if not np.array_equal(m, -m.T):
            raise ValueError("theta must be exactly antisymmetric")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @classmethod
    def zero(cls, d: int) -> "ThetaMatrix":
        return cls(np.zeros((d, d)))

    @classmethod
    def from_pairs(cls, d: int, pairs: dict[tuple[int, int], float]) -> "ThetaMatrix":
        m = np.zeros((d, d))
        for (mu, nu), val in pairs.items():
            m[mu, nu] += val
            m[nu, mu] -= val
        return cls(m)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def is_zero(self) -> bool:
        return not self.entries.any()

    @property
    def is_space_space(self) -> bool:
        """True when no entry mixes the timelike axis: theta^{0i} = 0."""
        return not self.entries[0, :].any()

    @property
    def magnitude(self) -> float:
        return float(np.abs(self.entries).max())

    def space_space_part(self) -> "ThetaMatrix":
        m = self.entries.copy()
        m[0, :] = 0.0
        m[:, 0] = 0.0
        return ThetaMatrix(m)

    def planes(self) -> list[tuple[int, int, float]]:
        """Independent nonzero entries as ``(mu, nu, value)`` with mu < nu."""
        out = []
        for mu in range(self.d):
            for nu in range(mu + 1, self.d):
                if self.entries[mu, nu] != 0.0:
                    out.append((mu, nu, float(self.entries[mu, nu])))
        return out


@dataclass(frozen=True)
class DeltaShift:
    """Constant translation vector entering the shifted star product.

    ``field`` optionally keeps the full position-dependent vector it was
    extracted from; ``residual`` is the max deviation from the constant
    part, so callers can judge whether treating it as constant is sound.
    """

    vector: np.ndarray
    residual: float = 0.0
    constant: bool = True
    field: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @classmethod
    def constant_shift(cls, vector: Sequence[float]) -> "DeltaShift":
        return cls(vector=np.asarray(vector, dtype=float), residual=0.0, constant=True)

    @classmethod
    def zero(cls, d: int) -> "DeltaShift":
        return cls.constant_shift(np.zeros(d))


def _check_pair(f: ScalarField, g: ScalarField, theta: ThetaMatrix) -> None:
    if f.grid != g.grid:
        raise ValueError("star product operands live on different grids")
    if theta.d != f.grid.d:
        raise ValueError(f"theta is {theta.d}x{theta.d} but grid has d={f.grid.d}")


# -- sparse twisted convolution -------------------------------------------


def _star_sparse(f: ScalarField, g: ScalarField, theta: ThetaMatrix) -> ScalarField:
    grid = f.grid
    fi, fc = f.sparse_modes()
    gi, gc = g.sparse_modes()
    out = np.zeros(grid.site_count, dtype=np.complex128)
    if fi.shape[0] == 0 or gi.shape[0] == 0:
        return ScalarField(grid, modes=out.reshape(grid.shape))

    kf = grid.k_factors()
    theta_k = theta.entries * np.outer(kf, kf)
    n = np.asarray(grid.n)
    half = n // 2
    strides = np.cumprod([1] + list(grid.n[::-1][:-1]))[::-1]

    g_phys_theta = gi.astype(float) @ theta_k.T  # (Mg, d); phase = -0.5 * k_f . row
    scale = max(np.abs(fc).max() * np.abs(gc).max(), 0.0)
    dropped_max = 0.0

    rows_per_chunk = max(1, _PAIR_CHUNK // max(gi.shape[0], 1))
    for lo in range(0, fi.shape[0], rows_per_chunk):
        hi = min(lo + rows_per_chunk, fi.shape[0])
        fblk = fi[lo:hi]
        phase = np.exp(fblk.astype(float) @ (-0.5j * g_phys_theta.T))
        contrib = (fc[lo:hi, None] * gc[None, :]) * phase
        s = fblk[:, None, :] + gi[None, :, :]
        inband = np.all((s >= -half) & (s <= half - 1), axis=-1)
        if not inband.all():
            bad = np.abs(contrib[~inband])
            if bad.size:
                dropped_max = max(dropped_max, float(bad.max()))
        wrapped = np.mod(s, n)
        flat = (wrapped * strides).sum(axis=-1)[inband]
        vals = contrib[inband]
        out += np.bincount(flat, weights=vals.real, minlength=out.size)
        out += 1j * np.bincount(flat, weights=vals.imag, minlength=out.size)

    overflow = f.overflow or g.overflow or dropped_max > 1e-13 * scale
    return ScalarField(grid, modes=out.reshape(grid.shape), overflow=overflow)


# -- dense mixed-transform path (single noncommuting plane) ---------------


def _star_dense_plane(f: ScalarField, g: ScalarField, theta: ThetaMatrix,
                      plane: tuple[int, int, float]) -> ScalarField:
    grid = f.grid
    a, b, tau = plane
    n_big = tuple(2 * n for n in grid.n)
    fm = pad_modes(f.modes, grid.n, n_big)
    gm = pad_modes(g.modes, grid.n, n_big)

    kf = grid.k_factors()
    ka = (np.fft.fftfreq(n_big[a]) * n_big[a]) * kf[a]
    kb = (np.fft.fftfreq(n_big[b]) * n_big[b]) * kf[b]

    # Mixed view: axis a kept in mode space, everything else in positions,
    # with the b-axis shift applied as a phase before the b transform.
    other = [ax for ax in range(grid.d) if ax not in (a, b)]
    F = np.fft.ifftn(fm, axes=other) if other else fm
    G = np.fft.ifftn(gm, axes=other) if other else gm

    # F_sh[k_a, q_a, ...] = F(k_a, x_b + (tau/2) q_a, x_other)
    sh_f = np.exp(0.5j * tau * np.multiply.outer(ka, kb))   # rows q_a, cols k_b
    sh_g = np.exp(-0.5j * tau * np.multiply.outer(ka, kb))  # rows k_a, cols q_b

    Fb = np.moveaxis(F, (a, b), (0, 1))          # (ka, kb, rest...)
    Gb = np.moveaxis(G, (a, b), (0, 1))
    extra = Fb.shape[2:]
    ph_shape = (1, n_big[a], n_big[b]) + (1,) * len(extra)
    Fsh = Fb[:, None, ...] * sh_f.reshape(ph_shape)          # (ka, qa, kb, rest)
    Gsh = Gb[None, :, ...] * np.swapaxes(sh_g.reshape(ph_shape), 0, 1)
    Fsh = np.fft.ifft(Fsh, axis=2) * n_big[b]
    Gsh = np.fft.ifft(Gsh, axis=2) * n_big[b]

    H = Fsh * Gsh                                            # (ka, qa, xb, rest)
    P = np.fft.ifft(np.fft.ifft(H, axis=0), axis=1) * (n_big[a] ** 2)
    diag = np.einsum("ii...->i...", P)                       # (xa, xb, rest)

    vals = np.moveaxis(diag, (0, 1), (a, b))
    prod_modes = np.fft.fftn(np.fft.fftn(vals, axes=[a, b]),
                             axes=other) / (n_big[a] * n_big[b])
    modes, dropped = truncate_modes(prod_modes, grid.n, n_big)
    scale = max(np.abs(f.modes).max() * np.abs(g.modes).max(), 0.0)
    overflow = f.overflow or g.overflow or dropped > 1e-13 * scale
    return ScalarField(grid, modes=modes, overflow=overflow)


def star_spectral(f: ScalarField, g: ScalarField, theta: ThetaMatrix) -> ScalarField:
    """Exact Moyal product of the band-limited representatives of f and g."""
    _check_pair(f, g, theta)
    if theta.is_zero:
        return multiply(f, g)
    planes = theta.planes()
    if len(planes) == 1:
        mf = f.sparse_modes()[0].shape[0]
        mg = g.sparse_modes()[0].shape[0]
        if mf * mg > _DENSE_PAIR_THRESHOLD:
            return _star_dense_plane(f, g, theta, planes[0])
    return _star_sparse(f, g, theta)


def star_commutator(f: ScalarField, g: ScalarField, theta: ThetaMatrix) -> ScalarField:
    return star_spectral(f, g, theta) - star_spectral(g, f, theta)


def star_anticommutator(f: ScalarField, g: ScalarField, theta: ThetaMatrix) -> ScalarField:
    out = star_spectral(f, g, theta) + star_spectral(g, f, theta)
    if f.real and g.real:
        return ScalarField(out.grid, modes=out.modes, real=True,
                           overflow=out.overflow)
    return out


def star_chain(fields: Sequence[ScalarField], theta: ThetaMatrix,
               cache: "StarCache | None" = None) -> ScalarField:
    """Left-associated star product of one or more fields."""
    fields = list(fields)
    if not fields:
        raise ValueError("star_chain needs at least one field")
    if cache is None:
        cache = StarCache(theta)
    acc = fields[0]
    for nxt in fields[1:]:
        acc = cache.star(acc, nxt)
    return acc


def deformed_star(f: ScalarField, g: ScalarField, theta: ThetaMatrix,
                  delta: DeltaShift) -> ScalarField:
    """Moyal product followed by the constant shift: translate(f*g, delta).

    For a constant shift this equals the product of the shifted operands,
    so its integral agrees with the unshifted product's integral exactly.
    """
    if not delta.constant:
        raise ValueError(
            f"shift vector is not constant (residual {delta.residual:.3e}); "
            "the shifted product is only defined for constant shifts")
    return translate(star_spectral(f, g, theta), delta.vector)


class StarCache:
    """Memoizes star products by operand identity for chain-heavy callers.

    Fields are immutable, so two products of the same operand objects are
    interchangeable.  The cache pins its operands while entries live, and
    evicts in insertion order beyond ``max_entries``.
    """

    def __init__(self, theta: ThetaMatrix, max_entries: int = 2000):
        self.theta = theta
        self.max_entries = max_entries
        self._entries: dict[tuple[int, int], tuple] = {}

    def star(self, f: ScalarField, g: ScalarField) -> ScalarField:
        key = (id(f), id(g))
        hit = self._entries.get(key)
        if hit is not None and hit[0] is f and hit[1] is g:
            return hit[2]
        result = star_spectral(f, g, self.theta)
        if len(self._entries) >= self.max_entries:
            self._entries.pop(next(iter(self._entries)))
        self._entries[key] = (f, g, result)
        return result


# -- truncated bidifferential expansion ------------------------------------


def star_truncated(f, g, theta: ThetaMatrix, order: int):
    """Partial sum of the star expansion: fg + (i/2) theta^{mn} d_m f d_n g + ...

    Works on lattice fields (dealiased products, spectral derivatives) and
    on :class:`PolyField` operands (exact); any type with ``__mul__``,
    ``deriv`` and scalar multiplication will do.  For polynomials an order
    at or above the combined degree reproduces the exact product.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if isinstance(f, ScalarField):
        _check_pair(f, g, theta)
    nz = [(mu, nu, theta.entries[mu, nu])
          for mu in range(theta.d) for nu in range(theta.d)
          if theta.entries[mu, nu] != 0.0]
    total = f * g
    terms = [(1.0, f, g)]
    for j in range(1, order + 1):
        nxt = []
        for coef, a, b in terms:
            for mu, nu, t in nz:
                nxt.append((coef * t, a.deriv(mu), b.deriv(nu)))
        terms = nxt
        if not terms:
            break
        pref = (0.5j) ** j / math.factorial(j)
        for coef, a, b in terms:
            total = total + (a * b) * (pref * coef)
    return total


# -- exact polynomial backend ----------------------------------------------


class PolyField:
    """Multivariate polynomial in the d coordinates with complex coefficients.

    Coefficients are stored sparsely by exponent tuple; zero entries are
    never kept.  The algebra is capped at total degree ``degree_cap`` so
    coordinate-level checks cannot silently blow up.
    """

    __slots__ = ("d", "coeffs", "degree_cap")

    def __init__(self, d: int, coeffs: dict[tuple[int, ...], complex] | None = None,
                 degree_cap: int = 16):
        self.d = d
        self.degree_cap = degree_cap
        clean = {}
        for expo, c in (coeffs or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != d or any(e < 0 for e in expo):
                raise ValueError(f"bad exponent tuple {expo} for d={d}")
            c = complex(c)
            if c != 0:
                clean[expo] = c
        if clean and max(sum(e) for e in clean) > degree_cap:
            raise ValueError(f"total degree exceeds cap {degree_cap}")
        self.coeffs = clean

    @classmethod
    def coordinate(cls, d: int, mu: int, degree_cap: int = 16) -> "PolyField":
        expo = [0] * d
        expo[mu] = 1
        return cls(d, {tuple(expo): 1.0}, degree_cap)

    @classmethod
    def const(cls, d: int, value: complex, degree_cap: int = 16) -> "PolyField":
        return cls(d, {(0,) * d: value}, degree_cap)

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return PolyField(self.d, out, self.degree_cap)

    __radd__ = __add__

    def __neg__(self):
        return PolyField(self.d, {e: -c for e, c in self.coeffs.items()},
                         self.degree_cap)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PolyField):
            z = complex(other)
            return PolyField(self.d, {e: c * z for e, c in self.coeffs.items()},
                             self.degree_cap)
        out: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return PolyField(self.d, out, self.degree_cap)

    __rmul__ = __mul__

    def deriv(self, mu: int) -> "PolyField":
        out = {}
        for e, c in self.coeffs.items():
            if e[mu] > 0:
                de = list(e)
                de[mu] -= 1
                out[tuple(de)] = c * e[mu]
        return PolyField(self.d, out, self.degree_cap)

    def sample(self, grid: GridSpec) -> ScalarField:
        """Evaluate on the grid coordinates (as plain samples, not modes)."""
        coords = grid.coordinates()
        vals = np.zeros(grid.shape, dtype=np.complex128)
        for e, c in self.coeffs.items():
            term = np.full(grid.shape, c, dtype=np.complex128)
            for mu, p in enumerate(e):
                if p:
                    term = term * coords[mu] ** p
            vals += term
        return ScalarField(grid, values=vals)

    def allclose(self, other: "PolyField", tol: float = 1e-12) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) <= tol
                   for k in keys)

    def _coerce(self, other) -> "PolyField":
        if isinstance(other, PolyField):
            return other
        return PolyField.const(self.d, complex(other), self.degree_cap)

    def __repr__(self):
        inner = ", ".join(f"x{''.join(map(str, e))}: {c}" for e, c in
                          sorted(self.coeffs.items()))
        return f"PolyField({inner})"


def star_poly(p: PolyField, q: PolyField, theta: ThetaMatrix) -> PolyField:
    """Exact Moyal product of polynomials; the series terminates by degree."""
    if p.d != q.d or theta.d != p.d:
        raise ValueError("dimension mismatch between polynomials and theta")
    if p.total_degree + q.total_degree > min(p.degree_cap, q.degree_cap):
        raise ValueError(
            f"product degree {p.total_degree + q.total_degree} exceeds cap "
            f"{min(p.degree_cap, q.degree_cap)}")
    nz = [(mu, nu, theta.entries[mu, nu])
          for mu in range(theta.d) for nu in range(theta.d)
          if theta.entries[mu, nu] != 0.0]
    result = p * q
    pairs = [(1.0 + 0j, p, q)]
    j = 0
    while pairs:
        j += 1
        nxt = []
        for coef, a, b in pairs:
            for mu, nu, t in nz:
                da, db = a.deriv(mu), b.deriv(nu)
                if da.coeffs and db.coeffs:
                    nxt.append((coef * t, da, db))
        pairs = nxt
        if not pairs:
            break
        pref = (0.5j) ** j / math.factorial(j)
        for coef, a, b in pairs:
            result = result + (a * b) * (pref * coef)
    return result
