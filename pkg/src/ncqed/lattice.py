"""Periodic lattices and band-limited complex scalar fields.

A field lives on a periodic d-dimensional grid and carries two lazily
synchronized views: complex samples at the lattice sites and complex
Fourier coefficients on the dual mode lattice.  With the normalization
used here, ``modes[m]`` is the amplitude of ``exp(i k_m . x)`` where
``k_m = 2*pi*m/L`` componentwise, so spectral derivatives, translations
by arbitrary real vectors, and integrals are exact for band-limited
fields.

Products of two fields are dealiased: they are evaluated on a grid with
twice the points per axis and then truncated back, so polynomial
identities among band-limited fields hold to machine precision as long
as the summed bandwidths fit in the retained band.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "ScalarField",
    "make_field",
    "field_from_values",
    "field_from_modes",
    "plane_wave",
    "constant_field",
    "zeros_field",
    "random_band_limited",
    "partial_derivative",
    "integrate",
    "translate",
    "multiply",
    "conjugate",
    "dump_field_csv",
    "dump_modes_csv",
    "load_field_csv",
]

TWO_PI = 2.0 * np.pi

# Relative magnitude below which a Fourier coefficient is treated as
# numerical dust when building the sparse mode table of a field.
SPARSE_RTOL = 1e-15


def _as_tuple(x, d, cast):
    if np.isscalar(x):
        return tuple(cast(x) for _ in range(d))
    t = tuple(cast(v) for v in x)
    if len(t) != d:
        raise ValueError(f"expected {d} per-axis entries, got {len(t)}")
    return t


@dataclass(frozen=True)
class GridSpec:
    """Shape of a periodic lattice: dimension, points and box length per axis.

    Axis 0 is the timelike direction of the Lorentzian signature.  Points
    per axis must be a power of two (>= 8) so transforms stay fast and the
    dealiased product grid is again a valid grid.
    """

    d: int
    n: tuple[int, ...]
    length: tuple[float, ...]
    signature: str = "lorentzian"

    def __post_init__(self):
        if not 2 <= self.d <= 4:
            raise ValueError(f"dimension must be 2..4, got {self.d}")
        object.__setattr__(self, "n", _as_tuple(self.n, self.d, int))
        object.__setattr__(self, "length", _as_tuple(self.length, self.d, float))
        for n_mu in self.n:
            if n_mu < 8 or (n_mu & (n_mu - 1)) != 0:
                raise ValueError(f"points per axis must be a power of two >= 8, got {n_mu}")
        for l_mu in self.length:
            if l_mu <= 0:
                raise ValueError(f"box length must be positive, got {l_mu}")
        if self.signature != "lorentzian":
            raise ValueError(f"unsupported signature {self.signature!r}")

    @classmethod
    def square(cls, d: int = 2, n: int = 32, length: float = TWO_PI) -> "GridSpec":
        return cls(d=d, n=(n,) * d, length=(length,) * d)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def site_count(self) -> int:
        return int(np.prod(self.n))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    @property
    def cell_volume(self) -> float:
        return self.volume / self.site_count

    def axis_modes(self, mu: int) -> np.ndarray:
        """Integer mode numbers along one axis, in FFT layout."""
        n = self.n[mu]
        return (np.fft.fftfreq(n) * n).astype(np.int64)

    def coordinates(self) -> list[np.ndarray]:
        """Open-meshgrid coordinate arrays, broadcastable to the grid shape."""
        axes = [
            np.arange(self.n[mu]) * (self.length[mu] / self.n[mu])
            for mu in range(self.d)
        ]
        return list(np.meshgrid(*axes, indexing="ij", sparse=True))

    def mode_vectors(self) -> np.ndarray:
        """Integer mode vectors for every dual-lattice point, shape (*n, d)."""
        grids = np.meshgrid(*[self.axis_modes(mu) for mu in range(self.d)],
                            indexing="ij")
        return np.stack(grids, axis=-1)

    def k_factors(self) -> np.ndarray:
        """Physical wave-number unit 2*pi/L per axis."""
        return TWO_PI / np.asarray(self.length)

    def in_band(self, mode: Sequence[int]) -> bool:
        return all(-(n // 2) <= int(m) <= n // 2 - 1 for m, n in zip(mode, self.n))


class ScalarField:
    """Complex field on a :class:`GridSpec` with lazy position/mode views.

    Instances are immutable; all operations return new fields.  ``real``
    records that the field has conjugate-symmetric modes, ``overflow``
    that some product that produced it lost modes to dealias truncation.
    """

    __slots__ = ("grid", "_values", "_modes", "real", "overflow", "_sparse")

    def __init__(self, grid: GridSpec, values: np.ndarray | None = None,
                 modes: np.ndarray | None = None, real: bool = False,
                 overflow: bool = False):
        if values is None and modes is None:
            raise ValueError("need at least one of values/modes")
        self.grid = grid
        for arr, name in ((values, "values"), (modes, "modes")):
            if arr is not None and arr.shape != grid.shape:
                raise ValueError(f"{name} shape {arr.shape} != grid shape {grid.shape}")
        self._values = values
        self._modes = modes
        self.real = real
        self.overflow = overflow
        self._sparse = None
        for arr in (values, modes):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            v = np.fft.ifftn(self._modes) * self.grid.site_count
            v.flags.writeable = False
            self._values = v
        return self._values

    @property
    def modes(self) -> np.ndarray:
        if self._modes is None:
            m = np.fft.fftn(self._values) / self.grid.site_count
            m.flags.writeable = False
            self._modes = m
        return self._modes

    def sparse_modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero-mode table ``(mode_vectors (M, d), coefficients (M,))``.

        Coefficients below ``SPARSE_RTOL`` of the largest one are dropped;
        an exactly zero field yields empty arrays.
        """
        if self._sparse is None:
            m = self.modes
            peak = np.abs(m).max()
            if peak == 0.0:
                idx = np.empty((0, self.grid.d), dtype=np.int64)
                coef = np.empty(0, dtype=np.complex128)
            else:
                mask = np.abs(m) > SPARSE_RTOL * peak
                where = np.nonzero(mask)
                axm = [self.grid.axis_modes(mu) for mu in range(self.grid.d)]
                idx = np.stack([axm[mu][where[mu]] for mu in range(self.grid.d)],
                               axis=-1)
                coef = m[where]
            self._sparse = (idx, coef)
        return self._sparse

    # -- arithmetic ------------------------------------------------------

    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            modes = op(self.modes, other.modes)
            return ScalarField(self.grid, modes=modes,
                               real=self.real and other.real,
                               overflow=self.overflow or other.overflow)
        z = complex(other)
        modes = self.modes.copy()
        modes.flags.writeable = True
        zero = tuple([0] * self.grid.d)
        modes[zero] = op(modes[zero], z)
        return ScalarField(self.grid, modes=modes,
                           real=self.real and z.imag == 0.0,
                           overflow=self.overflow)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ScalarField(self.grid, modes=-self.modes, real=self.real,
                           overflow=self.overflow)

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return multiply(self, other)
        z = complex(other)
        return ScalarField(self.grid, modes=self.modes * z,
                           real=self.real and z.imag == 0.0,
                           overflow=self.overflow)

    __rmul__ = __mul__

    def deriv(self, mu: int) -> "ScalarField":
        return partial_derivative(self, mu)

    def conj(self) -> "ScalarField":
        return conjugate(self)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def max_imag(self) -> float:
        return float(np.abs(self.values.imag).max())

    def is_conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        m = self.modes
        flipped = m
        for ax in range(self.grid.d):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        peak = max(np.abs(m).max(), 1.0)
        return bool(np.abs(m - np.conj(flipped)).max() <= tol * peak)


def field_from_values(grid: GridSpec, values: np.ndarray,
                      real: bool | None = None) -> ScalarField:
    values = np.ascontiguousarray(values, dtype=np.complex128)
    if real is None:
        real = bool(np.abs(values.imag).max() <= 1e-13 * max(np.abs(values).max(), 1.0))
    return ScalarField(grid, values=values, real=real)


def field_from_modes(grid: GridSpec, modes: np.ndarray,
                     real: bool | None = None) -> ScalarField:
    modes = np.ascontiguousarray(modes, dtype=np.complex128)
    f = ScalarField(grid, modes=modes)
    if real is None:
        real = f.is_conjugate_symmetric()
    return ScalarField(grid, modes=modes, real=real)


def _mode_to_index(grid: GridSpec, mode: Sequence[int]) -> tuple[int, ...]:
    if len(mode) != grid.d:
        raise ValueError(f"mode {tuple(mode)} has wrong dimension for d={grid.d}")
    if not grid.in_band(mode):
        lo_hi = [(-(n // 2), n // 2 - 1) for n in grid.n]
        raise ValueError(
            f"mode {tuple(int(m) for m in mode)} outside representable band "
            f"{lo_hi} for grid n={grid.n}")
    return tuple(int(m) % n for m, n in zip(mode, grid.n))


def make_field(grid: GridSpec,
               spec: Iterable[tuple[Sequence[int], complex]] | Callable,
               real: bool | None = None) -> ScalarField:
    """Build a field from a mode list ``[(mode, amplitude), ...]`` or a sampler.

    A sampler is called with the open-meshgrid coordinate arrays and must
    return the complex sample array.  Mode indices outside the grid band
    are rejected.
    """
    if callable(spec):
        values = np.asarray(spec(*grid.coordinates()), dtype=np.complex128)
        values = np.broadcast_to(values, grid.shape).copy()
        return field_from_values(grid, values, real=real)
    modes = np.zeros(grid.shape, dtype=np.complex128)
    for mode, amp in spec:
        modes[_mode_to_index(grid, mode)] += complex(amp)
    return field_from_modes(grid, modes, real=real)


def plane_wave(grid: GridSpec, mode: Sequence[int], amplitude: complex = 1.0) -> ScalarField:
    return make_field(grid, [(mode, amplitude)])


def constant_field(grid: GridSpec, value: complex = 1.0) -> ScalarField:
    modes = np.zeros(grid.shape, dtype=np.complex128)
    modes[(0,) * grid.d] = value
    return field_from_modes(grid, modes, real=complex(value).imag == 0.0)


def zeros_field(grid: GridSpec) -> ScalarField:
    return constant_field(grid, 0.0)


def random_band_limited(grid: GridSpec, cutoff: int | None = None,
                        rng: np.random.Generator | int | None = None,
                        real: bool = True, amplitude: float = 1.0) -> ScalarField:
    """Random field supported on modes with ``|m_mu| <= cutoff`` on every axis.

    The draw is a deterministic function of the generator state, so the
    same seed reproduces the field bit-identically.  Default cutoff is
    n/4, leaving headroom for dealiased products.
    """
    if cutoff is None:
        cutoff = min(grid.n) // 4
    if cutoff < 1 or cutoff > min(grid.n) // 2 - 1:
        raise ValueError(f"cutoff {cutoff} outside 1..{min(grid.n) // 2 - 1}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    modes = np.zeros(grid.shape, dtype=np.complex128)
    span = range(-cutoff, cutoff + 1)
    sites = list(itertools.product(*[span] * grid.d))
    draws = rng.normal(size=(len(sites), 2))
    norm = amplitude / np.sqrt(2.0 * len(sites))
    for (x, y), mode in zip(draws, sites):
        modes[tuple(int(m) % n for m, n in zip(mode, grid.n))] = (x + 1j * y) * norm
    if real:
        f = field_from_modes(grid, modes)
        sym = 0.5 * (f.modes + np.conj(_flip_modes(f.modes)))
        return field_from_modes(grid, sym, real=True)
    return field_from_modes(grid, modes, real=False)


def _flip_modes(modes: np.ndarray) -> np.ndarray:
    out = modes
    for ax in range(modes.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def partial_derivative(f: ScalarField, mu: int) -> ScalarField:
    """Exact spectral derivative along axis ``mu``: mode k -> i*k_mu * mode."""
    if not 0 <= mu < f.grid.d:
        raise ValueError(f"axis {mu} out of range for d={f.grid.d}")
    k = f.grid.axis_modes(mu) * (TWO_PI / f.grid.length[mu])
    shape = [1] * f.grid.d
    shape[mu] = f.grid.n[mu]
    return ScalarField(f.grid, modes=f.modes * (1j * k.reshape(shape)),
                       real=f.real, overflow=f.overflow)


def integrate(f: ScalarField) -> complex:
    """Volume-weighted sum of samples; equals volume times the zero mode."""
    if f._values is not None:
        return complex(f.values.sum() * f.grid.cell_volume)
    return complex(f.modes[(0,) * f.grid.d] * f.grid.volume)


def translate(f: ScalarField, delta: Sequence[float]) -> ScalarField:
    """Exact translation ``f(x) -> f(x + delta)`` for any real shift vector."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (f.grid.d,):
        raise ValueError(f"shift vector must have shape ({f.grid.d},)")
    if not delta.any():
        return f
    phase = np.zeros(f.grid.shape)
    kf = f.grid.k_factors()
    for mu in range(f.grid.d):
        shape = [1] * f.grid.d
        shape[mu] = f.grid.n[mu]
        phase = phase + (f.grid.axis_modes(mu) * (kf[mu] * delta[mu])).reshape(shape)
    return ScalarField(f.grid, modes=f.modes * np.exp(1j * phase),
                       real=f.real, overflow=f.overflow)


def conjugate(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, values=np.conj(f.values), real=f.real,
                       overflow=f.overflow)


# -- dealiased products --------------------------------------------------


def _padded_grid(grid: GridSpec) -> GridSpec:
    return GridSpec(d=grid.d, n=tuple(2 * n for n in grid.n), length=grid.length,
                    signature=grid.signature)


def _corner_slices(n_small: tuple[int, ...], n_big: tuple[int, ...]):
    """Slice pairs mapping an FFT-layout mode array into a larger one."""
    per_axis = []
    for ns, nb in zip(n_small, n_big):
        h = ns // 2
        per_axis.append([
            (slice(0, h), slice(0, h)),
            (slice(h, ns), slice(nb - h, nb)),
        ])
    for combo in itertools.product(*per_axis):
        yield tuple(c[0] for c in combo), tuple(c[1] for c in combo)


def pad_modes(modes: np.ndarray, n_small: tuple[int, ...],
              n_big: tuple[int, ...]) -> np.ndarray:
    out = np.zeros(n_big, dtype=np.complex128)
    for src, dst in _corner_slices(n_small, n_big):
        out[dst] = modes[src]
    return out


def truncate_modes(modes: np.ndarray, n_small: tuple[int, ...],
                   n_big: tuple[int, ...]) -> tuple[np.ndarray, float]:
    """Keep the small-grid band; also return the largest dropped magnitude."""
    out = np.empty(n_small, dtype=np.complex128)
    kept = np.zeros(n_big, dtype=bool)
    for src, dst in _corner_slices(n_small, n_big):
        out[src] = modes[dst]
        kept[dst] = True
    dropped = np.abs(modes[~kept])
    return out, float(dropped.max()) if dropped.size else 0.0


def multiply(f: ScalarField, g: ScalarField) -> ScalarField:
    """Pointwise product, dealiased on the doubled grid then truncated."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    n_big = tuple(2 * n for n in grid.n)
    fv = np.fft.ifftn(pad_modes(f.modes, grid.n, n_big))
    gv = np.fft.ifftn(pad_modes(g.modes, grid.n, n_big))
    prod_modes = np.fft.fftn(fv * gv) * (np.prod(n_big) / 1.0)
    modes, dropped = truncate_modes(prod_modes, grid.n, n_big)
    scale = max(np.abs(f.modes).max() * np.abs(g.modes).max(), 0.0)
    overflow = f.overflow or g.overflow or dropped > 1e-13 * scale
    return ScalarField(grid, modes=modes, real=f.real and g.real,
                       overflow=overflow)


# -- CSV interchange ------------------------------------------------------


def dump_field_csv(f: ScalarField, path) -> None:
    """Write position samples: ``axis0,...,axis{d-1},re,im`` row-major."""
    d = f.grid.d
    coords = np.meshgrid(*[np.arange(f.grid.n[mu]) * (f.grid.length[mu] / f.grid.n[mu])
                           for mu in range(d)], indexing="ij")
    vals = f.values
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"axis{mu}" for mu in range(d)] + ["re", "im"])
        flat = [c.ravel() for c in coords]
        vre, vim = vals.real.ravel(), vals.imag.ravel()
        for i in range(f.grid.site_count):
            w.writerow([repr(float(c[i])) for c in flat]
                       + [repr(float(vre[i])), repr(float(vim[i]))])


def dump_modes_csv(f: ScalarField, path) -> None:
    """Write Fourier coefficients with integer wave-vector columns."""
    d = f.grid.d
    mv = f.grid.mode_vectors().reshape(-1, d)
    m = f.modes.ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"m{mu}" for mu in range(d)] + ["re", "im"])
        for i in range(f.grid.site_count):
            w.writerow([int(mv[i, mu]) for mu in range(d)]
                       + [repr(float(m[i].real)), repr(float(m[i].imag))])


def load_field_csv(grid: GridSpec, path) -> ScalarField:
    """Read a position dump written by :func:`dump_field_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[-2:] != ["re", "im"]:
        raise ValueError(f"unrecognized field CSV header {header}")
    if len(body) != grid.site_count:
        raise ValueError(f"expected {grid.site_count} rows, found {len(body)}")
    vals = np.array([float(r[-2]) + 1j * float(r[-1]) for r in body],
                    dtype=np.complex128).reshape(grid.shape)
    return field_from_values(grid, vals)
