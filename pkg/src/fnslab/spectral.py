"""Fourier representation of periodic fields on the 3-torus [0, L]^3.

Coefficients are stored on the full complex FFT lattice with the
normalisation

    u(x) = sum_k u_hat(k) exp(i k.x),        k = (2 pi / L) m,  m in Z^3,

so ``cos(x1)`` on the 2 pi-torus has coefficients 1/2 at m = (+-1, 0, 0).
Arrays have shape ``(components, n, n, n)`` in standard FFT ordering.

All operators are pure functions of their inputs. Products are always
formed in physical space; with the 2/3-rule mask the quadratic products
used here are alias-free on the base grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

__all__ = [
    "FieldDataError",
    "GridSpec",
    "SpectralField",
    "PhysicalField",
    "transform",
    "inverse_transform",
    "resample",
    "to_physical",
    "gradient",
    "divergence",
    "apply_fractional_laplacian",
    "leray_project",
    "dealias",
    "compute_pressure",
    "nonlinear_term",
    "advection",
    "inner_product",
    "padded_size",
    "real_fields",
    "real_coefficients",
    "hermitian_part",
]

TWO_PI = 2.0 * math.pi


class FieldDataError(ValueError):
    """Raised for non-finite or malformed field data."""


@lru_cache(maxsize=32)
def _lattice(n: int, domain_length: float):
    m = np.fft.fftfreq(n, d=1.0 / n)  # integer mode numbers, FFT order
    k1 = m * (TWO_PI / domain_length)
    kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij")
    kvec = np.stack([kx, ky, kz])
    ksq = kx * kx + ky * ky + kz * kz
    mx, my, mz = np.meshgrid(m, m, m, indexing="ij")
    for a in (kvec, ksq):
        a.flags.writeable = False
    return m, kvec, ksq, np.stack([mx, my, mz]).astype(np.int64)


@dataclass(frozen=True)
class GridSpec:
    """Cubic collocation grid with ``n`` points per axis on [0, L]^3.

    ``n_retained`` modes survive on each side of zero after dealiasing:
    floor(dealias_fraction * n / 2). Quadratic products are alias free when
    3 n_retained < n, which fails at the 2/3 fraction when 3 divides n.
    """

    n: int
    domain_length: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n <= 0 or self.n % 2:
            raise ValueError(f"n must be a positive even integer, got {self.n!r}")
        if not (self.domain_length > 0 and math.isfinite(self.domain_length)):
            raise ValueError("domain_length must be positive and finite")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise ValueError("dealias_fraction must lie in (0, 1]")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "domain_length", float(self.domain_length))

    @property
    def k_scale(self) -> float:
        return TWO_PI / self.domain_length

    @property
    def spacing(self) -> float:
        return self.domain_length / self.n

    @property
    def volume(self) -> float:
        return self.domain_length**3

    @property
    def n_retained(self) -> int:
        # tiny guard so that e.g. (2/3)*48/2 = 15.999... still floors to 16
        return int(math.floor(self.dealias_fraction * self.n / 2 + 1e-9))

    @property
    def kmax(self) -> float:
        """Largest retained wavenumber along one axis."""
        return self.n_retained * self.k_scale

    @property
    def mode_numbers(self) -> np.ndarray:
        return _lattice(self.n, self.domain_length)[0]

    @property
    def kvec(self) -> np.ndarray:
        return _lattice(self.n, self.domain_length)[1]

    @property
    def ksq(self) -> np.ndarray:
        return _lattice(self.n, self.domain_length)[2]

    @property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @property
    def integer_lattice(self) -> np.ndarray:
        return _lattice(self.n, self.domain_length)[3]

    @property
    def dealias_mask(self) -> np.ndarray:
        return _dealias_mask(self.n, self.n_retained)

    def wavevector(self, index) -> np.ndarray:
        """Physical wavevector of the integer mode triple ``index``."""
        return np.asarray(index, dtype=float) * self.k_scale

    def slot(self, index) -> tuple[int, int, int]:
        """Array position of the integer mode triple ``index``."""
        return tuple(int(i) % self.n for i in index)

    def points(self) -> np.ndarray:
        x = np.arange(self.n) * self.spacing
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))

    def with_n(self, n: int) -> GridSpec:
        return GridSpec(n, self.domain_length, self.dealias_fraction)


@lru_cache(maxsize=32)
def _dealias_mask(n: int, kept: int) -> np.ndarray:
    m = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    keep = m <= kept
    mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
    mask.flags.writeable = False
    return mask


def _frozen_view(a: np.ndarray) -> np.ndarray:
    v = a.view()
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real periodic field.

    ``divergence_free`` is a declared flag; ``check_divergence_free`` and
    ``check_hermitian`` verify the corresponding invariants numerically.
    """

    grid: GridSpec
    coeffs: np.ndarray
    divergence_free: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == 3:
            c = c[None]
        n = self.grid.n
        if c.ndim != 4 or c.shape[1:] != (n, n, n) or c.shape[0] not in (1, 3):
            raise FieldDataError(
                f"coefficient array of shape {c.shape} does not match grid n={n}"
            )
        object.__setattr__(self, "coeffs", _frozen_view(c))

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def mean_free(self) -> bool:
        return not np.any(self.coeffs[:, 0, 0, 0])

    def coeff(self, index, component: int = 0) -> complex:
        return complex(self.coeffs[(component, *self.grid.slot(index))])

    def replace(self, coeffs: np.ndarray, divergence_free: bool | None = None):
        flag = self.divergence_free if divergence_free is None else divergence_free
        return SpectralField(self.grid, coeffs, flag)

    def __add__(self, other: SpectralField) -> SpectralField:
        return self.replace(self.coeffs + other.coeffs,
                            self.divergence_free and other.divergence_free)

    def __sub__(self, other: SpectralField) -> SpectralField:
        return self.replace(self.coeffs - other.coeffs,
                            self.divergence_free and other.divergence_free)

    def __mul__(self, scalar: float) -> SpectralField:
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    def check_hermitian(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        flipped = np.conj(np.roll(c[:, ::-1, ::-1, ::-1], 1, axis=(1, 2, 3)))
        scale = max(float(np.max(np.abs(c))), np.finfo(float).tiny)
        return bool(np.max(np.abs(c - flipped)) <= rtol * scale)

    def check_divergence_free(self, tol: float = 1e-12) -> bool:
        if self.components != 3:
            return False
        kv = self.grid.kvec
        div = np.abs(np.einsum("jxyz,jxyz->xyz", kv, self.coeffs))
        amp = np.sqrt(np.sum(np.abs(self.coeffs) ** 2, axis=0))
        # |k.u_hat| is compared against |k||u_hat|, i.e. the relative angle
        ref = amp * np.sqrt(self.grid.ksq)
        return bool(np.all(div <= tol * ref + 1e-300))


@dataclass(frozen=True)
class PhysicalField:
    """Real samples on the collocation lattice, shape ``(components, n, n, n)``."""

    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=np.float64)
        if a.ndim == 3:
            a = a[None]
        n = self.grid.n
        if a.ndim != 4 or a.shape[1:] != (n, n, n):
            raise FieldDataError(f"samples of shape {a.shape} do not match grid n={n}")
        object.__setattr__(self, "samples", _frozen_view(a))

    @property
    def components(self) -> int:
        return self.samples.shape[0]


_AXES = (-3, -2, -1)


def transform(f: PhysicalField) -> SpectralField:
    """Physical samples to amplitudes of exp(i k.x)."""
    if not np.all(np.isfinite(f.samples)):
        raise FieldDataError("physical samples contain non-finite values")
    return SpectralField(f.grid, to_spectral(f.samples))


def inverse_transform(u: SpectralField) -> PhysicalField:
    return PhysicalField(u.grid, to_physical(u.coeffs))


def to_physical(coeffs: np.ndarray) -> np.ndarray:
    """Real part of the inverse transform of a coefficient array (any leading dims)."""
    return sfft.ifftn(coeffs, axes=_AXES, norm="forward").real


def to_spectral(samples: np.ndarray) -> np.ndarray:
    return sfft.fftn(samples, axes=_AXES, norm="forward")


def _resize_axis(a: np.ndarray, axis: int, m: int) -> np.ndarray:
    n = a.shape[axis]
    if m == n:
        return a
    shape = list(a.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=a.dtype)

    def sl(lo, hi):
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(lo, hi)
        return tuple(idx)

    if m > n:
        h = n // 2
        out[sl(0, h)] = a[sl(0, h)]
        out[sl(m - h + 1, m)] = a[sl(h + 1, n)]
        # Nyquist coefficient is shared by +-n/2 on the larger lattice
        out[sl(h, h + 1)] = 0.5 * a[sl(h, h + 1)]
        out[sl(m - h, m - h + 1)] = 0.5 * a[sl(h, h + 1)]
    else:
        h = m // 2
        out[sl(0, h)] = a[sl(0, h)]
        out[sl(h + 1, m)] = a[sl(n - h + 1, n)]
        out[sl(h, h + 1)] = a[sl(h, h + 1)] + a[sl(n - h, n - h + 1)]
    return out


def resample(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Zero-pad (or truncate) a coefficient array onto an m^3 lattice.

    Padding is exact: the trigonometric polynomial is unchanged, so the
    inverse transform on the larger lattice is spectral interpolation.
    """
    out = coeffs
    for ax in _AXES:
        out = _resize_axis(out, ax % out.ndim, m)
    return out


def padded_size(band: int, base: int | None = None) -> int:
    """Smallest even grid size strictly larger than ``2 * band``.

    If ``base`` is given, the result is rounded up to a multiple of it so
    the base lattice points are a subset of the padded ones.
    """
    m = 2 * band + 2
    if base:
        m = base * math.ceil(m / base)
    return m + (m % 2)


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """(c(k) + conj c(-k)) / 2, the coefficients of the real part of a field."""
    return 0.5 * (coeffs + np.conj(_reflect(coeffs)))


def gradient(u: SpectralField) -> np.ndarray:
    """Coefficients of d_j u_i, shape (components, 3, n, n, n)."""
    return 1j * u.grid.kvec[None] * u.coeffs[:, None]


def divergence(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, 1j * np.einsum("jxyz,jxyz->xyz", u.grid.kvec, u.coeffs))


def fractional_multiplier(grid: GridSpec, s: float) -> np.ndarray:
    """|k|^{2s} with the k = 0 entry set to 0 for every s (A^0 kills the mean)."""
    if s < 0:
        raise ValueError("negative fractional powers are not supported")
    mult = np.power(grid.ksq, s) if s != 1 else grid.ksq.copy()
    mult[0, 0, 0] = 0.0
    return mult


def apply_fractional_laplacian(u: SpectralField, s: float) -> SpectralField:
    """A^s u with A = -Laplacian, i.e. multiply by |k|^{2s}."""
    return u.replace(u.coeffs * fractional_multiplier(u.grid, s))


def _project(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    kv = grid.kvec
    ksq = grid.ksq.copy()
    ksq[0, 0, 0] = 1.0
    kdotu = np.einsum("jxyz,jxyz->xyz", kv, coeffs)
    return coeffs - kv * (kdotu / ksq)[None]


def leray_project(u: SpectralField) -> SpectralField:
    """(I - k k^T / |k|^2) u_hat(k) for k != 0; identity at k = 0."""
    if u.components != 3:
        raise ValueError("Leray projection needs a vector field")
    return SpectralField(u.grid, _project(u.coeffs, u.grid), True)


def dealias(u: SpectralField) -> SpectralField:
    return u.replace(u.coeffs * u.grid.dealias_mask)


def compute_pressure(u: SpectralField) -> SpectralField:
    """Solve -Lap P = (grad grad) : (u u), P_hat(0) = 0."""
    grid = u.grid
    phys = real_fields(u.coeffs)
    kv = grid.kvec
    pairs = [(i, j) for i in range(3) for j in range(i, 3)]
    prods = real_coefficients(np.stack([phys[i] * phys[j] for i, j in pairs]))
    acc = np.zeros(u.coeffs.shape[1:], dtype=complex)
    for (i, j), prod in zip(pairs, prods * grid.dealias_mask):
        w = 1.0 if i == j else 2.0
        acc += w * kv[i] * kv[j] * prod
    ksq = grid.ksq.copy()
    ksq[0, 0, 0] = 1.0
    p = -acc / ksq
    p[0, 0, 0] = 0.0
    return SpectralField(grid, p)


def _reflect(c: np.ndarray) -> np.ndarray:
    """c(-k) on the FFT lattice (last three axes)."""
    return np.roll(c[..., ::-1, ::-1, ::-1], 1, axis=_AXES)


def real_fields(coeffs: np.ndarray) -> np.ndarray:
    """Physical samples of a stack of real fields, two per complex transform.

    Exact for Hermitian coefficient arrays: the transform of a + i b has
    real part a and imaginary part b.
    """
    count = coeffs.shape[0]
    if count % 2:
        coeffs = np.concatenate([coeffs, np.zeros_like(coeffs[:1])])
    z = sfft.ifftn(coeffs[0::2] + 1j * coeffs[1::2], axes=_AXES, norm="forward")
    out = np.empty((z.shape[0] * 2, *z.shape[1:]))
    out[0::2], out[1::2] = z.real, z.imag
    return out[:count]


def real_coefficients(samples: np.ndarray) -> np.ndarray:
    """Coefficients of a stack of real fields, two per complex transform.

    The output is Hermitian by construction.
    """
    count = samples.shape[0]
    if count % 2:
        samples = np.concatenate([samples, np.zeros_like(samples[:1])])
    z = sfft.fftn(samples[0::2] + 1j * samples[1::2], axes=_AXES, norm="forward")
    zr = np.conj(_reflect(z))
    out = np.empty((z.shape[0] * 2, *z.shape[1:]), dtype=complex)
    out[0::2] = 0.5 * (z + zr)
    out[1::2] = -0.5j * (z - zr)
    return out[:count]


def advection(u: SpectralField, mask: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of (u.grad)u and the physical velocity.

    Products are formed on the base grid; with ``mask`` the result is
    truncated to the dealiased band.
    """
    grid = u.grid
    stacked = np.concatenate([u.coeffs, gradient(u).reshape(9, *u.coeffs.shape[1:])])
    phys = real_fields(stacked)
    vel = phys[:3]
    grads = phys[3:].reshape(3, 3, *phys.shape[1:])
    adv = np.einsum("jxyz,ijxyz->ixyz", vel, grads)
    out = real_coefficients(adv)
    if mask:
        out *= grid.dealias_mask
    return out, vel


_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def flux_divergence(coeffs: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of div(u u) truncated to the band, and the physical velocity.

    Equals (u.grad)u whenever div u = 0, at a third of the transforms.
    """
    vel = real_fields(coeffs)
    prods = real_coefficients(np.stack([vel[i] * vel[j] for i, j in _PAIRS]))
    prods *= grid.dealias_mask
    t = {}
    for (i, j), c in zip(_PAIRS, prods):
        t[i, j] = t[j, i] = c
    kv = grid.kvec
    out = np.empty_like(coeffs)
    for i in range(3):
        out[i] = 1j * (kv[0] * t[i, 0] + kv[1] * t[i, 1] + kv[2] * t[i, 2])
    return out, vel


def nonlinear_term(u: SpectralField) -> SpectralField:
    """-P_N Pi (u.grad)u, the projected and dealiased advection term."""
    adv, _ = advection(u)
    return SpectralField(u.grid, -_project(adv, u.grid), True)


def inner_product(u: SpectralField, v: SpectralField) -> float:
    """Discrete L^2 inner product, int u.v dx via Plancherel."""
    prod = np.real(u.coeffs * np.conj(v.coeffs))
    return float(u.grid.volume * prod.sum())
