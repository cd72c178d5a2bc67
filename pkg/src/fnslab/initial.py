"""Initial conditions: Taylor-Green, single mode, random band-limited, lacunary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import GridSpec, SpectralField, _project, hermitian_part, to_spectral

__all__ = [
    "InitialSpec",
    "taylor_green",
    "single_mode",
    "random_band_limited",
    "lacunary",
    "make_initial",
]


@dataclass(frozen=True)
class InitialSpec:
    """Declarative description of an initial condition.

    ``kind`` selects the generator; the remaining fields are used only by
    the generators that need them.
    """

    kind: str = "taylor-green"
    amplitude: float = 1.0
    mode: tuple[int, int, int] = (1, 0, 0)
    polarization: tuple[float, float, float] = (0.0, 1.0, 0.0)
    slope: float = 5.0 / 3.0
    kmin: float = 1.0
    kmax: float = 4.0
    alpha: float = 0.4
    octaves: int = 5
    seed: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    KINDS = ("taylor-green", "single-mode", "random", "lacunary", "zero")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial condition kind {self.kind!r}")


def _finish(grid: GridSpec, coeffs: np.ndarray) -> SpectralField:
    coeffs = hermitian_part(coeffs) * grid.dealias_mask
    coeffs[:, 0, 0, 0] = 0.0
    return SpectralField(grid, coeffs, True)


def taylor_green(grid: GridSpec, amplitude: float = 1.0) -> SpectralField:
    """u = A (sin x cos y cos z, -cos x sin y cos z, 0) in scaled coordinates."""
    x, y, z = grid.points() * grid.k_scale
    u = amplitude * np.stack([
        np.sin(x) * np.cos(y) * np.cos(z),
        -np.cos(x) * np.sin(y) * np.cos(z),
        np.zeros_like(x),
    ])
    return _finish(grid, to_spectral(u))


def single_mode(grid: GridSpec, mode=(1, 0, 0), amplitude: float = 1.0,
                polarization=(0.0, 1.0, 0.0)) -> SpectralField:
    """a cos(k.x) e with e the unit polarization made orthogonal to k."""
    m = np.asarray(mode, dtype=float)
    if not m.any():
        raise ValueError("single mode needs a nonzero wavevector")
    e = np.asarray(polarization, dtype=float)
    e = e - m * (e @ m) / (m @ m)
    norm = np.linalg.norm(e)
    if norm == 0:
        raise ValueError("polarization is parallel to the wavevector")
    e /= norm
    kept = grid.n_retained
    if np.max(np.abs(m)) > kept:
        raise ValueError(f"mode {tuple(mode)} lies outside the dealiased band |m| <= {kept}")
    coeffs = np.zeros((3, grid.n, grid.n, grid.n), dtype=complex)
    plus, minus = grid.slot(mode), grid.slot(-m.astype(int))
    for c in range(3):
        coeffs[(c, *plus)] += 0.5 * amplitude * e[c]
        coeffs[(c, *minus)] += 0.5 * amplitude * e[c]
    return SpectralField(grid, coeffs, True)


def random_band_limited(grid: GridSpec, seed: int = 0, slope: float = 5.0 / 3.0,
                        kmin: float = 1.0, kmax: float | None = None,
                        energy: float | None = None) -> SpectralField:
    """Seeded divergence-free field with shell spectrum E(k) ~ k^-slope.

    Coefficients come from the transform of real Gaussian noise, so Hermitian
    symmetry holds by construction. ``energy`` fixes H_{0,1} if given.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3, grid.n, grid.n, grid.n))
    coeffs = to_spectral(noise)
    kmag = np.sqrt(grid.ksq) / grid.k_scale
    kmax = grid.n_retained if kmax is None else kmax
    band = (kmag >= kmin) & (kmag <= kmax)
    # shell energy ~ k^2 |u_k|^2, so |u_k| ~ k^{-(slope + 2)/2}
    with np.errstate(divide="ignore"):
        amp = np.where(band, kmag ** (-(slope + 2.0) / 2.0), 0.0)
    coeffs = _project(coeffs * amp, grid)
    u = _finish(grid, coeffs)
    if energy is not None:
        h = grid.volume * np.sum(np.abs(u.coeffs) ** 2)
        if h > 0:
            u = u.replace(u.coeffs * math.sqrt(energy / h))
    return u


def _beltrami(x, y, z, k, phases, weights):
    """ABC flow at wavenumber k; divergence-free and an eigenfield of curl."""
    a, b, c = weights
    pa, pb, pc = phases
    return np.stack([
        a * np.sin(k * z + pa) + c * np.cos(k * y + pc),
        b * np.sin(k * x + pb) + a * np.cos(k * z + pa),
        c * np.sin(k * y + pc) + b * np.cos(k * x + pb),
    ])


def lacunary(grid: GridSpec, alpha: float = 0.4, octaves: int = 5, seed: int = 0,
             amplitude: float = 1.0) -> SpectralField:
    """Sum over j < octaves of 2^{-alpha j} times an ABC flow at wavenumber 2^j.

    Phases are seeded uniform random. The field is C^alpha uniformly in the
    number of octaves. Octaves beyond the dealiased band are rejected.
    """
    top = 2 ** (octaves - 1)
    if top > grid.n_retained:
        raise ValueError(
            f"{octaves} octaves need wavenumber {top} but the band ends at {grid.n_retained}"
        )
    rng = np.random.default_rng(seed)
    x, y, z = grid.points() * grid.k_scale
    u = np.zeros((3, *x.shape))
    for j in range(octaves):
        phases = rng.uniform(0.0, 2.0 * math.pi, size=3)
        u += 2.0 ** (-alpha * j) * _beltrami(x, y, z, 2**j, phases, (1.0, 1.0, 1.0))
    return _finish(grid, to_spectral(amplitude * u))


def make_initial(grid: GridSpec, spec: InitialSpec) -> SpectralField:
    if spec.kind == "taylor-green":
        return taylor_green(grid, spec.amplitude)
    if spec.kind == "single-mode":
        return single_mode(grid, spec.mode, spec.amplitude, spec.polarization)
    if spec.kind == "random":
        u = random_band_limited(grid, spec.seed, spec.slope, spec.kmin, spec.kmax)
        return u * spec.amplitude
    if spec.kind == "lacunary":
        return lacunary(grid, spec.alpha, spec.octaves, spec.seed, spec.amplitude)
    return SpectralField(grid, np.zeros((3, grid.n, grid.n, grid.n)), True)
