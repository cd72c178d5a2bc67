"""Norms and seminorms of spectral fields.

``H_{n,m}`` follows the ladder notation ``int |grad^n u|^{2m} dx``; note it
is the 2m-th *power* of the W^{n,2m} seminorm. For m = 1 it is evaluated
spectrally (Plancherel); for m > 1 the pointwise product is integrated on a
padded lattice large enough to integrate the 2m-fold product exactly.

Littlewood-Paley blocks are sharp annuli ``2^j <= |k| < 2^{j+1}`` with the
low block ``Delta_{-1}`` holding ``|k| <= 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    GridSpec,
    SpectralField,
    apply_fractional_laplacian,
    fractional_multiplier,
    padded_size,
    resample,
    to_physical,
)

__all__ = [
    "NormRequest",
    "sobolev_ladder_norm",
    "frac_sobolev",
    "lp_norm",
    "sup_norm",
    "sup_magnitude",
    "besov_norm",
    "block_index",
    "littlewood_paley_blocks",
    "evaluate",
    "support_band",
]

OVERSAMPLE = 2
REFINE = 8


class _Modes:
    """Off-lattice evaluation of a band-limited field and its derivatives."""

    def __init__(self, coeffs: np.ndarray, grid: GridSpec):
        nz = np.any(coeffs != 0, axis=0)
        self.k = grid.kvec[:, nz].T  # (M, 3)
        self.c = coeffs[:, nz]  # (C, M)

    def _local(self, x):
        ph = np.exp(1j * (self.k @ x))
        cp = self.c * ph
        val = cp.real.sum(axis=1)
        grad = np.real(1j * cp @ self.k)  # (C, 3)
        hess = -np.real(np.einsum("cm,mi,mj->cij", cp, self.k, self.k))
        f = float(val @ val)
        g = 2.0 * grad.T @ val
        H = 2.0 * (grad.T @ grad + np.einsum("c,cij->ij", val, hess))
        return f, g, H

    def local_max(self, x: np.ndarray, radius: float, iters: int = 12) -> float:
        """Magnitude at a nearby local max of |u|^2, by damped Newton steps."""
        f, g, H = self._local(x)
        for _ in range(iters):
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                break
            if np.linalg.eigvalsh(H).max() >= 0 or not np.all(np.isfinite(step)):
                break
            norm = float(np.linalg.norm(step))
            if norm > radius:
                step *= radius / norm
            f1, g1, H1 = self._local(x + step)
            if f1 < f:
                break
            x, f, g, H = x + step, f1, g1, H1
            if norm < 1e-14 * (1.0 + float(np.linalg.norm(x))):
                break
        return math.sqrt(max(f, 0.0))


@dataclass(frozen=True)
class NormRequest:
    """A norm to evaluate, e.g. for the ladder in diagnostics records.

    kind is one of ``"Hnm"``, ``"FracSobolev"``, ``"Lp"``, ``"Besov"``.
    """

    kind: str
    n: float = 0.0
    m: int = 1
    s: float = 0.0
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in ("Hnm", "FracSobolev", "Lp", "Besov"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "Hnm":
            _check_nm(self.n, self.m)
        if self.kind in ("Lp", "Besov") and self.p < 1:
            raise ValueError("p must be >= 1")
        if self.kind == "Besov" and self.q < 1:
            raise ValueError("q must be >= 1")

    def __call__(self, u: SpectralField) -> float:
        if self.kind == "Hnm":
            return sobolev_ladder_norm(u, self.n, self.m)
        if self.kind == "FracSobolev":
            return frac_sobolev(u, self.s)
        if self.kind == "Lp":
            return lp_norm(u, self.p)
        return besov_norm(u, self.s, self.p, self.q)


def _check_nm(n, m):
    if n < 0:
        raise ValueError("derivative order n must be non-negative")
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    if m > 1 and float(n) != int(n):
        raise ValueError("fractional n is only defined for m = 1")


def support_band(u: SpectralField) -> int:
    """Largest |mode number| along any axis carrying a nonzero coefficient."""
    nz = np.any(u.coeffs != 0, axis=0)
    if not nz.any():
        return 0
    lat = np.abs(u.grid.integer_lattice)
    return int(lat.max(axis=0)[nz].max())


def evaluate(u: SpectralField, m: int) -> np.ndarray:
    """Samples of ``u`` on an m^3 lattice (spectral interpolation)."""
    return to_physical(resample(u.coeffs, m))


def sobolev_ladder_norm(u: SpectralField, n: float, m: int = 1) -> float:
    """H_{n,m} = int |grad^n u|^{2m} dx."""
    _check_nm(n, m)
    grid = u.grid
    power = np.sum(np.abs(u.coeffs) ** 2, axis=0)
    if m == 1:
        weight = grid.ksq**n if n else np.ones_like(grid.ksq)
        return float(grid.volume * np.sum(weight * power))
    n = int(n)
    band = support_band(u)
    big = padded_size(2 * m * band)
    shape = (big,) * 3
    modulus_sq = np.zeros(shape)
    kv = grid.kvec
    for comp in range(u.components):
        for idx in itertools.product(range(3), repeat=n):
            mult = np.ones(grid.ksq.shape, dtype=complex)
            for a in idx:
                mult = mult * (1j * kv[a])
            d = to_physical(resample(u.coeffs[comp] * mult, big))
            modulus_sq += d * d
    return float(grid.volume * np.mean(modulus_sq**m))


def frac_sobolev(u: SpectralField, s: float) -> float:
    """H_{s,1} = int |A^{s/2} u|^2 dx (homogeneous: the mean is excluded)."""
    if s < 0:
        raise ValueError("s must be non-negative")
    mult = fractional_multiplier(u.grid, s)
    power = np.sum(np.abs(u.coeffs) ** 2, axis=0)
    return float(u.grid.volume * np.sum(mult * power))


def _magnitude(samples: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(samples * samples, axis=0))


def sup_magnitude(coeffs: np.ndarray, grid: GridSpec, oversample: int = OVERSAMPLE,
                  refine: int = REFINE) -> float:
    """Max over the torus of the Euclidean magnitude of a coefficient stack.

    Candidates are the largest values on the ``oversample``-times refined
    lattice; the best ``refine`` of them are polished by Newton steps on the
    exact trigonometric polynomial (``refine=0`` returns the lattice max).
    """
    m = oversample * grid.n
    mag = _magnitude(to_physical(resample(coeffs, m)))
    best = float(mag.max())
    if refine <= 0 or best == 0.0:
        return best
    h = grid.domain_length / m
    modes = _Modes(coeffs, grid)
    for i in np.argsort(mag, axis=None)[::-1][:refine]:
        x0 = np.array(np.unravel_index(i, mag.shape), dtype=float) * h
        best = max(best, modes.local_max(x0, h))
    return best


def sup_norm(u: SpectralField, oversample: int = OVERSAMPLE, refine: int = REFINE) -> float:
    """Max of the pointwise Euclidean magnitude; see :func:`sup_magnitude`."""
    return sup_magnitude(u.coeffs, u.grid, oversample, refine)


def lp_norm(u: SpectralField, p: float, oversample: int = OVERSAMPLE) -> float:
    """(int |u|^p dx)^{1/p} by quadrature on the oversampled lattice."""
    if p == math.inf:
        return sup_norm(u, oversample)
    if p < 1:
        raise ValueError("p must be >= 1")
    mag = _magnitude(evaluate(u, oversample * u.grid.n))
    mean = np.mean(mag**p)
    return float((u.grid.volume * mean) ** (1.0 / p))


def block_index(grid: GridSpec) -> np.ndarray:
    """Littlewood-Paley block of every lattice site.

    j = -1 for |k| <= 1, else the j with 2^j <= |k| < 2^{j+1}.
    Computed from the binary exponent of |k|^2 so dyadic edges are exact.
    """
    ksq = grid.ksq
    _, exp = np.frexp(ksq)  # ksq = mant * 2**exp, mant in [0.5, 1)
    j = (exp - 1) // 2
    return np.where(ksq <= 1.0, -1, j).astype(int)


def littlewood_paley_blocks(u: SpectralField) -> dict[int, SpectralField]:
    idx = block_index(u.grid)
    blocks = {}
    for j in np.unique(idx[np.any(u.coeffs != 0, axis=0)]):
        blocks[int(j)] = u.replace(u.coeffs * (idx == j))
    return blocks


def besov_norm(u: SpectralField, s: float, p: float, q: float) -> float:
    """||Delta_{-1} u||_p + (sum_j (2^{sj} ||Delta_j u||_p)^q)^{1/q}, sup if q = inf."""
    blocks = littlewood_paley_blocks(u)
    low = lp_norm(blocks.pop(-1), p) if -1 in blocks else 0.0
    terms = np.array([2.0 ** (s * j) * lp_norm(b, p) for j, b in sorted(blocks.items())])
    if terms.size == 0:
        return low
    if q == math.inf:
        return low + float(terms.max())
    return low + float(np.sum(terms**q) ** (1.0 / q))


def frac_sobolev_via_operator(u: SpectralField, s: float) -> float:
    """Same as :func:`frac_sobolev` but through the operator route."""
    return sobolev_ladder_norm(apply_fractional_laplacian(u, s / 2), 0, 1)
