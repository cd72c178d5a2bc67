"""Exponential and IMEX one-step schemes for du/dt = -lam u + N(u).

``lam`` is a real nonnegative array of per-mode decay rates, ``N`` a
function of the coefficient array. The ETD schemes treat the linear part
exactly, so a mode with N = 0 is multiplied by exp(-lam h) to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["phi_functions", "Integrator", "make_integrator", "INTEGRATORS"]

INTEGRATORS = ("ETD-RK2", "ETD-RK4", "IMEX-CN")

# below this |z| the phi functions are summed as power series; the closed
# forms lose about log10(1/|z|^k) digits to cancellation for phi_k
SERIES_RADIUS = 0.5
_SERIES_TERMS = 24


def phi_functions(z: np.ndarray, order: int = 3) -> list[np.ndarray]:
    """[phi_0, ..., phi_order] evaluated at z (real, typically z = -lam h <= 0).

    phi_0 = e^z, phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_RADIUS
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    out = [np.exp(z)]
    direct = out[0]
    for k in range(1, order + 1):
        direct = (direct - 1.0 / math.factorial(k - 1)) / zl
        series = np.zeros_like(z)
        for j in reversed(range(_SERIES_TERMS)):
            series = series * zs + 1.0 / math.factorial(j + k)
        out.append(np.where(small, series, direct))
    return out


NonlinearFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class Integrator:
    """A one-step scheme with coefficients precomputed for fixed lam and h."""

    name: str
    lam: np.ndarray
    h: float

    def __post_init__(self):
        if self.name not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.name!r}")
        if not self.h > 0:
            raise ValueError("time step must be positive")
        z = -self.lam * self.h
        if self.name == "ETD-RK2":
            e, p1, p2 = phi_functions(z, 2)
            self._c = (e, self.h * p1, self.h * p2)
        elif self.name == "ETD-RK4":
            e, p1, p2, p3 = phi_functions(z, 3)
            e2, q1 = phi_functions(z / 2.0, 1)
            h = self.h
            self._c = (
                e, e2, 0.5 * h * q1,
                h * (p1 - 3.0 * p2 + 4.0 * p3),
                h * 2.0 * (p2 - 2.0 * p3),
                h * (4.0 * p3 - p2),
            )
        else:
            half = 0.5 * self.h * self.lam
            self._c = ((1.0 - half) / (1.0 + half), self.h / (1.0 + half))

    def step(self, u: np.ndarray, nonlinear: NonlinearFn, nu: np.ndarray | None = None):
        """Advance u by h. ``nu`` may carry an already evaluated N(u)."""
        nu = nonlinear(u) if nu is None else nu
        if self.name == "ETD-RK2":
            e, hp1, hp2 = self._c
            a = e * u + hp1 * nu
            return a + hp2 * (nonlinear(a) - nu)
        if self.name == "ETD-RK4":
            e, e2, hq1, f1, f2, f3 = self._c
            eu = e2 * u
            a = eu + hq1 * nu
            na = nonlinear(a)
            b = eu + hq1 * na
            nb = nonlinear(b)
            c = e2 * a + hq1 * (2.0 * nb - nu)
            nc = nonlinear(c)
            return e * u + f1 * nu + f2 * (na + nb) + f3 * nc
        # Crank-Nicolson on the linear part, Heun on the nonlinear part
        damp, gain = self._c
        base = damp * u
        pred = base + gain * nu
        return base + 0.5 * gain * (nu + nonlinear(pred))


def make_integrator(name: str, lam: np.ndarray, h: float) -> Integrator:
    return Integrator(name, lam, h)
