"""Monitored functionals: records, energy budget, regularity monitor,
local energy balance and time averages of the norm hierarchy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .defect import Mollifier, defect_identity, is_resolved
from .exponents import LadderExponents, Undefined, is_defined
from .norms import sup_norm, support_band
from .spectral import (
    GridSpec,
    SpectralField,
    apply_fractional_laplacian,
    padded_size,
    resample,
    to_physical,
    to_spectral,
)

FIVE_SIXTHS = Fraction(5, 6)

__all__ = [
    "DiagnosticsRecord",
    "Accumulators",
    "prodi_serrin_integrand",
    "MonitorValue",
    "trapezoid_step",
    "energy_budget",
    "time_average",
    "time_average_hierarchy",
    "HierarchyRow",
    "TestFunction",
    "local_energy_balance_terms",
    "local_energy_balance_residual",
    "ladder_key",
]


def ladder_key(n: float, m: int = 1) -> str:
    """Record key for H_{n,m}: ``"2"`` or ``"1.5"`` for m = 1, ``"2,3"`` otherwise."""
    ns = f"{n:g}"
    return ns if m == 1 else f"{ns},{m}"


@dataclass
class DiagnosticsRecord:
    """One time sample of the monitored functionals.

    Undefined or non-finite quantities are ``None``.
    """

    t: float
    H01: float | None
    Hs1: float | None
    ps_integrand: float | None
    ps_integral: float | None
    budget_residual: float | None
    defect: dict | None = None
    ladder: dict = field(default_factory=dict)
    blowup: bool = False

    KEYS = ("t", "H01", "Hs1", "ps_integrand", "ps_integral", "budget_residual",
            "defect", "ladder", "blowup")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.KEYS}

    @classmethod
    def from_dict(cls, d: dict) -> DiagnosticsRecord:
        if set(d) != set(cls.KEYS):
            raise ValueError(f"record keys {sorted(d)} differ from the schema")
        return cls(**d)


@dataclass(frozen=True)
class MonitorValue:
    """Integrand of the regularity monitor and whether s is in the theorem range."""

    value: float | Undefined
    exponent: float | Undefined
    in_range: bool


def prodi_serrin_integrand(u: SpectralField, s: float) -> MonitorValue:
    """||A^{s/2} u||_inf ** (2s/(3s-1)).

    The exponent is undefined for s <= 1/3; for s >= 1 it is still
    evaluated but flagged as outside the range 1/3 < s < 1.
    """
    ex = LadderExponents(s)
    zeta = ex.zeta_s
    if not is_defined(zeta):
        return MonitorValue(zeta, zeta, False)
    zeta = float(zeta)
    mag = sup_norm(apply_fractional_laplacian(u, s / 2.0))
    return MonitorValue(mag**zeta, zeta, ex.in_monitor_range())


def trapezoid_step(t0: float, f0: float, t1: float, f1: float) -> float:
    return 0.5 * (t1 - t0) * (f0 + f1)


@dataclass
class Accumulators:
    """Running integrals owned by the run loop.

    ``dissipation`` integrates sum_k lam(k)|u_k|^2 L^3 per step by the
    trapezoid rule; ``ps_integral`` integrates the monitor on record samples.
    """

    h01_initial: float = 0.0
    dissipation: float = 0.0
    last_dissipation: float = 0.0
    ps_integral: float = 0.0
    last_ps: float | None = None
    last_ps_time: float | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, d: dict) -> Accumulators:
        return cls(**d)

    def add_ps(self, t: float, value: float | None) -> float | None:
        """Trapezoid update of the monitor integral; None while undefined."""
        if value is None:
            return None
        if self.last_ps is not None:
            self.ps_integral += trapezoid_step(self.last_ps_time, self.last_ps, t, value)
        self.last_ps, self.last_ps_time = value, t
        return self.ps_integral


def energy_budget(times: Sequence[float], h01: Sequence[float], hs1: Sequence[float],
                  nu_s: float, extra: Sequence[float] | None = None) -> np.ndarray:
    """residual_i = H01_i / 2 + int_0^{t_i} (nu_s Hs1 + extra) dt - H01_0 / 2 (trapezoid).

    ``extra`` carries any additional dissipation rate, e.g. eps H_{5/4,1}.
    """
    t = np.asarray(times, dtype=float)
    if t.size < 2:
        raise ValueError("energy budget needs at least two records")
    rate = nu_s * np.asarray(hs1, dtype=float)
    if extra is not None:
        rate = rate + np.asarray(extra, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (rate[1:] + rate[:-1]))])
    h = np.asarray(h01, dtype=float)
    return 0.5 * h + cum - 0.5 * h[0]


def time_average(times: Sequence[float], values: Sequence[float]) -> float:
    """(1/T) int X dt by the trapezoid rule."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("time average needs a positive time span")
    return float(np.sum(0.5 * np.diff(t) * (x[1:] + x[:-1])) / span)


@dataclass(frozen=True)
class HierarchyRow:
    n: float
    m: int
    quantity: str
    exponent: float | Undefined
    average: float | None
    flag: str = ""


def time_average_hierarchy(records: Iterable[DiagnosticsRecord], s: float,
                           n_list: Sequence[float], m_list: Sequence[int]) -> list[HierarchyRow]:
    """Time averages <H_{n,1}^delta_n> and <||grad^n u||_{2m}^{(6s-5) alpha_s(n,m)}>.

    Records must carry ladder entries for every requested (n, m); the L^{2m}
    norm is H_{n,m}^{1/(2m)}.
    """
    records = list(records)
    ex = LadderExponents(s)
    times = [r.t for r in records]
    rows = []
    for n in n_list:
        for m in m_list:
            key = ladder_key(n, m)
            vals = np.array([r.ladder[key] for r in records], dtype=float)
            if m == 1:
                d = ex.delta(n)
                rows.append(_avg_row(n, m, "H^delta", d, times, vals, lambda v, e: v**e))
            a = ex.alpha_s(n, m)
            e = (6 * ex.s - 5) * a if is_defined(a) and ex.s >= FIVE_SIXTHS else (
                a if not is_defined(a) else Undefined("needs s >= 5/6"))
            rows.append(_avg_row(n, m, "norm^((6s-5)alpha_s)", e, times, vals,
                                 lambda v, e, m=m: v ** (e / (2.0 * m))))
    return rows


def _avg_row(n, m, name, exponent, times, vals, power):
    if not is_defined(exponent):
        return HierarchyRow(n, m, name, exponent, None, "undefined")
    e = float(exponent)
    flag = "" if e > 0 else "nonpositive exponent"
    return HierarchyRow(n, m, name, e, time_average(times, power(vals, e)), flag)


@dataclass(frozen=True)
class TestFunction:
    """psi(x, t) = b((t - t0) / width) (1 + a cos(k.x)), b the standard bump.

    ``mode`` is an integer triple; the support in time is (t0 - width, t0 + width).
    """

    t0: float
    width: float
    amplitude: float = 0.0
    mode: tuple[int, int, int] = (1, 0, 0)

    __test__ = False  # not a pytest class

    def time_factor(self, t: float) -> tuple[float, float]:
        """(b, db/dt) at time t."""
        tau = (t - self.t0) / self.width
        if abs(tau) >= 1.0:
            return 0.0, 0.0
        b = math.exp(-1.0 / (1.0 - tau * tau))
        db = b * (-2.0 * tau / (1.0 - tau * tau) ** 2) / self.width
        return b, db

    def spatial(self, grid: GridSpec) -> np.ndarray:
        x = grid.points()
        k = grid.wavevector(self.mode)
        return 1.0 + self.amplitude * np.cos(np.einsum("j,jxyz->xyz", k, x))

    def spatial_gradient(self, grid: GridSpec) -> np.ndarray:
        x = grid.points()
        k = grid.wavevector(self.mode)
        return -self.amplitude * np.sin(np.einsum("j,jxyz->xyz", k, x))[None] * k[:, None, None, None]

    @property
    def band(self) -> int:
        return int(max(abs(m) for m in self.mode)) if self.amplitude else 0


def _pressure_samples(uh: np.ndarray, big: GridSpec, vel: np.ndarray) -> np.ndarray:
    kv = big.kvec
    acc = np.zeros(uh.shape[1:], dtype=complex)
    for i in range(3):
        for j in range(i, 3):
            w = 1.0 if i == j else 2.0
            acc += w * kv[i] * kv[j] * to_spectral(vel[i] * vel[j])
    ksq = big.ksq.copy()
    ksq[0, 0, 0] = 1.0
    p = -acc / ksq
    p[0, 0, 0] = 0.0
    return to_physical(p)


def local_energy_balance_terms(u: SpectralField, t: float, psi: TestFunction, nu_s: float,
                               s: float, epsilon: float | None,
                               kernel: str = "bump") -> dict[str, float]:
    """Space integrals of the five local-balance integrands at one time.

    All products are formed on a lattice that integrates them exactly.
    With ``epsilon`` None the defect term is omitted.
    """
    b, db = psi.time_factor(t)
    grid = u.grid
    band = support_band(u)
    size = padded_size(3 * band + psi.band, base=grid.n)
    big = grid.with_n(size)
    uh = resample(u.coeffs, size)
    vel = to_physical(uh)
    q = np.einsum("ixyz,ixyz->xyz", vel, vel)
    shape = psi.spatial(big)
    grad = psi.spatial_gradient(big)
    vol = big.volume
    terms = {
        "time": vol * db * float(np.mean(q * shape)),
        "viscous": 0.0,
        "pressure": 0.0,
        "defect": 0.0,
        "flux": 0.0,
    }
    if b == 0.0:
        return terms
    # A^{s/2} u . A^{s/2}(u psi) = u . A^s(u psi) by self-adjointness
    ups = to_spectral(vel * shape[None])
    mult = np.power(big.ksq, s) if s > 0 else np.ones_like(big.ksq)
    if s > 0:
        mult[0, 0, 0] = 0.0
    terms["viscous"] = -2.0 * nu_s * b * vol * float(np.sum(np.real(np.conj(uh) * ups * mult)))
    p = _pressure_samples(uh, big, vel)
    udg = np.einsum("ixyz,ixyz->xyz", vel, grad)
    terms["pressure"] = 2.0 * b * vol * float(np.mean(p * udg))
    terms["flux"] = b * vol * float(np.mean(q * udg))
    if epsilon is not None:
        d = defect_identity(u, Mollifier(epsilon, kernel), size=size)
        terms["defect"] = -0.5 * b * vol * float(np.mean(d.values * shape))
    return terms


def local_energy_balance_residual(trajectory: Sequence[tuple[float, SpectralField]],
                                  psi: TestFunction, nu_s: float, s: float,
                                  epsilon: float | str | None = "auto",
                                  kernel: str = "bump") -> float:
    """Trapezoid-in-time integral of the local energy balance.

    ``epsilon="auto"`` uses the smallest resolved scale, twice the grid
    spacing. Returns the residual, which vanishes for exact smooth solutions
    up to quadrature and mollification error.
    """
    if len(trajectory) < 3:
        raise ValueError("local energy balance needs at least three snapshots")
    if epsilon == "auto":
        g = trajectory[0][1].grid
        epsilon = 2.0 * g.spacing
        assert is_resolved(g, epsilon)
    times = np.array([t for t, _ in trajectory])
    vals = np.array([
        sum(local_energy_balance_terms(u, t, psi, nu_s, s, epsilon, kernel).values())
        for t, u in trajectory
    ])
    return float(np.sum(0.5 * np.diff(times) * (vals[1:] + vals[:-1])))
