"""Time integration of the Galerkin-truncated fractional Navier-Stokes system

    du/dt + nu_s A^s u + eps A^{5/4} u = -P_N Pi (u.grad) u,

with nu_s = nu L^{2(s-1)}. At s = 0 the dissipation is the damping term
nu_0 u (damped Euler), acting on every mode.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator

import numpy as np

from .diagnostics import (
    Accumulators,
    DiagnosticsRecord,
    ladder_key,
    prodi_serrin_integrand,
    trapezoid_step,
)
from .defect import Mollifier, defect_identity
from .integrators import INTEGRATORS, Integrator
from .norms import NormRequest, frac_sobolev, lp_norm, sobolev_ladder_norm
from .spectral import GridSpec, SpectralField, _project, flux_divergence

__all__ = [
    "FnseParams",
    "SolverState",
    "CFLViolation",
    "CFLWarning",
    "linear_rates",
    "step",
    "solve_fractional_diffusion",
    "DiagnosticsConfig",
    "Run",
    "run",
    "weak_strong_gap",
]

log = logging.getLogger(__name__)


class CFLViolation(RuntimeError):
    """max|u| dt k_max exceeded the hard limit."""


class CFLWarning(UserWarning):
    """max|u| dt k_max exceeded the soft limit."""


@dataclass(frozen=True)
class FnseParams:
    """Physical and numerical parameters of one run.

    ``nu_s`` is derived on access and never stored.
    """

    s: float = 1.0
    nu: float = 0.05
    domain_length: float = 2.0 * math.pi
    dt: float = 1e-3
    t_end: float = 1.0
    integrator: str = "ETD-RK2"
    hyper_epsilon: float = 0.0
    seed: int = 0
    cfl_warn: float = 0.5
    cfl_limit: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.5:
            raise ValueError(f"s must lie in [0, 3/2], got {self.s}")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.hyper_epsilon < 0:
            raise ValueError("hyper_epsilon must be nonnegative")

    @property
    def nu_s(self) -> float:
        return self.nu * self.domain_length ** (2.0 * (self.s - 1.0))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def stiffness(self, grid: GridSpec) -> float:
        """dt nu_s k_max^{2s}, the largest linear exponent per step."""
        return self.dt * self.nu_s * float(np.max(grid.ksq[grid.dealias_mask])) ** self.s


def linear_rates(grid: GridSpec, params: FnseParams) -> np.ndarray:
    """Per-mode decay rate nu_s |k|^{2s} + eps |k|^{5/2}; nu_0 on every mode at s = 0."""
    return _linear_rates(grid, params.s, params.nu_s, params.hyper_epsilon)


@lru_cache(maxsize=16)
def _linear_rates(grid: GridSpec, s: float, nu_s: float, eps: float) -> np.ndarray:
    ksq = grid.ksq
    lam = np.full(ksq.shape, nu_s) if s == 0 else nu_s * np.power(ksq, s)
    if eps:
        lam = lam + eps * np.power(ksq, 1.25)
    lam.flags.writeable = False
    return lam


@lru_cache(maxsize=16)
def _integrator(grid: GridSpec, name: str, s: float, nu_s: float, eps: float,
                dt: float) -> Integrator:
    return Integrator(name, _linear_rates(grid, s, nu_s, eps), dt)


def integrator_for(grid: GridSpec, params: FnseParams) -> Integrator:
    return _integrator(grid, params.integrator, params.s, params.nu_s,
                       params.hyper_epsilon, params.dt)


@dataclass(frozen=True)
class SolverState:
    """Snapshot of a run: time = step_count * dt."""

    u: SpectralField
    step_count: int = 0
    time: float = 0.0
    acc: Accumulators = field(default_factory=Accumulators)
    blowup: bool = False


def _nonlinear(grid: GridSpec):
    def f(coeffs: np.ndarray) -> np.ndarray:
        return -_project(flux_divergence(coeffs, grid)[0], grid)
    return f


def cfl_number(vel: np.ndarray, grid: GridSpec, dt: float) -> float:
    speed = float(np.sqrt(np.max(np.sum(vel * vel, axis=0))))
    return speed * dt * grid.kmax


def step(state: SolverState, params: FnseParams) -> SolverState:
    """Advance one time step.

    Raises :class:`CFLViolation` above ``cfl_limit``. Non-finite results
    come back with ``blowup`` set instead of raising.
    """
    u = state.u
    grid = u.grid
    scheme = integrator_for(grid, params)
    nonlinear = _nonlinear(grid)
    with np.errstate(over="ignore", invalid="ignore"):
        adv, vel = flux_divergence(u.coeffs, grid)
    nu0 = -_project(adv, grid)
    c = cfl_number(vel, grid, params.dt)
    if c > params.cfl_limit:
        raise CFLViolation(f"CFL number {c:.3g} exceeds the limit {params.cfl_limit:g} "
                           f"at t = {state.time:.6g}")
    if c > params.cfl_warn:
        warnings.warn(f"CFL number {c:.3g} above {params.cfl_warn:g}", CFLWarning, stacklevel=2)
    with np.errstate(over="ignore", invalid="ignore"):
        new = scheme.step(u.coeffs, nonlinear, nu0)
    # stages are each solenoidal; one more projection removes their roundoff
    new = _project(new, grid)
    new[:, 0, 0, 0] = 0.0
    n = state.step_count + 1
    blown = not np.all(np.isfinite(new))
    return SolverState(SpectralField(grid, new, True), n, n * params.dt, state.acc, blown)


def solve_fractional_diffusion(u0: SpectralField, s: float, nu: float, t: float) -> SpectralField:
    """Exact solution of du/dt = -nu_s A^s u (damping nu_0 u at s = 0)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    L = u0.grid.domain_length
    nu_s = nu * L ** (2.0 * (s - 1.0))
    lam = _linear_rates(u0.grid, float(s), nu_s, 0.0)
    return u0.replace(u0.coeffs * np.exp(-lam * t))


def dissipation_rate(u: SpectralField, lam: np.ndarray) -> float:
    """L^3 sum lam |u_k|^2, the energy drain of the linear part."""
    return float(u.grid.volume * np.sum(lam * np.sum(np.abs(u.coeffs) ** 2, axis=0)))


@dataclass(frozen=True)
class DiagnosticsConfig:
    """What the run loop records.

    ``ladder`` lists (n, m) pairs; ``defect_eps`` the mollifier scales at
    which the defect integral is recorded (empty for none).
    """

    record_interval: int = 10
    ladder: tuple[tuple[float, int], ...] = ((1.0, 1), (2.0, 1))
    monitor: bool = True
    defect_eps: tuple[float, ...] = ()
    defect_kernel: str = "bump"
    snapshot_interval: int = 0

    def __post_init__(self):
        if self.record_interval < 1:
            raise ValueError("record_interval must be >= 1")
        eps = self.defect_eps
        eps = () if eps is None else (eps,) if isinstance(eps, (int, float)) else tuple(eps)
        if any(not e > 0 for e in eps):
            raise ValueError("defect scales must be positive")
        object.__setattr__(self, "defect_eps", tuple(float(e) for e in eps))


def _finite(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


class Run:
    """Iterate over the records of a run; the final state is kept in ``state``.

    Records are emitted at step 0, every ``record_interval`` steps, at the
    final step of the run, and at a blow-up. A resumed state emits no
    duplicate record for its starting step. ``stop_step`` pauses the run
    early (for checkpointing) without emitting an extra record.
    """

    def __init__(self, params: FnseParams, u0: SpectralField | None = None,
                 diagnostics: DiagnosticsConfig = DiagnosticsConfig(),
                 state: SolverState | None = None, stop_step: int | None = None):
        if (u0 is None) == (state is None):
            raise ValueError("give exactly one of u0 or state")
        self.params = params
        self.stop_step = stop_step
        self.diag = diagnostics
        self.resumed = state is not None
        self.state = state or SolverState(u0)
        self.snapshots: list[tuple[float, SpectralField]] = []
        self._lam = linear_rates(self.state.u.grid, params)

    def _record(self, st: SolverState) -> DiagnosticsRecord:
        p, acc = self.params, st.acc
        if st.blowup:
            return DiagnosticsRecord(st.time, None, None, None, _finite(acc.ps_integral),
                                     None, None, {}, True)
        u = st.u
        h01 = sobolev_ladder_norm(u, 0.0)
        hs1 = frac_sobolev(u, p.s)
        ps_val = None
        if self.diag.monitor:
            mv = prodi_serrin_integrand(u, p.s)
            ps_val = _finite(mv.value) if mv.exponent else None
        ps_int = acc.add_ps(st.time, ps_val)
        residual = 0.5 * h01 + acc.dissipation - 0.5 * acc.h01_initial
        ladder = {}
        for n, m in self.diag.ladder:
            ladder[ladder_key(n, m)] = _finite(NormRequest("Hnm", n=n, m=m)(u))
        defect = None
        if self.diag.defect_eps:
            values = []
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                for eps in self.diag.defect_eps:
                    d = defect_identity(u, Mollifier(eps, self.diag.defect_kernel))
                    values.append(_finite(d.integral))
            defect = {"eps": list(self.diag.defect_eps), "value": values}
        return DiagnosticsRecord(st.time, _finite(h01), _finite(hs1), ps_val, _finite(ps_int),
                                 _finite(residual), defect, ladder, False)

    def __iter__(self) -> Iterator[DiagnosticsRecord]:
        p = self.params
        st = self.state
        if not self.resumed:
            rate = dissipation_rate(st.u, self._lam)
            acc = Accumulators(h01_initial=sobolev_ladder_norm(st.u, 0.0), last_dissipation=rate)
            st = replace(st, acc=acc)
            self.state = st
            yield self._record(st)
            self._snapshot(st)
        total = p.n_steps
        stop = total if self.stop_step is None else min(total, self.stop_step)
        while st.step_count < stop:
            prev = st
            st = step(st, p)
            if st.blowup:
                self.state = st
                yield self._record(st)
                return
            rate = dissipation_rate(st.u, self._lam)
            acc = replace(prev.acc)
            acc.dissipation += trapezoid_step(prev.time, prev.acc.last_dissipation, st.time, rate)
            acc.last_dissipation = rate
            st = replace(st, acc=acc)
            self.state = st
            if st.step_count % self.diag.record_interval == 0 or st.step_count == total:
                yield self._record(st)
            self._snapshot(st)

    def _snapshot(self, st: SolverState):
        k = self.diag.snapshot_interval
        if k and st.step_count % k == 0:
            self.snapshots.append((st.time, st.u))

    def records(self) -> list[DiagnosticsRecord]:
        return list(self)


def run(params: FnseParams, u0: SpectralField,
        diagnostics: DiagnosticsConfig = DiagnosticsConfig()) -> Run:
    return Run(params, u0, diagnostics)


def weak_strong_gap(params: FnseParams, u0: SpectralField, perturbation_scale: float,
                    sample_every: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """L^2 distance between runs with hyper_epsilon = perturbation_scale and 0.

    Returns (times, gap); both runs start from identical data.
    """
    base = replace(params, hyper_epsilon=0.0)
    pert = replace(params, hyper_epsilon=float(perturbation_scale))
    a, b = SolverState(u0), SolverState(u0)
    times, gaps = [0.0], [0.0]
    for _ in range(params.n_steps):
        a, b = step(a, pert), step(b, base)
        if a.blowup or b.blowup:
            raise FloatingPointError(f"run became non-finite at t = {a.time:.6g}")
        if a.step_count % sample_every == 0:
            times.append(a.time)
            gaps.append(lp_norm(a.u - b.u, 2))
    return np.array(times), np.array(gaps)
