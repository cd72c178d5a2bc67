"""Empirical checks of the functional inequalities used in the regularity theory.

Two kinds of case:

* ``constant-1``: Hoelder-type inequalities in spectral space that hold with
  constant exactly 1 on every discrete field. Any ratio above 1 (beyond
  rounding) is a violation.
* ``bounded-ratio``: inequalities with an unspecified constant. The largest
  observed ratio lhs/rhs is reported and compared against a stored baseline.

Ratios are lhs/rhs; a case with both sides zero has ratio 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Sequence

import numpy as np

from .exponents import LadderExponents
from .initial import random_band_limited, single_mode
from .norms import (
    besov_norm,
    frac_sobolev,
    lp_norm,
    sobolev_ladder_norm,
    sup_magnitude,
    support_band,
)
from .spectral import GridSpec, SpectralField, padded_size, resample, to_physical, to_spectral

__all__ = [
    "InequalityCase",
    "CaseResult",
    "ensemble",
    "interpolation_cases",
    "lemma1_case",
    "commutator_case",
    "commutator_lhs",
    "commutator_lhs_direct",
    "l3_case",
    "evaluate_case",
    "summarize",
    "rescale",
    "check_scaling",
    "ScalingReport",
    "load_baseline",
    "compare_baseline",
    "CONSTANT_ONE_TOL",
    "standard_cases",
    "run_lab",
    "besov_monotonicity_case",
    "CaseSummary",
]

CONSTANT_ONE_TOL = 1e-12


@dataclass(frozen=True)
class InequalityCase:
    """One inequality lhs <= C rhs at fixed parameters.

    ``degree`` is the common homogeneity of both sides in u, so scaling u
    by c must leave the ratio unchanged.
    """

    name: str
    params: dict
    lhs: Callable[[SpectralField], float]
    rhs: Callable[[SpectralField], float]
    kind: str
    degree: float
    reference: str = ""

    def __post_init__(self):
        if self.kind not in ("constant-1", "bounded-ratio"):
            raise ValueError(f"unknown case kind {self.kind!r}")

    @property
    def key(self) -> str:
        args = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in sorted(self.params.items()))
        return f"{self.name}[{args}]"


@dataclass(frozen=True)
class CaseResult:
    case: str
    params: dict
    member: int
    lhs: float
    rhs: float
    ratio: float

    def as_dict(self) -> dict:
        return {"case": self.case, "params": self.params, "member": self.member,
                "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}


def _ratio(lhs: float, rhs: float) -> float:
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


def evaluate_case(case: InequalityCase, fields: Iterable[SpectralField]) -> list[CaseResult]:
    out = []
    for i, u in enumerate(fields):
        lhs, rhs = float(case.lhs(u)), float(case.rhs(u))
        out.append(CaseResult(case.name, case.params, i, lhs, rhs, _ratio(lhs, rhs)))
    return out


# -- ensembles -----------------------------------------------------------------

def ensemble(grid: GridSpec, members: int, seed: int = 0) -> list[SpectralField]:
    """Seeded random fields plus adversarial single-mode and two-scale fields.

    The random part alternates spectral slopes 5/3 and 11/3 and random band
    edges so both rough and smooth spectra are present.
    """
    if members < 3:
        raise ValueError("an ensemble needs at least 3 members")
    top = grid.n_retained
    out = [single_mode(grid, (1, 0, 0)), _two_scale(grid, (1, min(4, top)))]
    rng = np.random.default_rng(seed)
    for i in range(members - 2):
        slope = (5.0 / 3.0, 11.0 / 3.0)[i % 2]
        kmax = float(rng.integers(2, top + 1))
        out.append(random_band_limited(grid, seed=seed * 100003 + i, slope=slope,
                                       kmin=1.0, kmax=kmax))
    return out


def _two_scale(grid: GridSpec, mags: Sequence[int]) -> SpectralField:
    a = single_mode(grid, (mags[0], 0, 0), 1.0, (0.0, 1.0, 0.0))
    b = single_mode(grid, (0, mags[1], 0), 0.5, (0.0, 0.0, 1.0))
    return a + b


# -- constant-1 cases ----------------------------------------------------------

def interpolation_cases(s: float, n: float) -> list[InequalityCase]:
    """Both spectral interpolation inequalities at (s, n); constant exactly 1.

    H_{n+p}^s <= H_{n+s}^{(1-s)/2} H_n^{(3s-1)/2} with p = (1-s)/2 needs
    1/3 < s < 1; H_n <= H_s^{s/n} H_{n+s}^{(n-s)/n} needs n >= s.
    """
    cases = []
    if 1.0 / 3.0 < s < 1.0:
        p = 0.5 * (1.0 - s)
        cases.append(InequalityCase(
            "interp-ladder", {"s": s, "n": n},
            lambda u: sobolev_ladder_norm(u, n + p) ** s,
            lambda u: (sobolev_ladder_norm(u, n + s) ** (0.5 * (1 - s))
                       * sobolev_ladder_norm(u, n) ** (0.5 * (3 * s - 1))),
            "constant-1", 2.0 * s, "ladder interpolation, Hoelder in spectrum",
        ))
    if n >= s > 0:
        cases.append(InequalityCase(
            "interp-homogeneous", {"s": s, "n": n},
            lambda u: sobolev_ladder_norm(u, n),
            lambda u: (sobolev_ladder_norm(u, s) ** (s / n)
                       * sobolev_ladder_norm(u, n + s) ** ((n - s) / n)),
            "constant-1", 2.0, "homogeneous Sobolev interpolation",
        ))
    return cases


def besov_monotonicity_case(s: float, p: float, q_small: float, q_large: float) -> InequalityCase:
    """B^s_{p,q_large} <= B^s_{p,q_small} for q_small <= q_large (l^q nesting)."""
    if not q_small <= q_large:
        raise ValueError("need q_small <= q_large")
    return InequalityCase(
        "besov-q-monotone", {"s": s, "p": p, "q1": q_small, "q2": q_large},
        lambda u: besov_norm(u, s, p, q_large),
        lambda u: besov_norm(u, s, p, q_small),
        "constant-1", 1.0, "nesting of sequence spaces",
    )


# -- bounded-ratio cases -------------------------------------------------------

def grad_sup(u: SpectralField) -> float:
    """max_x |grad u|, Frobenius norm of the gradient tensor."""
    kv = u.grid.kvec
    g = np.concatenate([1j * kv[a] * u.coeffs for a in range(3)])
    return sup_magnitude(g, u.grid)


def frac_sup(u: SpectralField, s: float) -> float:
    """max_x |A^{s/2} u|."""
    mult = np.power(u.grid.ksq, 0.5 * s) if s else np.ones_like(u.grid.ksq)
    return sup_magnitude(u.coeffs * mult, u.grid)


def lemma1_case(s: float, n: float) -> InequalityCase:
    """||grad u||_inf H_{n,1} <= c ||A^{s/2} u||_inf H_{n+p,1}, p = (1-s)/2."""
    if not 0.0 < s < 1.0:
        raise ValueError("lemma 1 needs 0 < s < 1")
    if not n > 2.0 + 0.5 * s:
        raise ValueError("lemma 1 needs n > 2 + s/2")
    p = 0.5 * (1.0 - s)
    return InequalityCase(
        "lemma1", {"s": s, "n": n},
        lambda u: grad_sup(u) * sobolev_ladder_norm(u, n),
        lambda u: frac_sup(u, s) * sobolev_ladder_norm(u, n + p),
        "bounded-ratio", 3.0, "sup-gradient against fractional sup",
    )


def _fractional_power(grid: GridSpec, s: float) -> np.ndarray:
    return np.power(grid.ksq, 0.5 * s)


def commutator_lhs(u: SpectralField, s1: float) -> float:
    """||A^{s1/2}[(u.grad)u] - (u.grad)A^{s1/2}u||_2 with exact padded products."""
    grid = u.grid
    band = support_band(u)
    if band == 0:
        return 0.0
    size = padded_size(2 * band)
    big = grid.with_n(size)
    uh = resample(u.coeffs, size)
    kv = big.kvec
    mult = _fractional_power(big, s1)
    vel = to_physical(uh)

    def advect(field_hat):
        grads = [to_physical(1j * kv[j] * field_hat) for j in range(3)]
        return to_spectral(sum(vel[j] * grads[j] for j in range(3)))

    diff = mult * advect(uh) - advect(mult * uh)
    return float(math.sqrt(big.volume * np.sum(np.abs(diff) ** 2)))


def commutator_lhs_direct(u: SpectralField, s1: float) -> float:
    """Same quantity by direct convolution over all pairs of nonzero modes.

    (u.grad)v at k is sum_{p+q=k} (u_p . i q) v_q; the commutator weight is
    |k|^{s1} - |q|^{s1}. Cost is quadratic in the number of modes.
    """
    grid = u.grid
    nz = np.argwhere(np.any(u.coeffs != 0, axis=0))
    if nz.size == 0:
        return 0.0
    lat = grid.integer_lattice[:, nz[:, 0], nz[:, 1], nz[:, 2]].T
    coef = u.coeffs[:, nz[:, 0], nz[:, 1], nz[:, 2]].T
    scale = grid.k_scale
    out: dict[tuple[int, int, int], np.ndarray] = {}
    for p, up in zip(lat, coef):
        for q, uq in zip(lat, coef):
            k = p + q
            kq = scale * q
            weight = np.linalg.norm(scale * k) ** s1 - np.linalg.norm(kq) ** s1
            term = (up @ (1j * kq)) * weight * uq
            key = tuple(int(x) for x in k)
            out[key] = out.get(key, 0.0) + term
    total = sum(float(np.sum(np.abs(v) ** 2)) for v in out.values())
    return math.sqrt(grid.volume * total)


def commutator_case(s1: float, s2: float = 1.0, s3: float = 3.0) -> InequalityCase:
    """Commutator estimate with theta fixed by theta s2 + (1-theta) s3 = 5/2."""
    if not s1 > 1.0:
        raise ValueError("commutator estimate needs s1 > 1")
    if not 1.0 <= s2 < 2.5 < s3:
        raise ValueError("commutator estimate needs 1 <= s2 < 5/2 < s3")
    theta = (s3 - 2.5) / (s3 - s2)

    def h(u, s):
        return math.sqrt(frac_sobolev(u, s))

    return InequalityCase(
        "commutator", {"s1": s1, "s2": s2, "s3": s3, "theta": theta},
        lambda u: commutator_lhs(u, s1),
        lambda u: h(u, s2) ** theta * h(u, s3) ** (1.0 - theta) * h(u, s1),
        "bounded-ratio", 2.0, "fractional Laplacian commutator",
    )


def l3_case(s: float) -> InequalityCase:
    """||u||_3 <= C H_{0,1}^{(2s-1)/(4s)} H_{s,1}^{1/(4s)}, valid for 1/2 <= s < 3/2."""
    if not 0.5 <= s < 1.5:
        raise ValueError("L3 interpolation needs 1/2 <= s < 3/2")
    return InequalityCase(
        "l3-interp", {"s": s},
        lambda u: lp_norm(u, 3.0),
        lambda u: (sobolev_ladder_norm(u, 0.0) ** ((2 * s - 1) / (4 * s))
                   * frac_sobolev(u, s) ** (1.0 / (4 * s))),
        "bounded-ratio", 1.0, "three-dimensional Gagliardo-Nirenberg",
    )


# -- reports -------------------------------------------------------------------

@dataclass
class CaseSummary:
    case: str
    kind: str
    members: int = 0
    max_ratio: float = 0.0
    violations: int = 0
    nonfinite: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def summarize(case: InequalityCase, results: Sequence[CaseResult],
              tol: float = CONSTANT_ONE_TOL) -> CaseSummary:
    summ = CaseSummary(case.key, case.kind, len(results))
    for r in results:
        if not math.isfinite(r.ratio):
            summ.nonfinite += 1
            continue
        summ.max_ratio = max(summ.max_ratio, r.ratio)
        if case.kind == "constant-1" and r.ratio > 1.0 + tol:
            summ.violations += 1
    return summ


def load_baseline(path=None) -> dict[str, float]:
    """Stored worst-case ratios of the bounded-ratio cases."""
    if path:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    text = resources.files("fnslab").joinpath("data/ineq_baseline.json").read_text("utf-8")
    return json.loads(text)


def compare_baseline(summaries: Iterable[CaseSummary], baseline: dict[str, float],
                     growth: float = 0.10) -> list[str]:
    """Messages for bounded-ratio cases whose worst ratio grew more than ``growth``."""
    problems = []
    for s in summaries:
        if s.kind != "bounded-ratio" or s.case not in baseline:
            continue
        ref = baseline[s.case]
        if s.max_ratio > (1.0 + growth) * ref:
            problems.append(f"{s.case}: max ratio {s.max_ratio:.6g} exceeds baseline "
                            f"{ref:.6g} by more than {growth:.0%}")
    return problems


# -- scaling -------------------------------------------------------------------

def rescale(u: SpectralField, lam: int, s: float) -> SpectralField:
    """u'(x) = lam^{2s-1} u(lam x) on a grid lam times finer.

    Mode m of u moves to lam m, so the result is exactly representable.
    """
    if int(lam) != lam or lam < 1:
        raise ValueError("lambda must be a positive integer")
    lam = int(lam)
    grid = u.grid
    fine = grid.with_n(lam * grid.n)
    idx = (lam * np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int)) % fine.n
    coeffs = np.zeros((u.components, fine.n, fine.n, fine.n), dtype=complex)
    coeffs[np.ix_(range(u.components), idx, idx, idx)] = lam ** (2.0 * s - 1.0) * u.coeffs
    return SpectralField(fine, coeffs, u.divergence_free)


@dataclass(frozen=True)
class ScalingReport:
    lam: int
    s: float
    step_residual: float
    norm_ratios: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)

    @property
    def max_norm_error(self) -> float:
        errs = [abs(self.norm_ratios[k] / self.expected[k] - 1.0) for k in self.norm_ratios]
        return max(errs, default=0.0)


def scaled_norm_ratio(u: SpectralField, lam: int, s: float, n: int, m: int) -> float:
    """||grad^n u||_{2m} over ||grad'^n u'||_{2m} on one rescaled period cell.

    The rescaled field repeats lam^3 times across the box, so the single
    cell norm is the box norm times lam^{-3/(2m)}.
    """
    v = rescale(u, lam, s)
    a = sobolev_ladder_norm(u, n, m) ** (1.0 / (2 * m))
    b = sobolev_ladder_norm(v, n, m) ** (1.0 / (2 * m)) * lam ** (-3.0 / (2 * m))
    return a / b


def check_scaling(u: SpectralField, params, lam: int = 2,
                  orders: Sequence[tuple[int, int]] = ((1, 1), (2, 1), (1, 2))) -> ScalingReport:
    """Compare one solver step of the rescaled field with the rescaled step.

    The rescaled problem uses dt' = dt lam^{-2s} at the same nu_s. The norm
    ratios are compared with lam^{-1/alpha_{n,m,s}}.
    """
    from dataclasses import replace

    from .solver import SolverState, step

    if int(lam) != lam or lam < 1:
        raise ValueError("lambda must be a positive integer")
    s = params.s
    coarse = step(SolverState(u), params).u
    fine_params = replace(params, dt=params.dt * lam ** (-2.0 * s))
    fine = step(SolverState(rescale(u, lam, s)), fine_params).u
    target = rescale(coarse, lam, s)
    denom = math.sqrt(np.sum(np.abs(target.coeffs) ** 2))
    resid = math.sqrt(np.sum(np.abs(fine.coeffs - target.coeffs) ** 2)) / denom
    ex = LadderExponents(s)
    ratios, expected = {}, {}
    for n, m in orders:
        key = f"{n},{m}"
        ratios[key] = scaled_norm_ratio(u, lam, s, n, m)
        expected[key] = float(lam) ** (-1.0 / float(ex.alpha_s(n, m)))
    return ScalingReport(int(lam), s, resid, ratios, expected)


# -- harness -------------------------------------------------------------------

def standard_cases(s_values: Sequence[float], orders: Sequence[float],
                   commutator_s1: Sequence[float] = ()) -> list[InequalityCase]:
    """Every case whose validity predicate holds at the given parameters."""
    cases: list[InequalityCase] = []
    for s in s_values:
        for n in orders:
            cases.extend(interpolation_cases(s, n))
        cases.append(besov_monotonicity_case(s, 2.0, 1.0, 2.0))
        cases.append(besov_monotonicity_case(s, 2.0, 2.0, math.inf))
        if 0.0 < s < 1.0:
            for n in orders:
                if n > 2.0 + 0.5 * s:
                    cases.append(lemma1_case(s, n))
        if 0.5 <= s < 1.5:
            cases.append(l3_case(s))
    for s1 in commutator_s1:
        cases.append(commutator_case(s1))
    return cases


def run_lab(cases: Sequence[InequalityCase], fields: Sequence[SpectralField],
            emit: Callable[[dict], None] | None = None) -> list[CaseSummary]:
    """Evaluate every case on every field in a fixed order.

    ``emit`` receives one row per (case, member) and then one summary row
    per case.
    """
    summaries = []
    for case in cases:
        results = evaluate_case(case, fields)
        if emit:
            for r in results:
                emit(r.as_dict())
        summ = summarize(case, results)
        summaries.append(summ)
    if emit:
        emit({"summary": [s.as_dict() for s in summaries]})
    return summaries
