"""Regime presets, one per row group of the dissipation-exponent table.

Critical exponents are 1/3, 3/4, 5/6 and 5/4. Each preset picks a
representative s strictly inside its interval and switches on the
diagnostics that are meaningful there:

* the regularity monitor needs 1/3 < s (its exponent is undefined below);
* the local energy balance, and hence the defect term, holds for s >= 3/4;
* the hierarchy of time averages needs s > 5/6;
* s >= 5/4 is the globally regular regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .initial import InitialSpec
from .solver import FnseParams

__all__ = ["RegimePreset", "PRESETS", "preset"]

ONE_THIRD = Fraction(1, 3)
THREE_QUARTERS = Fraction(3, 4)
FIVE_SIXTHS = Fraction(5, 6)
FIVE_QUARTERS = Fraction(5, 4)


@dataclass(frozen=True)
class RegimePreset:
    """Named regime with a representative exponent and its diagnostics.

    ``interval`` is open; ``hi`` None means unbounded above.
    """

    name: str
    s: float
    interval: tuple[Fraction, Fraction | None]
    properties: tuple[str, ...]
    monitor: bool
    local_balance: bool
    hierarchy: bool
    globally_regular: bool

    def __post_init__(self):
        lo, hi = self.interval
        if not (self.s > lo and (hi is None or self.s < hi)):
            raise ValueError(f"preset {self.name}: s = {self.s} is not inside {self.interval}")

    def config(self):
        """Small desk-scale run: N = 16 Taylor-Green, 250 ETD-RK4 steps."""
        from .config import ExperimentConfig

        params = FnseParams(s=self.s, nu=0.05, dt=2e-3, t_end=0.5, integrator="ETD-RK4")
        ladder_n = (1.0, 2.0, 3.0) if self.hierarchy else (1.0, 2.0)
        cfg = ExperimentConfig(
            params=params,
            initial=InitialSpec("taylor-green"),
            n=16,
            preset=self.name,
            record_interval=10,
            monitor=self.monitor,
            ladder_n=ladder_n,
            ladder_m=(1, 2) if self.hierarchy else (1,),
            # smallest resolved scale on the N = 16 grid is 2L/N = pi/4
            defect_eps=(math.pi / 2.0,) if self.local_balance else (),
            hierarchy=self.hierarchy,
            records=f"{self.name}.ndjson",
            checkpoint=f"{self.name}.fns",
        )
        return cfg


_TABLE = (
    RegimePreset(
        "below-onethird", 0.25, (Fraction(0), ONE_THIRD),
        ("non-uniqueness of Leray-Hopf solutions", "non-uniqueness of distributional solutions"),
        monitor=False, local_balance=False, hierarchy=False, globally_regular=False,
    ),
    RegimePreset(
        "onethird-to-threequarters", 0.5, (ONE_THIRD, THREE_QUARTERS),
        ("regularity monitor", "non-uniqueness of distributional solutions"),
        monitor=True, local_balance=False, hierarchy=False, globally_regular=False,
    ),
    RegimePreset(
        "threequarters-to-fivesixths", 0.8, (THREE_QUARTERS, FIVE_SIXTHS),
        ("regularity monitor", "local energy balance", "partial regularity",
         "non-uniqueness of distributional solutions"),
        monitor=True, local_balance=True, hierarchy=False, globally_regular=False,
    ),
    RegimePreset(
        "fivesixths-to-fivefourths", 1.0, (FIVE_SIXTHS, FIVE_QUARTERS),
        ("regularity monitor", "local energy balance", "partial regularity",
         "hierarchy of time averages", "non-uniqueness of distributional solutions"),
        monitor=True, local_balance=True, hierarchy=True, globally_regular=False,
    ),
    RegimePreset(
        "above-fivefourths", 1.3, (FIVE_QUARTERS, None),
        ("local energy balance", "hierarchy of time averages", "existence and uniqueness"),
        monitor=True, local_balance=True, hierarchy=True, globally_regular=True,
    ),
)

PRESETS: dict[str, RegimePreset] = {p.name: p for p in _TABLE}


def preset(name: str, **overrides):
    """Configuration of a named preset with optional top-level field overrides."""
    try:
        base = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base.config(), **overrides)
