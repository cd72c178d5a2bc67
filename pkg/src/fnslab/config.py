"""Experiment configuration in a plain ``key = value`` format.

Keys are dotted (``solver.s = 0.8``); ``#`` starts a comment. A ``preset``
line loads a regime preset first, and every other line overrides it, so
the order of lines does not matter. Unknown keys and malformed values are
rejected with the line number.

Example::

    preset = above-fivefourths
    grid.n = 16
    solver.dt = 0.002
    diagnostics.ladder_n = 1, 2
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .initial import InitialSpec
from .solver import DiagnosticsConfig, FnseParams

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "KEYS",
    "parse_config",
    "load_config",
    "dumps_config",
    "save_config",
    "config_hash",
]


class ConfigError(ValueError):
    """Malformed configuration; the message names the key and line."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run or an inequality report."""

    params: FnseParams = field(default_factory=FnseParams)
    initial: InitialSpec = field(default_factory=InitialSpec)
    n: int = 32
    seed: int = 0
    preset: str | None = None
    record_interval: int = 10
    checkpoint_interval: int = 0
    monitor: bool = True
    ladder_n: tuple[float, ...] = (1.0, 2.0)
    ladder_m: tuple[int, ...] = (1,)
    defect_eps: tuple[float, ...] = ()
    defect_kernel: str = "bump"
    hierarchy: bool = False
    records: str = "run.ndjson"
    checkpoint: str = "run.fns"
    report: str = "ineq.ndjson"
    ineq_n: int = 16
    ineq_members: int = 100
    ineq_s: tuple[float, ...] = (0.4, 0.75, 0.9)
    ineq_orders: tuple[float, ...] = (1.0, 2.0, 3.0)
    ineq_commutator_s1: tuple[float, ...] = (1.2, 1.5)
    ineq_baseline: str = ""

    def diagnostics(self, snapshot_interval: int = 0) -> DiagnosticsConfig:
        ladder = tuple((float(n), int(m)) for n in self.ladder_n for m in self.ladder_m)
        return DiagnosticsConfig(
            record_interval=self.record_interval,
            ladder=ladder,
            monitor=self.monitor,
            defect_eps=self.defect_eps,
            defect_kernel=self.defect_kernel,
            snapshot_interval=snapshot_interval,
        )


# -- value codecs ------------------------------------------------------------

def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _opt_str(text: str) -> str | None:
    return None if text.lower() in ("", "none") else text


def _tuple(item: Callable, length: int | None = None):
    def parse(text: str):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if length is not None and len(parts) != length:
            raise ValueError(f"expected {length} comma-separated values")
        return tuple(item(p) for p in parts)
    return parse


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


# key -> (path of attribute names, parser)
KEYS: dict[str, tuple[tuple[str, ...], Callable]] = {
    "preset": (("preset",), _opt_str),
    "seed": (("seed",), int),
    "grid.n": (("n",), int),
    "grid.domain_length": (("params", "domain_length"), _float),
    "solver.s": (("params", "s"), _float),
    "solver.nu": (("params", "nu"), _float),
    "solver.dt": (("params", "dt"), _float),
    "solver.t_end": (("params", "t_end"), _float),
    "solver.integrator": (("params", "integrator"), str),
    "solver.hyper_epsilon": (("params", "hyper_epsilon"), _float),
    "solver.cfl_warn": (("params", "cfl_warn"), _float),
    "solver.cfl_limit": (("params", "cfl_limit"), _float),
    "initial.kind": (("initial", "kind"), str),
    "initial.amplitude": (("initial", "amplitude"), _float),
    "initial.mode": (("initial", "mode"), _tuple(int, 3)),
    "initial.polarization": (("initial", "polarization"), _tuple(_float, 3)),
    "initial.slope": (("initial", "slope"), _float),
    "initial.kmin": (("initial", "kmin"), _float),
    "initial.kmax": (("initial", "kmax"), _float),
    "initial.alpha": (("initial", "alpha"), _float),
    "initial.octaves": (("initial", "octaves"), int),
    "run.record_interval": (("record_interval",), int),
    "run.checkpoint_interval": (("checkpoint_interval",), int),
    "diagnostics.monitor": (("monitor",), _bool),
    "diagnostics.ladder_n": (("ladder_n",), _tuple(_float)),
    "diagnostics.ladder_m": (("ladder_m",), _tuple(int)),
    "diagnostics.defect_eps": (("defect_eps",), _tuple(_float)),
    "diagnostics.defect_kernel": (("defect_kernel",), str),
    "diagnostics.hierarchy": (("hierarchy",), _bool),
    "output.records": (("records",), str),
    "output.checkpoint": (("checkpoint",), str),
    "output.report": (("report",), str),
    "ineq.n": (("ineq_n",), int),
    "ineq.members": (("ineq_members",), int),
    "ineq.s": (("ineq_s",), _tuple(_float)),
    "ineq.orders": (("ineq_orders",), _tuple(_float)),
    "ineq.commutator_s1": (("ineq_commutator_s1",), _tuple(_float)),
    "ineq.baseline": (("ineq_baseline",), str),
}


def _get(cfg, path):
    for name in path:
        cfg = getattr(cfg, name)
    return cfg


def _set_many(cfg: ExperimentConfig, values: dict[tuple[str, ...], object]) -> ExperimentConfig:
    top, nested = {}, {}
    for path, v in values.items():
        if len(path) == 1:
            top[path[0]] = v
        else:
            nested.setdefault(path[0], {})[path[1]] = v
    for name, sub in nested.items():
        top[name] = replace(getattr(cfg, name), **sub)
    return replace(cfg, **top)


def _check(cfg: ExperimentConfig):
    if cfg.n < 4:
        raise ValueError("grid.n must be at least 4")
    if cfg.record_interval < 1:
        raise ValueError("run.record_interval must be >= 1")
    if cfg.checkpoint_interval < 0:
        raise ValueError("run.checkpoint_interval must be >= 0")
    if cfg.defect_kernel not in ("bump", "gaussian"):
        raise ValueError("diagnostics.defect_kernel must be bump or gaussian")
    if any(m < 1 for m in cfg.ladder_m):
        raise ValueError("diagnostics.ladder_m entries must be >= 1")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    entries: dict[str, tuple[int, object]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} "
                              f"(first set on line {entries[key][0]})")
        try:
            entries[key] = (lineno, KEYS[key][1](value))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None

    base = ExperimentConfig()
    if "preset" in entries and entries["preset"][1] is not None:
        from .presets import PRESETS

        lineno, name = entries["preset"]
        if name not in PRESETS:
            raise ConfigError(f"{source}:{lineno}: unknown preset {name!r} for key 'preset'")
        base = PRESETS[name].config()
    try:
        cfg = _set_many(base, {KEYS[k][0]: v for k, (_, v) in entries.items()})
    except (ValueError, TypeError) as exc:
        # field validation in the dataclasses; name the key that most likely caused it
        bad = next((k for k in entries if k.split(".")[-1] in str(exc)), None)
        where = f"{source}:{entries[bad][0]}: key {bad!r}: " if bad else f"{source}: "
        raise ConfigError(where + str(exc)) from None
    try:
        _check(cfg)
    except ValueError as exc:
        key = str(exc).split()[0]
        line = entries.get(key, (None,))[0]
        raise ConfigError(f"{source}:{line}: {exc}" if line else f"{source}: {exc}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))


def dumps_config(cfg: ExperimentConfig) -> str:
    """Every key written explicitly, so the text alone reproduces the config."""
    return "".join(f"{key} = {_fmt(_get(cfg, path))}\n" for key, (path, _) in KEYS.items())


def save_config(cfg: ExperimentConfig, path):
    Path(path).write_text(dumps_config(cfg), encoding="utf-8")


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 of the canonical text; output paths are excluded."""
    text = "".join(line for line in dumps_config(cfg).splitlines(True)
                   if not line.startswith("output."))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
