"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error,
3 run completed but flagged a blow-up.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import scipy.fft

from . import __version__
from .checkpoint import CheckpointFormatError, load_state, read_header, save_state, sidecar_path
from .config import KEYS, ConfigError, ExperimentConfig, config_hash, dumps_config, load_config, parse_config
from .diagnostics import DiagnosticsRecord, time_average_hierarchy
from .exponents import is_defined
from .initial import make_initial
from .records import RecordWriter, read_records, series, write_csv
from .solver import CFLViolation, Run
from .spectral import FieldDataError, GridSpec

log = logging.getLogger("fnslab")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_BLOWUP = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _threads() -> int:
    raw = os.environ.get("FNS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"FNS_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("FNS_THREADS must be a positive integer")
    return n


def resolve_config(spec: str) -> ExperimentConfig:
    """A config file path or ``preset:<name>``."""
    if spec.startswith("preset:"):
        return parse_config(f"preset = {spec.split(':', 1)[1]}\n", spec)
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"config file {spec!r} not found")
    return load_config(path)


def _header(cfg: ExperimentConfig, kind: str) -> dict:
    return {"kind": kind, "version": __version__, "config_hash": config_hash(cfg),
            "preset": cfg.preset, "s": cfg.params.s, "n": cfg.n}


def _hierarchy_rows(records: list[DiagnosticsRecord], cfg: ExperimentConfig) -> list[dict]:
    rows = time_average_hierarchy(records, cfg.params.s, cfg.ladder_n, cfg.ladder_m)
    out = []
    for r in rows:
        exp = float(r.exponent) if is_defined(r.exponent) else None
        out.append({"n": r.n, "m": r.m, "quantity": r.quantity, "exponent": exp,
                    "average": r.average, "flag": r.flag})
    return out


def execute_run(cfg: ExperimentConfig, out_dir: Path, resume: str | None = None,
                max_steps: int | None = None) -> int:
    """Run one configuration; returns the exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / cfg.records
    ckpt_path = out_dir / cfg.checkpoint
    params = replace(cfg.params, seed=cfg.seed)
    diag = cfg.diagnostics()
    if resume:
        state, meta = load_state(resume)
        if meta.get("config_hash") and meta["config_hash"] != config_hash(cfg):
            log.warning("checkpoint was written under a different configuration")
        if state.u.grid.n != cfg.n:
            raise ConfigError(f"checkpoint grid n={state.u.grid.n} differs from grid.n={cfg.n}")
        start = state.step_count
        # earlier records feed the end-of-run time averages
        prior = [DiagnosticsRecord.from_dict(r) for r in read_records(records_path)
                 if r["t"] <= state.time] if records_path.exists() else []
        writer = RecordWriter(records_path, append=True)
    else:
        grid = GridSpec(cfg.n, params.domain_length)
        initial = replace(cfg.initial, seed=cfg.seed)
        state = None
        u0 = make_initial(grid, initial)
        start = 0
        prior = []
        writer = RecordWriter(records_path, header=_header(cfg, "run"))

    stop = params.n_steps if max_steps is None else min(params.n_steps, start + max_steps)
    chunk = cfg.checkpoint_interval or stop
    collected: list[DiagnosticsRecord] = list(prior)
    blowup = False
    with writer:
        run = None
        while True:
            target = min(stop, (state.step_count if state else 0) // chunk * chunk + chunk)
            if state is None:
                run = Run(params, u0, diag, stop_step=target)
            else:
                run = Run(params, diagnostics=diag, state=state, stop_step=target)
            for rec in run:
                writer.write(rec.as_dict())
                collected.append(rec)
            state = run.state
            if state.blowup:
                blowup = True
                break
            save_state(ckpt_path, state, config_hash(cfg))
            if state.step_count >= stop:
                break
        if state.step_count >= params.n_steps and not blowup and cfg.hierarchy:
            writer.write({"summary": {"hierarchy": _hierarchy_rows(collected, cfg)}})
    if blowup:
        log.error("non-finite state at t = %.6g; final record flagged", state.time)
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = resolve_config(args.config)
    if args.max_steps is not None and args.max_steps < 1:
        raise UsageError("--max-steps must be positive")
    return execute_run(cfg, Path(args.out_dir), args.resume, args.max_steps)


def _cmd_ineq(args) -> int:
    from .inequalities import compare_baseline, ensemble, load_baseline, run_lab, standard_cases

    cfg = resolve_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(cfg.ineq_n)
    fields = ensemble(grid, cfg.ineq_members, cfg.seed)
    cases = standard_cases(cfg.ineq_s, cfg.ineq_orders, cfg.ineq_commutator_s1)
    with RecordWriter(out_dir / cfg.report, header=_header(cfg, "ineq")) as writer:
        summaries = run_lab(cases, fields, writer.write)
    status = EXIT_OK
    for s in summaries:
        print(f"{s.case:48s} {s.kind:14s} max_ratio={s.max_ratio:.6g} "
              f"violations={s.violations} nonfinite={s.nonfinite}")
        if s.violations or s.nonfinite:
            status = EXIT_RUNTIME
    for msg in compare_baseline(summaries, load_baseline(cfg.ineq_baseline or None)):
        print("regression:", msg)
        status = EXIT_RUNTIME
    return status


def _parse_values(text: str) -> list[str]:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    if not vals:
        raise UsageError("--values needs at least one value")
    return vals


def _cmd_sweep(args) -> int:
    cfg = resolve_config(args.config) if args.config else ExperimentConfig()
    key = args.param if "." in args.param or args.param in KEYS else f"solver.{args.param}"
    if key not in KEYS:
        raise UsageError(f"unknown sweep parameter {args.param!r}")
    base = dumps_config(cfg)
    worst = EXIT_OK
    stem = Path(cfg.records).stem
    for value in _parse_values(args.values):
        drop = (f"{key} =", "output.records =", "output.checkpoint =")
        lines = [ln for ln in base.splitlines() if not ln.startswith(drop)]
        lines += [f"{key} = {value}", f"output.records = {stem}-{args.param}-{value}.ndjson",
                  f"output.checkpoint = {stem}-{args.param}-{value}.fns"]
        sub = parse_config("\n".join(lines), f"sweep {key}={value}")
        code = execute_run(sub, Path(args.out_dir))
        print(f"{key} = {value}: exit {code} -> {Path(args.out_dir) / sub.records}")
        worst = max(worst, code)
    return worst


def _cmd_plotdata(args) -> int:
    try:
        recs = read_records(args.ndjson)
    except FileNotFoundError:
        raise UsageError(f"no such file {args.ndjson!r}") from None
    try:
        rows = series(recs, args.series)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            write_csv(rows, args.series, fh)
    else:
        write_csv(rows, args.series, sys.stdout)
    return EXIT_OK


def _cmd_checkpoint_info(args) -> int:
    if not Path(args.file).is_file():
        raise UsageError(f"no such file {args.file!r}")
    info = read_header(args.file)
    from .checkpoint import read_field

    u = read_field(args.file)  # validates the payload length
    info["retained_band"] = u.grid.n_retained
    side = sidecar_path(args.file)
    if side.exists():
        meta = json.loads(side.read_text())
        info.update({"step": meta.get("step"), "time": meta.get("time"),
                     "config_hash": meta.get("config_hash")})
    print(json.dumps(info, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fnslab", description="Fractional Navier-Stokes laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a configuration or preset:<name>")
    p.add_argument("config")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--resume", metavar="CHECKPOINT")
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("ineq", help="inequality report for a configuration")
    p.add_argument("config")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_ineq)

    p = sub.add_parser("sweep", help="one run per parameter value")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True)
    p.add_argument("--config")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plotdata", help="extract one series as CSV")
    p.add_argument("ndjson")
    p.add_argument("--series", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_plotdata)

    p = sub.add_parser("checkpoint-info", help="describe a checkpoint file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_checkpoint_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        with scipy.fft.set_workers(_threads()):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckpointFormatError, FieldDataError, CFLViolation, OSError, ValueError,
            FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
