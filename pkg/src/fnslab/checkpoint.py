"""Binary checkpoints of spectral fields.

Layout (little-endian)::

    b"FNS1"  u32 n  f64 L  u8 components  u8 flags   payload

flags bit 0 marks a divergence-free field, bit 1 a mean-free one. The
payload holds (re, im) f64 pairs over the retained lattice
|m_i| <= floor(2n/6) in lexicographic (component, kx, ky, kz) order, each
index ascending from -K to K.

Solver bookkeeping (time, step, accumulators) goes into a JSON sidecar
``<file>.json`` so a resumed run continues bit for bit.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .diagnostics import Accumulators
from .spectral import FieldDataError, GridSpec, SpectralField

__all__ = [
    "MAGIC",
    "CheckpointFormatError",
    "write_field",
    "read_field",
    "read_header",
    "save_state",
    "load_state",
]

MAGIC = b"FNS1"
_HEADER = struct.Struct("<4sIdBB")
_DIVFREE, _MEANFREE = 1, 2


class CheckpointFormatError(ValueError):
    """Malformed, truncated or foreign checkpoint file."""


def _retained_index(grid: GridSpec) -> np.ndarray:
    k = grid.n_retained
    return np.arange(-k, k + 1) % grid.n


def encode_field(u: SpectralField) -> bytes:
    grid = u.grid
    idx = _retained_index(grid)
    block = u.coeffs[:, idx][:, :, idx][:, :, :, idx]
    if np.any(u.coeffs[:, ~grid.dealias_mask]):
        raise FieldDataError("field has content outside the retained lattice")
    flags = (_DIVFREE if u.divergence_free else 0) | (_MEANFREE if u.mean_free else 0)
    head = _HEADER.pack(MAGIC, grid.n, grid.domain_length, u.components, flags)
    payload = np.ascontiguousarray(block).view("<f8").astype("<f8", copy=False).tobytes()
    return head + payload


def decode_field(data: bytes, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    if len(data) < _HEADER.size:
        raise CheckpointFormatError("file too short for a header")
    magic, n, length, comps, flags = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if comps not in (1, 3):
        raise CheckpointFormatError(f"invalid component count {comps}")
    try:
        grid = GridSpec(int(n), float(length), dealias_fraction)
    except ValueError as exc:
        raise CheckpointFormatError(f"invalid grid in header: {exc}") from exc
    side = 2 * grid.n_retained + 1
    expected = comps * side**3 * 16
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise CheckpointFormatError(
            f"payload has {len(payload)} bytes, expected {expected} (truncated or padded)"
        )
    block = np.frombuffer(payload, dtype="<f8").view(np.complex128).reshape(comps, side, side, side)
    coeffs = np.zeros((comps, n, n, n), dtype=complex)
    idx = _retained_index(grid)
    coeffs[np.ix_(range(comps), idx, idx, idx)] = block
    return SpectralField(grid, coeffs, bool(flags & _DIVFREE))


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        data = fh.read(_HEADER.size)
    if len(data) < _HEADER.size:
        raise CheckpointFormatError("file too short for a header")
    magic, n, length, comps, flags = _HEADER.unpack(data)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    return {
        "magic": magic.decode("ascii"),
        "n": n,
        "domain_length": length,
        "components": comps,
        "divergence_free": bool(flags & _DIVFREE),
        "mean_free": bool(flags & _MEANFREE),
        "size": os.path.getsize(path),
    }


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_field(path, u: SpectralField):
    _atomic_write(Path(path), encode_field(u))


def read_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        return decode_field(fh.read())


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def save_state(path, state, config_hash: str = ""):
    """Field checkpoint plus the sidecar with time, step and accumulators."""
    write_field(path, state.u)
    meta = {
        "step": state.step_count,
        "time": state.time,
        "accumulators": state.acc.to_json(),
        "config_hash": config_hash,
    }
    _atomic_write(sidecar_path(path), json.dumps(meta, sort_keys=True).encode())


def load_state(path):
    from .solver import SolverState

    u = read_field(path)
    side = sidecar_path(path)
    if not side.exists():
        raise CheckpointFormatError(f"missing sidecar {side}")
    meta = json.loads(side.read_text())
    acc = Accumulators.from_json(meta["accumulators"])
    return SolverState(u, int(meta["step"]), float(meta["time"]), acc), meta
