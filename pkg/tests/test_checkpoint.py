import json
import struct

import numpy as np
import pytest

from fnslab.checkpoint import (
    MAGIC,
    CheckpointFormatError,
    decode_field,
    encode_field,
    load_state,
    read_field,
    read_header,
    save_state,
    sidecar_path,
    write_field,
)
from fnslab.initial import random_band_limited
from fnslab.solver import FnseParams, SolverState, step
from fnslab.spectral import FieldDataError, GridSpec, SpectralField


class TestFieldFormat:
    def test_round_trip_bitwise(self, random16):
        back = decode_field(encode_field(random16))
        assert np.array_equal(back.coeffs, random16.coeffs)
        assert back.divergence_free and back.grid == random16.grid

    def test_header_bytes(self, random16):
        data = encode_field(random16)
        assert data[:4] == b"FNS1"
        n, length, comps, flags = struct.unpack("<IdBB", data[4:18])
        assert (n, comps, flags) == (16, 3, 3)
        assert length == pytest.approx(2 * np.pi)
        assert len(data) == 18 + 3 * 11**3 * 16

    def test_payload_order(self, grid16):
        c = np.zeros((3, 16, 16, 16), dtype=complex)
        c[(1, *grid16.slot((-5, -5, -4)))] = 2.0 + 3.0j
        data = encode_field(SpectralField(grid16, c))
        # component 1 starts after 11^3 entries; (-5,-5,-4) is the second entry
        offset = 18 + (11**3 + 1) * 16
        assert struct.unpack("<dd", data[offset:offset + 16]) == (2.0, 3.0)

    def test_scalar_field(self, grid8, rng):
        c = np.zeros((1, 8, 8, 8), dtype=complex)
        c[0, 1, 2, 0] = 1.5
        u = SpectralField(grid8, c)
        back = decode_field(encode_field(u))
        assert back.components == 1 and np.array_equal(back.coeffs, u.coeffs)

    def test_content_outside_band_rejected(self, grid16):
        c = np.zeros((3, 16, 16, 16), dtype=complex)
        c[1, 7, 0, 0] = 1.0
        with pytest.raises(FieldDataError):
            encode_field(SpectralField(grid16, c))

    def test_after_solver_steps(self, random16):
        st = step(SolverState(random16), FnseParams(dt=0.01))
        assert np.array_equal(decode_field(encode_field(st.u)).coeffs, st.u.coeffs)


class TestCorruption:
    def test_bad_magic(self, random16):
        data = b"XXXX" + encode_field(random16)[4:]
        with pytest.raises(CheckpointFormatError, match="magic"):
            decode_field(data)

    def test_truncated_payload(self, random16):
        with pytest.raises(CheckpointFormatError, match="truncated"):
            decode_field(encode_field(random16)[:-8])

    def test_short_header(self):
        with pytest.raises(CheckpointFormatError):
            decode_field(MAGIC + b"\x00")

    def test_bad_component_count(self, random16):
        data = bytearray(encode_field(random16))
        data[16] = 2
        with pytest.raises(CheckpointFormatError):
            decode_field(bytes(data))

    def test_bad_grid(self, random16):
        data = bytearray(encode_field(random16))
        data[4:8] = struct.pack("<I", 15)
        with pytest.raises(CheckpointFormatError):
            decode_field(bytes(data))

    def test_format_error_is_value_error(self):
        assert issubclass(CheckpointFormatError, ValueError)


class TestFiles:
    def test_write_read(self, tmp_path, random16):
        path = tmp_path / "u.fns"
        write_field(path, random16)
        assert np.array_equal(read_field(path).coeffs, random16.coeffs)
        assert not (tmp_path / "u.fns.tmp").exists()

    def test_read_header(self, tmp_path, random16):
        path = tmp_path / "u.fns"
        write_field(path, random16)
        h = read_header(path)
        assert h["magic"] == "FNS1" and h["n"] == 16 and h["components"] == 3
        assert h["divergence_free"] and h["mean_free"]
        assert h["size"] == path.stat().st_size

    def test_state_round_trip(self, tmp_path):
        u = random_band_limited(GridSpec(8), seed=1)
        p = FnseParams(dt=0.01)
        st = step(SolverState(u), p)
        path = tmp_path / "s.fns"
        save_state(path, st, "abc")
        back, meta = load_state(path)
        assert back.step_count == 1 and back.time == st.time and back.acc == st.acc
        assert meta["config_hash"] == "abc"
        assert json.loads(sidecar_path(path).read_text())["step"] == 1

    def test_missing_sidecar(self, tmp_path, random16):
        path = tmp_path / "u.fns"
        write_field(path, random16)
        with pytest.raises(CheckpointFormatError, match="sidecar"):
            load_state(path)
