import json
import subprocess
import sys

import pytest

from fnslab.cli import EXIT_BLOWUP, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from fnslab.records import read_records

SMALL = """\
grid.n = 8
solver.s = 0.8
solver.dt = 0.01
solver.t_end = 0.2
solver.integrator = ETD-RK4
initial.kind = random
run.record_interval = 5
seed = 3
"""

BLOWUP = """\
grid.n = 16
solver.s = 0.25
solver.dt = 0.5
solver.t_end = 100
solver.cfl_warn = inf
solver.cfl_limit = inf
initial.kind = random
initial.amplitude = 1000
run.record_interval = 50
diagnostics.monitor = false
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


class TestRun:
    def test_small_config(self, tmp_path, small_cfg):
        assert main(["run", str(small_cfg), "--out-dir", str(tmp_path / "o")]) == EXIT_OK
        lines = (tmp_path / "o" / "run.ndjson").read_text().splitlines()
        assert json.loads(lines[0])["header"]["kind"] == "run"
        recs = read_records(tmp_path / "o" / "run.ndjson")
        assert [round(r["t"], 12) for r in recs] == [0.0, 0.05, 0.1, 0.15, 0.2]
        assert (tmp_path / "o" / "run.fns").exists()

    @pytest.mark.slow
    def test_preset(self, tmp_path):
        assert main(["run", "preset:above-fivefourths", "--out-dir", str(tmp_path)]) == EXIT_OK
        text = (tmp_path / "above-fivefourths.ndjson").read_text().splitlines()
        assert "hierarchy" in json.loads(text[-1])["summary"]

    def test_resume_is_byte_identical(self, tmp_path, small_cfg):
        full, part = tmp_path / "full", tmp_path / "part"
        assert main(["run", str(small_cfg), "--out-dir", str(full)]) == EXIT_OK
        assert main(["run", str(small_cfg), "--out-dir", str(part), "--max-steps", "7"]) == EXIT_OK
        assert json.loads((part / "run.fns.json").read_text())["step"] == 7
        assert main(["run", str(small_cfg), "--out-dir", str(part),
                     "--resume", str(part / "run.fns")]) == EXIT_OK
        assert (full / "run.ndjson").read_bytes() == (part / "run.ndjson").read_bytes()
        assert (full / "run.fns").read_bytes() == (part / "run.fns").read_bytes()

    def test_blowup_exits_3_with_flagged_record(self, tmp_path):
        cfg = tmp_path / "b.cfg"
        cfg.write_text(BLOWUP)
        assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_BLOWUP
        last = read_records(tmp_path / "run.ndjson")[-1]
        assert last["blowup"] is True and last["H01"] is None

    def test_thread_env_ignored_by_output(self, tmp_path, small_cfg, monkeypatch):
        outs = []
        for threads in ("1", "8"):
            monkeypatch.setenv("FNS_THREADS", threads)
            d = tmp_path / threads
            assert main(["run", str(small_cfg), "--out-dir", str(d)]) == EXIT_OK
            outs.append(((d / "run.ndjson").read_bytes(), (d / "run.fns").read_bytes()))
        assert outs[0] == outs[1]


class TestErrors:
    @pytest.mark.parametrize("argv", [[], ["frobnicate"], ["run"], ["run", "missing.cfg"],
                                      ["run", "preset:nowhere"], ["plotdata", "missing.ndjson",
                                                                  "--series", "H01"]])
    def test_usage(self, argv, capsys):
        assert main(argv) == EXIT_USAGE
        assert capsys.readouterr().err

    def test_bad_key_names_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("grid.n = 8\nsolver.viscosity = 1\n")
        assert main(["run", str(cfg)]) == EXIT_USAGE
        assert "bad.cfg:2: unknown key" in capsys.readouterr().err

    def test_bad_threads(self, small_cfg, monkeypatch):
        monkeypatch.setenv("FNS_THREADS", "zero")
        assert main(["run", str(small_cfg)]) == EXIT_USAGE

    def test_corrupt_checkpoint(self, tmp_path, small_cfg):
        out = tmp_path / "o"
        assert main(["run", str(small_cfg), "--out-dir", str(out), "--max-steps", "2"]) == EXIT_OK
        ckpt = out / "run.fns"
        data = bytearray(ckpt.read_bytes())
        data[:4] = b"JUNK"
        ckpt.write_bytes(bytes(data))
        assert main(["run", str(small_cfg), "--out-dir", str(out), "--resume", str(ckpt)]) == EXIT_RUNTIME
        assert main(["checkpoint-info", str(ckpt)]) == EXIT_RUNTIME

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "0.1.0"


class TestTools:
    def test_plotdata(self, tmp_path, small_cfg, capsys):
        out = tmp_path / "o"
        main(["run", str(small_cfg), "--out-dir", str(out)])
        capsys.readouterr()
        assert main(["plotdata", str(out / "run.ndjson"), "--series", "ladder.2"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,ladder.2" and len(lines) == 6
        csv = tmp_path / "h.csv"
        assert main(["plotdata", str(out / "run.ndjson"), "--series", "H01",
                     "--output", str(csv)]) == EXIT_OK
        assert csv.read_text().splitlines()[1].startswith("0,")
        assert main(["plotdata", str(out / "run.ndjson"), "--series", "nope"]) == EXIT_USAGE

    def test_checkpoint_info(self, tmp_path, small_cfg, capsys):
        out = tmp_path / "o"
        main(["run", str(small_cfg), "--out-dir", str(out)])
        capsys.readouterr()
        assert main(["checkpoint-info", str(out / "run.fns")]) == EXIT_OK
        info = json.loads(capsys.readouterr().out)
        assert info["magic"] == "FNS1" and info["n"] == 8 and info["step"] == 20

    def test_sweep_differs_only_in_s(self, tmp_path, small_cfg):
        assert main(["sweep", "--param", "s", "--values", "0.8, 1.0", "--config", str(small_cfg),
                     "--out-dir", str(tmp_path)]) == EXIT_OK
        a = json.loads((tmp_path / "run-s-0.8.ndjson").read_text().splitlines()[0])["header"]
        b = json.loads((tmp_path / "run-s-1.0.ndjson").read_text().splitlines()[0])["header"]
        assert (a["s"], b["s"]) == (0.8, 1.0)
        assert {k for k in a if a[k] != b[k]} == {"s", "config_hash"}
        ra = read_records(tmp_path / "run-s-0.8.ndjson")
        rb = read_records(tmp_path / "run-s-1.0.ndjson")
        assert ra[0]["H01"] == rb[0]["H01"] and ra[0]["Hs1"] != rb[0]["Hs1"]

    def test_sweep_unknown_param(self, tmp_path):
        assert main(["sweep", "--param", "viscosity", "--values", "1", "--out-dir", str(tmp_path)]) \
            == EXIT_USAGE

    def test_ineq_small(self, tmp_path, capsys):
        cfg = tmp_path / "i.cfg"
        cfg.write_text("ineq.n = 8\nineq.members = 5\nineq.s = 0.75\nineq.orders = 1, 3\n"
                       "ineq.commutator_s1 = 1.2\n")
        code = main(["ineq", str(cfg), "--out-dir", str(tmp_path)])
        out = capsys.readouterr().out
        assert "interp-ladder" in out and "commutator" in out
        assert code == EXIT_OK
        rows = (tmp_path / "ineq.ndjson").read_text().splitlines()
        assert "summary" in json.loads(rows[-1])

    def test_ineq_regression_exits_2(self, tmp_path, capsys):
        base = tmp_path / "base.json"
        base.write_text('{"l3-interp[s=0.75]": 0.1}')
        cfg = tmp_path / "i.cfg"
        cfg.write_text(f"ineq.n = 8\nineq.members = 3\nineq.s = 0.75\nineq.orders = 1\n"
                       f"ineq.commutator_s1 = 1.2\nineq.baseline = {base}\n")
        assert main(["ineq", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_RUNTIME
        assert "regression: l3-interp" in capsys.readouterr().out

    def test_entry_point_module(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "fnslab.cli", "run"], capture_output=True,
                              text=True)
        assert proc.returncode == EXIT_USAGE
