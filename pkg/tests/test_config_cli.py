from pathlib import Path

import numpy as np
import pytest

from boostbif import CmcClosedLoop, Pvmc, VmcType3
from boostbif.cli import main
from boostbif.config import ConfigError, parse_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def read_cfg(name):
    return (CONFIG_DIR / name).read_text()


class TestParseConfig:
    def test_example1_values(self):
        cfg = parse_config(read_cfg("example1.cfg"), run_id="example1")
        p = cfg.params
        assert (p.v_s, p.V_h, p.f_s) == (3.0, 1.0, 600e3)
        assert (p.L, p.C_f, p.R, p.r) == (1e-6, 100e-6, 2.0, 0.1)
        assert isinstance(p.scheme, Pvmc) and p.scheme.k_p == 2.0
        assert cfg.sweep_from == 3.0 and cfg.sweep_to == 8.0
        assert cfg.sweep_points == 101

    def test_example2_scheme(self):
        p = parse_config(read_cfg("example2.cfg")).params
        assert isinstance(p.scheme, VmcType3)
        assert p.scheme.K_c == 35.59
        assert p.scheme.z1 == 556.0
        assert p.R_c == 18e-3

    def test_example3_scheme(self):
        p = parse_config(read_cfg("example3.cfg")).params
        assert isinstance(p.scheme, CmcClosedLoop)
        assert p.V_h == 0.0

    def test_missing_required_key(self):
        text = read_cfg("example1.cfg").replace("v_s = 3.0", "")
        with pytest.raises(ConfigError, match="v_s"):
            parse_config(text)

    def test_negative_resistance(self):
        text = read_cfg("example1.cfg").replace("r = 0.1", "r = -0.1")
        with pytest.raises(ConfigError, match="r"):
            parse_config(text)

    def test_unknown_key_reports_line(self):
        text = read_cfg("example1.cfg") + "\nbananas = 7\n"
        with pytest.raises(ConfigError, match="bananas"):
            parse_config(text)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="mystery"):
            parse_config("[mystery]\nx = 1\n")

    def test_bad_number(self):
        text = read_cfg("example1.cfg").replace("f_s = 600e3", "f_s = sixty")
        with pytest.raises(ConfigError, match="f_s"):
            parse_config(text)

    def test_vmc_requires_ramp(self):
        text = read_cfg("example1.cfg").replace("V_h = 1.0", "V_h = 0.0")
        with pytest.raises(ConfigError, match="V_h"):
            parse_config(text)

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="section"):
            parse_config("v_s = 3\n")


def run_cli(*args):
    return main(list(args))


class TestCliCommands:
    def test_analyze_example1(self, tmp_path, capsys):
        rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                     "--out", str(tmp_path), "analyze")
        assert rc == 0
        out = capsys.readouterr().out
        assert "D_S             0.78" in out
        assert "v_r*            7.097" in out
        assert "D_H             0.5145" in out
        assert "v_r(D_H)        5.355" in out
        csv = (tmp_path / "example1_analyze.csv").read_text().splitlines()
        header = csv[0].split(",")
        vals = csv[1].split(",")
        ds = float(vals[header.index("D_S")])
        assert abs(ds - 0.7800302817069272) < 1e-15  # full precision kept

    def test_analyze_lossless_variant(self, tmp_path, capsys):
        text = read_cfg("example1.cfg").replace("r = 0.1", "r = 0.0")
        cfg_path = tmp_path / "lossless.cfg"
        cfg_path.write_text(text)
        rc = run_cli("--config", str(cfg_path), "--out", str(tmp_path), "analyze")
        assert rc == 0
        out = capsys.readouterr().out
        assert "no SNB" in out
        assert "no Hopf" in out
        # kappa = 2 exceeds the lossless threshold 1/v_s
        assert "0.3333" in out

    def test_analyze_example3(self, tmp_path, capsys):
        rc = run_cli("--config", str(CONFIG_DIR / "example3.cfg"),
                     "--out", str(tmp_path), "analyze")
        assert rc == 0
        out = capsys.readouterr().out
        assert "D_S             0.9098" in out
        assert "v_r*            17.71" in out

    def test_steady_example2(self, tmp_path, capsys):
        rc = run_cli("--config", str(CONFIG_DIR / "example2.cfg"),
                     "--out", str(tmp_path), "steady", "--vr", "30.3")
        assert rc == 0
        out = capsys.readouterr().out
        assert "D = 0.8012" in out
        assert "D = 0.8688" in out
        assert "(16.67, 0)" in out
        rows = (tmp_path / "example2_steady.csv").read_text().splitlines()
        assert len(rows) == 4  # header + two periodic points + dc

    def test_simulate_dc_saturation(self, tmp_path, capsys):
        rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                     "--out", str(tmp_path), "simulate", "--vr", "5.5",
                     "--x0", "29,0.1", "--cycles", "300")
        assert rc == 0
        out = capsys.readouterr().out
        assert "DC saturation over the last 100 cycles: True" in out
        assert (tmp_path / "example1_trajectory.csv").exists()

    def test_poles_sign_changes(self, tmp_path, capsys):
        rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                     "--out", str(tmp_path), "poles", "--points", "400")
        assert rc == 0
        out = capsys.readouterr().out
        assert "c_0 changes sign" in out
        assert "c_1 changes sign" in out
        rows = (tmp_path / "example1_poles.csv").read_text().splitlines()
        header = rows[0].split(",")
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        c0 = data[:, header.index("c_0")]
        c1 = data[:, header.index("c_1")]
        flip = lambda arr: data[np.where(np.diff(np.sign(arr)) != 0)[0], 0]
        assert flip(c0)[0] == pytest.approx(0.78, abs=0.01)
        assert flip(c1)[0] == pytest.approx(0.51, abs=0.01)

    def test_sweep_writes_both_csvs(self, tmp_path, capsys):
        rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                     "--out", str(tmp_path), "--run-id", "mini", "--jobs", "1",
                     "sweep", "--from", "6.5", "--to", "7.3", "--points", "6")
        assert rc == 0
        out = capsys.readouterr().out
        assert "snb at v_r = 7.07" in out
        assert (tmp_path / "mini_branches.csv").exists()
        assert (tmp_path / "mini_critical.csv").exists()


class TestCliErrors:
    def test_missing_config_file(self, tmp_path):
        assert run_cli("--config", str(tmp_path / "nope.cfg"), "analyze") == 5

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[converter]\nwhatever = 1\n")
        assert run_cli("--config", str(bad), "analyze") == 2

    def test_validation_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(read_cfg("example1.cfg").replace("v_s = 3.0", ""))
        assert run_cli("--config", str(bad), "analyze") == 3

    def test_poles_requires_pvmc(self, tmp_path):
        rc = run_cli("--config", str(CONFIG_DIR / "example3.cfg"),
                     "--out", str(tmp_path), "poles")
        assert rc == 3

    def test_bad_x0_length(self, tmp_path):
        rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                     "--out", str(tmp_path), "simulate", "--vr", "5.0",
                     "--x0", "1,2,3")
        assert rc == 3


class TestCliDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                         "--out", str(d), "--run-id", "det", "--jobs", "1",
                         "analyze")
            assert rc == 0
            rc = run_cli("--config", str(CONFIG_DIR / "example1.cfg"),
                         "--out", str(d), "--run-id", "det", "--jobs", "1",
                         "sweep", "--from", "6.8", "--to", "7.2", "--points", "4")
            assert rc == 0
            outs.append(d)
        for name in ("det_analyze.csv", "det_branches.csv", "det_critical.csv"):
            a = (outs[0] / name).read_bytes()
            b = (outs[1] / name).read_bytes()
            assert a == b
