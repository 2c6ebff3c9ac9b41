"""Config parsing, experiment validation, and the command line driver."""
import math
import os
import re
import subprocess
import sys

import pytest

from bandpde.cli import _cap_threads, _cell, main, write_csv
from bandpde.errors import ConfigError
from bandpde.experiments import (EXPERIMENTS, Table, _bool, _depths, _length,
                                 _omega, _stabilizer, _weight,
                                 parse_config_text, run_experiment,
                                 validate_config)


class TestParseConfigText:
    def test_values_comments_and_blanks(self):
        text = """
        # a comment line
        experiment = StripStability
        flow = wave   # trailing comment
        alpha = 1
        """
        raw = parse_config_text(text)
        assert raw == {"experiment": "StripStability", "flow": "wave",
                       "alpha": "1"}

    def test_missing_equals_is_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config_text("experiment StripStability")

    def test_duplicate_key_is_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("h = 1\nh = 2")

    def test_empty_key_is_rejected(self):
        with pytest.raises(ConfigError, match="empty key"):
            parse_config_text("= 3")


class TestFieldParsers:
    def test_length_tokens(self):
        assert _length("3h") == ("h", 3.0)
        assert _length("h") == ("h", 1.0)
        assert _length("0.125") == ("abs", 0.125)

    def test_weight_tokens(self):
        assert _weight("sigma_inv") == "sigma_inv"
        assert _weight("one") == "one"
        assert _weight("2h") == ("h", 2.0)

    def test_omega_tokens(self):
        assert _omega("2pi") == pytest.approx(2.0 * math.pi)
        assert _omega("pi") == pytest.approx(math.pi)
        assert _omega("6.5") == 6.5

    def test_depth_tokens(self):
        assert _depths("default,3,-3") == ("default", 3.0, -3.0)

    def test_stabilizer_tokens(self):
        assert _stabilizer("none") == ("none", 0.0)
        assert _stabilizer("dissipative:0.2") == ("dissipative", 0.2)
        assert _stabilizer("reinit:0.05") == ("reinit", 0.05)
        with pytest.raises(ValueError):
            _stabilizer("magic")

    def test_bool_tokens(self):
        assert _bool("true") and _bool("1") and _bool("yes")
        assert not (_bool("false") or _bool("0") or _bool("no"))
        with pytest.raises(ValueError):
            _bool("maybe")


class TestValidateConfig:
    def test_empty_config_names_the_missing_field(self):
        with pytest.raises(ConfigError, match="missing field 'experiment'"):
            validate_config({})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            validate_config({"experiment": "Nope"})

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="unknown field 'banana'"):
            validate_config({"experiment": "StripStability", "banana": "1"})

    def test_bad_value_names_the_field(self):
        with pytest.raises(ConfigError, match="field 'epsilon'"):
            validate_config({"experiment": "StripStability",
                             "epsilon": "soft"})

    def test_reserved_keys_pass_through(self):
        exp, params = validate_config({"experiment": "StripStability",
                                       "out": "somewhere", "seed": "3",
                                       "threads": "2"})
        assert exp.name == "StripStability"
        assert "out" not in params

    def test_defaults_fill_in(self):
        _, params = validate_config({"experiment": "TorusEigen"})
        assert params["h"] == 0.05
        assert params["count"] == 8


class TestRegistry:
    def test_canonical_order(self):
        assert list(EXPERIMENTS) == [
            "SpherePoisson", "CircleEigen", "TorusEigen", "EllipseHeat",
            "AllenCahn", "PLaplacianConstrained", "EllipseWave",
            "StripStability", "RandomShiftStudy"]

    def test_every_field_has_help_and_parse(self):
        for exp in EXPERIMENTS.values():
            for f in exp.fields:
                assert f.help
                assert callable(f.parse)
                if f.default is not None:
                    f.parse(f.default)   # defaults must parse


class TestCsvFormatting:
    def test_cell_types(self):
        assert _cell(3) == "3"
        assert _cell(True) == "1"
        assert _cell(0.5) == "5.000000000000e-01"
        assert _cell(float("nan")) == "nan"
        assert _cell("ghost") == "ghost"

    def test_write_csv(self, tmp_path):
        table = Table("t", ["a", "b"], [(1, 2.0), (3, 4.5)])
        path = tmp_path / "t.csv"
        write_csv(str(path), table)
        lines = path.read_text().splitlines()
        assert lines[0] == "a,b"
        assert lines[1] == "1,2.000000000000e+00"


STRIP_CFG = """experiment = StripStability
flow = parabolic
omega_list = 2pi
grid = false
"""


class TestDriver:
    def test_list_shows_all_experiments(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        pos = [out.index(name + ":") for name in EXPERIMENTS]
        assert pos == sorted(pos)

    def test_run_writes_csv(self, tmp_path, capsys):
        cfg = tmp_path / "strip.txt"
        cfg.write_text(STRIP_CFG)
        out = tmp_path / "results"
        assert main(["run", str(cfg), "--out", str(out)]) == 0
        text = (out / "roots.csv").read_text()
        lines = text.splitlines()
        assert lines[0] == ("omega,re_kappa,im_kappa,re_growth,im_growth,"
                            "classification,residual")
        cells = lines[1].split(",")
        assert re.fullmatch(r"-?\d\.\d{12}e[+-]\d{2,3}", cells[0])
        assert cells[5] == "unstable"

    def test_default_out_is_config_stem(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "mystrip.txt"
        cfg.write_text(STRIP_CFG)
        assert main(["run", str(cfg)]) == 0
        assert (tmp_path / "mystrip" / "roots.csv").exists()

    def test_out_key_in_config(self, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        cfg = tmp_path / "strip.txt"
        cfg.write_text(STRIP_CFG + "out = named\n")
        assert main(["run", str(cfg)]) == 0
        assert (tmp_path / "named" / "roots.csv").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("flow = parabolic\n")
        assert main(["run", str(cfg)]) == 2
        assert "missing field 'experiment'" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.txt")]) == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_thread_cap_sets_env(self, monkeypatch):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
            monkeypatch.delenv(var, raising=False)
        _cap_threads(3)
        assert os.environ["OMP_NUM_THREADS"] == "3"
        assert os.environ["OPENBLAS_NUM_THREADS"] == "3"


class TestReproducibility:
    def test_same_seed_same_bytes(self, tmp_path, capsys):
        cfg = tmp_path / "shift.txt"
        cfg.write_text("experiment = RandomShiftStudy\n"
                       "trials = 2\nh = 0.15\nwith_cond = false\n")
        out1, out2, out3 = (tmp_path / n for n in ("a", "b", "c"))
        assert main(["run", str(cfg), "--out", str(out1), "--seed", "5"]) == 0
        assert main(["run", str(cfg), "--out", str(out2), "--seed", "5"]) == 0
        assert main(["run", str(cfg), "--out", str(out3), "--seed", "6"]) == 0
        first = (out1 / "trials.csv").read_bytes()
        assert first == (out2 / "trials.csv").read_bytes()
        assert first != (out3 / "trials.csv").read_bytes()

    def test_seed_key_in_config(self, tmp_path, capsys):
        cfg = tmp_path / "shift.txt"
        cfg.write_text("experiment = RandomShiftStudy\n"
                       "trials = 1\nh = 0.15\nwith_cond = false\nseed = 5\n")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(cfg), "--out", str(out1)]) == 0
        assert main(["run", str(cfg), "--out", str(out2), "--seed", "5"]) == 0
        assert (out1 / "trials.csv").read_bytes() \
            == (out2 / "trials.csv").read_bytes()


class TestRunnerOutputs:
    def test_flow_compare_tables_and_state_dump(self):
        tables = run_experiment({
            "experiment": "EllipseHeat", "h": "0.05", "t_end": "0.004",
            "sample_dt": "0.002", "epsilon": "4h"})
        names = [t.name for t in tables]
        assert names == ["correct", "monitor_correct", "state_correct",
                         "incorrect", "monitor_incorrect", "state_incorrect"]
        monitor = tables[1]
        assert monitor.header == ["t", "linf_error", "energy",
                                  "constraint_err", "lambda", "reinit_flag"]
        state = tables[2]
        assert state.header == ["index", "i", "j", "x", "y", "d", "class", "v"]
        roles = {row[6] for row in state.rows}
        assert roles == {"interior", "ghost"}

    def test_wave_evolve_trace(self):
        tables = run_experiment({
            "experiment": "EllipseWave", "mode": "evolve", "h": "0.02",
            "t_end": "0.2", "sample_dt": "0.05", "stabilizer": "none"})
        summary, trace = tables
        assert summary.header == ["t_end", "blow_time", "sup_final",
                                  "linf_error"]
        assert len(trace.rows) >= 3

    def test_circle_eigen_needs_enough_pairs(self):
        with pytest.raises(ConfigError, match="count"):
            run_experiment({"experiment": "CircleEigen", "count": "5"})


def test_package_import_is_lazy():
    code = ("import bandpde, sys; "
            "assert 'numpy' not in sys.modules, 'numpy imported eagerly'; "
            "import bandpde.errors; "
            "assert 'numpy' not in sys.modules, 'errors pulled numpy'")
    subprocess.run([sys.executable, "-c", code], check=True)
