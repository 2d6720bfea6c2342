"""Configuration parsing and the command-line front end."""

import json
import os

import numpy as np
import pytest

import _oracles as oracle
from randset_pde.cli import main
from randset_pde.config import compile_expression, parse_config, require
from randset_pde.errors import ConfigError

PRESETS = os.path.join(os.path.dirname(__file__), "..", "src", "randset_pde", "presets")


def write_cfg(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


GAUSS_SMALL = """
[meta]
schema_version = 1
[model]
kind = gauss
[family]
mu_min = -1.0
mu_max = 1.0
sigma_min = 1.0
sigma_max = 2.0
[propagation]
samples = 300
seed = 7
mu_points = 5
sigma_points = 5
thresholds = 41
[qoi]
kind = gauss_identity
"""


class TestParseConfig:
    def test_membrane_preset_values(self):
        cfg = parse_config(os.path.join(PRESETS, "membrane.cfg"))
        assert cfg.kind == "elliptic"
        assert cfg.mesh.nx == cfg.mesh.ny == 18
        assert cfg.field.m_terms == 130
        assert cfg.propagation.samples == 500
        assert cfg.field.ell_min == 0.5 and cfg.field.ell_max == 1.5
        assert cfg.propagation.ell_points == 11
        assert cfg.field.a_min == 0.1
        assert cfg.qoi.x2 == pytest.approx(0.4444)

    def test_all_presets_parse(self):
        for name in ("membrane.cfg", "gauss_family.cfg", "transport_demo.cfg",
                     "wave_dalembert.cfg"):
            cfg = parse_config(os.path.join(PRESETS, name))
            assert cfg.schema_version == 1

    def test_missing_seed_named(self, tmp_path):
        path = write_cfg(tmp_path, GAUSS_SMALL.replace("seed = 7\n", ""))
        cfg = parse_config(path)
        with pytest.raises(ConfigError) as err:
            require(cfg, "propagation.seed")
        assert any("propagation.seed" in p for p in err.value.problems)

    def test_negative_ell_rejected(self, tmp_path):
        path = write_cfg(tmp_path, """
[meta]
schema_version = 1
[model]
kind = elliptic
[field]
ell = -0.5
""")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert any("field.ell" in p and "positive" in p for p in err.value.problems)

    def test_all_violations_collected(self, tmp_path):
        path = write_cfg(tmp_path, """
[meta]
schema_version = 1
[model]
kind = teapot
[field]
sigma = -1
ell = 0
m_terms = 0
""")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        joined = "\n".join(err.value.problems)
        for needle in ("model.kind", "field.sigma", "field.ell", "field.m_terms"):
            assert needle in joined
        assert len(err.value.problems) >= 4

    def test_unsupported_schema_version(self, tmp_path):
        path = write_cfg(tmp_path, "[meta]\nschema_version = 99\n[model]\nkind = gauss\n")
        with pytest.raises(ConfigError) as err:
            parse_config(path)
        assert any("schema_version" in p for p in err.value.problems)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(str(tmp_path / "nope.cfg"))


class TestExpressions:
    def test_numpy_semantics(self):
        fn = compile_expression("sin(pi*x)*exp(-t)", ("x", "t"))
        xs = np.array([0.0, 0.5])
        np.testing.assert_allclose(fn(xs, 0.0), np.sin(np.pi * xs))

    def test_unknown_names_rejected(self):
        with pytest.raises(ConfigError) as err:
            compile_expression("__import__('os').system('true')", ("x",))
        assert "unknown name" in str(err.value)
        with pytest.raises(ConfigError):
            compile_expression("open('x')", ("x",))

    def test_syntax_error_reported(self):
        with pytest.raises(ConfigError):
            compile_expression("2 +* x", ("x",))


class TestCLI:
    def test_kl_table_values(self, tmp_path):
        out = str(tmp_path / "kt")
        assert main(["kl-table", "--ell", "1.0", "--terms", "3", "--out-dir", out]) == 0
        rows = (tmp_path / "kt" / "kl_table.csv").read_text().splitlines()
        assert rows[0] == "k,alpha_k,c_k,alpha_star_k,c_star_k"
        assert len(rows) == 4
        first = rows[1].split(",")
        assert float(first[1]) == pytest.approx(oracle.ALPHA1_ELL1, abs=1e-8)
        assert float(first[2]) == pytest.approx(oracle.C1_ELL1, abs=1e-4)
        assert float(first[2]) == pytest.approx(1.1494, abs=1e-4)

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "[meta]\nschema_version = 1\n[model]\nkind = gauss\n")
        code = main(["propagate", "--config", path, "--out-dir", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        assert "propagation.samples" in err

    def test_missing_config_flag(self, tmp_path):
        assert main(["propagate", "--out-dir", str(tmp_path / "o")]) == 2

    def test_negative_seed_rejected(self, tmp_path):
        path = write_cfg(tmp_path, GAUSS_SMALL)
        assert main(["propagate", "--config", path, "--seed", "-1",
                     "--out-dir", str(tmp_path / "o")]) == 2

    def test_speed_bound_violation_exit_code(self, tmp_path):
        path = write_cfg(tmp_path, """
[meta]
schema_version = 1
[model]
kind = transport
[region]
kappa = 1.0
horizon = 0.4
speed_bound = 1.0
nx = 41
nt = 41
[transport]
a = 2.0
u0 = sin(pi*x)
""")
        assert main(["transport", "--config", path, "--out-dir", str(tmp_path / "o")]) == 4

    def test_picard_divergence_exit_code(self, tmp_path):
        path = write_cfg(tmp_path, """
[meta]
schema_version = 1
[model]
kind = transport
[region]
kappa = 1.0
horizon = 0.4
speed_bound = 0.0
nx = 31
nt = 31
[transport]
a = 0.0
f = 40.0
u0 = cos(x)
""")
        assert main(["transport", "--config", path, "--out-dir", str(tmp_path / "o")]) == 3

    def test_gauss_propagate_rerun_is_byte_identical(self, tmp_path):
        path = write_cfg(tmp_path, GAUSS_SMALL)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["propagate", "--config", path, "--out-dir", out_a]) == 0
        assert main(["propagate", "--config", path, "--out-dir", out_b]) == 0
        for name in ("pbox.csv", "intervals.csv", "mean_field.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_propagate_outputs_and_manifest(self, tmp_path):
        path = write_cfg(tmp_path, GAUSS_SMALL)
        out = tmp_path / "run"
        assert main(["propagate", "--config", path, "--out-dir", str(out)]) == 0
        pbox = (out / "pbox.csv").read_text().splitlines()
        assert pbox[0] == "b,f_lower,f_upper"
        assert len(pbox) == 42  # header + configured threshold count
        data = np.loadtxt(pbox[1:], delimiter=",")
        assert np.all(data[:, 1] <= data[:, 2])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "propagate"
        assert manifest["seed"] == 7
        assert manifest["failure_count"] == 0
        assert "config_sha256" in manifest and "stage_seconds" in manifest
        assert (out / "pbox.svg").exists() and (out / "slice.svg").exists()

    def test_seed_flag_overrides_config(self, tmp_path):
        path = write_cfg(tmp_path, GAUSS_SMALL)
        out_a, out_b = str(tmp_path / "s7"), str(tmp_path / "s8")
        assert main(["propagate", "--config", path, "--out-dir", out_a]) == 0
        assert main(["propagate", "--config", path, "--seed", "8", "--out-dir", out_b]) == 0
        a = (tmp_path / "s7" / "intervals.csv").read_bytes()
        b = (tmp_path / "s8" / "intervals.csv").read_bytes()
        assert a != b

    def test_json_format(self, tmp_path):
        path = write_cfg(tmp_path, GAUSS_SMALL)
        out = tmp_path / "j"
        assert main(["propagate", "--config", path, "--format", "json",
                     "--out-dir", str(out)]) == 0
        payload = json.loads((out / "pbox.json").read_text())
        assert payload["columns"] == ["b", "f_lower", "f_upper"]
        assert not (out / "pbox.csv").exists()

    def test_compare_command(self, tmp_path, capsys):
        path = write_cfg(tmp_path, GAUSS_SMALL)
        out = tmp_path / "cmp"
        assert main(["compare", "--config", path, "--out-dir", str(out)]) == 0
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[0] == "b,f_lower,f_low,f_upp,f_upper,chain_ok"
        table = np.loadtxt(lines[1:], delimiter=",")
        assert np.all(table[:, 5] == 1.0)
        assert "chain holds" in capsys.readouterr().out

    def test_sample_field_and_preset_resolution(self, tmp_path):
        out = tmp_path / "sf"
        cfg = write_cfg(tmp_path, """
[meta]
schema_version = 1
[model]
kind = elliptic
[field]
sigma = 1.0
ell = 1.0
m_terms = 20
""")
        assert main(["sample-field", "--config", cfg, "--seed", "3",
                     "--paths", "4", "--out-dir", str(out)]) == 0
        header = (out / "field.csv").read_text().splitlines()[0]
        assert header == "x,q_0,q_1,q_2,q_3"
        assert (out / "field.svg").exists()

    def test_elliptic_single_run(self, tmp_path):
        cfg = write_cfg(tmp_path, """
[meta]
schema_version = 1
[model]
kind = elliptic
[field]
sigma = 1.0
ell = 1.0
m_terms = 30
a_min = 0.1
[mesh]
shape = l_shape
nx = 10
ny = 10
[qoi]
x2 = 0.4
""")
        out = tmp_path / "el"
        assert main(["elliptic", "--config", cfg, "--seed", "1",
                     "--out-dir", str(out)]) == 0
        nodal = (out / "nodal.csv").read_text().splitlines()
        assert nodal[0] == "x1,x2,u"
        sl = (out / "slice.csv").read_text().splitlines()
        assert sl[0] == "x1,value"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["cg_iterations"] > 0

    def test_named_preset_lookup(self, tmp_path):
        out = tmp_path / "demo"
        assert main(["transport", "--config", "transport_demo",
                     "--out-dir", str(out)]) == 0
        header = (out / "solution.csv").read_text().splitlines()[0]
        assert header == "x,t,u"

    def test_slice_plot_path_counts(self, tmp_path):
        # scalar quantity: one member curve over grid indices + 2 envelope lines
        path = write_cfg(tmp_path, GAUSS_SMALL)
        out = tmp_path / "plots"
        assert main(["propagate", "--config", path, "--out-dir", str(out)]) == 0
        svg = (out / "slice.svg").read_text()
        assert svg.count('stroke="#b03030"') == 2
        assert svg.count('stroke="#7090c0"') == 1
