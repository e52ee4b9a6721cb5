import csv
import json
from fractions import Fraction
from pathlib import Path

import pytest

from multisqueeze.cli import RunConfig, main, parse_config
from multisqueeze.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def run(command, config, out, *extra):
    return main([command, "--config", str(config), "--out", str(out), *extra])


def test_transmit_identity_structure(tmp_path):
    cfg = write(tmp_path, """
[structure]
layers = [{g = 0, p = 1}]
[sweep]
energies = [0.5, 1.0, 3.0]
eps = [1.0, 0.1]
""")
    assert run("transmit", cfg, tmp_path / "out") == 0
    rows = read_rows(tmp_path / "out" / "transmit.csv")
    assert len(rows) == 6
    for r in rows:
        assert float(r["T"]) == pytest.approx(1.0, abs=1e-14)
        assert float(r["unitarity_err"]) < 1e-14


def test_transmit_delta_two(tmp_path):
    # a single p = 1 layer of strength 2 tends to a delta with alpha = 2
    cfg = write(tmp_path, """
[structure]
layers = [{g = 2, p = 1}]
[sweep]
energies = [1.0]
eps = [1e-8]
""")
    assert run("transmit", cfg, tmp_path / "out") == 0
    (row,) = read_rows(tmp_path / "out" / "transmit.csv")
    assert float(row["T"]) == pytest.approx(0.5, abs=1e-7)


def test_transmit_dirichlet_decays(tmp_path):
    cfg = write(tmp_path, """
[structure]
layers = [{g = -1, p = 2}, {g = 1, p = 2}]
[path]
exponents = [1, 1]
[sweep]
energies = [1.0]
eps = [1e-3, 1e-4, 1e-5]
""")
    assert run("transmit", cfg, tmp_path / "out") == 0
    T = [float(r["T"]) for r in read_rows(tmp_path / "out" / "transmit.csv")]
    assert T[0] > T[1] > T[2] and T[2] < 1e-3


def test_squeeze_delta(tmp_path):
    out = tmp_path / "out"
    assert run("squeeze", CONFIGS / "delta.toml", out) == 0
    cls = read_rows(out / "classification.csv")
    assert [r["class"] for r in cls] == ["delta", "delta"]
    assert float(cls[0]["alpha"]) == pytest.approx(-1.0, abs=1e-6)
    assert len(read_rows(out / "squeeze.csv")) == 8
    trace = (out / "trace_E1_21.dat").read_text().splitlines()
    assert len(trace) == 13 and len(trace[0].split()) == 2


def test_resonance_roots(tmp_path):
    out = tmp_path / "out"
    assert run("resonance", CONFIGS / "dprime.toml", out) == 0
    rows = read_rows(out / "resonance.csv")
    assert [r["cross_validation"] for r in rows] == ["pass", "pass"]
    assert float(rows[0]["root"]) == pytest.approx(3.9266023120479, abs=1e-10)
    assert read_rows(out / "equation.csv")[0]["sigma_range"] == "{1}"


def test_resonance_zero_eta_roots(tmp_path):
    # an adjoint layer with vanishing eta leaves tau_2 = 0, roots at n*pi
    cfg = write(tmp_path, """
[structure]
layers = [{g = 1, p = 1}, {g = -1, p = 2}]
[path]
exponents = [1, 1]
[resonance]
free_layers = [2]
bracket = [0.5, 10.0]
""")
    # the regular first layer only pads; the equation is tau_2 = 0
    assert run("resonance", cfg, tmp_path / "out") == 0
    roots = [float(r["root"]) for r in read_rows(tmp_path / "out" / "resonance.csv")]
    assert roots == pytest.approx([3.141592653589793, 6.283185307179586, 9.42477796076938], abs=1e-10)


def test_resonance_inadmissible(tmp_path, capsys):
    cfg = write(tmp_path, """
[structure]
layers = [{g = -1, p = 2}, {g = 1, p = "3/2"}, {g = -1, p = 2}]
[path]
exponents = [1, 1, 1]
[resonance]
free_layers = [1]
bracket = [1, 2]
""")
    assert run("resonance", cfg, tmp_path / "out") == 3
    assert "rule:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "matrix, expected",
    [([[1.0, 0.0], [-4.0, 1.0]], [2.0]), ([[2.0, 0.0], [-5.0, 0.5]], [2.0]), ([[1.0, 0.0], [3.0, 1.0]], [])],
    ids=["delta", "resonant", "barrier"],
)
def test_bound_from_matrix(tmp_path, matrix, expected):
    cfg = write(tmp_path, f"""
[structure]
layers = [{{g = -4, p = 1}}]
[bound]
source = "matrix"
matrix = {json.dumps(matrix)}
bracket = [0.1, 10.0]
""")
    assert run("bound", cfg, tmp_path / "out") == 0
    kappas = [float(r["kappa"]) for r in read_rows(tmp_path / "out" / "bound.csv")]
    assert kappas == pytest.approx(expected, abs=1e-10)


def test_bound_from_structure(tmp_path):
    cfg = write(tmp_path, """
[structure]
layers = [{g = -4, p = 1}]
[sweep]
eps = [1e-2, 1e-4]
[bound]
source = "structure"
bracket = [0.1, 10.0]
""")
    assert run("bound", cfg, tmp_path / "out") == 0
    rows = read_rows(tmp_path / "out" / "bound.csv")
    assert abs(float(rows[-1]["kappa"]) - 2) < abs(float(rows[0]["kappa"]) - 2) < 0.1


def test_classify(tmp_path):
    out = tmp_path / "out"
    assert run("classify", CONFIGS / "adjoint_pair.toml", out) == 0
    layers = read_rows(out / "layers.csv")
    assert [r["class"] for r in layers] == ["G^sigma", "G'"]
    assert float(layers[0]["sigma"]) == 2.0
    assert len(read_rows(out / "faces.csv")) == 1


def test_stdout_when_no_out(capsys):
    assert main(["classify", "--config", str(CONFIGS / "delta.toml")]) == 0
    assert capsys.readouterr().out.startswith("layer,class")


def test_json_mirror(tmp_path):
    out = tmp_path / "out"
    assert run("squeeze", CONFIGS / "delta.toml", out, "--format", "json") == 0
    data = json.loads((out / "classification.json").read_text())
    assert data["columns"][1] == "class" and len(data["rows"]) == 2
    assert (out / "classification.csv").exists()


@pytest.mark.parametrize("command, config", [
    ("squeeze", "delta.toml"), ("resonance", "dprime.toml"), ("transmit", "delta.toml"),
])
def test_threads_do_not_change_output(tmp_path, command, config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(command, CONFIGS / config, a, "--threads", "1") == 0
    assert run(command, CONFIGS / config, b, "--threads", "4") == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml")))
def test_config_echo_round_trip(tmp_path, name):
    out = tmp_path / "out"
    assert run("classify", CONFIGS / name, out) == 0
    echoed = parse_config((out / "config.toml").read_text())
    original = parse_config((CONFIGS / name).read_text())
    assert echoed == original
    assert parse_config(echoed.to_toml()) == echoed


def test_rationals_kept_exact():
    cfg = parse_config('[structure]\nlayers = [{g = 1, p = "3/2"}]\n')
    assert cfg.layers[0][1] == Fraction(3, 2)


@pytest.mark.parametrize("text", [
    "[structure]\nlayers = [{g = 1}]\n[extra]\nx = 1\n",
    "[structure]\nlayers = [{g = 1}]\ncolour = 1\n",
    "[structure]\nlayers = [{g = 1, q = 2}]\n",
    "[structure]\nlayers = []\n",
    "[structure]\nlayers = [{g = 1}]\n[path]\nexponents = [1, 2]\n",
    "[structure]\nlayers = [{g = 1}]\n[path]\nsigma = 0.5\n",
    "[structure]\nlayers = [{g = \"abc\"}]\n",
    "[structure\n",
])
def test_config_rejections(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_exit_code_config(tmp_path, capsys):
    cfg = write(tmp_path, "[structure]\nlayers = [{g = 1}]\nbogus = 2\n")
    assert run("squeeze", cfg, tmp_path / "out") == 2
    assert "config error" in capsys.readouterr().err


def test_exit_code_missing_file(tmp_path):
    assert run("squeeze", tmp_path / "missing.toml", tmp_path / "out") == 2


def test_exit_code_exponent_out_of_range(tmp_path):
    cfg = write(tmp_path, "[structure]\nlayers = [{g = 1, p = 3}]\n")
    assert run("classify", cfg, tmp_path / "out") == 2


def test_exit_code_numeric(tmp_path, capsys):
    cfg = write(tmp_path, """
[structure]
layers = [{g = -1, p = 2}, {g = 1, p = 2}]
[path]
exponents = [1, 2]
""")
    assert run("squeeze", cfg, tmp_path / "out") == 4
    assert "numeric failure" in capsys.readouterr().err


def test_run_config_defaults():
    cfg = RunConfig.from_dict({"structure": {"layers": [{"g": 1}]}})
    assert cfg.energies == (1.0,) and cfg.path.exponents == (1,)
