import json

import numpy as np
import pytest

from wnv_nonlocal import ConfigError, emit_config, parse_config
from wnv_nonlocal.cli import main, run
from wnv_nonlocal.config import format_float, load_config
from wnv_nonlocal.io import read_csv, write_json

MODEL = """
[model]
a1 = 1.0
a2 = 1.0
e1 = 1.0
e2 = 1.0
b1 = 1.0
b2 = 1.0
k = 1.0
d1 = 1.0
d2 = 1.0
omega = 1.0
delta = 0.5
mu1 = 1.0
mu2 = 1.0
h0 = 1.0
"""

FAST = MODEL + """
[numerics]
dx = 0.05
periods = 2
"""

MISMATCH = MODEL + """
[kernel]
kind = "tent"
radius = 1.0

[kernel2]
kind = "tent"
radius = 0.5
"""


def _write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_minimal_config_gets_defaults():
    config = parse_config(MODEL)

    assert config.model.delta == 0.5
    assert config.kernel == {"kind": "tent", "radius": 1.0}
    assert config.kernel2 is None
    assert config.numerics["dx"] == 0.02
    assert config.numerics["dt"] == "auto"
    assert config.sections["lamP"]["left"] == -1.0
    assert config.sections["lamP"]["right"] == 1.0
    assert "numerics.dx" in config.defaulted
    assert "kernel" in config.defaulted


def test_emitted_config_lists_defaults():
    text = emit_config(parse_config(MODEL))
    first = text.splitlines()[0]

    assert first.startswith("# defaulted: ")
    assert "numerics.periods" in first
    assert "[numerics]" in text
    assert 'dt = "auto"' in text


def test_round_trip():
    config = parse_config(FAST + '\n[classify]\nmode = "static"\nrel_width = 0.1\n')
    assert parse_config(emit_config(config)) == config

    mismatched = parse_config(MISMATCH)
    assert parse_config(emit_config(mismatched)) == mismatched


def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(1.0) == "1.0"
    assert format_float(-3.0) == "-3.0"
    assert format_float(1e22) == "1e+22"
    assert float(format_float(2 / 3)) == 2 / 3


@pytest.mark.parametrize("text, name", [
    (MODEL.replace("delta = 0.5", "delta = 1.5"), "delta"),
    (MODEL.replace("a1 = 1.0", 'a1 = "one"'), "model.a1"),
    (MODEL + "\n[numerics]\nfoo = 1\n", "numerics.foo"),
    (MODEL + "\n[bogus]\nx = 1\n", "bogus"),
    (MODEL + "\n[numerics]\ndt = \"fast\"\n", "numerics.dt"),
    (MODEL + "\n[numerics]\nperiods = 0\n", "numerics.periods"),
    (MODEL + "\n[periodic]\nmode = \"sideways\"\n", "periodic.mode"),
    (MODEL + "\n[lamP]\nleft = 1.0\nright = -1.0\n", "lamP.left"),
    (MODEL + "\n[kernel]\nkind = \"box\"\n", "kernel"),
    (MODEL.replace("h0 = 1.0\n", ""), "h0"),
])
def test_invalid_configs_name_the_key(text, name):
    with pytest.raises(ConfigError, match=name):
        parse_config(text)


def test_malformed_toml():
    with pytest.raises(ConfigError):
        parse_config("[model\na1 = 1.0")


def test_missing_model_section():
    with pytest.raises(ConfigError, match="model"):
        parse_config("[numerics]\ndx = 0.1\n")


def test_kernel_mismatch_depends_on_command():
    config = parse_config(MISMATCH)

    assert not config.shared_kernel
    assert parse_config(MISMATCH, "simulate") == config
    assert parse_config(MISMATCH, "classify") == config

    for command in ("eigen", "lamP"):
        with pytest.raises(ConfigError, match="kernel2"):
            parse_config(MISMATCH, command)

    with pytest.raises(ConfigError):
        parse_config(MISMATCH + '\n[classify]\nmode = "static"\n', "classify")


def test_overrides():
    config = parse_config(MODEL)
    changed = config.with_overrides(periods=3, dx=None)

    assert changed.numerics["periods"] == 3
    assert changed.numerics["dx"] == 0.02
    assert "numerics.periods" not in changed.defaulted
    assert "numerics.dx" in changed.defaulted

    with pytest.raises(ConfigError):
        config.with_overrides(dx=-0.1)
    with pytest.raises(ConfigError):
        config.with_overrides(colour=1)


def test_unknown_command():
    with pytest.raises(ConfigError):
        parse_config(MODEL).check_command("plot")


def test_load_config(tmp_path):
    assert load_config(_write(tmp_path, MODEL)) == parse_config(MODEL)


def test_eigen_command(tmp_path):
    files = run("eigen", parse_config(MODEL), tmp_path / "out")
    table = read_csv(tmp_path / "out" / "eigen.csv")

    assert [f.split("/")[-1] for f in map(str, files)] == ["eigen.csv", "eigenfunctions.csv"]
    assert table["lambda"].iloc[0] == pytest.approx(0.5)
    assert table["case_tag"].iloc[0] == "KEqualsB1"

    header = (tmp_path / "out" / "eigen.csv").read_text(encoding="utf-8").splitlines()
    assert header[0] == "# wnv-nonlocal eigen"
    assert header[1].startswith("# # defaulted:")
    assert "# [model]" in header


def test_eigen_generalized_pair(tmp_path):
    run("eigen", parse_config(MODEL.replace("delta = 0.5", "delta = 1.0").replace("k = 1.0", "k = 2.0")), tmp_path)
    table = read_csv(tmp_path / "eigen.csv")

    assert table["lambda"].isna().all()
    assert table["upper"].iloc[0] == 2.0
    assert table["lower"].iloc[0] == 1.0
    assert not (tmp_path / "eigenfunctions.csv").exists()


def test_lamP_command(tmp_path):
    config = parse_config(FAST + "\n[lamP]\nL_sequence = [1.0, 2.0]\n")
    run("lamP", config, tmp_path)
    table = read_csv(tmp_path / "lamP.csv")
    limit = read_csv(tmp_path / "lamP_limit.csv")

    assert -1 < table["lambda_star"].iloc[0] < 0
    assert table["lambda_P"].iloc[0] > table["lambda_O"].iloc[0]
    assert list(limit["L"]) == [1.0, 2.0]


def test_simulate_is_deterministic(tmp_path):
    config = parse_config(FAST + "snapshot_every = 1\n")
    first = run("simulate", config, tmp_path / "a")
    second = run("simulate", config, tmp_path / "b")

    names = sorted(p.split("/")[-1] for p in map(str, first))
    assert names == ["boundaries.csv", "field_1.0.csv", "field_2.0.csv", "lambdaF.csv", "norms.csv"]

    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_classify_command(tmp_path):
    run("classify", parse_config(MODEL + '\n[classify]\nmode = "static"\n'), tmp_path)

    with open(tmp_path / "classify.json", encoding="utf-8") as f:
        summary = json.load(f)

    assert summary["command"] == "classify"
    assert summary["verdict"] == "Vanishing"
    assert summary["rule"] == "lambda_O_nonnegative"
    assert summary["t_max"] is None
    assert any(line == "[model]" for line in summary["config"])


def test_sweep_command(tmp_path):
    text = FAST.replace("b2 = 1.0", "b2 = 0.25").replace("h0 = 1.0", "h0 = 3.0") + """
[sweep]
delta = [0.0, 0.5, 1.0]
b1 = [0.25, 0.5, 1.0]
dynamic = false
"""
    run("sweep", parse_config(text), tmp_path)
    phase = read_csv(tmp_path / "phase.csv")

    assert len(phase) == 9
    assert list(phase.columns) == ["delta", "b1", "mu", "h0", "verdict", "rule"]


def test_sweep_needs_an_axis(tmp_path):
    with pytest.raises(ConfigError):
        run("sweep", parse_config(MODEL), tmp_path)


def test_contour_command(tmp_path):
    run("contour", parse_config(MODEL + "\n[contour]\nn_delta = 5\ntie_k = true\n"), tmp_path)
    curve = read_csv(tmp_path / "contour.csv")
    exact = read_csv(tmp_path / "contour_closed_form.csv")

    assert len(curve) == len(exact) == 5
    assert curve["b1"].to_numpy() == pytest.approx(exact["b1"].to_numpy(), abs=1e-8)


def test_main_exit_codes(tmp_path):
    good = _write(tmp_path, MODEL)
    bad = _write(tmp_path, MODEL.replace("delta = 0.5", "delta = 1.5"), "bad.toml")
    mismatch = _write(tmp_path, MISMATCH, "mismatch.toml")
    out = str(tmp_path / "out")

    assert main(["eigen", str(good), "--out", out]) == 0
    assert main(["eigen", str(bad), "--out", out]) == 2
    assert main(["eigen", str(mismatch), "--out", out]) == 2
    assert main(["eigen", str(tmp_path / "missing.toml"), "--out", out]) == 2


def test_main_overrides_periods(tmp_path):
    path = _write(tmp_path, FAST)
    out = tmp_path / "out"

    assert main(["simulate", str(path), "--periods", "1", "--out", str(out)]) == 0

    boundaries = read_csv(out / "boundaries.csv")
    assert boundaries["t"].iloc[-1] == 1.0
    assert "periods = 1" in (out / "boundaries.csv").read_text(encoding="utf-8")


def test_main_rejects_unknown_command(tmp_path):
    with pytest.raises(SystemExit):
        main(["plot", str(_write(tmp_path, MODEL))])


def test_main_maps_grid_errors_to_parameter_exit_code(tmp_path):
    path = _write(tmp_path, FAST + "\n[lamP]\nL_sequence = [0.33]\n")

    assert main(["lamP", str(path), "--out", str(tmp_path / "out")]) == 3


def test_write_json_normalises_numpy_values(tmp_path):
    data = {"value": np.float64(0.1), "count": np.int64(3), "missing": float("nan"),
            "pair": (np.float64(1.5), -np.inf), "array": np.array([0.25, 0.5])}
    path = write_json(data, tmp_path / "out.json", parse_config(MODEL), "eigen")

    text = path.read_text(encoding="utf-8")
    summary = json.loads(text)

    assert "NaN" not in text and "Infinity" not in text
    assert summary["value"] == 0.1
    assert summary["count"] == 3
    assert summary["missing"] is None
    assert summary["pair"] == [1.5, None]
    assert summary["array"] == [0.25, 0.5]
    assert summary["command"] == "eigen"


def test_main_reports_errors_on_stderr(tmp_path, capsys):
    path = _write(tmp_path, FAST + "\n[lamP]\nL_sequence = [0.33]\n")

    main(["lamP", str(path), "--out", str(tmp_path / "out")])
    captured = capsys.readouterr()

    assert captured.err.startswith("ParameterError: ")


def test_verbose_run_prints_written_files(tmp_path, capsys):
    files = run("eigen", parse_config(MODEL), tmp_path, verbose=True)
    lines = capsys.readouterr().out.splitlines()

    assert lines[0] == f"running eigen, output in {tmp_path}"
    assert lines[1:] == [f"wrote {path}" for path in files]
