import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optoscatter.cli import ConfigError, csv_text, fmt, main, parse_config, run_command
from optoscatter.core import Fock, Thermal
from optoscatter.franck_condon import fc_table

BASE = {"g0": 0.3, "gamma_c": 0.1, "epsilon": 0.01, "delta1": "-nu", "delta2": "-nu"}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0], lines[1], [ln.split(",") for ln in lines[2:]]


def test_nu_token_resolves():
    cfg = parse_config(json.dumps(BASE))
    assert cfg.delta1 == cfg.delta2 == pytest.approx(-0.09, abs=1e-15)
    assert cfg.mirror == Fock(0)
    assert cfg.truncation.n_ph == 6


def test_auto_truncation_uses_the_tail_rule():
    cfg = parse_config(json.dumps({**BASE, "g0": 0.6, "truncation": {"n_ph": "auto"}}))
    assert cfg.truncation.n_ph == 12


@pytest.mark.parametrize("doc,field", [
    ({**BASE, "epsilon": -0.01}, "epsilon"),
    ({**BASE, "temperature": 1}, "temperature"),
    ({**BASE, "grid": {"lo": 0, "hi": 1, "step": 0.1}}, "grid.step"),
    ({**BASE, "gamma_c": "fast"}, "gamma_c"),
    ({**BASE, "truncation": {"n_ph": 2.5}}, "truncation.n_ph"),
    ({**BASE, "g0": "scan", "delta1": 0.1}, "delta1"),
])
def test_bad_configs_name_the_field(doc, field):
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(doc))
    assert field in str(err.value)


def test_invalid_json():
    with pytest.raises(ConfigError):
        parse_config("{g0: 0.3")


def test_thermal_mirror():
    cfg = parse_config(json.dumps({**BASE, "mirror": {"kind": "thermal", "nbar": 0.2}}))
    assert cfg.mirror == Thermal(0.2)
    w = cfg.mirror.amplitudes(cfg.truncation.n_ph, 1e-3)
    np.testing.assert_allclose(w, (1 / 1.2) * (0.2 / 1.2) ** np.arange(w.size))


@settings(max_examples=30, deadline=None)
@given(g0=st.floats(0.0, 1.4), gamma=st.floats(1e-3, 1.0), eps=st.floats(1e-3, 0.2),
       d1=st.one_of(st.just("-nu"), st.floats(-2, 2)), n_ph=st.integers(0, 12),
       num=st.integers(2, 50))
def test_config_round_trip(g0, gamma, eps, d1, n_ph, num):
    doc = {"g0": g0, "gamma_c": gamma, "epsilon": eps, "delta1": d1, "delta2": -0.5,
           "truncation": {"n_ph": n_ph}, "times": {"start": 0, "stop": 10, "num": num}}
    cfg = parse_config(json.dumps(doc))
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


def test_fmt():
    assert fmt(0.1) == "1.0000000000000001e-01"
    assert fmt(float("nan")) == "nan"
    assert float(fmt(math.pi)) == math.pi


def test_csv_text_header():
    text = csv_text("fc", '{"a":1}', ("x", "y"), [(1.0, float("nan"))])
    assert text.splitlines() == ['# optoscatter fc config={"a":1}', "x,y",
                                 "1.0000000000000000e+00,nan"]


def test_fc_command_without_config(tmp_path, capsys):
    out = str(tmp_path / "fc.csv")
    assert main(["fc", "--beta", "0.6", "--dim", "4", "--out", out]) == 0
    header, cols, rows = read_csv(out)
    assert header.startswith("# optoscatter fc config=")
    assert json.loads(header.split("config=", 1)[1])["fc"] == {"beta": 0.6, "dim": 4, "order": "exact"}
    assert cols == "m,n0,n1,n2,n3"
    table = fc_table(0.6, 4).values
    for m, row in enumerate(rows):
        assert row[0] == str(m)
        np.testing.assert_array_equal([float(x) for x in row[1:]], table[m])


def test_transient_echoes_the_resolved_config(tmp_path):
    doc = {**BASE, "truncation": {"n_ph": 3}, "times": {"start": 0, "stop": 40, "num": 3}}
    out = str(tmp_path / "tr.csv")
    assert main(["transient", "--config", write(tmp_path, doc), "--out", out]) == 0
    header, cols, rows = read_csv(out)
    echo = json.loads(header.split("config=", 1)[1])
    assert echo["delta1"] == pytest.approx(-0.09, abs=1e-15)
    assert echo["truncation"]["quad_tol"] == 1e-6
    assert cols == "t,p1,p2,g2"
    assert rows[0][3] == "nan"
    assert len(rows) == 3 and all(len(r) == 4 for r in rows)


def test_worker_count_does_not_change_output(tmp_path):
    doc = {**BASE, "g0": 0.5, "delta1": -0.25, "delta2": -0.25, "truncation": {"n_ph": 4},
           "grid": {"lo": -0.6, "hi": 0.2, "n": 17}}
    cfg = write(tmp_path, doc)
    outs = []
    for w in (1, 2):
        path = str(tmp_path / f"js{w}.csv")
        assert main(["joint-spectrum", "--config", cfg, "--out", path, "--workers", str(w)]) == 0
        outs.append(open(path, "rb").read())
    assert outs[0] == outs[1]


def test_report_goes_to_stderr_when_csv_uses_stdout(tmp_path, capsys):
    doc = {**BASE, "g0": 0.5, "delta1": -0.25, "delta2": -0.25, "truncation": {"n_ph": 3},
           "grid": {"lo": -0.6, "hi": 0.2, "n": 9}}
    assert main(["joint-spectrum", "--config", write(tmp_path, doc)]) == 0
    cap = capsys.readouterr()
    assert cap.out.startswith("# optoscatter joint-spectrum")
    assert "pearson_corr=" in cap.err and "pearson_corr=" not in cap.out


def test_exit_code_for_invalid_input(tmp_path, capsys):
    assert main(["transient", "--config", write(tmp_path, {**BASE, "epsilon": -1})]) == 2
    err = capsys.readouterr().err
    assert "ConfigError" in err and "epsilon" in err
    assert main(["transient"]) == 2
    assert main(["transient", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["g2scan", "--config", write(tmp_path, BASE)]) == 2
    assert main(["fc", "--workers", "0"]) == 2


def test_exit_code_for_truncation_shortfall(tmp_path, capsys):
    doc = {**BASE, "mirror": {"kind": "thermal", "nbar": 1.0}, "truncation": {"n_ph": 4}}
    assert main(["transient", "--config", write(tmp_path, doc)]) == 3
    assert "TruncationError" in capsys.readouterr().err


def test_validate_fails_with_exit_three_on_a_coarse_oracle(tmp_path, capsys):
    doc = {**BASE, "epsilon": 0.05, "truncation": {"n_ph": 2},
           "oracle": {"n_ph": 2, "n_k": 61, "w": 1.5, "t_end": 10, "num_times": 3,
                      "factors": [0.5, 1], "threshold": 1e-12}}
    out = str(tmp_path / "v.csv")
    assert main(["validate", "--config", write(tmp_path, doc), "--out", out]) == 3
    report = capsys.readouterr().out
    assert "result=FAIL" in report and "certified=no" in report
    _, cols, rows = read_csv(out)
    assert cols == "t,p1,p2" and len(rows) == 3


def test_run_command_requires_config_for_physics():
    with pytest.raises(ConfigError):
        run_command("transient", None)
