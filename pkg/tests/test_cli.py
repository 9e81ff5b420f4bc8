import csv
import json

import numpy as np
import pytest

from cebcs.cli import (EXIT_ERROR, EXIT_OK, SWEEP_COLUMNS, ConfigError, fit_scaling, main,
                       parse_config)

SMALL = """
[model]
omega = 4
lambda_cut = 3.0
g = {g}

[sweep]
T_min = 0.2
T_max = 1.0
dT = 0.2
T = 0.4
schemes = {schemes}

[tcrit]
T_lo = 0.1
T_hi = 3.0
resolution = 0.01
schemes = gce
"""


def write(tmp_path, g=1.0, schemes="gce, ce"):
    p = tmp_path / "run.ini"
    p.write_text(SMALL.format(g=g, schemes=schemes))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_defaults_and_lists():
    cfg = parse_config("[model]\nomega = 6\n[sweep]\nschemes = ce parity\n[solver]\ntol_grad = 1e-7\n")
    assert cfg.model.omega == 6 and cfg.model.n is None
    assert cfg.sweep.schemes == ("ce", "parity")
    assert cfg.solver.tol_grad == 1e-7
    assert len(cfg.T_grid()) == 40


@pytest.mark.parametrize("text", [
    "[model]\nomgea = 4\n",
    "[plots]\nx = 1\n",
    "[model]\nomega = four\n",
    "[model]\nomega = 4\nn = 3\n",
    "[sweep]\nschemes = ce, hfb\n",
    "[solver]\nmixing = 2.0\n",
    "[tcrit]\nT_lo = 2.0\nT_hi = 1.0\n",
    "[solver]\nverify_fd = maybe\n",
])
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_scaling_fit_round_trip():
    n = np.array([10, 16, 26, 40, 56])
    fit = fit_scaling(n, 0.57 + 5.0 * n ** -0.7, 0.57)
    assert fit.a == pytest.approx(5.0, abs=1e-6) and fit.b == pytest.approx(0.7, abs=1e-6)
    assert np.max(np.abs(fit.residuals)) < 1e-9 and not fit.degenerate


def test_scaling_fit_flags_degenerate_data():
    n = np.array([10, 16, 26, 40])
    assert fit_scaling(n, np.full(4, 0.5), 0.57).degenerate
    assert fit_scaling(n[:2], 0.57 + n[:2] ** -0.5, 0.57).degenerate


def test_sweep_outputs_are_deterministic(tmp_path, capsys):
    cfg = write(tmp_path)
    assert main(["sweep", "--config", cfg, "--out-dir", str(tmp_path / "a")]) == EXIT_OK
    assert main(["sweep", "--config", cfg, "--out-dir", str(tmp_path / "b"), "--threads", "2"]) == EXIT_OK
    for name in ("sweep_gce.csv", "sweep_ce.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes()
    rows = read_csv(tmp_path / "a" / "sweep_ce.csv")
    assert list(rows[0]) == SWEEP_COLUMNS
    assert [float(r["T"]) for r in rows] == [0.2, 0.4, 0.6, 0.8, 1.0]
    meta = json.loads((tmp_path / "a" / "sweep.json").read_text())
    assert meta["summary"]["schemes"]["ce"]["unconverged"] == 0
    assert len(meta["config_sha256"]) == 64 and "numpy" in meta["versions"]


def test_zero_coupling_has_no_pairing(tmp_path):
    cfg = write(tmp_path, g=0.0, schemes="ce")
    assert main(["sweep", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_OK
    assert all(float(r["delta_av"]) == 0.0 for r in read_csv(tmp_path / "sweep_ce.csv"))


def test_tcrit_without_transition_is_an_error(tmp_path, capsys):
    cfg = write(tmp_path, g=0.0)
    assert main(["tcrit", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "no transition" in capsys.readouterr().err


def test_tcrit_and_solve(tmp_path):
    cfg = write(tmp_path, g=1.5)
    assert main(["tcrit", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_OK
    row = read_csv(tmp_path / "tcrit.csv")[0]
    assert float(row["T_lo"]) < float(row["T_cr"]) < float(row["T_hi"])
    assert main(["solve", "--config", cfg, "--out-dir", str(tmp_path), "--scheme", "ce",
                 "--scheme", "gce"]) == EXIT_OK
    assert [r["scheme"] for r in read_csv(tmp_path / "solve.csv")] == ["ce", "gce"]


def test_compare_and_oracle(tmp_path):
    cfg = write(tmp_path, g=1.5)
    assert main(["compare", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_OK
    peierls = read_csv(tmp_path / "peierls.csv")
    assert all(float(r["peierls"]) >= -1e-8 for r in peierls)
    table = read_csv(tmp_path / "compare.csv")
    assert {r["quantity"] for r in table} == {"bb", "E", "S", "C"}
    assert main(["oracle", "--config", cfg, "--out-dir", str(tmp_path)]) == EXIT_OK
    assert len(read_csv(tmp_path / "oracle.csv")) == 5


def test_oracle_size_rejection(tmp_path, capsys):
    p = tmp_path / "big.ini"
    p.write_text("[model]\nomega = 30\ng = 0.3\n")
    assert main(["compare", "--config", str(p), "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "exceeds" in capsys.readouterr().err


def test_missing_config_is_an_error(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.ini")]) == EXIT_ERROR
