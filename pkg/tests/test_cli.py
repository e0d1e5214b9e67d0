"""CLI behaviour: commands, config handling, determinism, exit codes."""

import json

import numpy as np
import pytest

import brightcv.cli as cli
from brightcv.channel import eta_from_db
from brightcv.detector import DetectorConfig
from brightcv.gaussian import NumericalDomainError
from brightcv.protocols import SourceParams
from brightcv.qkd import key_rate
from brightcv.channel import ChannelParams


def run(argv, capsys):
    rc = cli.main(argv)
    out = capsys.readouterr().out
    return rc, out


def parse_csv(text):
    meta, columns, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key.strip()] = value.strip()
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, columns, rows


def test_threshold_squeezing(capsys):
    rc, out = run(["threshold", "squeezing", "--v-s", "0.1", "--eps-tot", "0.01"], capsys)
    assert rc == 0
    _, columns, rows = parse_csv(out)
    row = dict(zip(columns, rows[0]))
    assert float(row["n_bar_threshold"]) == 9000.0
    assert float(row["variance_at_threshold"]) == pytest.approx(1.0, abs=1e-12)


def test_threshold_entanglement(capsys):
    rc, out = run(["threshold", "entanglement", "--eps-tot", "0.01"], capsys)
    assert rc == 0
    _, columns, rows = parse_csv(out)
    row = dict(zip(columns, rows[0]))
    closed, bisect = float(row["closed_form"]), float(row["bisection"])
    assert closed == pytest.approx(9999.750006249844, rel=1e-9)
    assert bisect == pytest.approx(closed, rel=1e-4)


def test_threshold_attenuation_self_consistent(capsys):
    rc, out = run(
        ["threshold", "attenuation", "--n-bar", "10", "--eps-tot", "0.01",
         "--chi", "0.05", "--beta", "0.97", "--max-db", "150"],
        capsys,
    )
    assert rc == 0
    _, columns, rows = parse_csv(out)
    row = dict(zip(columns, rows[0]))
    assert row["status"] == "crossing"
    db = float(row["attenuation_db"])
    assert 0.0 < db < 150.0
    det = DetectorConfig.from_eps_tot(0.01, m=500, n=500)
    src = SourceParams(n_bar=10.0, m=500, n=500)
    k = key_rate(src, ChannelParams(eta=eta_from_db(db), chi=0.05), det, 0.97).key_rate
    assert abs(k) < 1e-6


def test_threshold_never_secure_reports_cleanly(capsys):
    rc, out = run(
        ["threshold", "attenuation", "--n-bar", "100", "--m", "10", "--n", "10",
         "--eps-tot", "0.5", "--chi", "0"],
        capsys,
    )
    assert rc == 0
    _, columns, rows = parse_csv(out)
    assert dict(zip(columns, rows[0]))["status"] == "never_secure"


def test_sweep_key_rate_beta_dominance(capsys):
    base = ["sweep-key-rate", "--n-bar", "10", "--eps-tot", "0.01", "--chi", "0.05",
            "--start", "0", "--stop", "30", "--points", "7"]
    rc1, out1 = run(base + ["--beta", "1.0"], capsys)
    rc2, out2 = run(base + ["--beta", "0.97"], capsys)
    assert rc1 == rc2 == 0
    k1 = [float(r[-1]) for r in parse_csv(out1)[2]]
    k2 = [float(r[-1]) for r in parse_csv(out2)[2]]
    assert all(a > b for a, b in zip(k1, k2))


def test_sweep_key_rate_ideal_positive_to_60db(capsys):
    rc, out = run(
        ["sweep-key-rate", "--n-bar", "10", "--epsilon", "0", "--chi", "0",
         "--beta", "1.0", "--start", "0", "--stop", "60", "--points", "13"],
        capsys,
    )
    assert rc == 0
    ks = [float(r[-1]) for r in parse_csv(out)[2]]
    assert all(k > 0.0 for k in ks)


def test_sweep_entanglement_eta_nesting(capsys):
    curves = []
    for eta in ("0.1", "0.5", "0.9"):
        rc, out = run(
            ["sweep-entanglement", "--eps-tot", "0.01", "--eta", eta,
             "--start", "10", "--stop", "1e6", "--points", "9", "--spacing", "log"],
            capsys,
        )
        assert rc == 0
        curves.append([float(r[1]) for r in parse_csv(out)[2]])
    low, mid, high = curves
    assert all(a <= b for a, b in zip(low, mid))
    assert all(a <= b for a, b in zip(mid, high))
    assert sum(mid) > sum(low)


def test_sweep_entanglement_eps_tot_ordering_and_vacuum_limit(capsys):
    curves = []
    for eps_tot in ("0.01", "0.1"):
        rc, out = run(
            ["sweep-entanglement", "--eps-tot", eps_tot, "--eta", "0.5",
             "--start", "0.01", "--stop", "1e6", "--points", "9", "--spacing", "log"],
            capsys,
        )
        assert rc == 0
        curves.append([float(r[1]) for r in parse_csv(out)[2]])
    quiet, noisy = curves
    assert all(a >= b for a, b in zip(quiet, noisy))
    assert quiet[0] < 1e-2  # E_N -> 0 as n_tot -> 0


def test_byte_identical_rerun_and_replay(tmp_path, capsys):
    argv = ["sweep-key-rate", "--n-bar", "100", "--eps-tot", "0.01", "--chi", "0.05",
            "--start", "0", "--stop", "20", "--points", "5"]
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    out_c = tmp_path / "c.csv"
    assert cli.main(argv + ["--out", str(out_a)]) == 0
    assert cli.main(argv + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    assert cli.main(["replay", str(out_a), "--out", str(out_c)]) == 0
    assert out_a.read_bytes() == out_c.read_bytes()


def test_json_format_and_replay(tmp_path):
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    argv = ["threshold", "entanglement", "--eps-tot", "0.05", "--format", "json",
            "--out", str(out_a)]
    assert cli.main(argv) == 0
    payload = json.loads(out_a.read_text())
    assert payload["metadata"]["command"] == "threshold-entanglement"
    assert payload["columns"][0] == "kind"
    assert cli.main(["replay", str(out_a), "--format", "json", "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# sweep configuration\n"
        "n_bar = 100\n"
        "eps_tot = 0.01\n"
        "chi = 0.05\n"
        "sweep = attenuation_db\n"
        "start = 0\n"
        "stop = 10\n"
        "points = 3\n"
    )
    rc, out = run(["sweep-key-rate", "--config", str(cfg)], capsys)
    assert rc == 0
    meta, _, rows = parse_csv(out)
    assert meta["chi"] == "0.05"
    assert len(rows) == 3

    rc, out = run(["sweep-key-rate", "--config", str(cfg), "--chi", "0.2"], capsys)
    assert rc == 0
    meta, _, _ = parse_csv(out)
    assert meta["chi"] == "0.2"


def test_usage_errors_exit_1(tmp_path, capsys):
    assert cli.main(["sweep-key-rate", "--points", "1", "--start", "0", "--stop", "5"]) == 1
    assert cli.main(["oracle-validate", "--samples", "100000"]) == 1  # missing seed
    assert cli.main(["sweep-key-rate", "--eta", "2.0"]) == 1
    assert cli.main(["sweep-key-rate", "--eta", "0.5", "--attenuation-db", "10"]) == 1
    assert cli.main(["no-such-command"]) == 1
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("unknown_key = 3\n")
    assert cli.main(["sweep-key-rate", "--config", str(bad_cfg)]) == 1
    capsys.readouterr()


def test_numerical_errors_exit_2(monkeypatch, capsys):
    def boom(task):
        raise NumericalDomainError("synthetic failure")

    monkeypatch.setattr(cli, "_eval_key_rate_point", boom)
    rc = cli.main(["sweep-key-rate", "--start", "0", "--stop", "5", "--points", "2"])
    assert rc == 2
    capsys.readouterr()


def test_oracle_validate_passes_and_is_deterministic(tmp_path):
    argv = ["oracle-validate", "--seed", "11", "--samples", "100000",
            "--n-bar-values", "0,1", "--epsilon-values", "0,0.5",
            "--m-values", "1", "--n-values", "1", "--alpha", "5"]
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert cli.main(argv + ["--out", str(out_a)]) == 0
    assert cli.main(argv + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()

    _, columns, rows = parse_csv(out_a.read_text())
    i_eps = columns.index("epsilon")
    i_z = columns.index("z")
    i_status = columns.index("status")
    for row in rows:
        assert abs(float(row[i_z])) <= 3.0
        if float(row[i_eps]) == 0.0 and row[i_status] != "warn-samples":
            assert row[i_status] == "pass"


def test_oracle_validate_negative_control(monkeypatch, capsys):
    def corrupted(det, matched, unmatched):
        return cli.unbalanced_variance(
            cli.ModeStatistics(
                matched.var_x + 1.0, unmatched.mean_photons, unmatched.photon_number_variance
            ),
            det,
        )

    monkeypatch.setattr(cli, "_analytic_normalized_variance", corrupted)
    rc, out = run(
        ["oracle-validate", "--seed", "11", "--samples", "100000",
         "--n-bar-values", "1", "--epsilon-values", "0.5",
         "--m-values", "1", "--n-values", "1", "--alpha", "5"],
        capsys,
    )
    assert rc == 3
    _, columns, rows = parse_csv(out)
    i_z = columns.index("z")
    assert any(abs(float(row[i_z])) > 10.0 for row in rows)


def test_sweep_jobs_match_serial(capsys):
    argv = ["sweep-key-rate", "--n-bar", "10", "--eps-tot", "0.01", "--chi", "0.05",
            "--start", "0", "--stop", "20", "--points", "5"]
    rc1, out1 = run(argv, capsys)
    rc2, out2 = run(argv + ["--jobs", "2"], capsys)
    assert rc1 == rc2 == 0
    assert out1 == out2
