import csv
import json
from pathlib import Path

import pytest
import yaml

from segmented_edram.cli import EXIT_INVALID, EXIT_OK, TRACE_COLUMNS, main


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path / "out")]
    if config is not None:
        cfg = tmp_path / "config.yaml"
        cfg.write_text(yaml.safe_dump(config))
        argv += ["--config", str(cfg)]
    return main(argv)


def read_csv(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    return list(csv.DictReader(lines[1:]))


def read_json(path: Path):
    return json.loads(path.read_text())


def test_calibrate_default(tmp_path, capsys):
    assert run(tmp_path, "calibrate") == EXIT_OK
    report = read_json(tmp_path / "out" / "calibration.json")
    assert all(a["rel_residual"] < 1e-6 for a in report["anchors"])
    assert report["ber_at_t_std"] < 1e-9
    assert report["refresh_energy"]["gain_residual"] < 1e-9
    assert "T_kelle" in capsys.readouterr().out


def test_calibrate_echoes_refresh_energy_for_target(tmp_path):
    cfg = {"calibration": {"target_gain": 1.35, "kv_ratio": 0.46}}
    assert run(tmp_path, "calibrate", config=cfg) == EXIT_OK
    e = read_json(tmp_path / "out" / "calibration.json")["refresh_energy"]["e_ref_cycle_j"]
    assert e == pytest.approx(64.9e-9, rel=2e-3)


def test_calibrate_equal_anchors_fail(tmp_path):
    cfg = {"retention": {"anchors": [[1216, 1e-4], [1216, 4e-4]]}}
    assert run(tmp_path, "calibrate", config=cfg) == EXIT_INVALID
    assert not (tmp_path / "out").exists()


def test_calibrate_infeasible_gain(tmp_path):
    assert run(tmp_path, "calibrate", config={"calibration": {"target_gain": 2.0}}) == EXIT_INVALID


def test_unknown_config_key(tmp_path):
    assert run(tmp_path, "calibrate", config={"refresh": {"t_std": 45}}) == EXIT_INVALID


def test_simulate_default(tmp_path):
    assert run(tmp_path, "simulate") == EXIT_OK
    out = tmp_path / "out"
    rows = read_csv(out / "trace_qwen3-8b_storytelling.csv")
    assert list(rows[0]) == TRACE_COLUMNS
    b_kv = [int(r["b_kv"]) for r in rows]
    assert b_kv[-1] == max(b_kv)
    summary = read_json(out / "summary_qwen3-8b_storytelling.json")
    agg = summary["aggregate"]
    for key in ("eta_refresh_only", "eta_leakage_inclusive", "eta_lifecycle_weighted"):
        assert key in agg
    assert summary["config_sha256"]


def test_simulate_all_scenarios(tmp_path):
    assert run(tmp_path, "simulate", "--scenario", "all") == EXIT_OK
    out = tmp_path / "out"
    for s in ("summary", "translation", "storytelling"):
        assert (out / f"trace_qwen3-8b_{s}.csv").exists()
    table = read_csv(out / "gain_table.csv")
    assert [r["scenario"] for r in table] == ["summary", "translation", "storytelling"]


def test_simulate_all_models(tmp_path):
    assert run(tmp_path, "simulate", "--model", "all", "--scenario", "summary") == EXIT_OK
    assert len(list((tmp_path / "out").glob("trace_*.csv"))) == 5


@pytest.mark.parametrize("flag, value", [("--model", "gpt-5"), ("--scenario", "poetry")])
def test_simulate_unknown_names_rejected_before_output(tmp_path, flag, value):
    assert run(tmp_path, "simulate", flag, value) == EXIT_INVALID
    assert not (tmp_path / "out").exists()


def test_lifecycle_gap_narrows(tmp_path):
    assert run(tmp_path, "simulate", "--scenario", "lifecycle") == EXIT_OK
    rows = read_csv(tmp_path / "out" / "trace_qwen3-8b_lifecycle.csv")
    gap = [float(r["eta_total"]) - (1 - float(r["p_kelle"]) / float(r["p_base"])) for r in rows]
    assert all(a >= b for a, b in zip(gap, gap[1:]))


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--scenario", "all", "--out", str(d)]) == EXIT_OK
        assert main(["inject-demo", "--seed", "5", "--out", str(d)]) == EXIT_OK
        assert main(["sweep", "--param", "t_rel", "--start", "45", "--stop", "3000", "--out", str(d)]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_config_hash_changes_with_config(tmp_path):
    assert run(tmp_path, "simulate") == EXIT_OK
    h1 = read_json(tmp_path / "out" / "summary_qwen3-8b_storytelling.json")["config_sha256"]
    assert run(tmp_path, "simulate", config={"refresh": {"t_rel_us": 1000.0}}) == EXIT_OK
    h2 = read_json(tmp_path / "out" / "summary_qwen3-8b_storytelling.json")["config_sha256"]
    assert h1 != h2


def test_sweep_kv_ratio_endpoints(tmp_path):
    assert run(tmp_path, "sweep", "--param", "kv_ratio", "--start", "0", "--stop", "1", "--num", "5") == EXIT_OK
    rows = read_csv(tmp_path / "out" / "sweep_kv_ratio.csv")
    assert float(rows[0]["eta_closed_form"]) == 0.4375
    assert float(rows[-1]["eta_closed_form"]) == pytest.approx(0.421310, abs=1e-6)


def test_sweep_t_rel_at_t_std_gives_zero(tmp_path):
    args = ("sweep", "--param", "t_rel", "--start", "45", "--stop", "45", "--num", "1", "--kv-ratio", "1")
    assert run(tmp_path, *args) == EXIT_OK
    rows = read_csv(tmp_path / "out" / "sweep_t_rel.csv")
    assert float(rows[0]["eta_closed_form"]) == 0.0


def test_sweep_ber_target_recovers_anchors(tmp_path):
    args = ("sweep", "--param", "ber_target", "--start", "1e-4", "--stop", "4e-4", "--num", "2", "--log")
    assert run(tmp_path, *args) == EXIT_OK
    rows = read_csv(tmp_path / "out" / "sweep_ber_target.csv")
    assert float(rows[0]["t_rel_us"]) == pytest.approx(1216, abs=1)
    assert float(rows[1]["t_rel_us"]) == pytest.approx(1500, abs=2)


@pytest.mark.parametrize(
    "start, stop, num", [("1", "0", "3"), ("0.5", "0.5", "3"), ("0", "1", "0")]
)
def test_sweep_rejects_bad_ranges(tmp_path, start, stop, num):
    assert run(tmp_path, "sweep", "--param", "kv_ratio", "--start", start, "--stop", stop, "--num", num) == EXIT_INVALID


def test_inject_demo_zero_rate(tmp_path):
    cfg = {"fault": {"rho_kv": 0.0, "rho_qo": 0.0}}
    assert run(tmp_path, "inject-demo", config=cfg) == EXIT_OK
    stats = read_json(tmp_path / "out" / "inject_demo.json")["stats"]
    assert all(v == 0 for v in stats["corrupted_fraction"].values())
    assert stats["output_changed_fraction"] == 0


def test_inject_demo_rates_within_binomial_band(tmp_path):
    cfg = {"fault": {"rho_kv": 1e-4, "rho_qo": 0.25}, "demo": {"tokens": 256, "d_model": 128, "num_heads": 4}}
    assert run(tmp_path, "inject-demo", config=cfg) == EXIT_OK
    report = read_json(tmp_path / "out" / "inject_demo.json")
    for name in ("Q", "K", "V", "O"):
        check = report["binomial_checks"][name]
        assert check["within_band"], name
    assert report["binomial_checks"]["Q"]["expected_fraction"] == 0.25 * (1 - 2**-7)
    assert report["bits_outside_mask_untouched"]


def test_shipped_default_config_matches_builtin_defaults():
    from segmented_edram.config import SimConfig

    shipped = Path(__file__).resolve().parents[1] / "configs" / "default.yaml"
    assert SimConfig.load(shipped).hash == SimConfig.load().hash


def test_table_scenarios_must_exist(tmp_path):
    assert run(tmp_path, "simulate", config={"table_scenarios": ["nope"]}) == EXIT_INVALID
