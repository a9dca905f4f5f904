import json
import math

import numpy as np
import pytest

from ssrefine import cli, harness
from ssrefine.harness import CSV_COLUMNS, ConfigError, ExperimentConfig, SweepRow

SMALL = dict(trial_count=3, grid_start_deg=-60.0, grid_stop_deg=80.0, grid_step_deg=0.5)


def test_default_config_matches_published_setup():
    c = ExperimentConfig()
    assert (c.element_count, c.spacing_over_wavelength) == (8, 0.5)
    assert c.true_doas_deg == (15.0, 30.0, 45.0)
    assert (c.snapshot_count, c.trial_count, c.grid_step_deg) == (50, 200, 0.1)
    assert (c.mu_start, c.mu_stop, c.mu_step) == (0.0, 5.0, 0.1)


@pytest.mark.parametrize("bad", [
    dict(true_doas_deg=tuple(range(-40, 40, 10))),
    dict(trial_count=0),
    dict(methods="esprit"),
    dict(grid_step_deg=0.0),
    dict(delta_deg=-1.0),
    dict(mu_step=0.0),
])
def test_config_rejected(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_run_trial_deterministic():
    c = ExperimentConfig(**SMALL)
    a, b = harness.run_trial(c, 2), harness.run_trial(c, 2)
    assert json.dumps(harness.trial_dump(a)) == json.dumps(harness.trial_dump(b))
    assert a.refinement is not None and not a.fell_back


def test_noiseless_trial():
    c = ExperimentConfig(noiseless=True, snapshot_count=200)
    o = harness.run_trial(c, 0)
    np.testing.assert_allclose(o.music.estimate_deg, c.true_doas_deg, atol=0.1)
    # equal (zero) noise eigenvalues make the similarity matrix singular
    assert o.fell_back and "rank deficient" in o.fallback_reason
    np.testing.assert_allclose(o.refined.estimate_deg, c.true_doas_deg, atol=0.1)


def test_plain_music_only():
    c = ExperimentConfig(methods="plain-music", **SMALL)
    o = harness.run_trial(c, 0)
    assert o.refined is None
    rows = harness.snr_sweep(c)
    assert math.isnan(rows[0].refined_rmse) and not math.isnan(rows[0].music_rmse)
    with pytest.raises(ConfigError):
        harness.mu_sweep(c)


def test_mu_sweep_rows():
    c = ExperimentConfig(**SMALL)
    rows = harness.mu_sweep(c)
    assert len(rows) == 51
    assert rows[0].independent_var == 0.0 and rows[0].skipped_mu_count == c.trial_count
    assert math.isnan(rows[0].mean_recon_error)
    # a skipped mu reports the plain MUSIC estimate
    assert rows[0].refined_rmse == rows[0].music_rmse
    for r in rows[1:]:
        assert r.skipped_mu_count + (c.trial_count - r.skipped_mu_count) == c.trial_count
        assert r.mean_recon_error >= 0 and r.refined_rmse >= 0


def test_single_trial_mu_sweep_deterministic():
    c = ExperimentConfig(**{**SMALL, "trial_count": 1})
    assert harness.mu_sweep(c) == harness.mu_sweep(c)


def test_snr_sweep_row_count():
    c = ExperimentConfig(**{**SMALL, "trial_count": 1, "snr_db": tuple(range(-25, -14))})
    rows = harness.snr_sweep(c)
    assert [r.independent_var for r in rows] == list(range(-25, -14))


def test_snr_sweep_reproducible():
    c = ExperimentConfig(**{**SMALL, "snr_db": (-20.0, -15.0)})
    assert harness.snr_sweep(c) == harness.snr_sweep(c)


def test_easy_snr_music():
    c = ExperimentConfig(snr_db=20.0, trial_count=20)
    row = harness.snr_sweep(c)[0]
    assert row.music_rmse < 0.2


def test_easy_snr_refined():
    c = ExperimentConfig(snr_db=20.0, trial_count=20)
    row = harness.snr_sweep(c)[0]
    assert row.refined_rmse < 0.2


def test_trial_independence():
    c = ExperimentConfig(**{**SMALL, "trial_count": 4})
    outcomes = harness.run_trials(c, -18.0)
    full = harness.snr_sweep_records(c, outcomes)
    without = [r for r in full if r.trial_index != 2]
    again = harness.snr_sweep_records(c, [o for o in outcomes if o.trial_index != 2])
    assert harness.aggregate(without, c.metric_config) == harness.aggregate(again, c.metric_config)
    np.testing.assert_array_equal(harness.run_trial(c, 1, -18.0).music.estimate_deg,
                                  outcomes[1].music.estimate_deg)


def _row(x=1.0):
    return SweepRow(x, 1 / 3, 2.0, math.pi, 0.5, 0.25, 0.1, 0.2, 0.75, 2, 1)


def test_csv_round_trip(tmp_path):
    rows = [_row(0.0), _row(0.1), _row(-25.0)]
    p = tmp_path / "rows.csv"
    harness.emit_csv(rows, p)
    lines = p.read_text().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert all(len(line.split(",")) == len(CSV_COLUMNS) for line in lines)
    back = harness.read_csv(p)
    for a, b in zip(rows, back):
        np.testing.assert_allclose(a.values(), b.values(), rtol=1e-12)


def test_csv_nan_round_trip(tmp_path):
    row = SweepRow(0.0, 1.0, 1.0, math.nan, 0, 0, 0, 0, 0, 0, 3)
    harness.emit_csv([row], tmp_path / "r.csv")
    assert math.isnan(harness.read_csv(tmp_path / "r.csv")[0].mean_recon_error)


def test_empty_rows_rejected(tmp_path):
    with pytest.raises(ValueError):
        harness.emit_csv([], tmp_path / "x.csv")
    with pytest.raises(ValueError):
        harness.emit_plot([], tmp_path / "x.svg")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        harness.emit_csv([_row()], tmp_path / "missing" / "x.csv")


def test_plot_written(tmp_path):
    harness.emit_plot([_row(0.1), _row(0.2)], tmp_path / "mu.svg", "mu")
    harness.emit_plot([_row(-20), _row(-15)], tmp_path / "snr.svg", "SNR (dB)")
    assert (tmp_path / "mu.svg").read_text().lstrip().startswith("<?xml")


# CLI

def test_cli_mu_sweep_and_metrics(tmp_path):
    out, rec, again = tmp_path / "mu.csv", tmp_path / "rec.csv", tmp_path / "again.csv"
    args = ["mu-sweep", "--trials", "2", "--grid-step", "0.5", "--grid-start", "-60", "--grid-stop", "80",
            "--mu-stop", "1", "--out", str(out), "--records", str(rec), "--plot", str(tmp_path / "mu.svg")]
    assert cli.main(args) == 0
    assert len(harness.read_csv(out)) == 11
    assert cli.main(["metrics", str(rec), "--out", str(again)]) == 0
    assert again.read_bytes() == out.read_bytes()


def test_cli_snr_range_and_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("# desk-scale run\ntrials = 2\ngrid_step = 0.5\nsnr = -25:-15:5\nseed = 9\n")
    out = tmp_path / "snr.csv"
    assert cli.main(["snr-sweep", "--config", str(cfg), "--trials", "1", "--out", str(out)]) == 0
    rows = harness.read_csv(out)
    assert [r.independent_var for r in rows] == [-25.0, -20.0, -15.0]


def test_cli_flag_overrides_json_config(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"trials": 5, "snapshots": 20, "doas": [10, 40]}))
    args = cli.build_parser().parse_args(["trial", "--config", str(cfg), "--snapshots", "30", "--out", "x"])
    c = cli.config_from_args(args)
    assert (c.trial_count, c.snapshot_count, c.true_doas_deg) == (5, 30, (10.0, 40.0))


def test_cli_trial_dump(tmp_path):
    out = tmp_path / "t.json"
    assert cli.main(["trial", "--trial-index", "3", "--grid-step", "0.5", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert len(d["trace"]) == 51 and d["trace"][0]["cost"] is None
    assert d["best_mu"] in [t["mu"] for t in d["trace"]]


def test_cli_exit_codes(tmp_path):
    assert cli.main(["mu-sweep", "--trials", "0", "--out", str(tmp_path / "x")]) == 1
    assert cli.main(["mu-sweep", "--snr=-20,-18", "--out", str(tmp_path / "x")]) == 1
    assert cli.main(["bogus"]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert cli.main(["trial", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert cli.main(["trial", "--trials", "1", "--out", str(tmp_path / "no" / "x.json")]) == 2
    assert cli.main(["metrics", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "y")]) == 2


def test_parse_float_list():
    assert cli.parse_float_list("-25:-15:5") == (-25.0, -20.0, -15.0)
    assert cli.parse_float_list("-18") == (-18.0,)
    assert cli.parse_float_list("1, 2,3") == (1.0, 2.0, 3.0)
    with pytest.raises(ConfigError):
        cli.parse_float_list("1:0:1")
