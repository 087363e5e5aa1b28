"""Bench engine: schemas, determinism, manifests, reference comparison."""

import hashlib
import numpy as np
import pytest

from nchc.experiments import (
    AGGREGATE_COLUMNS,
    GEOMETRY_COLUMNS,
    HCIZ_COLUMNS,
    ExperimentConfig,
    load_results,
    run_experiment,
)
from nchc.reference import REFERENCE_SOURCES, compare_reference, load_reference


def small_config(out, **kw):
    base = dict(
        experiment="dh_mean",
        M=64,
        N=32,
        sigma2=[0.5, 2.0],
        trials=12,
        master_seed=77,
        out_dir=str(out),
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ValueError):
        small_config(tmp_path, trials=0)
    with pytest.raises(ValueError):
        small_config(tmp_path, M=[8, 16, 32], N=[4, 8])  # unalignable sweep
    cfg = small_config(tmp_path, M=[8, 16], N=4)
    assert cfg.mn_pairs() == [(8, 4), (16, 4)]
    heat = small_config(tmp_path, experiment="heatmap", M=[8, 16], N=[4, 8])
    assert len(heat.mn_pairs()) == 4


def test_run_writes_schema_and_manifest(tmp_path):
    manifest = run_experiment(small_config(tmp_path, per_trial=True))
    rows = load_results(tmp_path)
    assert len(rows) == 2
    assert list(rows[0].keys()) == AGGREGATE_COLUMNS
    assert rows[0]["trials"] == 12
    assert rows[0]["alpha"] == 2.0
    assert 0.0 <= rows[0]["misclass_rate"] <= 1.0
    # moment identity survives the CSV round trip
    for row in rows:
        lhs = row["var_d_over_M"]
        rhs = 2 * row["var_daa_over_M"] + 2 * row["var_dab_over_M"] - row["var_sum_over_M"]
        assert lhs == pytest.approx(rhs, rel=1e-8)
        assert row["mean_d_over_M"] == pytest.approx(
            row["mean_daa_over_M"] - row["mean_dab_over_M"], rel=1e-8, abs=1e-12
        )
    text = (tmp_path / "manifest.txt").read_text()
    assert "rng.algorithm" in text and "Philox" in text
    assert "checksum.results.csv" in text
    assert manifest.flagged_trials == 0
    # per-trial dump present and indexed
    per_trial = (tmp_path / "per_trial.csv").read_text().splitlines()
    assert len(per_trial) == 1 + 2 * 12
    # checksum in manifest matches the file on disk
    digest = hashlib.sha256((tmp_path / "results.csv").read_bytes()).hexdigest()
    assert f"checksum.results.csv: sha256:{digest}" in text


def test_bitwise_determinism_across_worker_counts(tmp_path):
    run_experiment(small_config(tmp_path / "w1", workers=1))
    run_experiment(small_config(tmp_path / "w2", workers=2))
    b1 = (tmp_path / "w1" / "results.csv").read_bytes()
    b2 = (tmp_path / "w2" / "results.csv").read_bytes()
    assert b1 == b2


def test_rerun_reproduces_checksums(tmp_path):
    m1 = run_experiment(small_config(tmp_path / "r1"))
    m2 = run_experiment(small_config(tmp_path / "r2"))
    assert m1.checksums == m2.checksums


def test_seed_changes_results(tmp_path):
    run_experiment(small_config(tmp_path / "s1"))
    run_experiment(small_config(tmp_path / "s2", master_seed=78))
    assert (tmp_path / "s1/results.csv").read_bytes() != (tmp_path / "s2/results.csv").read_bytes()


def test_hciz_run_schema(tmp_path):
    cfg = ExperimentConfig(
        experiment="hciz_verify",
        N=[2, 16],
        ctheta=[0.1],
        ensemble="identity",
        samples=1000,
        master_seed=5,
        out_dir=str(tmp_path),
    )
    run_experiment(cfg)
    rows = load_results(tmp_path)
    assert list(rows[0].keys()) == HCIZ_COLUMNS
    for row in rows:
        assert row["abs_deviation"] <= 1e-12  # identity ensemble is exact
    assert rows[0]["N"] == 2 and np.isfinite(rows[0]["exact_n2"])
    assert isinstance(rows[1]["exact_n2"], float) and np.isnan(rows[1]["exact_n2"])


def test_geometry_run_schema(tmp_path):
    cfg = ExperimentConfig(
        experiment="geometry_check",
        M=128,
        N=64,
        sigma2=[0.0, 1.0],
        trials=2,
        master_seed=6,
        out_dir=str(tmp_path),
    )
    run_experiment(cfg)
    rows = load_results(tmp_path)
    assert list(rows[0].keys()) == GEOMETRY_COLUMNS
    noiseless = [r for r in rows if r["sigma2"] == 0.0][0]
    assert noiseless["belt_mean"] == 0.0  # sigma = 0 -> no belt
    noisy = [r for r in rows if r["sigma2"] == 1.0][0]
    assert noisy["belt_mean"] == pytest.approx(1.0, abs=0.1)


# ---------------------------------------------------------------------------
# reference tables
# ---------------------------------------------------------------------------

def test_reference_tables_load_and_have_known_anchors():
    fig3 = load_reference("fig3_numeric")
    row = fig3.lookup(M=1000, alpha=1.0, key=1.0)
    assert row is not None and row.value == 1.743042712680526
    assert row.column == "DHnumeric1000alpha1"
    fig4 = load_reference("fig4_numeric")
    assert fig4.lookup(1000, 10.0, 1.0).value == 0.009256113606158856
    fig5 = load_reference("fig5_numeric")
    assert fig5.lookup(1000, 10.0, 100.0).value == 0.0142
    assert fig5.lookup(1000, 10.0, 1.0).value == 0.2407
    assert fig5.lookup(1000, 10.0, 0.1).value == 0.4913
    fig3r = load_reference("fig3_replica")
    assert fig3r.lookup(1000, 1.0, 2.0).value == 2.636925675610074
    for source in REFERENCE_SOURCES:
        table = load_reference(source)
        assert len(table.rows) > 0
        assert all(np.isfinite(r.value) for r in table.rows)


def synthetic_results_from(source, value_column, M=1000, alpha=10.0, perturb=0.0):
    table = load_reference(source)
    rows = []
    for ref in table.rows:
        if ref.M != M or abs(ref.alpha - alpha) > 1e-9:
            continue
        sigma2 = 1.0 / ref.key if table.key_name == "one_over_sigma2" else ref.key
        rows.append(
            {
                "experiment": "accuracy_sweep",
                "M": ref.M,
                "alpha": ref.alpha,
                "N": int(round(ref.M / ref.alpha)),
                "sigma2": sigma2,
                value_column: ref.value * (1.0 + perturb),
            }
        )
    return rows


def test_compare_table_to_itself_is_exact():
    rows = synthetic_results_from("fig5_numeric", "misclass_rate")
    report = compare_reference(rows, "fig5_numeric", rtol=1e-12, atol=0.0)
    assert report.passed
    assert report.entries and not report.gaps
    assert all(e.abs_deviation == 0.0 for e in report.entries)


def test_compare_flags_perturbed_results():
    rows = synthetic_results_from("fig3_numeric", "mean_daa_over_M", alpha=1.0, perturb=0.10)
    report = compare_reference(rows, "fig3_numeric", rtol=0.02, atol=0.0)
    assert not report.passed
    assert all(not e.within_tolerance for e in report.entries)
    # 10% off passes a 15% band
    loose = compare_reference(rows, "fig3_numeric", rtol=0.15, atol=0.0)
    assert loose.passed


def test_compare_reports_gaps():
    rows = [
        {
            "experiment": "dh_mean",
            "M": 123,
            "N": 123,
            "alpha": 1.0,
            "sigma2": 1.0,
            "mean_daa_over_M": 1.7,
        }
    ]
    report = compare_reference(rows, "fig3_numeric", rtol=0.02)
    assert report.gaps and not report.passed
    assert "M=123" in report.gaps[0]
    assert "FAIL" in report.to_text()
