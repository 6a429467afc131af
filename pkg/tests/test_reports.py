"""Tests for report tables and files."""

import json
import math

import joblib
import numpy as np
import pandas as pd
import pytest

from experiments.config import parse_config
from experiments.reports import (
    ReportError,
    bias_sv_table,
    emit_reports,
    json_safe,
    load_report,
    rewards_table,
    save_report,
    sv_table,
    timings_table,
)
from experiments.runner import RunReport, run_experiment
from tests.conftest import tiny_experiment_payload


@pytest.fixture(scope="module")
def report():
    return run_experiment(parse_config(tiny_experiment_payload(repeats=2)), persist=False)


def test_sv_table_rows_sum_to_total_auroc_gain(report):
    df = sv_table(report)
    assert list(df["row"]) == ["repeat_000", "repeat_001", "mean"]
    ids = report.client_ids
    np.testing.assert_allclose(df[ids].sum(axis=1), df["total_auroc"] - 0.5, atol=1e-9)
    assert (df["split"] == "sex/as_is").all()


def test_bias_table_has_a_total_row_per_attribute(report):
    df = bias_sv_table(report)
    assert set(df["attribute"]) == {"sex", "age"}
    assert (df["client_id"] == "total").sum() == 2
    assert len(df) == 2 * (len(report.client_ids) + 1)


def test_rewards_are_rounded_to_cents(report):
    df = rewards_table(report)
    assert set(df["pool_id"]) == {"performance", "sex_bias", "age_bias", "combined"}
    values = df["reward_mean"].to_numpy()
    np.testing.assert_array_equal(values, np.round(values, 2))


def test_timings_cover_every_coalition(report):
    df = timings_table(report)
    assert len(df) == 2 * 15
    assert (df["seconds"] >= 0).all()
    assert df["size"].max() == 4


def test_emitted_files_are_byte_stable(report, tmp_path):
    first = emit_reports(report, tmp_path / "a")
    emit_reports(report, tmp_path / "b")
    for name in first:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["n_repeats"] == 2
    assert "timings" not in json.dumps(summary["repeats"])
    assert pd.read_csv(tmp_path / "a" / "sv_table.csv").shape[0] == 3


def test_empty_report_writes_nothing(report, tmp_path):
    empty = RunReport(config=report.config, repeats=[])
    with pytest.raises(ReportError):
        emit_reports(empty, tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_saved_report_re_emits_identically(report, tmp_path):
    loaded = load_report(save_report(report, tmp_path / "report.joblib"))
    emit_reports(report, tmp_path / "a")
    emit_reports(loaded, tmp_path / "b")
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_missing_or_foreign_report_file(tmp_path):
    with pytest.raises(ReportError):
        load_report(tmp_path / "none.joblib")
    joblib.dump({"kind": "fl_trace", "format_version": 1}, tmp_path / "x.joblib")
    with pytest.raises(ReportError):
        load_report(tmp_path / "x.joblib")


def test_json_safe_replaces_non_finite_numbers():
    payload = json_safe({"a": math.nan, "b": [np.float64(1.5), math.inf], 3: np.int64(2)})
    assert payload == {"a": None, "b": [1.5, None], "3": 2}
