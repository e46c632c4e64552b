"""Readers against real run artifacts and against broken files."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sliceplots.io import SchemaError, read_correlation, read_curve, read_metrics


class TestReadMetrics:
    def test_parses_real_run(self, run_dirs):
        slices, mode = read_metrics(run_dirs["constrained"] / "metrics.csv")
        assert mode == "constrained"
        assert set(slices) == {"embb", "urllc", "mmtc"}
        for entry in slices.values():
            assert list(entry["rounds"]) == [0, 1, 2, 3, 4, 5]
            assert np.all(np.isfinite(entry["train_loss"]))
            assert np.all((0.0 <= entry["mean_recall"])
                          & (entry["mean_recall"] <= 1.0))
            assert entry["mean_log_odds"] is not None

    def test_vanilla_leaves_log_odds_empty(self, run_dirs):
        slices, mode = read_metrics(run_dirs["vanilla"] / "metrics.csv")
        assert mode == "vanilla"
        for entry in slices.values():
            assert entry["mean_log_odds"] is None

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text(
            "round,slice,mode,train_loss,mean_log_odds,feasible_fraction\n"
            "0,embb,constrained,0.5,-0.1,0.5\n"
        )
        with pytest.raises(SchemaError, match="missing column 'mean_recall'"):
            read_metrics(path)

    def test_rejects_empty_and_headerless(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(SchemaError, match="empty file"):
            read_metrics(empty)
        headerless = tmp_path / "headerless.csv"
        headerless.write_text("0,embb,constrained,0.5,0.9,-0.1,0.5\n")
        with pytest.raises(SchemaError, match="missing column"):
            read_metrics(headerless)

    def test_rejects_unparseable_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "round,slice,mode,train_loss,mean_recall,mean_log_odds,"
            "feasible_fraction\n"
            "0,embb,constrained,oops,0.9,-0.1,0.5\n"
        )
        with pytest.raises(SchemaError, match="bad.csv:2"):
            read_metrics(path)


class TestReadCurve:
    def test_parses_real_curve(self, run_dirs):
        p_values, thetas = read_curve(
            run_dirs["constrained"] / "logodds_curve_embb.csv"
        )
        assert list(p_values) == [0.0, 33.0, 66.0, 100.0]
        assert thetas[0] == 0.0
        assert np.all(np.isfinite(thetas))

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("top_p,theta\n0,0\n")
        with pytest.raises(SchemaError, match="missing column 'log_odds'"):
            read_curve(path)

    def test_wrong_artifact_is_a_schema_error(self, run_dirs):
        with pytest.raises(SchemaError, match="missing column 'top_p'"):
            read_curve(run_dirs["constrained"] / "metrics.csv")


class TestReadCorrelation:
    def test_parses_real_matrix(self, run_dirs):
        labels, matrix = read_correlation(
            run_dirs["constrained"] / "correlation_embb.csv"
        )
        assert labels == ["attr_prb", "attr_latency", "attr_channel",
                          "pred", "true"]
        assert matrix.shape == (5, 5)
        assert_allclose(np.diag(matrix), 1.0)
        assert_allclose(matrix, matrix.T, atol=1e-15)

    def test_rejects_misnamed_rows(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text(",a,b\nb,1,0\na,0,1\n")
        with pytest.raises(SchemaError, match="row 2 is named 'b'"):
            read_correlation(path)

    def test_rejects_truncated_matrix(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text(",a,b\na,1,0\n")
        with pytest.raises(SchemaError, match="2 labelled columns but 1"):
            read_correlation(path)
