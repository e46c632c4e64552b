"""Every figure kind, checked by reading the data back off the artists.

The contract is that a figure shows the CSV and nothing else, so each
test parses the CSV independently and asserts the plotted arrays equal
the parsed values exactly: the renderer is not allowed to smooth,
normalize or reorder anything.
"""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from sliceplots.io import SchemaError, read_correlation, read_curve, read_metrics
from sliceplots.render import (
    PlotJob,
    heatmap,
    logodds_compare,
    logodds_curve,
    loss_curve,
    recall_curve,
    render,
)


def close(fig):
    import matplotlib.pyplot as plt

    plt.close(fig)


class TestMetricsFigures:
    def test_loss_curve_plots_every_slice_series(self, run_dirs):
        path = run_dirs["constrained"] / "metrics.csv"
        slices, _ = read_metrics(path)
        fig = loss_curve((path,))
        lines = fig.axes[0].lines
        assert len(lines) == len(slices) == 3
        for line, (name, entry) in zip(lines, slices.items()):
            assert name in line.get_label()
            assert_array_equal(line.get_xdata(), entry["rounds"])
            assert_array_equal(line.get_ydata(), entry["train_loss"])
        close(fig)

    def test_recall_curve_plots_recall_column(self, run_dirs):
        path = run_dirs["vanilla"] / "metrics.csv"
        slices, _ = read_metrics(path)
        fig = recall_curve((path,))
        for line, entry in zip(fig.axes[0].lines, slices.values()):
            assert_array_equal(line.get_ydata(), entry["mean_recall"])
        close(fig)

    def test_overlay_doubles_the_series(self, run_dirs):
        paths = (run_dirs["constrained"] / "metrics.csv",
                 run_dirs["vanilla"] / "metrics.csv")
        fig = loss_curve(paths)
        lines = fig.axes[0].lines
        assert len(lines) == 6
        labels = [line.get_label() for line in lines]
        assert sum("constrained" in label for label in labels) == 3
        assert sum("vanilla" in label for label in labels) == 3
        con, _ = read_metrics(paths[0])
        van, _ = read_metrics(paths[1])
        assert_array_equal(lines[0].get_ydata(), con["embb"]["train_loss"])
        assert_array_equal(lines[3].get_ydata(), van["embb"]["train_loss"])
        close(fig)


class TestLogOddsFigures:
    def test_curve_matches_csv(self, run_dirs):
        path = run_dirs["constrained"] / "logodds_curve_mmtc.csv"
        p_values, thetas = read_curve(path)
        fig = logodds_curve((path,))
        line = fig.axes[0].lines[0]
        assert_array_equal(line.get_xdata(), p_values)
        assert_array_equal(line.get_ydata(), thetas)
        close(fig)

    def test_compare_plots_both_runs(self, run_dirs):
        paths = (run_dirs["constrained"] / "logodds_curve_embb.csv",
                 run_dirs["vanilla"] / "logodds_curve_embb.csv")
        fig = logodds_compare(paths)
        lines = [l for l in fig.axes[0].lines if l.get_label() in
                 ("constrained", "vanilla")]
        assert len(lines) == 2
        for line, path in zip(lines, paths):
            _, thetas = read_curve(path)
            assert_array_equal(line.get_ydata(), thetas)
        close(fig)


class TestHeatmap:
    def test_grid_equals_matrix(self, run_dirs):
        path = run_dirs["constrained"] / "correlation_urllc.csv"
        labels, matrix = read_correlation(path)
        fig = heatmap((path,))
        ax = fig.axes[0]
        shown = np.asarray(ax.images[0].get_array())
        assert shown.shape == (5, 5)
        assert_array_equal(shown, matrix)
        annotations = [t for t in ax.texts]
        assert len(annotations) == 25
        assert [t.get_text() for t in ax.get_xticklabels()] == labels
        close(fig)


class TestRender:
    def test_every_kind_writes_an_image(self, run_dirs, tmp_path):
        con, van = run_dirs["constrained"], run_dirs["vanilla"]
        jobs = [
            PlotJob("loss_curve", (str(con / "metrics.csv"),),
                    str(tmp_path / "loss.png")),
            PlotJob("recall_curve",
                    (str(con / "metrics.csv"), str(van / "metrics.csv")),
                    str(tmp_path / "recall.png")),
            PlotJob("logodds_curve",
                    (str(con / "logodds_curve_embb.csv"),),
                    str(tmp_path / "curve.png")),
            PlotJob("logodds_compare",
                    (str(con / "logodds_curve_embb.csv"),
                     str(van / "logodds_curve_embb.csv")),
                    str(tmp_path / "compare.png")),
            PlotJob("heatmap", (str(con / "correlation_embb.csv"),),
                    str(tmp_path / "heat.png")),
        ]
        for job in jobs:
            out = render(job)
            with open(out, "rb") as fh:
                assert fh.read(8) == b"\x89PNG\r\n\x1a\n"

    def test_job_validates_kind_and_arity(self, run_dirs):
        metrics = str(run_dirs["constrained"] / "metrics.csv")
        with pytest.raises(SchemaError, match="unknown figure kind"):
            PlotJob("scatter", (metrics,), "out.png")
        with pytest.raises(SchemaError, match="--in and --in2"):
            PlotJob("logodds_compare", (metrics,), "out.png")
        with pytest.raises(SchemaError, match="exactly one input"):
            PlotJob("heatmap", (metrics, metrics), "out.png")

    def test_wrong_artifact_fails_before_writing(self, run_dirs, tmp_path):
        out = tmp_path / "never.png"
        job = PlotJob(
            "logodds_curve",
            (str(run_dirs["constrained"] / "metrics.csv"),),
            str(out),
        )
        with pytest.raises(SchemaError, match="missing column 'top_p'"):
            render(job)
        assert not out.exists()
