import json
import subprocess
import sys
from pathlib import Path

import pytest

from riskfigs import MalformedCsvError, MissingColumnError, read_table
from riskfigs.histogram import build_figure as build_histogram
from riskfigs.histogram import main as histogram_main
from riskfigs.violin import build_figure as build_violin
from riskfigs.violin import main as violin_main

REPO_OUT = Path(__file__).resolve().parents[2] / "out" / "directional"


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "riskcal.harness.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def harness_csvs(tmp_path_factory):
    """Histogram/violin CSVs from the harness; prefers the directional run's output."""
    if (REPO_OUT / "histogram.csv").exists() and (REPO_OUT / "violin.csv").exists():
        return REPO_OUT / "histogram.csv", REPO_OUT / "violin.csv"
    tmp = tmp_path_factory.mktemp("harness")
    out = tmp / "out"
    config = {
        "spec": {"alpha": 0.5, "delta": 0.1, "method": "quantile", "q": 0.1},
        "env": {"type": "uniform_scale", "params": [[0.3], [0.5], [0.9]]},
        "n_cal": 600, "trials": 4, "seed": 21, "output_dir": str(out),
    }
    cfg_path = tmp / "config.json"
    cfg_path.write_text(json.dumps(config))
    run_cli(["--config", str(cfg_path), "--quiet", "calibrate"])
    (out / "qltt.json").write_bytes((out / "result.json").read_bytes())
    run_cli(["--config", str(cfg_path), "--quiet", "coverage"])
    (out / "cov_q.json").write_bytes((out / "coverage.json").read_bytes())
    config["spec"] = {"alpha": 0.5, "delta": 0.1, "method": "mean", "q": 0.1}
    cfg_path.write_text(json.dumps(config))
    run_cli(["--config", str(cfg_path), "--quiet", "calibrate"])
    (out / "ltt.json").write_bytes((out / "result.json").read_bytes())
    run_cli(["--config", str(cfg_path), "--quiet", "coverage"])
    (out / "cov_m.json").write_bytes((out / "coverage.json").read_bytes())

    from riskcal.envs import SyntheticFamily, sample_risk_matrix
    from riskcal.harness import write_risk_matrix

    fam = SyntheticFamily(kind="uniform_scale", point_params=((0.3,), (0.5,), (0.9,)))
    test_m = sample_risk_matrix(fam, fam.grid(), n=80, seed=77)
    write_risk_matrix(out / "test.csv", out / "test_manifest.json", test_m, fam.grid())
    run_cli(["--out", str(out / "figs"), "report",
             "--ltt-result", str(out / "ltt.json"),
             "--qltt-result", str(out / "qltt.json"),
             "--test-csv", str(out / "test.csv"),
             "--test-manifest", str(out / "test_manifest.json"),
             "--coverage", str(out / "cov_m.json"),
             "--coverage", str(out / "cov_q.json")])
    return out / "figs" / "histogram.csv", out / "figs" / "violin.csv"


class TestHistogram:
    def test_renders_and_markers_match_csv(self, harness_csvs, tmp_path):
        hist_csv, _ = harness_csvs
        table = read_table(hist_csv)
        alpha = float(table.meta["alpha"])
        q = float(table.meta["q"])
        code = histogram_main([str(hist_csv), "--alpha", str(alpha), "--q", str(q),
                               "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "histogram.png").exists()
        fig, drawn = build_histogram(table, alpha=alpha, q=q)
        # the drawn lines are exactly the CSV values, no recomputation
        assert drawn["alpha"] == alpha
        assert drawn["markers"] == table.markers
        assert len(drawn["markers"]) >= 1

    def test_vector_format(self, harness_csvs, tmp_path):
        hist_csv, _ = harness_csvs
        code = histogram_main([str(hist_csv), "--alpha", "1.0", "--q", "0.1",
                               "--out", str(tmp_path), "--format", "svg"])
        assert code == 0
        assert (tmp_path / "histogram.svg").exists()

    def test_single_method_csv(self, tmp_path):
        csv = tmp_path / "one.csv"
        csv.write_text("# marker method=quantile value=0.25\n"
                       "method,episode,risk\n"
                       + "\n".join(f"quantile,{i},{0.1 + 0.01 * i}" for i in range(20)) + "\n")
        code = histogram_main([str(csv), "--alpha", "0.3", "--q", "0.1",
                               "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "histogram.png").exists()

    def test_empty_csv_is_error_without_image(self, tmp_path):
        csv = tmp_path / "empty.csv"
        csv.write_text("method,episode,risk\n")
        code = histogram_main([str(csv), "--alpha", "0.3", "--q", "0.1",
                               "--out", str(tmp_path / "figs")])
        assert code == 2
        assert not (tmp_path / "figs" / "histogram.png").exists()

    def test_missing_column(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("method,episode\nquantile,0\n")
        table = read_table(csv)
        with pytest.raises(MissingColumnError, match="risk"):
            build_histogram(table, alpha=0.5, q=0.1)

    def test_missing_file_exit_code(self, tmp_path):
        code = histogram_main([str(tmp_path / "nope.csv"), "--alpha", "1", "--q", "0.1",
                               "--out", str(tmp_path)])
        assert code == 3


class TestViolin:
    def test_renders_four_violins(self, harness_csvs, tmp_path):
        _, violin_csv = harness_csvs
        table = read_table(violin_csv)
        alpha = float(table.meta["alpha"])
        code = violin_main([str(violin_csv), "--alpha", str(alpha), "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "violin.png").exists()
        fig, drawn = build_violin(table, alpha=alpha)
        assert drawn["alpha"] == alpha
        assert drawn["violins"] == 4  # two methods x two functionals

    def test_single_method_gives_two_violins(self, tmp_path):
        csv = tmp_path / "one.csv"
        csv.write_text("method,trial,mean_risk,quantile_risk\n"
                       "quantile,0,0.2,0.4\nquantile,1,0.25,0.42\nquantile,2,0.22,0.41\n")
        table = read_table(csv)
        _, drawn = build_violin(table, alpha=0.5)
        assert drawn["violins"] == 2

    def test_missing_functional_column(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("method,trial,mean_risk\nquantile,0,0.2\n")
        table = read_table(csv)
        with pytest.raises(MissingColumnError, match="quantile_risk"):
            build_violin(table, alpha=0.5)

    def test_all_empty_cells_is_error(self, tmp_path):
        csv = tmp_path / "none.csv"
        csv.write_text("method,trial,mean_risk,quantile_risk\nquantile,0,,\n")
        table = read_table(csv)
        with pytest.raises(MalformedCsvError, match="no plottable"):
            build_violin(table, alpha=0.5)


class TestCsvReader:
    def test_metadata_and_markers(self, tmp_path):
        csv = tmp_path / "t.csv"
        csv.write_text("# columns: method,episode,risk\n# alpha: 2.5\n# q: 0.1\n"
                       "# marker method=mean value=3.25\n"
                       "method,episode,risk\nmean,0,1.0\n")
        table = read_table(csv)
        assert table.meta["alpha"] == "2.5"
        assert table.markers == {"mean": 3.25}

    def test_ragged_row_rejected(self, tmp_path):
        csv = tmp_path / "t.csv"
        csv.write_text("method,episode,risk\nmean,0\n")
        with pytest.raises(MalformedCsvError, match="expected 3 cells"):
            read_table(csv)
