import json
from pathlib import Path

import numpy as np
import pytest

import tvwhittle.modify
from tvwhittle import cli
from tvwhittle.exceptions import InvalidInputError
from tvwhittle.experiments import FIT_PATH_COLUMNS, GRID_COLUMNS, preprocess
from tvwhittle.io import CsvFormatError, load_series, read_rows, write_rows

DATA = Path(__file__).parent / "data" / "egg_synthetic.csv"


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [{"a": int(i), "b": float(v), "c": f"m{i}", "d": bool(i % 2)}
                for i, v in enumerate(rng.normal(size=20) * 10.0 ** rng.integers(-12, 12, 20))]
        path = tmp_path / "t.csv"
        write_rows(path, ("a", "b", "c", "d"), rows)
        assert read_rows(path) == rows

    def test_append(self, tmp_path):
        path = tmp_path / "t.csv"
        write_rows(path, ("x",), [{"x": 1}], append=True)
        write_rows(path, ("x",), [{"x": 2}], append=True)
        assert path.read_text().splitlines() == ["x", "1", "2"]

    def test_one_column_without_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("1.5\n-2\n3e-1\n")
        x, dates = load_series(path)
        np.testing.assert_array_equal(x, [1.5, -2.0, 0.3])
        assert dates is None

    def test_two_columns_with_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("date,price\n2020-01-03,1.0\n\n2020-01-10,1.25\n")
        x, dates = load_series(path)
        np.testing.assert_array_equal(x, [1.0, 1.25])
        assert dates == ["2020-01-03", "2020-01-10"]

    def test_fixture(self):
        x, dates = load_series(DATA)
        assert x.size == 1201 and len(dates) == 1201

    @pytest.mark.parametrize(
        "text,match",
        [
            ("value\n1\n2\nabc\n", "line 4"),
            ("d,v\na,1\nb,2,3\n", "line 3"),
            ("1\nnan\n2\n", "line 2"),
            ("a,b,c\n1,2,3\n", "line 1"),
            ("v\n1\n", "at least two"),
        ],
    )
    def test_malformed(self, tmp_path, text, match):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        with pytest.raises(CsvFormatError, match=match):
            load_series(path)


class TestPreprocess:
    def test_first_difference(self):
        x, mean = preprocess([3.0, 5.0, 4.0], "first")
        assert mean == pytest.approx(0.5)
        np.testing.assert_allclose(x + mean, [2.0, -1.0])

    def test_centring_only(self):
        x, mean = preprocess([1.0, 2.0, 6.0])
        assert mean == 3.0 and x.sum() == 0

    def test_bad_mode(self):
        with pytest.raises(InvalidInputError):
            preprocess([1.0, 2.0], "second")


class TestConfig:
    def test_flat_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("n-rep: 4\nT: 300\nmethods: [DW-m15, DW-m15-TA]\n")
        assert cli.load_config(path) == {"n_rep": 4, "T": 300, "methods": ["DW-m15", "DW-m15-TA"]}

    def test_nested_rejected(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("gibbs:\n  n_iter: 10\n")
        with pytest.raises(InvalidInputError, match="flat"):
            cli.load_config(path)

    def test_layering(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"n_rep": 7, "thin": 5}))
        args = cli.build_parser().parse_args(
            ["experiment", "--preset", "desk", "--config", str(path), "--thin", "3"])
        cfg = cli.resolve("experiment", args)
        assert cfg["T"] == 500  # preset
        assert cfg["n_rep"] == 7  # config file over preset
        assert cfg["thin"] == 3  # flag over config file
        assert cfg["n_particles"] == 100  # default

    def test_unknown_key_is_error(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("n_reps: 4\n")
        assert cli.main(["experiment", "--config", str(path), "--dry-run", "--out", str(tmp_path)]) == 2
        assert "n_reps" in capsys.readouterr().err


class TestCommands:
    def test_experiment_dry_run_full_geometry(self, tmp_path):
        assert cli.main(["experiment", "--dry-run", "--out", str(tmp_path)]) == 0
        cfg = json.loads((tmp_path / "config.json").read_text())
        assert cfg["n_kept_draws"] == 5000
        assert cfg["method_details"]["BW-N30-S15"]["M"] == 99
        assert cfg["method_details"]["BW-N60-S30"]["M"] == 49
        assert cfg["method_details"]["TD"]["priors"]["Q_prior"]["dof"] == 10
        assert not (tmp_path / "summary.csv").exists()

    def test_experiment_geometry_error(self, tmp_path, capsys):
        code = cli.main(["experiment", "--dry-run", "--T", "500", "--methods", "BW-N30-S15", "--out", str(tmp_path)])
        assert code == 2
        assert "trim" in capsys.readouterr().err

    def test_unknown_method(self, tmp_path, capsys):
        assert cli.main(["experiment", "--dry-run", "--methods", "DW-x", "--out", str(tmp_path)]) == 2
        assert "DW-x" in capsys.readouterr().err

    def test_grid_ar1_small(self, tmp_path):
        code = cli.main(["grid-ar1", "--phi", "0.0", "0.5", "--T", "20", "40", "--n-rep", "3",
                         "--grid-size", "199", "--n-curves", "1", "--out", str(tmp_path)])
        assert code == 0
        rows = read_rows(tmp_path / "grid_summary.csv")
        assert len(rows) == 4 and tuple(rows[0]) == GRID_COLUMNS
        curves = read_rows(tmp_path / "grid_curves.csv")
        assert len(curves) == 2 * 2 * 2 * 199

    def test_grid_ar1_rejects_phi(self, tmp_path):
        assert cli.main(["grid-ar1", "--phi", "1.0", "--out", str(tmp_path)]) == 2

    def test_fit_fixture(self, tmp_path):
        code = cli.main(["fit", "--input", str(DATA), "--n-iter", "6", "--burn-in", "2", "--thin", "2",
                         "--n-particles", "5", "--out", str(tmp_path)])
        assert code == 0
        rows = read_rows(tmp_path / "path_quantiles.csv")
        assert tuple(rows[0]) == FIT_PATH_COLUMNS
        assert len(rows) == 1200 * 3
        assert rows[0]["date"] == "1990-01-12"
        for r in rows[:30]:
            assert r["q0.025"] <= r["q0.5"] <= r["q0.975"]
        cfg = json.loads((tmp_path / "config.json").read_text())
        assert cfg["label"] == "DW-m50-SV" and cfg["difference"] == "first"
        assert (tmp_path / "spectrogram.csv").exists() and (tmp_path / "transfer.csv").exists()

    def test_fit_needs_input(self, tmp_path):
        assert cli.main(["fit", "--out", str(tmp_path)]) == 2

    def test_bad_switch_value(self):
        with pytest.raises(SystemExit):
            cli.main(["fit", "--sv", "maybe"])

    def test_selftest_passes(self, capsys):
        assert cli.main(["selftest"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_selftest_detects_corrupted_taper(self, monkeypatch, capsys):
        original = tvwhittle.modify.hanning_window

        def corrupted(N, rescale=False):
            win = original(N, rescale)
            return type(win)(win.weights, win.normalizer * 1.01, win.rescale)

        monkeypatch.setattr(tvwhittle.modify, "hanning_window", corrupted)
        assert cli.main(["selftest"]) == 1
        out = capsys.readouterr().out
        line = next(l for l in out.splitlines() if l.startswith("taper_normalizer"))
        assert "FAIL" in line
