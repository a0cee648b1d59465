import json

import numpy as np
import pytest

from reconstruct.cli import dispatch
from reconstruct.estimators import model_from_json, predict


@pytest.fixture
def train_csv(tmp_path, rng):
    X = rng.random((60, 2))
    y = np.sin(4 * X[:, 0]) + 0.2 * rng.normal(size=60)
    path = tmp_path / "train.csv"
    lines = ["x1,x2,y"] + [f"{float(a)!r},{float(b)!r},{float(c)!r}" for (a, b), c in zip(X, y)]
    path.write_text("\n".join(lines) + "\n")
    return path, X, y


class TestBasics:
    def test_help_exits_zero(self, capsys):
        assert dispatch(["--help"]) == 0

    def test_unknown_flag_rejected(self, capsys):
        assert dispatch(["fit", "--nope", "x"]) == 1

    def test_unknown_command_rejected(self, capsys):
        assert dispatch(["frobnicate"]) == 1

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        rc = dispatch(
            ["fit", "--data", str(tmp_path / "nope.csv"), "--out",
             str(tmp_path / "m.json")]
        )
        assert rc == 2

    def test_malformed_csv_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,y\n0.5,hello\n")
        rc = dispatch(["fit", "--data", str(bad), "--out", str(tmp_path / "m.json")])
        assert rc == 2


class TestFitPredict:
    def test_round_trip_matches_in_process(self, tmp_path, train_csv, capsys):
        path, X, y = train_csv
        out = tmp_path / "model.json"
        assert dispatch([
            "fit", "--data", str(path), "--method", "gprr", "--out", str(out)
        ]) == 0
        model = model_from_json(json.loads(out.read_text()))
        pts = tmp_path / "pts.csv"
        Xs = np.random.default_rng(5).random((10, 2))
        pts.write_text(
            "x1,x2\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in Xs) + "\n"
        )
        pred_csv = tmp_path / "pred.csv"
        assert dispatch([
            "predict", "--model", str(out), "--data", str(pts), "--out", str(pred_csv)
        ]) == 0
        got = np.array([float(v) for v in pred_csv.read_text().splitlines()[1:]])
        expect = predict(model, Xs)
        np.testing.assert_allclose(got, expect, rtol=0, atol=1e-12)

    def test_refit_is_byte_identical(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        out1, out2 = tmp_path / "m1.json", tmp_path / "m2.json"
        for out in (out1, out2):
            assert dispatch([
                "fit", "--data", str(path), "--method", "gprr",
                "--m", "10", "--seed", "7", "--out", str(out),
            ]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_subset_fit_requires_seed(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        rc = dispatch([
            "fit", "--data", str(path), "--m", "10", "--out",
            str(tmp_path / "m.json"),
        ])
        assert rc == 1

    def test_low_rank_methods(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        for method in ("nystrom", "spgp", "eb"):
            out = tmp_path / f"{method}.json"
            assert dispatch([
                "fit", "--data", str(path), "--method", method, "--m", "10",
                "--seed", "3", "--out", str(out),
            ]) == 0
            blob = json.loads(out.read_text())
            assert blob["method"] == method

    def test_inspect(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        out = tmp_path / "model.json"
        dispatch(["fit", "--data", str(path), "--method", "krr", "--out", str(out)])
        assert dispatch(["inspect", "--model", str(out)]) == 0
        assert "krr" in capsys.readouterr().out


class TestScansAndKnots:
    def test_gcv_scan_krr(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        out = tmp_path / "curve.json"
        assert dispatch([
            "gcv-scan", "--data", str(path), "--method", "krr",
            "--grid", "1e-6,1e2,9", "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert len(payload["grid"]) == len(payload["gcv"]) == 9

    def test_knots_select(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        out = tmp_path / "knots.json"
        assert dispatch([
            "knots", "select", "--data", str(path), "--m", "8",
            "--trials", "200", "--seed", "2", "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert len(payload["indices"]) == 8


class TestBench:
    def test_seed_required(self, tmp_path, capsys):
        rc = dispatch([
            "bench", "table1", "--n", "40", "--reps", "2", "--N", "50",
            "--out", str(tmp_path / "r.json"),
        ])
        assert rc == 1

    def test_report_deterministic_across_jobs(self, tmp_path, capsys):
        args = [
            "bench", "table1", "--model", "I", "--d", "2", "--n", "50",
            "--reps", "3", "--N", "80", "--seed", "11",
        ]
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert dispatch(args + ["--jobs", "1", "--out", str(out1)]) == 0
        assert dispatch(args + ["--jobs", "2", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        # timings live outside the canonical payload
        assert "timings" not in json.loads(out1.read_text())
        assert (tmp_path / "r1.json.timings.json").exists()

    def test_replication_bench_smoke(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        assert dispatch([
            "bench", "replication", "--reps", "2", "--seed", "5",
            "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "replication"


class TestMoreSurfaces:
    def test_gcv_scan_fdp(self, tmp_path, rng, capsys):
        x = np.linspace(0, 1, 80)
        y = np.sin(6 * x) + 0.2 * rng.normal(size=80)
        data = tmp_path / "d.csv"
        data.write_text(
            "x1,y\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y)) + "\n"
        )
        out = tmp_path / "c.json"
        assert dispatch([
            "gcv-scan", "--data", str(data), "--method", "fdp",
            "--grid", "1e-6,1e1,7", "--out", str(out),
        ]) == 0
        assert len(json.loads(out.read_text())["gcv"]) == 7

    def test_gcv_scan_gprr(self, tmp_path, train_csv, capsys):
        path, _, _ = train_csv
        out = tmp_path / "c.json"
        assert dispatch([
            "gcv-scan", "--data", str(path), "--method", "gprr", "--m", "8",
            "--seed", "3", "--grid", "1e-6,1e1,5", "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert len(payload["gcv"]) == 5

    def test_knots_sequential(self, tmp_path, train_csv, capsys):
        path, X, y = train_csv
        out = tmp_path / "traj.json"
        assert dispatch([
            "knots", "sequential", "--data", str(path), "--m0", "6",
            "--iterations", "2", "--trials", "50", "--seed", "8",
            "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert payload["kind"] == "ccpp"
        assert payload["per_run"][0]["m"] == 6

    def test_jobs_env_default(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("RECONSTRUCT_JOBS", "2")
        out = tmp_path / "r.json"
        assert dispatch([
            "bench", "table1", "--n", "40", "--reps", "2", "--N", "50",
            "--seed", "3", "--out", str(out),
        ]) == 0
        sidecar = json.loads((tmp_path / "r.json.timings.json").read_text())
        assert sidecar["jobs"] == 2
