import io
import json
from pathlib import Path

import pandas as pd
import pytest

from cli import EXIT_CHECK, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def data_rows(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


class TestPmfCommand:
    def test_blocks_golden(self, capsys):
        code, out = run(capsys, "pmf", "--law", "blocks", "--alpha", "0.5", "--theta", "1", "--n", "2")
        assert code == EXIT_OK
        assert out == (GOLDEN / "pmf_blocks.csv").read_text()

    def test_rho(self, capsys):
        code, out = run(capsys, "pmf", "--law", "rho", "--alpha", "0.5", "--n", "2", "--z", "1")
        assert code == EXIT_OK
        rows = data_rows(out)
        assert rows[0] == "k,probability,log_probability"
        assert [r.split(",")[:2] for r in rows[1:]] == [["1", "0.5"], ["2", "0.5"]]

    def test_unseen_json(self, capsys):
        code, out = run(capsys, "pmf", "--law", "unseen", "--alpha", "0.5", "--theta", "1",
                        "--n", "2", "--j", "1", "--m", "1", "--format", "json")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["metadata"]["route"] == "mixture"
        assert payload["rows"][1]["probability"] == pytest.approx(0.5, rel=1e-12)

    def test_esf_from_sizes(self, capsys):
        code, out = run(capsys, "pmf", "--law", "esf", "--alpha", "0.5", "--theta", "1", "--sizes", "2")
        assert code == EXIT_OK
        assert data_rows(out)[1].startswith("0.25,")

    def test_output_file(self, tmp_path, capsys):
        target = tmp_path / "rho.csv"
        code, out = run(capsys, "pmf", "--law", "rho", "--alpha", "0.5", "--n", "3", "--z", "2",
                        "--out", str(target))
        assert code == EXIT_OK and out == ""
        frame = pd.read_csv(target, comment="#")
        assert list(frame.columns) == ["k", "probability", "log_probability"]
        assert frame["probability"].sum() == pytest.approx(1.0)


class TestSampleCommand:
    def test_identical_across_runs_and_threads(self, capsys):
        argv = ["sample", "--what", "ml", "--alpha", "0.5", "--theta", "0", "--reps", "9000", "--seed", "7"]
        _, first = run(capsys, *argv, "--threads", "1")
        _, second = run(capsys, *argv, "--threads", "1")
        _, threaded = run(capsys, *argv, "--threads", "4")
        assert first == second == threaded

    def test_half_normal_mean(self, capsys):
        code, out = run(capsys, "sample", "--what", "ml", "--alpha", "0.5", "--theta", "0",
                        "--reps", "100000", "--seed", "7")
        assert code == EXIT_OK
        values = pd.read_csv(io.StringIO(out), comment="#")["value"]
        assert abs(values.mean() - 1.1283791670955126) < 3 * values.std() / len(values) ** 0.5

    def test_partitions(self, capsys):
        code, out = run(capsys, "sample", "--what", "partition", "--alpha", "0.5", "--theta", "1",
                        "--n", "12", "--reps", "5")
        assert code == EXIT_OK
        rows = data_rows(out)
        assert rows[0] == "replicate,n,j,block_sizes"
        assert len(rows) == 6
        for row in rows[1:]:
            _, n, j, sizes = row.split(",")
            assert sum(int(s) for s in sizes.split(";")) == int(n) == 12
            assert len(sizes.split(";")) == int(j)


class TestThreadIndependence:
    @pytest.mark.parametrize("argv", [
        ["rate", "--mode", "prior", "--alpha", "0.5", "--theta", "6", "--grid", "16,64", "--format", "json"],
        ["predict", "--alpha", "0.5", "--theta", "1", "--n", "10", "--j", "4", "--m", "1000000",
         "--reps", "9000", "--seed", "3"],
    ])
    def test_threads_do_not_change_output(self, capsys, argv):
        _, single = run(capsys, *argv, "--threads", "1")
        _, threaded = run(capsys, *argv, "--threads", "4")
        assert single == threaded

    def test_fit_threads_do_not_change_output(self, tmp_path, capsys):
        path = tmp_path / "labels.txt"
        path.write_text("".join(f"s{i}\n" * size for i, size in enumerate([9, 5, 4, 2, 2, 1, 1, 1, 1])))
        _, single = run(capsys, "fit", "--input", str(path), "--threads", "1")
        _, threaded = run(capsys, "fit", "--input", str(path), "--threads", "4")
        assert single == threaded


class TestFitAndPredict:
    def test_two_singletons(self, tmp_path, capsys):
        path = tmp_path / "labels.txt"
        path.write_text("a\nb\n")
        code, out = run(capsys, "fit", "--input", str(path))
        assert code == EXIT_OK
        assert json.loads(out)["boundary_flag"] is True

    def test_predict_single_draw(self, capsys):
        code, out = run(capsys, "predict", "--alpha", "0.5", "--theta", "1", "--n", "2", "--j", "1",
                        "--m", "1", "--mode", "exact")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["mean"] == pytest.approx(0.5)
        assert payload["mode"] == "exact"

    def test_predict_large_m_goes_asymptotic(self, capsys):
        code, out = run(capsys, "predict", "--alpha", "0.5", "--theta", "1", "--n", "10", "--j", "4",
                        "--m", "1000000", "--reps", "2000")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["mode"] == "asymptotic"
        assert payload["mc_draws"] == 2000
        low, high = payload["credible_interval"]
        assert 0 < low < payload["median"] < high


class TestExitCodes:
    def test_missing_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as caught:
            main(["pmf", "--law", "blocks", "--alpha", "0.5", "--n", "2"])
        assert caught.value.code == EXIT_USAGE
        assert "--theta" in capsys.readouterr().err

    def test_inadmissible_parameters_are_usage_errors(self):
        with pytest.raises(SystemExit) as caught:
            main(["pmf", "--law", "blocks", "--alpha", "1.5", "--theta", "1", "--n", "2"])
        assert caught.value.code == EXIT_USAGE

    def test_bad_grid(self):
        with pytest.raises(SystemExit) as caught:
            main(["rate", "--alpha", "0.5", "--theta", "6", "--grid", "64,16"])
        assert caught.value.code == EXIT_USAGE

    def test_empty_input_is_failure(self, tmp_path, capsys):
        path = tmp_path / "empty.txt"
        path.write_text("")
        assert main(["fit", "--input", str(path)]) == EXIT_FAILURE
        assert "no observations" in capsys.readouterr().err

    def test_failed_check(self, capsys):
        code, out = run(capsys, "rate", "--mode", "prior", "--alpha", "0.5", "--theta", "6",
                        "--grid", "16,64,256", "--check", "--slope-lo", "0.5", "--slope-hi", "0.9")
        assert code == EXIT_CHECK
        assert data_rows(out)[0] == "n,d_K,scaled"

    @pytest.mark.slow
    def test_prior_acceptance(self, capsys):
        code, out = run(capsys, "rate", "--mode", "prior", "--alpha", "0.5", "--theta", "6", "--check",
                        "--format", "json", "--threads", "4")
        assert code == EXIT_OK
        assert -0.65 <= json.loads(out)["fitted_slope"] <= -0.35

    def test_zero_reps(self):
        with pytest.raises(SystemExit) as caught:
            main(["sample", "--what", "ml", "--alpha", "0.5", "--theta", "0", "--reps", "0"])
        assert caught.value.code == EXIT_USAGE

    def test_level_outside_unit_interval(self):
        with pytest.raises(SystemExit) as caught:
            main(["predict", "--alpha", "0.5", "--theta", "1", "--n", "10", "--j", "4", "--m", "5",
                  "--level", "1.5"])
        assert caught.value.code == EXIT_USAGE

    @pytest.mark.parametrize("argv", [
        ["pmf", "--law", "rho", "--alpha", "0.5", "--n", "0", "--z", "1"],
        ["pmf", "--law", "blocks", "--alpha", "0.5", "--theta", "1", "--n", "0"],
        ["pmf", "--law", "unseen", "--alpha", "0.5", "--theta", "1", "--n", "10", "--j", "4", "--m", "0"],
    ])
    def test_sizes_below_one(self, capsys, argv):
        with pytest.raises(SystemExit) as caught:
            main(argv)
        assert caught.value.code == EXIT_USAGE
        assert "must be at least 1" in capsys.readouterr().err

    def test_posterior_check_outside_theorem_scope(self, capsys):
        # n/alpha - j = 5/0.9 - 5 < 1
        with pytest.raises(SystemExit) as caught:
            main(["rate", "--mode", "posterior", "--alpha", "0.9", "--theta", "1", "--n", "5", "--j", "5",
                  "--grid", "16,64", "--check"])
        assert caught.value.code == EXIT_USAGE
        assert "--check" in capsys.readouterr().err
