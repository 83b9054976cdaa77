"""Command-line surface: simulate, fit, select, benchmark, verify."""

import contextlib
import io
import json

import numpy as np
import pytest

from mimm import cli, core, gaussian, ple


def run_cli(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        rc = cli.main(list(argv))
    return rc, out.getvalue()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    data = tmp / "ar1.csv"
    rc, _ = run_cli(
        "simulate", "--ar", "0.5", "--sigma2", "0.5",
        "--n", "600", "--seed", "7", "--out", str(data),
    )
    assert rc == 0
    spec1 = tmp / "ar1.spec"
    spec1.write_text(core.ar_spec(1).to_text())
    spec2 = tmp / "ar2.spec"
    spec2.write_text(core.ar_spec(2).to_text())
    return {"tmp": tmp, "data": data, "spec1": spec1, "spec2": spec2}


class TestSimulate:
    def test_rerun_is_byte_identical(self, workspace):
        body = workspace["data"].read_text()
        rc, _ = run_cli(
            "simulate", "--ar", "0.5", "--sigma2", "0.5",
            "--n", "600", "--seed", "7", "--out", str(workspace["data"]),
        )
        assert rc == 0
        assert workspace["data"].read_text() == body

    def test_metadata_sidecar(self, workspace):
        meta = json.loads((workspace["tmp"] / "ar1.csv.meta.json").read_text())
        assert meta["n"] == 600 and meta["seed"] == 7
        assert meta["kinds"] == ["real"]

    def test_mininfo_input_matches_classical(self, workspace):
        out = workspace["tmp"] / "mi.csv"
        rc, _ = run_cli(
            "simulate", "--theta", "1", "--tau2", repr(2.0 / 3.0),
            "--n", "600", "--seed", "7", "--out", str(out),
        )
        assert rc == 0
        a = np.loadtxt(workspace["data"], delimiter=",")
        b = np.loadtxt(out, delimiter=",")
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_var1_writes_two_columns(self, workspace):
        a_csv = workspace["tmp"] / "A.csv"
        s_csv = workspace["tmp"] / "Sigma.csv"
        a_csv.write_text("0.5,0.1\n0.1,0.5\n")
        s_csv.write_text("0.5,0.0\n0.0,0.5\n")
        out = workspace["tmp"] / "var.csv"
        rc, _ = run_cli("simulate", "--var1", str(a_csv), str(s_csv), "--n", "50", "--out", str(out))
        assert rc == 0
        assert np.loadtxt(out, delimiter=",").shape == (50, 2)

    def test_nonstationary_params_exit_validation(self, workspace):
        rc, _ = run_cli(
            "simulate", "--ar", "1.2", "--sigma2", "1.0",
            "--n", "10", "--out", str(workspace["tmp"] / "x.csv"),
        )
        assert rc == cli.EXIT_VALIDATION

    def test_params_file_input(self, workspace):
        pfile = workspace["tmp"] / "params.txt"
        pfile.write_text(gaussian.params_to_text(gaussian.ClassicalARParams([0.4], 1.0)))
        out = workspace["tmp"] / "fromfile.csv"
        rc, _ = run_cli("simulate", "--params", str(pfile), "--n", "20", "--out", str(out))
        assert rc == 0


class TestFit:
    def test_ple_naive_matches_library(self, workspace):
        out = workspace["tmp"] / "fit.json"
        rc, _ = run_cli(
            "fit", "--data", str(workspace["data"]), "--spec", str(workspace["spec1"]),
            "--estimator", "ple-naive", "--out", str(out),
        )
        assert rc == 0
        result = json.loads(out.read_text())
        series = core.TimeSeries.from_csv(workspace["data"])
        direct = ple.fit_naive(core.ar_spec(1), series)
        assert result["theta"][0] == pytest.approx(float(direct.theta[0]), abs=1e-12)
        assert result["aic"] == pytest.approx(direct.aic, rel=1e-12)
        assert result["schema_version"] == 1
        assert result["config"]["estimator"] == "ple-naive"

    def test_mcle_with_diagnostics(self, workspace):
        out = workspace["tmp"] / "mcle.json"
        diag = workspace["tmp"] / "mcle_diag.csv"
        rc, _ = run_cli(
            "fit", "--data", str(workspace["data"]), "--spec", str(workspace["spec1"]),
            "--estimator", "mcle", "--samples", "2000", "--seed", "3",
            "--out", str(out), "--diagnostics", str(diag),
        )
        assert rc == 0
        result = json.loads(out.read_text())
        assert 0.0 <= result["acceptance_rate"] <= 1.0
        lines = diag.read_text().splitlines()
        assert lines[0] == "iter,theta_0,score_norm,acceptance_rate"
        assert len(lines) == result["iterations"] + 1

    def test_mle_requires_order(self, workspace):
        rc, _ = run_cli("fit", "--data", str(workspace["data"]), "--estimator", "mle")
        assert rc == cli.EXIT_VALIDATION

    def test_mcle_high_order_warns_about_runtime(self, workspace, capsys):
        out = workspace["tmp"] / "mcle2.json"
        rc = cli.main(
            [
                "fit", "--data", str(workspace["data"]), "--spec", str(workspace["spec2"]),
                "--estimator", "mcle", "--samples", "300", "--max-iters", "2",
                "--seed", "1", "--out", str(out),
            ]
        )
        assert rc == 0
        assert "hours" in capsys.readouterr().err

    def test_nan_data_exits_validation(self, workspace):
        bad = workspace["tmp"] / "bad.csv"
        bad.write_text("1.0\nnan\n2.0\n")
        rc, _ = run_cli(
            "fit", "--data", str(bad), "--spec", str(workspace["spec1"]),
            "--estimator", "ple-naive",
        )
        assert rc == cli.EXIT_VALIDATION

    def test_time_limit_exit_code(self, workspace):
        out = workspace["tmp"] / "slow.json"
        rc, _ = run_cli(
            "fit", "--data", str(workspace["data"]), "--spec", str(workspace["spec1"]),
            "--estimator", "ple-naive", "--time-limit-s", "1e-9", "--out", str(out),
        )
        assert rc == cli.EXIT_TIMEOUT

    def test_config_file_precedence(self, workspace):
        conf = workspace["tmp"] / "conf.json"
        conf.write_text(json.dumps({"estimator": "ple-sgd", "iters": 500, "eta": 0.05}))
        out = workspace["tmp"] / "conf_fit.json"
        rc, _ = run_cli(
            "fit", "--config", str(conf), "--data", str(workspace["data"]),
            "--spec", str(workspace["spec1"]), "--eta", "0.01", "--out", str(out),
        )
        assert rc == 0
        result = json.loads(out.read_text())
        assert result["estimator"] == "ple-sgd"  # from config file
        assert result["config"]["eta"] == 0.01  # flag wins over file
        assert result["config"]["iters"] == 500


class TestSelect:
    def test_duplicate_spec_gets_identical_scores(self, workspace):
        out = workspace["tmp"] / "dup.csv"
        rc, _ = run_cli(
            "select", "--data", str(workspace["data"]),
            "--spec", str(workspace["spec1"]), "--spec", str(workspace["spec1"]),
            "--seed", "1", "--out", str(out),
        )
        assert rc == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        assert rows[0][1:5] == rows[1][1:5]

    def test_requires_two_specs(self, workspace):
        rc, _ = run_cli("select", "--data", str(workspace["data"]), "--spec", str(workspace["spec1"]))
        assert rc == cli.EXIT_VALIDATION

    def test_failed_spec_recorded_not_fatal(self, workspace):
        big = workspace["tmp"] / "huge_order.spec"
        big.write_text("0:0^1*250:0^1\n")  # order 250 on n=600: no spaced positions
        out = workspace["tmp"] / "failrow.csv"
        rc, _ = run_cli(
            "select", "--data", str(workspace["data"]),
            "--spec", str(workspace["spec1"]), "--spec", str(workspace["spec2"]),
            "--spec", str(big), "--seed", "1", "--out", str(out),
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 4
        good = [line.split(",") for line in lines[1:3]]
        for row in good:
            assert np.isfinite(float(row[3]))  # aic column
        failed_row = lines[3].split(",")
        assert failed_row[1] == "" and "too large" in lines[3]

    def test_bivariate_binary_real_four_specs(self, workspace, tmp_path):
        rng = np.random.default_rng(42)
        n = 400
        z = gaussian.simulate_ar(gaussian.ClassicalARParams([0.6], 0.5), n, seed=9).data[:, 0]
        prob = 1.0 / (1.0 + np.exp(-(np.roll(z, 1))))
        b = (rng.random(n) < prob).astype(float)
        data = np.column_stack([b, z])
        path = tmp_path / "bi.csv"
        core.TimeSeries(data, kinds=("binary", "real")).to_csv(path)
        (tmp_path / "bi.csv.meta.json").write_text(json.dumps({"kinds": ["binary", "real"]}))

        blocks = {
            "k4": [(1, 1, 1)],
            "k8a": [(1, 1, 1), (1, 1, 2)],
            "k8b": [(1, 1, 1), (1, 2, 1)],
            "k16": [(1, 1, 1), (1, 1, 2), (1, 2, 1), (1, 2, 2)],
        }
        spec_paths = []
        for name, blk in blocks.items():
            spec_path = tmp_path / f"{name}.spec"
            core.kron_spec(2, blk).save(spec_path)
            spec_paths.append(str(spec_path))
        out = tmp_path / "bi_sel.csv"
        args = ["select", "--data", str(path), "--seed", "5", "--splits", "5", "--out", str(out)]
        for sp in spec_paths:
            args += ["--spec", sp]
        rc, text = run_cli(*args)
        assert rc == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        assert len(rows) == 4
        aics = [float(r[3]) for r in rows]
        assert all(np.isfinite(aics))
        assert len({r[1] for r in rows}) >= 2  # K column distinguishes the specs


class TestBenchmark:
    def test_small_manifest(self, workspace):
        man = workspace["tmp"] / "man.json"
        man.write_text(
            json.dumps(
                {
                    "seed": 99,
                    "repetitions": 3,
                    "time_limit_s": 300,
                    "cells": [
                        {
                            "label": "AR(1)",
                            "model": {"kind": "ar", "phi": [0.5], "sigma2": 0.5},
                            "n": 200,
                            "estimators": ["mle", "ple-bipartition", "ple-sgd"],
                            "estimator_options": {"ple-sgd": {"eta": 0.01, "iters": 2000}},
                        }
                    ],
                }
            )
        )
        prefix = workspace["tmp"] / "bench"
        rc, text = run_cli("benchmark", "--manifest", str(man), "--out", str(prefix))
        assert rc == 0
        rows = (prefix.parent / "bench.csv").read_text().splitlines()
        assert rows[0] == "label,estimator,n,reps,mean_error,mean_time_s,status"
        assert len(rows) == 4
        for row in rows[1:]:
            assert float(row.split(",")[4]) < 1.0

    def test_timeout_writes_dashes(self, workspace):
        man = workspace["tmp"] / "man_slow.json"
        man.write_text(
            json.dumps(
                {
                    "seed": 1,
                    "repetitions": 2,
                    "cells": [
                        {
                            "label": "slow",
                            "model": {"kind": "ar", "phi": [0.5], "sigma2": 0.5},
                            "n": 200,
                            "estimators": ["ple-naive"],
                            "time_limit_s": 1e-9,
                        }
                    ],
                }
            )
        )
        prefix = workspace["tmp"] / "bench_slow"
        rc, _ = run_cli("benchmark", "--manifest", str(man), "--out", str(prefix))
        assert rc == 0
        body = (prefix.parent / "bench_slow.csv").read_text()
        assert "--,--" in body and "timeout" in body

    def test_reps_flag_overrides_manifest(self, workspace):
        man = workspace["tmp"] / "man_reps.json"
        man.write_text(
            json.dumps(
                {
                    "seed": 2,
                    "repetitions": 30,
                    "cells": [
                        {
                            "label": "quick",
                            "model": {"kind": "ar", "phi": [0.5], "sigma2": 0.5},
                            "n": 120,
                            "estimators": ["mle"],
                        }
                    ],
                }
            )
        )
        prefix = workspace["tmp"] / "bench_reps"
        rc, _ = run_cli("benchmark", "--manifest", str(man), "--reps", "2", "--out", str(prefix))
        assert rc == 0
        row = (prefix.parent / "bench_reps.csv").read_text().splitlines()[1]
        assert row.split(",")[3] == "2"

    def test_zero_repetitions_rejected(self, workspace):
        man = workspace["tmp"] / "man_zero.json"
        man.write_text(
            json.dumps(
                {
                    "repetitions": 0,
                    "cells": [
                        {
                            "label": "x",
                            "model": {"kind": "ar", "phi": [0.5], "sigma2": 0.5},
                            "n": 100,
                            "estimators": ["mle"],
                        }
                    ],
                }
            )
        )
        rc, _ = run_cli("benchmark", "--manifest", str(man), "--out", str(workspace["tmp"] / "z"))
        assert rc == cli.EXIT_VALIDATION

    def test_var_cell(self, workspace):
        man = workspace["tmp"] / "man_var.json"
        man.write_text(
            json.dumps(
                {
                    "seed": 5,
                    "repetitions": 2,
                    "cells": [
                        {
                            "label": "VAR(1)",
                            "model": {
                                "kind": "var",
                                "A": [[0.5, 0.1], [0.1, 0.5]],
                                "Sigma": [[0.5, 0.0], [0.0, 0.5]],
                            },
                            "n": 300,
                            "estimators": ["mle", "ple-bipartition"],
                        }
                    ],
                }
            )
        )
        prefix = workspace["tmp"] / "bench_var"
        rc, _ = run_cli("benchmark", "--manifest", str(man), "--out", str(prefix))
        assert rc == 0
        rows = (prefix.parent / "bench_var.csv").read_text().splitlines()[1:]
        assert all(row.split(",")[6] == '"ok"' for row in rows)


class TestVerify:
    def test_fault_injection_breaks_roundtrip(self, workspace):
        out = workspace["tmp"] / "verify_bad.json"
        rc, text = run_cli("verify", "--riccati-rtol", "1e-2", "--out", str(out))
        assert rc == cli.EXIT_NUMERICAL
        report = json.loads(out.read_text())
        failed = {c["name"] for c in report["checks"] if not c["passed"]}
        assert "roundtrip_var1" in failed
