import json

import pytest

from casebias.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_neff_default_grid(tmp_path):
    assert run(tmp_path, "neff", "--f", "0.026") == 0
    lines = (tmp_path / "neff_table.csv").read_text().strip().split("\n")
    assert lines[0] == "ybar,1.2,1.4,1.6,1.8,2"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[0] == "0.016"
    assert abs(float(first[1]) - 1598) <= 1


def test_neff_missing_required():
    assert main(["neff"]) == 1


def test_neff_fp_without_fn(tmp_path):
    assert run(tmp_path, "neff", "--f", "0.026", "--fp", "0.005") == 1


def test_neff_equal_rates_exit_2(tmp_path):
    assert run(tmp_path, "neff", "--f", "0.026", "--m-grid", "1") == 2


def test_sensitivity_direct(tmp_path):
    assert (
        run(
            tmp_path,
            "sensitivity",
            "--survey-prev", "0.159",
            "--observed-prev", "0.325",
            "--f", "0.001",
            "--fp", "0.005",
            "--fn", "0.172",
        )
        == 0
    )
    payload = json.loads((tmp_path / "sensitivity.json").read_text())
    assert payload["outputs"]["m"] == pytest.approx(2.29, abs=0.05)
    assert payload["outputs"]["error"] == pytest.approx(0.166, abs=1e-9)
    assert set(payload) == {"inputs", "outputs", "flags"}


def test_sensitivity_infeasible_exit_2(tmp_path):
    # A small anchor cannot produce a large negative error; no differential fits.
    assert (
        run(
            tmp_path,
            "sensitivity",
            "--survey-prev", "0.5",
            "--observed-prev", "0.01",
            "--ybar-anchor", "0.05",
            "--f", "0.001",
            "--fp", "0.005",
            "--fn", "0.172",
        )
        == 2
    )


def test_sensitivity_series_mode(tmp_path):
    series = tmp_path / "cases.csv"
    series.write_text(
        "date,total_tests,positive_tests\n"
        "2020-04-18,10000,2800\n"
        "2020-04-19,11000,3200\n"
        "2020-04-20,10500,3000\n"
    )
    code = run(
        tmp_path,
        "sensitivity",
        "--series", str(series),
        "--date", "2020-04-20",
        "--survey-raw", "0.139",
        "--f", "0.001",
        "--fp", "0.005",
        "--fn", "0.172",
        "--alpha", "0.3",
    )
    assert code == 0
    payload = json.loads((tmp_path / "sensitivity.json").read_text())
    assert payload["outputs"]["m"] > 1.0


def test_sensitivity_series_requires_date(tmp_path):
    series = tmp_path / "cases.csv"
    series.write_text("date,total_tests,positive_tests\n2020-04-18,10,1\n")
    assert (
        run(
            tmp_path,
            "sensitivity",
            "--series", str(series),
            "--survey-raw", "0.139",
            "--f", "0.001",
            "--fp", "0.005",
            "--fn", "0.172",
        )
        == 1
    )


def test_mc_verify_zero_reps_is_validation_error(tmp_path):
    assert run(tmp_path, "mc-verify", "--seed", "1", "--reps", "0") == 1


def test_mc_verify_missing_seed(tmp_path):
    assert run(tmp_path, "mc-verify", "--reps", "100") == 1


def test_mc_verify_passes(tmp_path):
    assert run(tmp_path, "mc-verify", "--seed", "3", "--reps", "300", "--size", "5000") == 0
    payload = json.loads((tmp_path / "mc_verify.json").read_text())
    assert payload["outputs"]["all_passed"] is True
    assert payload["outputs"]["checks"]["exact_identity"]["passed"] is True


def test_decompose_analytic(tmp_path):
    code = run(
        tmp_path,
        "decompose",
        "--ybar", "0.091", "--f", "0.026", "--m", "2",
        "--fp", "0.005", "--fn", "0.172",
    )
    assert code == 0
    payload = json.loads((tmp_path / "decomposition.json").read_text())
    assert payload["outputs"]["rho_iy"] == pytest.approx(0.043, abs=1e-3)


def test_decompose_empirical_requires_seed(tmp_path):
    assert (
        run(
            tmp_path,
            "decompose",
            "--ybar", "0.091", "--f", "0.026", "--m", "2",
            "--empirical", "true",
        )
        == 1
    )


def test_decompose_empirical_identity(tmp_path):
    code = run(
        tmp_path,
        "decompose",
        "--ybar", "0.091", "--f", "0.026", "--m", "2",
        "--fp", "0.005", "--fn", "0.172",
        "--empirical", "true", "--size", "20000", "--seed", "11",
    )
    assert code == 0
    payload = json.loads((tmp_path / "decomposition.json").read_text())
    assert abs(payload["outputs"]["identity_residual"]) < 1e-10


def test_sir_writes_trajectory(tmp_path):
    code = run(tmp_path, "sir", "--beta", "1.4", "--gamma-rec", "0.2", "--horizon", "50")
    assert code == 0
    lines = (tmp_path / "trajectory.csv").read_text().strip().split("\n")
    assert lines[0] == "time,S,I,R,K,prevalence"
    assert len(lines) == 51


def test_bias_curves_and_rt_gap(tmp_path):
    assert run(tmp_path, "bias-curves", "--horizon", "60") == 0
    lines = (tmp_path / "bias_curves.csv").read_text().strip().split("\n")
    assert lines[0] == "step,M,ratio_bias,rt_bias"
    assert run(tmp_path, "rt-gap", "--horizon", "60") == 0
    lines = (tmp_path / "rt_gap.csv").read_text().strip().split("\n")
    assert lines[0] == "step,true_rt_A,true_rt_B,est_rt_A,est_rt_B,true_gap,est_gap"


def test_compare_outputs(tmp_path):
    code = run(
        tmp_path,
        "compare",
        "--n1", "328e6", "--n2", "38e6",
        "--f1", "0.023", "--f2", "0.023",
        "--ybar1", "0.1", "--ybar2", "0.1",
        "--neff1", "15", "--neff2", "15",
    )
    assert code == 0
    payload = json.loads((tmp_path / "compare.json").read_text())
    assert payload["outputs"]["population_adjustment"] == pytest.approx(5835.64, abs=0.1)
    assert payload["outputs"]["z_eff"] == 0.0


def test_allocate(tmp_path):
    strata = tmp_path / "strata.csv"
    strata.write_text("stratum_id,share,prevalence\na,0.8,0.01\nb,0.2,0.25\n")
    assert run(tmp_path, "allocate", "--strata", str(strata), "--n", "1000") == 0
    lines = (tmp_path / "allocation.csv").read_text().strip().split("\n")
    assert lines[1].endswith("479,800")
    payload = json.loads((tmp_path / "allocation.json").read_text())
    assert payload["outputs"]["neyman_variance"] <= payload["outputs"]["proportional_variance"]


def test_config_file_and_override(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("# scenario\nf = 0.026\nybar-grid = 0.016,0.096\n")
    out1 = tmp_path / "a"
    assert main(["neff", "--config", str(config), "--out", str(out1)]) == 0
    lines = (out1 / "neff_table.csv").read_text().strip().split("\n")
    assert len(lines) == 3
    # flag overrides the config value
    out2 = tmp_path / "b"
    assert main(
        ["neff", "--config", str(config), "--ybar-grid", "0.016", "--out", str(out2)]
    ) == 0
    assert len((out2 / "neff_table.csv").read_text().strip().split("\n")) == 2


def test_config_unknown_key(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("not_a_key = 3\n")
    assert main(["neff", "--config", str(config), "--f", "0.026"]) == 1


def test_no_subcommand_is_validation_error():
    assert main([]) == 1


def test_emitted_csvs_reparse_under_their_schema(tmp_path):
    strata = tmp_path / "strata.csv"
    strata.write_text("stratum_id,share,prevalence\na,0.8,0.01\nb,0.2,0.25\n")
    runs = {
        "neff_table.csv": ["neff", "--f", "0.026"],
        "trajectory.csv": ["sir", "--beta", "1.4", "--gamma-rec", "0.2", "--horizon", "20"],
        "bias_curves.csv": ["bias-curves", "--horizon", "20"],
        "rt_gap.csv": ["rt-gap", "--horizon", "20"],
        "allocation.csv": ["allocate", "--strata", str(strata), "--n", "100"],
    }
    import csv as csv_mod

    for filename, args in runs.items():
        out = tmp_path / filename.replace(".csv", "")
        assert main([*args, "--out", str(out)]) == 0
        with open(out / filename, newline="") as handle:
            rows = list(csv_mod.reader(handle))
        header = rows[0]
        assert len(rows) > 1
        for row in rows[1:]:
            assert len(row) == len(header)
            for cell in row[1:]:
                float(cell)  # numeric payload throughout


def test_bad_flag_value_names_option(tmp_path, capsys):
    assert run(tmp_path, "neff", "--f", "not_a_number") == 1
    assert "--f" in capsys.readouterr().err
