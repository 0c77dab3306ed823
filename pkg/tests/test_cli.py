from unittest.mock import patch

import pytest
from click.testing import CliRunner

import mrpchan.__main__ as main_module
from mrpchan.__main__ import main
from mrpchan.core import InfeasibleConstraintsError, RpPlacement
from mrpchan.reproduce import ComparisonRow

SUMMARY = {
    "ds_mean_ns": 33.0,
    "ds_lg_std": 0.12,
    "ds_std_ns": 9.0,
    "as_az_mean_deg": 90.0,
    "as_az_lg_std": 0.05,
    "as_az_std_deg": 12.0,
    "realizations": 1,
}


@pytest.mark.parametrize(
    "args",
    [
        ["--help"],
        ["simulate", "--help"],
        ["optimize", "--help"],
        ["reproduce", "--help"],
        ["replay", "--help"],
    ],
)
def test_help(args):
    runner = CliRunner()
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output


def test_simulate_rps(tempdir_path):
    with patch.object(main_module, "_simulate", return_value=SUMMARY) as mock_simulate:
        runner = CliRunner()
        result = runner.invoke(
            main,
            [
                "simulate",
                "--out",
                str(tempdir_path),
                "--rp",
                "6.19,0",
                "--rp",
                "6.5,130.69,80",
                "--seed",
                "3",
            ],
        )
        assert result.exit_code == 0, result.output
        assert "DS 33.00 ns (log10 std 0.120)" in result.output

        _, kwargs = mock_simulate.call_args
        assert kwargs["placement"] == RpPlacement(
            (6.19, 6.5), (0.0, 130.69), (90.0, 80.0)
        )
        assert kwargs["seed"] == 3


def test_simulate_average(tempdir_path):
    with patch.object(main_module, "_simulate", return_value=SUMMARY) as mock_simulate:
        runner = CliRunner()
        result = runner.invoke(
            main, ["simulate", "--out", str(tempdir_path), "--average", "3"]
        )
        assert result.exit_code == 0, result.output
        _, kwargs = mock_simulate.call_args
        placement = kwargs["placement"]
        assert placement.aod_deg == (0.0, 120.0, 240.0)
        assert placement.distances_m == pytest.approx((6.95,) * 3, abs=0.01)


@pytest.mark.parametrize(
    "args, message",
    [
        (["--rp", "6.19"], "doesn't match that form"),
        (["--rp", "a,b"], "doesn't match that form"),
        (["--rp", "6,0", "--average", "2"], "Pass either"),
        ([], "Pass either"),
    ],
)
def test_simulate_usage_errors(tempdir_path, args, message):
    with patch.object(main_module, "_simulate"):
        runner = CliRunner()
        result = runner.invoke(main, ["simulate", "--out", str(tempdir_path)] + args)
        assert result.exit_code == 2, result.output
        assert message in result.output


def test_optimize_infeasible(tempdir_path):
    error = InfeasibleConstraintsError("aod_separation", "no room for 5 RPs")
    with patch.object(main_module, "_optimize", side_effect=error):
        runner = CliRunner()
        result = runner.invoke(main, ["optimize", "--out", str(tempdir_path)])
        assert result.exit_code == 3, result.output
        assert "aod_separation" in result.output


def test_stats(tempdir_path):
    path = tempdir_path / "paths.csv"
    path.write_text("delay_ns,aod_deg,zod_deg,power_db\n0,350,,-80\n2,10,,-80\n")
    runner = CliRunner()
    result = runner.invoke(main, ["stats", str(path)])
    assert result.exit_code == 0, result.output
    assert result.output.splitlines() == [
        "PL -76.9897 dB",
        "DS 1.0000 ns",
        "AS 10.0000 deg",
        "ZS 0.0000 deg",
    ]


def test_stats_malformed(tempdir_path):
    path = tempdir_path / "paths.csv"
    path.write_text("delay_ns,aod_deg,power_db\n-1,0,-80\n")
    runner = CliRunner()
    result = runner.invoke(main, ["stats", str(path)])
    assert result.exit_code == 1, result.output
    assert "line" in result.output


def test_invalid_config(tempdir_path):
    config = tempdir_path / "run.yaml"
    config.write_text("ga:\n  population_size: -4\n")
    path = tempdir_path / "paths.csv"
    path.write_text("delay_ns,aod_deg,power_db\n0,0,-80\n")
    runner = CliRunner()
    result = runner.invoke(main, ["stats", "--config", str(config), str(path)])
    assert result.exit_code == 1, result.output
    assert "Invalid configuration" in result.output


def test_synth_measure_then_padp(tempdir_path):
    measured = tempdir_path / "measured.csv"
    runner = CliRunner()
    result = runner.invoke(
        main, ["synth-measure", "--count", "20", "--out", str(measured)]
    )
    assert result.exit_code == 0, result.output
    assert f"Wrote 20 paths to {measured}" in result.output

    padp_out = tempdir_path / "padp.csv"
    result = runner.invoke(main, ["padp", str(measured), "--out", str(padp_out)])
    assert result.exit_code == 0, result.output
    assert padp_out.exists()


def test_reproduce_distances(tempdir_path):
    runner = CliRunner()
    result = runner.invoke(main, ["reproduce", "distances", "--out", str(tempdir_path)])
    assert result.exit_code == 0, result.output
    assert "Q=1: 5.22 m" in result.output
    assert "Q=5: 7.94 m" in result.output
    assert (tempdir_path / "manifest.json").exists()


ROWS = [
    ComparisonRow("measured", 0, 32.92, 89.98, None, None, 32.92, 89.98),
    ComparisonRow("average_1", 1, 24.85, 42.0, 24.51, 53.32, 24.85, 42.0),
]


@pytest.mark.parametrize("target", ["table2", "spread-table"])
def test_reproduce_table_targets(tempdir_path, target):
    with patch.object(main_module, "_reproduce", return_value=ROWS) as mock_reproduce:
        runner = CliRunner()
        result = runner.invoke(main, ["reproduce", target, "--out", str(tempdir_path)])
        assert result.exit_code == 0, result.output
        args, _ = mock_reproduce.call_args
        assert args[1] == "table2"
    assert "average_1: DS 24.85 ns, AS 42.00 deg  errors 24.51% / 53.32%" in (
        result.output
    )


def test_reproduce_unknown_target(tempdir_path):
    runner = CliRunner()
    result = runner.invoke(main, ["reproduce", "table9", "--out", str(tempdir_path)])
    assert result.exit_code == 2, result.output


def test_stats_layout(tempdir_path):
    path = tempdir_path / "paths.csv"
    path.write_text("delay_ns,aod_deg,zod_deg,power_db\n20,0,,-80\n40,90,,-80\n")
    runner = CliRunner()
    result = runner.invoke(main, ["stats", str(path), "--layout"])
    assert result.exit_code == 2, result.output
    assert "needs `--out`" in result.output

    out = tempdir_path / "out"
    result = runner.invoke(main, ["stats", str(path), "--out", str(out), "--layout"])
    assert result.exit_code == 0, result.output
    assert (out / "layout.csv").exists()
