"""
Unit tests for the entry point module.
"""

import argparse
import logging
from pathlib import Path
from unittest.mock import MagicMock, patch

import pytest

from robust_bond_pricer.__main__ import EXIT_FAILURE, main, parse_args, run_pricer
from robust_bond_pricer.model import ConfigError
from robust_bond_pricer.runner import RunError

_BOUNDS_DOCUMENT = """
command: bounds
jacobi: {lambda_lo: 0.01, lambda_hi: 0.1, alpha: 0.5, beta: 0.3, lambda_mean: 0.04, lambda_0: 0.05}
schedule:
  pairs: [[0, 1]]
"""


def _args(config_file: str, **overrides) -> argparse.Namespace:
    values = dict(config_file=config_file, out=None, output_format=None, seed=None, quiet=False, verbose=False)
    values.update(overrides)
    return argparse.Namespace(**values)


class TestParseArgs:
    """Tests for the parse_args function."""

    def test_parse_args_minimal(self):
        args = parse_args(["--config", "run.yaml"])
        assert args.config_file == "run.yaml"
        assert args.out is None
        assert args.output_format is None
        assert args.seed is None
        assert not args.quiet
        assert not args.verbose

    def test_parse_args_with_values(self):
        args = parse_args(["--config", "run.yaml", "--out", "out.json", "--format", "json", "--seed", "11", "--verbose"])
        assert args.out == "out.json"
        assert args.output_format == "json"
        assert args.seed == 11
        assert args.verbose

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["--config", "run.yaml", "--format", "xml"],
            ["--config", "run.yaml", "--quiet", "--verbose"],
            ["--config", "run.yaml", "--seed", "many"],
        ],
    )
    def test_parse_args_rejects(self, argv: list):
        with pytest.raises(SystemExit) as error:
            parse_args(argv)
        assert error.value.code == 2


class TestRunPricer:
    """Tests for the run_pricer function."""

    def test_writes_to_stdout(self, tmp_path: Path, capsys: pytest.CaptureFixture):
        config_file = tmp_path / "run.yaml"
        config_file.write_text(_BOUNDS_DOCUMENT, encoding="utf-8")
        assert run_pricer(_args(str(config_file))) == 0
        assert capsys.readouterr().out.startswith("lambda_lo,lambda_hi,alpha,beta,lambda_mean,lambda_0,t,T,lower,upper")

    def test_writes_to_file(self, tmp_path: Path, capsys: pytest.CaptureFixture):
        config_file = tmp_path / "run.yaml"
        config_file.write_text(_BOUNDS_DOCUMENT, encoding="utf-8")
        target = tmp_path / "out.json"
        assert run_pricer(_args(str(config_file), out=str(target), output_format="json")) == 0
        assert target.read_text(encoding="utf-8").startswith("[")
        assert capsys.readouterr().out == ""

    def test_missing_configuration(self, tmp_path: Path):
        assert run_pricer(_args(str(tmp_path / "missing.yaml"))) == EXIT_FAILURE

    def test_invalid_configuration(self, tmp_path: Path):
        config_file = tmp_path / "run.yaml"
        config_file.write_text("command: bounds\n", encoding="utf-8")
        assert run_pricer(_args(str(config_file))) == EXIT_FAILURE

    def test_negative_seed_override(self, tmp_path: Path):
        config_file = tmp_path / "run.yaml"
        config_file.write_text(_BOUNDS_DOCUMENT, encoding="utf-8")
        assert run_pricer(_args(str(config_file), seed=-1)) == EXIT_FAILURE

    @pytest.mark.parametrize(
        "error",
        [
            ConfigError("jacobi", "block is required"),
            RunError("bond_bounds", ArithmeticError("overflow")),
            OSError("disk full"),
        ],
    )
    def test_failures_map_to_exit_failure(self, tmp_path: Path, error: Exception):
        with patch("robust_bond_pricer.__main__.RunConfig") as mock_config, patch(
            "robust_bond_pricer.__main__.run", side_effect=error
        ):
            mock_config.from_config_file.return_value.with_overrides.return_value = MagicMock()
            assert run_pricer(_args("run.yaml")) == EXIT_FAILURE

    def test_failing_pass_flag(self):
        outcome = MagicMock(exit_status=1)
        with patch("robust_bond_pricer.__main__.RunConfig") as mock_config, patch(
            "robust_bond_pricer.__main__.run", return_value=outcome
        ):
            mock_config.from_config_file.return_value.with_overrides.return_value.output.path = "out.csv"
            assert run_pricer(_args("run.yaml", out="out.csv")) == 1


class TestMain:
    """Tests for the main function."""

    @pytest.mark.parametrize("status", [0, 1, 2])
    def test_main_exits_with_run_status(self, status: int):
        with patch("robust_bond_pricer.__main__.init_logger_config") as mock_init_logger, patch(
            "robust_bond_pricer.__main__.run_pricer", return_value=status
        ) as mock_run_pricer:
            with pytest.raises(SystemExit) as error:
                main(["--config", "run.yaml"])

        assert error.value.code == status
        mock_init_logger.assert_called_once_with(level=logging.INFO)
        mock_run_pricer.assert_called_once()
        assert mock_run_pricer.call_args.args[0].config_file == "run.yaml"

    @pytest.mark.parametrize("flag, level", [("--quiet", logging.WARNING), ("--verbose", logging.DEBUG)])
    def test_main_verbosity(self, flag: str, level: int):
        with patch("robust_bond_pricer.__main__.init_logger_config") as mock_init_logger, patch(
            "robust_bond_pricer.__main__.run_pricer", return_value=0
        ):
            with pytest.raises(SystemExit):
                main(["--config", "run.yaml", flag])

        mock_init_logger.assert_called_once_with(level=level)
