"""Tests for app/utils/decorators.py"""

from types import SimpleNamespace

import app.main  # noqa: F401  routes structlog through stdlib logging on stderr
from app.exceptions import DisconnectedError, UsageError
from app.utils.decorators import EXIT_DOMAIN_ERROR, EXIT_OK, EXIT_USAGE_ERROR, report_error, spectra_command


@spectra_command("demo")
def demo_command(run):
    if run.fail == "domain":
        raise DisconnectedError("quotient graph is not connected")
    if run.fail == "usage":
        raise UsageError("--grid: expected a positive integer")
    return ["first", "second"]


class TestReportError:
    """Test error code mapping."""

    def test_domain_error(self, capsys):
        """Domain errors exit with 1 and print their code."""
        assert report_error(DisconnectedError("no path")) == EXIT_DOMAIN_ERROR
        assert capsys.readouterr().err == "error: Disconnected: no path\n"

    def test_usage_error(self, capsys):
        """Usage errors exit with 2."""
        assert report_error(UsageError("bad flag")) == EXIT_USAGE_ERROR
        assert "error: Usage: bad flag" in capsys.readouterr().err


class TestSpectraCommand:
    """Test the subcommand wrapper."""

    def test_success_writes_header(self, capsys):
        """Reports start with the versioned header."""
        assert demo_command(SimpleNamespace(fail=None, out=None)) == EXIT_OK
        assert capsys.readouterr().out == "# lattice-spectra demo v1\nfirst\nsecond\n"

    def test_out_file(self, tmp_path, capsys):
        """--out sends the report to a file instead of stdout."""
        target = tmp_path / "report.txt"
        assert demo_command(SimpleNamespace(fail=None, out=str(target))) == EXIT_OK
        assert target.read_text() == "# lattice-spectra demo v1\nfirst\nsecond\n"
        assert capsys.readouterr().out == ""

    def test_domain_failure(self, capsys):
        """Nothing reaches stdout when the handler fails."""
        assert demo_command(SimpleNamespace(fail="domain", out=None)) == EXIT_DOMAIN_ERROR
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "Disconnected" in captured.err

    def test_usage_failure(self):
        assert demo_command(SimpleNamespace(fail="usage", out=None)) == EXIT_USAGE_ERROR

    def test_unwritable_out(self, tmp_path):
        """An output path inside a missing directory is a domain failure."""
        target = tmp_path / "missing" / "report.txt"
        assert demo_command(SimpleNamespace(fail=None, out=str(target))) == EXIT_DOMAIN_ERROR

    def test_command_name(self):
        assert demo_command.command_name == "demo"
