"""CLI dispatch, serialization, exit codes, and the q-expansion disk cache."""

import json

import pytest

from mocktrace.cli import (
    EXIT_DOMAIN,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    dispatch,
    format_jm,
    parse_jm,
)
from mocktrace.modfun import jm_coeffs


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("MOCKTRACE_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


class TestCacheFormat:
    def test_round_trip(self):
        exp = jm_coeffs(2, 12)
        text = format_jm(2, 12, exp.coeffs)
        assert text.startswith("# jm m=2 N=12 version=1\n")
        assert parse_jm(text, 2, 12) == exp.coeffs

    def test_corruption_detected(self):
        exp = jm_coeffs(1, 4)
        text = format_jm(1, 4, exp.coeffs)
        with pytest.raises(ValueError):
            parse_jm(text.replace("m=1", "m=3"), 1, 4)
        with pytest.raises(ValueError):
            parse_jm(text + "garbage\n", 1, 4)


class TestJmCoeffsCommand:
    def test_output_and_cache_file(self, isolated_cache, capsys):
        assert dispatch(["jm", "coeffs", "--m", "1", "--n", "6"]) == EXIT_OK
        out = capsys.readouterr().out
        coeffs = parse_jm(out, 1, 6)
        assert coeffs[0] == 1.0
        assert coeffs[2] == 196884.0
        files = list(isolated_cache.glob("jm_*.txt"))
        assert len(files) == 1

    def test_no_cache_flag(self, isolated_cache, capsys):
        assert dispatch(["--no-cache", "jm", "coeffs", "--m", "1", "--n", "6"]) == EXIT_OK
        assert not isolated_cache.exists() or not list(isolated_cache.glob("jm_*.txt"))

    def test_corrupt_cache_recovers_with_warning(self, isolated_cache, capsys):
        dispatch(["jm", "coeffs", "--m", "1", "--n", "6"])
        good = capsys.readouterr().out
        path = next(isolated_cache.glob("jm_*.txt"))
        path.write_text("# jm m=1 N=6 version=1\nnot-a-number\n")
        assert dispatch(["jm", "coeffs", "--m", "1", "--n", "6"]) == EXIT_OK
        captured = capsys.readouterr()
        assert captured.out == good
        assert "warning" in captured.err

    def test_idempotent_across_cache_deletion(self, isolated_cache, capsys):
        dispatch(["jm", "coeffs", "--m", "3", "--n", "8"])
        first = capsys.readouterr().out
        for f in isolated_cache.glob("jm_*.txt"):
            f.unlink()
        dispatch(["jm", "coeffs", "--m", "3", "--n", "8"])
        second = capsys.readouterr().out
        assert first == second


class TestTraceCommand:
    def test_reference_trace_json(self, capsys):
        assert dispatch(["trace", "--d", "1", "--D", "1", "--m", "1"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"] == pytest.approx(-16.0284504, abs=1e-3)
        assert payload["method"] == "cusp_cycle"
        assert json.loads(json.dumps(payload)) == payload

    def test_cm_trace(self, capsys):
        assert dispatch(["trace", "--d", "-3", "--D", "1", "--m", "1"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"] == pytest.approx(-248.0, abs=1e-6)

    def test_domain_error_exit_code(self, capsys):
        assert dispatch(["trace", "--d", "0", "--D", "1", "--m", "1"]) == EXIT_DOMAIN
        assert "error" in capsys.readouterr().err


class TestQformsCommand:
    def test_disc_four_lists_two_forms(self, capsys):
        assert dispatch(["qforms", "list", "--disc", "4"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        forms = [json.loads(line) for line in lines]
        assert forms == [{"a": 0, "b": 2, "c": 0}, {"a": 1, "b": 2, "c": 0}]

    def test_negative_disc_includes_stab_order(self, capsys):
        assert dispatch(["qforms", "list", "--disc", "-4"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out.strip())
        assert payload["stab_order"] == 2


class TestVerifyCommands:
    def test_values_pass(self, capsys):
        assert dispatch(["verify", "values"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["pass"] is True

    def test_symmetry_pass_small(self, capsys):
        assert dispatch(["verify", "symmetry", "--cmax", "15"]) == EXIT_OK

    def test_kloosterman_pass_small(self, capsys):
        assert dispatch(["verify", "kloosterman", "--cmax", "8"]) == EXIT_OK

    def test_prop1_small_bound(self, capsys):
        args = ["verify", "prop1", "--d", "1", "--D", "1", "--m", "0", "--s", "2",
                "--bound", "80", "--cmax", "2000"]
        assert dispatch(args + ["--tol", "0.01"]) == EXIT_OK
        capsys.readouterr()
        assert dispatch(args + ["--tol", "1e-9"]) == EXIT_VERIFY


class TestTableCommand:
    def test_skips_bad_residues_and_routes(self, capsys):
        args = ["table", "--D", "1", "--m", "1", "--d-min", "1", "--d-max", "9"]
        assert dispatch(args) == EXIT_OK
        out = capsys.readouterr().out
        rows = out.strip().splitlines()
        assert rows[0].startswith("d,D,m,")
        body = [r.split(",") for r in rows[1:]]
        assert len(body) == 9
        methods = {r[0]: r[4] for r in body}
        assert methods["2"] == "skipped"
        assert methods["5"] == "closed_cycle"
        assert methods["4"] == "cusp_cycle"

    def test_warm_cache_byte_identical(self, capsys):
        args = ["table", "--D", "1", "--m", "1", "--d-min", "4", "--d-max", "5"]
        assert dispatch(args) == EXIT_OK
        first = capsys.readouterr().out
        assert dispatch(args) == EXIT_OK
        second = capsys.readouterr().out
        assert first == second


class TestUsage:
    def test_unknown_command(self, capsys):
        assert dispatch(["bogus"]) == EXIT_USAGE

    def test_unknown_flag(self, capsys):
        assert dispatch(["trace", "--d", "1", "--D", "1", "--m", "1", "--zzz"]) == EXIT_USAGE
