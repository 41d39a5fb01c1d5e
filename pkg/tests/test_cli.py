import csv
import io
import json

import pytest

from quasiyamabe.cli import builtins as registry
from quasiyamabe.cli.main import main, run_checks
from quasiyamabe.cli.scenario import InputError, compile_scenario, parse_text, serialize

ALL = registry.names()


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
    return str(p)


def constant_f():
    return {
        "name": "constant-f",
        "chart": {"coordinates": ["x", "y"]},
        "metric": [[1, 0], [0, 1]],
        "fields": {"f": "3"},
        "checks": ["fit-report"],
    }


class TestBuiltins:
    def test_listing(self, capsys):
        code, out, _ = invoke(capsys, "builtin", "--list")
        assert code == 0
        assert out.split() == sorted(ALL)
        assert len(ALL) == 9

    @pytest.mark.parametrize("name", ALL)
    def test_round_trip(self, name):
        text = serialize(registry.builtin(name))
        assert serialize(parse_text(text.encode("utf-8"))) == text

    def test_documented_fields(self):
        assert registry.builtin("hyperbolic-halfspace")["metric"][2][2] == "z^(-2)"
        assert registry.builtin("paper-example-cylinder")["warped"]["phi"] == "1"
        assert registry.builtin("gaussian-soliton")["fields"]["lambda"] == "-1"

    def test_family_dimensions(self):
        assert len(registry.builtin("euclidean-5")["metric"]) == 5
        assert len(registry.builtin("round-sphere-2")["metric"]) == 2

    def test_unknown(self, capsys):
        code, _, err = invoke(capsys, "builtin", "no-such-thing")
        assert code == 2
        assert "gaussian-soliton" in err

    @pytest.mark.parametrize("name", ALL)
    def test_check_exit_codes(self, name, capsys):
        code, out, _ = invoke(capsys, "check", name)
        report = json.loads(out)
        assert code == 0
        assert report["summary"]["failed"] == 0
        assert [c["id"] for c in report["checks"]] == sorted(c["id"] for c in report["checks"])

    @pytest.mark.parametrize("name", ["gaussian-soliton", "line-exp-warped-witness", "torus-section33"])
    def test_byte_identical(self, name, capsys):
        first = invoke(capsys, "check", name)[1]
        second = invoke(capsys, "check", name)[1]
        assert first == second


class TestErrors:
    def test_malformed_json_offset(self, tmp_path, capsys):
        path = write(tmp_path, '{"name": "x",\n "checks": [1,, 2]}')
        code, _, err = invoke(capsys, "check", path)
        assert code == 2
        assert "byte offset 28" in err

    def test_offset_counts_bytes(self):
        with pytest.raises(InputError, match="byte offset 17"):
            parse_text('{"name": "éé", ]'.encode("utf-8"))

    def test_schema_path(self, tmp_path, capsys):
        data = registry.builtin("gaussian-soliton")
        data["sampling"]["count"] = "many"
        code, _, err = invoke(capsys, "check", write(tmp_path, data))
        assert code == 2
        assert "$.sampling.count" in err

    def test_bind_error(self, tmp_path, capsys):
        data = constant_f()
        data["fields"]["f"] = "q+1"
        assert invoke(capsys, "check", write(tmp_path, data))[0] == 2

    def test_unknown_check(self, tmp_path, capsys):
        data = constant_f()
        data["checks"] = ["no-such-check"]
        code, _, err = invoke(capsys, "check", write(tmp_path, data))
        assert code == 2 and "no-such-check" in err

    def test_sampling_exhaustion(self, tmp_path, capsys):
        data = registry.builtin("hyperbolic-halfspace")
        data["sampling"]["box"][2] = [-3.0, -1.0]
        assert invoke(capsys, "check", write(tmp_path, data))[0] == 2

    @pytest.mark.parametrize("flag", [["--jet-order", "7"], ["--points", "0"], ["--tol", "-1"]])
    def test_bad_flags(self, flag, capsys):
        assert invoke(capsys, "check", "gaussian-soliton", *flag)[0] == 2

    def test_missing_file(self, capsys):
        assert invoke(capsys, "check", "/nonexistent/scenario.json")[0] == 2


class TestFit:
    def test_hyperbolic(self, capsys):
        code, out, _ = invoke(capsys, "fit", "hyperbolic-halfspace")
        res = json.loads(out)
        assert code == 0
        assert res["lambda"] == pytest.approx(-7, abs=1e-9)
        assert res["mu"] == pytest.approx(1, abs=1e-9)
        assert res["max_residual"] <= 1e-9

    def test_gaussian(self, capsys):
        res = json.loads(invoke(capsys, "fit", "gaussian-soliton")[1])
        assert res["lambda"] == pytest.approx(-1, abs=1e-9)
        assert res["mu"] == pytest.approx(0, abs=1e-9)

    def test_constant_potential(self, tmp_path, capsys):
        code, out, _ = invoke(capsys, "fit", write(tmp_path, constant_f()))
        res = json.loads(out)
        assert code == 0
        assert "mu not identifiable" in res["notes"]
        assert res["mu_identifiable"] is False and res["lambda"] == pytest.approx(0, abs=1e-12)

    def test_cylinder_has_no_constants(self, capsys):
        code, out, _ = invoke(capsys, "fit", "paper-example-cylinder")
        assert code == 1
        assert json.loads(out)["max_residual"] > 1


class TestReports:
    def test_audits_are_report_only(self, capsys):
        for name in ("paper-example-hyperbolic", "paper-example-cylinder"):
            code, out, _ = invoke(capsys, "check", name)
            rec = {c["id"]: c for c in json.loads(out)["checks"]}["paper-constants-audit"]
            assert code == 0
            assert rec["verdict"] == "report-only" and rec["max"] > 1

    def test_strict_promotes_audits(self, capsys):
        assert invoke(capsys, "check", "paper-example-hyperbolic", "--strict")[0] == 1

    def test_csv(self, capsys):
        code, out, _ = invoke(capsys, "check", "gaussian-soliton", "--format", "csv", "--points", "4")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert rows[0] == ["check", "point", "residual", "tolerance", "verdict", "counted"]
        assert {r[1] for r in rows[1:]} == {"0", "1", "2", "3"}

    def test_report_file(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        code, out, _ = invoke(capsys, "check", "euclidean-n", "--report", str(path))
        assert code == 0 and out == ""
        assert json.loads(path.read_text())["scenario"] == "euclidean-3"

    def test_warp_subcommand(self, capsys):
        code, out, _ = invoke(capsys, "warp", "line-exp-warped-witness")
        ids = {c["id"] for c in json.loads(out)["checks"]}
        assert code == 0
        assert "theorem3" in ids and "rrr" not in ids
        assert invoke(capsys, "warp", "gaussian-soliton")[0] == 2

    def test_perturbed_witness_fails(self, tmp_path, capsys):
        data = registry.builtin("line-exp-warped-witness")
        data["fields"]["lambda"] = "2*exp(-2*t)-7+0.1"
        data["checks"] = ["e36", "theorem3"]
        code, out, _ = invoke(capsys, "check", write(tmp_path, data))
        verdicts = {c["id"]: c["verdict"] for c in json.loads(out)["checks"]}
        assert code == 1
        assert verdicts == {"e36": "pass", "theorem3": "fail"}

    def test_tolerance_precedence(self):
        setup = compile_scenario(registry.builtin("gaussian-soliton"))
        rep = run_checks(setup, [{"id": "scal", "expected": 0, "tol": 0.5}, {"id": "bochner"}], tol=1e-3)
        tols = {c["id"]: c["tolerance"] for c in rep["checks"]}
        assert tols == {"bochner": 1e-3, "scal": 0.5}

    def test_seed_and_points_override(self, capsys):
        a = json.loads(invoke(capsys, "check", "euclidean-n", "--seed", "5", "--points", "3")[1])
        b = json.loads(invoke(capsys, "check", "euclidean-n", "--seed", "6", "--points", "3")[1])
        assert a["environment"]["points"] == 3 and a["environment"]["seed"] == 5
        assert a["sample_points"] != b["sample_points"]
