import json
from collections import defaultdict

import pytest
from click.testing import CliRunner

from curvlab.audits import AUDITS
from curvlab.chart_lab import CHART_KINDS
from curvlab.cli import main
from curvlab.gallery import ConfigError, expand, load_config, parse_config, run_gallery


@pytest.fixture(scope="module")
def default_report():
    return run_gallery(load_config(), meta=False)


def write_config(tmp_path, cases, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"cases": cases}))
    return str(path)


def invoke(*args):
    return CliRunner().invoke(main, list(args))


THREE = {"name": "three_curvature_5", "source": "hypersurface", "g": "identity",
         "H": [1, 1, -1, -1, 0], "epsilon": 1, "kappa_tilde": 0}


class TestDefaultGallery:
    def test_all_pass(self, default_report):
        s = default_report["summary"]
        assert s["status"] == "pass" and s["failed"] == 0 and s["errored"] == 0
        assert s["total"] == len(default_report["cases"]) >= 80

    def test_every_audit_reachable(self, default_report):
        held = defaultdict(set)
        for case in default_report["cases"]:
            for a in case["audits"]:
                held[a["name"]] |= {b for b, st in a["branches"].items() if st == "holds"}
        assert set(AUDITS) <= {k for k, v in held.items() if v}

    def test_named_cases(self, default_report):
        cases = {c["name"]: c for c in default_report["cases"]}
        roter = cases["clifford_5_2"]["classification"]["roter"]
        assert (roter["phi"], roter["mu"], roter["eta"]) == pytest.approx((6, -18, 55))
        three = cases["three_curvature_5"]
        assert three["classification"]["alpha"] == pytest.approx(-1)
        thm5x = next(a for a in three["audits"] if a["name"] == "thm5x")
        assert thm5x["branches"]["thm51"] == "holds"
        for i in (0, 1):
            rn = next(a for a in cases[f"rn_ds_standard[{i}]"]["audits"] if a["name"] == "remark25")
            assert rn["branches"]["v"] == "holds"
            assert max(v for k, v in rn["residuals"].items() if k.startswith("v.")) <= 1e-6

    def test_constant_spread(self, default_report):
        spread = default_report["summary"]["constant_spread"]
        assert "rn_ds_standard" in spread and "three_curvature_5" not in spread
        # the RN Roter phi depends on r, so it is not constant across the two points
        assert spread["rn_ds_standard"]["roter.phi"] > 1
        assert spread["fuzz_n5"]["pseudosymmetric.L_R"] >= 0

    def test_report_schema(self, default_report):
        case = default_report["cases"][0]
        assert {"name", "classification", "audits", "status"} <= set(case)
        assert {"name", "premise", "residuals", "constants"} <= set(case["audits"][0])
        assert "meta" not in default_report and "wall_time" not in case


class TestVerify:
    def test_default_exit_zero(self, tmp_path):
        out = tmp_path / "r.json"
        result = invoke("verify", "--no-meta", "--out", str(out))
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text())["summary"]["status"] == "pass"

    def test_empty_config(self, tmp_path):
        result = invoke("verify", "--config", write_config(tmp_path, []), "--no-meta")
        assert result.exit_code == 0
        report = json.loads(result.stdout)
        assert report["cases"] == [] and report["summary"]["total"] == 0

    def test_negative_control(self, tmp_path):
        cfg = write_config(tmp_path, [{**THREE, "assert": ["condition_star"]}])
        result = invoke("verify", "--config", cfg, "--no-meta")
        assert result.exit_code == 1
        assert "three_curvature_5:asserted:condition_star" in result.stderr
        report = json.loads(result.stdout)
        assert report["summary"]["failing"] == ["three_curvature_5:asserted:condition_star"]

    def test_meta_included_by_default(self, tmp_path):
        result = invoke("verify", "--config", write_config(tmp_path, [THREE]))
        report = json.loads(result.stdout)
        assert "wall_time" in report["meta"] and "wall_time" in report["cases"][0]

    @pytest.mark.parametrize("cases", [
        [{"name": "x", "source": "chart", "kind": "kerr"}],
        [{**THREE, "checks": ["thm99"]}],
        [THREE, THREE],
        [{"name": "x", "source": "mesh"}],
        [{**THREE, "assert": ["flatness"]}],
        [{**THREE, "tol_overrides": {"gauss": -1}}],
        [{"name": "a", "source": "algebraic", "n": 2}],
    ])
    def test_config_errors_exit_2(self, tmp_path, cases):
        result = invoke("verify", "--config", write_config(tmp_path, cases))
        assert result.exit_code == 2
        assert "error" in result.stderr

    def test_parse_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{cases: [")
        assert invoke("verify", "--config", str(bad)).exit_code == 2
        assert invoke("verify", "--config", str(tmp_path / "missing.json")).exit_code == 2

    def test_domain_guard_errored(self, tmp_path):
        cfg = write_config(tmp_path, [{"name": "pole", "source": "chart", "kind": "rn_ds",
                                       "params": {"M": 1, "Q": 0.5}, "points": [[0, 3, 0, 0]]}])
        result = invoke("verify", "--config", cfg, "--no-meta")
        assert result.exit_code == 0
        case = json.loads(result.stdout)["cases"][0]
        assert case["status"] == "errored" and "pole" in case["error"]
        assert invoke("verify", "--config", cfg, "--strict").exit_code == 1

    def test_invalid_chart_params_errored(self, tmp_path):
        cfg = write_config(tmp_path, [{"name": "rn0", "source": "chart", "kind": "rn_ds",
                                       "params": {"M": 0, "Q": 0.5}}])
        result = invoke("verify", "--config", cfg, "--no-meta", "--strict")
        assert result.exit_code == 1
        assert "non-zero M and Q" in json.loads(result.stdout)["cases"][0]["error"]

    def test_csv(self, tmp_path):
        result = invoke("verify", "--config", write_config(tmp_path, [THREE]), "--format", "csv")
        lines = result.stdout.splitlines()
        assert lines[0] == "case,audit,premise,kind,key,value"
        assert any(l.startswith("three_curvature_5,thm48,holds,residual,qqee02,") for l in lines)

    def test_tolerance_flag_and_override(self, tmp_path):
        cfg = write_config(tmp_path, [{**THREE, "checks": ["gauss"], "tol_overrides": {"gauss": 1e-30}}])
        # a tolerance below roundoff turns any nonzero residual into a failure
        report = json.loads(invoke("verify", "--config", cfg, "--no-meta").stdout)
        residuals = report["cases"][0]["audits"][0]["residuals"]
        expected = "fail" if any(v > 1e-30 for v in residuals.values()) else "pass"
        assert report["cases"][0]["status"] == expected

    def test_determinism_and_workers(self, tmp_path):
        cfg = write_config(tmp_path, [
            THREE, {"name": "fz", "source": "algebraic", "n": 5, "count": 4, "negatives": 1, "seed": 3},
            {"name": "rn", "source": "chart", "kind": "rn_ds", "params": {"M": 1, "Q": 0.5}}])
        a = invoke("verify", "--config", cfg, "--no-meta", "--seed", "5").stdout
        b = invoke("verify", "--config", cfg, "--no-meta", "--seed", "5").stdout
        c = invoke("verify", "--config", cfg, "--no-meta", "--seed", "5", "--workers", "3").stdout
        d = invoke("verify", "--config", cfg, "--no-meta", "--seed", "6").stdout
        assert a == b == c
        assert a != d


class TestOtherCommands:
    def test_classify(self):
        result = invoke("classify", "--case", "clifford_5_2")
        assert result.exit_code == 0
        entry = json.loads(result.stdout)[0]
        assert entry["classification"]["roter"]["eta"] == pytest.approx(55)

    def test_classify_expanded_and_missing(self):
        result = invoke("classify", "--case", "rn_ds_standard")
        assert len(json.loads(result.stdout)) == 2
        assert len(json.loads(invoke("classify", "--case", "rn_ds_standard[1]").stdout)) == 1
        assert invoke("classify", "--case", "nope").exit_code == 2

    def test_list(self):
        result = invoke("list")
        assert result.exit_code == 0
        for name in list(AUDITS) + list(CHART_KINDS):
            assert f"  {name}\n" in result.output


class TestParsing:
    def test_hypersurface_forms(self):
        cases = parse_config({"cases": [
            {"name": "m", "source": "hypersurface", "g": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
             "H": [[1, 0.2, 0, 0], [0.2, 2, 0, 0], [0, 0, 3, 0], [0, 0, 0, 4]]},
            {"name": "e", "source": "hypersurface", "g": "minkowski", "epsilon": -1,
             "H": {"eigenvalues": [2, 1], "multiplicities": [2, 3]}},
            {"name": "bad", "source": "hypersurface", "g": [[1, 0.1, 0, 0], [0.1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
             "H": [1, 2, 3, 4]},
        ]})
        report = run_gallery(cases, meta=False)
        status = {c["name"]: c["status"] for c in report["cases"]}
        assert status == {"m": "pass", "e": "pass", "bad": "errored"}

    def test_expansion_labels(self):
        cases = parse_config({"cases": [{"name": "fz", "source": "algebraic", "count": 3}, THREE]})
        assert [w.label for w in expand(cases)] == ["fz[0]", "fz[1]", "fz[2]", "three_curvature_5"]

    def test_rejects_non_object(self):
        with pytest.raises(ConfigError):
            parse_config([])
