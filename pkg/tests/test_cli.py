import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from xydm import cli
from xydm.sweep import SweepTable

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


class TestPoint:
    def test_zero_coupling(self, capsys):
        code, out, _ = run(capsys, "point", "--J", "0", "--gamma", "1", "--D", "0", "--T", "0",
                           "--r", "1")
        assert code == 0
        rec = json.loads(out)
        assert rec["correlations"]["sz"] == pytest.approx(0.5)
        for q in ("QD", "CC", "C"):
            assert abs(rec["measures"][q]) < 1e-10

    def test_infinite_temperature(self, capsys):
        code, out, _ = run(capsys, "point", "--beta", "0", "--J", "1", "--gamma", "1", "--D", "0",
                           "--r", "1")
        assert code == 0
        rec = json.loads(out)
        assert rec["params"]["T"] == math.inf
        assert all(v == 0 for v in rec["correlations"].values())

    def test_matches_golden(self, capsys):
        golden = json.loads((GOLDEN / "point_J1_gamma1_D0_T0_r1.json").read_text())
        code, out, _ = run(capsys, "point", "--J", "1", "--gamma", "1", "--D", "0", "--T", "0",
                           "--r", "1")
        assert code == 0
        rec = json.loads(out)
        assert rec["params"] == golden["params"]
        for group in ("correlations", "measures"):
            for k, v in golden[group].items():
                if isinstance(v, str):
                    assert rec[group][k] == v
                else:
                    assert rec[group][k] == pytest.approx(v, abs=1e-10)

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "point", "--J", "0.8", "--gamma", "0.5", "--format", "csv")
        assert code == 0
        header, row = out.splitlines()
        assert header == "J,gamma,D,T,r,sz,xx,yy,zz,MI,QD,CC,C,error"
        assert row.startswith("0.8,0.5,0,0,1,")

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "p.json"
        code, out, _ = run(capsys, "point", "--J", "1", "--output", str(target))
        assert code == 0 and out == ""
        assert json.loads(target.read_text())["params"]["J"] == 1.0

    @pytest.mark.parametrize("argv", [
        ("point", "--J", "1", "--T", "0.5", "--beta", "2"),
        ("point", "--gamma", "1"),
        ("point", "--J", "1", "--colour", "red"),
        ("point", "--J", "one"),
        ("point", "--J", "-1"),
        ("point", "--J", "1", "--r", "0"),
        ("point", "--J", "1", "--beta", "-1"),
        ("point", "--J", "1", "--N", "5"),
    ])
    def test_usage_errors(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert "error" in err

    def test_numerical_failure_exit_code(self, capsys, monkeypatch):
        from xydm import chain

        monkeypatch.setattr(chain, "QUAD_LIMIT", 1)
        chain._table.cache_clear()
        try:
            code, _, err = run(capsys, "point", "--J", "1.05", "--gamma", "0.01", "--D", "0.37")
        finally:
            chain._table.cache_clear()
        assert code == 3
        assert "numerical failure" in err

    def test_bless_writes_after_oracle(self, capsys, tmp_path):
        target = tmp_path / "golden.json"
        code, out, _ = run(capsys, "point", "--J", "0.5", "--gamma", "1", "--bless", str(target))
        assert code == 0
        assert json.loads(target.read_text()) == json.loads(out)

    def test_bless_refused_when_oracle_disagrees(self, capsys, tmp_path):
        target = tmp_path / "golden.json"
        code, _, err = run(capsys, "point", "--J", "0.8", "--gamma", "0.5", "--D", "0.5",
                           "--bless", str(target))
        assert code == 4
        assert not target.exists()
        assert "refusing" in err


class TestSweep:
    def test_inline_axis(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "J:0.05:2:100", "--gamma", "1", "--D", "0",
                           "--T", "0", "--r", "1")
        assert code == 0
        table = SweepTable.from_csv(out)
        assert len(table.rows) == 100
        diff = table.column("C") - table.column("QD")
        assert diff[0] > 0 and diff[-1] < 0

    def test_round_trip(self, capsys, tmp_path):
        target = tmp_path / "s.csv"
        code, _, _ = run(capsys, "sweep", "--axis", "D:0:1:11", "--J", "1.5", "--gamma", "1",
                         "--derivative", "QD:D", "--output", str(target))
        assert code == 0
        data = target.read_bytes()
        assert SweepTable.from_csv(data.decode()).to_csv().encode() == data
        header = data.decode().splitlines()[0].split(",")
        assert header == ["axis_D", "J", "gamma", "D", "T", "r", "sz", "xx", "yy", "zz",
                          "MI", "QD", "CC", "C", "dQD/dD", "error"]

    def test_single_point_axis(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "J:0:0:1")
        assert code == 0
        assert len(out.splitlines()) == 2

    def test_spec_file(self, capsys, tmp_path):
        spec = {"axes": [{"name": "J", "min": 0.5, "max": 1.0, "n_points": 3},
                         {"name": "D", "min": 0.0, "max": 0.5, "n_points": 2}],
                "fixed": {"gamma": 0.5}, "r": 2}
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        code, out, _ = run(capsys, "sweep", "--spec", str(path))
        assert code == 0
        table = SweepTable.from_csv(out)
        assert len(table.rows) == 6
        assert set(table.column("r")) == {2.0}

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "sweep", "--axis", "T:0:1:3", "--J", "0.5", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["columns"][0] == "axis_T"
        assert len(doc["rows"]) == 3
        assert "timestamp" in doc["metadata"]

    def test_partial_failures_warn(self, capsys, monkeypatch):
        from xydm import sweep
        from xydm.errors import NumericalError

        real = sweep.evaluate

        def flaky(p, r):
            if p.J > 1.3:
                raise NumericalError("no convergence")
            return real(p, r)

        monkeypatch.setattr(sweep, "evaluate", flaky)
        code, out, err = run(capsys, "sweep", "--axis", "J:1:1.5:3", "--workers", "1")
        assert code == 0
        assert "1 of 3 points failed" in err
        assert "NumericalError: no convergence" in out

    @pytest.mark.parametrize("extra", [
        (),
        ("--axis", "J:0:1"),
        ("--axis", "J:0:1:x"),
        ("--axis", "J:0:1:5", "--J", "1"),
        ("--axis", "J:0:1:5", "--T", "1", "--beta", "1"),
        ("--axis", "J:0:1:5", "--derivative", "QD"),
        ("--axis", "J:0:1:2", "--derivative", "QD:J"),
        ("--axis", "J:0:1:5", "--quantities", "QD,foo"),
        ("--axis", "J:0:1:5", "--workers", "0"),
        ("--axis", "h:0:1:5"),
    ])
    def test_usage_errors(self, capsys, extra):
        code, _, _ = run(capsys, "sweep", *extra)
        assert code == 2

    def test_spec_rejects_inline_flags_and_unknown_fields(self, capsys, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"axes": [{"name": "J", "min": 0, "max": 1, "n_points": 3}]}))
        assert run(capsys, "sweep", "--spec", str(path), "--gamma", "0.5")[0] == 2
        path.write_text(json.dumps({"axes": [{"name": "J", "min": 0, "max": 1, "n_points": 3}],
                                    "temperature": 0}))
        assert run(capsys, "sweep", "--spec", str(path))[0] == 2
        assert run(capsys, "sweep", "--spec", str(tmp_path / "missing.json"))[0] == 2


class TestOracle:
    def test_trivial(self, capsys):
        code, out, _ = run(capsys, "oracle", "--J", "0", "--T", "0", "--N", "8")
        assert code == 0
        assert out.strip().endswith("OK")

    def test_critical_ising_small(self, capsys):
        code, out, _ = run(capsys, "oracle", "--J", "1", "--gamma", "1", "--N", "10")
        assert code == 0
        assert "dN=8" in out and "dN=10" in out

    def test_violation_exit_code(self, capsys):
        code, out, _ = run(capsys, "oracle", "--J", "1", "--N", "8", "--tol", "1e-6")
        assert code == 4
        assert "VIOLATION" in out

    def test_gauge_ring_reports_mismatch(self, capsys):
        code, out, _ = run(capsys, "oracle", "--gauge", "--J", "0.6", "--gamma", "0", "--D", "0.75",
                           "--N", "6")
        assert code == 4
        assert "spectra match:  False" in out

    def test_gauge_open_chain(self, capsys):
        code, out, _ = run(capsys, "oracle", "--gauge", "--J", "0.6", "--gamma", "0", "--D", "0.75",
                           "--N", "6", "--boundary", "open")
        assert code == 0
        assert "spectra match:  True" in out

    @pytest.mark.parametrize("argv", [
        ("oracle", "--J", "1", "--N", "16"),
        ("oracle", "--J", "1", "--N", "9"),
        ("oracle", "--J", "1", "--boundary", "open"),
        ("oracle", "--J", "1", "--boundary", "twisted"),
    ])
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2


class TestCheck:
    def test_filter_and_json(self, capsys):
        code, out, _ = run(capsys, "check", "--filter", "c04", "--json")
        assert code == 0
        doc = json.loads(out)
        assert [c["id"] for c in doc["criteria"]] == ["c04-concurrence-oracle"]
        assert doc["passed"] is True

    def test_table_output(self, capsys):
        code, out, _ = run(capsys, "check", "--filter", "trivial")
        assert code == 0
        assert out.splitlines()[0].startswith("PASS  c01-trivial-limits")

    def test_unknown_filter(self, capsys):
        assert run(capsys, "check", "--filter", "nothing-like-this")[0] == 2

    def test_failure_exit_code(self, capsys, monkeypatch):
        from xydm import acceptance

        monkeypatch.setattr(acceptance, "CRITERIA",
                            [("c99-broken", "always fails", lambda: (False, {}))])
        code, out, _ = run(capsys, "check")
        assert code == 1
        assert "FAIL  c99-broken" in out

    def test_documents_identical_across_processes(self, tmp_path):
        docs = []
        for k in range(2):
            target = tmp_path / f"doc{k}.json"
            subprocess.run([sys.executable, "-m", "xydm", "check", "--filter", "fig2",
                            "--output", str(target)], check=True, capture_output=True)
            docs.append(target.read_bytes())
        assert docs[0] == docs[1]
        assert json.loads(docs[0])["criteria"][0]["id"] == "c07-fig2-ordering"
