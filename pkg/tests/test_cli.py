import csv
import json

import pytest

from waitlist_iv.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from waitlist_iv.dataio import read_records
from waitlist_iv.montecarlo import W_IPW, McConfig, replication_estimates


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestVerify:
    def test_worked_case(self, capsys):
        code, out, _ = run(capsys, "verify", "--max-n", "6")
        assert code == EXIT_OK
        line = [l for l in out.splitlines() if l.startswith("n=6   s=2   a1=4")][0]
        assert "E(w1)=2/3" in line and "E(w0)=2/3" in line and "a1/n=2/3" in line and line.endswith("PASS")

    def test_nothing_to_check(self, capsys):
        code, out, _ = run(capsys, "verify", "--max-n", "2")
        assert code == EXIT_OK
        assert "nothing to check" in out

    def test_full_range_json(self, capsys):
        code, out, _ = run(capsys, "verify", "--max-n", "12", "--format", "json")
        rep = json.loads(out)
        assert code == EXIT_OK
        assert rep["n_failed"] == 0 and rep["seconds"] < 60

    def test_cap(self, capsys):
        code, _, err = run(capsys, "verify", "--max-n", "25")
        assert code == EXIT_USAGE
        assert "CapExceeded" in err


class TestExactTestCommand:
    def test_worked_example(self, capsys):
        code, out, _ = run(capsys, "test", "--n", "6", "--s", "2", "--t", "4", "--alpha", "0.05")
        assert code == EXIT_OK
        assert "p = 1/5" in out and "FAIL-TO-REJECT" in out

    def test_t_equals_s(self, capsys):
        code, out, _ = run(capsys, "test", "--n", "6", "--s", "2", "--t", "2", "--format", "json")
        rep = json.loads(out)
        assert rep["pvalue"] == "1/15"
        assert rep["pvalue_float"] == pytest.approx(0.0667, abs=1e-4)
        assert rep["decision"] == "FAIL-TO-REJECT"

    def test_invalid_t(self, capsys):
        code, _, err = run(capsys, "test", "--n", "6", "--s", "2", "--t", "7")
        assert code == EXIT_USAGE
        assert "InvalidT" in err

    def test_reject(self, capsys):
        _, out, _ = run(capsys, "test", "--n", "20", "--s", "10", "--t", "13", "--tail")
        assert "REJECT" in out and "FAIL" not in out
        assert "tail" in out

    def test_bad_alpha(self, capsys):
        code, _, _ = run(capsys, "test", "--n", "6", "--s", "2", "--t", "4", "--alpha", "2")
        assert code == EXIT_USAGE


class TestMC:
    def test_table_shape(self, capsys):
        code, out, _ = run(capsys, "mc", "--replications", "20")
        assert code == EXIT_OK
        assert out.count("Instrument") == 5

    def test_workers_identical(self, capsys):
        outs = []
        for workers in ("1", "2"):
            _, out, _ = run(capsys, "mc", "--replications", "12", "--seed", "4", "--workers", workers, "--format", "json")
            outs.append(out)
        assert outs[0] == outs[1]

    def test_seed_precedence(self, capsys, tmp_path, monkeypatch):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 11, "replications": 3}))
        _, out, _ = run(capsys, "mc", "--config", str(cfg), "--format", "json")
        assert json.loads(out)["seed"] == 11
        monkeypatch.setenv("WAITLIST_IV_SEED", "12")
        _, out, _ = run(capsys, "mc", "--config", str(cfg), "--format", "json")
        assert json.loads(out)["seed"] == 12
        _, out, _ = run(capsys, "mc", "--config", str(cfg), "--seed", "13", "--format", "json")
        assert json.loads(out)["seed"] == 13

    def test_config_error_names_field(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seats": 30}))
        code, _, err = run(capsys, "mc", "--config", str(cfg))
        assert code == EXIT_USAGE
        assert "seats" in err

    def test_single_replication_warns(self, capsys):
        code, out, err = run(capsys, "mc", "--replications", "1", "--format", "json")
        assert code == EXIT_OK
        assert "one replication" in err
        assert json.loads(out)["rows"][0]["se"] is None

    def test_json_roundtrip(self, capsys):
        _, out, _ = run(capsys, "mc", "--replications", "5", "--format", "json")
        assert json.dumps(json.loads(out), indent=2) + "\n" == out


class TestAnalyze:
    @pytest.fixture
    def simulated(self, tmp_path, capsys):
        path = tmp_path / "sim.csv"
        assert main(["simulate", "--seed", "42", "--out", str(path)]) == EXIT_OK
        capsys.readouterr()
        return path

    def test_roundtrip_matches_simulation(self, capsys, simulated):
        code, out, _ = run(capsys, "analyze", "--input", str(simulated), "--instrument", "w", "--pooling", "ipw",
                           "--format", "json")
        assert code == EXIT_OK
        rep = json.loads(out)
        est = rep["estimate"]
        assert est["point_estimate"] == pytest.approx(replication_estimates(McConfig(seed=42), 0)[W_IPW], abs=1e-12)
        lo = est["point_estimate"] - 1.96 * est["std_error"]
        hi = est["point_estimate"] + 1.96 * est["std_error"]
        assert lo <= 0.2 <= hi
        assert est["n_excluded"] == 20 and len(rep["excluded_student_ids"]) == 20
        assert json.dumps(rep, indent=2) + "\n" == out

    def test_text_report(self, capsys, simulated):
        code, out, _ = run(capsys, "analyze", "--input", str(simulated), "--instrument", "z", "--pooling", "fe")
        assert code == EXIT_OK
        assert "instrument Z" in out and "n_excluded = 0" in out

    def test_duplicate_rank(self, capsys, simulated, tmp_path):
        rows = list(csv.reader(simulated.open()))
        rows[3][2] = rows[2][2]
        bad = tmp_path / "bad.csv"
        with bad.open("w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        code, _, err = run(capsys, "analyze", "--input", str(bad))
        assert code == EXIT_DATA
        assert "s000" in err and "rows 3, 4" in err

    def test_all_offered_stratum(self, capsys, simulated, tmp_path):
        recs = read_records(simulated)
        rows = list(csv.reader(simulated.open()))
        header, body = rows[0], rows[1:]
        # stratum s000 rewritten so that offers run to the last rank and rank 20 takes the last seat
        for row in body:
            if row[1] == "s000":
                rank = int(row[2])
                row[3] = "1"
                row[4] = "1" if rank in (1, 2, 3, 4, 5, 6, 7, 8, 9, 20) else "0"
                row[6] = row[4]
        bad = tmp_path / "alloffered.csv"
        with bad.open("w", newline="") as fh:
            csv.writer(fh).writerows([header] + body)
        code, out, _ = run(capsys, "analyze", "--input", str(bad), "--instrument", "w", "--format", "json")
        assert code == EXIT_OK
        rep = json.loads(out)
        assert rep["dropped_strata"] == ["s000"]
        assert any("Undersubscribed" in w for w in rep["warnings"])
        code, out, _ = run(capsys, "analyze", "--input", str(bad), "--instrument", "z", "--pooling", "fe",
                           "--format", "json")
        assert code == EXIT_OK
        assert json.loads(out)["dropped_strata"] == []
        assert len(recs) == 400

    def test_missing_column(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("student_id,stratum_id,rank\n1,a,1\n")
        code, _, err = run(capsys, "analyze", "--input", str(bad))
        assert code == EXIT_DATA
        assert "offered" in err

    def test_bad_flag_value(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("student_id,stratum_id,rank,offered,enrolled,outcome\n1,a,1,yes,0,1.0\n")
        code, _, err = run(capsys, "analyze", "--input", str(bad))
        assert code == EXIT_DATA
        assert "row" in err
