import json
from fractions import Fraction

import pytest

from matchlot import Matching
from matchlot.cli import main, run_experiment
from matchlot import io as mio


@pytest.fixture
def ex1_file(tmp_path, ex1):
    path = tmp_path / "ex1.json"
    mio.save_instance(ex1, path)
    return path


class TestIo:
    def test_instance_roundtrip(self, tmp_path, ex1):
        path = tmp_path / "instance.json"
        mio.save_instance(ex1, path)
        assert mio.load_instance(path) == ex1

    def test_assignment_roundtrip(self, tmp_path, ex1, x1):
        path = tmp_path / "x.json"
        mio.save_assignment(ex1, x1, path)
        loaded = mio.load_assignment(ex1, path)
        assert loaded.probs == x1.probs
        text = path.read_text()
        assert "5/12" in text  # rationals survive as p/q strings

    def test_decomposition_roundtrip(self, tmp_path, ex1, x1_decomposition):
        path = tmp_path / "d.json"
        mio.save_decomposition(ex1, x1_decomposition, path)
        loaded = mio.load_decomposition(ex1, path)
        assert loaded == x1_decomposition

    def test_matching_roundtrip(self, tmp_path, ex1):
        m = Matching((1, 0, None, 0))
        path = tmp_path / "m.json"
        mio.save_matching(ex1, m, path)
        assert mio.load_matching(ex1, path) == m

    def test_fraction_formats(self):
        assert mio.format_fraction(Fraction(5, 12)) == "5/12"
        assert mio.format_fraction(Fraction(3)) == "3"
        assert mio.parse_fraction("5/12") == Fraction(5, 12)
        assert mio.parse_fraction("3") == 3


class TestCli:
    def test_family_and_bounds(self, tmp_path, capsys):
        inst_path = tmp_path / "fam.json"
        assert main(["family", "--kind", "lb", "--size", "2", "--out", str(inst_path)]) == 0
        out_path = tmp_path / "bounds.json"
        assert main(["bounds", "--instance", str(inst_path), "--out", str(out_path)]) == 0
        payload = json.loads(out_path.read_text())
        assert payload["p_minus"] == 2
        assert payload["floor_mu"] == 3
        assert payload["interval"]["half_floor_mu"] == 1.5
        assert payload["interval"]["twice_p_minus"] == 4

    def test_sd_and_rsd(self, tmp_path, ex1_file):
        sd_out = tmp_path / "sd.json"
        assert main([
            "sd", "--instance", str(ex1_file), "--order", "3,4,1,2",
            "--out", str(sd_out),
        ]) == 0
        payload = json.loads(sd_out.read_text())
        assert payload["assignment"] == {"1": "b", "2": "c", "3": "a", "4": "a"}

        rsd_out = tmp_path / "rsd.json"
        assert main([
            "rsd", "--instance", str(ex1_file), "--exact", "--out", str(rsd_out),
        ]) == 0
        payload = json.loads(rsd_out.read_text())
        assert payload["exact"] is True
        assert payload["matrix"][0][1] == "5/12"

        sampled_out = tmp_path / "rsd_sampled.json"
        assert main([
            "rsd", "--instance", str(ex1_file), "--samples", "200",
            "--seed", "4", "--out", str(sampled_out),
        ]) == 0
        payload = json.loads(sampled_out.read_text())
        assert payload["exact"] is False
        assert payload["sample_count"] == 200

    def test_ps_and_decompose(self, tmp_path, ex1_file, ex1):
        ps_out = tmp_path / "ps.json"
        assert main(["ps", "--instance", str(ex1_file), "--out", str(ps_out)]) == 0
        dec_out = tmp_path / "dec.json"
        assert main([
            "decompose", "--instance", str(ex1_file), "--assignment", str(ps_out),
            "--mode", "robust", "--out", str(dec_out),
        ]) == 0
        payload = json.loads(dec_out.read_text())
        assert payload["worst_case_cardinality"] == 3
        weights = [mio.parse_fraction(t["weight"]) for t in payload["terms"]]
        assert sum(weights, Fraction(0)) == 1

    def test_decompose_robust_diagnostic(self, tmp_path, ex1_file, ex1, x1):
        x_path = tmp_path / "x1.json"
        mio.save_assignment(ex1, x1, x_path)
        out = tmp_path / "dec.json"
        code = main([
            "decompose", "--instance", str(ex1_file), "--assignment", str(x_path),
            "--mode", "robust", "--out", str(out),
        ])
        payload = json.loads(out.read_text())
        if code == 3:
            assert payload["error"] == "not-robust-ex-post-efficient"
        else:
            assert code == 0

    def test_solve_mdsd(self, tmp_path, ex1_file):
        out = tmp_path / "result.json"
        assert main([
            "solve-mdsd", "--instance", str(ex1_file), "--framework", "rmp",
            "--samples", "2000", "--seed", "5", "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert payload["status"] == "optimal"
        # This market is adversarial: the maximin value sits strictly below
        # the expected-cardinality ceiling.
        assert payload["z"] == 2
        assert payload["floor_mu"] in (2, 3)
        assert payload["worst_case_cardinality"] >= 2

    def test_solve_mdsd_margin_measure(self, tmp_path, ex1_file):
        out = tmp_path / "margin.json"
        assert main([
            "solve-mdsd", "--instance", str(ex1_file), "--measure", "margin",
            "--samples", "2000", "--seed", "5", "--out", str(out),
        ]) == 0
        payload = json.loads(out.read_text())
        assert payload["measure"] == "margin"
        assert payload["omega"] >= 0
        assert payload["decomposition"]

    def test_unpopularity(self, tmp_path, ex1_file, ex1):
        m_path = tmp_path / "m.json"
        mio.save_matching(ex1, Matching((0, 2, 0, None)), m_path)
        out = tmp_path / "u.json"
        assert main([
            "unpopularity", "--instance", str(ex1_file), "--matching", str(m_path),
            "--out", str(out),
        ]) == 0
        assert json.loads(out.read_text())["unpopularity_margin"] >= 1

    def test_generate_writes_instances(self, tmp_path):
        out_dir = tmp_path / "data"
        assert main([
            "generate", "--agents", "20", "--ratio", "4", "--count", "3",
            "--seed", "11", "--out", str(out_dir),
        ]) == 0
        files = sorted(out_dir.glob("instance_*.json"))
        assert len(files) == 3
        inst = mio.load_instance(files[0])
        assert inst.n_agents == 20

    def test_invalid_instance_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "objects": [{"id": "a", "capacity": 0}],
            "agents": [{"id": "1", "prefs": ["a", "a"]}],
        }))
        assert main(["ps", "--instance", str(bad)]) == 2


class TestExperiment:
    CONFIG = {
        "grid": [{"agents": 12, "ratio": 4.0}],
        "count": 2,
        "seed": 3,
        "samples": 400,
        "framework": "rmp",
        "time_limit": 120,
    }

    def test_report_shape_and_invariants(self, tmp_path):
        report = run_experiment(self.CONFIG, None)
        assert len(report.rows) == 2
        for row in report.rows:
            assert row.status in ("optimal", "budget-exhausted")
            if row.status == "optimal":
                assert row.p_minus <= row.z <= row.floor_mu
            assert row.seconds >= 0
        agg = report.aggregate()
        assert agg["instances"] == 2

    def test_empty_grid(self):
        report = run_experiment({"grid": [], "count": 5}, None)
        assert report.rows == []
        assert report.to_tsv().count("\n") == 1

    def test_byte_identical_reruns(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(self.CONFIG))
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["experiment", "--config", str(config_path), "--out", str(out_a)]) == 0
        assert main(["experiment", "--config", str(config_path), "--out", str(out_b)]) == 0
        assert (out_a / "report.tsv").read_bytes() == (out_b / "report.tsv").read_bytes()
