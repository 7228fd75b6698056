"""Command-line surface on small fixtures."""

import json
import os
import subprocess
import sys

import pandas as pd
import pytest

from howde.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    code = run_cli("synth", "--agents", "8", "--days", "70", "--seed", "11",
                   "--missing", "0.0:0.3",
                   "--output-stops", str(tmp / "stops.csv"),
                   "--output-truth", str(tmp / "truth.csv"),
                   "--output-coords", str(tmp / "coords.csv"),
                   "--output-users", str(tmp / "users.csv"))
    assert code == 0
    return tmp


class TestDetect:
    def test_detect_and_evaluate(self, corpus, capsys):
        assert run_cli("detect", "--input", str(corpus / "stops.csv"),
                       "--output", str(corpus / "labels.csv")) == 0
        assert run_cli("evaluate", "--labels", str(corpus / "labels.csv"),
                       "--truth", str(corpus / "truth.csv"), "--scope", "home",
                       "--bootstrap-B", "50",
                       "--report", str(corpus / "report.json")) == 0
        out = capsys.readouterr().out
        assert "detected_accuracy" in out
        report = json.loads((corpus / "report.json").read_text())
        assert report["n_truth"] > 0

    def test_config_file_with_flag_override(self, corpus, tmp_path):
        cfg = tmp_path / "base.cfg"
        cfg.write_text("delta_T_H = 14\nf_hours_H = 0.5\n")
        assert run_cli("detect", "--config", str(cfg),
                       "--input", str(corpus / "stops.csv"),
                       "--output", str(tmp_path / "labels.csv"),
                       "--delta-T-H", "28", "--f-hours-H", "0.9") == 0
        assert (tmp_path / "labels.csv").exists()

    def test_unknown_config_key_fails(self, corpus, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("delta_T_X = 14\n")
        code = run_cli("detect", "--config", str(cfg),
                       "--input", str(corpus / "stops.csv"),
                       "--output", str(tmp_path / "labels.csv"))
        assert code == 2
        assert "unknown" in capsys.readouterr().err

    def test_missing_input_is_config_error(self, capsys):
        assert run_cli("detect", "--output", "x.csv") == 2

    def test_baseline_detector(self, corpus, tmp_path):
        assert run_cli("detect", "--input", str(corpus / "stops.csv"),
                       "--output", str(tmp_path / "atlas.csv"),
                       "--detector", "atlas") == 0
        df = pd.read_csv(tmp_path / "atlas.csv")
        assert set(df.columns) == {"user_id", "home_loc", "work_loc", "qualifies"}


class TestEvaluateUsage:
    def test_missing_truth_is_usage_error(self, corpus):
        with pytest.raises(SystemExit) as exc:
            run_cli("evaluate", "--labels", str(corpus / "labels.csv"),
                    "--scope", "home")
        assert exc.value.code == 2

    def test_bad_scope_is_usage_error(self, corpus):
        with pytest.raises(SystemExit):
            run_cli("evaluate", "--labels", str(corpus / "labels.csv"),
                    "--truth", str(corpus / "truth.csv"), "--scope", "house")


class TestSweep:
    def test_rows_per_configuration(self, corpus, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run_cli("sweep", "--input", str(corpus / "stops.csv"),
                       "--truth", str(corpus / "truth.csv"),
                       "--scope", "home", "--output", str(out),
                       "--param", "f_hours_H=0.5,0.7,0.9") == 0
        df = pd.read_csv(out)
        assert len(df) == 3
        assert list(df["f_hours_H"]) == [0.5, 0.7, 0.9]

    def test_unknown_param_rejected(self, corpus, tmp_path, capsys):
        code = run_cli("sweep", "--input", str(corpus / "stops.csv"),
                       "--truth", str(corpus / "truth.csv"),
                       "--output", str(tmp_path / "s.csv"),
                       "--param", "bogus=1,2")
        assert code == 2


class TestProfilesEntropy:
    def test_profiles_then_entropy(self, corpus, tmp_path, capsys):
        assert run_cli("profiles", "--input", str(corpus / "stops.csv"),
                       "--scope", "home", "--truth", str(corpus / "truth.csv"),
                       "--k", "3", "--seed", "1",
                       "--assignments-out", str(tmp_path / "assign.csv"),
                       "--clusters-out", str(tmp_path / "clusters.csv")) == 0
        clusters = pd.read_csv(tmp_path / "clusters.csv")
        assert len(clusters) == 3
        assert clusters["size_fraction"].sum() == pytest.approx(1.0)
        assert all(len(m) == 24 for m in clusters["mode"])

        assert run_cli("entropy", "--assignments", str(tmp_path / "assign.csv"),
                       "--null-reps", "3", "--seed", "2",
                       "--output", str(tmp_path / "entropy.csv")) == 0
        out = capsys.readouterr().out
        assert "null_mean" in out
        per_user = pd.read_csv(tmp_path / "entropy.csv")
        assert ((per_user["entropy"] >= 0) & (per_user["entropy"] <= 1)).all()


class TestApps:
    def test_employment_and_commute(self, corpus, tmp_path, capsys):
        assert run_cli("detect", "--input", str(corpus / "stops.csv"),
                       "--output", str(corpus / "labels.csv")) == 0
        assert run_cli("apps", "employment", "--labels", str(corpus / "labels.csv"),
                       "--regions", str(corpus / "users.csv"),
                       "--output", str(tmp_path / "emp.csv")) == 0
        emp = pd.read_csv(tmp_path / "emp.csv")
        assert (emp["employment_rate"] <= 1).all()

        groups = pd.read_csv(corpus / "users.csv").rename(
            columns={"region_id": "group_id"})
        groups.to_csv(tmp_path / "groups.csv", index=False)
        assert run_cli("apps", "commute", "--labels", str(corpus / "labels.csv"),
                       "--coords", str(corpus / "coords.csv"),
                       "--groups", str(tmp_path / "groups.csv"),
                       "--output", str(tmp_path / "commute.csv")) == 0
        commute = pd.read_csv(tmp_path / "commute.csv")
        assert (commute["mean_km"] > 0).all()


class TestDeterminism:
    def test_same_seed_same_bytes(self, corpus, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert run_cli("anonymize", "--input", str(corpus / "stops.csv"),
                           "--output", str(out), "--seed", "9") == 0
        assert a.read_bytes() == b.read_bytes()
