"""Binding/CLI parity: byte-identical results after canonical serialization."""

import json
import subprocess
import sys

import pandas as pd
import pytest

import howde_frames as hf
from howde import io


def cli(*argv):
    proc = subprocess.run([sys.executable, "-m", "howde.cli", *argv],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


SYNTH_ARGS = {"agents": "12", "days": "84", "seed": "42",
              "missing_min": "0.0", "missing_max": "0.4",
              "p_commuter": "0.7", "p_away": "0.2", "p_home_day": "0.1",
              "mover_fraction": "0.25"}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("parity")
    cfg = tmp / "pop.cfg"
    cfg.write_text("".join(f"{k} = {v}\n" for k, v in SYNTH_ARGS.items()))
    cli("synth", "--config", str(cfg),
        "--output-stops", str(tmp / "stops.csv"),
        "--output-truth", str(tmp / "truth.csv"),
        "--output-coords", str(tmp / "coords.csv"),
        "--output-users", str(tmp / "users.csv"))
    return tmp


def frame_bytes(df, writer, tmp_path, name):
    path = tmp_path / name
    writer(df, path)
    return path.read_bytes()


class TestSynthParity:
    def test_all_four_tables_match_cli_files(self, corpus, tmp_path):
        result = hf.synth({k: v for k, v in SYNTH_ARGS.items()})
        out = tmp_path / "stops.csv"
        result.stops.to_csv(out, index=False, lineterminator="\n")
        assert out.read_bytes() == (corpus / "stops.csv").read_bytes()
        for name, table in (("truth.csv", result.truth),
                            ("coords.csv", result.coords),
                            ("users.csv", result.users)):
            out = tmp_path / name
            table.to_csv(out, index=False, lineterminator="\n")
            assert out.read_bytes() == (corpus / name).read_bytes()


class TestDetectParity:
    def test_default_params_match_cli(self, corpus, tmp_path):
        cli("detect", "--input", str(corpus / "stops.csv"),
            "--output", str(corpus / "labels.csv"))
        raw = pd.read_csv(corpus / "stops.csv", dtype={"user_id": str, "loc_id": str})
        labels = hf.detect(raw)
        out = tmp_path / "labels.csv"
        io.write_labels(labels, out)
        assert out.read_bytes() == (corpus / "labels.csv").read_bytes()

    def test_param_overrides_match_cli(self, corpus, tmp_path):
        cli("detect", "--input", str(corpus / "stops.csv"),
            "--output", str(corpus / "labels_strict.csv"),
            "--delta-T-H", "14", "--f-hours-H", "0.9",
            "--window-mode", "past_only", "--delta-T-W", "15")
        raw = pd.read_csv(corpus / "stops.csv", dtype={"user_id": str, "loc_id": str})
        labels = hf.detect(raw, {"delta_T_H": 14, "f_hours_H": 0.9,
                                 "window_mode": "past_only", "delta_T_W": 15})
        out = tmp_path / "labels.csv"
        io.write_labels(labels, out)
        assert out.read_bytes() == (corpus / "labels_strict.csv").read_bytes()

    def test_unknown_param_key_rejected(self, corpus):
        raw = pd.read_csv(corpus / "stops.csv", dtype={"user_id": str, "loc_id": str})
        with pytest.raises(Exception, match="unknown"):
            hf.detect(raw, {"delta_T": 14})

    def test_schema_mismatch_rejected(self):
        with pytest.raises(Exception, match="missing columns"):
            hf.detect(pd.DataFrame({"user": ["u1"]}))

    def test_empty_table_gives_empty_result(self):
        empty = pd.DataFrame(columns=["user_id", "loc_id", "start", "end"])
        out = hf.detect(empty)
        assert len(out) == 0
        assert list(out.columns) == list(io.LABEL_COLUMNS)


class TestEvaluateParity:
    def test_report_equals_cli_json(self, corpus, tmp_path):
        cli("detect", "--input", str(corpus / "stops.csv"),
            "--output", str(corpus / "labels.csv"))
        cli("evaluate", "--labels", str(corpus / "labels.csv"),
            "--truth", str(corpus / "truth.csv"),
            "--scope", "home", "--protocol", "user_week",
            "--bootstrap-B", "300", "--seed", "5",
            "--report", str(corpus / "report.json"))
        labels = pd.read_csv(corpus / "labels.csv", dtype=str, keep_default_na=False)
        truth = pd.read_csv(corpus / "truth.csv", dtype=str, keep_default_na=False)
        record = hf.evaluate(labels, truth, protocol="user_week", scope="home",
                             bootstrap_b=300, seed=5)
        payload = json.dumps(record, indent=2, sort_keys=True) + "\n"
        assert payload.encode() == (corpus / "report.json").read_bytes()

    def test_protocol_mismatch_raises(self, corpus):
        truth = pd.read_csv(corpus / "truth.csv", dtype=str, keep_default_na=False)
        weekly_only = truth[truth["granularity"] == "user_week"]
        labels = pd.read_csv(corpus / "labels.csv", dtype=str, keep_default_na=False)
        with pytest.raises(Exception, match="no entries"):
            hf.evaluate(labels, weekly_only, protocol="user", scope="home")


class TestAnonymizeParity:
    def test_output_matches_cli(self, corpus, tmp_path):
        cli("anonymize", "--input", str(corpus / "stops.csv"),
            "--output", str(corpus / "anon.csv"), "--seed", "13")
        raw = pd.read_csv(corpus / "stops.csv", dtype={"user_id": str, "loc_id": str})
        anon = hf.anonymize(raw, seed=13)
        out = tmp_path / "anon.csv"
        io.write_stops(anon, out)
        assert out.read_bytes() == (corpus / "anon.csv").read_bytes()

    def test_seed_changes_output(self, corpus):
        raw = pd.read_csv(corpus / "stops.csv", dtype={"user_id": str, "loc_id": str})
        a = hf.anonymize(raw, seed=1)
        b = hf.anonymize(raw, seed=2)
        assert not a.equals(b)
