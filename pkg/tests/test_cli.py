import csv
import json
import math
from pathlib import Path

import pytest

from spreadkit import cli
from spreadkit.records import (LEDGER_ENV, RunRecord, append_record, digest, host_from_dict, host_to_dict,
                               ledger_path, read_config_file, read_json, read_records, write_json)
from spreadkit.hypergraph import BipartiteGraph, Hypergraph

FIXTURES = Path(__file__).parent / "fixtures" / "records.jsonl"


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path / "out"), "--ledger-dir", str(tmp_path / "ledger")])


def last_record(tmp_path):
    return read_records(tmp_path / "ledger" / "runs.jsonl")[-1]


def test_digest_is_order_independent():
    assert digest({"a": 1, "b": [1, 2]}) == digest({"b": [1, 2], "a": 1})
    assert digest({"a": 1}) != digest({"a": 2})


def test_record_roundtrip_and_major_version():
    rec = RunRecord("sample", {"n": 3}, 7, {"ok": True}, 0, "t0", "t1")
    back = RunRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
    assert back == rec and back.verify_digest()
    bad = rec.to_dict()
    bad["schema_version"] = "2.0"
    with pytest.raises(ValueError):
        RunRecord.from_dict(bad)
    bad["schema_version"] = "1.7"
    assert RunRecord.from_dict(bad).command == "sample"


def test_json_files_are_versioned(tmp_path):
    write_json({"kind": "x"}, tmp_path / "a.json")
    assert read_json(tmp_path / "a.json")["schema_version"].startswith("1.")
    (tmp_path / "b.json").write_text('{"schema_version": "9.0"}')
    with pytest.raises(ValueError):
        read_json(tmp_path / "b.json")


def test_host_serialization_roundtrip():
    for host in (Hypergraph.complete(6, 3), Hypergraph(6, 3, [(0, 1, 2), (3, 4, 5)]),
                 BipartiteGraph.from_edges(3, 3, [(0, 1), (2, 2)])):
        back = host_from_dict(host_to_dict(host))
        assert type(back) is type(host)
        assert host_to_dict(back) == host_to_dict(host)


def test_ledger_is_append_only(tmp_path, monkeypatch):
    monkeypatch.setenv(LEDGER_ENV, str(tmp_path / "env"))
    assert ledger_path() == tmp_path / "env" / "runs.jsonl"
    for i in range(3):
        append_record(RunRecord("verify", {}, i, {}, 0, "a", "b"))
    lines = ledger_path().read_text().splitlines()
    assert [json.loads(x)["seed"] for x in lines] == [0, 1, 2]


def test_config_file_parsing(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nn = 40\nmin-frac = 0.8  # trailing\n\n")
    assert read_config_file(path) == {"n": "40", "min_frac": "0.8"}
    path.write_text("oops\n")
    with pytest.raises(ValueError):
        read_config_file(path)


def test_config_precedence():
    resolved = cli.resolve_config("threshold", {"n": 64}, {"n": "32", "trials": "50"})
    assert resolved["n"] == 64 and resolved["trials"] == 50 and resolved["host"] == "knn"
    with pytest.raises(cli.UsageError):
        cli.resolve_config("threshold", {}, {"bogus": "1"})
    with pytest.raises(cli.UsageError):
        cli.resolve_config("threshold", {}, {"n": "many"})


def test_config_file_and_flags_on_command_line(tmp_path):
    cfg = tmp_path / "t.cfg"
    cfg.write_text("n = 16\ntrials = 20\nseed = 4\n")
    assert run(tmp_path, "threshold", "--config", str(cfg), "--trials", "30") == 0
    rec = last_record(tmp_path)
    assert rec.config["n"] == 16 and rec.config["trials"] == 30 and rec.seed == 4
    assert rec.verify_digest()


def test_sample_twice_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        assert cli.main(["sample", "pm-dirac", "--host", "complete", "--n", "30", "--k", "3", "--seed", "7",
                         "--out", str(d), "--ledger-dir", str(tmp_path / "ledger")]) == 0
        outs.append((d / "structure.json").read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["valid"] is True


def test_verify_exit_codes(tmp_path):
    assert run(tmp_path, "sample", "pm-bipartite", "--n", "20", "--seed", "1") == 0
    out = tmp_path / "out"
    host, structure = str(out / "host.json"), str(out / "structure.json")
    assert run(tmp_path, "verify", "--host-file", host, "--structure-file", structure) == 0
    assert last_record(tmp_path).outcome == {"verdict": "valid"}
    broken = json.loads(Path(structure).read_text())
    broken["edges"] = broken["edges"][:-1]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(broken))
    assert run(tmp_path, "verify", "--host-file", host, "--structure-file", str(bad)) == 1
    assert last_record(tmp_path).outcome == {"verdict": "invalid"}


def test_usage_and_io_exit_codes(tmp_path):
    assert run(tmp_path, "verify") == 2
    assert run(tmp_path, "sample", "no-such-sampler") == 2
    assert cli.main(["frobnicate"]) == 2
    assert run(tmp_path, "threshold", "--config", str(tmp_path / "missing.cfg")) == 4
    assert run(tmp_path, "verify", "--host-file", str(tmp_path / "none.json"), "--structure-file", "x") == 4


def test_exhaustion_and_negative_exit_codes(tmp_path):
    # one neighbour draw per vertex almost never leaves a perfect matching
    assert run(tmp_path, "sample", "pm-bipartite", "--n", "60", "--c", "1", "--seed", "0") == 3
    assert "attempts failed" in last_record(tmp_path).outcome["error"]
    assert run(tmp_path, "generate", "--kind", "dirac", "--n", "30", "--p", "0.5", "--min-frac", "0.99") == 3
    assert run(tmp_path, "calibrate", "--n", "20", "--grid", "1", "--seeds", "5", "--target", "1.0") == 1
    assert run(tmp_path, "threshold", "--host", "kn", "--n", "7", "--trials", "5") == 1


def test_threshold_example_row(tmp_path):
    assert run(tmp_path, "threshold", "--host", "knn", "--n", "128", "--trials", "400", "--seed", "1") == 0
    with open(tmp_path / "out" / "threshold.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    assert float(row["p_hat"]) * 128 / math.log(128) == pytest.approx(float(row["normalized"]))
    assert 0.5 <= float(row["normalized"]) <= 2


def test_other_commands_write_tables(tmp_path):
    assert run(tmp_path, "generate", "--kind", "pair", "--n", "20", "--seed", "2") == 0
    assert read_json(tmp_path / "out" / "host.json")["kind"] == "bipartite"
    assert run(tmp_path, "estimate-spread", "pm-bipartite", "--n", "20", "--trials", "100") == 0
    assert (tmp_path / "out" / "spread.csv").exists() and (tmp_path / "out" / "spread.json").exists()
    assert run(tmp_path, "scaling", "--ns", "16,32", "--trials", "20") == 0
    assert len((tmp_path / "out" / "scaling.csv").read_text().splitlines()) == 3
    assert run(tmp_path, "couple", "--n", "12", "--trials", "20", "--p-grid", "0.5,1") == 0
    assert run(tmp_path, "calibrate", "--n", "40", "--grid", "25", "--seeds", "10", "--target", "0.5") == 0


def test_trace_file(tmp_path):
    trace = tmp_path / "trace.jsonl"
    assert run(tmp_path, "sample", "pm-dirac", "--n", "30", "--seed", "1", "--trace", str(trace)) == 0
    entries = [json.loads(x) for x in trace.read_text().splitlines()]
    assert entries and all(isinstance(e, dict) for e in entries)


def test_replay_fresh_run_and_tampering(tmp_path):
    assert run(tmp_path, "sample", "kr-factor", "--n", "20", "--d", "0.7", "--seed", "3") == 0
    ledger = tmp_path / "ledger" / "runs.jsonl"
    assert run(tmp_path, "replay", "--record", str(ledger), "--index", "0") == 0
    assert last_record(tmp_path).outcome["match"] is True
    rec = json.loads(ledger.read_text().splitlines()[0])
    rec["config"]["n"] = 21
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(rec))
    assert run(tmp_path, "replay", "--record", str(tampered)) == 1


@pytest.mark.parametrize("index", range(len(FIXTURES.read_text().splitlines())))
def test_shipped_fixture_replays(tmp_path, index):
    assert run(tmp_path, "replay", "--record", str(FIXTURES), "--index", str(index)) == 0
