import json
import xml.etree.ElementTree as ET

import pytest

from mmwave_sdn import cli
from mmwave_sdn.cli import CSV_HEADER, main

QUICK = ["--speeds", "30,90", "--seeds", "3"]


@pytest.fixture
def quick_scenario(tmp_path):
    p = tmp_path / "sc.json"
    p.write_text(json.dumps({"total_slots": 400}))
    return p


def test_run_writes_csv_and_svg(tmp_path, quick_scenario, capsys):
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(quick_scenario), *QUICK, "--out", str(out)]) == 0
    lines = (out / "results.csv").read_bytes().decode().split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[-1] == ""
    rows = [l.split(",") for l in lines[1:-1]]
    assert [(r[0], r[1]) for r in rows] == [("30", "multi"), ("30", "single"), ("90", "multi"), ("90", "single")]
    assert all(0.0 <= float(r[3]) <= 1.0 and r[2] == "3" for r in rows)
    assert b"\r" not in (out / "results.csv").read_bytes()
    assert not (out / "events.jsonl").exists()
    assert "wrote" in capsys.readouterr().out


def test_svg_is_self_contained(tmp_path, quick_scenario):
    out = tmp_path / "out"
    main(["run", "--scenario", str(quick_scenario), *QUICK, "--out", str(out), "--quiet"])
    text = (out / "figure_success_rate.svg").read_text()
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert "href" not in text and "url(" not in text and "<image" not in text
    assert text.count("<polyline") == 2


def test_trace_written_on_request(tmp_path, quick_scenario):
    out = tmp_path / "out"
    main(["run", "--scenario", str(quick_scenario), *QUICK, "--out", str(out), "--trace", "--quiet"])
    events = [json.loads(l) for l in (out / "events.jsonl").read_text().splitlines()]
    assert {e["speed_kmh"] for e in events} == {30.0, 90.0}
    assert sum(e["type"] == "attach" for e in events) == 4


def test_same_seed_byte_identical(tmp_path, quick_scenario):
    for d in ("a", "b"):
        main(["run", "--scenario", str(quick_scenario), *QUICK, "--seed", "7", "--out", str(tmp_path / d),
              "--quiet"])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_scheme_flag(tmp_path, quick_scenario):
    out = tmp_path / "o"
    main(["run", "--scenario", str(quick_scenario), *QUICK, "--scheme", "single", "--out", str(out), "--quiet"])
    body = (out / "results.csv").read_text().splitlines()[1:]
    assert {l.split(",")[1] for l in body} == {"single"}


def test_overrides_beat_file(tmp_path):
    p = tmp_path / "sc.json"
    p.write_text(json.dumps({"total_slots": 100, "seeds": 9, "speed_sweep": [45]}))
    out = tmp_path / "o"
    main(["run", "--scenario", str(p), "--seeds", "2", "--out", str(out), "--quiet"])
    (row,) = (out / "results.csv").read_text().splitlines()[1:2]
    assert row.startswith("45,multi,2,")


def test_malformed_json_exit_2_without_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "seeds": 3,\n')
    out = tmp_path / "o"
    assert main(["run", "--scenario", str(bad), "--out", str(out)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert not out.exists()


def test_unknown_key_exit_2(tmp_path, capsys):
    p = tmp_path / "x.json"
    p.write_text('{\n "seeds": 2,\n "colour": 1\n}')
    assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "colour" in capsys.readouterr().err


def test_missing_scenario_is_io_error(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "nope.json")]) == 4


def test_unwritable_output_is_io_error(tmp_path, quick_scenario):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--scenario", str(quick_scenario), *QUICK, "--out", str(blocker / "sub"),
                 "--quiet"]) == 4


def test_failed_write_leaves_previous_results(tmp_path, quick_scenario, monkeypatch):
    out = tmp_path / "o"
    out.mkdir()
    (out / "results.csv").write_text("old\n")

    def boom(*a, **k):
        raise OSError(28, "No space left on device")

    monkeypatch.setattr(cli.os, "replace", boom)
    assert main(["run", "--scenario", str(quick_scenario), *QUICK, "--out", str(out), "--quiet"]) == 4
    assert (out / "results.csv").read_text() == "old\n"
    assert sorted(p.name for p in out.iterdir()) == ["results.csv"]


def test_invariant_violation_exit_3(tmp_path, quick_scenario, monkeypatch, capsys):
    from mmwave_sdn.errors import InvariantViolation

    def broken(*a, **k):
        raise InvariantViolation("cluster-non-empty", 42)

    monkeypatch.setattr(cli, "run_scenario", broken)
    out = tmp_path / "o"
    assert main(["run", "--scenario", str(quick_scenario), "--out", str(out)]) == 3
    err = capsys.readouterr().err
    assert "cluster-non-empty" in err and "42" in err
    assert not out.exists()


def test_validate_echoes_defaults(tmp_path, capsys):
    p = tmp_path / "v.json"
    p.write_text('{"speed_sweep": [60]}')
    assert main(["validate", str(p)]) == 0
    out = capsys.readouterr().out
    echo = json.loads(out[: out.rindex("}") + 1])
    assert echo["speed_sweep"] == [60]
    assert echo["carrier_ghz"] == 28.0 and echo["users_per_cell"] == 100 and echo["min_sinr_db"] == -10.0


def test_validate_failures(tmp_path, capsys):
    empty = tmp_path / "e.json"
    empty.write_text("")
    assert main(["validate", str(empty)]) == 2
    p = tmp_path / "h.json"
    p.write_text(json.dumps({"enter_threshold_db": -20, "exit_threshold_db": -10, "seeds": -1}))
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "hysteresis rule" in err and "seeds" in err


def test_linkbudget_chain(capsys):
    assert main(["linkbudget", "100"]) == 0
    out = capsys.readouterr().out
    for needle in ("130.4000 dB", "-93.4000 dBm", "-84.0000 dBm", "-9.4000 dB", ": satisfied"):
        assert needle in out
    main(["linkbudget", "100", "--gain-db", "20"])
    assert "SINR          10.6000 dB" in capsys.readouterr().out
    main(["linkbudget", "1"])
    assert "path loss     72.0000 dB" in capsys.readouterr().out


def test_linkbudget_rejects_short_distance():
    assert main(["linkbudget", "0.5"]) == 2


def test_bad_usage_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scheme", "triple"])
    assert exc.value.code == 2
