import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from lobmrr.cli import EXIT_INPUT, EXIT_INSUFFICIENT, EXIT_OK, EXIT_RECONCILE, main
from lobmrr.frames import read_frames
from lobmrr.lobster import write_snapshots
from lobmrr.synth import generate_day, lobster_names

DOCS = Path(__file__).resolve().parent.parent / "docs"


def body(path: Path) -> list[str]:
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


@pytest.fixture
def lobster_files(tmp_path):
    day = generate_day(5, n_events=4000, levels=3, start_time=36000.0, end_time=56000.0, halts=1)
    msg, ob = lobster_names("SYN", "2015-01-02", 3)
    (tmp_path / msg).write_text(day.message_text())
    (tmp_path / ob).write_text(day.snapshot_text())
    return tmp_path / msg, tmp_path / ob, day


def test_ingest_then_stats_matches_direct_pipeline(tmp_path, lobster_files, monkeypatch):
    msg, ob, day = lobster_files
    monkeypatch.chdir(tmp_path)
    assert main(["ingest", "--messages", msg.name, "--orderbook", ob.name, "--levels", "3",
                 "--out", "frames.csv", "--depletions-out", "deps.csv"]) == EXIT_OK
    frames = read_frames("frames.csv")
    assert frames.n > 0
    assert np.all((frames.wall_time >= 37800) & (frames.wall_time < 54000))
    header = json.loads(Path("frames.csv").read_text().splitlines()[0][1:])
    assert header["provenance"]["inputs"][msg.name] and header["tick_size"] == 0.01
    assert main(["stats", "--frames", "frames.csv", "--depletions", "deps.csv", "--lags", "5",
                 "--horizon", "10", "--out-dir", "s"]) == EXIT_OK
    for name in ("sign_autocorrelation", "response", "mrr_relation", "covariance_identity",
                 "imbalance_impact", "midprice_return_covariance"):
        assert body(Path("s") / f"{name}.csv")[0].split(",")[0] in ("lag", "bin_lo")
    dep = json.loads(Path("s/depletion_impact.json").read_text())["result"]
    assert set(dep["by_cause"]) <= {"execution", "cancellation"}

    # the same statistics straight from the library
    from lobmrr.book import MarketConfig, replay
    from lobmrr.lobster import SessionWindow, parse_message_file
    from lobmrr.stats import response_function
    res = replay(parse_message_file(msg), MarketConfig(levels_tracked=3), SessionWindow())
    R = response_function(res.frames, 5)
    rows = [ln.split(",") for ln in body(Path("s/response.csv"))[1:6]]
    assert [float(r[1]) for r in rows] == R.value.tolist()


def test_reconciliation_failure_exit_code(tmp_path, lobster_files):
    msg, ob, day = lobster_files
    snaps = list(day.snapshots)
    s = snaps[100]
    snaps[100] = type(s)(s.ask_prices, (s.ask_sizes[0] + 1,) + s.ask_sizes[1:], s.bid_prices, s.bid_sizes)
    bad = tmp_path / "bad_orderbook.csv"
    bad.write_text(write_snapshots(snaps))
    args = ["ingest", "--messages", str(msg), "--orderbook", str(bad), "--levels", "3",
            "--out", str(tmp_path / "f.csv")]
    assert main(args) == EXIT_RECONCILE
    assert main(args + ["--max-mismatch", "0.01"]) == EXIT_OK


def test_missing_input_is_input_error(tmp_path):
    assert main(["stats", "--frames", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)]) == EXIT_INPUT


def test_malformed_messages_exit_code(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("34202.0,9,0,0,0,0\n")
    assert main(["ingest", "--messages", str(p), "--out", str(tmp_path / "f.csv")]) == EXIT_INPUT


def test_insufficient_data_exit_code(tmp_path):
    out = tmp_path / "tiny.csv"
    assert main(["simulate", "--steps", "10", "--out", str(out)]) == EXIT_OK
    assert main(["stats", "--frames", str(out), "--lags", "20", "--out-dir", str(tmp_path / "s")]) == EXIT_INSUFFICIENT


def test_usage_error_is_input_error(capsys):
    assert main(["simulate", "--mode", "sideways", "--out", "x.csv"]) == EXIT_INPUT
    assert main([]) == EXIT_INPUT


def test_config_file_values_and_flag_override(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    Path("cfg.json").write_text(json.dumps({"seed": 3, "simulate": {"steps": 500, "rho": 0.2}}))
    assert main(["simulate", "--config", "cfg.json", "--steps", "300", "--out", "a.csv"]) == EXIT_OK
    f = read_frames("a.csv")
    assert f.n == 300
    assert f.meta["signs"] == {"kind": "markov", "rho": 0.2, "seed": 3, "weights": []}


def test_data_root_env(tmp_path, monkeypatch):
    data = tmp_path / "data"
    data.mkdir()
    assert main(["simulate", "--steps", "2000", "--out", str(data / "sim.csv")]) == EXIT_OK
    monkeypatch.setenv("LOBMRR_DATA_ROOT", str(data))
    monkeypatch.chdir(tmp_path)
    assert main(["proxy", "--frames", "sim.csv", "--lags", "3", "--horizon", "5", "--out-dir", "px"]) == EXIT_OK
    assert (tmp_path / "px" / "proxy_series.csv").exists()


def test_report_json_matches_schema(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", "--steps", "20000", "--seed", "1", "--out", "sim.csv"]) == EXIT_OK
    assert main(["report", "--frames", "sim.csv", "--tickers", "SIM", "--format", "json",
                 "--out-dir", "rep"]) == EXIT_OK
    schema = json.loads((DOCS / "report.schema.json").read_text())
    stats = set()
    for name in ("table1", "table2", "table3", "table4"):
        doc = json.loads((Path("rep") / f"{name}.json").read_text())
        jsonschema.validate(doc, schema)
        stats |= {r["statistic"] for r in doc["rows"]}
    assert "depletion_impact" in stats


def test_report_csv_has_depletion_column(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["simulate", "--mode", "discrete", "--steps", "20000", "--out", "sim.csv"]) == EXIT_OK
    assert main(["report", "--frames", "sim.csv", "--out-dir", "rep"]) == EXIT_OK
    lines = body(Path("rep/table2.csv"))
    assert lines[0] == "ticker,statistic,value,se"
    dep = [ln.split(",") for ln in lines[1:] if ln.split(",")[1] == "depletion_impact"]
    assert dep and dep[0][0] == "sim" and float(dep[0][2]) > 0


def test_parallel_ingest_matches_serial(tmp_path):
    files = []
    for seed in (1, 2):
        day = generate_day(seed, n_events=1500, levels=2, start_time=38000.0, end_time=50000.0)
        m = tmp_path / f"D{seed}_message.csv"
        m.write_text(day.message_text())
        files.append(str(m))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["ingest", "--messages", *files, "--out", str(a)]) == EXIT_OK
    assert main(["ingest", "--messages", *files, "--jobs", "2", "--out", str(b)]) == EXIT_OK
    assert body(a) == body(b)
    assert list(np.unique(read_frames(a).day)) == [0, 1]
