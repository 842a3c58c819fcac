"""CLI: every stage scriptable, exit codes and machine-readable errors."""

import json

import pytest
from click.testing import CliRunner

from fieldpress.cli import main
from fieldpress.media.fixtures import write_video


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def env(tmp_path):
    """Workspace root plus an offline provider script and two clips."""
    root = tmp_path / "ws"
    script = {"chunks": {"0": [{"start_s": 1.0, "end_s": 2.0,
                                "text": "ini taro segar", "confidence": 0.95}]}}
    script_path = tmp_path / "script.json"
    script_path.write_text(json.dumps(script))
    taro = write_video(tmp_path / "taro.mp4", 10.0, fps=10, width=64,
                       height=48, pattern="noise", hue=0.1)
    durian = write_video(tmp_path / "durian.mp4", 10.0, fps=10, width=64,
                         height=48, pattern="noise", hue=0.6)
    return {"root": str(root), "script": str(script_path),
            "taro": str(taro), "durian": str(durian)}


class Out:
    def __init__(self, result):
        self.result = result
        self.output = result.stdout  # stderr carries human-facing notes only


def run(runner, env, *args, expect=0):
    result = runner.invoke(main, ["--root", env["root"], *args],
                           catch_exceptions=False)
    assert result.exit_code == expect, result.output
    return Out(result)


def test_full_pipeline_through_cli(runner, env, tmp_path):
    out = run(runner, env, "ingest", env["taro"], env["durian"])
    asset_ids = [line.split()[0] for line in out.output.strip().splitlines()]
    taro_id, durian_id = asset_ids

    run(runner, env, "init", "field", "--balance", "1:5000")

    out = run(runner, env, "transcribe", taro_id, "--chunk-len", "5",
              "--script", env["script"], "--term", "taro")
    assert "taro" in out.output
    assert "hit:" in out.output

    out = run(runner, env, "search", taro_id, "taro")
    hits = json.loads(out.output)
    assert hits[0]["matched_token"] == "taro"

    run(runner, env, "label", "field", "--asset", taro_id, "--label", "taro",
        "--from-term", "taro", "--pad-before", "1", "--pad-after", "2")
    run(runner, env, "label", "field", "--asset", durian_id,
        "--label", "durian", "--whole")

    out = run(runner, env, "extract", "field", "--fps-cap", "2",
              "--tags", "garden")
    assert "added" in out.output

    out = run(runner, env, "curate", "field", "--blur", "100", "--dedup", "4",
              "--balance", "1:5000", "--seed", "7")
    report = json.loads(out.output)
    assert report["taro"]["kept"] > 0
    assert report["durian"]["kept"] == 20

    out = run(runner, env, "split", "field", "--fraction", "0.5", "--seed", "7")
    assert "train:" in out.output

    out = run(runner, env, "normalize", "field")
    assert "mean" in json.loads(out.output)

    out = run(runner, env, "export", "field", "--out", str(tmp_path / "rel"))
    summary = json.loads(out.output)
    assert summary["digest"]
    assert (tmp_path / "rel" / f"field-v{summary['version']}" / "DIGEST").exists()

    log_path = tmp_path / "baseline.jsonl"
    run(runner, env, "baseline", "field", "--out", str(log_path))
    assert log_path.exists()

    out = run(runner, env, "evaluate", "field", "--log", str(log_path),
              "--k", "1", "--k", "3", "--csv", str(tmp_path / "fig.csv"))
    assert "macro" in out.output
    assert (tmp_path / "fig.csv").read_text().startswith("category,")

    out = run(runner, env, "vote", "field", "--log", str(log_path),
              "--log", str(log_path), "--log", str(log_path))
    assert "vote" in out.output

    out = run(runner, env, "report", "field")
    doc = json.loads(out.output)
    assert doc["dataset_id"] == "field"
    assert doc["normalization"] is not None


def test_ingest_rejects_avi_with_machine_readable_error(runner, env, tmp_path):
    bad = tmp_path / "x.avi"
    bad.write_bytes(b"RIFF")
    result = runner.invoke(main, ["--root", env["root"], "ingest", str(bad)])
    assert result.exit_code == 1
    err = json.loads(result.stderr.strip().splitlines()[-1])
    assert err["kind"] == "UnsupportedContainer"


def test_curate_before_init_fails_cleanly(runner, env):
    result = runner.invoke(main, ["--root", env["root"], "curate", "ghost"])
    assert result.exit_code == 1
    err = json.loads(result.stderr.strip().splitlines()[-1])
    assert "error" in err


def test_label_requires_span_source(runner, env):
    run(runner, env, "init", "field")
    out = run(runner, env, "ingest", env["taro"])
    asset_id = out.output.split()[0]
    result = runner.invoke(main, ["--root", env["root"], "label", "field",
                                  "--asset", asset_id, "--label", "taro"])
    assert result.exit_code == 1


def test_span_export_import_round_trip(runner, env, tmp_path):
    run(runner, env, "init", "field")
    out = run(runner, env, "ingest", env["taro"])
    asset_id = out.output.split()[0]
    run(runner, env, "label", "field", "--asset", asset_id, "--label", "taro",
        "--start", "1", "--end", "4")
    spans_file = tmp_path / "spans.jsonl"
    run(runner, env, "label", "field", "--export", str(spans_file))
    assert json.loads(spans_file.read_text())["label"] == "taro"

    run(runner, env, "init", "copy")
    run(runner, env, "label", "copy", "--import", str(spans_file))
    out = run(runner, env, "report", "copy")
    assert json.loads(out.output)["dataset_id"] == "copy"
