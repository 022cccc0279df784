import json
from pathlib import Path

import pytest

from logcorr.cli import demo_spec, main
from logcorr.errors import MissingArtifactError, StaleArtifactError
from logcorr.io import file_sha256, read_events, read_rules
from logcorr import pipeline


def run_ok(argv):
    assert main(argv) == 0


def full_pipeline(out_dir: Path, eval_start: int) -> None:
    run_ok(["generate", "--out-dir", str(out_dir)])
    run_ok([
        "parse",
        "--out-dir", str(out_dir),
        "--config", str(out_dir / "config.xml"),
        "--input", str(out_dir / "raw.log"),
        "--year-hint", "2008",
    ])
    run_ok(["filter", "--out-dir", str(out_dir)])
    run_ok(["mine", "--out-dir", str(out_dir), "--eval-start", str(eval_start)])
    run_ok(["build-fcg", "--out-dir", str(out_dir)])
    run_ok(["predict", "--out-dir", str(out_dir)])
    run_ok(["evaluate", "--out-dir", str(out_dir)])


def boundary_for_demo() -> int:
    spec = demo_spec()
    return spec.start_time + int(spec.duration * 0.8)


def test_end_to_end_smoke(tmp_path):
    out = tmp_path / "run"
    full_pipeline(out, boundary_for_demo())
    report = (out / "evaluation_report.txt").read_text()
    assert "true_positives" in report
    assert "precision" in report
    tp = int(next(l.split("\t")[1] for l in report.splitlines()
                  if l.startswith("true_positives")))
    assert tp > 0  # the certainty-ish planted pair predicts into the eval period
    rules, clusters, _ = read_rules(out / "rules.tsv")
    assert rules
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["stages"]) == {
        "generate", "parse", "filter", "mine", "build-fcg", "predict", "evaluate"
    }


def test_mine_before_filter_is_missing_artifact(tmp_path):
    out = tmp_path / "run"
    run_ok(["generate", "--out-dir", str(out)])
    assert main(["mine", "--out-dir", str(out)]) == 3
    with pytest.raises(MissingArtifactError):
        pipeline.run_mine(out)


def test_changed_mine_params_stale_fcg_chain(tmp_path):
    out = tmp_path / "run"
    boundary = boundary_for_demo()
    run_ok(["generate", "--out-dir", str(out)])
    run_ok(["filter", "--out-dir", str(out)])
    run_ok(["mine", "--out-dir", str(out), "--eval-start", str(boundary)])
    run_ok(["build-fcg", "--out-dir", str(out)])
    # re-mine with a different window: the built graphs are now stale
    run_ok(["mine", "--out-dir", str(out), "--tw", "1800",
            "--eval-start", str(boundary)])
    with pytest.raises(StaleArtifactError):
        pipeline.run_predict(out)
    assert main(["predict", "--out-dir", str(out)]) == 3
    # rebuilding the graph stage clears the staleness
    run_ok(["build-fcg", "--out-dir", str(out)])
    run_ok(["predict", "--out-dir", str(out)])


def test_predict_overlapping_boundary_rejected(tmp_path):
    out = tmp_path / "run"
    boundary = boundary_for_demo()
    run_ok(["generate", "--out-dir", str(out)])
    run_ok(["filter", "--out-dir", str(out)])
    run_ok(["mine", "--out-dir", str(out), "--eval-start", str(boundary)])
    run_ok(["build-fcg", "--out-dir", str(out)])
    assert main(["predict", "--out-dir", str(out),
                 "--eval-start", str(boundary - 500)]) == 3


def test_stage_reruns_are_byte_idempotent(tmp_path):
    out = tmp_path / "run"
    run_ok(["generate", "--out-dir", str(out)])
    run_ok(["filter", "--out-dir", str(out)])
    before = file_sha256(out / "filtered_events.tsv")
    run_ok(["filter", "--out-dir", str(out)])
    assert file_sha256(out / "filtered_events.tsv") == before


def test_generated_formatted_pipeline_skips_parse(tmp_path):
    # the generator's formatted events feed filter directly
    out = tmp_path / "run"
    run_ok(["generate", "--out-dir", str(out)])
    run_ok(["filter", "--out-dir", str(out)])
    events, _ = read_events(out / "filtered_events.tsv")
    assert events


def test_filter_drops_demo_bursts_and_periodic(tmp_path):
    out = tmp_path / "run"
    run_ok(["generate", "--out-dir", str(out)])
    run_ok(["filter", "--out-dir", str(out)])
    report = (out / "filter_report.txt").read_text()
    fields = dict(
        line.split("\t") for line in report.splitlines() if not line.startswith("#")
    )
    assert int(fields["removed_repeated"]) > 0
    assert int(fields["removed_periodic"]) > 0
    assert int(fields["input_count"]) == (
        int(fields["removed_repeated"])
        + int(fields["removed_periodic"])
        + int(fields["output_count"])
    )


def test_spec_file_and_seed_override(tmp_path):
    out = tmp_path / "run"
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(demo_spec(seed=7).to_json())
    run_ok(["generate", "--out-dir", str(out), "--spec", str(spec_path), "--seed", "8"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["stages"]["generate"]["params"]["seed"] == 8


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["mine"])  # missing --out-dir
    assert exc.value.code == 2


def test_full_determinism_across_directories(tmp_path):
    # acceptance-style check at demo scale: two runs, byte-identical store
    boundary = boundary_for_demo()
    a, b = tmp_path / "a", tmp_path / "b"
    full_pipeline(a, boundary)
    full_pipeline(b, boundary)
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_cli_defaults_match_baseline():
    # every stage flag defaults to the baseline configuration
    from logcorr.cli import build_parser

    parser = build_parser()
    mine = parser.parse_args(["mine", "--out-dir", "x"])
    assert (mine.tw, mine.sth, mine.cth) == (3600, 5, 0.25)
    assert (mine.scth, mine.ccth, mine.cpth) == (10, 0.8, 0.8)
    assert mine.max_arity == 3 and mine.algorithm == "apriori"
    predict = parser.parse_args(["predict", "--out-dir", "x"])
    assert (predict.pth, predict.tp) == (0.25, 3600)
    assert predict.mark_lifetime is None  # falls back to the mining window
    filt = parser.parse_args(["filter", "--out-dir", "x"])
    assert (filt.repeat_window, filt.cycle_count, filt.cycle_fraction) == (10, 20, 0.25)
