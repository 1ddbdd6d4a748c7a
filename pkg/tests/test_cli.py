import json

from click.testing import CliRunner

from framefinder.cli import main
from framefinder.evaluation import LoggedQuery, dump_log
from framefinder.ingest import load_bundle
from framefinder.pipeline import QuerySpec

from .corpus_utils import write_corpus


def test_ingest_then_sweep(tmp_path):
    manifest = write_corpus(tmp_path / "src", n=8, seed=4)
    runner = CliRunner()

    result = runner.invoke(
        main, ["ingest", "--manifest", str(manifest), "--out", str(tmp_path / "idx")]
    )
    assert result.exit_code == 0, result.output
    assert "indexed 8 keyframes" in result.output

    bundle = load_bundle(tmp_path / "idx")
    truth = bundle.snapshot.ids[0]
    log_path = tmp_path / "log.jsonl"
    dump_log(
        [LoggedQuery(QuerySpec(tags=("park",)), frozenset({truth}))], log_path
    )

    result = runner.invoke(
        main,
        [
            "eval", "sweep",
            "--index", str(tmp_path / "idx"),
            "--log", str(log_path),
            "--k", "1,10",
            "--out", str(tmp_path / "report.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "MRR@10" in result.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report["triples"]) == 64


def test_help_lists_verbs():
    runner = CliRunner()
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for verb in ("ingest", "serve", "eval"):
        assert verb in result.output
