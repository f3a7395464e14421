import hashlib
import json
import re
import shutil
from pathlib import Path

import pytest
from filelock import FileLock

from antiwork.cli import main, run
from antiwork.cohort import read_labeled

from conftest import FIXTURES

SMALL = "encoder: {dim: 16}\nsequence: {hidden: 8, epochs: 4}\nlinear: {epochs: 60}\n" \
        "synth: {n_users: 80}\nattribution: {steps: 16, max_users: 3}\ntopics: {K: 3, iters: 30}\n"


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def tree_digests(root: Path, skip=()) -> dict:
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != ".lock"
            and p.relative_to(root).parts[0] not in skip}


@pytest.fixture(scope="module")
def pipeline_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    cfg = root / "small.yaml"
    cfg.write_text(SMALL)
    out = root / "out"
    assert run(["all", "--with-synth", "--config", str(cfg), "--out", str(out), "--seed", "0"]) == 0
    assert run(["export", "--config", str(cfg), "--out", str(out), "--seed", "0"]) == 0
    return cfg, out


def test_synth_digests_repeat(tmp_path, small_cfg):
    digests = []
    for name in ("a", "b"):
        assert run(["synth", "--config", str(small_cfg), "--out", str(tmp_path / name), "--seed", "0"]) == 0
        digests.append(json.loads((tmp_path / name / "raw" / "manifest.json").read_text())["corpus_sha256"])
    assert digests[0] == digests[1]
    assert run(["synth", "--config", str(small_cfg), "--out", str(tmp_path / "c"), "--seed", "1"]) == 0
    other = json.loads((tmp_path / "c" / "raw" / "manifest.json").read_text())["corpus_sha256"]
    assert other["submissions.jsonl"] != digests[0]["submissions.jsonl"]


def test_label_counts_match_generator_truth(pipeline_run):
    _, out = pipeline_run
    truth = json.loads((out / "raw" / "truth.json").read_text())
    counts = json.loads((out / "label" / "label_counts.json").read_text())
    for role in ("antiwork", "neutral", "excluded"):
        assert counts[role] == sum(r == role for r in truth.values())
    labeled = {u.author: u.label.value for u in read_labeled(out / "label" / "labeled.jsonl")}
    assert labeled == truth  # junk, deleted and off-filter authors never reach labeling


def test_manifest_in_every_stage_dir(pipeline_run):
    _, out = pipeline_run
    dirs = ["raw", "ingest", "label", "sample", "dataset", "models", "evaluate", "attribute", "analyze",
            "topics", "report", "export"]
    for d in dirs:
        m = json.loads((out / d / "manifest.json").read_text())
        assert m["seed"] == 0 and len(m["config_sha256"]) == 64
        for rel, digest in m["outputs"].items():
            assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
        for section in ("sampling", "split", "encoder", "sequence", "linear", "topics", "synth"):
            assert m["config"][section]["seed"] == 0
    ds = json.loads((out / "dataset" / "manifest.json").read_text())
    assert {"mu", "sigma", "split_ratio", "schema", "counts"} <= set(ds)


def test_report_and_tables_exist(pipeline_run):
    _, out = pipeline_run
    assert "<!DOCTYPE html>" in (out / "report" / "report.html").read_text()
    header = (out / "analyze" / "liwc_table.csv").read_text().splitlines()[0]
    assert header == "Category,Antiwork,Neutral,z,p,stars"
    topics = json.loads((out / "topics" / "topics.json").read_text())
    assert topics["K"] == 3


def test_export_is_anonymised(pipeline_run):
    _, out = pipeline_run
    lines = (out / "export" / "antiwork.jsonl").read_text().splitlines()
    assert lines
    for line in lines:
        row = json.loads(line)
        assert row["label"] == "antiwork" and "author" not in row
        for post in row["posts"]:
            assert "author" not in post and "id" not in post
            text = post["title"] + " " + post["body"]
            assert not re.search(r"https?://|www\.|\d", text)
    assert not (out / "export" / "sequence.json").exists()


def test_rerun_is_byte_identical(pipeline_run):
    cfg, out = pipeline_run
    before = tree_digests(out)
    assert run(["all", "--with-synth", "--config", str(cfg), "--out", str(out), "--seed", "0"]) == 0
    assert run(["export", "--config", str(cfg), "--out", str(out), "--seed", "0"]) == 0
    assert tree_digests(out) == before


def test_evaluate_bundled_fixture(tmp_path):
    out = tmp_path / "out"
    code = run(["evaluate", "--out", str(out), "--dataset", str(FIXTURES / "twenty_users.jsonl"),
                "--models", str(FIXTURES / "models")])
    assert code == 0
    metrics = json.loads((out / "evaluate" / "metrics.json").read_text())
    assert set(metrics) == {"random", "tfidf_svm", "ling_svm", "concat_linear", "sequence"}
    for m in metrics.values():
        assert {"accuracy", "precision", "recall", "f1"} <= set(m)
        assert all(0.0 <= m[k] <= 1.0 for k in ("accuracy", "precision", "recall", "f1"))
    assert "Accuracy" in (out / "evaluate" / "metrics.txt").read_text()


def test_export_checkpoint_flag(tmp_path):
    out = tmp_path / "out"
    assert run(["export", "--out", str(out), "--dataset", str(FIXTURES / "twenty_users.jsonl"),
                "--models", str(FIXTURES / "models"), "--include-checkpoint"]) == 0
    assert (out / "export" / "sequence.json").read_bytes() == (FIXTURES / "models" / "sequence.json").read_bytes()


@pytest.mark.parametrize("body,field", [
    ("sequence: {lr: -1}\n", "sequence.lr"),
    ("sampling: {sigma: 0}\n", "sampling.sigma"),
    ("split: {ratio: 1.5}\n", "split.ratio"),
    ("sequence: {hiden: 3}\n", "sequence.hiden"),
    ("topics: {K: ten}\n", "topics.K"),
    ("input: {submissions: [/no/such/file.jsonl]}\n", "input.submissions[0]"),
])
def test_invalid_config_exit_2(tmp_path, capsys, body, field):
    p = tmp_path / "bad.yaml"
    p.write_text(body)
    assert run(["ingest", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert field in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path, capsys):
    assert run(["label", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_runtime_failure_exit_1(tmp_path, capsys):
    assert run(["evaluate", "--out", str(tmp_path / "empty")]) == 1
    assert "'evaluate'" in capsys.readouterr().err


def test_locked_output_exit_1(tmp_path, capsys):
    out = tmp_path / "o"
    out.mkdir()
    with FileLock(str(out / ".lock")):
        assert run(["label", "--out", str(out)]) == 1
    assert "locked" in capsys.readouterr().err


def test_main_exits_with_code(monkeypatch, tmp_path):
    monkeypatch.setattr("sys.argv", ["antiwork", "evaluate", "--out", str(tmp_path / "x")])
    with pytest.raises(SystemExit) as exc:
        main()
    assert exc.value.code == 1


def test_ingest_without_inputs_is_config_error(tmp_path):
    assert run(["ingest", "--out", str(tmp_path / "o")]) == 2
