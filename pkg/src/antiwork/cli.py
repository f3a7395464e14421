"""``antiwork`` command line: one subcommand per pipeline stage.

Stages hand off newline-delimited JSON through the output directory::

    raw/        synth            submissions.jsonl comments.jsonl truth.json
    ingest/     ingest           users.jsonl parse_stats.json
    label/      label            labeled.jsonl label_counts.json
    sample/     sample           sampled.jsonl
    dataset/    split            train.jsonl val.jsonl
    models/     train            tfidf_svm.json ling_svm.json concat_linear.json sequence.json
    evaluate/   evaluate         metrics.json metrics.txt
    attribute/  attribute        attributions.jsonl
    analyze/    analyze          liwc_table.csv liwc_table.json
    topics/     topics           topics.json salient_terms.csv
    report/     report           report.html
    export/     export           antiwork.jsonl

Every directory also gets ``manifest.json`` (config digest, resolved config,
seed, input and output digests).  Exit status: 0 ok, 1 stage failure, 2 bad
configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import shutil
import sys
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np
from filelock import FileLock, Timeout

from . import __version__
from .analysis import Lexicon, compare_groups, lexicon_counts, write_results_csv
from .analysis.topics import fit_lda, heldout_perplexity, salient_terms, topic_tokens, unigram_perplexity
from .attribution import AttributionResult, attribute_user, normalize_scores
from .cohort import (
    Label,
    SamplingConfig,
    label_counts,
    label_users,
    load_dataset,
    post_count_stats,
    read_labeled,
    sample_neutral,
    save_dataset,
    split,
    write_labeled,
)
from .config import AUTO, PipelineConfig, check_paths, load_config
from .corpus import COMMENT, SUBMISSION, ParseStats, clean_text, clean_user, group_users, iter_users, parse_dump, write_users
from .errors import ConfigError
from .models import SequenceClassifier, evaluate_ladder, load_ladder, metrics_table, save_ladder, train_ladder
from .report import render_report
from .synth import SynthConfig, write_corpus

log = logging.getLogger("antiwork")

PIPELINE = ("ingest", "label", "sample", "split", "train", "evaluate", "attribute", "analyze", "topics", "report")


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage


# ---------------------------------------------------------------- manifests


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _rel(path: Path, root: Path) -> str:
    try:
        return path.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return str(path)


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


class Stage:
    """Book-keeping for one stage run: tracks inputs/outputs and writes the manifest."""

    def __init__(self, name: str, cfg: PipelineConfig, out: Path, subdir: str):
        self.name = name
        self.cfg = cfg
        self.out = out
        self.dir = out / subdir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.extra: dict = {}

    def read(self, path: Path) -> Path:
        if not path.exists():
            raise FileNotFoundError(f"{path} is missing; run the producing stage first")
        self.inputs.append(path)
        return path

    def write(self, name: str) -> Path:
        p = self.dir / name
        self.outputs.append(p)
        return p

    def manifest(self) -> dict:
        def digests(paths):
            return {_rel(p, self.out): sha256_file(p) for p in paths if p.is_file()}

        return {
            "stage": self.name,
            "version": __version__,
            "seed": self.cfg.seed,
            "config_sha256": self.cfg.digest(),
            "config": self.cfg.to_dict(),
            "inputs": digests(self.inputs),
            "outputs": digests(self.outputs),
            **self.extra,
        }

    def finish(self) -> Path:
        path = self.dir / "manifest.json"
        _dump_json(self.manifest(), path)
        return path


# ---------------------------------------------------------------- stages


def stage_synth(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("synth", cfg, out, "raw")
    sc = SynthConfig(n_users=cfg.synth.n_users, seed=cfg.synth.seed, variant=cfg.synth.variant)
    digests = write_corpus(sc, st.dir)
    st.outputs += [st.dir / n for n in sorted(digests)]
    st.extra["corpus_sha256"] = digests
    return st


def _ingest_inputs(cfg: PipelineConfig, out: Path) -> list[tuple[str, Path]]:
    pairs = [(SUBMISSION, Path(p)) for p in cfg.input.submissions] + [(COMMENT, Path(p)) for p in cfg.input.comments]
    if not pairs:
        raw = out / "raw"
        pairs = [(k, raw / f) for k, f in ((SUBMISSION, "submissions.jsonl"), (COMMENT, "comments.jsonl"))
                 if (raw / f).is_file()]
    if not pairs:
        raise ConfigError("input: no submission or comment dumps configured (and no raw/ corpus in the output directory)")
    return pairs


def stage_ingest(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("ingest", cfg, out, "ingest")
    schema = cfg.label_schema()
    stats = ParseStats()
    posts = []
    per_file = {}
    for kind, path in _ingest_inputs(cfg, out):
        s = ParseStats()
        posts += parse_dump(st.read(path), kind, schema.subreddits, s)
        per_file[_rel(path, out)] = s.to_dict()
        stats = stats.merge(s)
    users = [clean_user(u) for u in group_users(posts)]
    write_users(users, st.write("users.jsonl"))
    _dump_json({"total": stats.to_dict(), "files": per_file, "users": len(users)}, st.write("parse_stats.json"))
    st.extra["users"] = len(users)
    return st


def stage_label(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("label", cfg, out, "label")
    labeled = label_users(iter_users(st.read(out / "ingest" / "users.jsonl")), cfg.label_schema())
    write_labeled(labeled, st.write("labeled.jsonl"))
    counts = label_counts(labeled)
    _dump_json(counts, st.write("label_counts.json"))
    st.extra["counts"] = counts
    return st


def _resolve_sampling(cfg: PipelineConfig, antiwork: list, pool: list) -> SamplingConfig:
    mu, sigma = cfg.sampling.mu, cfg.sampling.sigma
    if AUTO in (mu, sigma):
        est_mu, est_sigma = post_count_stats(antiwork)
        mu = est_mu if mu == AUTO else mu
        if sigma == AUTO:
            sigma = est_sigma if est_sigma > 0 else 1.0
    n = cfg.sampling.n_samples
    if n == AUTO:
        n = min(len(antiwork), len(pool))
    return SamplingConfig(mu=float(mu), sigma=float(sigma), n_samples=int(n), seed=cfg.sampling.seed)


def stage_sample(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("sample", cfg, out, "sample")
    labeled = read_labeled(st.read(out / "label" / "labeled.jsonl"))
    antiwork = [u for u in labeled if u.label is Label.ANTIWORK]
    pool = [u for u in labeled if u.label is Label.NEUTRAL]
    sc = _resolve_sampling(cfg, antiwork, pool)
    drawn = sample_neutral(pool, sc)
    write_labeled(drawn, st.write("sampled.jsonl"))
    st.extra["sampling"] = {"mu": sc.mu, "sigma": sc.sigma, "n_samples": sc.n_samples, "seed": sc.seed,
                            "pool": len(pool)}
    return st


def stage_split(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("split", cfg, out, "dataset")
    labeled = read_labeled(st.read(out / "label" / "labeled.jsonl"))
    sampled = read_labeled(st.read(out / "sample" / "sampled.jsonl"))
    sample_manifest = json.loads((out / "sample" / "manifest.json").read_text())
    users = [u for u in labeled if u.label is Label.ANTIWORK] + sampled
    ds = split(users, cfg.split.ratio, cfg.split.seed)
    st.outputs += [st.dir / "train.jsonl", st.dir / "val.jsonl"]
    st.extra.update(seed=ds.seed, schema=cfg.label_schema().to_dict(), mu=sample_manifest["sampling"]["mu"],
                    sigma=sample_manifest["sampling"]["sigma"], split_ratio=ds.split_ratio,
                    counts=ds.counts())
    # write the jsonl files first so the manifest can digest them
    save_dataset(ds, st.dir)
    return st


def _dataset_users(st: Stage, args, which: str):
    """Users for a stage: ``--dataset`` (dataset dir or labeled jsonl) or the pipeline's dataset/."""
    src = Path(args.dataset) if getattr(args, "dataset", None) else st.out / "dataset"
    if src.is_file():
        users = read_labeled(st.read(src))
        return users, users
    ds = load_dataset(src)
    st.read(src / "train.jsonl")
    st.read(src / "val.jsonl")
    return ds.train, ds.val


def _models_dir(st: Stage, args) -> Path:
    d = Path(args.models) if getattr(args, "models", None) else st.out / "models"
    if not d.is_dir():
        raise FileNotFoundError(f"model directory {d} is missing; run train first")
    return d


def stage_train(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("train", cfg, out, "models")
    train, val = _dataset_users(st, args, "train")
    models = train_ladder(train, val, cfg.encoder_spec(), cfg.sequence_hyper(), cfg.linear_hyper())
    save_ladder(models, st.dir)
    st.outputs += sorted(p for p in st.dir.glob("*.json") if p.name != "manifest.json")
    seq = models["sequence"].model
    st.extra["sequence"] = {"best_epoch": seq.meta.get("best_epoch"), "history": seq.history}
    return st


def stage_evaluate(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("evaluate", cfg, out, "evaluate")
    _, val = _dataset_users(st, args, "evaluate")
    mdir = _models_dir(st, args)
    models = load_ladder(mdir)
    for p in sorted(mdir.glob("*.json")):
        if p.name != "manifest.json":
            st.read(p)
    results = evaluate_ladder(models, val, random_seed=cfg.linear.seed)
    _dump_json({name: m.to_dict(confusion=True) for name, m in results.items()}, st.write("metrics.json"))
    st.write("metrics.txt").write_text(metrics_table(results), encoding="utf-8")
    st.extra["n_users"] = len(val)
    return st


def stage_attribute(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("attribute", cfg, out, "attribute")
    _, val = _dataset_users(st, args, "attribute")
    clf = SequenceClassifier.load(st.read(_models_dir(st, args) / "sequence.json"))
    targets = [u for u in val if u.label is Label.ANTIWORK]
    scores = clf.decision(targets) if targets else np.zeros(0)
    # most confident true positives first; ties by author for determinism
    order = sorted(range(len(targets)), key=lambda i: (-scores[i], targets[i].author))
    chosen = [targets[i] for i in order if scores[i] > 0][: cfg.attribution.max_users]
    n = 0
    with open(st.write("attributions.jsonl"), "w", encoding="utf-8") as fh:
        for u in chosen:
            for res in attribute_user(clf, u, cfg.attribution.steps, cfg.attribution.baseline):
                fh.write(res.to_json() + "\n")
                n += 1
    st.extra.update(users=len(chosen), posts=n, steps=cfg.attribution.steps, baseline=cfg.attribution.baseline)
    return st


def stage_analyze(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("analyze", cfg, out, "analyze")
    train, val = _dataset_users(st, args, "analyze")
    users = list({u.author: u for u in list(train) + list(val)}.values())
    if cfg.analysis.lexicon:
        lex = Lexicon.load(st.read(Path(cfg.analysis.lexicon)))
    else:
        lex = Lexicon.builtin()
    groups = {Label.ANTIWORK: defaultdict(list), Label.NEUTRAL: defaultdict(list)}
    for u in users:
        if u.label not in groups:
            continue
        for p in u.record.posts:
            c = lexicon_counts(p.text, lex)
            for cat in lex.names:
                groups[u.label][cat].append(c.rates[cat])
    if not groups[Label.ANTIWORK] or not groups[Label.NEUTRAL]:
        raise ConfigError("analyze: both antiwork and neutral users are required")
    results = compare_groups(groups[Label.ANTIWORK], groups[Label.NEUTRAL], paired=cfg.analysis.paired)
    write_results_csv(results, st.write("liwc_table.csv"))
    _dump_json([r.__dict__ for r in results], st.write("liwc_table.json"))
    st.extra.update(n_tests=len(results), posts={k.value: len(next(iter(v.values()))) for k, v in groups.items()})
    return st


def stage_topics(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("topics", cfg, out, "topics")
    train, val = _dataset_users(st, args, "topics")
    users = list({u.author: u for u in list(train) + list(val)}.values())
    docs = [topic_tokens(p.text) for u in users if u.label is Label.ANTIWORK for p in u.record.posts]
    docs = [d for d in docs if d]
    t = cfg.topics
    rng = np.random.default_rng(t.seed)
    perm = rng.permutation(len(docs))
    n_held = int(len(docs) * t.heldout_frac)
    held = [docs[i] for i in sorted(perm[:n_held])]
    fit_docs = [docs[i] for i in sorted(perm[n_held:])]
    model = fit_lda(fit_docs, K=t.K, alpha=t.alpha, beta=t.beta, iters=t.iters, seed=t.seed)
    counts = Counter(w for d in fit_docs for w in d)
    salient = salient_terms(model, counts, t.top_n)
    payload = model.to_dict(t.top_n)
    payload["n_docs"] = len(fit_docs)
    if held:
        payload["heldout"] = {"docs": len(held), "lda_perplexity": heldout_perplexity(model, held, seed=t.seed),
                              "unigram_perplexity": unigram_perplexity(fit_docs, held, beta=t.beta)}
    _dump_json(payload, st.write("topics.json"))
    with open(st.write("salient_terms.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["term", "saliency", "count"])
        for term, s in salient:
            w.writerow([term, f"{s:.6g}", counts[term]])
    return st


def stage_report(cfg: PipelineConfig, out: Path, args) -> Stage:
    st = Stage("report", cfg, out, "report")
    src = Path(args.attributions) if getattr(args, "attributions", None) else out / "attribute" / "attributions.jsonl"
    with open(st.read(src), encoding="utf-8") as fh:
        results = [normalize_scores(AttributionResult.from_dict(json.loads(line))) for line in fh if line.strip()]
    meta = {"config sha256": cfg.digest()[:16], "posts": len(results), "integration steps": cfg.attribution.steps,
            "baseline": cfg.attribution.baseline}
    st.write("report.html").write_text(render_report(results, meta), encoding="utf-8")
    return st


EXPORT_POST_FIELDS = ("subreddit", "created_utc", "kind", "title", "body", "score", "ups", "downs",
                      "num_comments", "gilded", "pinned")


def stage_export(cfg: PipelineConfig, out: Path, args) -> Stage:
    """Antiwork-labeled users only, with author names and post ids removed."""
    st = Stage("export", cfg, out, "export")
    train, val = _dataset_users(st, args, "export")
    users = sorted({u.author: u for u in list(train) + list(val)}.values(), key=lambda u: u.author)
    n = 0
    with open(st.write("antiwork.jsonl"), "w", encoding="utf-8") as fh:
        for u in users:
            if u.label is not Label.ANTIWORK:
                continue
            posts = []
            for p in u.record.posts:
                d = {k: getattr(p, k) for k in EXPORT_POST_FIELDS}
                d["title"], d["body"] = clean_text(p.title), clean_text(p.body)
                posts.append(d)
            fh.write(json.dumps({"label": Label.ANTIWORK.value, "posts": posts}, ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    if getattr(args, "include_checkpoint", False):
        src = st.read(_models_dir(st, args) / "sequence.json")
        shutil.copyfile(src, st.write("sequence.json"))
    st.extra["users"] = n
    return st


STAGES = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "label": stage_label,
    "sample": stage_sample,
    "split": stage_split,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "attribute": stage_attribute,
    "analyze": stage_analyze,
    "topics": stage_topics,
    "report": stage_report,
    "export": stage_export,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML pipeline config")
    common.add_argument("--out", help="output directory (overrides config 'out')")
    common.add_argument("--seed", type=int, help="override every seed in the config")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="antiwork", description="User-level antiwork cohort pipeline.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "all"):
        sp = sub.add_parser(name, parents=[common])
        if name in ("train", "evaluate", "attribute", "analyze", "topics", "export"):
            sp.add_argument("--dataset", help="dataset directory or labeled .jsonl (default: <out>/dataset)")
        if name in ("evaluate", "attribute", "export"):
            sp.add_argument("--models", help="checkpoint directory (default: <out>/models)")
        if name == "report":
            sp.add_argument("--attributions", help="attributions .jsonl (default: <out>/attribute/attributions.jsonl)")
        if name == "export":
            sp.add_argument("--include-checkpoint", action="store_true", help="also copy the sequence checkpoint")
        if name == "synth":
            sp.add_argument("--n-users", type=int)
            sp.add_argument("--variant", choices=("lexical", "order"))
        if name == "all":
            sp.add_argument("--with-synth", action="store_true", help="generate a synthetic corpus first")
    return p


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out:
        cfg.out = args.out
    if getattr(args, "n_users", None) is not None:
        if args.n_users < 4:
            raise ConfigError(f"synth.n_users: must be at least 4 (got {args.n_users})")
        cfg.synth.n_users = args.n_users
    if getattr(args, "variant", None):
        cfg.synth.variant = args.variant
    return cfg


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "all":
        names = (("synth",) if args.with_synth else ()) + PIPELINE
    else:
        names = (args.command,)
    try:
        with FileLock(str(out / ".lock"), timeout=0):
            for name in names:
                try:
                    check_paths(cfg, name)
                    STAGES[name](cfg, out, args).finish()
                except ConfigError:
                    raise
                except Exception as exc:  # noqa: BLE001 -- reported with the stage name
                    raise StageFailure(name, exc) from exc
                log.info("stage %s done", name)
    except Timeout:
        print(f"error: output directory {out} is locked by another run", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageFailure as exc:
        log.debug("traceback", exc_info=exc.__cause__)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
