"""Pipeline configuration: one YAML tree, validated field by field."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .classifier import SequenceHyper
from .cohort import DEFAULT_NEUTRAL, LabelSchema
from .encoder import EncoderSpec
from .errors import ConfigError
from .models import LinearHyper

AUTO = "auto"


@dataclass
class InputConfig:
    submissions: list[str] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)


@dataclass
class SchemaConfig:
    target: str = "antiwork"
    neutral: list[str] = field(default_factory=lambda: sorted(DEFAULT_NEUTRAL))


@dataclass
class SamplingSection:
    mu: float | str = AUTO
    sigma: float | str = AUTO
    n_samples: int | str = AUTO  # auto: as many neutral users as antiwork users
    seed: int = 0


@dataclass
class SplitSection:
    ratio: float = 0.75
    seed: int = 0


@dataclass
class EncoderSection:
    backend: str = "hashing"
    dim: int = 64
    max_tokens: int = 512
    seed: int = 0
    model_name: str = "roberta-base"


@dataclass
class SequenceSection:
    lr: float = 1e-3
    epochs: int = 30
    hidden: int = 128
    seed: int = 0
    grad_clip: float = 1.0
    batch_size: int = 32


@dataclass
class LinearSection:
    l2: float = 1e-3
    epochs: int = 300
    seed: int = 0


@dataclass
class AttributionSection:
    steps: int = 50
    baseline: str = "zero"
    max_users: int = 20


@dataclass
class AnalysisSection:
    lexicon: str | None = None  # None: bundled demo lexicon
    paired: bool = False


@dataclass
class TopicsSection:
    K: int = 10
    alpha: float | None = None
    beta: float = 0.01
    iters: int = 200
    seed: int = 0
    top_n: int = 10
    heldout_frac: float = 0.1


@dataclass
class SynthSection:
    n_users: int = 2000
    variant: str = "lexical"
    seed: int = 0


@dataclass
class PipelineConfig:
    out: str = "out"
    seed: int | None = None  # when set, overrides every section seed
    input: InputConfig = field(default_factory=InputConfig)
    schema: SchemaConfig = field(default_factory=SchemaConfig)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    split: SplitSection = field(default_factory=SplitSection)
    encoder: EncoderSection = field(default_factory=EncoderSection)
    sequence: SequenceSection = field(default_factory=SequenceSection)
    linear: LinearSection = field(default_factory=LinearSection)
    attribution: AttributionSection = field(default_factory=AttributionSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    topics: TopicsSection = field(default_factory=TopicsSection)
    synth: SynthSection = field(default_factory=SynthSection)

    # ------------------------------------------------------------ derived objects

    def label_schema(self) -> LabelSchema:
        return LabelSchema(self.schema.target, frozenset(self.schema.neutral))

    def encoder_spec(self) -> EncoderSpec:
        return EncoderSpec(**dataclasses.asdict(self.encoder))

    def sequence_hyper(self) -> SequenceHyper:
        return SequenceHyper(**dataclasses.asdict(self.sequence))

    def linear_hyper(self) -> LinearHyper:
        return LinearHyper(**dataclasses.asdict(self.linear))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_seed(self, seed: int) -> "PipelineConfig":
        cfg = dataclasses.replace(self, seed=seed)
        _apply_seed(cfg)
        return cfg


_SEEDED = ("sampling", "split", "encoder", "sequence", "linear", "topics", "synth")


def _apply_seed(cfg: PipelineConfig) -> None:
    if cfg.seed is None:
        return
    for name in _SEEDED:
        setattr(cfg, name, dataclasses.replace(getattr(cfg, name), seed=cfg.seed))


def _check_scalar(value, tp, where: str):
    """Coerce/validate one leaf against a (possibly union) annotation."""
    options = typing.get_args(tp) if typing.get_origin(tp) in (typing.Union, types.UnionType) else (tp,)
    for opt in options:
        if opt is type(None) and value is None:
            return None
        if opt is bool and isinstance(value, bool):
            return value
        if opt is int and isinstance(value, int) and not isinstance(value, bool):
            return value
        if opt is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if opt is str and isinstance(value, str):
            return value
        if typing.get_origin(opt) is list and isinstance(value, list):
            (inner,) = typing.get_args(opt)
            return [_check_scalar(v, inner, f"{where}[{i}]") for i, v in enumerate(value)]
    names = " or ".join(getattr(o, "__name__", str(o)) for o in options)
    raise ConfigError(f"{where}: expected {names}, got {value!r}")


def _build(cls, data, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where + '.' if where else ''}{unknown[0]}: unknown field")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        path = f"{where}.{f.name}" if where else f.name
        tp = hints[f.name]
        if dataclasses.is_dataclass(tp):
            kwargs[f.name] = _build(tp, data[f.name], path)
        else:
            kwargs[f.name] = _check_scalar(data[f.name], tp, path)
    return cls(**kwargs)


def _positive(cfg: PipelineConfig) -> None:
    checks = [
        ("sampling.sigma", cfg.sampling.sigma, lambda v: v == AUTO or (isinstance(v, float) and v > 0), "must be > 0 or 'auto'"),
        ("sampling.mu", cfg.sampling.mu, lambda v: v == AUTO or isinstance(v, float), "must be a number or 'auto'"),
        ("sampling.n_samples", cfg.sampling.n_samples, lambda v: v == AUTO or (isinstance(v, int) and v >= 1),
         "must be a positive integer or 'auto'"),
        ("split.ratio", cfg.split.ratio, lambda v: 0 < v < 1, "must be in (0, 1)"),
        ("encoder.backend", cfg.encoder.backend, lambda v: v in ("hashing", "transformer"), "must be hashing or transformer"),
        ("encoder.dim", cfg.encoder.dim, lambda v: v > 0, "must be positive"),
        ("encoder.max_tokens", cfg.encoder.max_tokens, lambda v: v > 0, "must be positive"),
        ("sequence.lr", cfg.sequence.lr, lambda v: v > 0, "must be positive"),
        ("sequence.epochs", cfg.sequence.epochs, lambda v: v >= 1, "must be at least 1"),
        ("sequence.hidden", cfg.sequence.hidden, lambda v: v >= 1, "must be at least 1"),
        ("sequence.grad_clip", cfg.sequence.grad_clip, lambda v: v > 0, "must be positive"),
        ("sequence.batch_size", cfg.sequence.batch_size, lambda v: v >= 1, "must be at least 1"),
        ("linear.l2", cfg.linear.l2, lambda v: v >= 0, "must be non-negative"),
        ("linear.epochs", cfg.linear.epochs, lambda v: v >= 1, "must be at least 1"),
        ("attribution.steps", cfg.attribution.steps, lambda v: v >= 1, "must be at least 1"),
        ("attribution.baseline", cfg.attribution.baseline, lambda v: v in ("zero", "pad"), "must be zero or pad"),
        ("attribution.max_users", cfg.attribution.max_users, lambda v: v >= 1, "must be at least 1"),
        ("topics.K", cfg.topics.K, lambda v: v >= 2, "must be at least 2"),
        ("topics.alpha", cfg.topics.alpha, lambda v: v is None or v > 0, "must be positive"),
        ("topics.beta", cfg.topics.beta, lambda v: v > 0, "must be positive"),
        ("topics.iters", cfg.topics.iters, lambda v: v >= 1, "must be at least 1"),
        ("topics.top_n", cfg.topics.top_n, lambda v: v >= 1, "must be at least 1"),
        ("topics.heldout_frac", cfg.topics.heldout_frac, lambda v: 0 <= v < 1, "must be in [0, 1)"),
        ("synth.n_users", cfg.synth.n_users, lambda v: v >= 4, "must be at least 4"),
        ("synth.variant", cfg.synth.variant, lambda v: v in ("lexical", "order"), "must be lexical or order"),
        ("schema.neutral", cfg.schema.neutral, lambda v: len(v) > 0, "needs at least one subreddit"),
        ("schema.target", cfg.schema.target,
         lambda v: bool(v) and v.lower() not in {s.lower() for s in cfg.schema.neutral}, "must be non-empty and not neutral"),
    ]
    for where, value, ok, msg in checks:
        if not ok(value):
            raise ConfigError(f"{where}: {msg} (got {value!r})")


def from_dict(data: dict | None) -> PipelineConfig:
    cfg = _build(PipelineConfig, data or {}, "")
    _apply_seed(cfg)
    _positive(cfg)
    return cfg


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return from_dict({})
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file {str(path)!r} does not exist")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {str(path)!r}: {exc}") from None
    return from_dict(data)


def check_paths(cfg: PipelineConfig, stage: str) -> None:
    """Referenced input files must exist before the stage that reads them starts."""
    if stage == "ingest":
        for kind in ("submissions", "comments"):
            for i, p in enumerate(getattr(cfg.input, kind)):
                if not Path(p).is_file():
                    raise ConfigError(f"input.{kind}[{i}]: file {p!r} does not exist")
    if stage == "analyze" and cfg.analysis.lexicon is not None and not Path(cfg.analysis.lexicon).is_file():
        raise ConfigError(f"analysis.lexicon: file {cfg.analysis.lexicon!r} does not exist")
