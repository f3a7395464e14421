"""Open category-lexicon format and per-text category counting.

File format: a line ``#Name`` (no space after the hash) opens a category and
each following non-blank line is one pattern.  ``# text`` lines are comments.
A trailing ``*`` makes a prefix pattern.  Patterns made only of punctuation
(``?``, ``,``) count raw character occurrences instead of word tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

_WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def words(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _is_punct_pattern(p: str) -> bool:
    return bool(p) and not any(c.isalnum() for c in p) and p != "*"


@dataclass(frozen=True)
class Lexicon:
    categories: dict[str, tuple[str, ...]]
    _literals: dict = field(init=False, repr=False, compare=False)
    _stems: dict = field(init=False, repr=False, compare=False)
    _punct: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lit, stems, punct = {}, {}, {}
        for cat, patterns in self.categories.items():
            if not patterns:
                raise ValueError(f"category {cat!r} has no patterns")
            for p in patterns:
                if p != p.lower():
                    raise ValueError(f"pattern {p!r} in {cat!r} must be lowercase")
            punct[cat] = tuple(p for p in patterns if _is_punct_pattern(p))
            stems[cat] = tuple(p[:-1] for p in patterns if p.endswith("*") and len(p) > 1)
            lit[cat] = frozenset(p for p in patterns if not p.endswith("*") and not _is_punct_pattern(p))
        object.__setattr__(self, "_literals", lit)
        object.__setattr__(self, "_stems", stems)
        object.__setattr__(self, "_punct", punct)

    @property
    def names(self) -> list[str]:
        return list(self.categories)

    def word_categories(self, word: str) -> tuple[str, ...]:
        return tuple(
            cat for cat in self.categories
            if word in self._literals[cat] or any(word.startswith(s) for s in self._stems[cat])
        )

    @classmethod
    def parse(cls, text: str) -> "Lexicon":
        cats: dict[str, list[str]] = {}
        current = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("# ") or line == "#":
                continue
            if line.startswith("#"):
                current = line[1:].strip()
                if current in cats:
                    raise ValueError(f"line {lineno}: duplicate category {current!r}")
                cats[current] = []
            elif current is None:
                raise ValueError(f"line {lineno}: pattern {line!r} before any #Category header")
            else:
                cats[current].append(line.lower())
        if not cats:
            raise ValueError("lexicon defines no categories")
        return cls({k: tuple(v) for k, v in cats.items()})

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def builtin(cls) -> "Lexicon":
        return cls.parse(resources.files("antiwork").joinpath("data/demo_lexicon.txt").read_text(encoding="utf-8"))

    def dumps(self) -> str:
        return "".join(f"#{cat}\n" + "".join(f"{p}\n" for p in pats) for cat, pats in self.categories.items())


@dataclass(frozen=True)
class LexiconCounts:
    word_count: int
    counts: dict[str, int]
    rates: dict[str, float]  # per 100 words


def lexicon_counts(text: str, lexicon: Lexicon) -> LexiconCounts:
    toks = words(text)
    lookup = lru_cache(maxsize=None)(lexicon.word_categories)
    counts = {cat: 0 for cat in lexicon.categories}
    for tok in toks:
        for cat in lookup(tok):
            counts[cat] += 1
    for cat, pats in lexicon._punct.items():
        counts[cat] += sum(text.count(p) for p in pats)
    n = len(toks)
    rates = {cat: (100.0 * c / n if n else 0.0) for cat, c in counts.items()}
    return LexiconCounts(n, counts, rates)
