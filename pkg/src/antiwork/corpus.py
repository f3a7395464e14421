"""Dump parsing, per-user grouping and text sanitizing."""

from __future__ import annotations

import bz2
import dataclasses
import gzip
import io
import json
import logging
import lzma
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import emoji

log = logging.getLogger(__name__)

SUBMISSION = "submission"
COMMENT = "comment"
PLACEHOLDER_TEXTS = frozenset({"[removed]", "[deleted]"})


class InputError(Exception):
    """An input stream could not be opened or read."""


@dataclass(frozen=True)
class Post:
    id: str
    author: str
    subreddit: str
    created_utc: int
    title: str
    body: str
    kind: str
    score: int = 0
    ups: int = 0
    downs: int = 0
    num_comments: int = 0
    gilded: int = 0
    pinned: bool = False

    @property
    def text(self) -> str:
        """Title and body as one string (comments have an empty title)."""
        if self.title and self.body:
            return f"{self.title}\n{self.body}"
        return self.title or self.body

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Post":
        return cls(**{f.name: d[f.name] for f in dataclasses.fields(cls) if f.name in d})


@dataclass(frozen=True)
class UserRecord:
    author: str
    posts: tuple[Post, ...]

    def __post_init__(self):
        if not self.posts:
            raise ValueError(f"user {self.author!r} has no posts")

    def __len__(self):
        return len(self.posts)

    def to_dict(self) -> dict:
        return {"author": self.author, "posts": [p.to_dict() for p in self.posts]}

    @classmethod
    def from_dict(cls, d: dict) -> "UserRecord":
        return cls(d["author"], tuple(Post.from_dict(p) for p in d["posts"]))


@dataclass
class ParseStats:
    """Counters filled by :func:`parse_dump`.  ``rejects`` is the total of the
    malformed/missing-field/deleted-author buckets; subreddit filtering is not
    a rejection."""

    lines: int = 0
    kept: int = 0
    filtered: int = 0
    malformed: int = 0
    missing_field: int = 0
    deleted_author: int = 0
    placeholder_texts: int = 0

    @property
    def rejects(self) -> int:
        return self.malformed + self.missing_field + self.deleted_author

    def merge(self, other: "ParseStats") -> "ParseStats":
        out = ParseStats()
        for f in dataclasses.fields(self):
            setattr(out, f.name, getattr(self, f.name) + getattr(other, f.name))
        return out

    def to_dict(self) -> dict:
        return {**dataclasses.asdict(self), "rejects": self.rejects}


@dataclass
class _Reject(Exception):
    bucket: str
    reason: str = field(default="")


# ---------------------------------------------------------------- parsing


def open_dump(path: str | Path) -> IO[str]:
    """Open a dump file as text, sniffing gzip/bz2/xz/zstd by extension."""
    path = Path(path)
    try:
        suffix = path.suffix.lower()
        if suffix == ".gz":
            return gzip.open(path, "rt", encoding="utf-8", errors="replace")
        if suffix == ".bz2":
            return bz2.open(path, "rt", encoding="utf-8", errors="replace")
        if suffix in (".xz", ".lzma"):
            return lzma.open(path, "rt", encoding="utf-8", errors="replace")
        if suffix == ".zst":
            try:
                import zstandard
            except ImportError as exc:
                raise InputError(f"{path}: reading .zst needs the 'zstandard' package") from exc
            fh = open(path, "rb")
            reader = zstandard.ZstdDecompressor(max_window_size=2**31).stream_reader(fh)
            return io.TextIOWrapper(reader, encoding="utf-8", errors="replace")
        return open(path, "r", encoding="utf-8", errors="replace")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _as_int(value, name: str, default: int = 0) -> int:
    if value is None:
        return default
    if isinstance(value, bool):
        return int(value)
    try:
        return int(float(value))
    except (TypeError, ValueError):
        raise _Reject("malformed", f"{name}={value!r} is not numeric")


def _record_to_post(rec: dict, kind: str) -> Post:
    author = rec.get("author")
    if not isinstance(author, str) or not author or author == "[deleted]":
        raise _Reject("deleted_author")
    if kind == SUBMISSION:
        title, body = rec.get("title"), rec.get("selftext")
        if title is None or body is None:
            raise _Reject("missing_field", "title/selftext")
    else:
        title, body = "", rec.get("body")
        if body is None:
            raise _Reject("missing_field", "body")
    if not isinstance(title, str) or not isinstance(body, str):
        raise _Reject("malformed", "non-string text")
    created = _as_int(rec.get("created_utc"), "created_utc", default=-1)
    if created <= 0:
        raise _Reject("malformed", "created_utc missing or non-positive")
    return Post(
        id=str(rec.get("id", "")),
        author=author,
        subreddit=str(rec["subreddit"]).lower(),
        created_utc=created,
        title=title,
        body=body,
        kind=kind,
        score=_as_int(rec.get("score"), "score"),
        ups=_as_int(rec.get("ups"), "ups"),
        downs=_as_int(rec.get("downs"), "downs"),
        num_comments=_as_int(rec.get("num_comments"), "num_comments") if kind == SUBMISSION else 0,
        gilded=_as_int(rec.get("gilded"), "gilded"),
        pinned=bool(rec.get("pinned") or False),
    )


def parse_dump(
    stream: Iterable[str] | str | Path,
    kind: str,
    subreddit_filter: Iterable[str],
    stats: ParseStats | None = None,
) -> list[Post]:
    """Parse newline-delimited JSON records into posts.

    ``stream`` is an iterable of lines or a path.  Bad lines never abort the
    read; they are tallied into ``stats``.
    """
    if kind not in (SUBMISSION, COMMENT):
        raise ValueError(f"kind must be {SUBMISSION!r} or {COMMENT!r}, got {kind!r}")
    wanted = {s.lower() for s in subreddit_filter}
    stats = stats if stats is not None else ParseStats()
    if isinstance(stream, (str, Path)):
        with open_dump(stream) as fh:
            return _parse_lines(fh, kind, wanted, stats)
    return _parse_lines(stream, kind, wanted, stats)


def _parse_lines(lines: Iterable[str], kind: str, wanted: set[str], stats: ParseStats) -> list[Post]:
    posts = []
    try:
        for line in lines:
            if not line.strip():
                continue
            stats.lines += 1
            try:
                rec = json.loads(line)
            except (json.JSONDecodeError, UnicodeDecodeError):
                stats.malformed += 1
                continue
            if not isinstance(rec, dict) or not isinstance(rec.get("subreddit"), str):
                stats.malformed += 1
                continue
            if rec["subreddit"].lower() not in wanted:
                stats.filtered += 1
                continue
            try:
                post = _record_to_post(rec, kind)
            except _Reject as rej:
                setattr(stats, rej.bucket, getattr(stats, rej.bucket) + 1)
                continue
            if post.body.strip() in PLACEHOLDER_TEXTS:
                stats.placeholder_texts += 1
            posts.append(post)
            stats.kept += 1
    except OSError as exc:
        raise InputError(f"read failed: {exc}") from exc
    return posts


def _post_key(p: Post):
    return (p.created_utc, p.id)


def group_users(posts: Iterable[Post]) -> list[UserRecord]:
    """One chronologically sorted record per author, authors in sorted order."""
    by_author: dict[str, list[Post]] = defaultdict(list)
    for p in posts:
        by_author[p.author].append(p)
    return [UserRecord(a, tuple(sorted(by_author[a], key=_post_key))) for a in sorted(by_author)]


# ---------------------------------------------------------------- cleaning

URL_TOKEN = "url"
NUMBER_TOKEN = "@"

_URL_RE = re.compile(
    r"(?:https?://|(?<!\S)www\.)[^\s]*[^\s.,;:!?)\]}'\"]",
    re.IGNORECASE,
)

# Blocks whose codepoints must never survive cleaning.
EMOJI_RANGES = (
    (0x2600, 0x27BF),    # misc symbols, dingbats
    (0x1F1E6, 0x1F1FF),  # regional indicators
    (0x1F300, 0x1F64F),  # misc symbols & pictographs, emoticons
    (0x1F680, 0x1F6FF),  # transport & map
    (0x1F900, 0x1F9FF),  # supplemental symbols & pictographs
    (0x1FA70, 0x1FAFF),  # symbols & pictographs extended-a
)


def is_emoji_block(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in EMOJI_RANGES)


def _emoji_name(ch: str) -> str:
    try:
        name = unicodedata.name(ch)
    except ValueError:
        return ":unknown_emoji:"
    return ":" + re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") + ":"


def _demojize(text: str) -> str:
    # the packaged names keep source capitalisation for flags and a few people emoji
    text = emoji.replace_emoji(text, replace=lambda chars, data: data["en"].lower())
    if any(is_emoji_block(c) for c in text):
        text = "".join(_emoji_name(c) if is_emoji_block(c) else c for c in text)
    return text


def _replace_numbers(text: str) -> str:
    # str.isdigit covers non-ASCII digits and superscripts that \d misses
    out = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isdigit():
            j = i + 1
            while j < n:
                if text[j].isdigit():
                    j += 1
                elif text[j] in ".," and j + 1 < n and text[j + 1].isdigit():
                    j += 2
                else:
                    break
            out.append(NUMBER_TOKEN)
            i = j
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def clean_text(text: str) -> str:
    """Replace URLs with ``url``, digit runs with ``@`` and emoji with ``:names:``."""
    if not text:
        return text
    text = _URL_RE.sub(URL_TOKEN, text)
    text = _demojize(text)
    return _replace_numbers(text)


def clean_post(post: Post) -> Post:
    return dataclasses.replace(post, title=clean_text(post.title), body=clean_text(post.body))


def clean_user(record: UserRecord) -> UserRecord:
    return UserRecord(record.author, tuple(clean_post(p) for p in record.posts))


# ---------------------------------------------------------------- serialization


def write_users(records: Iterable[UserRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n


def iter_users(path: str | Path) -> Iterator[UserRecord]:
    with open_dump(path) as fh:
        for line in fh:
            if line.strip():
                yield UserRecord.from_dict(json.loads(line))
