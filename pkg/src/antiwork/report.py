"""Static HTML rendering of word attributions."""

from __future__ import annotations

import html
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .attribution import AttributionResult

COLORS = {
    "pos_low": "#FFFFE0",
    "pos_mid": "#FFFF00",
    "pos_high": "#FF0000",
    "neg_low": "#ADD8E6",
    "neg_mid": "#008080",
    "neg_high": "#0000FF",
    "zero": "transparent",
}
DEAD_ZONE = 0.05
_LEVEL_ORDER = {"low": 0, "mid": 1, "high": 2}


@dataclass(frozen=True)
class ColorBucket:
    bucket: str
    css_color: str

    @property
    def level(self) -> int:
        """0 low, 1 mid, 2 high; -1 for the zero bucket."""
        return _LEVEL_ORDER.get(self.bucket.split("_")[-1], -1)


def bucket(score: float) -> ColorBucket:
    if not math.isfinite(score):
        warnings.warn(f"non-finite attribution {score!r} rendered as zero", stacklevel=2)
        score = 0.0
    if abs(score) > 1.0:
        warnings.warn(f"attribution {score!r} outside [-1, 1]; clamped", stacklevel=2)
        score = math.copysign(1.0, score)
    mag = abs(score)
    if mag <= DEAD_ZONE:
        name = "zero"
    else:
        level = "low" if mag <= 1 / 3 else "mid" if mag <= 2 / 3 else "high"
        name = ("pos_" if score > 0 else "neg_") + level
    return ColorBucket(name, COLORS[name])


_CSS = """body{font-family:Georgia,serif;max-width:50em;margin:2em auto;line-height:1.7;color:#222}
h1{font-size:1.4em}h2{font-size:1.05em;margin-bottom:.2em}
.post{border-top:1px solid #ccc;padding:.6em 0}
.tok{padding:0 .15em;border-radius:2px}
.tok.neg_mid,.tok.neg_high{color:#fff}
.meta{font-size:.85em;color:#555}
.legend td{padding:0 .6em}
.delta{font-size:.8em;color:#666}"""


def _span(token: str, score: float) -> str:
    b = bucket(score)
    return (f'<span class="tok {b.bucket}" style="background-color:{b.css_color}" '
            f'title="{score:+.3f}">{html.escape(token)}</span>')


def render_report(attributions: Sequence[AttributionResult], metadata: dict | None = None,
                  title: str = "Word attributions") -> str:
    """Self-contained HTML page: inline CSS, no scripts, no external resources.

    Output depends only on the inputs, so identical inputs give identical bytes.
    """
    esc = html.escape
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>{esc(title)}</title>",
        f"<style>{_CSS}</style>",
        "</head>",
        "<body>",
        f"<h1>{esc(title)}</h1>",
    ]
    if metadata:
        rows = "".join(f"<tr><th>{esc(str(k))}</th><td>{esc(str(v))}</td></tr>" for k, v in sorted(metadata.items()))
        parts.append(f'<table class="meta">{rows}</table>')
    legend = "".join(
        f'<td style="background-color:{COLORS[n]}">{n.replace("_", " ")}</td>'
        for n in ("neg_high", "neg_mid", "neg_low", "zero", "pos_low", "pos_mid", "pos_high")
    )
    parts.append(f'<table class="legend"><tr>{legend}</tr></table>')
    if not attributions:
        parts.append('<p class="empty">No results.</p>')
    notes = []
    for i, res in enumerate(attributions, 1):
        spans = " ".join(_span(t, s) for t, s in zip(res.tokens, res.scores))
        parts.append(
            f'<section class="post"><h2>Post {esc(res.post_id)}<sup><a href="#note-{i}">{i}</a></sup></h2>'
            f"<p>{spans}</p></section>"
        )
        notes.append(f'<li id="note-{i}">convergence delta {res.convergence_delta:.3g} at {res.steps} steps; '
                     f"logit {res.logit:+.4f} vs baseline {res.baseline_logit:+.4f}</li>")
    if notes:
        parts.append(f'<ol class="delta">{"".join(notes)}</ol>')
    parts += ["</body>", "</html>", ""]
    return "\n".join(parts)
