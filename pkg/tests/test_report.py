import re
import warnings

import html5lib
import numpy as np
import pytest
from hypothesis import given, strategies as st

from antiwork.attribution import AttributionResult
from antiwork.report import COLORS, bucket, render_report


def result(tokens, scores, pid="p1"):
    return AttributionResult(pid, list(tokens), list(scores), 0.01, 50, 1.2, 0.1, normalized=True)


def strict_parse(doc):
    html5lib.HTMLParser(strict=True).parse(doc)


def test_bucket_examples():
    assert bucket(0.9).bucket == "pos_high" and bucket(0.9).css_color == "#FF0000"
    assert bucket(-0.2).bucket == "neg_low"
    assert bucket(0.0).bucket == "zero"
    assert bucket(0.05).bucket == "zero" and bucket(-0.051).bucket == "neg_low"
    assert bucket(0.5).css_color == "#FFFF00" and bucket(-1.0).css_color == "#0000FF"


def test_bucket_out_of_range_warns():
    with pytest.warns(UserWarning):
        assert bucket(3.0).bucket == "pos_high"
    with pytest.warns(UserWarning):
        assert bucket(float("nan")).bucket == "zero"


_score = st.floats(0, 1, allow_nan=False)


@given(_score, _score, st.sampled_from([1.0, -1.0]))
def test_bucket_monotone(a, b, sign):
    lo, hi = sorted((a, b))
    assert bucket(sign * lo).level <= bucket(sign * hi).level


def test_empty_report_is_valid():
    doc = render_report([])
    strict_parse(doc)
    assert "No results." in doc


def test_colors_in_token_order():
    doc = render_report([result(["hate", "job"], [1.0, 0.4])])
    colors = re.findall(r'class="tok [a-z_]+" style="background-color:([^"]+)"', doc)
    assert colors == ["#FF0000", "#FFFF00"]


def test_hostile_tokens_escaped():
    rng = np.random.default_rng(0)
    nasty = ["<script>alert(1)</script>", "\"'", "&amp;", "</span>", "<!--", "]]>", "a&b", "<p>", "x=\"y\"", "‮"]
    tokens = [str(rng.choice(nasty)) + str(i) for i in range(200)]
    scores = rng.uniform(-1, 1, 200).tolist()
    doc = render_report([result(tokens, scores, pid="<id>&")], metadata={"<k>": "\"v\""}, title="<t>")
    strict_parse(doc)
    assert "<script>" not in doc
    assert doc.count('<span class="tok') == 200
    tree = html5lib.parse(doc, namespaceHTMLElements=False)
    texts = [s.text for s in tree.iter("span")]
    assert texts == tokens


def test_report_deterministic():
    rs = [result(["a", "b"], [0.3, -0.9]), result(["c"], [0.0], pid="p2")]
    assert render_report(rs, {"model": "gru"}).encode() == render_report(rs, {"model": "gru"}).encode()


def test_no_external_resources():
    doc = render_report([result(["x"], [0.5])])
    assert "<script" not in doc and "src=" not in doc and "<link" not in doc
    assert set(COLORS.values()) - {"transparent"} <= set(re.findall(r"#[0-9A-F]{6}", doc))


def test_in_range_scores_do_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        render_report([result(["a", "b", "c"], [-1.0, 0.0, 1.0])])
