import hashlib

import numpy as np
import pytest
from hypothesis import given, strategies as st

from antiwork.encoder import TABLE_ROWS, EncoderSpec, HashingEncoder, hash_tokens, make_encoder, mean_pool, stable_hash64
from antiwork.errors import ConfigError
from antiwork.features import BackendUnavailable

ENC = HashingEncoder(EncoderSpec(dim=16, seed=3))


def test_empty_string():
    e = ENC.encode("")
    assert e.tokens == [] and e.vectors.shape == (0, 16)
    assert not e.pooled.any() and e.pooled.shape == (16,)


def test_deterministic_bitwise():
    a = HashingEncoder(EncoderSpec(dim=16, seed=3)).encode("the boss said no")
    b = ENC.encode("the boss said no")
    assert a.pooled.tobytes() == b.pooled.tobytes()


def test_hello_world_is_mean_of_rows():
    rows = [ENC.table_row(ENC.row_index(t)) for t in ("hello", "world")]
    np.testing.assert_array_equal(ENC.encode("hello world").pooled, (rows[0] + rows[1]) / 2)


def test_stable_hash_independent_recomputation():
    for tok in ("hello", "", "résumé", "@"):
        ref = int.from_bytes(hashlib.blake2b(tok.encode(), digest_size=8).digest(), "little")
        assert stable_hash64(tok) == ref
    assert ENC.row_index("hello") == stable_hash64("hello") % TABLE_ROWS


def test_table_depends_on_seed_only():
    other = HashingEncoder(EncoderSpec(dim=16, seed=4))
    assert not np.array_equal(other.table_row(5), ENC.table_row(5))
    row = np.random.default_rng([3, 5]).standard_normal(16)
    np.testing.assert_array_equal(ENC.table_row(5), row)


@given(st.text(max_size=200))
def test_pooled_dimension(s):
    assert ENC.encode(s).pooled.shape == (16,)


def test_self_cosine_and_permutation():
    a = ENC.encode("a b c").pooled
    assert float(a @ a / (np.linalg.norm(a) ** 2)) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(ENC.encode("c a b").pooled, a, atol=1e-12)


def test_truncation():
    enc = HashingEncoder(EncoderSpec(dim=8, max_tokens=5))
    e = enc.encode("word " * 1000)
    assert len(e.tokens) == 5 and e.vectors.shape == (5, 8)


def test_tokens_lowercased_with_placeholders():
    assert hash_tokens("I can't pay @ url!") == ["i", "can't", "pay", "@", "url", "!"]


def test_mean_pool_empty():
    assert mean_pool(np.zeros((0, 3)), 3).tolist() == [0.0, 0.0, 0.0]


def test_spec_validation():
    with pytest.raises(ConfigError):
        EncoderSpec(backend="bert")
    with pytest.raises(ConfigError):
        EncoderSpec(dim=0)


def test_transformer_backend_unavailable_offline():
    with pytest.raises(BackendUnavailable):
        make_encoder(EncoderSpec(backend="transformer", dim=768, model_name="no-such-model-xyz"))
