import numpy as np
import pytest

from ctcbeam.dictionary import Alphabet


@pytest.fixture
def tiny_alphabet():
    return Alphabet(("a", "b", "c", "_"))


def random_prob_rows(rng, t, k):
    """Normalized strictly-positive rows, K+1 wide with blank last."""
    mat = rng.random((t, k + 1)) + 1e-9
    mat /= mat.sum(axis=1, keepdims=True)
    return mat.tolist()


def random_words(rng, alphabet, count, max_len=8):
    chars = alphabet.labels[:alphabet.k - 1]
    words = []
    for _ in range(count):
        n = int(rng.integers(1, max_len + 1))
        words.append("".join(chars[rng.integers(0, len(chars))] for _ in range(n)))
    return words


def make_rng(seed):
    return np.random.default_rng(seed)
