import math

import numpy as np
import pytest

from ctcbeam.decoder import BeamDecoder, DecodeConfig
from ctcbeam.reference import (
    NaiveLexicon,
    best_labelling_bruteforce,
    collapse_path,
    decode_reference,
    labelling_distribution,
)

from conftest import random_prob_rows


def test_collapse_examples():
    # repeats first, then blanks; blank id is 4 here (K=3)
    assert collapse_path((3, 4, 4, 1, 4, 2), 4) == (3, 1, 2)
    assert collapse_path((3, 3, 4, 1, 1, 1, 4, 4, 2, 2), 4) == (3, 1, 2)
    assert collapse_path((1, 4, 1), 4) == (1, 1)


def test_single_frame_distribution_equals_frame():
    dist = labelling_distribution([[0.2, 0.3, 0.5]])
    assert math.isclose(dist[()], 0.5)
    assert math.isclose(dist[(1,)], 0.2)
    assert math.isclose(dist[(2,)], 0.3)


def test_two_frame_uniform_k1():
    # paths: (a,a),(a,b),(b,a),(b,b) with b = blank
    dist = labelling_distribution([[0.5, 0.5], [0.5, 0.5]])
    assert math.isclose(dist[()], 0.25)
    assert math.isclose(dist[(1,)], 0.75)
    assert (1, 1) not in dist
    best = best_labelling_bruteforce([[0.5, 0.5], [0.5, 0.5]])
    assert best.labelling == (1,)
    assert math.isclose(best.probability, 0.75)


def test_distribution_sums_to_one():
    rng = np.random.default_rng(13)
    for _ in range(20):
        k = int(rng.integers(1, 4))
        t = int(rng.integers(1, 6))
        rows = random_prob_rows(rng, t, k)
        dist = labelling_distribution(rows)
        assert math.isclose(sum(dist.values()), 1.0, rel_tol=1e-12)


def test_enumeration_guard():
    with pytest.raises(ValueError):
        labelling_distribution([[1 / 30] * 30] * 8)
    with pytest.raises(ValueError):
        labelling_distribution([])


def test_reference_single_frame():
    assert decode_reference([[0.6, 0.3, 0.1]], 2, 2) == [1]
    assert decode_reference([[0.1, 0.2, 0.7]], 2, 2) == []


def test_reference_unpruned_equals_bruteforce():
    rng = np.random.default_rng(19)
    for _ in range(40):
        k = int(rng.integers(1, 4))
        t = int(rng.integers(1, 6))
        rows = random_prob_rows(rng, t, k)
        w = (k + 1) ** t
        got = decode_reference(rows, k, w)
        assert tuple(got) == best_labelling_bruteforce(rows).labelling


def test_reference_agrees_with_decoder_on_medium_instance():
    rng = np.random.default_rng(29)
    rows = random_prob_rows(rng, 30, 5)
    mine = BeamDecoder(DecodeConfig(k=5, w=4, mode="float")).decode(rows)
    assert mine.labels == decode_reference(rows, 5, 4)


def test_reference_rejects_empty_stream():
    with pytest.raises(ValueError):
        decode_reference([], 3, 2)


def test_naive_lexicon_rules(tiny_alphabet):
    lex = NaiveLexicon(["ab", "abc"], tiny_alphabet)
    sep = tiny_alphabet.separator_id
    assert lex.allowed((), 1)            # 'a' starts a word
    assert not lex.allowed((), 2)
    assert not lex.allowed((), sep)      # no empty words
    assert lex.allowed((1,), 2)
    assert not lex.allowed((1,), sep)    # "a" is not a word
    assert lex.allowed((1, 2), sep)
    assert lex.allowed((1, 2), 3)
    assert not lex.allowed((1, 2, 3), 3)
