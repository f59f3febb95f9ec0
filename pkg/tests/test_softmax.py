import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctcbeam.fixedpoint import QConst
from ctcbeam.softmax import (
    SoftmaxParams,
    asr_default_params,
    best_bias_pair,
    bias_candidates,
    softmax_approx,
    softmax_approx_values,
    softmax_exact,
    str_default_params,
    sweep_bias_params,
    synthetic_frames,
)

frames_29 = st.lists(st.integers(-128, 127), min_size=29, max_size=29)


def test_exact_all_equal():
    out = softmax_exact([3, 3, 3, 3])
    assert np.allclose(out, 0.25)
    assert math.isclose(out.sum(), 1.0)


def test_exact_dominant():
    out = softmax_exact([127] + [-128] * 3)
    assert out[0] > 0.999999
    assert np.all(out[1:] < 1e-6)


def test_exact_closed_form():
    # logit values 1.0, 2.0, 3.0
    out = softmax_exact([4, 8, 12])
    assert np.allclose(out, [0.09003057, 0.24472847, 0.66524096], atol=1e-7)


def test_approx_all_equal_29():
    params = asr_default_params()
    out = softmax_approx_values([0] * 29, params)
    assert np.all(np.abs(out - 1 / 29) <= 0.05)


def test_unity_biases_are_exact_at_zero():
    # with d1 = d2 = 1 the approximation of 2**0 is exact, so a
    # single-label frame comes out as exactly 1.0
    one = QConst.from_binary("1.0000000000")
    params = SoftmaxParams(lam=QConst.from_float(1.5, 4),
                           inv_lam=QConst.from_float(0.625, 4),
                           d1=one, d2=one)
    out = softmax_approx([7], params)
    assert out == [1 << 30]


def test_argmax_preserved_two_label_sweep():
    # exhaustive over 2-label frames with a margin of >= 2 logit LSBs
    params = asr_default_params()
    for a in range(-128, 128, 3):
        for delta in (2, 3, 8, 40):
            b = a - delta
            if b < -128:
                continue
            out = softmax_approx([a, b], params)
            assert out[0] > out[1]
            out = softmax_approx([b, a], params)
            assert out[1] > out[0]


@given(frames_29)
@settings(max_examples=200, deadline=None)
def test_outputs_bounded_and_finite(frame):
    out = softmax_approx(frame, asr_default_params())
    assert all(0 <= raw <= (1 << 30) for raw in out)


@given(frames_29)
@settings(max_examples=200, deadline=None)
def test_monotone_in_logits(frame):
    out = softmax_approx(frame, asr_default_params())
    pairs = sorted(zip(frame, out))
    for (ya, oa), (yb, ob) in zip(pairs, pairs[1:]):
        if yb > ya:
            assert ob >= oa


def test_sum_bounded_on_random_frames():
    params = asr_default_params()
    for frame in synthetic_frames(500, 29, 99):
        total = softmax_approx_values(frame, params).sum()
        assert 0.0 < total <= 1.75


def test_variant_agreement():
    pf = asr_default_params("paper-faithful")
    bd = asr_default_params("base2-direct")
    # outputs differ by the quantized lam * inv_lam round trip applied
    # to log2(F); bound the ratio through the stage-2 envelope
    delta = abs(1.0 - pf.lam.value * pf.inv_lam.value)
    for frame in synthetic_frames(300, 29, 5):
        a = softmax_approx_values(frame, pf)
        b = softmax_approx_values(frame, bd)
        # log2(F) <= log2((K+1) * (1 + d1)) for any frame
        log2f_max = math.log2(29 * (1 + pf.d1.value))
        ratio = 1.07 * 2 ** (delta * log2f_max + 0.01)
        bound = (ratio - 1.0) * max(a.max(), b.max()) + 2 * 2.0 ** -30
        assert np.all(np.abs(a - b) <= bound)


def test_variants_identical_when_slopes_cancel():
    pf = str_default_params("paper-faithful")
    bd = str_default_params("base2-direct")
    for frame in synthetic_frames(100, 10, 6):
        a = softmax_approx(frame, pf)
        b = softmax_approx(frame, bd)
        assert a == b  # lam = inv_lam = 1 makes both wirings the same datapath


def test_linear_exp_approximation_bound():
    # max over [0,1) of |2**v - (v+1)| is 1/ln2 - log2(e*ln2) ~ 0.0861
    v = np.linspace(0, 1, 200_001, endpoint=False)
    err = np.abs(2.0 ** v - (v + 1)).max()
    assert err <= 0.0861


def test_params_validation():
    good = asr_default_params()
    with pytest.raises(ValueError):
        SoftmaxParams(lam=QConst.from_float(2.5, 4), inv_lam=good.inv_lam,
                      d1=good.d1, d2=good.d2)
    with pytest.raises(ValueError):
        SoftmaxParams(lam=good.lam, inv_lam=good.inv_lam,
                      d1=QConst.from_binary("10.01"), d2=good.d2)
    with pytest.raises(ValueError):
        SoftmaxParams(lam=good.lam, inv_lam=good.inv_lam,
                      d1=good.d1, d2=good.d2, variant="mystery")


def test_sweep_single_candidate_row():
    frames = synthetic_frames(10, 29, 1)
    rows = sweep_bias_params(bias_candidates()[:1], frames, asr_default_params())
    assert len(rows) == 1
    assert rows[0].max_abs_error >= rows[0].mean_abs_error > 0


def test_sweep_contains_published_pairs_and_is_deterministic():
    cands = bias_candidates()
    assert any(c[0].raw == 0b1011110111 and c[0].frac_bits == 10 for c in cands)
    assert any(c[1].raw == 0b1111110010 and c[1].frac_bits == 10 for c in cands)
    frames = synthetic_frames(20, 29, 2)
    rows1 = sweep_bias_params(cands, frames, asr_default_params())
    rows2 = sweep_bias_params(cands, frames, asr_default_params())
    assert rows1 == rows2
    best = best_bias_pair(rows1)
    assert best.max_abs_error == min(r.max_abs_error for r in rows1)


def test_sweep_all_equal_corpus_ignores_candidate_order():
    corpus = [[0] * 29, [-8] * 29, [100] * 29]
    cands = bias_candidates()
    forward = sweep_bias_params(cands, corpus, asr_default_params())
    backward = sweep_bias_params(list(reversed(cands)), corpus,
                                 asr_default_params())
    assert {(r.d1, r.d2): r.max_abs_error for r in forward} == \
           {(r.d1, r.d2): r.max_abs_error for r in backward}


def test_sweep_rejects_empty_corpus():
    with pytest.raises(ValueError):
        sweep_bias_params(bias_candidates(), [], asr_default_params())
