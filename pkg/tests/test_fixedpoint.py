from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctcbeam.fixedpoint import (
    PROB_FRAC,
    PROB_MAX_RAW,
    PROB_ONE,
    QConst,
    QLogit,
    QProb,
    SatCounter,
    leading_one_position,
    qadd,
    qmul,
    shift_value,
)

prob_raws = st.integers(min_value=0, max_value=PROB_MAX_RAW)


def test_qmul_identity():
    one = QProb(PROB_ONE)
    assert qmul(one, one).raw == PROB_ONE


def test_qmul_exact_dyadic():
    half = QProb(PROB_ONE >> 1)
    assert qmul(half, half).value == 0.25


def test_qmul_underflows_to_zero():
    eps = QProb(1)  # 2**-q
    assert qmul(eps, eps).raw == 0


def test_qmul_saturates_and_counts():
    counter = SatCounter()
    big = QProb(PROB_MAX_RAW)
    assert qmul(big, big, counter).raw == PROB_MAX_RAW
    assert counter.mul == 1


def test_qmul_rejects_mixed_widths():
    with pytest.raises(ValueError):
        qmul(QProb(1, 30), QProb(1, 20))


@given(prob_raws, prob_raws)
def test_qmul_truncation_bound(a, b):
    # value(qmul) <= value(a)*value(b) < value(qmul) + 2**-q
    got = Fraction(qmul(QProb(a), QProb(b)).raw, PROB_ONE)
    exact = Fraction(a, PROB_ONE) * Fraction(b, PROB_ONE)
    if exact <= Fraction(PROB_MAX_RAW, PROB_ONE):
        assert got <= exact < got + Fraction(1, PROB_ONE)


def test_qadd_saturates():
    counter = SatCounter()
    assert qadd(QProb(PROB_MAX_RAW), QProb(1), counter).raw == PROB_MAX_RAW
    assert counter.add == 1


def test_leading_one_examples():
    assert leading_one_position(1, PROB_FRAC) == -PROB_FRAC
    assert leading_one_position(PROB_ONE, PROB_FRAC) == 0
    raw_03 = int(0.3 * PROB_ONE)
    assert leading_one_position(raw_03, PROB_FRAC) == -2


def test_leading_one_rejects_zero():
    with pytest.raises(ValueError):
        leading_one_position(0, PROB_FRAC)


def test_leading_one_matches_exact_log2_on_random_inputs():
    rng = np.random.default_rng(11)
    raws = rng.integers(1, PROB_MAX_RAW, size=100_000)
    for raw in raws.tolist():
        p = leading_one_position(raw, PROB_FRAC)
        value = Fraction(raw, PROB_ONE)
        assert Fraction(2) ** p <= value < Fraction(2) ** (p + 1)


def test_shift_examples():
    quarter = QProb(PROB_ONE >> 2)
    assert shift_value(quarter, 1).value == 0.5
    assert shift_value(quarter, 0) is quarter or shift_value(quarter, 0).raw == quarter.raw
    counter = SatCounter()
    just_above_one = QProb(PROB_ONE + 1)
    assert shift_value(just_above_one, 40, counter).raw == PROB_MAX_RAW
    assert counter.shift == 1


@given(prob_raws, st.integers(min_value=-40, max_value=40))
def test_shift_roundtrip_never_gains(raw, s):
    x = QProb(raw)
    back = shift_value(shift_value(x, s), -s)
    assert back.raw <= x.raw
    if s >= 0 and shift_value(x, s).raw < PROB_MAX_RAW:
        assert back.raw == x.raw  # no bits lost going up first


def test_qlogit_range():
    assert QLogit(127).value == 31.75
    assert QLogit(-128).value == -32.0
    assert QLogit.from_float(100.0).raw == 127
    assert QLogit.from_float(-100.0).raw == -128
    with pytest.raises(ValueError):
        QLogit(128)


def test_qconst_binary_parse():
    c = QConst.from_binary("0.10111110111")
    assert c.frac_bits == 11
    assert c.raw == 0b10111110111
    assert c.value == 0.74560546875
    assert QConst.from_binary("1.0000000110").value == 1.005859375
    with pytest.raises(ValueError):
        QConst.from_binary("0.12")


def test_qconst_from_float_requires_exactness():
    assert QConst.from_float(1.5, 4).raw == 24
    with pytest.raises(ValueError):
        QConst.from_float(0.3, 4)


def test_qprob_rejects_out_of_range():
    with pytest.raises(ValueError):
        QProb(PROB_MAX_RAW + 1)
    with pytest.raises(ValueError):
        QProb(-1)
