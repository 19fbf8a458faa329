"""Predictor, per-step loss, and closed-form cumulative loss."""

import math

import numpy as np
import pytest

from switchrl.cpd import (
    closed_form_cumulative_loss,
    forecaster_loss,
    laplace_predict,
)
from switchrl.cpd.detector import Forecaster


def seq_counts(seq, o):
    counts = np.zeros(o, dtype=np.int64)
    for x in seq:
        counts[x - 1] += 1
    return counts


def sequential_loss(seq, o):
    """Sum of per-step losses of a forecaster fed seq from scratch."""
    counts = np.zeros(o, dtype=np.int64)
    total = 0.0
    for i, x in enumerate(seq):
        total -= math.log(laplace_predict(counts, i, x))
        counts[x - 1] += 1
    return total


class TestLaplacePredict:
    def test_empty_history_uniform(self):
        assert laplace_predict([0, 0, 0, 0], 0, 3) == pytest.approx(0.25)

    def test_majority_symbol(self):
        # history (1,1,2) over alphabet 3: counts (2,1,0)
        assert laplace_predict([2, 1, 0], 3, 1) == pytest.approx(0.5)

    def test_unseen_symbol(self):
        # history (2,2,2) over alphabet 2
        assert laplace_predict([0, 3], 3, 1) == pytest.approx(0.2)

    def test_normalization_random_states(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            o = int(rng.integers(2, 7))
            counts = rng.integers(0, 30, size=o)
            n = int(counts.sum())
            total = sum(laplace_predict(counts, n, x) for x in range(1, o + 1))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_symbol_out_of_range(self):
        with pytest.raises(ValueError):
            laplace_predict([1, 1], 2, 3)
        with pytest.raises(ValueError):
            laplace_predict([1, 1], 2, 0)

    def test_inconsistent_counts(self):
        with pytest.raises(ValueError):
            laplace_predict([1, 1], 3, 1)


class TestForecasterLoss:
    def test_fresh_forecaster(self):
        f = Forecaster(start=1, log_weight=0.0, symbol_counts=np.zeros(3, np.int64), n=0)
        assert forecaster_loss(f, 2) == pytest.approx(math.log(3))

    def test_seen_symbol(self):
        f = Forecaster(start=1, log_weight=0.0, symbol_counts=np.array([1, 0]), n=1)
        assert forecaster_loss(f, 1) == pytest.approx(-math.log(2 / 3))

    def test_unseen_symbol(self):
        f = Forecaster(start=1, log_weight=0.0, symbol_counts=np.array([1, 0]), n=1)
        assert forecaster_loss(f, 2) == pytest.approx(-math.log(1 / 3))


class TestClosedFormCumulativeLoss:
    # reference values computed with 50-digit arithmetic from the sequential
    # predictor product
    FROZEN = [
        ((1,), 3, 1.098612288668109691395),
        ((1, 2), 2, 1.791759469228055000812),
        ((1, 1, 2), 3, 3.401197381662155375413),
        ((2, 2, 2), 2, 1.386294361119890618834),
        ((1, 2, 1, 3), 3, 5.192956850890210376226),
    ]

    @pytest.mark.parametrize("seq,o,expected", FROZEN)
    def test_frozen_values(self, seq, o, expected):
        got = closed_form_cumulative_loss(seq_counts(seq, o), len(seq), o)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_empty_sequence_is_zero(self):
        assert closed_form_cumulative_loss(np.zeros(4, np.int64), 0, 4) == 0.0

    def test_matches_sequential_accumulation(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            o = int(rng.integers(2, 7))
            length = int(rng.integers(1, 16))
            seq = rng.integers(1, o + 1, size=length)
            closed = closed_form_cumulative_loss(seq_counts(seq, o), length, o)
            assert closed == pytest.approx(sequential_loss(seq, o), abs=1e-9)

    def test_order_independence(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            o = int(rng.integers(2, 5))
            seq = rng.integers(1, o + 1, size=10)
            shuffled = rng.permutation(seq)
            a = sequential_loss(list(seq), o)
            b = sequential_loss(list(shuffled), o)
            assert a == pytest.approx(b, abs=1e-9)

    def test_inconsistent_counts(self):
        with pytest.raises(ValueError):
            closed_form_cumulative_loss([1, 1], 3, 2)
