"""Windowed excitation certificates and the randomized lemma trials."""

import math

import numpy as np
import pytest

from swinglab.dynamics import TimeGrid, integrate
from swinglab.excitation import (SampledGain, a_floor_of, lambda_min_sym,
                                 lemma_a1_check, lemma_a2_check, lemma_a3_check,
                                 pa_check, pa_level, pe_check, pe_level,
                                 run_appendix_suite, simpson_window,
                                 _simpson_prefix)

GRID = TimeGrid(0.0, 0.01, 4000)  # 40 s


def sin_gain():
    return SampledGain(GRID, np.sin(GRID.times()))


def test_sampled_gain_shape_check():
    with pytest.raises(ValueError, match="samples"):
        SampledGain(GRID, np.zeros(7))


def test_lambda_min_sym_forms():
    assert lambda_min_sym(np.array([3.0, -1.0])).tolist() == [3.0, -1.0]
    m1 = np.array([[[2.0]], [[5.0]]])
    assert lambda_min_sym(m1).tolist() == [2.0, 5.0]
    m2 = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert float(lambda_min_sym(m2)) == pytest.approx(1.0)
    rng = np.random.default_rng(2)
    a = rng.normal(size=(5, 3, 3))
    sym = a + np.swapaxes(a, 1, 2)
    assert np.allclose(lambda_min_sym(sym), np.linalg.eigvalsh(sym)[:, 0])


def test_simpson_matches_closed_form():
    vals = np.sin(GRID.times()) ** 2
    prefix = _simpson_prefix(vals, GRID.h)
    # int_0^t sin^2 = t/2 - sin(2t)/4
    for stop in (200, 1000, 4000):
        t = stop * GRID.h
        exact = 0.5 * t - 0.25 * math.sin(2.0 * t)
        assert float(simpson_window(prefix, 0, stop)) == pytest.approx(exact, abs=1e-9)
    with pytest.raises(ValueError, match="even"):
        simpson_window(prefix, 1, 11)


def test_pe_level_of_sine():
    # every 2*pi window of sin^2 integrates to pi
    lvl = pe_level(sin_gain(), 2.0 * math.pi)
    assert lvl == 3.138407349497246
    assert lvl == pytest.approx(math.pi, abs=5e-3)
    cert = pe_check(sin_gain(), 2.0 * math.pi, 3.0)
    assert cert.ok and cert.margin == pytest.approx(lvl - 3.0)
    assert not pe_check(sin_gain(), 2.0 * math.pi, 3.2).ok


def test_pe_fails_for_decaying_gain():
    gain = SampledGain(GRID, np.exp(-GRID.times()))
    assert pe_level(gain, 2.0) < 1e-3


def test_lemma_a1_long_window_consequence():
    lvl = pe_level(sin_gain(), 2.0 * math.pi)
    cert = lemma_a1_check(sin_gain(), 2.0 * math.pi, 0.9 * lvl)
    assert cert.ok
    assert cert.margin == 1.7261257021922434


def test_pa_level_and_floor():
    gain = SampledGain(GRID, 0.5 + 0.5 * np.sin(GRID.times()))
    lvl = pa_level(gain, 4.0 * math.pi)
    assert lvl == 0.4359985740177373
    assert lvl < 0.5  # short windows dip under the mean
    assert a_floor_of(gain) == 0.0
    dipped = SampledGain(GRID, 0.2 + 0.5 * np.sin(GRID.times()))
    assert a_floor_of(dipped) == pytest.approx(0.3, abs=1e-4)
    assert pa_check(gain, 4.0 * math.pi, 0.9 * lvl).ok


def test_lemma_a2_scalar_hand_system():
    # p' = -a(t) p + b(t) with a PA gain; |p| must obey the decay envelope
    a_fn = lambda t: 0.5 + 0.5 * math.sin(t)
    b_fn = lambda t: np.array([0.1 * math.cos(0.7 * t)])
    grid = TimeGrid(0.0, 0.01, 5000)
    gain = SampledGain(grid, np.array([a_fn(t) for t in grid.times()]))
    window = 4.0 * math.pi
    level = 0.9 * pa_level(gain, window)
    check = lemma_a2_check(a_fn, b_fn, np.array([4.0]), grid, window, level)
    assert check.violation <= 1e-6
    assert check.input_sup == pytest.approx(0.1)


def test_lemma_a2_floor_branch_still_bounds():
    # negative excursions force the inflated envelope with a_floor > 0
    a_fn = lambda t: 0.3 + 0.5 * math.sin(t)
    b_fn = lambda t: np.array([0.05])
    grid = TimeGrid(0.0, 0.01, 5000)
    gain = SampledGain(grid, np.array([a_fn(t) for t in grid.times()]))
    window = 4.0 * math.pi
    level = 0.9 * pa_level(gain, window)
    floor = a_floor_of(gain)
    assert floor > 0.0
    check = lemma_a2_check(a_fn, b_fn, np.array([-3.0]), grid, window, level,
                           a_floor=floor)
    assert check.violation <= 1e-6


def test_lemma_a3_rescaling_identity():
    # z' = -z + d is ISS with beta(s, r) = s e^{-r}, gamma(s) = s
    a_fn = lambda t: 1.0 + 0.5 * math.sin(t)
    d_fn = lambda tau: 0.2 * math.sin(0.9 * tau)
    grid = TimeGrid(0.0, 0.01, 4000)
    gain = SampledGain(grid, np.array([a_fn(t) for t in grid.times()]))
    level = 0.9 * pa_level(gain, 4.0)
    check = lemma_a3_check(lambda z, d: -z + d,
                           lambda s, r: s * math.exp(-r),
                           lambda s: s,
                           a_fn, d_fn, np.array([3.0]), grid, 4.0, level)
    assert check.rescale_error <= 1e-5
    assert check.bound_violation <= 1e-6


def test_lemma_a3_rejects_negative_gain():
    a_fn = lambda t: math.sin(t)  # goes negative past pi: tau would not be monotone
    grid = TimeGrid(0.0, 0.01, 400)
    with pytest.raises(ValueError, match="a\\(t\\) >= 0"):
        lemma_a3_check(lambda z, d: -z, lambda s, r: s * math.exp(-r),
                       lambda s: s, a_fn, lambda tau: 0.0,
                       np.array([1.0]), grid, 1.0, 0.5)


def test_suite_small_sample_passes_and_is_deterministic():
    rows_a = run_appendix_suite(seed=0, n_a1=4, n_a2=4, n_a3=2)
    rows_b = run_appendix_suite(seed=0, n_a1=4, n_a2=4, n_a3=2)
    assert len(rows_a) == 4 + 4 + 2 * 2
    assert all(r.passed for r in rows_a)
    assert [(r.lemma, r.margin) for r in rows_a] == \
        [(r.lemma, r.margin) for r in rows_b]
    lemmas = {r.lemma for r in rows_a}
    assert lemmas == {"a1", "a2", "a3-rescale", "a3-bound"}
