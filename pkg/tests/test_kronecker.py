import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apamoeba import Exhausted, KroneckerSolution, kronecker_approximate, return_gap_scan
from apamoeba.kronecker import approximation_error

SQRT2 = math.sqrt(2)


def test_one_dimensional_exact():
    sol = kronecker_approximate([1.0], [math.pi], 1e-2, 100)
    assert isinstance(sol, KroneckerSolution)
    assert sol.t == pytest.approx(math.pi, abs=1e-12)
    assert sol.achieved_error < 1e-12


def test_two_dimensional_reverifies():
    sol = kronecker_approximate([1.0, SQRT2], [math.pi, 0.0], 0.05, 1e4)
    assert isinstance(sol, KroneckerSolution)
    assert approximation_error([1.0, SQRT2], [math.pi, 0.0], sol.t, sol.m) == pytest.approx(sol.achieved_error)
    assert sol.achieved_error < 0.05


def test_rational_ratio_target_off_subgroup_is_exhausted():
    # mu = (1, 1) keeps both phases equal, so a = (0, pi) stays pi away
    res = kronecker_approximate([1.0, 1.0], [0.0, math.pi], 0.1, 500)
    assert isinstance(res, Exhausted)
    assert res.best_error > 1.0


def test_known_continued_fraction_gap():
    # t = 2 pi * 29 on mu = (1, sqrt2): error is 2 pi |29 sqrt2 - 41|
    err = approximation_error([1.0, SQRT2], [0.0, 0.0], 2 * math.pi * 29, [29, 41])
    assert err == pytest.approx(2 * math.pi * abs(29 * SQRT2 - 41), rel=1e-9)
    assert err == pytest.approx(0.0766, abs=1e-4)


def test_input_validation():
    with pytest.raises(ValueError):
        kronecker_approximate([1.0, 2.0], [0.0], 0.1, 10)
    with pytest.raises(ValueError):
        kronecker_approximate([1.0], [0.0], 0.0, 10)
    with pytest.raises(ValueError):
        kronecker_approximate([0.0], [0.0], 0.1, 10)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.3, 3.0), min_size=1, max_size=3),
    st.integers(0, 2**31),
    st.floats(0.05, 0.5),
)
def test_no_false_success(mu, seed, eps):
    a = np.random.default_rng(seed).uniform(-math.pi, math.pi, len(mu))
    res = kronecker_approximate(mu, a, eps, 2000)
    if isinstance(res, KroneckerSolution):
        assert 0 < res.t <= 2000
        assert approximation_error(mu, a, res.t, res.m) < eps
    else:
        assert res.best_error >= 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.4), st.floats(-3, 3))
def test_halving_eps_never_decreases_t(eps, a0):
    mu, a = [1.0, SQRT2], [a0, 0.5]
    r1 = kronecker_approximate(mu, a, eps, 3000)
    r2 = kronecker_approximate(mu, a, eps / 2, 3000)
    if isinstance(r1, KroneckerSolution) and isinstance(r2, KroneckerSolution):
        assert r2.t >= r1.t


def test_gap_scan_one_dimensional():
    scan = return_gap_scan([1.0], [1.0], 1e-2, 100.0)
    assert scan.max_gap == pytest.approx(2 * math.pi, abs=1e-9)
    assert len(scan.times) == 16


def test_gap_scan_chunk_invariance():
    a = return_gap_scan([1.0, SQRT2], [0.3, 0.0], 0.2, 400.0)
    b = return_gap_scan([1.0, SQRT2], [0.3, 0.0], 0.2, 400.0, chunk=777)
    assert a == b


def test_convergent_q5():
    err = approximation_error([1.0, SQRT2], [0.0, 0.0], 2 * math.pi * 5, [5, 7])
    assert err == pytest.approx(2 * math.pi * abs(5 * SQRT2 - 7), rel=1e-9)
    assert round(err, 3) == 0.447


def test_gap_scan_two_dimensional_windows_solve():
    mu, a, eps = [1.0, SQRT2], [0.3, 0.0], 0.2
    scan = return_gap_scan(mu, a, eps, 400.0)
    assert scan.times and scan.max_gap is not None
    for t in scan.times:
        m = np.rint((np.array(mu) * t - a) / (2 * math.pi))
        assert approximation_error(mu, a, t, m) < eps
