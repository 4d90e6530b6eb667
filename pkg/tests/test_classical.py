import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from triwalk.classical import (
    LOG_GROWTH_SLOPE,
    STIRLING_CONSTANT,
    classical_monte_carlo_p0,
    classical_p0_exact,
    classical_partial_sums,
    classical_polya_partial,
    classical_series,
    iter_classical_p0,
    log_growth_slope,
    stirling_p0,
)


def enumerate_p0(t):
    returns = sum(
        1 for path in itertools.product(range(3), repeat=t)
        if path.count(0) == path.count(1) == path.count(2)
    )
    return Fraction(returns, 3**t)


def test_exact_small_values():
    assert classical_p0_exact(0) == 1
    assert classical_p0_exact(3) == Fraction(2, 9)
    assert classical_p0_exact(6) == Fraction(10, 81)
    assert classical_p0_exact(7) == 0
    with pytest.raises(ValueError):
        classical_p0_exact(-3)


@pytest.mark.parametrize("t", [3, 6, 9])
def test_exact_matches_enumeration(t):
    assert classical_p0_exact(t) == enumerate_p0(t)


def test_incremental_matches_closed_form():
    for t, p in iter_classical_p0(300):
        assert p == classical_p0_exact(t)
    m = 1000
    assert classical_p0_exact(3000) == Fraction(
        math.factorial(3000), math.factorial(m) ** 3 * 3**3000
    )


def test_stirling():
    assert stirling_p0(STIRLING_CONSTANT) == pytest.approx(1.0)
    assert stirling_p0(6) == pytest.approx(3 * math.sqrt(3) / (12 * math.pi))
    assert stirling_p0(6) == pytest.approx(0.1378, abs=1e-4)
    with pytest.raises(ValueError):
        stirling_p0(0)


def test_stirling_ratio_and_monotone_error():
    rows = [r for r in classical_series(3000) if r.t >= 30]
    errors = [abs(r.relative_error) for r in rows]
    assert all(a > b for a, b in zip(errors, errors[1:]))
    for r in rows:
        if r.t >= 300:
            assert abs(r.stirling / r.p0_float - 1) < 0.02


def test_polya_partial_small():
    s, p = classical_polya_partial(3)
    assert s == pytest.approx(1 + 2 / 9)
    assert p == pytest.approx(1 - 9 / 11)


def test_polya_partials_monotone():
    values = [r.polya_partial for r in classical_series(600)]
    assert all(a < b for a, b in zip(values, values[1:]))
    t, s = classical_partial_sums(600)
    assert s[-1] == pytest.approx(classical_polya_partial(600)[0])


def test_log_growth_slope_every_third_step():
    # derived from the Stirling form: returns only on t = 3m, so the sum
    # grows as (3 sqrt 3 / 2 pi) / 3 * ln T
    assert LOG_GROWTH_SLOPE == pytest.approx(math.sqrt(3) / (2 * math.pi))
    assert log_growth_slope(300, 3000) == pytest.approx(LOG_GROWTH_SLOPE, rel=0.01)


@pytest.mark.parametrize("t, exact", [(3, Fraction(2, 9)), (6, Fraction(10, 81)),
                                      (9, None), (12, None)])
def test_monte_carlo_agrees(t, exact):
    exact = float(exact if exact is not None else classical_p0_exact(t))
    p, se = classical_monte_carlo_p0(t, samples=1_000_000, seed=2024)
    assert abs(p - exact) <= 4 * se


def test_monte_carlo_trivial_and_deterministic():
    assert classical_monte_carlo_p0(1, 1000, seed=1) == (0.0, 0.0)
    assert classical_monte_carlo_p0(6, 5000, seed=9) == classical_monte_carlo_p0(6, 5000, seed=9)
    with pytest.raises(ValueError):
        classical_monte_carlo_p0(3, samples=10)
