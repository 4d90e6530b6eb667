import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triwalk.coin import (
    FAST_DECAY_STATE,
    SYMMETRIC_STATE,
    classify,
    grover_coin,
    permutation_coin,
    recurrent_coin,
)
from triwalk.engine import WalkRun, evolve
from triwalk.recurrence import (
    InsufficientDataError,
    ReturnSeries,
    fit_decay_exponent,
    polya_estimate,
    verdict,
)


def power_law(alpha, t_max=300, amplitude=1.0):
    t = np.arange(t_max + 1, dtype=float)
    p = np.zeros_like(t)
    on = (t % 3 == 0) & (t > 0)
    p[on] = amplitude * t[on] ** -alpha
    p[0] = 1.0
    return ReturnSeries(np.arange(t_max + 1), p)


@pytest.mark.parametrize("alpha", [2 / 3, 1, 4 / 3, 2, 8 / 3])
def test_fit_recovers_exact_power_law(alpha):
    fit = fit_decay_exponent(power_law(alpha))
    assert abs(fit.exponent + alpha) < 1e-10
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 91


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.1, 4.0), amplitude=st.floats(1e-3, 1.0))
def test_fit_recovers_any_power_law(alpha, amplitude):
    fit = fit_decay_exponent(power_law(alpha, amplitude=amplitude))
    assert fit.exponent == pytest.approx(-alpha, abs=1e-9)
    assert np.exp(fit.intercept) == pytest.approx(amplitude, rel=1e-9)


def test_fit_refuses_short_series():
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(power_law(1.0, t_max=40))


def test_fit_excludes_nonpositive_points():
    s = power_law(2.0)
    p = s.p0.copy()
    p[[60, 90]] = 0.0
    fit = fit_decay_exponent(ReturnSeries(s.times, p))
    assert fit.n_excluded == 2 and fit.n_points == 89
    assert fit.exponent == pytest.approx(-2.0, abs=1e-10)


def test_polya_trivial_series():
    zero = ReturnSeries.from_values([1.0] + [0.0] * 30)
    est = polya_estimate(zero)
    assert est.partial_value == 0.0
    assert est.verdict_hint == "undetermined"
    relocal = ReturnSeries.from_values([1.0, 0.0, 0.0, 1.0])
    assert polya_estimate(relocal).partial_value == 1.0


def test_polya_grover_symmetric(long_runs):
    _, series = long_runs("grover_symmetric")
    est = polya_estimate(series)
    assert 0 < est.partial_value < 1
    assert est.verdict_hint == "transient-consistent"
    assert np.all(np.diff(est.partials) >= 0)
    # increments are survival * p0(t); check against the series directly
    t = np.arange(3, 301, 3)
    survival = np.concatenate([[1.0], 1 - est.partials[:-1]])
    inc = np.diff(np.concatenate([[0.0], est.partials]))
    assert np.allclose(inc, survival * series.p0[1:], atol=1e-15)
    on = inc[t - 1]
    assert on[-1] < on[9] / 10
    assert np.all(on[10:] < on[9])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=60))
def test_polya_monotone_and_bounded(values):
    est = polya_estimate(ReturnSeries.from_values([1.0] + values))
    assert np.all(np.diff(est.partials) >= 0)
    assert 0 <= est.partial_value <= 1


def test_reference_exponents(long_runs):
    expectations = {
        "grover_symmetric": (-4 / 3, 0.15),
        "grover_fastdecay": (-8 / 3, 0.3),
        "crec_symmetric": (-1.0, 0.1),
    }
    for name, (target, tol) in expectations.items():
        _, series = long_runs(name)
        assert abs(fit_decay_exponent(series, 30, 300).exponent - target) <= tol


def test_permuting_chirality_leaves_grover_series_unchanged():
    rng = np.random.default_rng(3)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    _, ref = evolve(WalkRun(grover_coin(), psi, 60))
    for perm in [(1, 2, 0), (2, 0, 1), (1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        _, other = evolve(WalkRun(grover_coin(), psi[list(perm)], 60))
        assert np.max(np.abs(other.p0 - ref.p0)) < 1e-10


def test_verdicts(long_runs):
    _, g = long_runs("grover_symmetric")
    assert verdict(classify(grover_coin()), fit_decay_exponent(g)).consistent
    _, c = long_runs("crec_symmetric")
    assert verdict(classify(recurrent_coin()), fit_decay_exponent(c)).consistent
    cyc = permutation_coin("231")
    _, s = evolve(WalkRun(cyc, SYMMETRIC_STATE, 30))
    assert verdict(classify(cyc), series=s).consistent


def test_verdict_flags_inconsistency(long_runs):
    _, g = long_runs("grover_symmetric")
    report = verdict(classify(recurrent_coin()), fit_decay_exponent(g))
    assert not report.consistent
    _, f = long_runs("grover_fastdecay")
    assert verdict(classify(grover_coin()), fit_decay_exponent(f)).consistent
    ident = permutation_coin("123")
    _, s = evolve(WalkRun(ident, FAST_DECAY_STATE, 12))
    assert verdict(classify(ident), series=s).consistent  # ballistic: p0 = 0
    _, cyc = evolve(WalkRun(permutation_coin("312"), FAST_DECAY_STATE, 12))
    assert not verdict(classify(ident), series=cyc).consistent


def test_verdict_requires_inputs():
    with pytest.raises(ValueError):
        verdict(classify(grover_coin()))
    with pytest.raises(ValueError):
        verdict(classify(permutation_coin("231")))


def test_sublattice_and_norm_for_reference_runs(long_runs):
    for name in ("grover_symmetric", "grover_fastdecay", "crec_symmetric"):
        _, series = long_runs(name)
        assert series.max_off_sublattice() < 1e-12
        assert series.norm_drift() < 1e-9
        assert series.at(0) == pytest.approx(1.0, abs=1e-15)
