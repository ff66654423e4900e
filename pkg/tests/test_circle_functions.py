import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rule, synthetic
from oracles import mp_derivative_norm, mp_tail
from pluripolar import circle_functions as cf
from pluripolar.errors import RuleError, SyntheticRuleError


def test_geometric_truncation_index_is_seven(geometric):
    # [DERIVED] closed-form tail 2 rho^(K+1)/(1 - rho): 2^-5 at K = 6, 2^-6 at K = 7
    assert cf.tail_bound(geometric, 6) == pytest.approx(2.0**-5)
    assert cf.tail_bound(geometric, 7) == pytest.approx(2.0**-6)
    assert cf.truncation_index(geometric, 2.0**-6) == 7


def test_geometric_first_norm_closed_form(geometric):
    # [DERIVED] sum k^2 rho^(2|k|) = 2 x (1 + x)/(1 - x)^3 at x = 1/4, i.e. 40/27
    assert cf.derivative_norm(geometric, 1) == pytest.approx(math.sqrt(40 / 27), rel=1e-10)


def test_exp_power_coefficient(exp_power):
    r = rule("exp-power", alpha=0.5, beta=1.0)
    assert cf.coefficient(r, 4) == pytest.approx(math.exp(-2))
    assert cf.coefficient(r, -4) == pytest.approx(math.exp(-2))


@pytest.mark.parametrize(
    "family, params, coeff",
    [
        ("geometric", {"rho": 0.7}, lambda k: mpmath.mpf(0.7) ** abs(k)),
        ("exp-power", {"alpha": 0.5, "beta": 1.0}, lambda k: mpmath.exp(-mpmath.sqrt(abs(k)))),
        ("log-squared-exp", {"beta": 1.0}, lambda k: mpmath.exp(-mpmath.log(1 + abs(k)) ** 2)),
    ],
)
def test_tail_bound_dominates_mpmath_tail(family, params, coeff):
    r = rule(family, **params)
    for K in (5, 20, 80):
        # the oracle partial tail up to a large index underestimates the true tail
        assert cf.tail_bound(r, K) >= float(mp_tail(coeff, K, 4000)) * (1 - 1e-12)


@pytest.mark.parametrize("j", [0, 1, 2, 3, 5])
def test_derivative_norms_match_mpmath(j):
    r = rule("exp-power", alpha=0.5, beta=1.0)
    ref = mp_derivative_norm(lambda k: mpmath.exp(-mpmath.sqrt(abs(k))), j, 6000)
    assert cf.derivative_norm(r, j) == pytest.approx(float(ref), rel=1e-8)


def test_evaluate_matches_closed_form(geometric):
    # sum rho^|k| z^k on |z| = 1 is the Poisson kernel (1 - rho^2)/|1 - rho z|^2
    theta = np.linspace(0, 2 * np.pi, 17)
    z = np.exp(1j * theta)
    exact = (1 - 0.25) / np.abs(1 - 0.5 * z) ** 2
    assert np.allclose(cf.evaluate(geometric, z, 1e-12), exact, atol=1e-11)


def test_explicit_eval_laurent(degree5):
    z = np.exp(0.3j)
    direct = sum(c * z**k for k, c in degree5.coefficients)
    assert cf.evaluate(degree5, z) == pytest.approx(direct)


def test_synthetic_rules_have_no_pointwise_values():
    r = synthetic("power", exponent=1.5)
    with pytest.raises(SyntheticRuleError):
        cf.coefficient(r, 1)
    with pytest.raises(SyntheticRuleError):
        cf.evaluate(r, 1.0)


@pytest.mark.parametrize(
    "config",
    [
        {"family": "geometric", "params": {"rho": 1.5}},
        {"family": "geometric", "params": {"rho": 0.5, "alpha": 1}},
        {"family": "exp-power", "params": {"alpha": 0.0, "beta": 1}},
        {"family": "nope"},
        {"family": "explicit-list", "params": {"coefficients": {}}},
        {"family": "geometric", "params": {"rho": 0.5}, "colour": "red"},
    ],
)
def test_bad_rules_rejected(config):
    with pytest.raises(RuleError):
        cf.make_rule(config)


def test_normalization_brings_m3_below_half():
    r = cf.normalize(synthetic("power", exponent=1.5))
    assert math.exp(r.norms.log_values[3]) == pytest.approx(0.4)
    small = rule("geometric", rho=0.1)
    assert cf.normalize(small) is small


def test_norm_sequence_is_log_convex(exp_power):
    M = cf.norm_sequence(exp_power, jmax=30)
    assert M.violations() == []


@given(st.floats(0.05, 0.95), st.integers(0, 12))
def test_geometric_norms_vs_series(rho, j):
    r = rule("geometric", rho=rho)
    ks = np.arange(1, 20000, dtype=float)
    with np.errstate(under="ignore"):
        s = 2 * np.sum(np.exp(2 * j * np.log(ks) + 2 * ks * math.log(rho)))
    if j == 0:
        s += 1.0
    assert cf.derivative_norm(r, j) == pytest.approx(math.sqrt(s), rel=1e-8)


@given(st.lists(st.floats(0.1, 3.0), min_size=4, max_size=12))
def test_synthetic_values_round_trip(values):
    M = cf.synthetic_norms("values", values=values)
    assert np.allclose(M.values, values)
    assert M.scaled(2.0).values == pytest.approx(2 * np.asarray(values))
