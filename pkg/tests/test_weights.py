import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wmalab.errors import InvalidInput, InvalidParameter
from wmalab.weights import (BIG_O, CONCAVE_HIGH, CONVEX_LOW, LITTLE_O, NEITHER, PROBE_T, custom_weight,
                            doubling_checks, growth_dominates, make_log_iterated, make_power, make_quasi_homog,
                            parse_weight, validate, weak_homogeneity_check, weight_from_dict,
                            young_adapted_weight, young_inequality_slack)

BUILTINS = [make_power(0.25), make_power(0.5), make_power(1), make_power(1.5), make_power(2),
            make_log_iterated(1), make_log_iterated(2), make_log_iterated(3),
            make_quasi_homog(1, 1), make_quasi_homog(1, 0.5), make_quasi_homog(1.5, 2)]


# ---------------------------------------------------------------- power

def test_power_identity_weight():
    w = make_power(1)
    assert w(-4.0) == -4.0
    assert w.derivative(-4.0) == 1.0


def test_power_square_growth_constant_is_tight():
    w = make_power(2)
    assert w(-3.0) == -9.0
    assert abs(-3.0 * w.derivative(-3.0)) == 18.0 == 2 * abs(w(-3.0))
    assert w.kind == CONCAVE_HIGH and w.M == 2 and w.quasi_homog == (1.0, 2.0, 0.0)


def test_power_square_root():
    w = make_power(0.5)
    assert w(-4.0) == -2.0
    assert w.kind == CONVEX_LOW
    assert validate(w).get("convexity").passed


@pytest.mark.parametrize("p", [0, -1, float("nan"), float("inf")])
def test_power_rejects_bad_exponent(p):
    with pytest.raises(InvalidParameter):
        make_power(p)


# ---------------------------------------------------------------- iterated logarithm

def test_log_iterated_values():
    w1 = make_log_iterated(1)
    assert w1(-(math.e - 1)) == pytest.approx(-1.0, abs=1e-15)
    assert w1(0.0) == 0.0
    # oracle: evaluate the composition with plain math.log
    t = -(math.exp(math.e - 1) - 1)
    inner = -math.log(1 - t)
    expected = -math.log(1 - inner)
    assert expected == pytest.approx(-1.0, abs=1e-14)
    assert make_log_iterated(2)(t) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("m", [0, -2, 1.5])
def test_log_iterated_rejects_bad_depth(m):
    with pytest.raises(InvalidParameter):
        make_log_iterated(m)


def test_log_iterated_derivative_matches_finite_difference():
    w = make_log_iterated(3)
    t = -np.logspace(0, 5, 30)
    h = 1e-6 * np.abs(t)
    fd = (w(t + h) - w(t - h)) / (2 * h)
    np.testing.assert_allclose(w.derivative(t), fd, rtol=1e-6)


# ---------------------------------------------------------------- quasi-homogeneous

def test_quasi_homog_value():
    w = make_quasi_homog(1, 1)
    t = -(math.e ** 2 - math.e)
    # log(e - t) = log(e^2) = 2
    assert w(t) == pytest.approx(-(math.e ** 2 - math.e) * 2, rel=1e-14)


def test_quasi_homog_gamma_in_unit_interval():
    C, M, q = make_quasi_homog(1, 1).quasi_homog
    gamma = M / (M - q + 1)
    assert C >= 1 and M >= 1 and 0 <= q < 1
    assert 0 < gamma < 1


def test_quasi_homog_unit_scaling_is_exact():
    w = make_quasi_homog(1.5, 2)
    t = PROBE_T
    assert np.array_equal(np.abs(w(1.0 * t)), np.abs(w(t)))


def test_quasi_homog_derivative_matches_finite_difference():
    w = make_quasi_homog(1.5, 0.7)
    t = -np.logspace(0, 5, 30)
    h = 1e-6 * np.abs(t)
    np.testing.assert_allclose(w.derivative(t), (w(t + h) - w(t - h)) / (2 * h), rtol=1e-6)


def test_quasi_homog_rejects_bad_parameters():
    with pytest.raises(InvalidParameter):
        make_quasi_homog(0.5, 1)
    with pytest.raises(InvalidParameter):
        make_quasi_homog(1, 0)


# ---------------------------------------------------------------- validation

def test_validate_square_passes_with_nonnegative_sandwich_slack():
    rep = validate(make_power(2))
    assert rep.passed
    assert rep.get("weak-homogeneity").slack >= 0


def test_square_declared_convex_fails_convexity_with_witness():
    w = custom_weight(lambda t: -t * t, lambda t: -2 * t, CONVEX_LOW, label="minus-square")
    c = validate(w).get("convexity")
    assert not c.passed
    assert c.witness is not None and c.witness < 0
    # oracle: second difference of -t^2 on the same probes is negative everywhere
    ts = PROBE_T[::-1]
    cs = -ts ** 2
    sl = np.diff(cs) / np.diff(ts)
    assert np.all(np.diff(sl) < 0)


def test_identity_is_in_both_classes():
    w = make_power(1)
    assert validate(w).passed
    assert validate(w.as_kind(CONCAVE_HIGH, 1.0)).passed


@pytest.mark.parametrize("w", BUILTINS, ids=lambda w: w.label)
def test_builtins_validate(w):
    rep = validate(w)
    assert rep.passed, rep.to_dict()


@pytest.mark.parametrize("w", BUILTINS, ids=lambda w: w.label)
def test_builtins_normalized_and_strictly_increasing_on_probes(w):
    assert w(0.0) == 0.0
    a = np.abs(w(PROBE_T))
    assert np.all(np.diff(a) > 0)


@given(p=st.floats(0.05, 1.0), eps=st.floats(1e-3, 1.0), k=st.integers(0, len(PROBE_T) - 1))
def test_power_low_exponent_is_homogeneous(p, eps, k):
    w = make_power(p)
    t = PROBE_T[k]
    assert abs(w(eps * t)) == pytest.approx(eps ** p * abs(w(t)), rel=1e-12)


@pytest.mark.parametrize("w", [make_power(1), make_power(1.5), make_power(2), make_quasi_homog(1, 1),
                               make_quasi_homog(1, 0.5)], ids=lambda w: w.label)
def test_concave_doubling_and_sandwich(w):
    val, der = doubling_checks(w)
    # chi concave with chi(0) = 0 gives |chi(2t)| >= 2|chi(t)| (see decisions ledger for orientation)
    assert val.passed
    assert der.passed
    assert weak_homogeneity_check(w).passed


def test_derivative_doubling_fails_beyond_square():
    # chi'(2t)/chi'(t) = 2^(p-1) exceeds M = p once p > 2
    w = make_power(3)
    _, der = doubling_checks(w)
    assert not der.passed
    assert der.slack == pytest.approx((3 - 4) / 1, rel=1e-9)


# ---------------------------------------------------------------- growth comparison

def test_growth_dominates_examples():
    assert growth_dominates(make_log_iterated(1), make_power(1)) == LITTLE_O
    assert growth_dominates(make_power(1), make_power(1)) == BIG_O
    assert growth_dominates(make_power(1), make_log_iterated(1)) == NEITHER


def test_growth_dominates_power_oracle():
    # ratio (-t)^(p1 - p2) -> 0 iff p1 < p2
    assert growth_dominates(make_power(0.3), make_power(0.5)) == LITTLE_O
    assert growth_dominates(make_power(2), make_power(1)) == NEITHER


# ---------------------------------------------------------------- Young-adapted weights

def _brute_conjugate(gamma, z, ymax):
    y = np.concatenate([gamma.L, np.linspace(0, ymax, 20001)])
    return np.max(z[:, None] * y[None, :] - gamma(y)[None, :], axis=1)


def test_young_constant_density():
    f = np.ones(50)
    w = young_adapted_weight(f, np.full(50, 1 / 50))
    t = PROBE_T
    slack = young_inequality_slack(w, t, np.ones_like(t))
    assert np.all(slack >= -1e-12 * np.maximum(1, -t))
    # (-chi)(t) * 1 <= -t + gamma(1) with gamma(1) = 1 for the dyadic construction
    assert w.gamma(1.0) == pytest.approx(1.0)
    assert np.all(np.abs(w(t)) <= -t + 1 + 1e-12 * -t)


def test_young_conjugate_matches_brute_force():
    rng = np.random.default_rng(3)
    f = rng.lognormal(0, 2, 400)
    w = young_adapted_weight(f, rng.dirichlet(np.ones(400)))
    gam = w.gamma
    L = gam.L[gam.L < 1e6]
    z = np.linspace(0, 2.0 ** (len(L) - 1), 200)
    got = gam.conjugate(z)
    want = _brute_conjugate(gam, z, L[-1])
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10)
    # the inverse lands on gamma*(z) = s
    s = np.geomspace(1e-3, 1e3, 50)
    np.testing.assert_allclose(gam.conjugate(gam.conjugate_inverse(s)), s, rtol=1e-10, atol=1e-12)


def test_young_single_cell_density_is_unbounded():
    f = np.zeros(100)
    f[17] = 5.0
    w = young_adapted_weight(f, np.full(100, 0.01))
    a = np.abs(w(np.array([-1e2, -1e4, -1e6])))
    assert np.all(np.diff(a) > 0) and a[-1] > 10 * a[0]
    assert w(0.0) == 0.0


def test_young_rejects_nonintegrable():
    with pytest.raises(InvalidInput):
        young_adapted_weight([1.0, np.inf], [0.5, 0.5])
    with pytest.raises(InvalidInput):
        young_adapted_weight([1e308, 1e308], [1e10, 1e10])
    with pytest.raises(InvalidInput):
        young_adapted_weight([1.0, -1.0], [0.5, 0.5])


def test_young_gamma_integrable():
    rng = np.random.default_rng(5)
    f = rng.pareto(1.5, 2000) + 1
    m = np.full(2000, 1 / 2000)
    w = young_adapted_weight(f, m)
    assert np.isfinite(w.gamma_integral)
    assert w.gamma_integral <= 4 * np.sum(f * m) + np.sum(m)


@given(st.lists(st.floats(0, 1e6), min_size=3, max_size=60),
       st.lists(st.floats(-1e6, 0), min_size=1, max_size=30))
def test_young_inequality_property(fvals, ts):
    f = np.asarray(fvals)
    if not np.any(f > 0):
        f[0] = 1.0
    w = young_adapted_weight(f, np.full(len(f), 1 / len(f)))
    t = np.asarray(ts)[:, None]
    ff = np.concatenate([f, [0.0, 1.0, 1e9]])[None, :]
    slack = young_inequality_slack(w, t, ff)
    scale = np.maximum(1.0, -t + w.gamma(ff))
    assert np.all(slack >= -1e-12 * scale)


def test_young_weight_is_valid_convex_low():
    rng = np.random.default_rng(11)
    f = rng.exponential(1, 300)
    w = young_adapted_weight(f, np.full(300, 1 / 300))
    assert w.kind == CONVEX_LOW
    assert validate(w).passed


# ---------------------------------------------------------------- parsing

@pytest.mark.parametrize("spec", ["power:p=0.5", "logiter:m=2", "qh:p=1,a=1"])
def test_parse_roundtrip(spec):
    w = parse_weight(spec)
    assert w.label == spec
    w2 = weight_from_dict(w.to_dict())
    np.testing.assert_array_equal(w2(PROBE_T), w(PROBE_T))


@pytest.mark.parametrize("spec", ["power", "power:q=1", "cubic:p=1", "logiter:m=x", "power:p=-1"])
def test_parse_rejects(spec):
    with pytest.raises(InvalidParameter):
        parse_weight(spec)


def test_young_weight_serialization_roundtrip():
    f = np.array([0.5, 2.0, 8.0, 1.0])
    w = young_adapted_weight(f, np.full(4, 0.25))
    w2 = weight_from_dict(w.to_dict())
    np.testing.assert_allclose(w2(PROBE_T), w(PROBE_T), rtol=1e-12)
