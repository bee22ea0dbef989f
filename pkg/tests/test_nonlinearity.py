import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracplap import (
    CoefficientFn,
    ExtrapolationError,
    FracParams,
    sublinear_power,
    superlinear_power,
    table_spec,
    validate_hypotheses,
)
from fracplap.nonlinearity import eval as nl_eval

PARAMS = FracParams(alpha=0.6, p=2.0, T=1.0)


def test_zero_maps_to_zero():
    for spec in (sublinear_power(1.5), superlinear_power(4.0)):
        f, F = nl_eval(spec, 0.3, 0.0)
        assert f == 0.0 and F == 0.0


def test_sublinear_example():
    # q = 1.5, a = 1, u = 4: f = 1.5 * 4^0.5 = 3, F = 4^1.5 = 8
    f, F = nl_eval(sublinear_power(1.5), 0.0, 4.0)
    assert f == pytest.approx(3.0, rel=1e-14)
    assert F == pytest.approx(8.0, rel=1e-14)


def test_superlinear_example():
    # mu = 4, u = -2: f = |u|^2 u = -8, F = |u|^4/4 = 4
    f, F = nl_eval(superlinear_power(4.0), 0.0, -2.0)
    assert f == pytest.approx(-8.0, rel=1e-14)
    assert F == pytest.approx(4.0, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(
    u=st.floats(-1e3, 1e3, allow_nan=False),
    t=st.floats(0.0, 1.0),
    q=st.floats(1.2, 1.9),
    mu=st.floats(2.5, 6.0),
)
def test_odd_f_even_F(u, t, q, mu):
    for spec in (sublinear_power(q), superlinear_power(mu)):
        fp_, Fp = nl_eval(spec, t, u)
        fm, Fm = nl_eval(spec, t, -u)
        assert fm == -fp_
        assert Fm == Fp


def test_antiderivative_consistency():
    # (F(u+e) - F(u-e)) / 2e = f(u), away from the kink at 0 for q < 2
    rng = np.random.default_rng(9)
    specs = [sublinear_power(1.5), superlinear_power(4.0)]
    for spec in specs:
        for _ in range(1000):
            u = float(rng.uniform(0.1, 50.0) * rng.choice([-1.0, 1.0]))
            t = float(rng.uniform(0.0, 1.0))
            eps = 1e-5 * max(1.0, abs(u))
            _, Fp = nl_eval(spec, t, u + eps)
            _, Fm = nl_eval(spec, t, u - eps)
            f, _ = nl_eval(spec, t, u)
            fd = (Fp - Fm) / (2.0 * eps)
            assert fd == pytest.approx(f, rel=1e-6, abs=1e-12)


def test_table_family_matches_linear_profile():
    # table encoding of f(u) = u reproduces F(u) = u^2/2 exactly
    spec = table_spec(np.linspace(-2.0, 2.0, 9), np.linspace(-2.0, 2.0, 9))
    f, F = nl_eval(spec, 0.0, 0.75)
    assert f == pytest.approx(0.75, rel=1e-14)
    assert F == pytest.approx(0.75**2 / 2.0, rel=1e-13)


def test_table_extrapolation_rejected():
    spec = table_spec([-1.0, 0.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(ExtrapolationError):
        nl_eval(spec, 0.0, 2.0)


def test_table_with_time_coefficient():
    # f(t, u) = pi^2 sin(pi t), F = pi^2 sin(pi t) u: the classical source
    a = CoefficientFn(kind="sine", value=0.0, amplitude=np.pi**2, frequency=np.pi)
    spec = table_spec([-10.0, 10.0], [1.0, 1.0], a_coeff=a)
    f, F = nl_eval(spec, 0.5, 3.0)
    assert f == pytest.approx(np.pi**2, rel=1e-14)
    assert F == pytest.approx(3.0 * np.pi**2, rel=1e-14)


def test_sublinear_hypotheses_hold():
    rep = validate_hypotheses(sublinear_power(1.5), PARAMS, "SUBLINEAR", seed=3)
    assert rep.all_hold
    for rec in rep.records:
        assert rec.worst_margin >= -1e-12


def test_superlinear_hypotheses_hold():
    rep = validate_hypotheses(superlinear_power(4.0), PARAMS, "SUPERLINEAR", seed=3)
    assert rep.all_hold


def test_superlinear_fails_sublinear_regime():
    # exponent ordering mu <= q < p is violated structurally for mu = 4 > p = 2
    rep = validate_hypotheses(superlinear_power(4.0), PARAMS, "SUBLINEAR", seed=3)
    rec = rep.record("sub_homogeneity")
    assert not rec.holds
    assert rec.worst_margin < 0.0


def test_sublinear_fails_superlinear_regime():
    rep = validate_hypotheses(sublinear_power(1.5), PARAMS, "SUPERLINEAR", seed=3)
    assert not rep.all_hold


def test_small_amplitude_decay_record():
    rep = validate_hypotheses(superlinear_power(4.0), PARAMS, "SUPERLINEAR", seed=3)
    rec = rep.record("small_amplitude_decay")
    assert rec.holds


def test_evenness_detection():
    asym = table_spec([-1.0, 0.0, 1.0], [0.0, 0.0, 1.0])
    assert not asym.is_even()
    sym = table_spec([-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0])
    assert sym.is_even()
