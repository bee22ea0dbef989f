import math

import pytest

from fracplap import FracParams, PropertyId, gamma, make_grid, run_suite, verify
from fracplap.verify import _CHECKERS, translation_bound


def test_checker_coverage_matches_enumeration():
    assert set(_CHECKERS) == set(PropertyId)
    assert len(PropertyId) == 13


def test_identity_properties_machine_exact():
    params = FracParams(alpha=0.5, p=2.0, T=1.0)
    grid = make_grid(1.0, 128)
    for prop in (PropertyId.IBP_EXACT, PropertyId.RL_CAPUTO, PropertyId.EVEN_ENERGY):
        rep = verify(prop, params, grid, samples=100, seed=42)
        assert rep.passed
        assert abs(rep.worst_margin) <= 1e-12
        assert rep.tolerance_used == 1e-12


def test_inequality_properties_pass():
    params = FracParams(alpha=0.6, p=2.0, T=1.0)
    grid = make_grid(1.0, 256)
    for prop in (
        PropertyId.SEMIGROUP,
        PropertyId.LEFT_INVERSE,
        PropertyId.IBP_INTEGRAL,
        PropertyId.YOUNG_BOUND,
        PropertyId.POINCARE,
        PropertyId.SUP_EMBED,
        PropertyId.EMBED_LQ,
        PropertyId.MONOTONE_GAP,
        PropertyId.GRAD_FD,
    ):
        rep = verify(prop, params, grid, samples=40, seed=1)
        assert rep.passed, f"{prop.value} failed with margin {rep.worst_margin}"


def test_poincare_constant_recomputed():
    params = FracParams(alpha=0.5, p=2.0, T=1.0)
    grid = make_grid(1.0, 256)
    rep = verify(PropertyId.POINCARE, params, grid, samples=100, seed=0)
    assert rep.passed
    # closed form 1/Gamma(1.5) = 2/sqrt(pi)
    assert rep.bound_constant == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-12)
    assert rep.bound_constant == pytest.approx(
        1.0**0.5 / gamma(1.5), rel=1e-12
    )


def test_sup_embed_precondition_raises():
    params = FracParams(alpha=0.3, p=2.0, T=1.0)
    grid = make_grid(1.0, 64)
    with pytest.raises(ValueError):
        verify(PropertyId.SUP_EMBED, params, grid)


def test_translation_compact_report():
    params = FracParams(alpha=0.4, p=2.0, T=1.0)
    grid = make_grid(1.0, 256)
    rep = verify(PropertyId.TRANSLATION_COMPACT, params, grid, samples=20, seed=42)
    assert rep.passed
    assert rep.refinement_ratio is not None and rep.refinement_ratio <= 1.0
    # derived bound is positive and h-monotone
    assert translation_bound(params, 1.0 / 64.0) < translation_bound(params, 1.0 / 16.0)


def test_suite_skip_routing_low_alpha():
    params = FracParams(alpha=0.3, p=2.0, T=1.0)
    grid = make_grid(1.0, 64)
    reports = run_suite([params], grid, seed=0, samples=10)
    by_prop = {r.property: r for r in reports}
    assert by_prop[PropertyId.SUP_EMBED].status == "skipped"
    assert "alpha" in by_prop[PropertyId.SUP_EMBED].reason
    assert by_prop[PropertyId.POINCARE].status == "passed"
    assert by_prop[PropertyId.EMBED_LQ].status == "passed"


def test_suite_all_run_high_alpha():
    params = FracParams(alpha=0.75, p=2.0, T=1.0)
    grid = make_grid(1.0, 64)
    reports = run_suite([params], grid, seed=0, samples=10)
    assert len(reports) == 13
    assert all(r.status != "skipped" for r in reports)


def test_suite_empty_params():
    assert run_suite([], make_grid(1.0, 16), seed=0) == []


def test_suite_order_and_determinism():
    params = FracParams(alpha=0.6, p=2.0, T=1.0)
    grid = make_grid(1.0, 64)
    r1 = run_suite([params], grid, seed=42, samples=10)
    r2 = run_suite([params], grid, seed=42, samples=10)
    assert [r.property for r in r1] == list(PropertyId)
    for a, b in zip(r1, r2):
        assert a == b  # dataclass equality covers every reported number


def test_report_invariant_passed_iff_margin():
    params = FracParams(alpha=0.6, p=2.0, T=1.0)
    grid = make_grid(1.0, 64)
    for r in run_suite([params], grid, seed=3, samples=10):
        if r.status == "skipped":
            continue
        if r.refinement_ratio is None:
            assert r.passed == (r.worst_margin >= -r.tolerance_used)
        elif r.passed:
            assert r.worst_margin >= -r.tolerance_used


def test_bound_constants_closed_forms():
    import mpmath

    mpmath.mp.dps = 30
    grid = make_grid(1.0, 128)
    params = FracParams(alpha=0.6, p=2.0, T=1.0)
    young = verify(PropertyId.YOUNG_BOUND, params, grid, samples=10, seed=0)
    ref = float(1.0**0.6 / mpmath.gamma(1.6))
    assert young.bound_constant == pytest.approx(ref, rel=1e-12)
    sup = verify(PropertyId.SUP_EMBED, params, grid, samples=10, seed=0)
    a, p, q = 0.6, 2.0, 2.0
    ref = float(1.0 ** (a - 1 / p) / (mpmath.gamma(a) * ((a - 1) * q + 1) ** (1 / q)))
    assert sup.bound_constant == pytest.approx(ref, rel=1e-12)
