import numpy as np
import pytest

from normground.landscape import (
    LandscapeCoeffs,
    LandscapeError,
    analyze,
    effective_threshold,
    h_coeffs,
    radius_R0,
)
from normground.params import ProblemParams, compute_thresholds
from normground.scalar import gn_constants

import oracles

BASE = dict(N=3, p=2.5, q=4, r1=1.5, r2=1.5, mu1=1, mu2=1, beta=1)


@pytest.fixture(scope="module")
def C(grid3):
    return gn_constants(ProblemParams(**BASE, a1=1, a2=1), grid3)


def h_for(C, a1, a2, **changes):
    params = ProblemParams(**{**BASE, **changes}, a1=a1, a2=a2)
    th = compute_thresholds(params, C)
    return h_coeffs(params, th), th


def test_pure_quadratic_has_no_structure():
    rep = analyze(LandscapeCoeffs(0.5, 0, 0, 0, (1.5, 0.75, 3.0)))
    assert rep.critical_points == [] and rep.zeros == [] and not rep.structure_ok


def test_invalid_coefficients():
    with pytest.raises(ValueError):
        LandscapeCoeffs(0.5, -1, 0, 0, (1.5, 0.75, 3.0))
    with pytest.raises(ValueError):
        LandscapeCoeffs(0.0, 1, 0, 0, (1.5, 0.75, 3.0))


def test_h_coefficients_follow_thresholds(C):
    coeffs, th = h_for(C, 0.5, 0.5)
    assert coeffs.a == 0.5
    assert (coeffs.b, coeffs.c, coeffs.d) == (th.D1, th.D2, th.D3)
    assert coeffs.exponents == pytest.approx((1.5, 0.75, 3.0))


@pytest.mark.parametrize("scale", [0.05, 0.5, 2.0])
def test_structure_at_small_masses(C, scale):
    coeffs, _ = h_for(C, scale, scale)
    rep = analyze(coeffs)
    assert rep.structure_ok
    (tmin, tmax) = (cp.t for cp in rep.critical_points)
    assert [cp.kind for cp in rep.critical_points] == ["min", "max"]
    R0, R1 = rep.zeros
    for z in (R0, R1):
        assert abs(coeffs.value(z)) < 1e-10 * max(1.0, coeffs.a * z * z)
    t = np.geomspace(R0 * 1e-4, R1 * 1e4, 20001)
    inside = (t > R0 * (1 + 1e-9)) & (t < R1 * (1 - 1e-9))
    outside = (t < R0 * (1 - 1e-9)) | (t > R1 * (1 + 1e-9))
    assert np.all(coeffs.value(t[inside]) > 0) and np.all(coeffs.value(t[outside]) < 0)
    assert tmin < R0 < tmax < R1


def test_radius_R0_properties(C):
    coeffs, th = h_for(C, 1.0, 1.0)
    R0 = radius_R0(coeffs)
    assert abs(coeffs.value(R0)) < 1e-10
    rep = analyze(coeffs)
    assert R0 < rep.critical_points[1].t < rep.zeros[1]
    assert 0.5 * R0**2 > th.D2 * R0**0.75


def test_radius_R0_requires_structure(C):
    coeffs, _ = h_for(C, 5.0, 5.0)
    assert not analyze(coeffs).structure_ok
    with pytest.raises(LandscapeError):
        radius_R0(coeffs)


def test_effective_threshold_grid(C):
    params = ProblemParams(**BASE, a1=1, a2=1)
    th = compute_thresholds(params, C)
    sigmas = np.geomspace(0.01, 10, 60)
    res = effective_threshold(params, th, sigmas)
    assert res.monotone
    assert 1.0 < res.sigma < 5.0
    flags = [row[2] for row in res.table]
    assert flags[0] and not flags[-1]
    assert res.T == pytest.approx([row[1] for row in res.table if row[0] == res.sigma][0])
    with pytest.raises(ValueError):
        effective_threshold(params.with_(p=4, r1=1.9, r2=1.9), th, sigmas)


def test_effective_threshold_zero_when_nothing_qualifies(C):
    params = ProblemParams(**BASE, a1=1, a2=1)
    th = compute_thresholds(params, C)
    assert effective_threshold(params, th, [20.0, 40.0]).sigma == 0.0


def test_uncoupled_three_term_landscape():
    rep = analyze(LandscapeCoeffs(0.5, 0.0, 1e-2, 1e-2, (1.5, 0.75, 3.0)))
    assert rep.structure_ok and len(rep.critical_points) == 2


def test_shrinking_negative_terms_keeps_structure(C):
    coeffs, _ = h_for(C, 2.5, 2.5)
    assert analyze(coeffs).structure_ok
    for kappa in (0.9, 0.5, 0.1, 0.01):
        scaled = LandscapeCoeffs(coeffs.a, kappa * coeffs.b, kappa * coeffs.c, kappa * coeffs.d, coeffs.exponents)
        assert analyze(scaled).structure_ok


@pytest.mark.parametrize("case", oracles.CASES)
def test_at_most_two_critical_points_dense_oracle(case):
    rng = np.random.default_rng(hash(case) % 2**32)
    for _ in range(5):
        exps = oracles.draw_exponents(case, rng)
        coeffs = oracles.draw_coefficients(case, rng, 20)
        dense = oracles.dense_critical_counts(coeffs, exps, samples=200_000)
        for row, ref in zip(coeffs, dense):
            rep = analyze(LandscapeCoeffs(*row, tuple(exps)))
            assert len(rep.critical_points) == ref <= 2


def test_too_many_roots_is_an_error(monkeypatch):
    import normground.landscape as ls

    monkeypatch.setattr(ls, "_sign_roots", lambda *a, **k: [0.0, 1.0, 2.0])
    with pytest.raises(LandscapeError):
        analyze(LandscapeCoeffs(0.5, 0.1, 0.1, 0.1, (1.5, 0.75, 3.0)))
