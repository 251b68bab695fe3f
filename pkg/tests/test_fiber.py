import math

import numpy as np
import pytest

from normground.fiber import (
    Classification,
    FiberError,
    FiberIntegrals,
    FiberMap,
    Which,
    analyze_fiber,
    energy,
    fiber_profile,
    locate_critical_points,
    pohozaev,
    project_to_pohozaev,
)
from normground.landscape import h_coeffs
from normground.params import ProblemParams, compute_thresholds
from normground.radial import RadialField, RadialGrid, StatePair, dilate_pair, mass
from normground.scalar import gn_constants, normalized_scalar
from normground.solver import initial_pair

from conftest import MIXED, SUPER


def gaussian(grid, amp, width):
    return RadialField(grid, amp * np.exp(-((grid.nodes / width) ** 2)))


def gaussian_integrals(N, amps, widths, params):
    """Exact integrals of u = A1 exp(-r²/w1²), v = A2 exp(-r²/w2²) over R^N."""
    (A1, A2), (w1, w2) = amps, widths

    def gauss(alpha):
        return (math.pi / alpha) ** (N / 2)

    def kin(A, w):
        alpha = 2 / w**2
        return A * A * 4 / w**4 * N / (2 * alpha) * gauss(alpha)

    return FiberIntegrals(
        kin(A1, w1),
        kin(A2, w2),
        A1**params.p * gauss(params.p / w1**2),
        A2**params.q * gauss(params.q / w2**2),
        A1**params.r1 * A2**params.r2 * gauss(params.r1 / w1**2 + params.r2 / w2**2),
    )


def random_pair(grid, rng):
    amps = rng.uniform(0.3, 2.0, 2)
    widths = rng.uniform(1.0, 3.0, 2)
    return StatePair(gaussian(grid, amps[0], widths[0]), gaussian(grid, amps[1], widths[1]))


@pytest.fixture(scope="module")
def fine_grid():
    return RadialGrid(3, 40.0, 40960)


def test_energy_of_zero_pair(grid3, mixed_params):
    zero = StatePair.from_arrays(grid3, np.zeros(grid3.n), np.zeros(grid3.n))
    assert energy(zero, mixed_params) == 0.0 and pohozaev(zero, mixed_params) == 0.0
    assert analyze_fiber(FiberMap.of(zero, mixed_params)).classification is Classification.NONE


def test_uncoupled_energy_splits(grid3, mixed_params):
    prm = mixed_params.with_(beta=0.0)
    u, v = gaussian(grid3, 1.0, 1.5), gaussian(grid3, 0.7, 2.0)
    zero = RadialField(grid3, np.zeros(grid3.n))
    total = energy(StatePair(u, v), prm)
    assert total == pytest.approx(energy(StatePair(u, zero), prm) + energy(StatePair(zero, v), prm), rel=1e-13)


@pytest.mark.parametrize("inst", [MIXED, SUPER])
def test_gaussian_pair_against_exact_integrals(fine_grid, inst):
    prm = ProblemParams(**inst)
    amps, widths = (1.2, 0.8), (1.5, 2.2)
    pair = StatePair(gaussian(fine_grid, amps[0], widths[0]), gaussian(fine_grid, amps[1], widths[1]))
    got = FiberIntegrals.of(pair, prm)
    ref = gaussian_integrals(3, amps, widths, prm)
    for name in ("K_u", "K_v", "A", "B", "C"):
        assert getattr(got, name) == pytest.approx(getattr(ref, name), rel=1e-6), name
    assert energy(pair, prm) == pytest.approx(float(FiberMap(ref, prm).phi(0.0)), rel=1e-6)


@pytest.mark.parametrize("inst", [MIXED, SUPER])
def test_closed_form_derivative_matches_finite_differences(inst):
    prm = ProblemParams(**inst)
    fm = FiberMap(FiberIntegrals(1.3, 0.4, 0.9, 0.5, 0.6), prm)
    h = 1e-5
    for s in (-2.0, -0.3, 0.0, 0.7, 1.5):
        fd = (fm.phi(s + h) - fm.phi(s - h)) / (2 * h)
        assert abs(fd - fm.dphi(s)) < 1e-6 * max(1.0, abs(fm.dphi(s)))
        fd2 = (fm.dphi(s + h) - fm.dphi(s - h)) / (2 * h)
        assert abs(fd2 - fm.d2phi(s)) < 1e-6 * max(1.0, abs(fm.d2phi(s)))


@pytest.mark.parametrize("inst", [MIXED, SUPER])
def test_pohozaev_is_fiber_slope_for_regridded_dilations(grid3, inst):
    prm = ProblemParams(**inst)
    rng = np.random.default_rng(7)
    h = 1e-3
    for _ in range(20):
        pair = random_pair(grid3, rng)
        fd = (energy(dilate_pair(pair, h), prm) - energy(dilate_pair(pair, -h), prm)) / (2 * h)
        P = pohozaev(pair, prm)
        scale = FiberIntegrals.of(pair, prm).K
        assert abs(fd - P) < 1e-3 * scale


def test_scalar_ground_state_has_zero_pohozaev(gs4, grid3):
    prm = ProblemParams(**SUPER).with_(beta=0.0)
    sol = normalized_scalar(gs4, prm.mu1, prm.a1, grid3)
    pair = StatePair(sol.u, RadialField(grid3, np.zeros(grid3.n)))
    K = FiberIntegrals.of(pair, prm).K
    assert abs(pohozaev(pair, prm)) < 1e-4 * K


def test_fiber_value_at_origin_and_limits(grid3, mixed_params, super_params):
    for prm in (mixed_params, super_params):
        pair = initial_pair(prm)
        fm = FiberMap.of(pair, prm)
        assert float(fm.phi(0.0)) == energy(pair, prm)
        assert abs(fm.phi(-40.0)) < 1e-10
        assert fm.phi(40.0) < -1e10
    # in the mixed case the fiber approaches zero from below
    assert FiberMap.of(initial_pair(mixed_params), mixed_params).phi(-30.0) < 0


def test_fiber_profile_matches_closed_form(mixed_params):
    pair = initial_pair(mixed_params)
    s, phi, dphi = fiber_profile(pair, mixed_params, (-3.0, 3.0), 61)
    fm = FiberMap.of(pair, mixed_params)
    assert s.shape == (61,)
    np.testing.assert_array_equal(phi, fm.phi(s))
    np.testing.assert_array_equal(dphi, fm.dphi(s))


@pytest.mark.parametrize("inst", [MIXED, SUPER])
def test_roots_shift_under_exact_dilation(inst):
    prm = ProblemParams(**inst)
    base = FiberIntegrals(1.3, 0.4, 0.9, 0.5, 0.6)
    fm = FiberMap(base, prm)
    rep = analyze_fiber(fm)
    for s0 in (-1.5, 0.4, 2.0):
        shifted = FiberIntegrals(
            *(k * math.exp(e * s0) for k, e in zip((base.K_u, base.K_v, base.A, base.B, base.C), (2, 2, *[fm.terms[i][1] for i in (0, 1, 2)])))
        )
        moved = analyze_fiber(FiberMap(shifted, prm))
        assert moved.classification is rep.classification
        for a, b in zip(rep.roots, moved.roots):
            assert abs((a - s0) - b) < 1e-10


def test_roots_shift_under_regridded_dilation(grid3, super_params):
    pair = initial_pair(super_params)
    t0 = analyze_fiber(FiberMap.of(pair, super_params)).t_max
    for s0 in (-0.5, 0.5):
        moved = analyze_fiber(FiberMap.of(dilate_pair(pair, s0), super_params)).t_max
        assert abs((t0 - s0) - moved) < 1e-3


def test_supercritical_unique_maximum(grid3, super_params):
    rng = np.random.default_rng(3)
    for _ in range(10):
        rep = locate_critical_points(random_pair(grid3, rng), super_params)
        assert rep.classification is Classification.UNIQUE_MAX
        assert len(rep.roots) == 1 and rep.second_derivs[0] < 0


def test_mixed_min_then_max(mixed_params):
    rep = locate_critical_points(initial_pair(mixed_params), mixed_params)
    assert rep.classification is Classification.PLUS_MINUS
    assert rep.s_minus < rep.t_max
    assert rep.phi_at_crit[0] < 0 < rep.phi_at_crit[1]
    assert rep.second_derivs[0] > 0 > rep.second_derivs[1]
    assert rep.zeros[0] < rep.t_max < rep.zeros[1]


def test_degenerate_fiber_detected():
    prm = ProblemParams(**MIXED)
    # choose C so that the two critical points coalesce: Φ' and Φ'' vanish together
    fm0 = FiberMap(FiberIntegrals(1.0, 0.0, 1.0, 1.0, 0.0), prm)
    (cA, eA), (cB, eB), _ = fm0.terms
    # solve K - cA eA e^{(eA-2)s} - cB eB e^{(eB-2)s} = 0 with its s-derivative
    ratio = cA * eA * (2 - eA) / (cB * eB * (eB - 2))
    s = math.log(ratio) / (eB - eA)
    K = cA * eA * math.exp((eA - 2) * s) + cB * eB * math.exp((eB - 2) * s)
    fm = FiberMap(FiberIntegrals(K, 0.0, 1.0, 1.0, 0.0), prm)
    assert analyze_fiber(fm).classification in (Classification.DEGENERATE, Classification.NONE)


def test_projection_without_minimizer_fails(super_params):
    with pytest.raises(FiberError):
        project_to_pohozaev(initial_pair(super_params), super_params, Which.MINIMIZER)


def test_projection_onto_mixed_minimizer(grid3, mixed_params):
    u, v = gaussian(grid3, 1.0, 4.0), gaussian(grid3, 1.0, 4.0)
    pair = StatePair(u * (mixed_params.a1 / mass(u)), v * (mixed_params.a2 / mass(v)))
    out = project_to_pohozaev(pair, mixed_params, Which.MINIMIZER)
    assert mass(out.u) == pytest.approx(mixed_params.a1, rel=1e-12)
    assert mass(out.v) == pytest.approx(mixed_params.a2, rel=1e-12)
    assert abs(analyze_fiber(FiberMap.of(out, mixed_params)).s_minus) < 1e-8


def test_projection_onto_supercritical_maximum(super_params):
    out = project_to_pohozaev(initial_pair(super_params), super_params)
    K = FiberIntegrals.of(out, super_params).K
    assert abs(pohozaev(out, super_params)) < 1e-8 * K
    assert mass(out.u) == pytest.approx(super_params.a1, rel=1e-12)
    assert mass(out.v) == pytest.approx(super_params.a2, rel=1e-12)


def test_fiber_bounded_below_by_landscape(grid3):
    prm = ProblemParams(**MIXED)
    th = compute_thresholds(prm, gn_constants(prm, grid3))
    h = h_coeffs(prm, th)
    rng = np.random.default_rng(11)
    s = np.linspace(-6, 4, 201)
    for _ in range(10):
        pair = random_pair(grid3, rng)
        pair = StatePair(pair.u * (prm.a1 / mass(pair.u)), pair.v * (prm.a2 / mass(pair.v)))
        fm = FiberMap.of(pair, prm)
        t = np.exp(s) * math.sqrt(fm.integrals.K)
        phi, lower = fm.phi(s), h.value(t)
        scale = np.abs(phi) + np.abs(lower) + 1e-300
        assert np.all(phi - lower >= -1e-8 * scale)
