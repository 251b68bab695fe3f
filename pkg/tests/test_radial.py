import math
import warnings

import numpy as np
import pytest

from normground.radial import (
    GridEscapeWarning,
    RadialField,
    RadialGrid,
    StatePair,
    coupling_integral,
    dilate,
    kinetic,
    lp_norm,
    lp_power,
    mass,
    normalize_mass,
    read_profile,
    write_profile,
)
from normground.params import gamma


def gaussian(grid, width=1.0):
    return grid.sample(lambda r: np.exp(-((r / width) ** 2) / 2))


def test_grid_basics():
    g = RadialGrid(3, 10.0, 101)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 10.0
    assert g.h == pytest.approx(0.1)
    assert g.sphere_area == pytest.approx(4 * math.pi)
    assert RadialGrid(4).sphere_area == pytest.approx(2 * math.pi**2)
    assert g == RadialGrid(3, 10.0, 101) and hash(g) == hash(RadialGrid(3, 10.0, 101))
    with pytest.raises(ValueError):
        RadialGrid(3, 10.0, 8)
    with pytest.raises(ValueError):
        RadialGrid(2)


def test_field_enforces_dirichlet_and_immutability(grid3):
    f = RadialField(grid3, np.ones(grid3.n))
    assert f.values[-1] == 0.0
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    with pytest.raises(ValueError):
        RadialField(grid3, np.ones(10))


def test_zero_field_norms(grid3):
    z = RadialField(grid3, np.zeros(grid3.n))
    assert mass(z) == 0 and kinetic(z) == 0
    with pytest.raises(ValueError):
        normalize_mass(z, 1.0)


def test_gaussian_oracles(grid3):
    # exp(-r^2/2) in R^3: mass^2 = pi^{3/2}, |grad|^2 = 3/2 pi^{3/2}, |f|_4^4 = (pi/2)^{3/2}
    f = gaussian(grid3)
    assert mass(f) ** 2 == pytest.approx(math.pi**1.5, rel=1e-9)
    assert kinetic(f) == pytest.approx(1.5 * math.pi**1.5, rel=1e-5)
    assert lp_norm(f, 4) ** 4 == pytest.approx((math.pi / 2) ** 1.5, rel=1e-9)
    assert lp_norm(f, 2) == pytest.approx(mass(f), rel=1e-14)


def test_second_order_convergence():
    errs = []
    for n in (257, 513, 1025):
        g = RadialGrid(3, 12.0, n)
        errs.append(abs(kinetic(gaussian(g)) - 1.5 * math.pi**1.5))
    assert errs[0] / errs[1] >= 3.9 and errs[1] / errs[2] >= 3.9


def test_lp_norm_monotone_and_domain(grid3):
    f = gaussian(grid3)
    g = RadialField(grid3, 1.2 * f.values)
    assert lp_norm(g, 1) > lp_norm(f, 1)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_coupling_integral_identities(grid3):
    u = gaussian(grid3)
    zero = RadialField(grid3, np.zeros(grid3.n))
    assert coupling_integral(StatePair(u, zero), 1.5, 1.5) == 0.0
    assert coupling_integral(StatePair(u, u), 1.5, 2.0) == pytest.approx(lp_power(u, 3.5), rel=1e-14)


def test_coupling_integral_gaussian_oracle():
    # exp(-r^2/2) and exp(-r^2/8): u^{1.5} v^{1.5} = exp(-r^2 (0.75 + 0.1875)) analytically
    g = RadialGrid(3, 20.0, 8192)
    u, v = gaussian(g), gaussian(g, 2.0)
    c = 0.75 + 0.1875
    exact = (math.pi / c) ** 1.5
    assert coupling_integral(StatePair(u, v), 1.5, 1.5) == pytest.approx(exact, rel=1e-9)


def test_normalize_mass(grid3):
    f = gaussian(grid3)
    g = normalize_mass(f, 2.5)
    assert mass(g) == pytest.approx(2.5, rel=1e-15)
    assert normalize_mass(g, 2.5).values == pytest.approx(g.values, rel=1e-15)
    assert normalize_mass(g, mass(g)) is g


def test_dilation_identities(grid3):
    f = gaussian(grid3, 1.5)
    assert dilate(f, 0.0) is f
    for s in (-0.7, -0.2, 0.3, 0.9):
        d = dilate(f, s)
        assert mass(d) == pytest.approx(mass(f), rel=1e-14)
        assert kinetic(d) == pytest.approx(math.exp(2 * s) * kinetic(f), rel=1e-4)
        p = 3.2
        assert lp_power(d, p) == pytest.approx(math.exp(p * gamma(3, p) * s) * lp_power(f, p), rel=1e-4)


def test_dilation_semigroup(grid3):
    f = gaussian(grid3, 1.5)
    one = dilate(f, 0.5)
    two = dilate(dilate(f, 0.2), 0.3)
    single = np.max(np.abs(one.values - gaussian(grid3, 1.5 / math.exp(0.5)).values * math.exp(0.75)))
    assert np.max(np.abs(one.values - two.values)) <= 2 * single + 1e-12


def test_dilation_warns_on_escape(grid3):
    f = gaussian(grid3, 2.0)
    with pytest.warns(GridEscapeWarning):
        dilate(f, -3.0)
    with pytest.warns(GridEscapeWarning):
        dilate(f, 6.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dilate(f, 0.5)


def test_profile_round_trip(tmp_path, grid3):
    u = gaussian(grid3)
    v = RadialField(grid3, np.random.default_rng(1).random(grid3.n))
    path = write_profile(tmp_path / "prof.csv", grid3, {"u": u, "v": v})
    assert path.read_text().splitlines()[0] == "r,u,v"
    grid, cols = read_profile(path, 3)
    assert grid == grid3
    assert np.array_equal(cols["u"].values, u.values)
    assert np.array_equal(cols["v"].values, v.values)


def test_profile_rejects_nonuniform(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("r,u\n" + "\n".join(f"{x},{0.0}" for x in [0.0, 0.1, 0.3] + [0.4 + 0.1 * k for k in range(20)]))
    with pytest.raises(ValueError):
        read_profile(path, 3)
