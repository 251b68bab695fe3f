"""Single-equation ground states and their mass-constrained levels.

The unit problem -w'' - (N-1)/r w' + w = w^{p-1} is solved by shooting on
w(0). Every normalized solution of -Δu + λu = μ u^{p-1}, |u|_2 = a, is a
rescaling of that one profile, which fixes λ, the energy level and the
Gagliardo-Nirenberg constant.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import kve

from .params import ProblemParams, derive_regime, gamma, l2_critical, sobolev_exponent
from .radial import RadialField, RadialGrid, kinetic, lp_power, mass

R_START = 1e-6
BISECTION_RTOL = 1e-12
MAX_BISECTIONS = 200


class ShootingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ScalarGroundState:
    w: RadialField
    p: float
    C_Np: float
    w_mass: float
    w_kinetic: float
    w_lp: float
    center: float
    profile: Callable[[np.ndarray], np.ndarray]

    @property
    def N(self) -> int:
        return self.w.grid.N

    @property
    def gamma_p(self) -> float:
        return gamma(self.N, self.p)

    def pohozaev_defect(self) -> float:
        """Relative gap in |∇w|^2 = γ_p |w|_p^p."""
        return abs(self.w_kinetic - self.gamma_p * self.w_lp) / self.w_kinetic


@dataclass(frozen=True, eq=False)
class NormalizedScalarSolution:
    u: RadialField
    lam: float
    p: float
    mu: float
    a: float
    energy: float

    def pohozaev_defect(self) -> float:
        g = gamma(self.u.grid.N, self.p)
        k = kinetic(self.u)
        return abs(k - g * self.mu * lp_power(self.u, self.p)) / k


@dataclass(frozen=True)
class SobolevData:
    N: int
    S: float

    def critical_level(self, mu: float) -> float:
        return self.S ** (self.N / 2) * mu ** (-(self.N - 2) / 2) / self.N


def _rhs(N: int, p: float):
    def f(r, y):
        w, dw = y
        return [dw, w - abs(w) ** (p - 2) * w - (N - 1) / r * dw]

    return f


def _start(N: int, p: float, alpha: float):
    c = (alpha - alpha ** (p - 1)) / N
    return [alpha + 0.5 * c * R_START**2, c * R_START]


def _crosses_zero(r, y):
    return y[0]


_crosses_zero.terminal = True
_crosses_zero.direction = -1


def _turns_up(r, y):
    return y[1]


_turns_up.terminal = True
_turns_up.direction = 1


def _shoot(N: int, p: float, alpha: float, r_end: float, dense: bool = False):
    return integrate.solve_ivp(
        _rhs(N, p),
        (R_START, r_end),
        _start(N, p, alpha),
        method="DOP853",
        rtol=1e-12,
        atol=1e-15,
        events=[_crosses_zero, _turns_up],
        dense_output=dense,
    )


def _classify(sol) -> int:
    """+1 for overshoot (sign change), -1 for undershoot (turns back up), 0 if undecided."""
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size:
        return -1
    return 0


def shoot_center(N: int, p: float, bracket=(1.0, None), r_end: float = 200.0) -> tuple[float, float]:
    """Bisect w(0) between undershooting and overshooting trajectories."""
    two_star = sobolev_exponent(N)
    if not 2 < p < two_star:
        raise ShootingError(f"no decaying positive solution bracket for p={p} outside (2, {two_star:g})")
    lo, hi = bracket
    if lo <= 1.0:
        lo = 1.0 + 1e-9
    if _classify(_shoot(N, p, lo, r_end)) != -1:
        raise ShootingError(f"lower bracket w(0)={lo} does not undershoot")
    if hi is None:
        hi = 2.0 * lo
        for _ in range(60):
            if _classify(_shoot(N, p, hi, r_end)) == 1:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise ShootingError(f"no overshooting center value found for N={N}, p={p}")
    elif _classify(_shoot(N, p, hi, r_end)) != 1:
        raise ShootingError(f"upper bracket w(0)={hi} does not overshoot")
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= BISECTION_RTOL * hi:
            return lo, hi
        mid = 0.5 * (lo + hi)
        kind = _classify(_shoot(N, p, mid, r_end))
        if kind == 1:
            hi = mid
        elif kind == -1:
            lo = mid
        else:
            return mid, mid
    raise ShootingError(f"bisection did not reach tolerance after {MAX_BISECTIONS} steps")


def _decaying_tail(N: int, r_c: float, w_c: float):
    nu = (N - 2) / 2

    def tail(r):
        r = np.asarray(r, dtype=float)
        return w_c * (r_c / r) ** nu * kve(nu, r) / kve(nu, r_c) * np.exp(-(r - r_c))

    return tail


def _profile(N: int, p: float, lo: float, hi: float):
    """Dense profile: average of the bracketing trajectories, Bessel tail past their split."""
    sol_lo = _shoot(N, p, lo, 200.0, dense=True)
    sol_hi = _shoot(N, p, hi, 200.0, dense=True)
    r_stop = min(sol_lo.t[-1], sol_hi.t[-1])
    probe = np.linspace(R_START, r_stop, 20001)
    w_lo = sol_lo.sol(probe)[0]
    w_hi = sol_hi.sol(probe)[0]
    w_mid = 0.5 * (w_lo + w_hi)
    split = (np.abs(w_hi - w_lo) > 1e-6 * np.abs(w_mid)) | (w_mid <= 0)
    idx = int(np.argmax(split)) if split.any() else probe.size - 1
    r_c = float(probe[max(idx - 1, 1)])
    w_c = float(0.5 * (sol_lo.sol(r_c)[0] + sol_hi.sol(r_c)[0]))
    tail = _decaying_tail(N, r_c, w_c)
    alpha = 0.5 * (lo + hi)

    def profile(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty_like(r)
        core = r <= r_c
        small = r < R_START
        if core.any():
            rc = np.clip(r[core], R_START, None)
            out[core] = 0.5 * (sol_lo.sol(rc)[0] + sol_hi.sol(rc)[0])
        out[small] = alpha + 0.5 * (alpha - alpha ** (p - 1)) / N * r[small] ** 2
        far = ~core
        if far.any():
            out[far] = tail(r[far])
        return out

    return profile, r_c


def solve_unit_scalar(N: int, p: float, grid: RadialGrid, bracket=(1.0, None)) -> ScalarGroundState:
    """Positive radial solution of -Δw + w = w^{p-1}, sampled on `grid`."""
    if grid.N != N:
        raise ValueError(f"grid dimension {grid.N} does not match N={N}")
    lo, hi = shoot_center(N, p, bracket)
    profile, _ = _profile(N, p, lo, hi)
    w = RadialField(grid, profile(grid.nodes))
    w_mass = mass(w)
    w_kin = kinetic(w)
    w_lp = lp_power(w, p)
    gs = ScalarGroundState(w, p, 0.0, w_mass, w_kin, w_lp, 0.5 * (lo + hi), profile)
    object.__setattr__(gs, "C_Np", gn_constant(gs))
    return gs


@functools.lru_cache(maxsize=64)
def _cached_unit(N: int, p: float, R_max: float, n: int) -> ScalarGroundState:
    return solve_unit_scalar(N, p, RadialGrid(N, R_max, n))


def unit_ground_state(N: int, p: float, grid: RadialGrid) -> ScalarGroundState:
    """Memoized `solve_unit_scalar`; results are immutable so sharing is safe."""
    return _cached_unit(int(N), float(p), grid.R_max, grid.n)


def gn_constant(gs: ScalarGroundState) -> float:
    g = gamma(gs.N, gs.p)
    return gs.w_lp ** (1 / gs.p) / (gs.w_kinetic ** (g / 2) * gs.w_mass ** (1 - g))


def scaling_lambda(gs: ScalarGroundState, mu: float, a: float) -> float:
    p = gs.p
    pg = p * gs.gamma_p
    if math.isclose(p, l2_critical(gs.N), rel_tol=1e-13):
        raise ValueError("mass-critical exponent has no normalized rescaling")
    return (a**2 / gs.w_mass**2 * mu ** (2 / (p - 2))) ** ((p - 2) / (2 - pg))


def normalized_scalar(gs: ScalarGroundState, mu: float, a: float, grid: RadialGrid | None = None) -> NormalizedScalarSolution:
    """u(x) = (λ/μ)^{1/(p-2)} w(√λ x) with |u|_2 = a, sampled on `grid` (default: the grid of w)."""
    if mu <= 0 or a <= 0:
        raise ValueError("mu and a must be positive")
    lam = scaling_lambda(gs, mu, a)
    grid = gs.w.grid if grid is None else grid
    vals = (lam / mu) ** (1 / (gs.p - 2)) * gs.profile(math.sqrt(lam) * grid.nodes)
    u = RadialField(grid, vals)
    u = RadialField(grid, u.values * (a / mass(u)))
    energy = 0.5 * kinetic(u) - mu / gs.p * lp_power(u, gs.p)
    return NormalizedScalarSolution(u, lam, gs.p, mu, a, energy)


def scalar_level(gs: ScalarGroundState, mu: float, a: float) -> float:
    """Closed-form level (1/2 - 1/(pγ)) (γ C^p μ a^{p-pγ})^{2/(2-pγ)}."""
    p, g = gs.p, gs.gamma_p
    if math.isclose(p, l2_critical(gs.N), rel_tol=1e-13):
        raise ValueError("mass-critical exponent has no closed-form level")
    pg = p * g
    return (0.5 - 1 / pg) * (g * gs.C_Np**p * mu * a ** (p - pg)) ** (2 / (2 - pg))


def talenti(N: int, r):
    return (1.0 + np.asarray(r) ** 2 / (N * (N - 2))) ** (-(N - 2) / 2)


@functools.lru_cache(maxsize=16)
def sobolev_data(N: int) -> SobolevData:
    """Best Sobolev constant from the Talenti extremal, by adaptive quadrature on [0, inf)."""
    k = N * (N - 2)
    two_star = sobolev_exponent(N)

    def grad_sq(r):
        return (r / N) ** 2 * (1 + r * r / k) ** (-N) * r ** (N - 1)

    def power(r):
        return (1 + r * r / k) ** (-N) * r ** (N - 1)

    area = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    opts = dict(epsabs=0, epsrel=1e-13, limit=400)
    grad = area * (integrate.quad(grad_sq, 0, 1, **opts)[0] + integrate.quad(grad_sq, 1, np.inf, **opts)[0])
    lp = area * (integrate.quad(power, 0, 1, **opts)[0] + integrate.quad(power, 1, np.inf, **opts)[0])
    return SobolevData(N, grad / lp ** (2 / two_star))


def sobolev_level(N: int, mu: float) -> float:
    return sobolev_data(N).critical_level(mu)


def gn_constant_for(N: int, s: float, grid: RadialGrid) -> float:
    if math.isclose(s, sobolev_exponent(N), rel_tol=1e-14):
        return sobolev_data(N).S ** -0.5
    return unit_ground_state(N, s, grid).C_Np


def gn_constants(params: ProblemParams, grid: RadialGrid) -> tuple[float, float, float]:
    """(C_{N,p}, C_{N,q}, C_{N,r}) for the exponents of `params`."""
    N = params.N
    return (
        gn_constant_for(N, params.p, grid),
        gn_constant_for(N, params.q, grid),
        gn_constant_for(N, params.r, grid),
    )


def marginal_level(N: int, s: float, mu: float, a: float, grid: RadialGrid) -> float:
    """m_s^μ(a); the Sobolev-critical value comes from the closed form."""
    if math.isclose(s, sobolev_exponent(N), rel_tol=1e-14):
        return sobolev_level(N, mu)
    return scalar_level(unit_ground_state(N, s, grid), mu, a)


def marginal_levels(params: ProblemParams, grid: RadialGrid) -> tuple[float, float]:
    """(m(a1, 0), m(0, a2))."""
    derive_regime(params)
    N = params.N
    return (
        marginal_level(N, params.p, params.mu1, params.a1, grid),
        marginal_level(N, params.q, params.mu2, params.a2, grid),
    )
