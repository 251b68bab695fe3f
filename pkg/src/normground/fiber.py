"""Energy, Pohozaev functional and the fiber map along mass-preserving dilations.

The fiber map of a pair is Φ(s) = I(s⋆(u,v)). With the five integrals of the
pair it has the closed form

    Φ(s) = e^{2s} K/2 - e^{pγ_p s} μ1 A/p - e^{qγ_q s} μ2 B/q - e^{rγ_r s} β C,

so in t = e^s it is a landscape l(t) and the landscape scanner finds its
critical points and zeros without any regridding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import landscape
from .params import ProblemParams, Regime, derive_regime
from .radial import StatePair, coupling_integral, dilate_pair, kinetic, lp_power

DEGENERATE_RTOL = 1e-8
PROJECTION_TOL = 1e-10
MAX_PROJECTION_STEPS = 8


class FiberError(RuntimeError):
    """Fiber critical points do not match what the regime guarantees."""


class Classification(str, enum.Enum):
    PLUS_MINUS = "plus_minus"  # local min then global max
    UNIQUE_MAX = "unique_max"
    UNIQUE_MIN = "unique_min"
    DEGENERATE = "degenerate"
    NONE = "none"


class Which(str, enum.Enum):
    MINIMIZER = "minimizer"
    MAXIMIZER = "maximizer"


@dataclass(frozen=True)
class FiberIntegrals:
    """K = |∇u|²+|∇v|², A = |u|_p^p, B = |v|_q^q, C = ∫|u|^{r1}|v|^{r2}."""

    K_u: float
    K_v: float
    A: float
    B: float
    C: float

    @property
    def K(self) -> float:
        return self.K_u + self.K_v

    @classmethod
    def of(cls, pair: StatePair, params: ProblemParams) -> "FiberIntegrals":
        return cls(
            kinetic(pair.u),
            kinetic(pair.v),
            lp_power(pair.u, params.p),
            lp_power(pair.v, params.q),
            coupling_integral(pair, params.r1, params.r2),
        )


class FiberMap:
    """Closed-form Φ and its derivatives for one pair."""

    def __init__(self, integrals: FiberIntegrals, params: ProblemParams):
        rd = derive_regime(params)
        self.integrals = integrals
        self.params = params
        self.regime = rd.regime
        # (coefficient, exponent) of each negative term of Φ
        self.terms = [
            (params.mu1 * integrals.A / params.p, params.p * rd.gamma_p),
            (params.mu2 * integrals.B / params.q, params.q * rd.gamma_q),
            (params.beta * integrals.C, params.r * rd.gamma_r),
        ]

    @classmethod
    def of(cls, pair: StatePair, params: ProblemParams) -> "FiberMap":
        return cls(FiberIntegrals.of(pair, params), params)

    def _eval(self, s, order: int):
        s = np.asarray(s, dtype=float)
        out = 2.0**order * 0.5 * self.integrals.K * np.exp(2 * s)
        for k, e in self.terms:
            out = out - k * e**order * np.exp(e * s)
        return out

    def phi(self, s):
        return self._eval(s, 0)

    def dphi(self, s):
        return self._eval(s, 1)

    def d2phi(self, s):
        return self._eval(s, 2)

    def d2_scale(self, s: float) -> float:
        """Sum of absolute term sizes in Φ″(s); reference for the degeneracy test."""
        total = 2.0 * self.integrals.K * math.exp(2 * s)
        for k, e in self.terms:
            total += k * e * e * math.exp(e * s)
        return total

    def coeffs(self) -> landscape.LandscapeCoeffs:
        (c, ec), (d, ed), (b, eb) = self.terms
        return landscape.LandscapeCoeffs(0.5 * self.integrals.K, b, c, d, (eb, ec, ed))


@dataclass(frozen=True)
class FiberReport:
    s_minus: float | None
    t_max: float | None
    zeros: list
    roots: list
    phi_at_crit: list
    second_derivs: list
    classification: Classification

    def to_dict(self) -> dict:
        return {
            "s_minus": self.s_minus,
            "t_max": self.t_max,
            "zeros": list(self.zeros),
            "roots": list(self.roots),
            "phi_at_crit": list(self.phi_at_crit),
            "second_derivs": list(self.second_derivs),
            "classification": self.classification.value,
        }


def energy(pair: StatePair, params: ProblemParams) -> float:
    """I(u,v) on the grid; mass constraint is not checked here."""
    return float(FiberMap.of(pair, params).phi(0.0))


def pohozaev(pair: StatePair, params: ProblemParams) -> float:
    return float(FiberMap.of(pair, params).dphi(0.0))


def fiber_profile(pair: StatePair, params: ProblemParams, s_range=(-10.0, 10.0), samples: int = 401):
    """Sampled (s, Φ, Φ′) from the closed form."""
    fm = FiberMap.of(pair, params)
    s = np.linspace(s_range[0], s_range[1], samples)
    return s, fm.phi(s), fm.dphi(s)


def analyze_fiber(fm: FiberMap) -> FiberReport:
    if fm.integrals.K <= 0 or all(k == 0 for k, _ in fm.terms):
        return FiberReport(None, None, [], [], [], [], Classification.NONE)
    coeffs = fm.coeffs()
    crit, _ = landscape.critical_points(coeffs)
    if len(crit) > 2:
        raise FiberError(f"fiber map has {len(crit)} critical points")
    roots = [math.log(c.t) for c in crit]
    zeros = [math.log(t) for t in landscape.zeros(coeffs)]
    d2 = [float(fm.d2phi(s)) for s in roots]
    vals = [float(fm.phi(s)) for s in roots]
    kinds = [c.kind for c in crit]
    degenerate = any(abs(v) < DEGENERATE_RTOL * fm.d2_scale(s) for s, v in zip(roots, d2))
    s_minus = t_max = None
    if degenerate:
        cls = Classification.DEGENERATE
    elif kinds == ["min", "max"]:
        cls = Classification.PLUS_MINUS
        s_minus, t_max = roots
    elif kinds == ["max"]:
        cls = Classification.UNIQUE_MAX
        t_max = roots[0]
    elif kinds == ["min"]:
        cls = Classification.UNIQUE_MIN
        s_minus = roots[0]
    else:
        cls = Classification.NONE
    return FiberReport(s_minus, t_max, zeros, roots, vals, d2, cls)


def locate_critical_points(pair: StatePair, params: ProblemParams) -> FiberReport:
    fm = FiberMap.of(pair, params)
    report = analyze_fiber(fm)
    if fm.regime is Regime.SUPERCRITICAL and report.classification is not Classification.UNIQUE_MAX:
        raise FiberError(
            f"supercritical fiber must have one strict maximum, got {report.classification.value} "
            f"with roots {report.roots}"
        )
    return report


def project_to_pohozaev(pair: StatePair, params: ProblemParams, which=Which.MAXIMIZER, tol: float = PROJECTION_TOL):
    """Dilate onto the fiber critical point of the requested kind.

    Regridding perturbs the integrals slightly, so the projection is repeated
    until the remaining shift is below tol.
    """
    which = Which(which)
    current = pair
    for _ in range(MAX_PROJECTION_STEPS):
        rep = analyze_fiber(FiberMap.of(current, params))
        s = rep.t_max if which is Which.MAXIMIZER else rep.s_minus
        if s is None:
            raise FiberError(f"no fiber {which.value} (classification {rep.classification.value})")
        if abs(s) < tol:
            return current
        current = dilate_pair(current, s)
    return current
