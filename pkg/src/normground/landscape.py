"""One-dimensional landscapes l(t) = a t^2 - b t^{e_b} - c t^{e_c} - d t^{e_d}.

With a = 1/2, b = D1·β, c = D2, d = D3 and the exponents (rγ_r, pγ_p, qγ_q)
this is the lower bound h for the energy in terms of the kinetic norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .params import ProblemParams, Regime, ThresholdData, compute_thresholds, derive_regime

SCAN_POINTS = 20000
ROOT_XTOL = 1e-13


class LandscapeError(RuntimeError):
    """More critical points than the landscape can have; signals a scanning defect."""


@dataclass(frozen=True)
class LandscapeCoeffs:
    a: float
    b: float
    c: float
    d: float
    exponents: tuple  # (e_b, e_c, e_d); the leading term always has exponent 2

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("landscape coefficients must be nonnegative")
        if self.a <= 0:
            raise ValueError("quadratic coefficient must be positive")
        if min(self.exponents) <= 0:
            raise ValueError("exponents must be positive")

    def terms(self):
        return [(k, e) for k, e in zip((self.b, self.c, self.d), self.exponents) if k > 0]

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = self.a * t**2
        for k, e in self.terms():
            out = out - k * t**e
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = 2 * self.a * t
        for k, e in self.terms():
            out = out - k * e * t ** (e - 1)
        return out

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = 2 * self.a + 0 * t
        for k, e in self.terms():
            out = out - k * e * (e - 1) * t ** (e - 2)
        return out


@dataclass(frozen=True)
class CriticalPoint:
    t: float
    value: float
    kind: str  # "min" or "max"


@dataclass(frozen=True)
class LandscapeReport:
    critical_points: list
    zeros: list
    structure_ok: bool
    window: tuple = field(default=(0.0, 0.0))

    @property
    def R0(self):
        return self.zeros[0] if self.structure_ok else None

    @property
    def R1(self):
        return self.zeros[1] if self.structure_ok else None

    def to_dict(self) -> dict:
        return {
            "critical_points": [{"t": c.t, "h": c.value, "kind": c.kind} for c in self.critical_points],
            "zeros": list(self.zeros),
            "structure_ok": self.structure_ok,
        }


def h_coeffs(params: ProblemParams, thresholds: ThresholdData) -> LandscapeCoeffs:
    rd = derive_regime(params)
    return LandscapeCoeffs(
        0.5,
        thresholds.D1 * params.beta,
        thresholds.D2,
        thresholds.D3,
        (params.r * rd.gamma_r, params.p * rd.gamma_p, params.q * rd.gamma_q),
    )


def _bracket(coeffs: LandscapeCoeffs, weight: float):
    """Log-window outside of which a*weight*t^2 is beaten by a single negative term.

    weight=2 with coefficient k*e bounds the critical points, weight=1 with k the zeros.
    """
    lo, hi = [], []
    quad = weight * coeffs.a
    for k, e in coeffs.terms():
        kk = k * e if weight == 2 else k
        if e < 2:
            lo.append((kk / quad) ** (1 / (2 - e)))
        elif e > 2:
            hi.append((quad / kk) ** (1 / (e - 2)))
        elif kk >= quad:
            return None
    t_lo = max(lo) if lo else None
    t_hi = min(hi) if hi else None
    if t_lo is not None and t_hi is not None and t_lo >= t_hi:
        return None
    if t_lo is None and t_hi is None:
        return None
    if t_lo is None:
        t_lo = t_hi * 1e-8
    if t_hi is None:
        t_hi = t_lo * 1e8
    return 0.5 * t_lo, 2.0 * t_hi


def _sign_roots(func, x_lo: float, x_hi: float, points: int):
    xs = np.linspace(x_lo, x_hi, points)
    fs = func(xs)
    sgn = np.signbit(fs)
    idx = np.nonzero(sgn[1:] != sgn[:-1])[0]
    roots = []
    for i in idx:
        a, b = xs[i], xs[i + 1]
        if fs[i] == 0:
            roots.append(a)
            continue
        roots.append(brentq(lambda x: float(func(np.array([x]))[0]), a, b, xtol=ROOT_XTOL, rtol=1e-15))
    return roots


def critical_points(coeffs: LandscapeCoeffs, points: int = SCAN_POINTS):
    window = _bracket(coeffs, 2)
    if window is None:
        return [], None

    def scaled(x):  # t l'(t) / t^2 keeps the scan well conditioned
        t = np.exp(x)
        out = 2 * coeffs.a + 0 * t
        for k, e in coeffs.terms():
            out = out - k * e * t ** (e - 2)
        return out

    xs = _sign_roots(scaled, math.log(window[0]), math.log(window[1]), points)
    out = []
    for x in xs:
        t = math.exp(x)
        kind = "min" if coeffs.second_derivative(t) > 0 else "max"
        out.append(CriticalPoint(t, float(coeffs.value(t)), kind))
    return out, window


def zeros(coeffs: LandscapeCoeffs, points: int = SCAN_POINTS):
    window = _bracket(coeffs, 1)
    if window is None:
        return []

    def scaled(x):
        t = np.exp(x)
        out = coeffs.a + 0 * t
        for k, e in coeffs.terms():
            out = out - k * t ** (e - 2)
        return out

    return [math.exp(x) for x in _sign_roots(scaled, math.log(window[0]), math.log(window[1]), points)]


def analyze(coeffs: LandscapeCoeffs, points: int = SCAN_POINTS) -> LandscapeReport:
    crit, window = critical_points(coeffs, points)
    if len(crit) > 2:
        raise LandscapeError(f"found {len(crit)} critical points; at most two are possible")
    zs = zeros(coeffs, points)
    ok = (
        len(crit) == 2
        and crit[0].kind == "min"
        and crit[0].value < 0
        and crit[1].kind == "max"
        and crit[1].value > 0
        and len(zs) == 2
        and crit[0].t < zs[0] < crit[1].t < zs[1]
    )
    if ok:
        # positivity exactly on (R0, R1), probed on both sides and inside
        probe = np.geomspace(zs[0] * 1e-3, zs[1] * 1e3, 4001)
        vals = coeffs.value(probe)
        inside = (probe > zs[0]) & (probe < zs[1])
        ok = bool(np.all(vals[inside] > 0) and np.all(vals[~inside & (np.abs(np.log(probe / zs[0])) > 1e-9) & (np.abs(np.log(probe / zs[1])) > 1e-9)] <= 0))
    return LandscapeReport(crit, zs, bool(ok), window or (0.0, 0.0))


def radius_R0(coeffs: LandscapeCoeffs) -> float:
    rep = analyze(coeffs)
    if not rep.structure_ok:
        raise LandscapeError("landscape lacks the min/max structure; R0 undefined")
    return rep.zeros[0]


@dataclass(frozen=True)
class EffectiveThreshold:
    sigma: float  # largest tested mass scale with the two-critical-point structure (0 if none)
    T: float  # T at that scale
    table: list  # (sigma, T, structure_ok)
    monotone: bool  # structure_ok never reappears above a failing scale


def effective_threshold(params: ProblemParams, gn: ThresholdData, mass_scale_grid) -> EffectiveThreshold:
    """Largest joint mass scale σ, (a1, a2) -> (σ a1, σ a2), giving the landscape structure."""
    if derive_regime(params).regime is not Regime.MIXED:
        raise ValueError("effective threshold is defined for the mixed regime only")
    C = (gn.C_Np, gn.C_Nq, gn.C_Nr)
    rows = []
    for sigma in sorted(float(s) for s in mass_scale_grid):
        scaled = params.with_(a1=sigma * params.a1, a2=sigma * params.a2)
        th = compute_thresholds(scaled, C)
        rows.append((sigma, th.T, analyze(h_coeffs(scaled, th)).structure_ok))
    good = [row for row in rows if row[2]]
    best = good[-1] if good else (0.0, 0.0, False)
    flags = [row[2] for row in rows]
    monotone = all(flags[i] or not flags[i + 1] for i in range(len(flags) - 1))
    return EffectiveThreshold(best[0], best[1], rows, monotone)
