"""Problem constants, derived exponents, regime labels and threshold quantities."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path


class ParamsError(ValueError):
    """Raised when a parameter set violates the admissible exponent/coefficient ranges."""


class UnsupportedConfiguration(ParamsError):
    """Raised for configurations where a threshold formula is singular."""


class Regime(str, enum.Enum):
    MIXED = "MixedSubSuper"
    SUPERCRITICAL = "PurelySupercritical"
    OTHER = "Other"


def gamma(N: int, s: float) -> float:
    """Gagliardo-Nirenberg scaling exponent N(s-2)/(2s)."""
    return N * (s - 2.0) / (2.0 * s)


def l2_critical(N: int) -> float:
    return 2.0 + 4.0 / N


def sobolev_exponent(N: int) -> float:
    return 2.0 * N / (N - 2.0)


@dataclass(frozen=True)
class ProblemParams:
    N: int
    p: float
    q: float
    r1: float
    r2: float
    mu1: float
    mu2: float
    beta: float
    a1: float
    a2: float

    def __post_init__(self):
        validate(self)

    @property
    def r(self) -> float:
        return self.r1 + self.r2

    def with_(self, **changes) -> "ProblemParams":
        data = asdict(self)
        data.update(changes)
        return ProblemParams(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemParams":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ParamsError(f"unknown parameter key(s): {', '.join(unknown)}")
        missing = sorted(names - set(data))
        if missing:
            raise ParamsError(f"missing parameter key(s): {', '.join(missing)}")
        try:
            values = {k: float(v) for k, v in data.items()}
        except (TypeError, ValueError) as exc:
            raise ParamsError(f"non-numeric parameter value: {exc}") from None
        if values["N"] != int(values["N"]):
            raise ParamsError("N must be an integer")
        values["N"] = int(values["N"])
        return cls(**values)

    @classmethod
    def from_json(cls, path) -> "ProblemParams":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParamsError(f"invalid JSON in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ParamsError("parameter file must contain a JSON object")
        return cls.from_dict(data)


def validate(params: ProblemParams) -> None:
    N = params.N
    if N < 3:
        raise ParamsError(f"N={N}: dimension must be at least 3")
    two_star = sobolev_exponent(N)
    r = params.r1 + params.r2
    checks = [
        (params.r1 > 1, f"r1={params.r1} must exceed 1"),
        (params.r2 > 1, f"r2={params.r2} must exceed 1"),
        (2 < params.p < two_star, f"p={params.p} must lie in (2, 2*={two_star:g})"),
        (2 < r < two_star, f"r1+r2={r} must lie in (2, 2*={two_star:g})"),
        (2 < params.q <= two_star, f"q={params.q} must lie in (2, 2*={two_star:g}]"),
        (params.mu1 > 0 and params.mu2 > 0, "mu1, mu2 must be positive"),
        (params.a1 > 0 and params.a2 > 0, "masses a1, a2 must be positive"),
        (params.beta >= 0, "beta must be nonnegative"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ParamsError(msg)


@dataclass(frozen=True)
class RegimeData:
    gamma_p: float
    gamma_q: float
    gamma_r: float
    pbar: float
    two_star: float
    regime: Regime


def derive_regime(params: ProblemParams) -> RegimeData:
    validate(params)
    N = params.N
    pbar = l2_critical(N)
    two_star = sobolev_exponent(N)
    p, q, r = params.p, params.q, params.r
    # q = 2* gives gamma exactly 1; avoid float drift there
    gq = 1.0 if q == two_star else gamma(N, q)
    if p < pbar < q <= two_star:
        regime = Regime.MIXED
    elif min(p, q, r) > pbar and max(p, q, r) < two_star:
        regime = Regime.SUPERCRITICAL
    else:
        regime = Regime.OTHER
    return RegimeData(gamma(N, p), gq, gamma(N, r), pbar, two_star, regime)


@dataclass(frozen=True)
class ThresholdData:
    D1: float
    D2: float
    D3: float
    T: float
    C_Np: float
    C_Nq: float
    C_Nr: float


def threshold_T(params: ProblemParams) -> float:
    """The mass-dependent quantity whose smallness controls the mixed landscape.

    Three branches, chosen by comparing r = r1 + r2 with the L2-critical exponent.
    """
    rd = derive_regime(params)
    N = params.N
    p, q, r = params.p, params.q, params.r
    gp, gq, gr = rd.gamma_p, rd.gamma_q, rd.gamma_r
    if math.isclose(q * gq, 2.0, rel_tol=0, abs_tol=1e-13):
        raise UnsupportedConfiguration("q equals the L2-critical exponent; T is singular")
    mix = params.a1 ** (params.r1 * (1 - gr)) * params.a2 ** (params.r2 * (1 - gr)) * params.beta
    A = params.mu1 * params.a1 ** (p * (1 - gp))
    B = params.mu2 * params.a2 ** (q * (1 - gq))
    pbar = l2_critical(N)
    if math.isclose(r, pbar, rel_tol=1e-13):
        if math.isclose(p * gp, 2.0, abs_tol=1e-13):
            raise UnsupportedConfiguration("p equals the L2-critical exponent; T is singular")
        return min(mix, A ** (1 / (2 - p * gp)) * B ** (1 / (q * gq - 2)))
    if r < pbar:
        return mix * B ** ((2 - r * gr) / (q * gq - 2)) + A * B ** ((2 - p * gp) / (q * gq - 2))
    if math.isclose(p * gp, 2.0, abs_tol=1e-13):
        raise UnsupportedConfiguration("p equals the L2-critical exponent; T is singular")
    return mix * A ** ((r * gr - 2) / (2 - p * gp)) + B * A ** ((q * gq - 2) / (2 - p * gp))


def compute_thresholds(params: ProblemParams, gn_constants) -> ThresholdData:
    """D1, D2, D3 and T from the Gagliardo-Nirenberg constants (C_Np, C_Nq, C_Nr)."""
    C_p, C_q, C_r = (float(c) for c in gn_constants)
    if min(C_p, C_q, C_r) <= 0:
        raise ParamsError("Gagliardo-Nirenberg constants must be positive")
    rd = derive_regime(params)
    p, q, r = params.p, params.q, params.r
    gp, gq, gr = rd.gamma_p, rd.gamma_q, rd.gamma_r
    D1 = (
        (max(params.r1, params.r2) / r) ** (r * gr / 2)
        * C_r**r
        * params.a1 ** (params.r1 * (1 - gr))
        * params.a2 ** (params.r2 * (1 - gr))
    )
    D2 = params.mu1 * C_p**p * params.a1 ** (p * (1 - gp)) / p
    D3 = params.mu2 * C_q**q * params.a2 ** (q * (1 - gq)) / q
    return ThresholdData(D1, D2, D3, threshold_T(params), C_p, C_q, C_r)
