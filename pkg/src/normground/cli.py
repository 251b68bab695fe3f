"""Command-line front end: `normground <subcommand> ...`.

Exit codes: 0 success, 1 a check failed or the solver did not converge,
2 the configuration is invalid or outside the supported regimes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fiber as fib
from . import landscape
from .params import ParamsError, ProblemParams, Regime, compute_thresholds, derive_regime, l2_critical, sobolev_exponent
from .radial import RadialGrid, StatePair, read_profile, write_profile
from .scalar import gn_constants, marginal_levels, normalized_scalar, scalar_level, scaling_lambda, unit_ground_state
from .solver import (
    ConvergenceError,
    SolverConfig,
    extract_multipliers,
    initial_pair,
    solve,
    sweep,
)

logger = logging.getLogger("normground")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2
VERIFY_RTOL = 1e-10


# ---------------------------------------------------------------- JSON helpers


def encode(obj):
    """Floats become 17-significant-digit strings so stored values round-trip exactly."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dump_json(path: Path, data) -> Path:
    path.write_text(json.dumps(encode(data), indent=2, sort_keys=True) + "\n")
    return path


def git_blob_hash(content: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()


@dataclass
class RunRecord:
    subcommand: str
    params: dict | None = None
    config_hash: str | None = None
    outputs: list = field(default_factory=list)
    wall_time: float = 0.0
    passed: bool = True
    failed_checks: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "params": self.params,
            "config_hash": self.config_hash,
            "outputs": [str(p) for p in self.outputs],
            "wall_time": self.wall_time,
            "passed": self.passed,
            "failed_checks": list(self.failed_checks),
        }


# ---------------------------------------------------------------- configuration


def load_config(path) -> tuple[ProblemParams, SolverConfig, bytes]:
    """Config JSON: {"params": {...}, "solver": {...}}; the solver block is optional."""
    raw = Path(path).read_bytes()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParamsError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict) or "params" not in data:
        raise ParamsError("config must be a JSON object with a 'params' block")
    unknown = sorted(set(data) - {"params", "solver"})
    if unknown:
        raise ParamsError(f"unknown config section(s): {', '.join(unknown)}")
    params = ProblemParams.from_dict(data["params"])
    config = SolverConfig.from_dict(data.get("solver") or {})
    return params, config, raw


def out_dir(args) -> Path:
    path = Path(os.environ.get("NORMGROUND_OUT") or args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- subcommands


def cmd_scalar(args, record: RunRecord):
    N, p = args.N, args.p
    if N < 3 or not 2 < p < sobolev_exponent(N):
        raise ParamsError(f"scalar ground states need N >= 3 and 2 < p < {sobolev_exponent(max(N, 3)):g}")
    if math.isclose(p, l2_critical(N), rel_tol=1e-13):
        raise ParamsError("p equals the L2-critical exponent; no normalized rescaling exists")
    grid = RadialGrid(N, args.R_max, args.n)
    gs = unit_ground_state(N, p, grid)
    # resample u on a grid matched to its own length scale 1/sqrt(λ)
    lam = scaling_lambda(gs, args.mu, args.a)
    sol = normalized_scalar(gs, args.mu, args.a, RadialGrid(N, args.R_max / math.sqrt(lam), args.n))
    result = {
        "N": N,
        "p": p,
        "mu": args.mu,
        "a": args.a,
        "w0": gs.center,
        "C_Np": gs.C_Np,
        "lambda": sol.lam,
        "energy": sol.energy,
        "level": scalar_level(gs, args.mu, args.a),
        "pohozaev_defect": gs.pohozaev_defect(),
    }
    out = out_dir(args)
    record.outputs.append(write_profile(out / "scalar_w.csv", grid, {"w": gs.w}))
    record.outputs.append(write_profile(out / "scalar_u.csv", sol.u.grid, {"u": sol.u}))
    record.outputs.append(dump_json(out / "scalar.json", result))
    return result


def cmd_system(args, record: RunRecord):
    params, config, raw = load_config(args.config)
    if args.seed is not None:
        config = SolverConfig.from_dict({**config.to_dict(), "seed": args.seed})
    record.params = params.to_dict()
    record.config_hash = git_blob_hash(raw)
    res = solve(params, config)
    out = out_dir(args)
    summary = res.summary()
    summary["solver"] = config.to_dict()
    record.outputs.append(write_profile(out / "profile.csv", res.pair.grid, {"u": res.pair.u, "v": res.pair.v}))
    record.outputs.append(dump_json(out / "result.json", summary))
    failed = [k for k, ok in res.checks.items() if not ok]
    if not res.converged:
        failed.append("converged")
    record.failed_checks = failed
    return summary


def cmd_fiber(args, record: RunRecord):
    params, config, raw = load_config(args.config)
    record.params = params.to_dict()
    record.config_hash = git_blob_hash(raw)
    if args.profile:
        _, cols = read_profile(args.profile, params.N)
        pair = StatePair(cols["u"], cols["v"])
    else:
        pair = initial_pair(params, config)
    s, phi, dphi = fib.fiber_profile(pair, params, (args.s_min, args.s_max), args.samples)
    report = fib.locate_critical_points(pair, params)
    out = out_dir(args)
    path = out / "fiber.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "phi", "dphi"])
        for row in zip(s, phi, dphi):
            w.writerow([format(float(x), ".17g") for x in row])
    record.outputs.append(path)
    data = {"regime": derive_regime(params).regime.value, **report.to_dict()}
    record.outputs.append(dump_json(out / "fiber.json", data))
    if report.classification is fib.Classification.DEGENERATE:
        record.failed_checks = ["fiber_nondegenerate"]
    return data


def cmd_hfun(args, record: RunRecord):
    params, _, raw = load_config(args.config)
    record.params = params.to_dict()
    record.config_hash = git_blob_hash(raw)
    C = gn_constants(params, RadialGrid(params.N))
    th = compute_thresholds(params, C)
    coeffs = landscape.h_coeffs(params, th)
    rep = landscape.analyze(coeffs)
    lo, hi = rep.window if rep.window != (0.0, 0.0) else (1e-6, 1e3)
    t = np.geomspace(lo, hi, args.samples)
    out = out_dir(args)
    path = out / "hfun.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "h"])
        for row in zip(t, coeffs.value(t)):
            w.writerow([format(float(x), ".17g") for x in row])
    record.outputs.append(path)
    data = {
        "regime": derive_regime(params).regime.value,
        "D1": th.D1,
        "D2": th.D2,
        "D3": th.D3,
        "T": th.T,
        "gn_constants": list(C),
        **rep.to_dict(),
    }
    record.outputs.append(dump_json(out / "hfun.json", data))
    if not rep.structure_ok:
        record.failed_checks = ["structure_ok"]
    return data


def cmd_sweep(args, record: RunRecord):
    params, config, raw = load_config(args.config)
    record.params = params.to_dict()
    record.config_hash = git_blob_hash(raw)
    try:
        values = [float(x) for x in args.grid.split(",") if x.strip()]
    except ValueError:
        raise ParamsError(f"--grid must be comma-separated numbers, got {args.grid!r}") from None
    if not values:
        raise ParamsError("--grid is empty")
    table = sweep(params, args.axis, values, config, workers=args.workers)
    out = out_dir(args)
    path = out / f"sweep_{args.axis}.csv"
    cols = ["value", "energy", "lambda1", "lambda2", "pohozaev_residual", "gradient_residual", "marginal_u", "marginal_v", "ok", "error"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in table.rows:
            vals = [getattr(row, c) for c in cols]
            w.writerow([format(v, ".17g") if isinstance(v, float) else ("" if v is None else v) for v in vals])
    record.outputs.append(path)
    failed = [f"point {row.value:g}" for row in table.rows if not row.ok]
    if args.axis == "beta" and not table.energies_monotone:
        failed.append("energies_monotone")
    if args.axis == "mass_scale" and not table.marginals_decreasing:
        failed.append("marginals_decreasing")
    record.failed_checks = failed
    return {"axis": args.axis, "rows": [row.__dict__ for row in table.rows], "energies_monotone": table.energies_monotone}


def verify_files(profile_path, result_path) -> dict:
    """Recompute every functional from the stored profile and re-run the checks."""
    stored = json.loads(Path(result_path).read_text())
    params = ProblemParams.from_dict({k: float(v) for k, v in stored["params"].items()})
    solver = stored.get("solver") or {}
    tol_P = float(solver.get("tol_P", SolverConfig.tol_P))
    _, cols = read_profile(profile_path, params.N)
    pair = StatePair(cols["u"], cols["v"])
    fm = fib.FiberMap.of(pair, params)
    rep = fib.analyze_fiber(fm)
    energy = float(fm.phi(0.0))
    p_res = abs(float(fm.dphi(0.0))) / fm.integrals.K if fm.integrals.K > 0 else math.inf
    lam1, lam2 = extract_multipliers(pair, params)
    m1, m2 = marginal_levels(params, RadialGrid(params.N))
    regime = derive_regime(params).regime
    u, v = pair.u.values[:-1], pair.v.values[:-1]
    if regime is Regime.MIXED:
        fiber_ok = rep.classification is fib.Classification.PLUS_MINUS and abs(rep.s_minus) < 1e-3
        sign_ok = energy < 0
    else:
        fiber_ok = rep.classification is fib.Classification.UNIQUE_MAX and abs(rep.t_max) < 1e-3
        sign_ok = energy > 0
    checks = {
        "mass": math.isclose(pair.u.mass(), params.a1, rel_tol=VERIFY_RTOL)
        and math.isclose(pair.v.mass(), params.a2, rel_tol=VERIFY_RTOL),
        "positivity": bool(np.all(u >= 0) and np.all(v >= 0) and u.max() > 0 and v.max() > 0),
        "multiplier_signs": bool(lam1 > 0 and lam2 > 0),
        "energy_sign": bool(sign_ok),
        "energy_ordering": bool(energy < min(m1, m2)),
        "pohozaev": bool(p_res < tol_P),
        "fiber_class": bool(fiber_ok),
        "stored_energy": math.isclose(energy, float(stored["energy"]), rel_tol=VERIFY_RTOL),
    }
    return {
        "energy": energy,
        "lambda1": lam1,
        "lambda2": lam2,
        "pohozaev_residual": p_res,
        "marginals": [m1, m2],
        "checks": checks,
    }


def cmd_verify(args, record: RunRecord):
    base = Path(args.dir) if args.dir else None
    profile = Path(args.profile) if args.profile else base / "profile.csv"
    result = Path(args.result) if args.result else base / "result.json"
    for path in (profile, result):
        if not path.exists():
            raise ParamsError(f"missing file {path}")
    report = verify_files(profile, result)
    record.failed_checks = [k for k, ok in report["checks"].items() if not ok]
    return report


# ---------------------------------------------------------------- dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="normground", description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=".", help="output directory (NORMGROUND_OUT overrides)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scalar", help="scalar ground state and its normalized rescaling")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--R-max", dest="R_max", type=float, default=40.0)
    sp.add_argument("--n", type=int, default=4096)

    sp = sub.add_parser("system", help="normalized ground state of the coupled system")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("fiber", help="fiber map samples and critical points")
    sp.add_argument("--config", required=True)
    sp.add_argument("--profile", help="profile CSV with u and v columns (default: initial Gaussians)")
    sp.add_argument("--s-min", type=float, default=-10.0)
    sp.add_argument("--s-max", type=float, default=10.0)
    sp.add_argument("--samples", type=int, default=401)

    sp = sub.add_parser("hfun", help="landscape h(t) samples and structure report")
    sp.add_argument("--config", required=True)
    sp.add_argument("--samples", type=int, default=2001)

    sp = sub.add_parser("sweep", help="solve along a parameter axis")
    sp.add_argument("--config", required=True)
    sp.add_argument("--axis", choices=("beta", "mass_scale"), required=True)
    sp.add_argument("--grid", required=True, help="comma-separated values")
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("verify", help="re-check stored solver output")
    sp.add_argument("--dir", help="directory holding profile.csv and result.json")
    sp.add_argument("--profile")
    sp.add_argument("--result")
    return parser


COMMANDS = {
    "scalar": cmd_scalar,
    "system": cmd_system,
    "fiber": cmd_fiber,
    "hfun": cmd_hfun,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify" and not (args.dir or (args.profile and args.result)):
        parser.error("verify needs --dir or both --profile and --result")
    record = RunRecord(args.command)
    start = time.perf_counter()
    try:
        result = COMMANDS[args.command](args, record)
    except ParamsError as exc:
        print(json.dumps({"subcommand": args.command, "error": str(exc)}), file=sys.stdout)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, fib.FiberError, landscape.LandscapeError) as exc:
        print(json.dumps({"subcommand": args.command, "error": str(exc)}), file=sys.stdout)
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    record.wall_time = time.perf_counter() - start
    record.passed = not record.failed_checks
    if args.command not in ("verify",):
        dump_json(out_dir(args) / f"run_{args.command}.json", record.to_dict())
    print(json.dumps(encode({"run": record.to_dict(), "result": result}), indent=2, sort_keys=True))
    return EXIT_OK if record.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
