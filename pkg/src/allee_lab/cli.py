"""Command-line entry point: ``allee-lab {simulate,sweep,stationary,oracle,verify}``.

Exit status 0 on success, 1 when ``verify`` finds violations, 2 on invalid
input and 3 when an integration fails.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import os
import sys

from . import __version__, diagnostics, oracles, stationary
from .config import ConfigError, build_allee, build_grid, build_model, build_sim, load_config, section
from .discretization import BlowupError, write_field_csv
from .integrator import StiffnessError, read_trajectory, simulate, write_trajectory
from .model import NoAllee, ValidationError, validate_model
from .sweep import SweepSpec, default_axes, run_sweep

EXIT_OK, EXIT_VIOLATION, EXIT_INVALID, EXIT_INTEGRATION = 0, 1, 2, 3


class _Log:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str):
        if not self.quiet:
            print(msg, file=sys.stderr)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config: dict, files: list) -> str:
    """``manifest.json`` listing every emitted file with its digest."""
    entries = [{"path": os.path.relpath(p, out_dir), "sha256": _sha256(p), "bytes": os.path.getsize(p)}
               for p in files]
    manifest = {
        "tool": "allee_lab",
        "version": __version__,
        "command": command,
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config,
        "seeds": None,
        "files": entries,
    }
    path = os.path.join(out_dir, "manifest.json")
    _dump(path, manifest)
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    log = _Log(args.quiet)
    cfg = load_config(args.config)
    model = build_model(cfg)
    sim = build_sim(cfg)
    if model.initial is None:
        raise ConfigError("simulate needs an initial.* section")
    validate_model(model, sim.grid).raise_if_failed()

    traj = simulate(model, sim)
    out = _out_dir(args)
    files = write_trajectory(out, traj)

    report = {"stop_reason": traj.stop_reason, "step_stats": traj.step_stats}
    if isinstance(model.allee, NoAllee):
        report["classification"] = None
    else:
        report["classification"] = diagnostics.classify(traj.final, model.eps_eff).as_dict()
        report["eps_eff"] = model.eps_eff
    report["residuals"] = diagnostics.mass_balance_residual(traj, model) if len(traj.samples) >= 3 else None
    report["envelope"] = diagnostics.envelope_check(traj, model)
    report["invariants"] = diagnostics.check_invariants(traj, model, atol=sim.atol)
    path = os.path.join(out, "diagnostics.json")
    _dump(path, report)
    files.append(path)
    write_manifest(out, "simulate", cfg, files)
    label = report["classification"]["label"] if report["classification"] else "n/a"
    log(f"simulate: t={traj.final.t:g}, peak={traj.final.peak:.6g}, label={label}, "
        f"{len(files)} files in {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    log = _Log(args.quiet)
    cfg = load_config(args.config)
    model = build_model(cfg)
    sim = build_sim(cfg)
    validate_model(model).raise_if_failed()
    d = section(cfg, "sweep")
    H_def, L_def = default_axes()
    H = d.get("H", H_def)
    L = d.get("L", L_def)
    H = H if isinstance(H, list) else [H]
    L = L if isinstance(L, list) else [L]
    workers = args.workers if args.workers is not None else int(d.get("workers", 1))
    try:
        spec = SweepSpec(model, H, L, sim, workers=workers, early_stop=bool(d.get("early_stop", True)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    log(f"sweep: {len(spec.H_values)}x{len(spec.L_values)} cells on {workers} worker(s)")
    diagram = run_sweep(spec)
    out = _out_dir(args)
    jpath = os.path.join(out, "phase_diagram.json")
    cpath = os.path.join(out, "phase_diagram.csv")
    diagram.write_json(jpath)
    diagram.write_csv(cpath)
    write_manifest(out, "sweep", cfg, [jpath, cpath])
    for i, h in enumerate(diagram.h_axis):
        log(f"  H={h:<8.4g} {diagram.row_string(i)}  {diagram.scenarios[i]}")
    return EXIT_OK


def cmd_stationary(args) -> int:
    log = _Log(args.quiet)
    cfg = load_config(args.config)
    d = section(cfg, "stationary")
    if "r" not in d:
        raise ConfigError("missing stationary.r")
    r = float(d["r"])
    allee = build_allee(section(cfg, "allee"))
    grid = build_grid(cfg)
    lam1, lam2 = stationary.find_stationary_pair(r, allee)
    out = _out_dir(args)
    files, profiles = [], {}
    for k, lam in ((1, lam1), (2, lam2)):
        prof = stationary.build_profile(lam, r, allee, grid)
        path = os.path.join(out, f"profile_{k}.csv")
        write_field_csv(path, prof.field)
        files.append(path)
        profiles[f"lambda_{k}"] = {"lambda": lam, "alpha": prof.alpha, "theta0": prof.theta0,
                                   "mass": prof.mass, **stationary.residual_pde(prof, r, allee)}
    report = {"r": r, "lambda_1": lam1, "lambda_2": lam2, "profiles": profiles,
              "admissibility": stationary.admissibility_report(r, allee)}
    path = os.path.join(out, "stationary.json")
    _dump(path, report)
    files.append(path)
    write_manifest(out, "stationary", cfg, files)
    print(f"lambda_1={lam1!r}")
    print(f"lambda_2={lam2!r}")
    log(f"stationary: profiles written to {out}")
    return EXIT_OK


_ORACLES = {
    # name: (arg names, function returning {label: value})
    "gaussian": (("r_max", "alpha"), lambda a, b: {
        "lambda": oracles.gaussian_ground_state(a, b).lam, "p0": oracles.gaussian_ground_state(a, b).peak}),
    "peak": (("r_max", "alpha"), lambda a, b: {"peak": oracles.peak_height(a, b)}),
    "optimal-alpha": (("r_max",), lambda a: {"alpha": oracles.optimal_alpha(a)}),
    "logistic": (("rho0", "r_max", "t"), lambda a, b, c: {"rho": float(oracles.logistic_mass(a, b, c))}),
    "lower-mass": (("rho0", "K", "t"), lambda a, b, c: {"rho": float(oracles.lower_mass(a, b, c))}),
    "ubar": (("M", "r_max", "K", "rho0", "t"),
             lambda *x: {"ubar": float(oracles.envelope_ubar(*x))}),
    "tstar": (("r_max", "K", "rho0"), lambda *x: {"tstar": oracles.tstar(*x)}),
    "ubar-min": (("M", "r_max", "K", "rho0"), lambda *x: {"ubar_min": oracles.ubar_min(*x)}),
    "extinction-test": (("u0_sup", "u0_mass", "r_max", "K", "eps"),
                        lambda *x: {"sufficient": diagnostics.extinction_sufficient(*x)}),
}


def cmd_oracle(args) -> int:
    if args.name not in _ORACLES:
        raise ConfigError(f"unknown oracle {args.name!r}; choose from {', '.join(_ORACLES)}")
    names, fn = _ORACLES[args.name]
    if len(args.values) != len(names):
        raise ConfigError(f"oracle {args.name} takes {len(names)} values: {' '.join(names)}")
    try:
        values = [float(v) for v in args.values]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for key, val in fn(*values).items():
        print(f"{key}={val!r}")
    return EXIT_OK


def cmd_verify(args) -> int:
    log = _Log(args.quiet)
    cfg = load_config(args.config)
    model = build_model(cfg)
    sim = build_sim(cfg)
    traj = read_trajectory(args.trajectory)
    report = {"invariants": diagnostics.check_invariants(traj, model, atol=sim.atol),
              "envelope": diagnostics.envelope_check(traj, model)}
    ok = report["invariants"]["ok"] and report["envelope"]["ok"]
    report["ok"] = ok
    if args.out:
        out = _out_dir(args)
        path = os.path.join(out, "verify.json")
        _dump(path, report)
        write_manifest(out, "verify", cfg, [path])
    else:
        print(json.dumps(_jsonable(report), indent=1, sort_keys=True))
    log(f"verify: {'ok' if ok else 'VIOLATIONS'}")
    return EXIT_OK if ok else EXIT_VIOLATION


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", metavar="N", type=int, default=None, help="sweep worker processes")
    common.add_argument("--quiet", action="store_true", help="no progress messages on stderr")

    p = argparse.ArgumentParser(prog="allee-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("simulate", cmd_simulate, "run one trajectory"),
                               ("sweep", cmd_sweep, "(H, L) phase diagram"),
                               ("stationary", cmd_stationary, "stationary pair for constant fitness")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.set_defaults(func=fn, needs_config=True)
    sp = sub.add_parser("oracle", parents=[common], help="print a closed-form reference value")
    sp.add_argument("name", help=", ".join(_ORACLES))
    sp.add_argument("values", nargs="*")
    sp.set_defaults(func=cmd_oracle, needs_config=False)
    sp = sub.add_parser("verify", parents=[common], help="invariant suite on a written trajectory")
    sp.add_argument("trajectory", metavar="TRAJ_DIR")
    sp.set_defaults(func=cmd_verify, needs_config=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_config and not args.config:
        print(f"{args.command}: --config is required", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (BlowupError, StiffnessError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
