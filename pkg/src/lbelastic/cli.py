"""Command-line front end: ``solve``, ``converge``, ``stability-map`` and ``error-map``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import error_constants, error_estimates
from .config import ConfigError, parse_config
from .engine import InstabilityError, Simulation, run_to_steady_state
from .lattice import Grid, write_field_csv
from .material import InvalidParameterError, MaterialParams
from .stability import stability_map
from .verification import (StudyAborted, convergence_study, get_case, relative_errors,
                           setup_run)

OUTPUT_ENV = "LBELASTIC_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
EXIT_NOT_CONVERGED = 4

#: default material per scheme variant for ``converge``
VARIANT_DEFAULTS = {"standard": (0.8, 0.11), "corrected": (0.8, 0.085), "fourth-order": (0.8, 0.11)}

log = logging.getLogger("lbelastic")


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def _out_dir(arg: str | None, cfg_dir: str | None = None) -> Path:
    d = Path(arg or cfg_dir or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_table(path: Path, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _pair(text: str, name: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must look like 'lo,hi', got {text!r}") from None
    return a, b


def _resolution(text: str) -> tuple[int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"resolution must be 'N' or 'Nnu,NE', got {text!r}")
    return parts[0], parts[1]


def _common_header(args) -> list[str]:
    return [f"lbelastic {__version__}", f"command: {' '.join(sys.argv[1:]) or args.command}",
            f"seed: {args.seed}", f"threads: {args.threads}"]


# solve

def cmd_solve(args) -> int:
    cfg = parse_config(args.config)
    out = _out_dir(args.out, cfg.output.dir)
    mat = cfg.material_params()
    m, c, r = cfg.material, cfg.case, cfg.run
    case = None if c.id == "none" else get_case(c.id)
    if case is None:
        sim = Simulation(Grid(cfg.grid.nx, cfg.grid.ny, cfg.eps), cfg.relaxation_set())
    else:
        sim = setup_run(case, mat, cfg.eps, c.variant, m.theta, L=cfg.L, U=m.U,
                        tau_12=m.tau_12, tau_22=m.tau_22, form=c.form)

    monitor = None
    if case is not None:
        def monitor(n, fields):
            l2u, _, l2s, _ = relative_errors(fields, case, sim.grid, mat, U=m.U)
            return l2u, l2s

    t_final = r.t_final if r.mode == "fixed-horizon" else None
    want_log = args.residual_log or cfg.output.residual_log
    header = cfg.header_lines({"seed": args.seed, "threads": args.threads})
    try:
        res = run_to_steady_state(sim, tol=r.tol, max_steps=r.max_steps, t_final=t_final,
                                  check_interval=r.check_interval,
                                  residual_interval=1, record_interval=r.log_interval,
                                  monitor=monitor if want_log else None,
                                  monitor_interval=r.log_interval)
    except InstabilityError as exc:
        return _fail("instability", str(exc), EXIT_UNSTABLE, step=exc.step)

    fields_fmt = args.fields or cfg.output.fields
    if fields_fmt == "csv":
        kappa = m.kappa if m.kappa is not None else 1.0
        phys = res.fields.physical(U=m.U, L=cfg.L, T=cfg.T, kappa=kappa)
        write_field_csv(out / "fields.csv", sim.grid, np.stack([phys.ux, phys.uy, phys.sxx, phys.syy, phys.sxy]),
                        ["ux", "uy", "sxx", "syy", "sxy"], header)
    if want_log:
        errs = {row[0]: row[1:] for row in res.monitor_history}
        cols = ["step", "residual"] + (["l2_err_u", "l2_err_sigma"] if case is not None else [])
        rows = []
        for step, resid in res.residual_history:
            rows.append([step, resid] + (list(errs.get(step, (float("nan"),) * 2)) if case is not None else []))
        _write_table(out / "residual.csv", header, cols, rows)

    summary = {"steps": res.steps, "converged": res.converged,
               "residual": res.residual_history[-1][1] if res.residual_history else None}
    if case is not None:
        summary["errors"] = dict(zip(("l2_u", "linf_u", "l2_sigma", "linf_sigma"),
                                     relative_errors(res.fields, case, sim.grid, mat, U=m.U)))
    print(json.dumps(summary))
    if not res.converged:
        return _fail("not_converged", f"no convergence within {res.steps} steps", EXIT_NOT_CONVERGED,
                     steps=res.steps)
    return EXIT_OK


# converge

def cmd_converge(args) -> int:
    if args.config:
        cfg = parse_config(args.config)
        nu, E = cfg.material.nu, cfg.E_tilde
        theta = cfg.material.theta
    else:
        nu, E = VARIANT_DEFAULTS[args.variant]
        theta = 1.0 / 3.0
    nu = args.nu if args.nu is not None else nu
    E = args.E_tilde if args.E_tilde is not None else E
    mat = MaterialParams(E, nu)
    eps_list = [1.0 / float(v) if float(v) >= 1 else float(v) for v in args.eps_list.split(",")]
    case = get_case(args.case)
    try:
        res = convergence_study(case, mat, args.variant, eps_list, t_final=args.t_final,
                                theta=theta, form=args.form)
    except StudyAborted as exc:
        return _fail("instability", str(exc), EXIT_UNSTABLE, eps=exc.eps)
    header = _common_header(args) + [
        f"case: {case.name}", f"variant: {args.variant}", f"form: {args.form}",
        f"nu: {nu!r}", f"E_tilde: {E!r}", f"theta: {theta!r}",
        f"t_final: {args.t_final!r}", f"periodic: {case.periodic}",
        f"boundary_mismatch: {case.boundary_mismatch()!r}"]
    cols = ["eps", "l2_u", "linf_u", "l2_sigma", "linf_sigma"]
    rows = [[r.eps, r.l2_u, r.linf_u, r.l2_sigma, r.linf_sigma] for r in res.records]
    sl = res.slopes()
    rows.append(["slope"] + [sl[c] for c in cols[1:]])
    path = Path(args.out) if args.out else _out_dir(None) / "convergence.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_table(path, header, cols, rows)
    print(json.dumps({"slopes": sl, "out": str(path)}))
    return EXIT_OK


# stability-map

def _axis(lo, hi, n, scale):
    return np.geomspace(lo, hi, n) if scale == "log" else np.linspace(lo, hi, n)


def cmd_stability_map(args) -> int:
    n_nu, n_E = args.resolution
    nus = _axis(*args.nu_range, n_nu, "lin")
    Es = _axis(*args.E_range, n_E, args.E_scale)
    sm = stability_map(nus, Es, theta=args.theta, n_k=args.nk, n_phi=args.nphi, mode=args.mode)
    header = _common_header(args) + [
        f"nk: {args.nk}", f"nphi: {args.nphi}", f"theta: {args.theta!r}",
        f"equilibrium_mode: {args.mode}", f"tol_rho: {sm.tol!r}"]
    path = Path(args.out) if args.out else _out_dir(None) / "stability_map.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_table(path, header, ["nu", "E_tilde", "worst_rho", "stable"],
                 ([nu, E, rho, int(st)] for nu, E, rho, st in sm.rows()))
    print(json.dumps({"points": int(sm.stable.size), "unstable": int((~sm.stable).sum()),
                      "out": str(path)}))
    return EXIT_OK


# error-map

def cmd_error_map(args) -> int:
    n_nu, n_E = args.resolution
    nus = _axis(*args.nu_range, n_nu, "lin")
    Es = _axis(*args.E_range, n_E, args.E_scale)
    rows = []
    for nu in nus:
        for E in Es:
            ec = error_constants(E, nu, args.theta, form=args.form)
            R1, R2 = error_estimates(ec)
            rows.append([float(nu), float(E), *map(float, ec.as_array()), R1, R2])
    header = _common_header(args) + [f"theta: {args.theta!r}", f"form: {args.form}"]
    path = Path(args.out) if args.out else _out_dir(None) / "error_map.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["nu", "E_tilde", "C1", "C2", "C3", "C4", "C5", "D1", "D2", "D3", "R1", "R2"]
    _write_table(path, header, cols, rows)
    print(json.dumps({"points": len(rows), "out": str(path)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lbelastic", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("--seed", type=int, default=None,
                   help="recorded in output headers; nothing in the solver is random")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one simulation to steady state")
    s.add_argument("config", help="YAML config, or an output file whose header holds one")
    s.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or .)")
    s.add_argument("--fields", choices=("csv", "none"), default=None)
    s.add_argument("--residual-log", action="store_true")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("converge", help="grid convergence study on a manufactured solution")
    c.add_argument("--config", help="YAML config supplying the material block")
    c.add_argument("--case", choices=("trig", "separable", "gaussian"), default="trig")
    c.add_argument("--variant", choices=("standard", "corrected", "fourth-order"), default="standard")
    c.add_argument("--eps-list", default="20,40,60,80,100",
                   help="comma list of eps values or node counts (values >= 1 mean 1/n)")
    c.add_argument("--nu", type=float, default=None)
    c.add_argument("--E-tilde", type=float, default=None)
    c.add_argument("--t-final", type=float, default=None,
                   help="pseudo-time horizon (default: slowest mode decayed by 1e-10)")
    c.add_argument("--form", choices=("literal", "consistent"), default="consistent")
    c.add_argument("--out", help="output CSV path")
    c.set_defaults(func=cmd_converge)

    for name, func, help_ in (("stability-map", cmd_stability_map, "spectral-radius scan over (nu, E_tilde)"),
                              ("error-map", cmd_error_map, "error constants and R1/R2 over (nu, E_tilde)")):
        m = sub.add_parser(name, help=help_)
        m.add_argument("--nu-range", type=lambda t: _pair(t, "--nu-range"), default=(-0.9, 0.9))
        m.add_argument("--E-range", type=lambda t: _pair(t, "--E-range"), default=(0.01, 0.5))
        m.add_argument("--E-scale", choices=("lin", "log"), default="lin")
        m.add_argument("--resolution", type=_resolution, default=(19, 50))
        m.add_argument("--theta", type=float, default=1.0 / 3.0)
        m.add_argument("--out", help="output CSV path")
        if name == "stability-map":
            m.add_argument("--nk", type=int, default=50)
            m.add_argument("--nphi", type=int, default=5)
            m.add_argument("--mode", choices=("collision", "literal"), default="collision",
                           help="equilibrium matrix used in the linearisation")
        else:
            m.add_argument("--form", choices=("literal", "consistent"), default="literal")
        m.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        if args.threads < 1:
            return _fail("config", "--threads must be positive", EXIT_CONFIG)
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_CONFIG, key=exc.key)
    except (InvalidParameterError, ValueError, KeyError) as exc:
        return _fail("invalid_parameter", str(exc), EXIT_CONFIG)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
