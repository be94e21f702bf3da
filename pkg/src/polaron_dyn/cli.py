"""Command-line interface: ``polaron-dyn <command> [options]``.

Every command writes a CSV whose leading ``#`` lines echo the resolved
configuration in TOML form, so ``--config`` on the stripped echo reproduces the
run. Settings are resolved as built-in defaults < ``--config`` file < flags.
Exit status: 0 success, 2 domain error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import decoherence as deco
from .bathcorr import correlator
from .calibration import calibrate, write_conventions
from .config import RunConfig, load_config
from .model import DomainError, validate
from .nonmarkov import coherence_l1, nonmarkov_sweep
from .oracle import evolve_exact
from .propagate import (DEFAULT_PLUS_PARITY, Engine, QubitState, evolve,
                        evolve_tcl_ode, population_difference)

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3

COMMANDS = ("dynamics", "decoherence", "nonmarkov-sweep", "steady-state", "correlator",
            "oracle-compare", "conventions")


def fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "nan" if math.isnan(v) else format(v, ".17g")


def write_csv(out, cfg: RunConfig, columns, rows, notes=()):
    buf = io.StringIO()
    buf.write(f"# polaron-dyn {__version__}\n")
    for line in cfg.to_toml().splitlines():
        buf.write(f"# {line}".rstrip() + "\n")
    for note in notes:
        buf.write(f"# note: {note}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if out in ("-", "", None):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
    return text


def parse_state(spec: str) -> QubitState:
    spec = spec.strip().lower()
    named = {"ground": QubitState.ground, "0": QubitState.ground,
             "excited": QubitState.excited, "1": QubitState.excited,
             "plus": QubitState.plus, "+": QubitState.plus,
             "mixed": QubitState.maximally_mixed}
    if spec in named:
        return named[spec]()
    if spec.startswith("phi:"):
        return QubitState.coherent(float(spec[4:]))
    raise DomainError(f"unknown initial state {spec!r} (ground, excited, plus, mixed, phi:<angle>)")


def resolve_convention(cfg: RunConfig):
    if str(cfg.kappa).lower() == "auto":
        cal = calibrate()
        return cal.kappa, cal.plus_parity
    try:
        kappa = int(cfg.kappa)
    except ValueError:
        raise DomainError(f"kappa must be 1, 2 or auto, got {cfg.kappa!r}") from None
    if kappa not in (1, 2):
        raise DomainError(f"kappa must be 1, 2 or auto, got {cfg.kappa!r}")
    return kappa, DEFAULT_PLUS_PARITY


def engine_kwargs(cfg: RunConfig, engine: Engine) -> dict:
    if engine is Engine.CLOSED_FORM:
        kappa, parity = resolve_convention(cfg)
        return {"kappa": kappa, "plus_parity": parity}
    if engine is Engine.TCL_ODE:
        return {"step_control": (cfg.rtol, cfg.atol), "include_hs": cfg.include_hs}
    if engine is Engine.EXACT_DIAG:
        return {"n_max": cfg.n_max,
                "picture": "schrodinger" if cfg.include_hs else "interaction"}
    return {}


def svg_path(cfg: RunConfig):
    if not cfg.svg:
        return None
    if cfg.out in ("-", "", None):
        raise DomainError("--svg needs --out PATH; the figure is written next to the CSV")
    return str(Path(cfg.out).with_suffix(".svg"))


def _plot(cfg, *args, **kw):
    path = svg_path(cfg)
    if path:
        from .plotting import line_figure
        line_figure(path, *args, **kw)


def cmd_dynamics(cfg: RunConfig):
    params = cfg.params
    engine = Engine(cfg.engine)
    grid = cfg.grid()
    rho0 = parse_state(cfg.initial)
    traj = evolve(engine, rho0, grid, params, **engine_kwargs(cfg, engine))
    notes = []
    try:
        pd = population_difference(traj)
    except DomainError as err:
        pd = np.full(grid.size, np.nan)
        notes.append(str(err))
    rows = zip(grid, traj.rho00, traj.rho01.real, traj.rho01.imag, traj.rho11, pd)
    text = write_csv(cfg.out, cfg, ("t", "rho00", "re_rho01", "im_rho01", "rho11", "P_D"),
                     rows, notes)
    series = {"P_D": pd} if not notes else {}
    series["C_l1"] = 2.0 * np.abs(traj.rho01)
    _plot(cfg, grid * params.omega, series, r"$\omega t$", "value",
          title=f"{engine.value} engine, g={params.g:g}, J={params.J:g}")
    return text


def cmd_decoherence(cfg: RunConfig):
    params = cfg.params
    grid = cfg.grid()
    prof = deco.decoherence_profile(grid, params)
    rows = zip(grid, prof.gamma, prof.gamma_odd, prof.gamma_even, prof.beta_plus, prof.beta_minus)
    notes = [f"series terms = {prof.truncation_n}" + (" (capped)" if prof.capped else "")]
    text = write_csv(cfg.out, cfg, ("t", "gamma", "gamma_odd", "gamma_even", "beta_plus",
                                    "beta_minus"), rows, notes)
    _plot(cfg, grid * params.omega, {"Gamma": prof.gamma, "Gamma_odd": prof.gamma_odd,
                                     "Gamma_even": prof.gamma_even}, r"$\omega t$", "exponent")
    return text


def cmd_nonmarkov_sweep(cfg: RunConfig):
    engine = Engine(cfg.engine)
    gs = cfg.g_values()
    results = nonmarkov_sweep(gs, cfg.params, horizon=cfg.horizon, phase_grid=cfg.n_phases,
                              engine=engine, **engine_kwargs(cfg, engine))
    rows = [(g * cfg.omega, r.n_value, len(r.intervals), r.optimal_phase)
            for g, r in zip(gs, results)]
    text = write_csv(cfg.out, cfg, ("g_omega", "N", "n_intervals", "optimal_phase"), rows)
    _plot(cfg, [r[0] for r in rows], {"N": [r[1] for r in rows]}, r"$g\omega$",
          r"$\mathcal{N}_{C_{l_1}}$", markers=True)
    return text


def cmd_steady_state(cfg: RunConfig):
    kappa, parity = resolve_convention(cfg)
    rows = []
    curves = {}
    for j in cfg.j_values():
        pd_curve = []
        for g in cfg.g_values():
            p = cfg.params.replace(J=j, g=g)
            if g == 0.0 or j == 0.0:
                pd_inf = c_inf = 1.0
                pd_asym = c_asym = None if g == 0.0 else 1.0
            else:
                pd_inf = math.exp(-kappa * deco.gamma_longtime("all", p))
                c_inf = math.exp(-kappa * deco.gamma_longtime(parity, p))
                pd_asym = math.exp(-kappa * deco.gamma_longtime_asymptotic("all", p))
                c_asym = math.exp(-kappa * deco.gamma_longtime_asymptotic("odd_even", p))
            rows.append((g * cfg.omega, j / cfg.omega, pd_inf, c_inf, pd_asym, c_asym))
            pd_curve.append(pd_inf)
        curves[f"J/w={j / cfg.omega:g}"] = pd_curve
    notes = [f"C_inf is the coherence of |+> (parity {parity}), kappa = {kappa}"]
    text = write_csv(cfg.out, cfg, ("g_omega", "J_over_omega", "P_D_inf", "C_inf",
                                    "P_D_asym", "C_asym"), rows, notes)
    _plot(cfg, [g * cfg.omega for g in cfg.g_values()], curves, r"$g\omega$",
          r"$P_D(\infty)$", markers=True)
    return text


def cmd_correlator(cfg: RunConfig):
    grid = cfg.grid()
    value = np.asarray(correlator(cfg.kind, grid, cfg.params).value)
    text = write_csv(cfg.out, cfg, ("dt", "re", "im"), zip(grid, value.real, value.imag))
    _plot(cfg, grid * cfg.omega, {"Re": value.real, "Im": value.imag}, r"$\omega\,dt$",
          f"{cfg.kind} correlator")
    return text


def cmd_oracle_compare(cfg: RunConfig):
    params = cfg.params
    grid = cfg.grid()
    rho0 = parse_state(cfg.initial)
    picture = "schrodinger" if cfg.include_hs else "interaction"
    exact = evolve_exact(rho0, grid, params, n_max=cfg.n_max, picture=picture)
    tcl = evolve_tcl_ode(rho0, grid, params, step_control=(cfg.rtol, cfg.atol),
                         include_hs=cfg.include_hs)
    if coherence_l1(rho0) > 0:
        name = "coherence"
        obs_e, obs_t = 2.0 * np.abs(exact.rho01), 2.0 * np.abs(tcl.rho01)
    else:
        name = "rho00 - rho11"
        obs_e, obs_t = exact.rho00 - exact.rho11, tcl.rho00 - tcl.rho11
    diff = np.abs(obs_e - obs_t)
    notes = [f"observable = {name}", f"n_max = {cfg.n_max}, leakage = {exact.leakage:.3e}"]
    text = write_csv(cfg.out, cfg, ("t", "observable_exact", "observable_tcl", "abs_diff"),
                     zip(grid, obs_e, obs_t, diff), notes)
    _plot(cfg, grid * params.omega, {"exact": obs_e, "TCL": obs_t}, r"$\omega t$", name)
    return text


def cmd_conventions(cfg: RunConfig):
    out = "CONVENTIONS.md" if cfg.out in ("-", "", None) else cfg.out
    cal = write_conventions(out)
    sys.stderr.write(f"kappa = {cal.kappa}, symmetric-channel parity = {cal.plus_parity} -> {out}\n")
    return cal


HANDLERS = {
    "dynamics": cmd_dynamics,
    "decoherence": cmd_decoherence,
    "nonmarkov-sweep": cmd_nonmarkov_sweep,
    "steady-state": cmd_steady_state,
    "correlator": cmd_correlator,
    "oracle-compare": cmd_oracle_compare,
    "conventions": cmd_conventions,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--out", help="output path ('-' for stdout)")
    common.add_argument("--svg", action="store_const", const=True, default=None,
                        help="also write an SVG figure next to the CSV")
    common.add_argument("--engine", choices=[e.value for e in Engine])
    common.add_argument("--J", type=float, dest="J")
    common.add_argument("--omega", type=float)
    common.add_argument("--g", type=float)
    common.add_argument("--beta", help="inverse temperature, or 'inf'")
    common.add_argument("--g-range", dest="g_range", help="A:B:STEP (inclusive) or a comma list")
    common.add_argument("--J-list", dest="j_list", help="comma-separated J values (steady-state)")
    common.add_argument("--tmax", dest="t_max", type=float)
    common.add_argument("--points", dest="n_points", type=int)
    common.add_argument("--horizon", type=float)
    common.add_argument("--phases", dest="n_phases", type=int)
    common.add_argument("--kappa", choices=["1", "2", "auto"])
    common.add_argument("--state", dest="initial",
                        help="initial state: ground, excited, plus, mixed or phi:<angle>")
    common.add_argument("--n-max", dest="n_max", type=int)
    common.add_argument("--include-hs", dest="include_hs", action="store_const", const=True,
                        default=None)
    common.add_argument("--kind", choices=["normal", "anomalous"])
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)

    parser = argparse.ArgumentParser(prog="polaron-dyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.config:
        file_values = load_config(args.config)
        file_values.pop("command", None)
        cfg.update(file_values)
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "command")}
    cfg.update(flags)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command not in ("conventions",):
            report = validate(cfg.params)
            if not report.ok:
                raise DomainError("; ".join(report.errors))
            for w in report.warnings:
                sys.stderr.write(f"warning: {w}\n")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            HANDLERS[args.command](cfg)
    except DomainError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_DOMAIN
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        sys.stderr.write(f"numerical failure: {err}\n")
        return EXIT_NUMERIC
    except (ValueError, OSError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
