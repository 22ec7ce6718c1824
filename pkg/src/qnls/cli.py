"""Command-line front end: ``qnls <command> [options]``.

Options can come from a JSON run configuration (``--config``) and from flags;
flags win.  Exit codes: 0 success, 1 hypothesis or certification failure,
2 configuration or parse error, 3 solver divergence.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import functionals as fn
from .concentration import (ConcentrationProfile, cutoff_Cdelta, estimate_S, half_concentration_rescale,
                            localized_sobolev_check, scalar_sobolev_constant, zeta_from_sobolev)
from .evolution import EvolutionConfig, evolve, gaussian_data
from .ground_state import DivergenceError, ScalingError, petviashvili
from .nonlinearity import ConfigError, ParseError, check_structure, system_from_dict
from .radial import DEFAULT_M, DEFAULT_RMAX, DecayWarning, RadialField, RadialGrid
from .reporting import dumps, write_json
from .virial import Thresholds, classify, confirm, monitor_T

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

TOP_KEYS = {"system", "grid", "groundstate", "evolve", "classify", "concentrate", "gn_constant", "check",
            "out", "seed"}
TASK_BLOCKS = {"groundstate", "evolve", "classify", "concentrate", "gn_constant", "check"}
ALLOWED_BLOCKS = {"check": {"check"}, "groundstate": {"groundstate"}, "evolve": {"evolve", "groundstate"},
                  "classify": {"classify", "groundstate", "evolve"}, "concentrate": {"concentrate", "groundstate"},
                  "gn_constant": {"gn_constant", "groundstate"}}
SWEEP_KEYS = {"kappa": "system", "omega": "system", "scale": "task"}


@dataclass
class RunConfig:
    command: str
    system: dict
    grid: dict
    task: dict
    out: Path | None = None
    seed: int = 0
    gs: dict = field(default_factory=dict)

    def make_system(self):
        return system_from_dict(self.system, n=self.grid.get("n", 3))

    def make_grid(self, n: int | None = None, prefix: str = "") -> RadialGrid:
        g = self.grid
        return RadialGrid(int(n if n is not None else g.get("n", 3)),
                          int(g.get(prefix + "M", g.get("M", DEFAULT_M))),
                          float(g.get(prefix + "r_max", g.get("r_max", DEFAULT_RMAX))))


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser) -> None:
    s = p.add_argument_group("system")
    s.add_argument("--config", help="JSON run configuration")
    s.add_argument("--spec", help="JSON system description file")
    s.add_argument("--builtin", help="shg3 | thg | kappa | scalar-cubic")
    s.add_argument("--kappa", type=float)
    s.add_argument("--F", dest="F", help="interaction polynomial, e.g. 'conj(z1)^2*z2'")
    s.add_argument("--l", type=int, help="number of components for --F")
    s.add_argument("--alpha")
    s.add_argument("--gamma")
    s.add_argument("--beta")
    s.add_argument("--omega", type=float)
    s.add_argument("--sigma")
    g = p.add_argument_group("grid")
    g.add_argument("--n", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--out", help="output directory (or file for check)")
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep", help="parameter sweep, e.g. kappa=0.25,0.5,1 or scale=0.5,1.1")
    p.add_argument("--workers", type=int, default=4)


def _gs_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("ground state")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--theta", type=float)
    g.add_argument("--critical-tol", dest="critical_tol", type=float)
    g.add_argument("--cert-tol", dest="cert_tol", type=float)


def _evolve_opts(p: argparse.ArgumentParser) -> None:
    e = p.add_argument_group("evolution")
    e.add_argument("--dt", type=float)
    e.add_argument("--T", dest="T", type=float)
    e.add_argument("--record-every", dest="record_every", type=int)
    e.add_argument("--substeps", dest="nonlinear_substeps", type=int)
    e.add_argument("--blowup-factor", dest="blowup_factor", type=float)
    e.add_argument("--energy-tol", dest="energy_step_tol", type=float)
    e.add_argument("--max-halvings", dest="max_halvings", type=int)
    e.add_argument("--tail-tol", dest="tail_tol", type=float)
    e.add_argument("--evolve-M", dest="evolve_M", type=int, help="grid size for the evolution")
    e.add_argument("--evolve-r-max", dest="evolve_r_max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="structural hypotheses, sigma, mass resonance, gauge")
    _common(p)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("groundstate", help="compute and certify a ground state")
    _common(p)
    _gs_opts(p)

    p = sub.add_parser("evolve", help="time evolution with diagnostics")
    _common(p)
    _gs_opts(p)
    _evolve_opts(p)
    p.add_argument("--init", choices=["groundstate", "gaussian"])
    p.add_argument("--scale", type=float, help="initial data = scale * ground state")
    p.add_argument("--amplitudes", help="gaussian amplitudes per component")
    p.add_argument("--width", type=float)
    p.add_argument("--chirp", type=float)
    p.add_argument("--input", help="binary snapshot to evolve")

    p = sub.add_parser("classify", help="a priori blow-up / global criteria for scale * ground state")
    _common(p)
    _gs_opts(p)
    _evolve_opts(p)
    p.add_argument("--scale", type=float)
    p.add_argument("--confirm", action="store_true", default=None, help="run an evolution to compare")

    p = sub.add_parser("concentrate", help="concentration profile, rescaling and localized Sobolev checks")
    _common(p)
    _gs_opts(p)
    p.add_argument("--scale", type=float)
    p.add_argument("--input", help="binary snapshot instead of a ground state")
    p.add_argument("--delta", type=float)
    p.add_argument("--inner-radius", dest="inner_radius", type=float)

    p = sub.add_parser("gn-constant", help="sharp Gagliardo-Nirenberg constant from a ground state")
    _common(p)
    _gs_opts(p)
    p.add_argument("--trials", type=int, help="random fields compared against the constant")
    return parser


SYSTEM_FLAGS = ("builtin", "kappa", "F", "l", "alpha", "gamma", "beta", "omega", "sigma")
LIST_FLAGS = ("alpha", "gamma", "beta", "sigma")
GRID_FLAGS = ("n", "M", "r_max", "evolve_M", "evolve_r_max")
COMMON = set(SYSTEM_FLAGS) | set(GRID_FLAGS) | {"config", "spec", "out", "seed", "sweep", "workers", "command"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        unknown = set(cfg) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    task_key = args.command.replace("-", "_")
    stray = (set(cfg) & TASK_BLOCKS) - ALLOWED_BLOCKS[task_key]
    if stray:
        raise ConfigError(f"configuration block(s) {', '.join(sorted(stray))} do not match command {args.command!r}")

    system = dict(cfg.get("system", {}))
    if args.spec:
        path = Path(args.spec)
        if not path.is_file():
            raise ConfigError(f"system file not found: {path}")
        try:
            system = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    flags = {k: getattr(args, k) for k in SYSTEM_FLAGS if getattr(args, k, None) is not None}
    for k in LIST_FLAGS:
        if k in flags:
            flags[k] = _floats(flags[k])
    if "builtin" in flags or "F" in flags:
        system = {k: v for k, v in system.items() if k in ("n",)}
    system.update(flags)
    if not system:
        raise ConfigError("no system given: use --builtin, --F, --spec or a config file")

    grid = dict(cfg.get("grid", {}))
    for k in GRID_FLAGS:
        v = getattr(args, k, None)
        if v is not None:
            grid[k] = v
    if "n" in system and "n" not in grid:
        grid["n"] = system["n"]

    task = dict(cfg.get(task_key, {}))
    gs = dict(cfg.get("groundstate", {})) if task_key != "groundstate" else {}
    evolve_cfg = dict(cfg.get("evolve", {})) if task_key == "classify" else {}
    for k, v in vars(args).items():
        if k not in COMMON and v is not None:
            task[k] = v
    for k, v in evolve_cfg.items():
        task.setdefault(k, v)
    out = args.out if args.out is not None else cfg.get("out")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    return RunConfig(args.command, system, grid, task, Path(out) if out else None, int(seed), gs)


# commands

GS_KEYS = ("tol", "max_iter", "theta", "critical_tol")
EVOLVE_KEYS = ("dt", "T", "record_every", "nonlinear_substeps", "blowup_factor", "energy_step_tol",
               "max_halvings", "tail_tol")


def _gs_kwargs(cfg: RunConfig) -> dict:
    opts = {**cfg.gs, **cfg.task}
    return {k: opts[k] for k in GS_KEYS if k in opts}


def _solve_gs(cfg: RunConfig, nl, params, grid=None):
    grid = grid or cfg.make_grid(params.n)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DecayWarning)
        res = petviashvili(grid, params, nl, **_gs_kwargs(cfg))
    for w in caught:
        res.flags.append(str(w.message))
    return res


def _evolve_config(cfg: RunConfig) -> EvolutionConfig:
    return EvolutionConfig(**{k: cfg.task[k] for k in EVOLVE_KEYS if k in cfg.task})


def _out_dir(cfg: RunConfig) -> Path | None:
    if cfg.out is None:
        return None
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def cmd_check(cfg: RunConfig):
    nl, params = cfg.make_system()
    if getattr(nl, "poly", None) is None:
        raise ConfigError(f"{nl.name} is not given by a polynomial F; check applies to polynomial systems")
    rep = check_structure(nl.poly, sigma=cfg.system.get("sigma"), alpha=params.alpha, gamma=params.gamma,
                          samples=int(cfg.task.get("samples", 1000)), seed=cfg.seed)
    out = {"system": nl.name, "F": nl.poly.pretty(), "alpha": list(params.alpha), "gamma": list(params.gamma),
           "masses": [float(m) for m in params.masses], **rep.to_dict()}
    if cfg.out is not None:
        target = cfg.out if cfg.out.suffix == ".json" else cfg.out / "check.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        write_json(target, out)
    return (EXIT_OK if rep.ok else EXIT_FAIL), out


def cmd_groundstate(cfg: RunConfig):
    nl, params = cfg.make_system()
    res = _solve_gs(cfg, nl, params)
    cert = res.certify(tol=float(cfg.task.get("cert_tol", 1e-4)))
    consts = res.constants()
    out = {"system": nl.name, "n": res.grid.n, "M": res.grid.M, "r_max": res.grid.r_max,
           "iterations": res.iterations, "residual": res.residual, "flags": res.flags,
           "identities": cert.to_dict(), "constants": consts}
    d = _out_dir(cfg)
    if d is not None:
        res.profile.to_csv(d / "profile.csv")
        res.profile.to_binary(d / "profile.bin")
        write_json(d / "identities.json", cert.to_dict())
        write_json(d / "constants.json", consts)
        write_json(d / "stabilizer.json", {"history": res.history})
    return (EXIT_OK if cert.passed else EXIT_FAIL), out


def _initial_data(cfg: RunConfig, nl, params, grid):
    """Initial field on ``grid`` and the parameters to evolve with."""
    t = cfg.task
    if t.get("input"):
        f = RadialField.from_binary(t["input"])
        if f.grid.n != params.n:
            raise ConfigError("snapshot dimension differs from the system dimension")
        if f.grid != grid:
            f = RadialField(grid, f.grid.resample(f.data, grid.r))
        return f, params, None
    if t.get("init", "groundstate") == "gaussian" and "scale" not in t:
        amps = _floats(t["amplitudes"]) if "amplitudes" in t else [1.0] * params.l
        if len(amps) != params.l:
            raise ConfigError(f"need {params.l} amplitudes")
        return gaussian_data(grid, amps, float(t.get("width", 1.0)), float(t.get("chirp", 0.0))), params, None
    gs = _solve_gs(cfg, nl, params)
    data = gs.profile.data if gs.grid == grid else gs.grid.resample(gs.profile.data, grid.r)
    return RadialField(grid, float(t.get("scale", 1.0)) * data), gs.params, gs


def _evolve_grid(cfg: RunConfig, n: int) -> RadialGrid:
    return cfg.make_grid(n, prefix="evolve_")


def cmd_evolve(cfg: RunConfig):
    nl, params = cfg.make_system()
    grid = _evolve_grid(cfg, params.n)
    u0, params, _ = _initial_data(cfg, nl, params, grid)
    res = evolve(u0, params, nl, _evolve_config(cfg))
    out = {"system": nl.name, **res.summary(), "Q_drift": res.drift("Q"), "E_drift": res.drift("E"),
           "K_max_over_K0": float(np.max(res.column("K")) / res.records[0].K) if res.records[0].K else None,
           "T_monitor": monitor_T(res.records).to_dict()}
    d = _out_dir(cfg)
    if d is not None:
        res.write_csv(d / "diagnostics.csv")
        res.final.to_binary(d / "final.bin")
        write_json(d / "summary.json", out)
    return EXIT_OK, out


def cmd_classify(cfg: RunConfig):
    nl, params = cfg.make_system()
    if params.n not in (4, 5, 6):
        raise ConfigError(f"classification covers n in {{4, 5, 6}}, got n={params.n}")
    gs = _solve_gs(cfg, nl, params)
    th = Thresholds.from_ground_state(gs.profile, gs.params, nl)
    scale = float(cfg.task.get("scale", 1.0))
    u0 = gs.profile * scale
    rep = classify(u0, gs.params, nl, th)
    if cfg.task.get("confirm"):
        grid = _evolve_grid(cfg, params.n)
        v0 = u0 if grid == gs.grid else RadialField(grid, gs.grid.resample(u0.data, grid.r))
        run = evolve(v0, gs.params, nl, _evolve_config(cfg))
        confirm(rep, run)
        K = run.column("K")
        rep.details["K_max_over_K0"] = float(np.max(K) / K[0])
        rep.details["K_monotone"] = bool(np.all(np.diff(K) > 0))
        rep.details["T_monitor"] = monitor_T(run.records).to_dict()
        d = _out_dir(cfg)
        if d is not None:
            run.write_csv(d / "diagnostics.csv")
    out = {"system": nl.name, "scale": scale, **rep.to_dict()}
    d = _out_dir(cfg)
    if d is not None:
        write_json(d / "classification.json", out)
    return EXIT_OK, out


def cmd_concentrate(cfg: RunConfig):
    nl, params = cfg.make_system()
    t = cfg.task
    grid = cfg.make_grid(params.n)
    gs = None
    if t.get("input"):
        field_, p = RadialField.from_binary(t["input"]), params
    else:
        gs = _solve_gs(cfg, nl, params, grid)
        field_, p = gs.profile * float(t.get("scale", 1.0)), gs.params
    prof = ConcentrationProfile(field_, nl)
    out = {"system": nl.name, "n": field_.grid.n, "P_abs": prof.total, "Q_terminal": float(prof(field_.grid.r_max)),
           "monotone": bool(np.all(np.diff(prof.cum) >= 0)), "radially_monotone": prof.radially_monotone,
           "centre": "origin"}
    if field_.grid.n == 6:
        resc = half_concentration_rescale(field_, nl)
        again = half_concentration_rescale(resc.rescaled, nl)
        out["rescaling"] = {**resc.to_dict(), "idempotence_R": again.R_m,
                            "K_ratio": fn.kinetic(resc.rescaled, p) / fn.kinetic(field_ * resc.amplitude, p),
                            "P_ratio": fn.potential(resc.rescaled, nl) / fn.potential(field_ * resc.amplitude, nl)}
        C = scalar_sobolev_constant()
        zeta = zeta_from_sobolev(C)
        if gs is not None:
            S = estimate_S(p, nl, gs.profile)
            out["S"] = S.to_dict()
            delta = float(t.get("delta", 3.0))
            r_in = float(t.get("inner_radius", 1.0))
            Cd = cutoff_Cdelta(delta, zeta)
            ls = localized_sobolev_check(field_, p, nl, r_in, r_in / Cd, delta, S.S, zeta)
            out["localized_sobolev"] = ls.to_dict()
        out["sobolev_constant"] = C
        out["zeta"] = zeta
    d = _out_dir(cfg)
    if d is not None:
        prof.to_csv(d / "concentration.csv")
        write_json(d / "concentration.json", out)
    return EXIT_OK, out


def cmd_gn_constant(cfg: RunConfig):
    nl, params = cfg.make_system()
    gs = _solve_gs(cfg, nl, params)
    consts = gs.constants()
    out = {"system": nl.name, "n": gs.grid.n, **consts}
    trials = int(cfg.task.get("trials", 0))
    if trials:
        rng = np.random.default_rng(cfg.seed)
        g = gs.grid
        worst = -np.inf
        for _ in range(trials):
            data = random_smooth_field(g, params.l, rng)
            try:
                q = fn.gn_quotient(RadialField(g, data), gs.params, nl)
            except ValueError:
                continue
            worst = max(worst, q / consts["sharp_constant"])
        out["trials"] = trials
        out["max_trial_ratio"] = float(worst)
    d = _out_dir(cfg)
    if d is not None:
        write_json(d / "constants.json", out)
    return EXIT_OK, out


def random_smooth_field(grid: RadialGrid, l: int, rng: np.random.Generator, terms: int = 3) -> np.ndarray:
    """Sums of positive Gaussians with random widths and centres, one row per component."""
    out = np.zeros((l, grid.M))
    for k in range(l):
        for _ in range(terms):
            a = rng.uniform(0.2, 2.0)
            w = rng.uniform(0.5, 3.0)
            c = rng.uniform(0.0, 3.0)
            out[k] += a * np.exp(-((grid.r - c) / w) ** 2)
    return out


COMMANDS = {"check": cmd_check, "groundstate": cmd_groundstate, "evolve": cmd_evolve,
            "classify": cmd_classify, "concentrate": cmd_concentrate, "gn-constant": cmd_gn_constant}


def run(cfg: RunConfig):
    """Run one command; returns (exit code, report)."""
    try:
        return COMMANDS[cfg.command](cfg)
    except DivergenceError as exc:
        report = {"error": str(exc), "stabilizer_history": exc.history}
        if cfg.out is not None:
            cfg.out.mkdir(parents=True, exist_ok=True)
            write_json(cfg.out / "divergence.json", report)
        return EXIT_DIVERGED, report


def _parse_sweep(text: str):
    if "=" not in text:
        raise ConfigError("sweep must look like name=v1,v2,...")
    key, vals = text.split("=", 1)
    key = key.strip()
    if key not in SWEEP_KEYS:
        raise ConfigError(f"cannot sweep {key!r}; choose one of {', '.join(sorted(SWEEP_KEYS))}")
    return key, _floats(vals)


def _sweep(cfg: RunConfig, key: str, values, workers: int):
    def one(v):
        system, task = dict(cfg.system), dict(cfg.task)
        (system if SWEEP_KEYS[key] == "system" else task)[key] = v
        out = cfg.out / f"{key}={v:g}" if cfg.out is not None else None
        sub = RunConfig(cfg.command, system, dict(cfg.grid), task, out, cfg.seed, dict(cfg.gs))
        try:
            code, rep = run(sub)
        except (ConfigError, ValueError, ScalingError) as exc:
            code, rep = EXIT_CONFIG, {"error": str(exc)}
        return {"value": v, "exit": code, "report": rep}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(one, values))
    return max(r["exit"] for r in results), {"sweep": key, "runs": results}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.sweep:
            key, values = _parse_sweep(args.sweep)
            code, report = _sweep(cfg, key, values, args.workers)
        else:
            code, report = run(cfg)
    except ParseError as exc:
        print(f"parse error: {exc}\n{exc.caret()}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ScalingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(dumps(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
