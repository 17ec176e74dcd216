"""Scenario runner: parse a JSON config, run engines, compare, emit CSV + report.

Subcommands
    potential  tabulate the geometric potential and the transformed f, V
    transform  tabulate y(x) and its inverse round trip
    evolve     run the requested engines and compare snapshots
    spectrum   tabulate eigenvalues (and modes, behind --dump-basis)
    susy       partner potentials from a sampled superpotential

Exit codes: 0 success, 2 configuration error, 3 engine failure.  The
FICKJACOBS_OUT environment variable overrides the output directory.
"""

import argparse
import json
import os
import sys

import numpy as np
from scipy.interpolate import CubicSpline

from . import analytic, fdsolver, geometry, mapping, spectral
from .errors import ConfigError, FickJacobsError

SCHEMA_VERSION = 1
ENGINE_NAMES = ("analytic", "spectral", "numeric")
ENGINE_LETTERS = {"a": "analytic", "s": "spectral", "n": "numeric"}
ENV_OUT = "FICKJACOBS_OUT"
SPECTRAL_TAIL_GUARD = 1e-12

_TOP_KEYS = {
    "schema", "name", "profile", "diffusion", "initial", "domain",
    "grid_points", "dt", "t_final", "snapshots", "engines", "bc", "x0",
    "mass_normalize", "n_modes", "n_modes_cap", "degenerate_wall_flux", "susy",
}


def _fmt(v):
    return f"{v:.17g}"


def _require(raw, key, kind=None):
    if key not in raw:
        raise ConfigError(f"missing required field '{key}'")
    val = raw[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"field '{key}' has the wrong type")
    return val


def _check_keys(raw, allowed, context):
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {context} field(s): {', '.join(sorted(unknown))}")


def build_profile(raw):
    _require(raw, "family", str)
    family = raw["family"]
    try:
        if family == "conical":
            _check_keys(raw, {"family", "slope"}, "profile")
            return geometry.ConicalProfile(_require(raw, "slope", (int, float)))
        if family == "throat":
            _check_keys(raw, {"family", "rate", "offset"}, "profile")
            return geometry.ThroatProfile(
                _require(raw, "rate", (int, float)), raw.get("offset", 0.0)
            )
        if family == "sinusoidal":
            _check_keys(raw, {"family", "amplitude", "wavenumber", "cell"}, "profile")
            return geometry.SinusoidalProfile(
                _require(raw, "amplitude", (int, float)),
                _require(raw, "wavenumber", (int, float)),
                raw.get("cell", 0),
            )
        if family == "gaussian_area":
            _check_keys(raw, {"family", "curvature", "tilt", "log_scale"}, "profile")
            return geometry.GaussianAreaProfile(
                _require(raw, "curvature", (int, float)),
                raw.get("tilt", 0.0),
                raw.get("log_scale", 0.0),
            )
        if family == "tabulated":
            _check_keys(raw, {"family", "x", "area"}, "profile")
            return geometry.TabulatedProfile(_require(raw, "x", list), _require(raw, "area", list))
    except ConfigError:
        raise
    except (ValueError, FickJacobsError) as exc:
        raise ConfigError(f"profile: {exc}") from exc
    raise ConfigError(f"unknown profile family '{family}'")


def build_diffusion(raw):
    _require(raw, "kind", str)
    kind = raw["kind"]
    try:
        if kind == "constant":
            _check_keys(raw, {"kind", "d0"}, "diffusion")
            return geometry.ConstantDiffusion(_require(raw, "d0", (int, float)))
        if kind == "reguera_rubi":
            _check_keys(raw, {"kind", "d0"}, "diffusion")
            return geometry.RegueraRubiDiffusion(_require(raw, "d0", (int, float)))
        if kind == "tabulated":
            _check_keys(raw, {"kind", "x", "values"}, "diffusion")
            return geometry.TabulatedDiffusion(
                _require(raw, "x", list), _require(raw, "values", list)
            )
    except ConfigError:
        raise
    except (ValueError, FickJacobsError) as exc:
        raise ConfigError(f"diffusion: {exc}") from exc
    raise ConfigError(f"unknown diffusion kind '{kind}'")


def build_initial(raw):
    _require(raw, "kind", str)
    kind = raw["kind"]
    try:
        if kind == "gaussian":
            _check_keys(raw, {"kind", "sigma", "center", "prefactor"}, "initial")
            return "gaussian", analytic.GaussianInit(
                _require(raw, "sigma", (int, float)),
                raw.get("center", 0.0),
                raw.get("prefactor", analytic.PREFACTOR_EVOLVED),
            )
        if kind == "eigenmode":
            _check_keys(raw, {"kind", "level", "curvature"}, "initial")
            return "eigenmode", analytic.EigenmodeInit(
                _require(raw, "level", int), _require(raw, "curvature", (int, float))
            )
        if kind == "stationary":
            _check_keys(raw, {"kind"}, "initial")
            return "stationary", None
        if kind == "tabulated":
            _check_keys(raw, {"kind", "x", "values"}, "initial")
            x = np.asarray(_require(raw, "x", list), dtype=float)
            v = np.asarray(_require(raw, "values", list), dtype=float)
            if x.ndim != 1 or x.shape != v.shape or x.size < 4:
                raise ConfigError("initial: tabulated data needs matching arrays (>= 4 points)")
            return "tabulated", (x, v)
    except ConfigError:
        raise
    except (ValueError, FickJacobsError) as exc:
        raise ConfigError(f"initial: {exc}") from exc
    raise ConfigError(f"unknown initial kind '{kind}'")


class ScenarioConfig:
    """Validated scenario: geometry, diffusion, grids and engine selection."""

    def __init__(self, raw, needs_evolution=False):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        _check_keys(raw, _TOP_KEYS, "config")
        if _require(raw, "schema", int) != SCHEMA_VERSION:
            raise ConfigError(f"schema must be {SCHEMA_VERSION}")
        self.name = raw.get("name", "scenario")
        self.profile = build_profile(_require(raw, "profile", dict))
        self.model = build_diffusion(_require(raw, "diffusion", dict))
        domain = _require(raw, "domain", list)
        if len(domain) != 2 or not all(isinstance(v, (int, float)) for v in domain):
            raise ConfigError("domain must be [x_lo, x_hi]")
        self.x_lo, self.x_hi = float(domain[0]), float(domain[1])
        if not self.x_hi > self.x_lo:
            raise ConfigError("domain: x_hi must exceed x_lo")
        lo, hi = self.profile.domain
        span = self.x_hi - self.x_lo
        if self.x_lo < lo - 1e-12 * span or self.x_hi > hi + 1e-12 * span:
            raise ConfigError("domain: truncation must lie inside the profile domain")
        self.grid_points = _require(raw, "grid_points", int)
        if self.grid_points < 6:
            raise ConfigError("grid_points must be at least 6")
        if "x0" in raw:
            self.x0 = float(raw["x0"])
            if not (self.x_lo <= self.x0 <= self.x_hi):
                raise ConfigError("x0 must lie inside the domain")
        else:
            self.x0 = 0.0 if self.x_lo < 0.0 < self.x_hi else 0.5 * (self.x_lo + self.x_hi)
        self.mass_normalize = bool(raw.get("mass_normalize", True))
        self.n_modes = raw.get("n_modes")
        self.n_modes_cap = int(raw.get("n_modes_cap", spectral.DEFAULT_MODE_CAP))
        self.bc_name = raw.get("bc", "no_flux")
        try:
            self.bc = fdsolver.BoundaryCondition(self.bc_name)
        except ValueError:
            raise ConfigError(f"unknown bc '{self.bc_name}'") from None
        self.degenerate_wall_flux = raw.get("degenerate_wall_flux", "fitted")
        if self.degenerate_wall_flux not in ("fitted", "reference"):
            raise ConfigError("degenerate_wall_flux must be 'fitted' or 'reference'")
        self.susy = raw.get("susy")

        self.initial_kind = None
        self.initial = None
        self.dt = None
        self.t_final = None
        self.snapshots = None
        self.engines = None
        if needs_evolution:
            self.initial_kind, self.initial = build_initial(_require(raw, "initial", dict))
            self.dt = float(_require(raw, "dt", (int, float)))
            if self.dt <= 0:
                raise ConfigError("dt must be positive")
            self.t_final = float(_require(raw, "t_final", (int, float)))
            if self.t_final < 0:
                raise ConfigError("t_final must be non-negative")
            snaps = _require(raw, "snapshots", list)
            if not snaps:
                raise ConfigError("snapshots must list at least one time")
            if any(ts > self.t_final + self.dt / 2 or ts < 0 for ts in snaps):
                raise ConfigError("snapshots must satisfy 0 <= t <= t_final")
            self.snapshots = [float(ts) for ts in snaps]
            engines = _require(raw, "engines", list)
            self.set_engines(engines)

    def set_engines(self, engines):
        resolved = []
        for e in engines:
            e = ENGINE_LETTERS.get(e, e)
            if e not in ENGINE_NAMES:
                raise ConfigError(f"unknown engine '{e}'")
            if e not in resolved:
                resolved.append(e)
        if not resolved:
            raise ConfigError("at least one engine is required")
        self.engines = resolved

    @property
    def x_grid(self):
        return np.linspace(self.x_lo, self.x_hi, self.grid_points)


def load_config(path, needs_evolution=False):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return ScenarioConfig(raw, needs_evolution=needs_evolution)


def analytic_solution(cfg):
    """Closed-form C(x, t) for the scenario, or None when not available."""
    prof, model = cfg.profile, cfg.model
    if model.kind != "constant":
        return None
    d0 = model.d0
    if cfg.initial_kind == "gaussian":
        init = cfg.initial
        if prof.family == "conical":
            return lambda x, t: analytic.conical_solution(prof.slope, d0, init, x, t)
        if prof.family == "throat":
            return lambda x, t: analytic.throat_solution(prof.rate, prof.offset, d0, init, x, t)
        if prof.family == "sinusoidal":
            return lambda x, t: analytic.sinusoidal_solution(
                prof.amplitude, prof.wavenumber, d0, init, x, t
            )
        return None
    if cfg.initial_kind == "eigenmode" and prof.family == "gaussian_area":
        init = cfg.initial
        if init.curvature != prof.curvature:
            raise ConfigError("initial: eigenmode curvature must match the profile")
        return lambda x, t: analytic.gaussian_channel_solution(
            prof.curvature, prof.tilt, d0, init, x, t
        )
    if cfg.initial_kind == "stationary":
        field, flag = analytic.stationary_profile(
            prof, model, cfg.x_lo, cfg.x_hi, cfg.grid_points, cfg.x0
        )
        cfg._stationary_flag = flag

        def fn(x, t, _vals=field.values, _x=field.x_grid):
            return np.interp(np.asarray(x, dtype=float), _x, _vals)

        return fn
    return None


def initial_field(cfg, solution):
    x = cfg.x_grid
    if cfg.initial_kind == "tabulated":
        tx, tv = cfg.initial
        span = tx[-1] - tx[0]
        if x[0] < tx[0] - 1e-12 * span or x[-1] > tx[-1] + 1e-12 * span:
            raise ConfigError("initial: tabulated data does not cover the domain")
        vals = CubicSpline(tx, tv)(np.clip(x, tx[0], tx[-1]))
        return fdsolver.ConcentrationField(x, vals, 0.0)
    if cfg.initial_kind == "stationary":
        field, flag = analytic.stationary_profile(
            cfg.profile, cfg.model, cfg.x_lo, cfg.x_hi, cfg.grid_points, cfg.x0
        )
        cfg._stationary_flag = flag
        return field
    if solution is None:
        raise ConfigError(
            f"initial '{cfg.initial_kind}' has no closed form for this profile/diffusion"
        )
    return fdsolver.ConcentrationField(x, np.asarray(solution(x, 0.0), dtype=float), 0.0)


def run_analytic_engine(cfg, solution):
    if solution is None:
        raise ConfigError("analytic engine: no closed form for this scenario")
    x = cfg.x_grid
    return [
        fdsolver.ConcentrationField(x, np.asarray(solution(x, ts), dtype=float), ts)
        for ts in cfg.snapshots
    ]


def run_numeric_engine(cfg, c0, solution, meta):
    reference = None
    if cfg.bc is fdsolver.BoundaryCondition.DIRICHLET_ANALYTIC or (
        cfg.degenerate_wall_flux == "reference"
    ):
        if solution is None:
            raise ConfigError("bc: reference boundary data needs a closed-form scenario")
        reference = solution
    sc = fdsolver.SolverConfig(
        dt=cfg.dt,
        bc=cfg.bc,
        reference=reference,
        degenerate_flux=cfg.degenerate_wall_flux,
    )
    snaps = fdsolver.evolve(cfg.profile, cfg.model, c0, cfg.t_final, sc, cfg.snapshots)
    meta["numeric"] = {"bc": cfg.bc.value, "dt": cfg.dt, "grid_points": cfg.grid_points}
    return snaps


def run_spectral_engine(cfg, c0, meta):
    smap = mapping.build_schrodinger_map(
        cfg.model, cfg.profile, cfg.x0, cfg.grid_points, cfg.x_lo, cfg.x_hi
    )
    cap = cfg.n_modes or min(cfg.n_modes_cap, cfg.grid_points - 2)
    cap = min(cap, cfg.grid_points - 2)
    basis = spectral.build_basis(smap, cap)
    coeffs = spectral.project_initial(basis, smap, c0)
    phi0 = np.exp(-smap.f) * np.interp(smap.x_of_y, c0.x_grid, c0.values)
    tails = np.abs(phi0[:5]).sum() + np.abs(phi0[-5:]).sum()
    total = np.abs(phi0).sum()
    if total > 0 and tails / total > SPECTRAL_TAIL_GUARD:
        raise ConfigError(
            "spectral truncation: initial condition has non-negligible mass at the "
            f"domain boundary (tail fraction {tails / total:.2e} > {SPECTRAL_TAIL_GUARD:g}); "
            "widen the domain"
        )
    if cfg.n_modes is None:
        n_use = spectral.choose_n_modes(coeffs, cap=cap)
    else:
        n_use = cap
    meta["spectral"] = {
        "n_modes": int(n_use),
        "parseval_tail": float(np.sum(coeffs[n_use:] ** 2)),
        "grid_points": cfg.grid_points,
    }
    x = cfg.x_grid
    return [
        spectral.propagate(basis, smap, coeffs[:n_use], ts, x_eval=x) for ts in cfg.snapshots
    ], smap, basis


def run(cfg, out_dir=None, quiet=True, split_snapshots=False, dump_basis=False):
    """Execute the scenario, write CSV snapshots and return the report dict."""
    solution = analytic_solution(cfg)
    c0 = initial_field(cfg, solution)
    meta = {
        "profile": cfg.profile.meta(),
        "diffusion": cfg.model.meta(),
        "domain": [cfg.x_lo, cfg.x_hi],
        "grid_points": cfg.grid_points,
        "x0": cfg.x0,
        "mass_normalize": cfg.mass_normalize,
    }
    if hasattr(cfg, "_stationary_flag"):
        meta["stationary_valid"] = bool(cfg._stationary_flag)

    results = {}
    basis = None
    for engine in cfg.engines:
        if engine == "analytic":
            results[engine] = run_analytic_engine(cfg, solution)
        elif engine == "numeric":
            results[engine] = run_numeric_engine(cfg, c0, solution, meta)
        else:
            results[engine], smap, basis = run_spectral_engine(cfg, c0, meta)

    report = {
        "scenario": cfg.name,
        "engines": list(cfg.engines),
        "snapshots": [float(ts) for ts in cfg.snapshots],
        "mass": {
            eng: [fdsolver.total_mass(f) for f in fields] for eng, fields in results.items()
        },
        "metadata": meta,
    }
    if len(cfg.engines) >= 2:
        norms = []
        for i, ea in enumerate(cfg.engines):
            for eb in cfg.engines[i + 1:]:
                for k, ts in enumerate(cfg.snapshots):
                    l2, linf, drift = fdsolver.error_norms(
                        results[ea][k], results[eb][k], mass_normalize=cfg.mass_normalize
                    )
                    norms.append(
                        {
                            "pair": f"{ea}/{eb}",
                            "time": float(ts),
                            "l2": l2,
                            "linf": linf,
                            "mass_drift": drift,
                        }
                    )
        report["norms"] = norms

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for eng, fields in results.items():
            if split_snapshots:
                for k, f in enumerate(fields):
                    fdsolver.write_snapshot_csv(
                        f, os.path.join(out_dir, f"{cfg.name}_{eng}_s{k}.csv")
                    )
            else:
                fdsolver.write_snapshot_csv(
                    fields, os.path.join(out_dir, f"{cfg.name}_{eng}.csv")
                )
        if dump_basis and basis is not None:
            _write_basis_csv(basis, os.path.join(out_dir, f"{cfg.name}_basis.csv"))
        with open(os.path.join(out_dir, f"{cfg.name}_report.json"), "w", newline="") as fh:
            json.dump(report, fh, sort_keys=True, indent=2)
            fh.write("\n")
    if not quiet:
        for entry in report.get("norms", []):
            print(
                f"{entry['pair']} t={entry['time']:g}: "
                f"L2={entry['l2']:.3e} Linf={entry['linf']:.3e}"
            )
    return report


def _write_basis_csv(basis, path):
    header = "y," + ",".join(f"psi_{k}" for k in range(basis.n_modes))
    lines = [header]
    for i, yv in enumerate(basis.y_grid):
        lines.append(",".join([_fmt(yv)] + [_fmt(basis.modes[k, i]) for k in range(basis.n_modes)]))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _resolve_out(args):
    return os.environ.get(ENV_OUT) or args.out


def cmd_potential(cfg, args):
    smap = mapping.build_schrodinger_map(
        cfg.model, cfg.profile, cfg.x0, cfg.grid_points, cfg.x_lo, cfg.x_hi
    )
    vx = geometry.entropic_potential(cfg.profile, smap.x_of_y)
    out = _resolve_out(args)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{cfg.name}_potential.csv")
    lines = ["x,V_x,y,f,V_y"]
    for row in zip(smap.x_of_y, vx, smap.y_grid, smap.f, smap.V):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    if not args.quiet:
        print(path)
    return 0


def cmd_transform(cfg, args):
    x = cfg.x_grid
    y = mapping.transform_coordinate(cfg.model, cfg.profile, x, cfg.x0)
    smap = mapping.build_schrodinger_map(
        cfg.model, cfg.profile, cfg.x0, cfg.grid_points, cfg.x_lo, cfg.x_hi
    )
    back = mapping.invert_coordinate(smap, y)
    out = _resolve_out(args)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{cfg.name}_transform.csv")
    lines = ["x,y,x_roundtrip"]
    for row in zip(x, y, back):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    if not args.quiet:
        print(path)
    return 0


def cmd_evolve(cfg, args):
    report = run(
        cfg,
        out_dir=_resolve_out(args),
        quiet=args.quiet,
        split_snapshots=args.split_snapshots,
        dump_basis=args.dump_basis,
    )
    return 0 if report else 3


def cmd_spectrum(cfg, args):
    smap = mapping.build_schrodinger_map(
        cfg.model, cfg.profile, cfg.x0, cfg.grid_points, cfg.x_lo, cfg.x_hi
    )
    n_modes = cfg.n_modes or 8
    basis = spectral.build_basis(smap, min(n_modes, cfg.grid_points - 2))
    out = _resolve_out(args)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{cfg.name}_spectrum.csv")
    lines = ["n,E"]
    for k, e in enumerate(basis.energies):
        lines.append(f"{k},{_fmt(e)}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    if args.dump_basis:
        _write_basis_csv(basis, os.path.join(out, f"{cfg.name}_basis.csv"))
    if not args.quiet:
        print(path)
    return 0


def _load_susy_samples(section):
    if not isinstance(section, dict):
        raise ConfigError("susy section must be an object")
    _check_keys(section, {"w_file", "x", "w", "energy_scale"}, "susy")
    scale = section.get("energy_scale", 1.0)
    if "w_file" in section:
        try:
            data = np.loadtxt(section["w_file"], delimiter=",", comments="#", skiprows=_count_header(section["w_file"]))
        except OSError as exc:
            raise ConfigError(f"susy: cannot read w_file: {exc}") from exc
        if data.ndim != 2 or data.shape[1] < 2:
            raise ConfigError("susy: w_file must have two columns x,w")
        return data[:, 0], data[:, 1], scale
    if "x" in section and "w" in section:
        return (
            np.asarray(section["x"], dtype=float),
            np.asarray(section["w"], dtype=float),
            scale,
        )
    raise ConfigError("susy: supply either w_file or inline x and w arrays")


def _count_header(path):
    with open(path) as fh:
        first = fh.readline()
    token = first.split(",")[0].strip()
    try:
        float(token)
        return 0
    except ValueError:
        return 1


def cmd_susy(raw_cfg, args):
    if not isinstance(raw_cfg, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw_cfg, {"schema", "name", "susy"}, "config")
    if _require(raw_cfg, "schema", int) != SCHEMA_VERSION:
        raise ConfigError(f"schema must be {SCHEMA_VERSION}")
    name = raw_cfg.get("name", "scenario")
    x, w, scale = _load_susy_samples(_require(raw_cfg, "susy", dict))
    try:
        pair = mapping.susy_partner_potentials(x, w, scale)
    except (ValueError, FickJacobsError) as exc:
        raise ConfigError(f"susy: {exc}") from exc
    out = _resolve_out(args)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{name}_susy.csv")
    lines = ["x,W,V_plus,V_minus"]
    for row in zip(pair.x, w, pair.v_plus, pair.v_minus):
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    if not args.quiet:
        print(path)
    return 0


def _parser():
    p = argparse.ArgumentParser(prog="fickjacobs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("potential", "transform", "evolve", "spectrum", "susy"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--engines", default=None, help="comma list: a,s,n or full names")
        sp.add_argument("--quiet", action="store_true")
        sp.add_argument("--split-snapshots", action="store_true")
        sp.add_argument("--dump-basis", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "susy":
            try:
                with open(args.config) as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config is not valid JSON: {exc}") from exc
            return cmd_susy(raw, args)
        cfg = load_config(args.config, needs_evolution=args.command == "evolve")
        if args.engines and args.command == "evolve":
            cfg.set_engines(args.engines.split(","))
        handler = {
            "potential": cmd_potential,
            "transform": cmd_transform,
            "evolve": cmd_evolve,
            "spectrum": cmd_spectrum,
        }[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FickJacobsError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
