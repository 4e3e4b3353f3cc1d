"""Batch front end for the fracture experiments.

Each subcommand resolves a run configuration from builtin defaults, an
optional flat key=value config file, and command-line overrides (later
sources win), executes one experiment, and writes its artifacts plus a
content-hash manifest into the output directory.  Identical
configurations produce byte-identical artifacts.

Exit codes: 0 on success, 1 on solver failures (no convergence, oracle
capacity), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields as dataclass_fields
from typing import Optional

from . import optimizer as opt
from . import report
from .errors import CapacityError, ConfigError, ConvergenceError
from .evolution import LoadProgram, localize, run_evolution, toughening_gap
from .geometry import MicroGeometry
from .lattice import BoundaryCondition, build_lattice, dump_edges


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved parameters of one experiment run."""

    experiment: str
    k: int = 5
    n_per_period: int = 32
    rho: float = 0.05
    delta: Optional[float] = None
    t: float = 0.04
    t_grid: Optional[tuple] = None
    loads: tuple = (0.04, 1.2)
    weights: str = "full"
    cap: int = 10 ** 6
    tol: float = 1e-10
    style: str = "corner"
    y_level: float = 0.0
    workers: Optional[int] = None
    seed: int = 0
    outdir: Optional[str] = None


def _as_int(text):
    return int(str(text), 10)


def _as_float(text):
    return float(text)


def _as_float_tuple(text):
    parts = [p for p in (s.strip() for s in str(text).split(",")) if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _as_choice(*options):
    def convert(text):
        text = str(text).strip()
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text
    return convert


# field name -> (converter, help text)
FIELDS = {
    "k": (_as_int, "periods per side (odd)"),
    "n_per_period": (_as_int, "grid cells per period"),
    "rho": (_as_float, "butterfly half-width for diagnostics"),
    "delta": (_as_float, "clamped boundary fraction"),
    "t": (_as_float, "boundary load"),
    "t_grid": (_as_float_tuple, "comma list of loads for the sweep"),
    "loads": (_as_float_tuple, "comma list of loads for the evolution"),
    "weights": (_as_choice("full", "perforation"), "oracle weighting"),
    "cap": (_as_int, "oracle candidate cap"),
    "tol": (_as_float, "relative solver tolerance"),
    "style": (_as_choice("corner", "axis", "auto"), "zig-zag seed variant"),
    "y_level": (_as_float, "height of the restricted horizontal cut"),
    "workers": (_as_int, "sweep worker threads"),
    "seed": (_as_int, "seed recorded for sampled diagnostics"),
    "outdir": (str, "output directory"),
}

EXPERIMENT_FIELDS = {
    "cell": ("k", "n_per_period", "rho", "y_level", "outdir"),
    "sweep": ("k", "n_per_period", "rho", "t_grid", "delta", "tol",
              "workers", "seed", "outdir"),
    "evolve": ("k", "n_per_period", "rho", "loads", "delta", "tol",
               "style", "seed", "outdir"),
    "localize": ("k", "n_per_period", "rho", "t", "delta", "tol",
                 "style", "outdir"),
    "oracle": ("k", "n_per_period", "t", "delta", "weights", "cap",
               "outdir"),
    "render": ("k", "n_per_period", "rho", "outdir"),
}

# experiment-specific builtin defaults on top of the dataclass ones
EXPERIMENT_DEFAULTS = {
    "oracle": {"k": 1, "n_per_period": 8},
}


def read_config_file(path):
    """Parse a flat key=value file; '#' starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{path}:{lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def resolve_config(experiment, file_values, cli_values):
    """Merge builtin defaults, config file, and CLI flags (CLI wins)."""
    allowed = EXPERIMENT_FIELDS[experiment]
    merged = {}
    for source_name, source in (("config file", file_values),
                                ("command line", cli_values)):
        for key, raw in source.items():
            if key not in allowed:
                raise ConfigError(
                    f"unknown {source_name} key {key!r} for experiment "
                    f"{experiment!r} (allowed: {', '.join(allowed)})")
            convert = FIELDS[key][0]
            try:
                merged[key] = convert(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid value for {key}: {raw!r} ({exc})")
    values = dict(EXPERIMENT_DEFAULTS.get(experiment, {}))
    values.update(merged)
    config = RunConfig(experiment=experiment, **values)
    if config.outdir is None:
        config = RunConfig(**{**_config_dict(config),
                              "outdir": f"out-{experiment}"})
    return config


def _config_dict(config):
    return {f.name: getattr(config, f.name)
            for f in dataclass_fields(RunConfig)}


def _write_config_echo(config, outdir):
    rows = []
    for key, value in sorted(_config_dict(config).items()):
        if key == "outdir":
            continue
        if isinstance(value, tuple):
            value = ",".join(report.format_value(v) for v in value)
        elif value is None:
            value = ""
        rows.append((key, value))
    report.write_csv(os.path.join(outdir, "config.csv"),
                     ("key", "value"), rows)


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------


def _lattice_for(config):
    geom = MicroGeometry(rho=config.rho)
    return build_lattice(geom, config.k, config.n_per_period)


def _delta_for(config, lattice):
    if config.delta is not None:
        return config.delta
    if config.experiment == "oracle":
        return 1.0 - 2.0 * lattice.h
    return 0.25


def _run_cell(config, outdir):
    lattice = _lattice_for(config)
    full_value, full_crack = opt.min_cut_perforation(lattice)
    restricted_value, _ = opt.min_cut_perforation(
        lattice, restrict_horizontal=True, y_level=config.y_level)
    report.write_csv(
        os.path.join(outdir, "cell.csv"),
        ("k", "n_per_period", "h", "min_cut_density",
         "restricted_horizontal_density"),
        [(config.k, config.n_per_period, lattice.h, full_value,
          restricted_value)])
    report.render_crack(lattice, full_crack,
                        os.path.join(outdir, "cell_cut.svg"),
                        title=f"min cut = {full_value:.6f}")
    return ["cell.csv", "cell_cut.svg"]


def _run_sweep(config, outdir):
    lattice = _lattice_for(config)
    delta = _delta_for(config, lattice)
    grid = config.t_grid if config.t_grid is not None else \
        opt.default_t_grid()
    estimates = opt.sweep_density(lattice, grid, delta=delta,
                                  workers=config.workers)
    report.write_csv(
        os.path.join(outdir, "density.csv"),
        ("t", "g_upper", "construction", "bulk_matrix", "bulk_soft",
         "surface"),
        [(e.t, e.g_upper, e.construction, e.bulk_matrix, e.bulk_soft,
          e.surface) for e in estimates])
    t0 = estimates[0].t0_estimate
    report.write_csv(
        os.path.join(outdir, "sweep_summary.csv"),
        ("k", "n_per_period", "delta", "t0_estimate"),
        [(config.k, config.n_per_period, delta, t0)])
    report.render_density(estimates, os.path.join(outdir, "density.svg"))
    return ["density.csv", "sweep_summary.csv", "density.svg"]


def _trace_rows(trace):
    for i, step in enumerate(trace.steps):
        loc = step.localization
        yield (i, step.load, step.energy.bulk_matrix, step.energy.bulk_soft,
               step.energy.surface, step.energy.total, step.g_eff_estimate,
               loc.total_length, step.lengths["matrix"],
               step.lengths["inclusion"], loc.length_in_T,
               loc.length_in_T_and_U, loc.bound_T, loc.bound_TU,
               loc.outside_U_energy, int(step.converged), step.iterations)


def _run_evolve(config, outdir):
    lattice = _lattice_for(config)
    delta = _delta_for(config, lattice)
    program = LoadProgram(steps=config.loads)
    trace = run_evolution(lattice, program, config.rho, delta=delta,
                          tol=config.tol, seed_style=config.style)
    gap = toughening_gap(trace)
    files = []
    report.write_csv(
        os.path.join(outdir, "trace.csv"),
        ("step", "load", "bulk_matrix", "bulk_soft", "surface", "total",
         "g_eff_estimate", "crack_length", "length_matrix",
         "length_inclusion", "length_in_T", "length_in_T_and_U",
         "bound_T", "bound_TU", "outside_U_energy", "converged",
         "iterations"),
        _trace_rows(trace))
    files.append("trace.csv")
    unconstrained = trace.unconstrained_energy
    report.write_csv(
        os.path.join(outdir, "evolution_summary.csv"),
        ("k", "n_per_period", "rho", "eta", "loads",
         "constrained_terminal", "unconstrained_terminal",
         "unconstrained_seed", "toughening_gap", "outside_U_bound",
         "flags"),
        [(config.k, config.n_per_period, trace.rho, trace.eta,
          ",".join(report.format_value(t) for t in trace.loads),
          trace.terminal.energy.total,
          unconstrained.total if unconstrained is not None else "",
          trace.unconstrained_seed or "", gap, trace.outside_U_bound,
          ";".join(trace.flags))])
    files.append("evolution_summary.csv")
    for i, step in enumerate(trace.steps):
        name = f"step_{i:02d}.svg"
        report.render_crack(lattice, step.crack,
                            os.path.join(outdir, name),
                            title=f"t = {step.load:g}, "
                                  f"E = {step.energy.total:.6f}")
        files.append(name)
    if trace.unconstrained_crack is not None:
        report.render_crack(
            lattice, trace.unconstrained_crack,
            os.path.join(outdir, "unconstrained.svg"),
            title=f"unconstrained, E = {unconstrained.total:.6f}")
        files.append("unconstrained.svg")
    report.render_trace_energies(trace, gap,
                                 os.path.join(outdir, "trace_energies.svg"))
    files.append("trace_energies.svg")
    return files


def _run_localize(config, outdir):
    lattice = _lattice_for(config)
    delta = _delta_for(config, lattice)
    bc = BoundaryCondition(t=config.t, delta=delta)
    seed = opt.zigzag_construction(lattice, config.t, style=config.style,
                                   bc=bc)
    result = opt.alternate_minimize(lattice, bc, init=seed.crack,
                                    init_field=seed.u, tol=config.tol)
    rep = localize(lattice, result.crack, config.rho, u=result.u)
    report.write_csv(
        os.path.join(outdir, "localization.csv"),
        ("rho", "eta", "crack_length", "length_in_T", "length_in_T_and_U",
         "bound_T", "bound_TU", "outside_U_energy", "energy_total"),
        [(rep.rho, rep.eta, rep.total_length, rep.length_in_T,
          rep.length_in_T_and_U, rep.bound_T, rep.bound_TU,
          rep.outside_U_energy, result.energy.total)])
    report.render_crack(lattice, result.crack,
                        os.path.join(outdir, "crack.svg"), u=result.u,
                        title=f"t = {config.t:g}")
    return ["localization.csv", "crack.svg"]


def _run_oracle(config, outdir):
    lattice = _lattice_for(config)
    delta = _delta_for(config, lattice)
    bc = BoundaryCondition(t=config.t, delta=delta)
    result = opt.brute_force_oracle(lattice, bc, weights=config.weights,
                                    cap=config.cap)
    breakdown = result.breakdown
    report.write_csv(
        os.path.join(outdir, "oracle.csv"),
        ("k", "n_per_period", "t", "delta", "weights", "candidates",
         "energy", "bulk_matrix", "bulk_soft", "surface"),
        [(config.k, config.n_per_period, config.t, delta, result.weights,
          result.candidates, result.energy,
          breakdown.bulk_matrix if breakdown is not None else "",
          breakdown.bulk_soft if breakdown is not None else "",
          breakdown.surface if breakdown is not None else "")])
    report.render_crack(lattice, result.crack,
                        os.path.join(outdir, "oracle_crack.svg"),
                        title=f"oracle ({result.weights}), "
                              f"E = {result.energy:.6f}")
    return ["oracle.csv", "oracle_crack.svg"]


def _run_render(config, outdir):
    lattice = _lattice_for(config)
    report.render_geometry(os.path.join(outdir, "geometry.svg"),
                           rho=config.rho)
    dump_edges(lattice, os.path.join(outdir, "lattice_edges.csv.gz"),
               rho=config.rho)
    return ["geometry.svg", "lattice_edges.csv.gz"]


RUNNERS = {
    "cell": _run_cell,
    "sweep": _run_sweep,
    "evolve": _run_evolve,
    "localize": _run_localize,
    "oracle": _run_oracle,
    "render": _run_render,
}


def run(config):
    """Execute one resolved configuration; returns the exit status."""
    outdir = config.outdir
    os.makedirs(outdir, exist_ok=True)
    _write_config_echo(config, outdir)
    files = ["config.csv"]
    files.extend(RUNNERS[config.experiment](config, outdir))
    report.write_manifest(outdir, files)
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="microfrac",
        description="Variational fracture experiments on a periodic "
                    "brittle matrix with soft square inclusions.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for experiment, names in EXPERIMENT_FIELDS.items():
        p = sub.add_parser(experiment)
        p.add_argument("--config", default=None,
                       help="flat key = value configuration file")
        for name in names:
            flag = "--" + name.replace("_", "-")
            p.add_argument(flag, dest=name, default=argparse.SUPPRESS,
                           metavar="V", help=FIELDS[name][1])
    return parser


def parse_args(argv=None):
    namespace = build_parser().parse_args(argv)
    experiment = namespace.experiment
    cli_values = {name: value for name, value in vars(namespace).items()
                  if name in FIELDS}
    file_values = {}
    if namespace.config is not None:
        file_values = read_config_file(namespace.config)
    return resolve_config(experiment, file_values, cli_values)


def main(argv=None):
    try:
        config = parse_args(argv)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, CapacityError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
