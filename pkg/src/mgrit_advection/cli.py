"""Command-line driver.

Subcommands map one-to-one onto the experiment suites:

- ``constants``: error constants and explicit stability limits;
- ``sweep``: convergence factors as a function of the CFL number;
- ``iters``: iteration-count tables over grids and coarsening factors;
- ``validate``: discretization-order and truncation-constant checks;
- ``solve``: a single run with the full residual history.

Outputs are CSV with a commented (#) metadata header carrying the resolved
configuration, so any plotting tool can regenerate the curves.  Exit codes:
0 success, 1 configuration error, 2 numerical singularity, 3 validation
failure.
"""

from __future__ import annotations

import argparse
import configparser
import io
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Sequence

import numpy as np

from . import experiments, mgrit
from .errors import SingularOperatorError
from .stepping import DiscretizationSpec, cfl_limit


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Flat configuration; sections in the file map to field prefixes."""

    family: str = "erk"
    p: int = 3
    c: float = 0.0              # absolute CFL number (sdirk convention)
    c_fraction: float = 0.0     # CFL as a fraction of c_max (erk convention)
    coarse: str = "modified"
    m: List[int] = field(default_factory=lambda: [2])
    nu: int = 1
    cycle: str = "two_level"
    max_iters: int = 30
    tol: float = 1e-10
    seed: int = 0
    n_x: int = 256
    n_t: int = 1024
    lfa_samples: int = 2 ** 11
    lfa_excluded: int = -1      # -1: per-order default
    c_min: float = 0.0
    c_max: float = 0.0
    c_points: int = 512
    measure: bool = False
    threads: int = 0            # 0: use the available parallelism
    out: str = ""

    SECTIONS = {
        "discretization": ("family", "p", "c", "c_fraction", "coarse"),
        "mgrit": ("m", "nu", "cycle", "max_iters", "tol", "seed"),
        "lfa": ("lfa_samples", "lfa_excluded"),
        "grid": ("n_x", "n_t"),
        "sweep": ("c_min", "c_max", "c_points", "measure"),
        "run": ("threads", "out"),
    }

    def validate(self):
        if self.family not in ("erk", "sdirk"):
            raise ConfigError(f"unknown family {self.family!r}")
        if not 1 <= self.p <= 5:
            raise ConfigError(f"order p must be in 1..5, got {self.p}")
        if self.coarse not in experiments.COARSE_KINDS:
            raise ConfigError(f"unknown coarse operator kind {self.coarse!r}")
        if self.family == "erk" and self.coarse == "rediscretized":
            raise ConfigError(
                "rediscretized coarse operators are unavailable for explicit "
                "fine grids: at m times the step they exceed the stability "
                "limit and the coarse operator is unstable")
        if any(m < 2 for m in self.m):
            raise ConfigError(f"coarsening factors must be >= 2, got {self.m}")
        if self.cycle not in ("two_level", "v_cycle"):
            raise ConfigError(f"unknown cycle {self.cycle!r}")
        return self

    def resolve_c(self) -> float:
        """Absolute fine-grid CFL number (fractions refer to c_max)."""
        if self.c_fraction > 0.0:
            return self.c_fraction * cfl_limit(self.p)
        if self.c > 0.0:
            return self.c
        raise ConfigError("set either c or c_fraction")

    # ------------------------------------------------------------ round trip

    def to_text(self) -> str:
        parser = configparser.ConfigParser()
        values = asdict(self)
        for section, keys in self.SECTIONS.items():
            parser[section] = {}
            for key in keys:
                value = values[key]
                if isinstance(value, list):
                    value = ",".join(str(v) for v in value)
                parser[section][key] = str(value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for section in parser.sections():
            if section not in cls.SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser[section].items():
                if key not in cls.SECTIONS[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                kwargs[key] = _convert(key, raw)
        return cls(**kwargs).validate()

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _convert(key: str, raw: str):
    raw = raw.strip()
    if key == "m":
        return [int(tok) for tok in raw.split(",") if tok]
    if key in ("family", "coarse", "cycle", "out"):
        return raw
    if key == "measure":
        return raw.lower() in ("1", "true", "yes", "on")
    if key in ("tol", "c", "c_fraction", "c_min", "c_max"):
        return float(raw)
    return int(raw)


# ------------------------------------------------------------------- CSV output

def write_csv(path: Optional[str], header: Sequence[str], rows: Sequence[Sequence],
              metadata: Sequence[str]) -> str:
    """Write rows as CSV with '#'-prefixed metadata lines; returns the text.

    Numbers use C-locale formatting with at least six significant digits.
    """
    lines = [f"# {line}" for line in metadata]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value:  # nan
            return "nan"
        if value in (float("inf"), float("-inf")):
            return "inf" if value > 0 else "-inf"
        return f"{value:.8e}"
    return str(value)


def _metadata(config: ExperimentConfig, command: str) -> List[str]:
    lines = [f"command: {command}"]
    lines += [line for line in config.to_text().splitlines() if line.strip()]
    return lines


# ------------------------------------------------------------------ subcommands

def cmd_constants(config: ExperimentConfig) -> int:
    rows = [(r["quantity"], r["scheme"], r["order"], r["value"])
            for r in experiments.constants_rows()]
    write_csv(config.out or None, ("quantity", "scheme", "order", "value"),
              rows, _metadata(config, "constants"))
    return 0


def cmd_sweep(config: ExperimentConfig) -> int:
    if config.c_max <= 0.0 or config.c_min < 0.0 or config.c_max < config.c_min:
        raise ConfigError("sweep needs 0 <= c_min <= c_max with c_max > 0")
    limit = cfl_limit(config.p) if config.family == "erk" else 1.0
    n = max(1, config.c_points)
    if n == 1 or config.c_min == config.c_max:
        fractions = [config.c_max]
    else:
        fractions = list(np.linspace(config.c_min, config.c_max, n))
    c_values = [f * limit if config.family == "erk" else f for f in fractions]

    with_bound = config.coarse == "rediscretized" and config.p % 2 == 1
    measure_grid = (config.n_x, config.n_t) if config.measure else None
    cfg = mgrit.MgritConfig(nu=config.nu, cycle="two_level", tol=config.tol,
                            max_iters=config.max_iters, rng_seed=config.seed)
    points = _parallel_sweep(config, c_values, with_bound, measure_grid, cfg)

    header = ["c", "c_over_cmax", "m", "rho_lfa", "divergent", "rho_bound",
              "rho_measured", "measured_converged", "measured_iters"]
    rows = []
    for pt in sorted(points, key=lambda s: (s.c, s.m)):
        rows.append((pt.c, pt.c / limit if config.family == "erk" else "",
                     pt.m, pt.rho_lfa, pt.divergent,
                     "" if pt.rho_bound is None else pt.rho_bound,
                     "" if pt.rho_measured is None else pt.rho_measured,
                     "" if pt.measured_converged is None else pt.measured_converged,
                     "" if pt.measured_iters is None else pt.measured_iters))
    write_csv(config.out or None, header, rows, _metadata(config, "sweep"))
    return 0


def _parallel_sweep(config: ExperimentConfig, c_values, with_bound,
                    measure_grid, mgrit_config) -> List[experiments.SweepPoint]:
    """Dispatch sweep points to a thread pool; order is restored afterwards."""
    n_excl = None if config.lfa_excluded < 0 else config.lfa_excluded

    def one(c):
        return experiments.lfa_sweep(
            config.family, config.p, config.coarse, [c], config.m,
            nu=config.nu, n_samples=config.lfa_samples, n_excluded=n_excl,
            with_bound=with_bound, measure_grid=measure_grid,
            measure_config=mgrit_config)

    if config.threads <= 1 or len(c_values) == 1:
        batches = [one(c) for c in c_values]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            batches = list(pool.map(one, c_values))
    return [pt for batch in batches for pt in batch]


def cmd_iters(config: ExperimentConfig) -> int:
    c = config.resolve_c()
    grids = [(config.n_x, config.n_t)]
    cells = experiments.iteration_table(
        config.family, config.p, c, grids, config.m, config.coarse,
        nu=config.nu, max_iters=config.max_iters, rng_seed=config.seed,
        threads=config.threads)
    header = ("n_x", "n_t", "m", "iters_two_level", "iters_v_cycle")
    rows = [(cell.n_x, cell.n_t, cell.m, cell.iters_two_level,
             cell.iters_v_cycle) for cell in cells]
    write_csv(config.out or None, header, rows, _metadata(config, "iters"))
    return 0


def cmd_validate(config: ExperimentConfig) -> int:
    rows = experiments.validation_rows()
    header = ("check", "subject", "observed", "expected", "tolerance", "passed")
    out_rows = [(r.check, r.subject, r.observed, r.expected, r.tolerance,
                 r.passed) for r in rows]
    write_csv(config.out or None, header, out_rows, _metadata(config, "validate"))
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"FAILED {r.check} [{r.subject}]: observed {r.observed:.6g}, "
              f"expected {r.expected:.6g} (tol {r.tolerance:.3g})",
              file=sys.stderr)
    return 3 if failed else 0


def cmd_solve(config: ExperimentConfig) -> int:
    c = config.resolve_c()
    spec = DiscretizationSpec(config.family, config.p, c, config.n_x, config.n_t)
    # multiple factors are treated as per-level factors for v-cycles
    m = config.m[0] if config.cycle == "two_level" else config.m
    problem = experiments.build_problem(spec, m, config.cycle, config.coarse)
    cfg = mgrit.MgritConfig(nu=config.nu, cycle=config.cycle, tol=config.tol,
                            max_iters=config.max_iters, rng_seed=config.seed)
    report = mgrit.solve(problem, cfg, threads=config.threads)
    header = ("iteration", "residual_norm")
    rows = list(enumerate(report.residual_norms))
    meta = _metadata(config, "solve")
    meta.append(f"converged: {report.converged}")
    meta.append(f"iterations: {report.iterations}")
    meta.append(f"effective_rho: {report.effective_rho:.8e}")
    meta.append(f"wall_time_seconds: {report.wall_time:.6f}")
    meta.append(f"threads: {config.threads}")
    write_csv(config.out or None, header, rows, meta)
    return 0


# ------------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgrit-advection",
        description="Multigrid-reduction-in-time studies for 1-D linear advection")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
            ("constants", "error constants and explicit stability limits"),
            ("sweep", "convergence factors over a CFL range"),
            ("iters", "iteration-count table"),
            ("validate", "order and truncation-constant checks"),
            ("solve", "single MGRIT run with residual history")):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", help="configuration file (ini format)")
        cmd.add_argument("--out", help="output CSV path (default: stdout)")
        cmd.add_argument("--threads", type=int, help="worker threads")
        cmd.add_argument("--seed", type=int, help="random seed")
        cmd.add_argument("--measure", action="store_true", default=None,
                         help="attach measured factors to sweep points")
        cmd.add_argument("--cycle", choices=["two-level", "v"],
                         help="cycle type")
        cmd.add_argument("--nu", type=int, help="CF-relaxation sweeps")
        cmd.add_argument("--m", help="comma-separated coarsening factors")
        cmd.add_argument("--grid", help="space-time grid as NX,NT")
        cmd.add_argument("--family", choices=["erk", "sdirk"])
        cmd.add_argument("--p", type=int, help="discretization order")
        cmd.add_argument("--c", type=float, help="fine-grid CFL number")
        cmd.add_argument("--c-fraction", type=float,
                         help="fine-grid CFL as a fraction of c_max")
        cmd.add_argument("--coarse", choices=list(experiments.COARSE_KINDS))
        cmd.add_argument("--c-range", help="sweep range as CMIN,CMAX,NPOINTS")
        cmd.add_argument("--max-iters", type=int)
    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if args.out is not None:
        config.out = args.out
    if args.threads is not None:
        config.threads = args.threads
    if args.seed is not None:
        config.seed = args.seed
    if args.measure:
        config.measure = True
    if args.cycle is not None:
        config.cycle = "two_level" if args.cycle == "two-level" else "v_cycle"
    if args.nu is not None:
        config.nu = args.nu
    if args.m is not None:
        config.m = [int(tok) for tok in args.m.split(",") if tok]
    if args.grid is not None:
        try:
            n_x, n_t = (int(tok) for tok in args.grid.split(","))
        except ValueError as exc:
            raise ConfigError(f"--grid expects NX,NT, got {args.grid!r}") from exc
        config.n_x, config.n_t = n_x, n_t
    if args.family is not None:
        config.family = args.family
    if args.p is not None:
        config.p = args.p
    if args.c is not None:
        config.c = args.c
    if args.c_fraction is not None:
        config.c_fraction = args.c_fraction
    if args.coarse is not None:
        config.coarse = args.coarse
    if args.c_range is not None:
        try:
            c_min, c_max, n = args.c_range.split(",")
            config.c_min, config.c_max = float(c_min), float(c_max)
            config.c_points = int(n)
        except ValueError as exc:
            raise ConfigError(
                f"--c-range expects CMIN,CMAX,NPOINTS, got {args.c_range!r}") from exc
    if args.max_iters is not None:
        config.max_iters = args.max_iters
    return config


COMMANDS = {
    "constants": cmd_constants,
    "sweep": cmd_sweep,
    "iters": cmd_iters,
    "validate": cmd_validate,
    "solve": cmd_solve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            config = ExperimentConfig.from_file(args.config)
        else:
            config = ExperimentConfig()
        config = _apply_overrides(config, args)
        if config.threads <= 0:
            config.threads = os.cpu_count() or 1
        config.validate()
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SingularOperatorError as exc:
        print(f"numerical singularity: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
