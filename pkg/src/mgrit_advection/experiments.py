"""Experiment drivers: hierarchy assembly and the study suites.

These helpers glue the steppers, the MGRIT solver, and the mode analysis into
the studies the command-line tool exposes: error-constant tables, stability
limits, convergence-factor sweeps over CFL numbers, iteration-count tables,
and the discretization-order validation suite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import lfa, mgrit, stepping
from .errors import StabilityWarning
from .stepping import (ButcherTableau, DiscretizationSpec, Stepper,
                       cfl_limit, erk_tableau, error_constant_fd,
                       ideal_coarse_stepper, modified_coarse_stepper,
                       mol_stepper, plain_sl_coarse_stepper,
                       rediscretized_coarse_stepper, rk_error_constant,
                       sdirk_tableau, tableau)

#: GMRES caps for the implicit correction on multilevel explicit runs
GMRES_TOL = 1e-2
GMRES_MAX_ITERS = {1: 10}  # by spatial order; anything else gets 20

COARSE_KINDS = ("modified", "rediscretized", "plain_sl", "ideal")


def gmres_cap(p: int) -> int:
    return GMRES_MAX_ITERS.get(p, 20)


def fine_stepper(spec: DiscretizationSpec,
                 tab: Optional[ButcherTableau] = None) -> Stepper:
    if spec.family == "semi_lagrangian":
        return stepping.sl_stepper(spec.p, spec.c, spec.n_x).stepper
    return mol_stepper(spec, tab)


def coarse_stepper(kind: str, spec: DiscretizationSpec, m: int, level: int,
                   fine: Stepper, solver: str = "direct",
                   tab: Optional[ButcherTableau] = None,
                   cumulative_factor: Optional[int] = None) -> Stepper:
    if kind == "modified":
        return modified_coarse_stepper(
            spec, m, level, solver=solver, gmres_tol=GMRES_TOL,
            gmres_max_iters=gmres_cap(spec.p), tab=tab,
            cumulative_factor=cumulative_factor)
    if kind == "rediscretized":
        if level != 1:
            raise ValueError("rediscretized coarse operators are two-level only")
        return rediscretized_coarse_stepper(spec, m, tab)
    if kind == "plain_sl":
        if cumulative_factor is not None:
            return stepping.sl_stepper(spec.p, cumulative_factor * spec.c,
                                       spec.n_x, level=level).stepper
        return plain_sl_coarse_stepper(spec, m, level)
    if kind == "ideal":
        if level != 1:
            raise ValueError("the ideal coarse operator is two-level only")
        return ideal_coarse_stepper(fine, m)
    raise ValueError(f"unknown coarse kind {kind!r}")


def build_problem(spec: DiscretizationSpec, m, cycle: str,
                  coarse_kind: str = "modified",
                  tab: Optional[ButcherTableau] = None) -> mgrit.TimeGridProblem:
    """Assemble the level hierarchy for one MGRIT run.

    ``m`` is a single coarsening factor or a per-level sequence (the last
    entry repeats for deeper levels).  Implicit-correction solves are direct
    except on multilevel explicit hierarchies, where every coarse level uses
    capped GMRES.
    """
    fine = fine_stepper(spec, tab)
    m_list = [m] if np.isscalar(m) else list(m)
    if cycle == "two_level" or coarse_kind in ("ideal", "rediscretized"):
        # ideal and rediscretized operators are two-level constructions; a
        # v-cycle request degenerates to the two-level hierarchy
        factors = m_list[:1]
    else:
        factors = []
        n = spec.n_t
        while True:
            mf = m_list[min(len(factors), len(m_list) - 1)]
            if n % mf != 0 or n // mf < 1:
                break
            factors.append(mf)
            n //= mf
    solver = "gmres" if (spec.family == "erk" and cycle == "v_cycle"
                         and coarse_kind == "modified") else "direct"
    steppers = [fine]
    cumulative = 1
    for level, mf in enumerate(factors, start=1):
        cumulative *= mf
        steppers.append(coarse_stepper(coarse_kind, spec, mf, level, fine,
                                       solver=solver, tab=tab,
                                       cumulative_factor=cumulative))
    u0 = mgrit.initial_condition(spec.n_x)
    return mgrit.TimeGridProblem(steppers, factors, spec.n_t, u0)


# ------------------------------------------------------------------ constants

def constants_rows() -> List[dict]:
    """Error constants of the shipped discretizations plus stability limits."""
    rows = []
    for p in range(1, 6):
        rows.append({"quantity": "e_fd", "scheme": f"U{p}", "order": p,
                     "value": error_constant_fd(p)})
    for q in range(1, 6):
        rows.append({"quantity": "e_rk", "scheme": f"ERK{q}", "order": q,
                     "value": rk_error_constant(erk_tableau(q))})
    for q in range(1, 6):
        rows.append({"quantity": "e_rk", "scheme": f"SDIRK{q}", "order": q,
                     "value": rk_error_constant(sdirk_tableau(q))})
    for p in range(1, 6):
        rows.append({"quantity": "c_max", "scheme": f"ERK{p}+U{p}", "order": p,
                     "value": cfl_limit(p)})
    return rows


# --------------------------------------------------------------------- sweeps

@dataclass
class SweepPoint:
    c: float
    m: int
    rho_lfa: float
    divergent: bool
    rho_bound: Optional[float] = None
    rho_measured: Optional[float] = None
    measured_converged: Optional[bool] = None
    measured_iters: Optional[int] = None


def _symbols_for(spec: DiscretizationSpec, coarse_kind: str, m: int,
                 tab: Optional[ButcherTableau]):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StabilityWarning)
        fine = fine_stepper(spec, tab)
        coarse = coarse_stepper(coarse_kind, spec, m, 1, fine, tab=tab)
    return fine, coarse


def lfa_sweep(family: str, p: int, coarse_kind: str, c_values: Sequence[float],
              m_values: Sequence[int], nu: int = 1,
              n_samples: int = 2 ** 11, n_excluded: Optional[int] = None,
              with_bound: bool = False,
              measure_grid: Optional[tuple] = None,
              measure_config: Optional[mgrit.MgritConfig] = None,
              threads: int = 1) -> List[SweepPoint]:
    """Two-level convergence factors over a CFL sweep, one point per (c, m).

    With ``with_bound`` the odd-order characteristic lower bound is attached
    (rediscretized coarse grids).  With ``measure_grid = (n_x, n_t)`` each
    point also runs MGRIT on that grid and records the effective factor of
    the final iteration.
    """
    k_excl = lfa.default_exclusion_count(p) if n_excluded is None else n_excluded
    tab = None if family == "semi_lagrangian" else tableau(family, p)
    points = []
    for c in c_values:
        for m in m_values:
            spec = DiscretizationSpec(family, p, float(c), 64, 64)
            fine, coarse = _symbols_for(spec, coarse_kind, m, tab)
            sweep = lfa.rho_two_level(fine.symbol, coarse.symbol, m, nu,
                                      n_samples, k_excl)
            point = SweepPoint(float(c), int(m), sweep.rho_e, sweep.divergent)
            if with_bound and p % 2 == 1 and tab is not None:
                e_rk = rk_error_constant(tab)
                point.rho_bound = lfa.rho_check(p, float(c), m, e_rk, e_rk,
                                                error_constant_fd(p))
            if measure_grid is not None:
                n_x, n_t = measure_grid
                cfg = measure_config or mgrit.MgritConfig(nu=nu, max_iters=30)
                report = measured_point(family, p, coarse_kind, float(c), m,
                                        n_x, n_t, cfg, threads=threads)
                point.rho_measured = report.effective_rho
                point.measured_converged = report.converged
                point.measured_iters = report.iterations
            points.append(point)
    return points


def measured_point(family: str, p: int, coarse_kind: str, c: float, m: int,
                   n_x: int, n_t: int,
                   config: Optional[mgrit.MgritConfig] = None,
                   cycle: str = "two_level", threads: int = 1) -> mgrit.SolveReport:
    """One MGRIT run returning the measured convergence report."""
    config = config or mgrit.MgritConfig()
    if config.cycle != cycle:
        config = mgrit.MgritConfig(config.nu, cycle, config.tol,
                                   config.max_iters, config.rng_seed)
    spec = DiscretizationSpec(family, p, c, n_x, n_t)
    problem = build_problem(spec, m, cycle, coarse_kind)
    return mgrit.solve(problem, config, threads=threads)


# ------------------------------------------------------------ iteration table

@dataclass
class IterationCell:
    n_x: int
    n_t: int
    m: int
    iters_two_level: str
    iters_v_cycle: str
    report_two_level: mgrit.SolveReport = field(repr=False, default=None)
    report_v_cycle: mgrit.SolveReport = field(repr=False, default=None)


def _format_iters(report: mgrit.SolveReport, max_iters: int) -> str:
    return str(report.iterations) if report.converged else f">{max_iters}"


def iteration_table(family: str, p: int, c: float,
                    grids: Sequence[tuple], m_values: Sequence[int],
                    coarse_kind: str = "modified", nu: int = 1,
                    max_iters: int = 40, rng_seed: int = 0,
                    threads: int = 1) -> List[IterationCell]:
    """Two-level and V-cycle iteration counts to a ten-order residual drop."""
    cells = []
    for n_x, n_t in grids:
        for m in m_values:
            spec = DiscretizationSpec(family, p, c, n_x, n_t)
            reports = {}
            for cycle in ("two_level", "v_cycle"):
                cfg = mgrit.MgritConfig(nu=nu, cycle=cycle, tol=1e-10,
                                        max_iters=max_iters, rng_seed=rng_seed)
                problem = build_problem(spec, m, cycle, coarse_kind)
                reports[cycle] = mgrit.solve(problem, cfg, threads=threads)
            cells.append(IterationCell(
                n_x, n_t, m,
                _format_iters(reports["two_level"], max_iters),
                _format_iters(reports["v_cycle"], max_iters),
                reports["two_level"], reports["v_cycle"]))
    return cells


# ------------------------------------------------------------------ validation

@dataclass
class ValidationRow:
    check: str
    subject: str
    observed: float
    expected: float
    tolerance: float
    passed: bool


def _row(check, subject, observed, expected, tol, compare="abs") -> ValidationRow:
    if compare == "abs":
        ok = abs(observed - expected) <= tol
    elif compare == "rel":
        ok = abs(observed - expected) <= tol * abs(expected)
    else:  # "min": observed must be at least expected - tol
        ok = observed >= expected - tol
    return ValidationRow(check, subject, float(observed), float(expected),
                         float(tol), bool(ok))


def validation_rows(n_x_list: Sequence[int] = (64, 128, 256, 512),
                    quick: bool = False) -> List[ValidationRow]:
    """Order studies, truncation-constant fits, and symbol-estimate checks.

    Covers every shipped discretization order: global orders for the
    method-of-lines and semi-Lagrangian steppers, fitted leading-error
    constants against their closed forms, smooth-mode eigenvalue estimates,
    and the corrected-coarse-operator consistency order.
    """
    rows: List[ValidationRow] = []
    orders = (1, 2, 3) if quick else (1, 2, 3, 4, 5)

    for p in orders:
        c_erk = 0.7 * cfl_limit(p)
        # small meshes keep the p+1st-order one-step residual above rounding
        trunc_meshes = [n for n in (24, 32, 48, 64) if n > 4 * p]
        slope, _ = stepping.global_error_order("erk", p, c_erk, n_x_list)
        rows.append(_row("global_order", f"ERK{p}+U{p}", slope, p, 0.15))
        slope, _ = stepping.global_error_order("sdirk", p, 0.8, n_x_list)
        rows.append(_row("global_order", f"SDIRK{p}+U{p}", slope, p, 0.15))
        slope, _ = stepping.global_error_order("semi_lagrangian", p, 0.7,
                                               n_x_list)
        rows.append(_row("global_order", f"SL{p}", slope, p, 0.15))

        rep = stepping.truncation_residual("erk", p, c_erk, trunc_meshes)
        rows.append(_row("truncation_constant", f"ERK{p}+U{p}",
                         rep.fitted_constants[-1], rep.predicted_constant,
                         0.05, "rel"))
        rep = stepping.truncation_residual("sdirk", p, 0.8, trunc_meshes)
        rows.append(_row("truncation_constant", f"SDIRK{p}+U{p}",
                         rep.fitted_constants[-1], rep.predicted_constant,
                         0.05, "rel"))
        rep = stepping.truncation_residual("semi_lagrangian", p, 1.6,
                                           trunc_meshes)
        rows.append(_row("truncation_constant", f"SL{p} (step CFL 1.6)",
                         rep.fitted_constants[-1], rep.predicted_constant,
                         0.05, "rel"))

    # exactness of a unit-CFL first-order step
    rep = stepping.truncation_residual("erk", 1, 1.0, [64])
    rows.append(_row("unit_cfl_exactness", "ERK1+U1 at c=1",
                     rep.residual_norms[-1], 0.0, 1e-12))

    # measured leading constant of the upwind derivative alone
    for p in orders:
        rows.append(_row("fd_error_constant", f"U{p}",
                         _measured_fd_constant(p, 512), error_constant_fd(p),
                         0.02, "rel"))

    # smooth-mode eigenvalue estimates for odd orders; higher orders need
    # coarser meshes to keep the omega^(p+1) term above rounding noise
    for p in [o for o in orders if o % 2 == 1]:
        estimate_meshes = ([1024, 2048, 4096, 8192] if p < 5
                           else [256, 512, 1024, 2048])
        for family, c in (("erk", 0.5 * cfl_limit(p)), ("sdirk", 1.0)):
            tab = tableau(family, p)
            e_rk = rk_error_constant(tab)
            m = 4

            def lam_fn(om, _family=family, _c=c, _tab=tab, _p=p):
                spec = DiscretizationSpec(_family, _p, _c, 64, 64)
                return mol_stepper(spec, _tab).symbol(om)

            def mu_fn(om, _family=family, _c=c, _tab=tab, _p=p, _m=m):
                spec = DiscretizationSpec(_family, _p, _m * _c, 64, 64)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", StabilityWarning)
                    return mol_stepper(spec, _tab).symbol(om)

            report = lfa.validate_eigenvalue_estimates(
                p, c, m, error_constant_fd(p), e_rk, e_rk, lam_fn, mu_fn,
                n_x_list=estimate_meshes, n_modes=4)
            label = f"{tab.name}+U{p}"
            rows.append(_row("eigenvalue_estimate_order", f"{label} fine",
                             report.fine_order, 1.0, 0.1, "min"))
            rows.append(_row("eigenvalue_estimate_order", f"{label} coarse m={m}",
                             report.coarse_order, 1.0, 0.1, "min"))

    # corrected coarse operator matches the repeated fine step at order p+2
    for p, family in [(1, "erk"), (3, "erk"), (1, "sdirk"), (3, "sdirk")]:
        if p not in orders:
            continue
        for m, cfac in ((2, 0.4), (8, 0.7)):
            c = cfac * cfl_limit(p) if family == "erk" else cfac * 4.0
            spec = DiscretizationSpec(family, p, c, 64, 64)
            slope, _ = stepping.modified_ideal_consistency(
                spec, m, [512, 1024, 2048])
            rows.append(_row("modified_vs_ideal_order",
                             f"{family.upper()}{p}+U{p} m={m} c={c:.3g}",
                             slope, p + 2, 0.25, "min"))
    return rows


def _measured_fd_constant(p: int, n_x: int) -> float:
    """Least-squares fit of (v' - L_p v / h) against h^p v^(p+1)."""
    L = stepping.upwind_derivative(p, n_x)
    h = stepping.DOMAIN_LENGTH / n_x
    x = -1.0 + stepping.DOMAIN_LENGTH * np.arange(n_x) / n_x
    k = 2.0 * np.pi
    v = np.sin(k * x)
    exact = k * np.cos(k * x)
    err = exact - L.apply(v) / h
    deriv = np.sin(k * x + (p + 1) * np.pi / 2.0) * k ** (p + 1)
    basis = h ** p * deriv
    return float(err @ basis) / float(basis @ basis)
