"""Linear multigrid-reduction-in-time solver.

Solves the block-bidiagonal all-at-once system u_{n+1} = Phi u_n + g_{n+1}
by combining block relaxation on the fine time grid with a coarse-grid
correction on every m-th time point.  F-relaxation overwrites the points
inside each coarse interval by forward substitution (independent across
intervals, hence parallel); C-relaxation does the same at the coarse points.
The coarse problem propagates the restricted residual with the coarse
stepper Psi and its solution corrects the coarse points.

The residual convention everywhere is the global l2 norm over coarse-point
residuals; after a closing F-relaxation the remaining points have zero
residual by construction.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .stepping import Stepper


@dataclass
class MgritConfig:
    """Iteration controls: F(CF)^nu pre-relaxation, cycle type, halting."""

    nu: int = 1
    cycle: str = "two_level"  # "two_level" | "v_cycle"
    tol: float = 1e-10
    max_iters: int = 30
    rng_seed: int = 0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if self.cycle not in ("two_level", "v_cycle"):
            raise ValueError(f"unknown cycle {self.cycle!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class TimeGridProblem:
    """Per-level steppers and coarsening factors plus the initial condition.

    ``steppers[0]`` advances the fine grid; ``steppers[l]`` for l >= 1 is the
    coarse operator on level l.  ``m[l]`` is the coarsening factor from level
    l to l+1, so the number of levels is len(m) + 1.  n_t must be divisible by
    the cumulative coarsening, and the coarsest level keeps at least two time
    points (one step).
    """

    steppers: List[Stepper]
    m: List[int]
    n_t: int
    u0: np.ndarray

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=float)
        if len(self.steppers) != len(self.m) + 1:
            raise ValueError("need one stepper per level: "
                             f"{len(self.steppers)} steppers, {len(self.m)} factors")
        n = self.n_t
        for lvl, mf in enumerate(self.m):
            if mf < 2:
                raise ValueError(f"coarsening factor must be >= 2, got {mf}")
            if n % mf != 0:
                raise ValueError(
                    f"level {lvl} has {n} steps, not divisible by m = {mf}")
            n //= mf
        if n < 1:
            raise ValueError("coarsest level must keep at least one step")
        if any(s.n_x != len(self.u0) for s in self.steppers):
            raise ValueError("stepper mesh sizes must match the initial condition")

    @property
    def n_levels(self) -> int:
        return len(self.steppers)

    @property
    def n_x(self) -> int:
        return len(self.u0)

    def points_on_level(self, level: int) -> int:
        n = self.n_t
        for mf in self.m[:level]:
            n //= mf
        return n + 1


@dataclass
class SolveReport:
    """Residual history and effective convergence factor of one solve."""

    residual_norms: List[float]
    iterations: int
    effective_rho: float
    converged: bool
    wall_time: float = 0.0

    @property
    def total_reduction(self) -> float:
        if self.residual_norms[0] == 0.0:
            return 0.0
        return self.residual_norms[-1] / self.residual_norms[0]


def _batched_apply(stepper: Stepper, block: np.ndarray,
                   pool: Optional[ThreadPoolExecutor], threads: int) -> np.ndarray:
    """Apply a stepper to a stack of vectors, optionally chunked over threads.

    Chunking changes only the scheduling: every row is computed by the same
    arithmetic, so results are identical to the serial path.
    """
    if pool is None or threads <= 1 or block.shape[0] < 2 * threads:
        return stepper.apply(block)
    chunks = np.array_split(np.arange(block.shape[0]), threads)
    out = np.empty_like(block)

    def work(idx):
        out[idx] = stepper.apply(block[idx])

    list(pool.map(work, [c for c in chunks if len(c)]))
    return out


def f_relax(u: np.ndarray, g: np.ndarray, stepper: Stepper, m: int,
            pool=None, threads: int = 1) -> None:
    """Zero the residual at the m-1 points after each coarse point.

    Sequential inside an interval, batched across intervals.
    """
    for j in range(1, m):
        src = u[j - 1::m]
        dst = u[j::m]
        upd = _batched_apply(stepper, src[: dst.shape[0]], pool, threads)
        dst[...] = upd + g[j::m]


def c_relax(u: np.ndarray, g: np.ndarray, stepper: Stepper, m: int,
            pool=None, threads: int = 1) -> None:
    """Zero the residual at every coarse point after the first."""
    upd = _batched_apply(stepper, u[m - 1::m], pool, threads)
    u[m::m] = upd[: u[m::m].shape[0]] + g[m::m]


def restrict_residual(u: np.ndarray, g: np.ndarray, stepper: Stepper, m: int,
                      pool=None, threads: int = 1) -> np.ndarray:
    """Coarse-point residuals g_km + Phi u_{km-1} - u_km for k >= 1.

    Injected to the coarse grid; valid as the full residual once the interior
    points have been F-relaxed.
    """
    prop = _batched_apply(stepper, u[m - 1::m], pool, threads)
    n_c = u[m::m].shape[0]
    return g[m::m] + prop[:n_c] - u[m::m]


def cpoint_residual_norm(u, g, stepper, m, pool=None, threads: int = 1) -> float:
    r = restrict_residual(u, g, stepper, m, pool, threads)
    return float(np.linalg.norm(r.ravel()))


def sequential_solve(problem: TimeGridProblem, level: int = 0,
                     g: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact forward substitution on the given level; the ground truth."""
    stepper = problem.steppers[level]
    n_pts = problem.points_on_level(level)
    u = np.empty((n_pts, problem.n_x))
    if g is None:
        u[0] = problem.u0
        for n in range(1, n_pts):
            u[n] = stepper.apply(u[n - 1])
    else:
        u[0] = g[0]
        for n in range(1, n_pts):
            u[n] = stepper.apply(u[n - 1]) + g[n]
    return u


def _forward_substitute(stepper: Stepper, g: np.ndarray) -> np.ndarray:
    u = np.empty_like(g)
    u[0] = g[0]
    for n in range(1, g.shape[0]):
        u[n] = stepper.apply(u[n - 1]) + g[n]
    return u


class MgritSolver:
    """Driver object holding the level hierarchy and the iteration state."""

    def __init__(self, problem: TimeGridProblem, config: MgritConfig,
                 threads: int = 1):
        self.problem = problem
        self.config = config
        self.threads = max(1, int(threads))
        self._pool = None

    # -------------------------------------------------------------- iteration

    def initial_state(self) -> np.ndarray:
        """Random initial iterate: exact at t = 0, uniform [0, 1) elsewhere."""
        rng = np.random.default_rng(self.config.rng_seed)
        u = rng.random((self.problem.n_t + 1, self.problem.n_x))
        u[0] = self.problem.u0
        return u

    def rhs(self) -> np.ndarray:
        g = np.zeros((self.problem.n_t + 1, self.problem.n_x))
        g[0] = self.problem.u0
        return g

    def iterate(self, u: np.ndarray, g: Optional[np.ndarray] = None) -> np.ndarray:
        """One MGRIT cycle in place; returns the updated iterate."""
        if g is None:
            g = self.rhs()
        self._cycle(0, u, g)
        return u

    def _cycle(self, level: int, u: np.ndarray, g: np.ndarray) -> None:
        cfg = self.config
        stepper = self.problem.steppers[level]
        m = self.problem.m[level]
        pool, threads = self._pool, self.threads

        f_relax(u, g, stepper, m, pool, threads)
        for _ in range(cfg.nu):
            c_relax(u, g, stepper, m, pool, threads)
            f_relax(u, g, stepper, m, pool, threads)

        r = restrict_residual(u, g, stepper, m, pool, threads)
        g_coarse = np.vstack([np.zeros((1, self.problem.n_x)), r])

        last_level = level + 1 == len(self.problem.m)
        if cfg.cycle == "two_level" or last_level:
            e = _forward_substitute(self.problem.steppers[level + 1], g_coarse)
        else:
            e = np.zeros_like(g_coarse)
            self._cycle(level + 1, e, g_coarse)

        u[m::m] += e[1:]
        f_relax(u, g, stepper, m, pool, threads)

    # ------------------------------------------------------------------ solve

    def solve(self, u: Optional[np.ndarray] = None) -> SolveReport:
        cfg = self.config
        g = self.rhs()
        if u is None:
            u = self.initial_state()
        stepper = self.problem.steppers[0]
        m = self.problem.m[0]

        start = time.perf_counter()
        if self.threads > 1:
            self._pool = ThreadPoolExecutor(max_workers=self.threads)
        try:
            norms = [cpoint_residual_norm(u, g, stepper, m, self._pool,
                                          self.threads)]
            converged = False
            it = 0
            while it < cfg.max_iters:
                self.iterate(u, g)
                it += 1
                norms.append(cpoint_residual_norm(u, g, stepper, m, self._pool,
                                                  self.threads))
                if norms[0] > 0 and norms[-1] / norms[0] <= cfg.tol:
                    converged = True
                    break
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None
        wall = time.perf_counter() - start

        if len(norms) >= 2 and norms[-2] > 0:
            rho = norms[-1] / norms[-2]
        else:
            rho = 0.0
        return SolveReport(norms, it, float(rho), converged, wall)


def solve(problem: TimeGridProblem, config: MgritConfig,
          threads: int = 1, initial_iterate: Optional[np.ndarray] = None) -> SolveReport:
    """Run MGRIT to the halting rule; divergence is reported, not raised."""
    return MgritSolver(problem, config, threads).solve(initial_iterate)


def initial_condition(n_x: int) -> np.ndarray:
    """The smooth periodic initial profile sin^4(pi x) on [-1, 1)."""
    x = -1.0 + 2.0 * np.arange(n_x) / n_x
    return np.sin(np.pi * x) ** 4
