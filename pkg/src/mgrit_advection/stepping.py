"""Time-stepping operators for periodic linear advection.

Provides the method-of-lines steppers (explicit and singly diagonally
implicit Runge-Kutta in time, upwind finite differences in space), the
unconditionally stable semi-Lagrangian steppers, and the corrected
semi-Lagrangian coarse steppers whose truncation error matches that of a
repeated fine step.  Each stepper carries both an assembled circulant stencil
and an exact Fourier symbol closure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .circulant import CirculantOperator, _gmres_batched
from .errors import SingularOperatorError, StabilityWarning, TableauError
from .stencils import (StencilWindow, error_constant_fd, f_poly, fd_weights,
                       high_derivative_operator, lagrange_weights,
                       upwind_derivative)

#: pruning threshold for assembled one-step stencils
STEPPER_PRUNE_TOL = 1e-14

#: amplification factors up to 1 + this count as stable when locating CFL
#: limits; it ignores the tolerance-level excursions of eigenvalues that
#: graze the unit circle while the genuine instability sets in sharply
STABILITY_TOL = 1e-6

#: spatial domain is x in [-1, 1), so the mesh spacing is 2 / n_x
DOMAIN_LENGTH = 2.0


# --------------------------------------------------------------------- tableaux

@dataclass(frozen=True)
class ButcherTableau:
    """Runge-Kutta coefficients A, b with kind 'explicit' or 'sdirk'."""

    A: np.ndarray
    b: np.ndarray
    kind: str
    q: int
    name: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        s = len(b)
        if A.shape != (s, s):
            raise TableauError(f"A must be {s}x{s}, got {A.shape}")
        if self.kind == "explicit":
            if np.any(np.abs(np.triu(A)) > 0):
                raise TableauError("explicit tableau must be strictly lower triangular")
        elif self.kind == "sdirk":
            if np.any(np.abs(np.triu(A, 1)) > 0):
                raise TableauError("sdirk tableau must be lower triangular")
            diag = np.diag(A)
            if diag[0] <= 0 or np.max(np.abs(diag - diag[0])) > 1e-14:
                raise TableauError("sdirk tableau needs equal positive diagonal entries")
        else:
            raise TableauError(f"unknown tableau kind {self.kind!r}")
        if abs(b.sum() - 1.0) > 1e-12:
            raise TableauError(f"weights must sum to 1, got {b.sum()!r}")

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def c(self) -> np.ndarray:
        return self.A.sum(axis=1)

    def taylor_coefficient(self, j: int) -> float:
        """j-th Taylor coefficient b^T A^(j-1) 1 of the stability function."""
        if j < 0:
            raise ValueError("j must be >= 0")
        if j == 0:
            return 1.0
        one = np.ones(self.stages)
        return float(self.b @ np.linalg.matrix_power(self.A, j - 1) @ one)


def _sdirk5_chain(gamma: float, nodes: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Bidiagonal SDIRK stage matrix with prescribed nodes; weights solved
    from the first five Taylor conditions of the stability function."""
    s = len(nodes)
    A = np.diag([gamma] * s)
    for i in range(1, s):
        A[i, i - 1] = nodes[i] - gamma
    one = np.ones(s)
    M = np.empty((s, s))
    v = one.copy()
    for j in range(s):
        M[:, j] = v
        v = A @ v
    rhs = np.array([1.0 / math.factorial(j + 1) for j in range(s)])
    b = np.linalg.solve(M.T, rhs)
    return A, b


def erk_tableau(q: int) -> ButcherTableau:
    """Shipped explicit methods: forward Euler, Heun, Kutta's third-order,
    the classical fourth-order method, and Butcher's six-stage fifth-order
    method (the variant with a43 = 1/2)."""
    if q == 1:
        return ButcherTableau(np.zeros((1, 1)), [1.0], "explicit", 1, "ERK1")
    if q == 2:
        A = np.zeros((2, 2))
        A[1, 0] = 1.0
        return ButcherTableau(A, [0.5, 0.5], "explicit", 2, "ERK2")
    if q == 3:
        A = np.zeros((3, 3))
        A[1, 0] = 0.5
        A[2, 0], A[2, 1] = -1.0, 2.0
        return ButcherTableau(A, np.array([1, 4, 1]) / 6.0, "explicit", 3, "ERK3")
    if q == 4:
        A = np.zeros((4, 4))
        A[1, 0] = 0.5
        A[2, 1] = 0.5
        A[3, 2] = 1.0
        return ButcherTableau(A, np.array([1, 2, 2, 1]) / 6.0, "explicit", 4, "ERK4")
    if q == 5:
        A = np.zeros((6, 6))
        A[1, 0] = 1 / 4
        A[2, 0], A[2, 1] = 1 / 8, 1 / 8
        A[3, 2] = 1 / 2
        A[4, 0], A[4, 1], A[4, 2], A[4, 3] = 3 / 16, -3 / 8, 3 / 8, 9 / 16
        A[5, 0], A[5, 1], A[5, 2], A[5, 3], A[5, 4] = -3 / 7, 8 / 7, 6 / 7, -12 / 7, 8 / 7
        return ButcherTableau(A, np.array([7, 0, 32, 12, 32, 7]) / 90.0,
                              "explicit", 5, "ERK5")
    raise ValueError(f"no shipped explicit tableau of order {q}")


def sdirk_tableau(q: int) -> ButcherTableau:
    """Shipped A-stable SDIRK methods of orders one to five.

    Orders one to four are the classical choices (backward Euler, the
    two-stage method with gamma = 1 - 1/sqrt(2), Alexander's three-stage
    L-stable method, and the five-stage gamma = 1/4 method).  The fifth-order
    tableau uses the L-stable diagonal gamma = 4024571134387/14474071345096
    with chain structure and weights determined by the order conditions of
    the stability function.
    """
    if q == 1:
        return ButcherTableau([[1.0]], [1.0], "sdirk", 1, "SDIRK1")
    if q == 2:
        g = 1.0 - 1.0 / math.sqrt(2.0)
        return ButcherTableau([[g, 0.0], [1.0 - g, g]], [1.0 - g, g],
                              "sdirk", 2, "SDIRK2")
    if q == 3:
        g = 0.435866521508458999416019  # root of g^3 - 3g^2 + 3g/2 - 1/6
        b1 = -1.5 * g * g + 4.0 * g - 0.25
        b2 = 1.5 * g * g - 5.0 * g + 1.25
        A = [[g, 0.0, 0.0], [(1.0 - g) / 2.0, g, 0.0], [b1, b2, g]]
        return ButcherTableau(A, [b1, b2, g], "sdirk", 3, "SDIRK3")
    if q == 4:
        A = np.array([
            [1 / 4, 0, 0, 0, 0],
            [1 / 2, 1 / 4, 0, 0, 0],
            [17 / 50, -1 / 25, 1 / 4, 0, 0],
            [371 / 1360, -137 / 2720, 15 / 544, 1 / 4, 0],
            [25 / 24, -49 / 48, 125 / 16, -85 / 12, 1 / 4],
        ])
        return ButcherTableau(A, A[-1].copy(), "sdirk", 4, "SDIRK4")
    if q == 5:
        g = 4024571134387 / 14474071345096
        A, b = _sdirk5_chain(g, [g, 0.45, 0.65, 0.85, 1.0])
        return ButcherTableau(A, b, "sdirk", 5, "SDIRK5")
    raise ValueError(f"no shipped sdirk tableau of order {q}")


def tableau(family: str, q: int) -> ButcherTableau:
    if family == "erk":
        return erk_tableau(q)
    if family == "sdirk":
        return sdirk_tableau(q)
    raise ValueError(f"unknown Runge-Kutta family {family!r}")


def rk_error_constant(tab: ButcherTableau) -> float:
    """Leading error constant beta_{q+1} - 1/(q+1)! of the stability function.

    Raises TableauError unless the first q Taylor coefficients match the
    exponential, i.e. unless the method really is order q on linear problems.
    """
    for j in range(1, tab.q + 1):
        beta = tab.taylor_coefficient(j)
        if abs(beta - 1.0 / math.factorial(j)) > 1e-12:
            raise TableauError(
                f"{tab.name or 'tableau'}: Taylor coefficient {j} is {beta}, "
                f"expected 1/{j}!")
    return tab.taylor_coefficient(tab.q + 1) - 1.0 / math.factorial(tab.q + 1)


def stability_function(tab: ButcherTableau, z) -> complex | np.ndarray:
    """R(z) = 1 + z b^T (I - zA)^{-1} 1, vectorized over complex z."""
    zarr = np.asarray(z, dtype=complex)
    flat = zarr.reshape(-1)
    s = tab.stages
    if tab.kind == "sdirk":
        gamma = tab.A[0, 0]
        if np.any(np.abs(1.0 - gamma * flat) < 1e-14):
            raise SingularOperatorError(
                f"stability function pole: z near 1/gamma = {1.0 / gamma}")
    M = np.eye(s)[None, :, :] - flat[:, None, None] * tab.A[None, :, :]
    stages = np.linalg.solve(M, np.ones((len(flat), s, 1)))[:, :, 0]
    out = 1.0 + flat * (stages @ tab.b)
    if np.isscalar(z):
        return complex(out[0])
    return out.reshape(zarr.shape)


# ------------------------------------------------------------- discretizations

@dataclass(frozen=True)
class DiscretizationSpec:
    """Identifies a fine-grid discretization of the advection problem.

    The mesh has n_x points on [-1, 1) and n_t steps of size dt = c*h/alpha,
    so the final time is T = n_t * dt.  q defaults to p (matched orders).
    """

    family: str  # "erk" | "sdirk" | "semi_lagrangian"
    p: int
    c: float
    n_x: int
    n_t: int
    alpha: float = 1.0
    q: int = field(default=-1)

    def __post_init__(self):
        if self.family not in ("erk", "sdirk", "semi_lagrangian"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.c <= 0:
            raise ValueError(f"CFL number must be positive, got {self.c}")
        if self.p < 1:
            raise ValueError(f"order must be >= 1, got {self.p}")
        if self.q == -1:
            object.__setattr__(self, "q", self.p)

    @property
    def h(self) -> float:
        return DOMAIN_LENGTH / self.n_x

    @property
    def dt(self) -> float:
        return self.c * self.h / self.alpha

    @property
    def final_time(self) -> float:
        return self.n_t * self.dt

    def tableau(self) -> ButcherTableau:
        if self.family == "semi_lagrangian":
            raise ValueError("semi-Lagrangian discretizations have no tableau")
        return tableau(self.family, self.q)


class Stepper:
    """One-step propagation operator u_{n+1} = Phi u_n on the periodic mesh.

    ``op`` is the assembled circulant stencil; ``symbol`` is the exact Fourier
    symbol closure used by the convergence analysis.  ``apply`` dispatches on
    the mode: assembled stencils act directly (rolled sums or FFT), staged
    mode sweeps the Runge-Kutta stages, and implicit-correction mode performs
    a semi-Lagrangian step followed by a linear solve.
    """

    def __init__(self, n_x: int, op: CirculantOperator,
                 symbol_fn: Callable[[np.ndarray], np.ndarray],
                 mode: str = "assembled",
                 level: int = 0, dt_multiplier: float = 1.0,
                 apply_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 description: str = ""):
        self.n_x = n_x
        self.op = op
        self.mode = mode
        self.level = level
        self.dt_multiplier = dt_multiplier
        self.description = description
        self._symbol_fn = symbol_fn
        self._apply_fn = apply_fn

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Advance one step; ``u`` may be batched with shape (..., n_x)."""
        if self._apply_fn is not None:
            return self._apply_fn(np.asarray(u))
        return self.op.apply(u)

    def symbol(self, omega) -> np.ndarray:
        return self._symbol_fn(np.asarray(omega, dtype=float))

    def eigenvalues(self) -> np.ndarray:
        return self.symbol(2.0 * np.pi * np.arange(self.n_x) / self.n_x)

    def max_amplification(self, n_samples: int = 4096) -> float:
        om = -np.pi + 2.0 * np.pi * np.arange(n_samples) / n_samples
        return float(np.max(np.abs(self.symbol(om))))

    def __repr__(self):
        return (f"Stepper({self.description or self.mode}, n_x={self.n_x}, "
                f"level={self.level})")


def _assemble(n_x: int, symbol_fn) -> CirculantOperator:
    lam = symbol_fn(2.0 * np.pi * np.arange(n_x) / n_x)
    return CirculantOperator.from_eigenvalues(n_x, lam, STEPPER_PRUNE_TOL)


def mol_stepper(spec: DiscretizationSpec, tab: Optional[ButcherTableau] = None,
                mode: str = "assembled") -> Stepper:
    """Method-of-lines stepper R_q(-c L_p) for the given discretization.

    ``assembled`` builds the one-step stencil from the exact symbol (pruned
    at 1e-14); ``staged`` runs the standard stage sweep, with each implicit
    stage solved directly.  Both realize the same circulant map.  An explicit
    spec beyond its stability limit is constructed but flagged with a
    StabilityWarning.
    """
    if tab is None:
        tab = spec.tableau()
    if (spec.family == "erk") != (tab.kind == "explicit"):
        raise ValueError(f"family {spec.family!r} does not match tableau kind "
                         f"{tab.kind!r}")
    L = upwind_derivative(spec.p, spec.n_x)
    c = spec.c

    def symbol_fn(om):
        return stability_function(tab, -c * L.symbol(om))

    if spec.family == "erk":
        limit = cfl_limit(spec.p, tab)
        if c > limit * (1.0 + 1e-9):
            warnings.warn(
                f"CFL number {c:.6g} exceeds the stability limit "
                f"{limit:.6g} for {tab.name}+U{spec.p}", StabilityWarning)

    op = _assemble(spec.n_x, symbol_fn)
    apply_fn = None
    if mode == "staged":
        apply_fn = _staged_apply_fn(tab, c, L)
    elif mode != "assembled":
        raise ValueError(f"unknown stepper mode {mode!r}")
    return Stepper(spec.n_x, op, symbol_fn, mode=mode, apply_fn=apply_fn,
                   description=f"{tab.name}+U{spec.p}, c={c:.6g}")


def _staged_apply_fn(tab: ButcherTableau, c: float, L: CirculantOperator):
    cL = L.scale(-c)
    stage_matrix = None
    if tab.kind == "sdirk":
        # equal diagonal entries: one stage matrix serves every stage
        eye = CirculantOperator.identity(L.n_x)
        stage_matrix = eye - cL.scale(tab.A[0, 0])

    def apply_fn(u):
        z = []
        for i in range(tab.stages):
            rhs = u.copy()
            for j in range(i):
                if tab.A[i, j] != 0.0:
                    rhs = rhs + tab.A[i, j] * z[j]
            if stage_matrix is None:
                z.append(cL.apply(rhs))
            else:
                z.append(cL.apply(stage_matrix.solve_direct(rhs)))
        out = u.copy()
        for i in range(tab.stages):
            if tab.b[i] != 0.0:
                out = out + tab.b[i] * z[i]
        return out

    return apply_fn


class SemiLagrangianStep(NamedTuple):
    stepper: Stepper
    eps: float
    shift: int
    window: StencilWindow


def sl_stepper(p: int, mc: float, n_x: int, level: int = 0) -> SemiLagrangianStep:
    """Semi-Lagrangian stepper of order p for a step with CFL number ``mc``.

    The departure point of the characteristic through mesh point i lies
    ``mc`` cells to the west; it is split as an integer shift to the east
    neighbor plus a fraction eps in [0, 1).  Order-p interpolation on the
    p+1 nearest points gives the step weights.  The operator satisfies
    max |symbol| <= 1 for every mc > 0.
    """
    if mc <= 0:
        raise ValueError(f"step CFL must be positive, got {mc}")
    k = int(math.floor(mc + 1e-13))
    eps = mc - k
    if eps < 1e-13:
        eps = 0.0
    shift = -k
    window = StencilWindow.interpolation(p, eps)
    w = lagrange_weights(window, eps)
    offsets = window.offsets + shift
    op = CirculantOperator.from_arrays(n_x, offsets, w)

    off_f = offsets.astype(float)

    def symbol_fn(om):
        return np.exp(1j * np.multiply.outer(om, off_f)) @ w.astype(complex)

    stepper = Stepper(n_x, op, symbol_fn, mode="assembled", level=level,
                      dt_multiplier=mc,
                      description=f"SL{p}, step CFL={mc:.6g}")
    return SemiLagrangianStep(stepper, eps, shift, window)


_CFL_CACHE: dict = {}


def cfl_limit(p: int, tab: Optional[ButcherTableau] = None,
              n_samples: int = 4096, bisection_tol: float = 1e-6) -> float:
    """Largest CFL number keeping max_omega |R(-c L_p)| <= 1 + STABILITY_TOL.

    Located by bisection over c with the symbol scanned on uniform samples
    of [-pi, pi).  Results are memoized (steppers consult the limit on
    construction).
    """
    if tab is None:
        tab = erk_tableau(p)
    if tab.kind != "explicit":
        raise ValueError("CFL limits apply to explicit tableaux")
    key = (p, tab.A.tobytes(), tab.b.tobytes(), n_samples, bisection_tol)
    if key in _CFL_CACHE:
        return _CFL_CACHE[key]
    win = StencilWindow.upwind(p)
    w = fd_weights(1, win.offsets, 0.0)
    om = -np.pi + 2.0 * np.pi * np.arange(n_samples) / n_samples
    Lsym = np.exp(1j * np.outer(om, win.offsets.astype(float))) @ w.astype(complex)

    def stable(c):
        return np.max(np.abs(stability_function(tab, -c * Lsym))) <= 1.0 + STABILITY_TOL

    lo, hi = 1e-8, 1.0
    while stable(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 64.0:
            raise RuntimeError("no instability found below c = 64")
    while hi - lo > bisection_tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    _CFL_CACHE[key] = 0.5 * (lo + hi)
    return _CFL_CACHE[key]


# -------------------------------------------------- corrected coarse operators

def phi_coefficient(p: int, c: float, m: int, level: int,
                    e_fd: float, e_rk: float) -> float:
    """Correction coefficient multiplying the high-derivative operator on a
    coarse level.

    Level 1 combines the accumulated one-step errors of m fine steps with the
    interpolation error of the coarse semi-Lagrangian step; deeper levels are
    defined by the recursion
    phi_l = (-1)^(p+1) [ -m f(eps_{l-1}) + f(eps_l) ] + m phi_{l-1}.
    """
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")

    def sl_error_term(step_cfl: float) -> float:
        k = int(math.floor(step_cfl + 1e-13))
        eps = step_cfl - k
        if eps < 1e-13:
            eps = 0.0
        window = StencilWindow.interpolation(p, eps)
        return f_poly(p, window, eps)

    phi = (m * (c * e_fd + (-c) ** (p + 1) * e_rk)
           + (-1) ** (p + 1) * sl_error_term(m * c))
    for lvl in range(2, level + 1):
        f_prev = sl_error_term(m ** (lvl - 1) * c)
        f_cur = sl_error_term(m ** lvl * c)
        phi = (-1) ** (p + 1) * (-m * f_prev + f_cur) + m * phi
    return phi


def correction_operator(p: int, n_x: int) -> CirculantOperator:
    """High-derivative operator used in the coarse-grid correction: symmetric
    second-order for odd p, left-biased first-order for even p."""
    d = p + 1
    if p % 2 == 1:
        return high_derivative_operator(d, 2, "symmetric", n_x)
    return high_derivative_operator(d, 1, "left_biased", n_x)


def modified_coarse_stepper(spec: DiscretizationSpec, m: int, level: int = 1,
                            solver: str = "direct",
                            gmres_tol: float = 1e-2,
                            gmres_max_iters: int = 20,
                            tab: Optional[ButcherTableau] = None,
                            cumulative_factor: Optional[int] = None) -> Stepper:
    """Corrected semi-Lagrangian coarse stepper for a method-of-lines fine grid.

    One application is a semi-Lagrangian step at the level's CFL number
    followed by the implicit correction solve (I - phi D) x = intermediate.
    With ``solver='direct'`` the solve is exact (FFT); with ``solver='gmres'``
    it is approximated by unrestarted GMRES with the given tolerance and cap.

    ``cumulative_factor`` overrides the uniform-coarsening step multiple
    m**level for hierarchies with per-level factors; the level recursion for
    the correction coefficient telescopes, so the coefficient depends only on
    the cumulative factor.
    """
    if level < 1:
        raise ValueError(f"coarse level must be >= 1, got {level}")
    if tab is None:
        tab = spec.tableau()
    e_fd = error_constant_fd(spec.p)
    e_rk = rk_error_constant(tab)
    if cumulative_factor is None:
        phi = phi_coefficient(spec.p, spec.c, m, level, e_fd, e_rk)
        step_cfl = m ** level * spec.c
    else:
        phi = phi_coefficient(spec.p, spec.c, cumulative_factor, 1, e_fd, e_rk)
        step_cfl = cumulative_factor * spec.c
    sl = sl_stepper(spec.p, step_cfl, spec.n_x, level=level)
    D = correction_operator(spec.p, spec.n_x)
    correction = CirculantOperator.identity(spec.n_x) - D.scale(phi)

    corr_eigs = correction.eigenvalues()
    bad = np.abs(corr_eigs) < 1e-14
    if np.any(bad):
        k = int(np.argmax(bad))
        raise SingularOperatorError(
            f"correction matrix singular for phi = {phi:.6g} at "
            f"omega = 2*pi*{k}/{spec.n_x}")

    def symbol_fn(om):
        return sl.stepper.symbol(om) / (1.0 - phi * D.symbol(om))

    op = _assemble(spec.n_x, symbol_fn)

    if solver == "direct":
        apply_fn = None  # assembled stencil is the exact product operator
    elif solver == "gmres":
        sl_op = sl.stepper.op

        def apply_fn(u):
            rhs = sl_op.apply(u)
            flat = rhs.reshape(-1, spec.n_x)
            x, _, _, _ = _gmres_batched(correction, flat, gmres_tol,
                                        gmres_max_iters)
            return x.reshape(rhs.shape)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    return Stepper(spec.n_x, op, symbol_fn, mode="implicit_correction",
                   level=level, dt_multiplier=step_cfl, apply_fn=apply_fn,
                   description=(f"corrected SL{spec.p} (phi={phi:.4g}, "
                                f"level {level}, {solver})"))


def rediscretized_coarse_stepper(spec: DiscretizationSpec, m: int,
                                 tab: Optional[ButcherTableau] = None) -> Stepper:
    """The same implicit discretization rebuilt with step size m * dt.

    Restricted to sdirk families: enlarging the step of a CFL-limited
    explicit method produces an unstable operator.
    """
    if spec.family != "sdirk":
        raise ValueError("rediscretized coarse steppers require an sdirk family "
                         "(an explicit method is unstable at m times its step)")
    coarse = DiscretizationSpec(spec.family, spec.p, m * spec.c, spec.n_x,
                                max(spec.n_t // m, 1), spec.alpha, spec.q)
    stepper = mol_stepper(coarse, tab)
    stepper.level = 1
    stepper.dt_multiplier = float(m)
    return stepper


def ideal_coarse_stepper(fine: Stepper, m: int) -> Stepper:
    """The exact coarse operator: m applications of the fine stepper."""

    def symbol_fn(om):
        return fine.symbol(om) ** m

    op = _assemble(fine.n_x, symbol_fn)
    return Stepper(fine.n_x, op, symbol_fn, mode="assembled", level=1,
                   dt_multiplier=float(m), description=f"ideal (fine^{m})")


def plain_sl_coarse_stepper(spec: DiscretizationSpec, m: int,
                            level: int = 1) -> Stepper:
    """Uncorrected semi-Lagrangian coarse stepper (for comparison runs)."""
    return sl_stepper(spec.p, m ** level * spec.c, spec.n_x, level=level).stepper


# ------------------------------------------------------ truncation-error fits

@dataclass
class TruncationReport:
    """Leading truncation-error fit across a sequence of meshes."""

    n_x: list
    fitted_constants: list
    predicted_constant: float
    residual_norms: list
    remainder_norms: list

    @property
    def constant_ratios(self) -> list:
        if self.predicted_constant == 0.0:
            return [math.nan for _ in self.fitted_constants]
        return [k / self.predicted_constant for k in self.fitted_constants]

    @property
    def remainder_order(self) -> float:
        """Log-log slope of the after-fit remainder against h."""
        logs = np.log(np.asarray(self.remainder_norms, dtype=float))
        x = np.log(DOMAIN_LENGTH / np.asarray(self.n_x, dtype=float))
        return float(np.polyfit(x, logs, 1)[0])

    @property
    def residual_order(self) -> float:
        logs = np.log(np.asarray(self.residual_norms, dtype=float))
        x = np.log(DOMAIN_LENGTH / np.asarray(self.n_x, dtype=float))
        return float(np.polyfit(x, logs, 1)[0])


def _profile(n_x: int, time_shift: float = 0.0) -> np.ndarray:
    """Smooth periodic test profile sin(pi x) sampled on the mesh, advected."""
    x = -1.0 + DOMAIN_LENGTH * np.arange(n_x) / n_x
    return np.sin(np.pi * (x - time_shift))


def truncation_residual(family: str, p: int, c: float, n_x_list: Sequence[int],
                        q: Optional[int] = None,
                        tab: Optional[ButcherTableau] = None) -> TruncationReport:
    """Fit the one-step residual u(t+dt) - Phi u(t) to its leading error term.

    The leading term is K * D u(t+dt) with D the correction operator of
    order p+1; K is fitted by least squares on each mesh and compared against
    the closed-form constant:

    - method of lines (q = p):  K = -( c e_fd + (-c)^{p+1} e_rk )
    - semi-Lagrangian:          K = (-1)^{p+1} f_{p+1}(eps)
    """
    q = p if q is None else q
    if family in ("erk", "sdirk"):
        if tab is None:
            tab = tableau(family, q)
        e_rk = rk_error_constant(tab)
        predicted = -(c * error_constant_fd(p) + (-c) ** (q + 1) * e_rk)
    elif family == "semi_lagrangian":
        k = int(math.floor(c + 1e-13))
        eps = c - k
        if eps < 1e-13:
            eps = 0.0
        predicted = (-1.0) ** (p + 1) * f_poly(
            p, StencilWindow.interpolation(p, eps), eps)
    else:
        raise ValueError(f"unknown family {family!r}")

    fitted, res_norms, rem_norms = [], [], []
    for n_x in n_x_list:
        if family == "semi_lagrangian":
            stepper = sl_stepper(p, c, n_x).stepper
        else:
            spec = DiscretizationSpec(family, p, c, n_x, 1, q=q)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", StabilityWarning)
                stepper = mol_stepper(spec, tab)
        h = DOMAIN_LENGTH / n_x
        dt_shift = c * h
        u_old = _profile(n_x)
        u_new = _profile(n_x, dt_shift)
        tau = u_new - stepper.apply(u_old)
        basis = correction_operator(p, n_x).apply(u_new)
        denom = float(basis @ basis)
        K = float(tau @ basis) / denom if denom > 0 else 0.0
        fitted.append(K)
        res_norms.append(float(np.linalg.norm(tau) / math.sqrt(n_x)))
        rem_norms.append(float(np.linalg.norm(tau - K * basis) / math.sqrt(n_x)))
    return TruncationReport(list(n_x_list), fitted, predicted, res_norms,
                            rem_norms)


def global_error_order(family: str, p: int, c: float,
                       n_x_list: Sequence[int], final_time: float = 1.0,
                       q: Optional[int] = None) -> Tuple[float, list]:
    """Observed global convergence order at a fixed CFL number.

    Integrates the smooth profile to (approximately) ``final_time`` on each
    mesh and regresses the endpoint error against h in log-log coordinates.
    Returns (slope, errors).
    """
    q = p if q is None else q
    errors = []
    for n_x in n_x_list:
        h = DOMAIN_LENGTH / n_x
        dt = c * h
        n_t = max(1, round(final_time / dt))
        if family == "semi_lagrangian":
            stepper = sl_stepper(p, c, n_x).stepper
        else:
            spec = DiscretizationSpec(family, p, c, n_x, n_t, q=q)
            stepper = mol_stepper(spec)
        u = _profile(n_x)
        lam = stepper.eigenvalues()
        u = np.fft.ifft(np.fft.fft(u) * lam ** n_t).real
        exact = _profile(n_x, n_t * dt)
        errors.append(float(np.linalg.norm(u - exact) / math.sqrt(n_x)))
    x = np.log([DOMAIN_LENGTH / n for n in n_x_list])
    slope = float(np.polyfit(x, np.log(errors), 1)[0])
    return slope, errors


def modified_ideal_consistency(spec: DiscretizationSpec, m: int,
                               n_x_list: Sequence[int],
                               n_excluded: Optional[int] = None) -> Tuple[float, list]:
    """Order at which the corrected coarse symbol approaches the ideal one.

    Evaluates |mu(omega) - lambda(omega)^m| at the smallest retained mesh
    frequency on each grid and returns the log-log slope against h (expected
    at least p + 2) together with the sampled differences.
    """
    from .lfa import default_exclusion_count
    k_excl = default_exclusion_count(spec.p) if n_excluded is None else n_excluded
    j_min = k_excl // 2 + 1
    diffs = []
    for n_x in n_x_list:
        spec_n = DiscretizationSpec(spec.family, spec.p, spec.c, n_x, spec.n_t,
                                    spec.alpha, spec.q)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityWarning)
            fine = mol_stepper(spec_n)
            coarse = modified_coarse_stepper(spec_n, m)
        om = 2.0 * np.pi * j_min / n_x
        diffs.append(float(abs(coarse.symbol(om) - fine.symbol(om) ** m)))
    x = np.log([DOMAIN_LENGTH / n for n in n_x_list])
    slope = float(np.polyfit(x, np.log(diffs), 1)[0])
    return slope, diffs
