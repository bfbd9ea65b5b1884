"""Mode-by-mode two-level convergence analysis on the infinite time grid.

For spatial frequency omega, let lambda(omega) and mu(omega) be the symbols
of the fine and coarse steppers.  The convergence factor of the space-time
mode (omega, theta) under F(CF)^nu relaxation and coarsening factor m is

    |lambda|^(m nu) * |lambda^m - mu| / |1 - exp(-i m theta) mu|,

and its worst case over the low temporal frequencies theta is obtained by
replacing the denominator with 1 - |mu|.  The worst case over omega predicts
the asymptotic two-level convergence factor; a closed-form lower bound along
the characteristic direction theta = -omega*c is available for odd-order
discretizations rediscretized on the coarse grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SingularOperatorError
from .stepping import Stepper

#: denominators smaller than this mean the mode is not damped at all
DENOM_TOL = 1e-13


def default_exclusion_count(p: int) -> int:
    """How many near-zero frequencies to drop from worst-case scans.

    The eigenvalues at the smoothest retained modes sit within rounding
    distance of the unit circle, which makes the quotient numerically
    meaningless there; higher-order discretizations need a wider guard band.
    """
    return 2 if p <= 2 else 10


def sample_frequencies(n_samples: int = 2 ** 11,
                       n_excluded: int = 2) -> np.ndarray:
    """Uniform samples of [-pi, pi) with omega = 0 and the ``n_excluded``
    nearest frequencies removed."""
    om = -np.pi + 2.0 * np.pi * np.arange(n_samples) / n_samples
    order = np.argsort(np.abs(om), kind="stable")
    drop = order[: n_excluded + 1]
    keep = np.ones(n_samples, dtype=bool)
    keep[drop] = False
    return om[keep]


def rho_mode(lam: complex, mu: complex, m: int, nu: int, theta: float) -> float:
    """Convergence factor of a single space-time mode (omega, theta)."""
    denom = abs(1.0 - np.exp(-1j * m * theta) * mu)
    if denom <= DENOM_TOL:
        return math.inf
    return float(abs(lam) ** (m * nu) * abs(lam ** m - mu) / denom)


@dataclass
class LfaSweep:
    """Per-mode and worst-case two-level convergence factors."""

    omega: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    rho_e: float
    argmax_omega: float
    m: int
    nu: int
    n_excluded: int
    divergent: bool
    params: dict = field(default_factory=dict)


def rho_two_level(fine_symbol: Callable[[np.ndarray], np.ndarray],
                  coarse_symbol: Callable[[np.ndarray], np.ndarray],
                  m: int, nu: int, n_samples: int = 2 ** 11,
                  n_excluded: int = 2, params: Optional[dict] = None) -> LfaSweep:
    """Worst-case two-level convergence factor over all space-time modes.

    Evaluates |lambda|^(m nu) |lambda^m - mu| / (1 - |mu|) on the retained
    frequency samples.  Samples with |mu| >= 1 are recorded as +inf and mark
    the sweep divergent rather than being clipped.  Ties in the maximum are
    resolved toward the smallest frequency.
    """
    om = sample_frequencies(n_samples, n_excluded)
    if om.size == 0:
        raise ValueError("all frequency samples were excluded")
    lam = np.asarray(fine_symbol(om), dtype=complex)
    mu = np.asarray(coarse_symbol(om), dtype=complex)
    amp = np.abs(lam) ** (m * nu)
    numer = np.abs(lam ** m - mu)
    denom = 1.0 - np.abs(mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(denom > DENOM_TOL, amp * numer / denom, np.inf)
    order = np.argsort(np.abs(om), kind="stable")
    best = order[int(np.argmax(rho[order]))]
    return LfaSweep(om, lam, mu, rho, float(np.max(rho)), float(om[best]),
                    m, nu, n_excluded, bool(np.any(~np.isfinite(rho))),
                    dict(params or {}))


def rho_two_level_steppers(fine: Stepper, coarse: Stepper, m: int, nu: int,
                           n_samples: int = 2 ** 11, n_excluded: int = 2,
                           params: Optional[dict] = None) -> LfaSweep:
    return rho_two_level(fine.symbol, coarse.symbol, m, nu, n_samples,
                         n_excluded, params)


def rho_check(p: int, c: float, m: int, e_rk_fine: float, e_rk_coarse: float,
              e_fd: float) -> float:
    """Characteristic-component lower bound for rediscretized coarse grids.

        c^p | (e_rk_fine - m^p e_rk_coarse) / (e_fd + (mc)^p e_rk_coarse) |

    Valid for odd p; grows from O((mc)^p) at small coarse CFL numbers to
    |1 - m^{-p} e_rk_fine / e_rk_coarse| as mc tends to infinity.
    """
    if p % 2 != 1:
        raise ValueError(f"the bound requires odd p, got {p}")
    denom = e_fd + (m * c) ** p * e_rk_coarse
    if denom == 0.0:
        raise SingularOperatorError("lower-bound denominator vanishes")
    return float(c ** p * abs((e_rk_fine - m ** p * e_rk_coarse) / denom))


@dataclass
class LowerBoundRow:
    c: float
    rho_lfa: float
    rho_bound: float
    bound_holds: bool
    tight: bool
    nu_spread: float


@dataclass
class LowerBoundReport:
    m: int
    nu: int
    rows: list

    @property
    def all_hold(self) -> bool:
        return all(r.bound_holds for r in self.rows)


def verify_lower_bound(fine_symbol_at: Callable[[float], Callable],
                       coarse_symbol_at: Callable[[float], Callable],
                       bound_at: Callable[[float], float],
                       c_grid: Sequence[float], m: int, nu: int,
                       n_samples: int = 2 ** 11, n_excluded: int = 2,
                       headroom: float = 0.05,
                       tight_ratio: float = 0.9) -> LowerBoundReport:
    """Check rho(E) >= (1 - headroom) * bound across a CFL sweep.

    ``fine_symbol_at(c)`` and ``coarse_symbol_at(c)`` build the symbol
    closures for a given fine CFL number.  Also evaluates the characteristic
    mode theta = -omega*c at the smallest retained frequency for
    nu in {0, 1, 2} and reports the relative spread, which should be small:
    relaxation cannot damp these modes.
    """
    rows = []
    for c in c_grid:
        lam_fn = fine_symbol_at(c)
        mu_fn = coarse_symbol_at(c)
        sweep = rho_two_level(lam_fn, mu_fn, m, nu, n_samples, n_excluded)
        bound = bound_at(c)
        om0 = 2.0 * np.pi * (n_excluded // 2 + 1) / n_samples
        lam0 = complex(np.asarray(lam_fn(np.array([om0])))[0])
        mu0 = complex(np.asarray(mu_fn(np.array([om0])))[0])
        vals = [rho_mode(lam0, mu0, m, nv, -om0 * c) for nv in (0, 1, 2)]
        finite = [v for v in vals if math.isfinite(v)]
        if finite and max(finite) > 0:
            spread = (max(finite) - min(finite)) / max(finite)
        else:
            spread = math.inf
        holds = sweep.rho_e >= (1.0 - headroom) * bound
        tight = bound >= tight_ratio * sweep.rho_e if math.isfinite(sweep.rho_e) else False
        rows.append(LowerBoundRow(float(c), sweep.rho_e, float(bound), holds,
                                  tight, float(spread)))
    return LowerBoundReport(m, nu, rows)


# ------------------------------------------------- smooth-mode symbol estimates

@dataclass
class EigenvalueEstimateReport:
    """Deviation of exact symbols from their leading-order smooth-mode form."""

    n_x: list
    fine_deviation: list
    ideal_deviation: list
    coarse_deviation: list

    def _slope(self, devs) -> float:
        x = np.log(1.0 / np.asarray(self.n_x, dtype=float))
        return float(np.polyfit(x, np.log(np.asarray(devs, dtype=float)), 1)[0])

    @property
    def fine_order(self) -> float:
        return self._slope(self.fine_deviation)

    @property
    def ideal_order(self) -> float:
        return self._slope(self.ideal_deviation)

    @property
    def coarse_order(self) -> float:
        return self._slope(self.coarse_deviation)


def validate_eigenvalue_estimates(p: int, c: float, m: int,
                                  e_fd: float, e_rk_fine: float,
                                  e_rk_coarse: float,
                                  fine_symbol: Callable,
                                  coarse_symbol: Callable,
                                  n_x_list: Sequence[int],
                                  n_modes: int = 8) -> EigenvalueEstimateReport:
    """Compare exact symbols with their smooth-mode expansions (odd p).

    The fine symbol should satisfy
        lambda(omega) = exp(-i c omega) [1 + (-1)^((p+1)/2) c (e_fd + c^p e_rk) omega^(p+1) + ...]
    with the m-step and coarse variants obtained by m-fold amplification and
    by the substitution c -> m c.  The report records, per mesh, the maximum
    relative deviation of the bracketed correction term over the smoothest
    retained modes; the deviations should shrink at observed order >= 1.
    """
    if p % 2 != 1:
        raise ValueError(f"estimates require odd p, got {p}")
    sign = (-1.0) ** ((p + 1) // 2)
    k_excl = default_exclusion_count(p)
    fine_dev, ideal_dev, coarse_dev = [], [], []
    for n_x in n_x_list:
        j0 = k_excl // 2 + 1
        om = 2.0 * np.pi * np.arange(j0, j0 + n_modes) / n_x
        lam = np.asarray(fine_symbol(om), dtype=complex)
        mu = np.asarray(coarse_symbol(om), dtype=complex)
        # fine: single step at CFL c
        term_f = sign * c * (e_fd + c ** p * e_rk_fine) * om ** (p + 1)
        dev_f = np.abs(lam * np.exp(1j * om * c) - 1.0 - term_f) / np.abs(term_f)
        # ideal: m steps at CFL c
        term_i = sign * m * c * (e_fd + c ** p * e_rk_fine) * om ** (p + 1)
        dev_i = np.abs(lam ** m * np.exp(1j * om * m * c) - 1.0 - term_i) / np.abs(term_i)
        # coarse: one step at CFL m c
        term_c = sign * m * c * (e_fd + (m * c) ** p * e_rk_coarse) * om ** (p + 1)
        dev_c = np.abs(mu * np.exp(1j * om * m * c) - 1.0 - term_c) / np.abs(term_c)
        fine_dev.append(float(np.max(dev_f)))
        ideal_dev.append(float(np.max(dev_i)))
        coarse_dev.append(float(np.max(dev_c)))
    return EigenvalueEstimateReport(list(n_x_list), fine_dev, ideal_dev,
                                    coarse_dev)


def classify(p: int, q: Optional[int] = None) -> str:
    """Dissipative or dispersive, by the parity of the dominant-error
    derivative order (the smaller of the spatial and temporal orders)."""
    q = p if q is None else q
    xi = min(p, q)
    return "dissipative" if xi % 2 == 1 else "dispersive"
