"""Circulant operator algebra on a periodic 1-D mesh.

A circulant operator is stored as a sparse stencil: a list of (offset, weight)
pairs interpreted periodically, so row ``i`` of the equivalent dense matrix has
entry ``weight`` in column ``(i + offset) mod n_x``.  All time-stepping and
difference operators in this package are circulant, which keeps their Fourier
symbols exact and makes direct solves an FFT diagonalization.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatchError, SingularOperatorError

#: weights with magnitude below this are dropped when stencils are combined
PRUNE_TOL = 1e-15

#: |symbol| below this counts as a singular mode in direct solves
SINGULAR_TOL = 1e-14

#: stencils at most this wide are applied by rolled sums; wider ones go
#: through the FFT (both are exact for circulants)
_ROLL_LIMIT = 16


def _canonical(n_x: int, offsets, weights):
    """Reduce offsets mod n_x into a balanced range, merge duplicates, prune."""
    acc = {}
    for o, w in zip(offsets, weights):
        o = int(o) % n_x
        if o >= n_x - n_x // 2:
            o -= n_x
        acc[o] = acc.get(o, 0.0) + w
    items = sorted((o, w) for o, w in acc.items() if abs(w) > PRUNE_TOL)
    if not items:
        items = [(0, 0.0)]
    off = np.array([o for o, _ in items], dtype=np.int64)
    wgt = np.array([w for _, w in items])
    if np.iscomplexobj(wgt) and np.max(np.abs(wgt.imag)) == 0.0:
        wgt = wgt.real
    return off, wgt


class CirculantOperator:
    """Periodic constant-coefficient linear operator given by a stencil.

    Instances are immutable and safe to share; all methods are pure.
    """

    __slots__ = ("n_x", "offsets", "weights", "_eig")

    def __init__(self, n_x: int, stencil: Sequence[Tuple[int, float]]):
        if n_x < 1:
            raise ValueError(f"n_x must be positive, got {n_x}")
        offsets = [o for o, _ in stencil]
        weights = [w for _, w in stencil]
        off, wgt = _canonical(n_x, offsets, weights)
        object.__setattr__(self, "n_x", int(n_x))
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "weights", wgt)
        object.__setattr__(self, "_eig", None)
        self.offsets.setflags(write=False)
        self.weights.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("CirculantOperator is immutable")

    @classmethod
    def from_arrays(cls, n_x: int, offsets, weights) -> "CirculantOperator":
        return cls(n_x, list(zip(offsets, weights)))

    @classmethod
    def identity(cls, n_x: int) -> "CirculantOperator":
        return cls(n_x, [(0, 1.0)])

    @classmethod
    def shift(cls, n_x: int, k: int) -> "CirculantOperator":
        """Cyclic shift: (S v)_i = v_{(i+k) mod n_x}."""
        return cls(n_x, [(k, 1.0)])

    @classmethod
    def from_eigenvalues(cls, n_x: int, eigenvalues,
                         prune_tol: float = PRUNE_TOL) -> "CirculantOperator":
        """Stencil whose symbol takes the given values at 2*pi*k/n_x.

        ``eigenvalues[k]`` is the desired symbol at frequency 2*pi*k/n_x in
        FFT ordering.  The inverse transform of the eigenvalue vector is the
        first row of the dense operator, read as weights at offsets 0..n_x-1.
        """
        lam = np.asarray(eigenvalues, dtype=complex)
        if lam.shape != (n_x,):
            raise DimensionMismatchError(
                f"need {n_x} eigenvalues, got shape {lam.shape}")
        # w_j = (1/n) sum_k lam_k exp(-i j omega_k): the forward transform
        row = np.fft.fft(lam) / n_x
        if np.max(np.abs(row.imag)) < 1e-12 * max(1.0, np.max(np.abs(row))):
            row = row.real
        keep = np.abs(row) > prune_tol
        return cls.from_arrays(n_x, np.nonzero(keep)[0], row[keep])

    # ------------------------------------------------------------------ algebra

    @property
    def bandwidth(self) -> int:
        return int(np.max(np.abs(self.offsets)))

    def is_real(self) -> bool:
        return not np.iscomplexobj(self.weights)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-vector product; ``v`` may be batched with shape (..., n_x)."""
        v = np.asarray(v)
        if v.shape[-1] != self.n_x:
            raise DimensionMismatchError(
                f"vector length {v.shape[-1]} != n_x {self.n_x}")
        if len(self.offsets) <= _ROLL_LIMIT:
            out = np.zeros(v.shape, dtype=np.result_type(v, self.weights))
            for o, w in zip(self.offsets, self.weights):
                out += w * np.roll(v, -int(o), axis=-1)
            return out
        return self._apply_fft(v)

    def _apply_fft(self, v: np.ndarray) -> np.ndarray:
        lam = self.eigenvalues()
        if self.is_real() and not np.iscomplexobj(v):
            half = lam[: self.n_x // 2 + 1]
            return np.fft.irfft(np.fft.rfft(v, axis=-1) * half, n=self.n_x, axis=-1)
        return np.fft.ifft(np.fft.fft(v, axis=-1) * lam, axis=-1)

    def symbol(self, omega) -> complex | np.ndarray:
        """Fourier symbol sum_j w_j exp(i j omega) of the canonical stencil.

        At admissible frequencies omega = 2*pi*k/n_x this is an eigenvalue of
        the dense operator.  Offsets are stored wrapped into a balanced range,
        so between mesh frequencies the phase refers to that representative.
        """
        om = np.asarray(omega, dtype=float)
        phases = np.exp(1j * np.multiply.outer(om, self.offsets.astype(float)))
        out = phases @ self.weights.astype(complex)
        return complex(out) if np.isscalar(omega) else out

    def eigenvalues(self) -> np.ndarray:
        """Symbol on the mesh frequencies 2*pi*k/n_x, k = 0..n_x-1 (FFT order).

        Cached after the first call (the operator is immutable).
        """
        if self._eig is None:
            eig = self.symbol(2.0 * np.pi * np.arange(self.n_x) / self.n_x)
            eig.setflags(write=False)
            object.__setattr__(self, "_eig", eig)
        return self._eig

    def dense(self) -> np.ndarray:
        """Dense matrix representation (test oracle; O(n_x^2) memory)."""
        M = np.zeros((self.n_x, self.n_x), dtype=self.weights.dtype)
        for o, w in zip(self.offsets, self.weights):
            for i in range(self.n_x):
                M[i, (i + int(o)) % self.n_x] += w
        return M

    def compose(self, other: "CirculantOperator") -> "CirculantOperator":
        """Operator product self @ other (stencil convolution)."""
        self._check_same_mesh(other)
        off = (self.offsets[:, None] + other.offsets[None, :]).ravel()
        wgt = (self.weights[:, None] * other.weights[None, :]).ravel()
        return CirculantOperator.from_arrays(self.n_x, off, wgt)

    def add(self, other: "CirculantOperator") -> "CirculantOperator":
        self._check_same_mesh(other)
        off = np.concatenate([self.offsets, other.offsets])
        wgt = np.concatenate([self.weights.astype(np.result_type(self.weights, other.weights)),
                              other.weights])
        return CirculantOperator.from_arrays(self.n_x, off, wgt)

    def scale(self, s) -> "CirculantOperator":
        return CirculantOperator.from_arrays(self.n_x, self.offsets, s * self.weights)

    def power(self, m: int) -> "CirculantOperator":
        """m-fold operator product, m >= 0 (binary exponentiation)."""
        if m < 0:
            raise ValueError(f"power requires m >= 0, got {m}")
        result = CirculantOperator.identity(self.n_x)
        base = self
        while m:
            if m & 1:
                result = result.compose(base)
            base = base.compose(base) if m > 1 else base
            m >>= 1
        return result

    def __matmul__(self, other):
        if isinstance(other, CirculantOperator):
            return self.compose(other)
        return self.apply(other)

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def __repr__(self):
        pairs = ", ".join(f"({int(o)}, {w:+.6g})"
                          for o, w in zip(self.offsets, self.weights))
        return f"CirculantOperator(n_x={self.n_x}, [{pairs}])"

    def _check_same_mesh(self, other: "CirculantOperator"):
        if self.n_x != other.n_x:
            raise DimensionMismatchError(
                f"mesh sizes differ: {self.n_x} vs {other.n_x}")

    # ------------------------------------------------------------------ solves

    def solve_direct(self, b: np.ndarray) -> np.ndarray:
        """Solve op @ x = b by FFT diagonalization (exact for circulants)."""
        b = np.asarray(b)
        if b.shape[-1] != self.n_x:
            raise DimensionMismatchError(
                f"rhs length {b.shape[-1]} != n_x {self.n_x}")
        lam = self.eigenvalues()
        bad = np.abs(lam) < SINGULAR_TOL
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularOperatorError(
                f"operator is singular: |symbol| < {SINGULAR_TOL} "
                f"at omega = 2*pi*{k}/{self.n_x}")
        if self.is_real() and not np.iscomplexobj(b):
            half = lam[: self.n_x // 2 + 1]
            return np.fft.irfft(np.fft.rfft(b, axis=-1) / half, n=self.n_x, axis=-1)
        return np.fft.ifft(np.fft.fft(b, axis=-1) / lam, axis=-1)

    def solve_gmres(self, b: np.ndarray, rel_tol: float = 1e-2,
                    max_iters: int = 20) -> "GmresResult":
        """Unrestarted GMRES with zero initial guess on a single vector."""
        if not 0.0 < rel_tol < 1.0:
            raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
        b = np.asarray(b, dtype=float)
        if b.ndim != 1 or b.shape[0] != self.n_x:
            raise DimensionMismatchError(
                f"rhs must be a vector of length {self.n_x}")
        x, res, iters, brk = _gmres_batched(self, b[None, :], rel_tol, max_iters)
        return GmresResult(x[0], int(iters), float(res[0]),
                           bool(res[0] <= rel_tol), bool(brk))


class GmresResult(NamedTuple):
    x: np.ndarray
    iterations: int
    relative_residual: float
    converged: bool
    breakdown: bool


def _gmres_batched(op: CirculantOperator, B: np.ndarray, rel_tol: float,
                   max_iters: int):
    """GMRES on many right-hand sides sharing one operator.

    Each row of ``B`` gets its own Krylov space; the Arnoldi matrix-vector
    products are batched across rows.  Breakdown (a zero Krylov vector) stops
    the affected rows with their current iterate; it is a status, not an error.

    Returns (X, relative residuals, iterations used, breakdown flag).
    """
    K, n = B.shape
    max_iters = min(max_iters, n)
    beta = np.linalg.norm(B, axis=-1)
    live = beta > 0.0
    X = np.zeros_like(B)
    if not np.any(live):
        return X, np.zeros(K), 0, False

    V = np.zeros((K, max_iters + 1, n))
    H = np.zeros((K, max_iters + 1, max_iters))
    cs = np.zeros((K, max_iters))
    sn = np.zeros((K, max_iters))
    g = np.zeros((K, max_iters + 1))
    g[:, 0] = beta
    V[live, 0] = B[live] / beta[live, None]
    res = np.where(live, 1.0, 0.0)
    active = live.copy()
    depth = np.zeros(K, dtype=int)
    breakdown = False

    j = 0
    while j < max_iters and np.any(active):
        w = op.apply(V[:, j, :])
        # modified Gram-Schmidt against the existing basis
        for i in range(j + 1):
            hij = np.einsum("kn,kn->k", w, V[:, i, :])
            H[:, i, j] = np.where(active, hij, H[:, i, j])
            w -= np.where(active, hij, 0.0)[:, None] * V[:, i, :]
        hnorm = np.linalg.norm(w, axis=-1)
        happy = active & (hnorm <= 1e-14 * beta)
        if np.any(happy):
            breakdown = True
        H[:, j + 1, j] = np.where(active, hnorm, 0.0)
        safe = np.where(hnorm > 0.0, hnorm, 1.0)
        V[:, j + 1, :] = np.where(active[:, None], w / safe[:, None], V[:, j + 1, :])
        # apply stored Givens rotations to the new column
        for i in range(j):
            t = cs[:, i] * H[:, i, j] + sn[:, i] * H[:, i + 1, j]
            H[:, i + 1, j] = -sn[:, i] * H[:, i, j] + cs[:, i] * H[:, i + 1, j]
            H[:, i, j] = t
        denom = np.hypot(H[:, j, j], H[:, j + 1, j])
        denom = np.where(denom > 0.0, denom, 1.0)
        cs[:, j] = H[:, j, j] / denom
        sn[:, j] = H[:, j + 1, j] / denom
        H[:, j, j] = cs[:, j] * H[:, j, j] + sn[:, j] * H[:, j + 1, j]
        H[:, j + 1, j] = 0.0
        g[:, j + 1] = np.where(active, -sn[:, j] * g[:, j], g[:, j + 1])
        g[:, j] = np.where(active, cs[:, j] * g[:, j], g[:, j])
        res = np.where(active, np.abs(g[:, j + 1]) / np.where(beta > 0, beta, 1.0), res)
        depth[active] = j + 1
        j += 1
        active = active & (res > rel_tol) & ~happy

    # back-substitute per row using however many columns that row completed
    for k in range(K):
        jk = int(depth[k])
        if jk == 0:
            continue
        y = np.linalg.solve(H[k, :jk, :jk], g[k, :jk])
        X[k] = y @ V[k, :jk, :]
    return X, res, j, breakdown
