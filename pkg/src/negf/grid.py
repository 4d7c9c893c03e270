"""Uniform frequency grid, quadrature, convolution and thermal occupations.

All integrals on the grid use the trapezoid rule.  ``integrate`` returns the
bare integral over omega; ``convolve`` and ``correlate`` already include the
``1/(2 pi)`` of the frequency-space measure ``d omega' / 2 pi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import expit


class GridMismatchError(ValueError):
    """Two grid functions live on different frequency grids."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric uniform grid ``omega_k = -omega_max + k * step`` with odd ``n``."""

    omega_max: float
    n: int

    def __post_init__(self):
        if not self.omega_max > 0:
            raise ValueError(f"omega_max must be positive, got {self.omega_max}")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"n must be an odd integer >= 3, got {self.n}")

    @property
    def step(self) -> float:
        return 2.0 * self.omega_max / (self.n - 1)

    @property
    def center(self) -> int:
        """Index of omega = 0."""
        return (self.n - 1) // 2

    @property
    def omegas(self) -> np.ndarray:
        # built from integer offsets so that omega[center] == 0.0 exactly
        return (np.arange(self.n) - self.center) * self.step

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights including the spacing."""
        w = np.full(self.n, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A ``d x d`` complex matrix at every grid point, ``values.shape == (n, d, d)``."""

    grid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[0] != self.grid.n or v.shape[1] != v.shape[2]:
            raise ValueError(
                f"values must have shape ({self.grid.n}, d, d), got {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zeros(cls, grid: FrequencyGrid, dim: int) -> "GridFunction":
        return cls(grid, np.zeros((grid.n, dim, dim), dtype=complex))

    @classmethod
    def constant(cls, grid: FrequencyGrid, matrix) -> "GridFunction":
        m = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls(grid, np.broadcast_to(m, (grid.n,) + m.shape).copy())

    @classmethod
    def from_scalar(cls, grid: FrequencyGrid, values) -> "GridFunction":
        return cls(grid, np.asarray(values, dtype=complex).reshape(grid.n, 1, 1))

    def _check(self, other: "GridFunction"):
        if other.grid != self.grid:
            raise GridMismatchError(f"{self.grid} != {other.grid}")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __mul__(self, scalar) -> "GridFunction":
        return GridFunction(self.grid, complex(scalar) * self.values)

    __rmul__ = __mul__

    def dagger(self) -> "GridFunction":
        """Pointwise conjugate transpose."""
        return GridFunction(self.grid, np.conj(np.swapaxes(self.values, 1, 2)))

    def mirrored(self) -> "GridFunction":
        """``f(-omega)``; exact on the symmetric grid."""
        return GridFunction(self.grid, self.values[::-1])

    def at(self, omega: float) -> np.ndarray:
        """Matrix at the grid point closest to ``omega``."""
        k = int(round(omega / self.grid.step)) + self.grid.center
        if not 0 <= k < self.grid.n:
            raise IndexError(f"omega={omega} outside the grid")
        return self.values[k]


def fermi_occupation(omega, mu: float, temperature: float):
    """Fermi function ``1/(exp((omega - mu)/T) + 1)``; a step (1/2 at mu) for T = 0."""
    if temperature < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature}")
    x = np.asarray(omega, dtype=float) - mu
    if temperature == 0:
        # treat rounding-level offsets as a tie so that mu = k * step lands on the grid point
        tie = np.abs(x) <= 1e-12 * max(1.0, abs(mu), float(np.abs(omega).max(initial=0.0)))
        out = np.where(tie, 0.5, np.where(x < 0, 1.0, 0.0))
    else:
        with np.errstate(over="ignore"):
            out = expit(-x / temperature)
    return out if out.ndim else float(out)


def bose_occupation(omega, temperature: float):
    """Bose function ``1/(exp(omega/T) - 1)``.

    At ``T = 0`` this is 0 for ``omega > 0`` and -1 for ``omega < 0`` (the
    analytic continuation used by fluctuation-dissipation relations).
    ``omega = 0`` with ``T > 0`` is a pole and raises ``ZeroDivisionError``.
    """
    if temperature < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature}")
    w = np.asarray(omega, dtype=float)
    if temperature == 0:
        if np.any(w == 0):
            raise ZeroDivisionError("Bose function undefined at omega = 0")
        out = np.where(w > 0, 0.0, -1.0)
    else:
        if np.any(w == 0):
            raise ZeroDivisionError("Bose function diverges at omega = 0 for T > 0")
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(w / temperature)
    return out if out.ndim else float(out)


def integrate(f: GridFunction) -> np.ndarray:
    """Trapezoid integral over the whole grid. No ``1/(2 pi)`` factor."""
    return np.tensordot(f.grid.weights, f.values, axes=(0, 0))


def _centered_conv(a: np.ndarray, b: np.ndarray, method: str) -> np.ndarray:
    """``sum_j a[j] b[k - j + c]`` for k = 0..n-1 along axis 0, zero outside.

    ``a`` and ``b`` broadcast over trailing axes; the product is elementwise.
    """
    n = a.shape[0]
    c = (n - 1) // 2
    if method == "fft":
        full = fftconvolve(a, b, axes=0)
    elif method == "direct":
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        a2 = np.broadcast_to(a, (n,) + shape).reshape(n, -1)
        b2 = np.broadcast_to(b, (n,) + shape).reshape(n, -1)
        full = np.empty((2 * n - 1, a2.shape[1]), dtype=np.result_type(a2, b2))
        for col in range(a2.shape[1]):
            full[:, col] = np.convolve(a2[:, col], b2[:, col])
        full = full.reshape((2 * n - 1,) + shape)
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    return full[c : c + n]


def _prepare(A: GridFunction, B: GridFunction):
    if A.grid != B.grid:
        raise GridMismatchError(f"{A.grid} != {B.grid}")
    g = A.grid
    wa = A.values * (g.weights / (2.0 * np.pi))[:, None, None]
    return g, wa


def convolve(A: GridFunction, B: GridFunction, method: str = "direct") -> GridFunction:
    """``C(w) = int dw'/2pi A(w') B(w - w')`` with the matrix product ``A @ B``.

    Trapezoid weights act on the ``w'`` sum; ``B`` is zero off the grid.
    ``method='fft'`` is the fast path and agrees with ``'direct'`` to rounding.
    """
    g, wa = _prepare(A, B)
    if A.dim != B.dim:
        raise ValueError("incompatible matrix dimensions")
    # (A @ B)_im = sum_j A_ij * B_jm, each a scalar convolution
    prod = _centered_conv(wa[:, :, :, None], B.values[:, None, :, :], method)
    return GridFunction(g, prod.sum(axis=2))


def convolve_elementwise(A: GridFunction, B: GridFunction, method: str = "direct") -> GridFunction:
    """Like :func:`convolve` but with the entrywise product ``A_ij B_ij``."""
    g, wa = _prepare(A, B)
    return GridFunction(g, _centered_conv(wa, B.values, method))


def correlate_elementwise(A: GridFunction, B: GridFunction, method: str = "direct") -> GridFunction:
    """``C_ij(w) = int dw'/2pi A_ij(w') B_ij(w' - w)``."""
    return convolve_elementwise(A, B.mirrored(), method)


def bose_on_grid(grid: FrequencyGrid, temperature: float) -> np.ndarray:
    """Bose function at every grid point.

    The pole at omega = 0 is replaced by the average over ``+-step/2``, which
    is exactly -1/2 for any temperature.
    """
    w = grid.omegas.copy()
    c = grid.center
    w[c] = 0.5 * grid.step
    out = bose_occupation(w, temperature)
    out[c] = 0.5 * (out[c] + bose_occupation(-0.5 * grid.step, temperature))
    return out
