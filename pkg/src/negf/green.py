"""Superoperator Green-function containers and the free propagators.

A :class:`KeldyshGF` holds the four Liouville-space components.  The stored
components are the physical branch functions::

    ll = time ordered      lr = lesser
    rl = greater           rr = anti-time ordered

so that ``ll + rr = lr + rl`` (the Keldysh identity) and the rotation to
retarded/advanced/correlation components is

    r = ll - lr,   a = ll - rl,   c = ll + rr.

The block (Liouville) Dyson equation ``G = G0 + G0 S G`` uses the self-energy
``S_ab = kappa_a kappa_b Sigma_ab`` with ``kappa_L = +1`` and ``kappa_R = -1``;
:func:`liouville_block` performs that conversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FrequencyGrid, GridFunction, bose_on_grid
from .model import JunctionSpec

KAPPA = {"L": 1, "R": -1}
COMPONENTS = ("ll", "lr", "rl", "rr")


@dataclass(frozen=True)
class KeldyshGF:
    ll: GridFunction
    lr: GridFunction
    rl: GridFunction
    rr: GridFunction
    kind: str = "electron"

    def __post_init__(self):
        if self.kind not in ("electron", "phonon"):
            raise ValueError(f"kind must be 'electron' or 'phonon', got {self.kind!r}")
        ref = self.ll
        for name in COMPONENTS[1:]:
            c = getattr(self, name)
            if c.grid != ref.grid or c.dim != ref.dim:
                raise ValueError(f"component {name} does not share grid/dimension with ll")

    @property
    def grid(self) -> FrequencyGrid:
        return self.ll.grid

    @property
    def dim(self) -> int:
        return self.ll.dim

    def components(self):
        return tuple(getattr(self, c) for c in COMPONENTS)

    def stacked(self) -> np.ndarray:
        """Array of shape ``(4, n, d, d)`` in the order ll, lr, rl, rr."""
        return np.stack([c.values for c in self.components()])

    @classmethod
    def from_stacked(cls, grid: FrequencyGrid, arr: np.ndarray, kind: str = "electron") -> "KeldyshGF":
        return cls(*(GridFunction(grid, a) for a in arr), kind=kind)

    @classmethod
    def zeros(cls, grid: FrequencyGrid, dim: int, kind: str = "electron") -> "KeldyshGF":
        z = GridFunction.zeros(grid, dim)
        return cls(z, z, z, z, kind=kind)

    def __add__(self, other: "KeldyshGF") -> "KeldyshGF":
        return KeldyshGF(*(a + b for a, b in zip(self.components(), other.components())), kind=self.kind)

    def scaled(self, s: complex) -> "KeldyshGF":
        return KeldyshGF(*(c * s for c in self.components()), kind=self.kind)


@dataclass(frozen=True)
class RakGF:
    r: GridFunction
    a: GridFunction
    c: GridFunction


def to_rak(k: KeldyshGF) -> RakGF:
    return RakGF(r=k.ll - k.lr, a=k.ll - k.rl, c=k.ll + k.rr)


def from_rak(rak: RakGF, lesser: GridFunction, kind: str = "electron") -> KeldyshGF:
    """Rebuild the four components from ``r``, ``a`` and the lesser function.

    ``rr`` is fixed by the Keldysh identity, so the result satisfies it exactly.
    """
    lr = lesser
    ll = rak.r + lr
    rl = ll - rak.a
    rr = GridFunction(lr.grid, lr.values + rl.values - ll.values)
    return KeldyshGF(ll, lr, rl, rr, kind=kind)


def keldysh_residual(k: KeldyshGF) -> float:
    """``max_w max_ij |ll + rr - lr - rl|``."""
    d = k.ll.values + k.rr.values - k.lr.values - k.rl.values
    return float(np.abs(d).max()) if d.size else 0.0


def liouville_block(k: KeldyshGF) -> KeldyshGF:
    """Multiply each component by ``kappa_a kappa_b`` (flips lr and rl)."""
    return KeldyshGF(k.ll, -k.lr, -k.rl, k.rr, kind=k.kind)


# --------------------------------------------------------------------------
# free propagators


def _resolvent(grid: FrequencyGrid, h: np.ndarray, eta: float) -> np.ndarray:
    """``[(w + i eta) I - h]^-1`` at every grid point, shape ``(n, d, d)``."""
    d = h.shape[0]
    z = (grid.omegas + 1j * eta)[:, None, None] * np.eye(d)
    return np.linalg.inv(z - h)


def electron_g0(spec: JunctionSpec, grid: FrequencyGrid) -> KeldyshGF:
    """Free electron propagator ``delta_ab [w - kappa_a E + i eta]^-1``.

    No occupation enters: ``lr = rl = 0`` and the Keldysh identity does not hold.
    """
    ll = GridFunction(grid, _resolvent(grid, spec.energy, spec.eta))
    rr = GridFunction(grid, _resolvent(grid, -spec.energy, spec.eta))
    zero = GridFunction.zeros(grid, spec.n_levels)
    return KeldyshGF(ll, zero, zero, rr, kind="electron")


def _require_phonons(spec: JunctionSpec):
    if spec.phonons is None:
        raise ValueError("the junction has no phonon modes")
    return spec.phonons


def symmetrized_phonon_retarded(omegas: np.ndarray, mode_freqs: np.ndarray, eta: float) -> np.ndarray:
    """Diagonal of ``2 W / ((w + i eta)^2 - W^2)`` for each mode, shape ``(n, n_p)``."""
    z = (omegas + 1j * eta)[:, None]
    return 2.0 * mode_freqs / (z**2 - mode_freqs**2)


def phonon_d0(spec: JunctionSpec, grid: FrequencyGrid, variant: str = "paper") -> KeldyshGF:
    """Free phonon propagator.

    ``paper``: ``-delta_ab / (w - kappa_a W + i eta)``, diagonal in the modes,
    ``lr = rl = 0``.  ``symmetrized``: the two-pole displacement propagator
    ``2W/((w + i eta)^2 - W^2)`` with lesser/greater parts filled in from the
    Bose function at the bath temperature.
    """
    ph = _require_phonons(spec)
    n_p = ph.n_modes
    w = grid.omegas[:, None]
    if variant == "paper":
        ll = np.zeros((grid.n, n_p, n_p), dtype=complex)
        rr = np.zeros_like(ll)
        idx = np.arange(n_p)
        ll[:, idx, idx] = -1.0 / (w - ph.omegas + 1j * spec.eta)
        rr[:, idx, idx] = -1.0 / (w + ph.omegas + 1j * spec.eta)
        zero = GridFunction.zeros(grid, n_p)
        return KeldyshGF(GridFunction(grid, ll), zero, zero, GridFunction(grid, rr), kind="phonon")
    if variant == "symmetrized":
        dr = symmetrized_phonon_retarded(grid.omegas, ph.omegas, spec.eta)
        r = np.zeros((grid.n, n_p, n_p), dtype=complex)
        idx = np.arange(n_p)
        r[:, idx, idx] = dr
        r = GridFunction(grid, r)
        a = r.dagger()
        nb = bose_on_grid(grid, ph.bath_temperature)
        lesser = (r - a).values * nb[:, None, None]
        return from_rak(RakGF(r, a, r + a), GridFunction(grid, lesser), kind="phonon")
    raise ValueError(f"unknown phonon propagator variant {variant!r}")


def free_propagator(spec: JunctionSpec, grid: FrequencyGrid, kind: str = "electron",
                    variant: str = "paper") -> KeldyshGF:
    """Keldysh-consistent free propagator used by the block Dyson solver.

    Keeps the time-ordered (``ll``) component of :func:`electron_g0` /
    :func:`phonon_d0` as the retarded function and completes the other three
    through the Keldysh identity with zero lesser part.  The symmetrized phonon
    propagator is already consistent and is returned as is.
    """
    if kind == "electron":
        r = electron_g0(spec, grid).ll
    elif variant == "symmetrized":
        return phonon_d0(spec, grid, "symmetrized")
    else:
        r = phonon_d0(spec, grid, "paper").ll
    lesser = GridFunction.zeros(grid, r.dim)
    return from_rak(RakGF(r, r.dagger(), r + r.dagger()), lesser, kind=kind)


def free_inverse(spec: JunctionSpec, grid: FrequencyGrid, kind: str = "electron",
                 variant: str = "paper") -> np.ndarray:
    """Inverse of the free retarded propagator, shape ``(n, d, d)``."""
    w = (grid.omegas + 1j * spec.eta)[:, None, None]
    if kind == "electron":
        return w * np.eye(spec.n_levels) - spec.energy
    ph = _require_phonons(spec)
    if variant == "paper":
        return -(w * np.eye(ph.n_modes) - np.diag(ph.omegas))
    if variant == "symmetrized":
        return (w**2 * np.eye(ph.n_modes) - np.diag(ph.omegas**2)) / (2.0 * ph.omegas)
    raise ValueError(f"unknown phonon propagator variant {variant!r}")
