"""Currents, occupations, spectral function and the elastic (Landauer) oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FrequencyGrid, GridFunction, fermi_occupation, integrate
from .green import KeldyshGF, to_rak
from .model import LeadSpec
from .selfenergy import SelfEnergySet

SPIN = 2.0
OCCUPATION_SLACK = 1e-6


class ObservableError(ValueError):
    """Inputs produced an unphysical observable."""


@dataclass(frozen=True)
class CurrentResult:
    """Contact currents in units of e * energy / hbar, spin included.

    ``current_a`` is the particle flow from lead a into the molecule.
    """

    current_a: float
    current_b: float

    @property
    def net(self) -> float:
        return 0.5 * (self.current_a - self.current_b)

    @property
    def conservation_residual(self) -> float:
        return self.current_a + self.current_b

    def as_dict(self) -> dict:
        return {
            "current_a": self.current_a,
            "current_b": self.current_b,
            "net": self.net,
            "conservation_residual": self.conservation_residual,
        }


def _check_grid(*items):
    grids = {i.grid for i in items}
    if len(grids) != 1:
        raise ValueError("inputs live on different grids")


def lead_current(g: KeldyshGF, lead_se: SelfEnergySet, grid: FrequencyGrid | None = None,
                 rtol_imag: float = 1e-8) -> float:
    """``2 int dw/2pi Tr[s_< G_> - s_> G_<]`` for a single-lead self-energy ``s``."""
    _check_grid(g, lead_se)
    if grid is not None and grid != g.grid:
        raise ValueError("grid differs from the Green-function grid")
    s = lead_se.keldysh
    inflow = np.einsum("wij,wji->w", s.lr.values, g.rl.values)
    outflow = np.einsum("wij,wji->w", s.rl.values, g.lr.values)
    total = SPIN * np.dot(g.grid.weights, inflow - outflow) / (2.0 * np.pi)
    # the two terms cancel pointwise in equilibrium, so scale by each separately
    scale = SPIN * np.dot(g.grid.weights, np.abs(inflow) + np.abs(outflow)) / (2.0 * np.pi)
    if abs(total.imag) > rtol_imag * max(scale, 1e-300):
        raise ObservableError(f"current has an imaginary part {total.imag:.3e} (inconsistent inputs)")
    return float(total.real)


def currents(g: KeldyshGF, lead_a: SelfEnergySet, lead_b: SelfEnergySet,
             rtol_imag: float = 1e-8) -> CurrentResult:
    return CurrentResult(lead_current(g, lead_a, rtol_imag=rtol_imag),
                         lead_current(g, lead_b, rtol_imag=rtol_imag))


def occupation(g: KeldyshGF, grid: FrequencyGrid | None = None) -> np.ndarray:
    """Level occupations ``n_i = -i int dw/2pi G_<^ii``.

    Values up to ``1e-6`` outside ``[0, 1]`` are clamped; larger violations
    mean the Green function is not converged or not consistent.
    """
    if g.kind != "electron":
        raise ValueError("occupations are defined for electron Green functions")
    diag = np.einsum("w,wii->i", g.grid.weights, g.lr.values) / (2.0 * np.pi)
    n = (-1j * diag).real
    if np.any(n < -OCCUPATION_SLACK) or np.any(n > 1 + OCCUPATION_SLACK):
        raise ObservableError(f"occupations {n} outside [0, 1]")
    return np.clip(n, 0.0, 1.0)


def spectral(g: KeldyshGF) -> GridFunction:
    """``A(w) = i (G_r - G_a)``."""
    rak = to_rak(g)
    return (rak.r - rak.a) * 1j


def transmission(g: KeldyshGF, gamma_a, gamma_b) -> np.ndarray:
    """Elastic transmission ``Tr[Gamma_a G_r Gamma_b G_a]`` at every grid point.

    Meaningful for non-interacting (lambda = 0) Green functions.
    """
    rak = to_rak(g)
    ga = np.asarray(gamma_a, dtype=float)
    gb = np.asarray(gamma_b, dtype=float)
    t = np.einsum("ij,wjk,kl,wli->w", ga, rak.r.values, gb, rak.a.values)
    return t.real


def landauer_current(t, lead_a: LeadSpec, lead_b: LeadSpec, grid: FrequencyGrid) -> float:
    """``2 int dw/2pi T(w) (f_a(w) - f_b(w))`` with the same quadrature as :func:`lead_current`."""
    t = np.real(t.values[:, 0, 0] if isinstance(t, GridFunction) else t).astype(float)
    fa = fermi_occupation(grid.omegas, lead_a.mu, lead_a.temperature)
    fb = fermi_occupation(grid.omegas, lead_b.mu, lead_b.temperature)
    return float(SPIN * np.dot(grid.weights, t * (fa - fb)) / (2.0 * np.pi))


def spectral_weight(g: KeldyshGF) -> np.ndarray:
    """``int dw/2pi A_ii`` for every level (1 for a complete grid)."""
    return (np.diagonal(integrate(spectral(g))) / (2.0 * np.pi)).real
