"""Self-energies: wide-band leads, phonon bath and second-order electron-phonon terms.

Every :class:`SelfEnergySet` stores physical branch components, the same
convention as :class:`~negf.green.KeldyshGF`.  The electron-phonon formulas
are usually written for the Liouville block self-energy, which carries an
extra ``kappa_a kappa_b``; see :func:`negf.green.liouville_block`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    FrequencyGrid,
    GridFunction,
    bose_occupation,
    bose_on_grid,
    convolve_elementwise,
    correlate_elementwise,
    GridMismatchError,
    fermi_occupation,
)
from .green import COMPONENTS, KeldyshGF
from .model import JunctionSpec, LeadSpec


@dataclass(frozen=True)
class SelfEnergySet:
    """Keldysh components plus a static (Hartree) matrix.

    ``hartree`` is kept apart until :func:`assemble_electron_sigma` folds it
    into the retarded part.
    """

    keldysh: KeldyshGF
    hartree: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.hartree is None:
            object.__setattr__(self, "hartree", np.zeros((self.dim, self.dim), dtype=complex))

    @property
    def grid(self) -> FrequencyGrid:
        return self.keldysh.grid

    @property
    def dim(self) -> int:
        return self.keldysh.dim

    @property
    def retarded(self) -> GridFunction:
        """``ll - lr`` plus the Hartree shift."""
        return self.keldysh.ll - self.keldysh.lr + GridFunction.constant(self.grid, self.hartree)

    @classmethod
    def zeros(cls, grid: FrequencyGrid, dim: int, kind: str = "electron") -> "SelfEnergySet":
        return cls(KeldyshGF.zeros(grid, dim, kind))


def _wide_band(grid: FrequencyGrid, gamma: np.ndarray, lesser: np.ndarray,
               greater: np.ndarray, kind: str) -> KeldyshGF:
    """Set with purely imaginary retarded part ``-(i/2) gamma`` (``gamma`` may vary with omega).

    Callers guarantee ``greater - lesser = -i gamma``; ``rr`` closes the
    Keldysh identity.
    """
    ll = -0.5j * np.asarray(gamma) + lesser
    rr = lesser + greater - ll
    return KeldyshGF(*(GridFunction(grid, v) for v in (ll, lesser, greater, rr)), kind=kind)


def lead_sigma(spec: JunctionSpec, grid: FrequencyGrid, which: str = "both") -> SelfEnergySet:
    """Wide-band lead self-energy of lead ``a``, ``b`` or ``both``.

    retarded ``-(i/2) Gamma``, lesser ``i Gamma f``, greater ``-i Gamma (1 - f)``.
    """
    leads: list[LeadSpec] = {"a": [spec.lead_a], "b": [spec.lead_b], "both": [spec.lead_a, spec.lead_b]}[which]
    n, d = grid.n, spec.n_levels
    gamma = np.zeros((d, d))
    lesser = np.zeros((n, d, d), dtype=complex)
    greater = np.zeros((n, d, d), dtype=complex)
    for lead in leads:
        f = fermi_occupation(grid.omegas, lead.mu, lead.temperature)[:, None, None]
        gamma = gamma + lead.gamma
        lesser += 1j * lead.gamma * f
        greater += -1j * lead.gamma * (1.0 - f)
    return SelfEnergySet(_wide_band(grid, gamma, lesser, greater, "electron"))


def bath_gamma_sigma(spec: JunctionSpec, grid: FrequencyGrid, variant: str = "paper") -> SelfEnergySet:
    """Damping of the primary phonons by the secondary-phonon bath.

    ``paper``: wide-band form, retarded ``-(i/2) G``, lesser ``-i G N``,
    greater ``-i G (N + 1)`` with the Bose function ``N`` at the bath
    temperature (regularized at omega = 0).

    ``symmetrized``: ohmic form ``G -> G w / sqrt(W_l W_l')``, which equals the
    wide-band width at the mode frequency but is odd in omega and analytic,
    as the displacement propagator requires.
    """
    ph = spec.phonons
    if ph is None:
        raise ValueError("the junction has no phonon modes")
    g = ph.bath_gamma
    w = grid.omegas
    if variant == "paper":
        nb = bose_on_grid(grid, ph.bath_temperature)[:, None, None]
        gw = np.broadcast_to(g, (grid.n,) + g.shape)
        lesser = -1j * gw * nb
        greater = -1j * gw * (nb + 1.0)
    elif variant == "symmetrized":
        scale = g / np.sqrt(np.outer(ph.omegas, ph.omegas))
        gw = w[:, None, None] * scale
        # w N(w) -> T at w = 0 (and -> 0 for T = 0)
        wn = np.empty_like(w)
        nz = w != 0
        wn[nz] = w[nz] * bose_occupation(w[nz], ph.bath_temperature)
        wn[~nz] = ph.bath_temperature
        lesser = -1j * wn[:, None, None] * scale
        greater = lesser + -1j * gw
    else:
        raise ValueError(f"unknown phonon propagator variant {variant!r}")
    return SelfEnergySet(_wide_band(grid, gw, lesser, greater, "phonon"))


def _check_same_grid(*objs):
    grids = {o.grid for o in objs}
    if len(grids) != 1:
        raise GridMismatchError("inputs live on different grids")


def ep_sigma_electron(g: KeldyshGF, d: KeldyshGF, spec: JunctionSpec, occupations,
                      include_hartree: bool = True, method: str = "fft") -> SelfEnergySet:
    """Second-order electron self-energy from phonon exchange.

    Fock part, for every branch pair ``ab`` and levels ``ij``::

        Xi_ab^ij(w) = i sum_{l1 l2} lam[l1,i] lam[l2,j]
                      int dw'/2pi D_ab^{l1 l2}(w') G_ab^ij(w - w')

    (entrywise in ``ij``).  The Hartree part is the static matrix
    ``delta_ij sum lam[l1,i] lam[l2,i1] n[i1] Re D_r^{l1 l2}(0)``.
    """
    _check_same_grid(g, d)
    lam = spec.phonons.coupling
    out = []
    for name in COMPONENTS:
        dv = getattr(d, name).values
        kernel = GridFunction(g.grid, np.einsum("li,wlm,mj->wij", lam, dv, lam))
        out.append(convolve_elementwise(kernel, getattr(g, name), method) * 1j)
    fock = KeldyshGF(*out, kind="electron")
    hartree = np.zeros((g.dim, g.dim), dtype=complex)
    if include_hartree:
        c = g.grid.center
        dr0 = (d.ll.values[c] - d.lr.values[c]).real
        n = np.asarray(occupations, dtype=float)
        hartree = np.diag(lam.T @ dr0 @ (lam @ n)).astype(complex)
    return SelfEnergySet(fock, hartree)


def ep_sigma_phonon(g: KeldyshGF, spec: JunctionSpec, method: str = "fft") -> SelfEnergySet:
    """Electron-hole bubble::

        Lam_ab^{ll'}(w) = -i sum_ij lam[l,i] lam[l',j]
                          int dw'/2pi G_ab^ij(w') G_ba^ji(w' - w)

    The static tadpole term is not included.
    """
    lam = spec.phonons.coupling
    swap = {"ll": "ll", "lr": "rl", "rl": "lr", "rr": "rr"}
    out = []
    for name in COMPONENTS:
        a = getattr(g, name)
        b = getattr(g, swap[name])
        bt = GridFunction(g.grid, np.swapaxes(b.values, 1, 2))
        bubble = correlate_elementwise(a, bt, method).values
        out.append(GridFunction(g.grid, -1j * np.einsum("li,wij,mj->wlm", lam, bubble, lam)))
    return SelfEnergySet(KeldyshGF(*out, kind="phonon"))


def keldysh_projected(se: SelfEnergySet) -> SelfEnergySet:
    """Restore the Keldysh identity of a convolved self-energy.

    Keeps ``lr``, ``rl`` and the Hermitian part of the retarded function
    ``ll - lr``; the anti-Hermitian part is replaced by ``(rl - lr)/2`` so that
    ``S_r - S_a = S_> - S_<`` holds exactly (for anti-Hermitian ``lr`` and ``rl``,
    as every physical self-energy has).  The convolution tails of the
    time-ordered components decay only like ``1/omega`` and otherwise leak
    particles through the grid edges.
    """
    k = se.keldysh
    r = (k.ll - k.lr).values
    herm = 0.5 * (r + np.conj(np.swapaxes(r, 1, 2)))
    r = herm + 0.5 * (k.rl.values - k.lr.values)
    ll = r + k.lr.values
    rr = k.lr.values + k.rl.values - ll
    grid = se.grid
    out = KeldyshGF(GridFunction(grid, ll), k.lr, k.rl, GridFunction(grid, rr), kind=k.kind)
    return SelfEnergySet(out, se.hartree)


def _assemble(first: SelfEnergySet, second: SelfEnergySet) -> SelfEnergySet:
    if first.grid != second.grid or first.dim != second.dim:
        raise ValueError("self-energies must share grid and dimension")
    h = GridFunction.constant(first.grid, first.hartree + second.hartree)
    s = first.keldysh + second.keldysh
    k = KeldyshGF(s.ll + h, s.lr, s.rl, s.rr - h, kind=first.keldysh.kind)
    return SelfEnergySet(k)


def assemble_electron_sigma(lead: SelfEnergySet, ep: SelfEnergySet) -> SelfEnergySet:
    """Total electron self-energy; the static part is added to ``ll`` and removed from ``rr``."""
    return _assemble(lead, ep)


def assemble_phonon_pi(bath: SelfEnergySet, ep: SelfEnergySet) -> SelfEnergySet:
    """Total phonon self-energy."""
    return _assemble(bath, ep)
