"""Dyson solvers and the self-consistent Born iteration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import FrequencyGrid, GridFunction, bose_on_grid
from .green import KeldyshGF, RakGF, electron_g0, free_inverse, free_propagator, from_rak, phonon_d0
from .model import JunctionSpec, SolverOptions
from .selfenergy import (
    SelfEnergySet,
    assemble_electron_sigma,
    assemble_phonon_pi,
    bath_gamma_sigma,
    ep_sigma_electron,
    ep_sigma_phonon,
    keldysh_projected,
    lead_sigma,
)

log = logging.getLogger(__name__)


class DysonError(ArithmeticError):
    """Singular or non-finite linear solve at some frequency."""

    def __init__(self, omega: float, detail: str = "singular system"):
        self.omega = omega
        super().__init__(f"{detail} at omega = {omega:.17g}")


class ScbaDivergence(ArithmeticError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"non-finite Green function in SCBA iteration {iteration}")


def _inv(m: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    try:
        out = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        for k in range(m.shape[0]):
            try:
                np.linalg.inv(m[k])
            except np.linalg.LinAlgError:
                raise DysonError(grid.omegas[k]) from None
        raise
    bad = ~np.isfinite(out).all(axis=(1, 2))
    if bad.any():
        raise DysonError(grid.omegas[np.argmax(bad)], "non-finite inverse")
    return out


def _dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def solve_rak(spec: JunctionSpec, sigma: SelfEnergySet, grid: FrequencyGrid,
              kind: str = "electron", variant: str = "paper") -> KeldyshGF:
    """Dyson equation in the retarded/advanced/lesser form.

    ``G_r = [G0_r^-1 - Sigma_r]^-1``, ``G_a = G_r^dagger`` and
    ``G_< = G_r Sigma_< G_a + (1 + G_r Sigma_r) G0_< (1 + Sigma_a G_a)``.
    The last term vanishes unless the free propagator carries an occupation
    (the symmetrized phonon propagator).  ``kind='phonon'`` uses the phonon
    free propagator selected by ``variant``.
    """
    if sigma.grid != grid:
        raise ValueError("self-energy grid differs from the solver grid")
    sr = sigma.retarded.values
    gr = _inv(free_inverse(spec, grid, kind, variant) - sr, grid)
    ga = _dagger(gr)
    lesser = gr @ sigma.keldysh.lr.values @ ga
    if kind == "phonon" and variant == "symmetrized":
        # (1 + G_r S_r) D0_< (1 + S_a G_a) = G_r [D0_r^-1 D0_< D0_a^-1] G_a, and the
        # bracket is N(w) (D0_a^-1 - D0_r^-1) = -2i w eta N(w) / W, finite as eta -> 0
        ph = spec.phonons
        nb = bose_on_grid(grid, ph.bath_temperature)
        x = -2j * spec.eta * (grid.omegas * nb)[:, None] / ph.omegas
        eta_lesser = np.zeros_like(gr)
        idx = np.arange(ph.n_modes)
        eta_lesser[:, idx, idx] = x
        lesser = lesser + gr @ eta_lesser @ ga
    r = GridFunction(grid, gr)
    a = GridFunction(grid, ga)
    return from_rak(RakGF(r, a, r + a), GridFunction(grid, lesser), kind=kind)


def block(k: KeldyshGF) -> np.ndarray:
    """``[[ll, lr], [rl, rr]]`` as an ``(n, 2d, 2d)`` array."""
    top = np.concatenate([k.ll.values, k.lr.values], axis=2)
    bottom = np.concatenate([k.rl.values, k.rr.values], axis=2)
    return np.concatenate([top, bottom], axis=1)


def unblock(m: np.ndarray, grid: FrequencyGrid, kind: str) -> KeldyshGF:
    d = m.shape[1] // 2
    parts = (m[:, :d, :d], m[:, :d, d:], m[:, d:, :d], m[:, d:, d:])
    return KeldyshGF(*(GridFunction(grid, p) for p in parts), kind=kind)


def block_sigma(sigma: SelfEnergySet) -> np.ndarray:
    """Liouville block self-energy ``kappa_a kappa_b Sigma_ab``, Hartree folded in."""
    k = sigma.keldysh
    h = sigma.hartree
    top = np.concatenate([k.ll.values + h, -k.lr.values], axis=2)
    bottom = np.concatenate([-k.rl.values, k.rr.values - h], axis=2)
    return np.concatenate([top, bottom], axis=1)


def solve_coupled(spec: JunctionSpec, sigma: SelfEnergySet, grid: FrequencyGrid,
                  kind: str = "electron", variant: str = "paper") -> KeldyshGF:
    """Solve the four coupled Dyson relations as one ``2d x 2d`` system per frequency.

    ``(I - G0 S) G = G0`` with ``G0`` the Keldysh-consistent free propagator
    and ``S`` the block self-energy.  Independent of :func:`solve_rak`.
    """
    if sigma.grid != grid:
        raise ValueError("self-energy grid differs from the solver grid")
    g0 = block(free_propagator(spec, grid, kind, variant))
    s = block_sigma(sigma)
    lhs = np.eye(g0.shape[1]) - g0 @ s
    try:
        sol = np.linalg.solve(lhs, g0)
    except np.linalg.LinAlgError:
        for k in range(grid.n):
            try:
                np.linalg.solve(lhs[k], g0[k])
            except np.linalg.LinAlgError:
                raise DysonError(grid.omegas[k]) from None
        raise
    bad = ~np.isfinite(sol).all(axis=(1, 2))
    if bad.any():
        raise DysonError(grid.omegas[np.argmax(bad)], "non-finite solution")
    return unblock(sol, grid, kind)


def dyson_residual(spec: JunctionSpec, g: KeldyshGF, sigma: SelfEnergySet,
                   kind: str = "electron", variant: str = "paper") -> float:
    """``max |G - G0 - G0 S G|`` in block form."""
    g0 = block(free_propagator(spec, g.grid, kind, variant))
    gb = block(g)
    return float(np.abs(gb - g0 - g0 @ block_sigma(sigma) @ gb).max())


# --------------------------------------------------------------------------
# self-consistent Born iteration


@dataclass
class ScbaResult:
    g: KeldyshGF
    d: KeldyshGF | None
    sigma: SelfEnergySet
    pi: SelfEnergySet | None
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    lead_sigmas: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> FrequencyGrid:
        return self.g.grid


def _sup_diff(a: KeldyshGF | None, b: KeldyshGF | None) -> float:
    if a is None:
        return 0.0
    return float(np.abs(a.stacked() - b.stacked()).max())


def _mix(old: KeldyshGF, new: KeldyshGF, m: float) -> KeldyshGF:
    return KeldyshGF.from_stacked(old.grid, (1.0 - m) * old.stacked() + m * new.stacked(), old.kind)


def raw_occupations(g: KeldyshGF) -> np.ndarray:
    """``-i int dw/2pi G_<^ii`` without range checks."""
    w = g.grid.weights / (2.0 * np.pi)
    diag = np.einsum("w,wii->i", w, g.lr.values)
    return (-1j * diag).real


def scba_loop(spec: JunctionSpec, options: SolverOptions) -> ScbaResult:
    """Run the requested interaction order and return the (converged) Green functions.

    ``none``: leads and bath only.  ``born``: self-energies from the free
    propagators, one Dyson solve.  ``scba``: dressed electron and phonon
    propagators iterated with linear mixing from the ``none`` solution until
    the sup-norm change of all components drops to ``options.tol``.  The
    returned propagators are the Dyson solutions for the returned self-energies.
    """
    options.validate()
    grid = FrequencyGrid(options.omega_max, options.n_omega)
    variant = options.phonon_propagator
    leads = {"a": lead_sigma(spec, grid, "a"), "b": lead_sigma(spec, grid, "b")}
    lead = lead_sigma(spec, grid, "both")
    g = solve_rak(spec, lead, grid)
    phonons = spec.phonons is not None
    bath = bath_gamma_sigma(spec, grid, variant) if phonons else None
    d = solve_rak(spec, bath, grid, "phonon", variant) if phonons else None

    def finish(g, d, sigma, pi, it, hist, conv):
        return ScbaResult(g, d, sigma, pi, it, hist, conv, leads)

    if options.interaction_order == "none" or not phonons:
        return finish(g, d, lead, bath, 0, [], True)

    if variant == "paper" and options.interaction_order == "scba":
        log.warning("SCBA with the single-pole 'paper' phonon propagator is not guaranteed causal; "
                    "use phonon_propagator='symmetrized' for physical runs")
    if variant == "paper" and np.abs(spec.phonons.bath_gamma).max() > 2 * spec.eta:
        # D0_r^-1 = -(w + i eta - W): the bath width -iG/2 pushes the pole upward
        log.warning("bath_gamma > 2 eta moves the 'paper' phonon pole into the upper half plane")

    if options.interaction_order == "born":
        n = raw_occupations(g)
        g0 = electron_g0(spec, grid)
        d0 = phonon_d0(spec, grid, variant)
        sigma = assemble_electron_sigma(lead, ep_sigma_electron(g0, d0, spec, n, options.include_hartree))
        pi = assemble_phonon_pi(bath, ep_sigma_phonon(g0, spec))
        g = solve_rak(spec, sigma, grid)
        d = solve_rak(spec, pi, grid, "phonon", variant)
        return finish(g, d, sigma, pi, 0, [], True)

    # the returned G, D are the last Dyson solutions, so they satisfy the Dyson
    # equation with the returned self-energies exactly; mixing only steers the loop
    history: list[float] = []
    sigma, pi = lead, bath
    g_new, d_new = g, d
    for it in range(1, options.max_iter + 1):
        n = raw_occupations(g)
        xi = keldysh_projected(ep_sigma_electron(g, d, spec, n, options.include_hartree))
        sigma = assemble_electron_sigma(lead, xi)
        pi = assemble_phonon_pi(bath, keldysh_projected(ep_sigma_phonon(g, spec)))
        try:
            g_new = solve_rak(spec, sigma, grid)
            d_new = solve_rak(spec, pi, grid, "phonon", variant)
        except DysonError as exc:
            raise ScbaDivergence(it) from exc
        res = max(_sup_diff(g, g_new), _sup_diff(d, d_new))
        if not np.isfinite(res):
            raise ScbaDivergence(it)
        history.append(res)
        log.debug("scba iteration %d residual %.3e", it, res)
        if res <= options.tol:
            return finish(g_new, d_new, sigma, pi, it, history, True)
        g = _mix(g, g_new, options.mixing)
        d = _mix(d, d_new, options.mixing)
    return finish(g_new, d_new, sigma, pi, options.max_iter, history, False)
