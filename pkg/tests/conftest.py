import numpy as np
import pytest

from negf.grid import FrequencyGrid
from negf.model import JunctionSpec, LeadSpec, PhononSpec, SolverOptions


def resonant_level(eps=0.0, gamma_a=0.5, gamma_b=0.5, mu_a=0.0, mu_b=0.0, temperature=0.0, eta=1e-12):
    return JunctionSpec(
        energy=[[eps]],
        lead_a=LeadSpec([[gamma_a]], mu_a, temperature),
        lead_b=LeadSpec([[gamma_b]], mu_b, temperature),
        eta=eta,
    )


def single_mode(lam=0.2, omega=1.0, bath=0.1, temperature=0.05, eps=0.0, gamma=0.5, eta=1e-6):
    """Single level, single mode; ``gamma`` is the width of each lead."""
    return JunctionSpec(
        energy=[[eps]],
        lead_a=LeadSpec([[gamma]], 0.0, temperature),
        lead_b=LeadSpec([[gamma]], 0.0, temperature),
        phonons=PhononSpec([omega], [[lam]], [[bath]], temperature),
        eta=eta,
    )


def two_level_two_mode(eta=0.05, seed=3):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=(2, 2))
    e = 0.5 * (e + e.T)
    return JunctionSpec(
        energy=e,
        lead_a=LeadSpec([[0.4, 0.1], [0.1, 0.2]], 0.3, 0.1),
        lead_b=LeadSpec([[0.2, 0.0], [0.0, 0.5]], -0.3, 0.1),
        phonons=PhononSpec([0.7, 1.3], rng.normal(scale=0.3, size=(2, 2)), [[0.1, 0.02], [0.02, 0.05]], 0.2),
        eta=eta,
    )


def scba_options(**kw):
    base = dict(omega_max=15.0, n_omega=3001, max_iter=100, tol=1e-8, mixing=0.5,
                interaction_order="scba", phonon_propagator="symmetrized", include_hartree=True)
    base.update(kw)
    return SolverOptions(**base)


def random_physical_sigma(grid, dim, rng, kind="electron"):
    """Self-energy with a dissipative retarded part and consistent lesser/greater parts."""
    from negf.green import RakGF, from_rak
    from negf.grid import GridFunction

    n = grid.n
    h = rng.normal(size=(n, dim, dim)) + 1j * rng.normal(size=(n, dim, dim))
    herm = 0.5 * (h + np.conj(np.swapaxes(h, 1, 2)))
    x = rng.normal(size=(n, dim, dim)) + 1j * rng.normal(size=(n, dim, dim))
    psd = x @ np.conj(np.swapaxes(x, 1, 2)) + 0.1 * np.eye(dim)
    r = GridFunction(grid, 0.3 * herm - 0.5j * psd)
    f = rng.uniform(size=(n, 1, 1))
    lesser = GridFunction(grid, 1j * psd * f)
    return from_rak(RakGF(r, r.dagger(), r + r.dagger()), lesser, kind=kind)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    return FrequencyGrid(10.0, 401)
