import numpy as np
import pytest

from negf.dyson import (
    DysonError,
    ScbaDivergence,
    dyson_residual,
    scba_loop,
    solve_coupled,
    solve_rak,
)
from negf.green import KeldyshGF, electron_g0, free_propagator, keldysh_residual, to_rak
from negf.grid import FrequencyGrid, GridFunction, fermi_occupation
from negf.model import ConfigError, JunctionSpec, LeadSpec, SolverOptions
from negf.selfenergy import SelfEnergySet, bath_gamma_sigma, lead_sigma

from conftest import random_physical_sigma, resonant_level, scba_options, single_mode, two_level_two_mode


def max_diff(a: KeldyshGF, b: KeldyshGF) -> float:
    return float(np.abs(a.stacked() - b.stacked()).max())


class TestSolveRak:
    def test_zero_sigma(self):
        spec = resonant_level(eps=0.3, eta=0.01)
        grid = FrequencyGrid(5.0, 201)
        g = solve_rak(spec, SelfEnergySet.zeros(grid, 1), grid)
        np.testing.assert_allclose(to_rak(g).r.values, electron_g0(spec, grid).ll.values, atol=1e-12)
        assert np.all(g.lr.values == 0)

    def test_wide_band_resolvent(self):
        spec = resonant_level(eps=0.0, gamma_a=0.5, gamma_b=0.5, eta=1e-12)
        grid = FrequencyGrid(5.0, 201)
        g = solve_rak(spec, lead_sigma(spec, grid), grid)
        w = grid.omegas
        np.testing.assert_allclose(to_rak(g).r.values[:, 0, 0], 1 / (w + 0.5j), atol=1e-10)
        a = (1j * (to_rak(g).r - to_rak(g).a)).values[:, 0, 0]
        np.testing.assert_allclose(a, 1.0 / (w**2 + 0.25), atol=1e-10)

    def test_equilibrium_lesser(self):
        eps, t = 0.2, 0.1
        spec = resonant_level(eps=eps, mu_a=0.0, mu_b=0.0, temperature=t, eta=1e-12)
        grid = FrequencyGrid(5.0, 201)
        g = solve_rak(spec, lead_sigma(spec, grid), grid)
        w = grid.omegas
        f = fermi_occupation(w, 0.0, t)
        np.testing.assert_allclose(g.lr.values[:, 0, 0], 1j * f * 1.0 / ((w - eps)**2 + 0.25), atol=1e-10)
        assert keldysh_residual(g) < 1e-10

    def test_advanced_is_adjoint(self, rng):
        spec = two_level_two_mode()
        grid = FrequencyGrid(5.0, 201)
        g = solve_rak(spec, lead_sigma(spec, grid), grid)
        rak = to_rak(g)
        assert np.abs(rak.a.values - rak.r.dagger().values).max() < 1e-12

    def test_singular(self):
        # a retarded self-energy +i eta cancels the broadening at the level
        spec = resonant_level(eps=0.0, eta=0.1)
        grid = FrequencyGrid(1.0, 5)
        z = GridFunction.zeros(grid, 1)
        sigma = SelfEnergySet(KeldyshGF(GridFunction.constant(grid, [[0.1j]]), z, z, z))
        with pytest.raises(DysonError) as exc:
            solve_rak(spec, sigma, grid)
        assert exc.value.omega == 0.0
        assert "omega = 0" in str(exc.value)

    def test_grid_mismatch(self):
        spec = resonant_level()
        with pytest.raises(ValueError):
            solve_rak(spec, SelfEnergySet.zeros(FrequencyGrid(1.0, 5), 1), FrequencyGrid(1.0, 7))


class TestSolveCoupled:
    def test_zero_sigma(self):
        spec = resonant_level(eta=0.05)
        grid = FrequencyGrid(5.0, 201)
        g = solve_coupled(spec, SelfEnergySet.zeros(grid, 1), grid)
        assert max_diff(g, free_propagator(spec, grid)) < 1e-14

    def test_resonant_level_agreement(self):
        spec = resonant_level(eps=0.1, mu_a=0.5, mu_b=-0.5, temperature=0.05, eta=1e-6)
        grid = FrequencyGrid(20.0, 2001)
        sigma = lead_sigma(spec, grid)
        assert max_diff(solve_rak(spec, sigma, grid), solve_coupled(spec, sigma, grid)) < 1e-10

    def test_random_two_level(self, rng):
        e = rng.normal(size=(2, 2))
        spec = JunctionSpec(e + e.T, LeadSpec(np.eye(2)), LeadSpec(np.eye(2)), eta=1e-3)
        grid = FrequencyGrid(10.0, 2001)
        sigma = SelfEnergySet(random_physical_sigma(grid, 2, rng), np.array([[0.1, 0.05], [0.05, -0.2]]))
        a = solve_rak(spec, sigma, grid)
        b = solve_coupled(spec, sigma, grid)
        assert max_diff(a, b) < 1e-10
        assert dyson_residual(spec, a, sigma) < 1e-10

    @pytest.mark.parametrize("variant", ["paper", "symmetrized"])
    def test_phonon_agreement(self, variant):
        spec = two_level_two_mode(eta=1e-3)
        grid = FrequencyGrid(10.0, 2001)
        bath = bath_gamma_sigma(spec, grid, variant)
        a = solve_rak(spec, bath, grid, "phonon", variant)
        b = solve_coupled(spec, bath, grid, "phonon", variant)
        assert max_diff(a, b) < 1e-10


class TestScba:
    def test_zero_coupling_one_iteration(self):
        res = scba_loop(single_mode(lam=0.0), scba_options(n_omega=1001))
        assert res.converged and res.iterations == 1
        assert res.residual_history == [0.0]

    def test_none_and_born_orders(self):
        spec = single_mode(lam=0.2)
        none = scba_loop(spec, scba_options(n_omega=1001, interaction_order="none"))
        born = scba_loop(spec, scba_options(n_omega=1001, interaction_order="born"))
        for r in (none, born):
            assert r.iterations == 0 and r.residual_history == [] and r.converged
        assert max_diff(none.g, born.g) > 1e-4
        assert keldysh_residual(none.g) < 1e-12

    def test_no_phonons(self):
        res = scba_loop(resonant_level(), scba_options(n_omega=1001))
        assert res.d is None and res.iterations == 0

    def test_weak_coupling_fixture(self):
        spec = single_mode(lam=0.2, omega=1.0, bath=0.1, temperature=0.05, gamma=0.5)
        opts = scba_options()
        res = scba_loop(spec, opts)
        assert res.converged
        assert res.iterations <= 50
        assert len(res.residual_history) == res.iterations
        assert res.residual_history[-1] <= opts.tol
        tail = res.residual_history[-5:]
        assert all(b <= a for a, b in zip(tail, tail[1:]))
        # converged propagators solve the Dyson equation with the final self-energies
        assert dyson_residual(spec, res.g, res.sigma) < 10 * opts.tol
        assert dyson_residual(spec, res.d, res.pi, "phonon", "symmetrized") < 10 * opts.tol
        assert max_diff(res.g, solve_coupled(spec, res.sigma, res.grid)) < 1e-10

    def test_causal(self):
        spec = two_level_two_mode(eta=1e-6)
        res = scba_loop(spec, scba_options(omega_max=12.0, n_omega=2401))
        assert res.converged
        sr = res.sigma.retarded.values
        eig = np.linalg.eigvals(spec.energy + sr)
        assert eig.imag.max() < 0

    def test_non_convergence_is_reported(self):
        res = scba_loop(single_mode(lam=0.2), scba_options(n_omega=1001, max_iter=3))
        assert not res.converged
        assert res.iterations == 3 and len(res.residual_history) == 3
        assert res.residual_history[-1] > 1e-8

    def test_paper_variant_warns(self, caplog):
        with caplog.at_level("WARNING"):
            scba_loop(single_mode(lam=0.05), scba_options(n_omega=501, phonon_propagator="paper", max_iter=2))
        assert "causal" in caplog.text

    def test_invalid_mixing(self):
        with pytest.raises(ConfigError, match="solver.mixing"):
            SolverOptions(mixing=0.0)

    def test_deterministic(self):
        spec = single_mode(lam=0.3)
        a = scba_loop(spec, scba_options(n_omega=1001))
        b = scba_loop(spec, scba_options(n_omega=1001))
        assert np.array_equal(a.g.stacked(), b.g.stacked())
        assert a.residual_history == b.residual_history

    def test_divergence_error(self, monkeypatch):
        import negf.dyson as dy

        def boom(*a, **k):
            raise DysonError(0.5)

        spec = single_mode(lam=0.2)
        real = dy.solve_rak
        calls = {"n": 0}

        def flaky(*a, **k):
            calls["n"] += 1
            if calls["n"] > 2:
                return boom()
            return real(*a, **k)

        monkeypatch.setattr(dy, "solve_rak", flaky)
        with pytest.raises(ScbaDivergence) as exc:
            scba_loop(spec, scba_options(n_omega=501))
        assert exc.value.iteration == 1
