import numpy as np
import pytest

from hookean.errors import SearchFailureError
from hookean.exact import (
    HookeProblem,
    assemble_exact_wavefunction,
    exact_density,
    exact_energy_components,
    expectation_T_plus_Vee,
    find_termination,
    interaction_ratio,
    solve_exact,
    solve_relative_motion,
)
from hookean.numerics import integrate_radial, make_grid
from hookean.sectors import SectorWavefunction

from oracles import density_by_2d_quadrature, relative_ground_energy_diag


@pytest.fixture(scope="module")
def psi_half():
    return solve_exact(0.5)


@pytest.fixture(scope="module")
def psi_free():
    # interaction disabled: two independent isotropic oscillators
    return solve_exact(1.0, coulomb=False)


class TestRelativeMotion:
    def test_magic_half_closed_form(self):
        rel = solve_relative_motion(0.5)
        assert rel.closed_form
        assert rel.epsilon_rel == pytest.approx(1.25, abs=1e-12)
        # solution proportional to r (1 + r/2) exp(-r^2/8)
        ref = rel.grid.r * (1 + rel.grid.r / 2) * np.exp(-rel.grid.r ** 2 / 8)
        ref /= np.sqrt(integrate_radial(ref * ref, 0, grid=rel.grid))
        assert np.max(np.abs(np.abs(rel.u_values) - ref)) < 1e-10

    def test_magic_tenth(self):
        rel = solve_relative_motion(0.1)
        assert rel.closed_form
        assert rel.epsilon_rel == pytest.approx(0.35, abs=1e-12)

    def test_termination_detection_scale(self):
        assert find_termination(0.5) is not None
        assert find_termination(0.3) is None
        assert find_termination(1.0) is None

    def test_shooting_vs_grid_diagonalization(self):
        # non-magic frequency: cross-check against Richardson-extrapolated
        # direct diagonalization
        rel = solve_relative_motion(0.25)
        assert not rel.closed_form
        oracle = relative_ground_energy_diag(0.25)
        assert rel.epsilon_rel == pytest.approx(oracle, abs=1e-8)

    def test_magic_agrees_with_shooting_oracle(self):
        rel = solve_relative_motion(0.1)
        oracle = relative_ground_energy_diag(0.1)
        assert rel.epsilon_rel == pytest.approx(oracle, abs=1e-8)

    def test_interaction_disabled_limit(self):
        rel = solve_relative_motion(1000.0, coulomb=False)
        assert rel.epsilon_rel == pytest.approx(1500.0, rel=1e-6)

    def test_ground_state_nodeless_and_normalized(self):
        rel = solve_relative_motion(0.1)
        assert integrate_radial(rel.u_values ** 2, 0, grid=rel.grid) == pytest.approx(1.0, abs=1e-8)
        body = rel.u_values[np.abs(rel.u_values) > 1e-9 * np.max(np.abs(rel.u_values))]
        assert np.all(body > 0) or np.all(body < 0)

    def test_eigenvalue_identity(self):
        # e_rel = <T_rel> + <V_rel> on the grid solution
        rel = solve_relative_motion(0.25)
        v = 0.25 * rel.omega ** 2 * rel.expectation_r_power(2) + rel.expectation_r_power(-1)
        assert rel.kinetic_energy() + v == pytest.approx(rel.epsilon_rel, abs=1e-7)

    def test_problem_validation(self):
        with pytest.raises(Exception):
            HookeProblem(-1.0)


class TestAssembly:
    def test_total_energy_magic(self, psi_half):
        assert psi_half.energy == pytest.approx(2.0, abs=1e-6)

    def test_sector_norms_sum_to_one(self, psi_half):
        assert psi_half.sectors.norm_squared() == pytest.approx(1.0, abs=1e-6)

    def test_sector_exchange_symmetry(self, psi_half):
        assert psi_half.sectors.exchange_asymmetry() == 0.0

    def test_noninteracting_is_single_sector_product(self, psi_free):
        norms = psi_free.sectors.sector_norms()
        assert norms[0] == pytest.approx(1.0, abs=1e-9)
        assert np.all(norms[1:] < 1e-9)
        assert psi_free.energy == pytest.approx(3.0, rel=1e-8)

    def test_quadrature_node_doubling(self):
        rel = solve_relative_motion(0.5)
        a = assemble_exact_wavefunction(rel, nodes=128)
        b = assemble_exact_wavefunction(rel, nodes=256)
        qa = expectation_T_plus_Vee(a) + a.sectors.external_expectation(0.5)
        qb = expectation_T_plus_Vee(b) + b.sectors.external_expectation(0.5)
        assert abs(a.energy - b.energy) < 1e-12  # energy is assembly-free
        assert abs(qa - qb) < 1e-7


class TestDensity:
    def test_noninteracting_gaussian(self, psi_free):
        n = exact_density(psi_free)
        ref = 2 * (1.0 / np.pi) ** 1.5 * np.exp(-n.grid.r ** 2)
        assert np.max(np.abs(n.values - ref)) < 1e-6

    def test_normalization_and_positivity(self, psi_half):
        n = exact_density(psi_half)
        assert 4 * np.pi * integrate_radial(n.values, 2, grid=n.grid) == pytest.approx(2.0, abs=1e-6)
        assert np.all(n.values >= 0)

    def test_monotone_beyond_maximum(self, psi_half):
        n = exact_density(psi_half)
        i0 = int(np.argmax(n.values))
        assert np.all(np.diff(n.values[i0:]) <= 1e-14)

    def test_against_2d_quadrature_oracle(self, psi_half):
        sub = make_grid(0.5, n_points=160, r_max_scale=10.0)
        ref = density_by_2d_quadrature(psi_half.phi_rel(), psi_half.com_exponent,
                                       sub.r, psi_half.rel.grid)
        ref *= 2.0 / (4 * np.pi * integrate_radial(ref, 2, grid=sub))
        got = exact_density(psi_half, grid=sub).values
        assert np.max(np.abs(got - ref)) < 1e-6

    def test_sector_route_agrees(self, psi_half):
        # density from the Legendre-sector formula on the sector grid
        n_sec = psi_half.sectors.density_values()
        ref = exact_density(psi_half, grid=psi_half.sectors.grid).values
        assert np.max(np.abs(n_sec - ref)) < 5e-4 * np.max(ref)


class TestObservables:
    def test_interaction_ratio_free(self, psi_free):
        assert interaction_ratio(psi_free) == 0.0

    def test_interaction_ratio_intermediate(self, psi_half):
        assert 0.1 < interaction_ratio(psi_half) < 1.5

    def test_interaction_ratio_monotone(self):
        import warnings

        from hookean.errors import TruncationWarning
        ratios = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            for w in (0.1, 0.5, 2.0):
                ratios.append(interaction_ratio(
                    solve_exact(w, n_points=2000, l_max=2, nodes=48)))
        assert ratios[0] > ratios[1] > ratios[2]

    def test_Q_noninteracting_product(self):
        # T = 1.5 and Vee = sqrt(2/pi) for the bare product at omega = 1
        om = 1.0
        g = make_grid(om, n_points=2400).subgrid(4, r_cut=10.0)
        phi = (om / np.pi) ** 0.75 * np.exp(-om * g.r ** 2 / 2)
        psi = SectorWavefunction(g, np.outer(phi, phi)[None, :, :])
        T = psi.kinetic_expectation()
        V = psi.coulomb_expectation()
        assert T + V == pytest.approx(1.5 + np.sqrt(2 / np.pi), abs=1e-4)

    def test_Q_sign_invariance(self, psi_half):
        flipped = SectorWavefunction(psi_half.sectors.grid, -psi_half.sectors.sectors)
        assert flipped.internal_energy_expectation() == pytest.approx(
            psi_half.sectors.internal_energy_expectation(), rel=1e-12)

    def test_Q_energy_partition(self, psi_half):
        comps = exact_energy_components(psi_half)
        q = expectation_T_plus_Vee(psi_half)
        assert q == pytest.approx(comps["E"] - comps["Vext"], abs=1e-5)

    def test_virial_noninteracting(self, psi_free):
        comps = exact_energy_components(psi_free)
        assert comps["T"] == pytest.approx(comps["Vext"], abs=1e-6)

    def test_sector_Q_on_band_limited_state_matches(self, psi_half):
        # the sector multipole route is exact for polynomial cos(theta)
        # content; on the cusped exact state it differs only by the
        # algebraic sector tail
        q_exact = expectation_T_plus_Vee(psi_half)
        q_sector = psi_half.sectors.internal_energy_expectation()
        assert q_sector == pytest.approx(q_exact, abs=2e-2)


class TestSearchWindow:
    def test_bracket_failure_reports_window(self):
        # an absurd cap forces the failure path
        import hookean.exact as ex
        orig = ex._numerov_shoot

        def fake(omega, eps, grid, i_match, coulomb):
            u, _ = orig(omega, eps, grid, i_match, coulomb)
            return u, 5  # pretend every energy already has nodes

        ex._numerov_shoot = fake
        try:
            with pytest.raises(SearchFailureError) as err:
                solve_relative_motion(0.33, n_points=600)
            assert err.value.window is not None
        finally:
            ex._numerov_shoot = orig
