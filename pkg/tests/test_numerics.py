import numpy as np
import pytest

from hookean.errors import DegradedBasisError, InvalidInputError
from hookean.numerics import (
    OrthonormalBasis,
    RadialFunction,
    RadialGrid,
    TridiagonalSystem,
    build_orthonormal_basis,
    cumulative_integral,
    integrate_radial,
    legendre_matrix,
    legendre_table,
    legendre_triple_products,
    make_grid,
    multipole_pair_integral,
    solve_tridiagonal_eigen,
)


class TestQuadrature:
    def test_gaussian_with_r2_weight(self):
        grid = RadialGrid(r_max=10.0, n_points=2000)
        f = RadialFunction(grid, np.exp(-grid.r ** 2))
        # int_0^inf exp(-r^2) r^2 dr = sqrt(pi)/4
        assert integrate_radial(f, 2) == pytest.approx(np.sqrt(np.pi) / 4, abs=1e-8)

    def test_zero_function(self):
        grid = RadialGrid(r_max=5.0, n_points=100)
        assert integrate_radial(RadialFunction(grid, np.zeros(100)), 2) == 0.0

    def test_linear_ramp(self):
        # f(r) = r on [h, 1], zero-extended at the origin
        grid = RadialGrid(r_max=1.0, n_points=500)
        assert integrate_radial(grid.r, 0, grid=grid) == pytest.approx(0.5, abs=1e-6)

    def test_polynomial_exactness(self):
        grid = RadialGrid(r_max=2.0, n_points=64)
        for k in range(4):
            exact = 2.0 ** (k + 1) / (k + 1)
            got = integrate_radial(grid.r ** k, 0, grid=grid)
            assert got == pytest.approx(exact, abs=1e-10 * exact)

    def test_odd_interval_count(self):
        grid = RadialGrid(r_max=1.0, n_points=101)
        got = integrate_radial(grid.r ** 3, 0, grid=grid)
        assert got == pytest.approx(0.25, abs=1e-10)

    def test_nonfinite_rejected(self):
        grid = RadialGrid(r_max=1.0, n_points=50)
        vals = np.ones(50)
        vals[3] = np.nan
        with pytest.raises(InvalidInputError):
            integrate_radial(vals, 0, grid=grid)

    def test_cumulative_against_erf(self):
        grid = RadialGrid(r_max=8.0, n_points=1200)
        from scipy.special import erf
        cum = cumulative_integral(np.exp(-grid.r ** 2), grid)
        expected = np.sqrt(np.pi) / 2 * erf(grid.r)
        assert np.max(np.abs(cum - expected)) < 1e-9


class TestGrid:
    def test_points_uniform_and_positive(self):
        grid = make_grid(0.5, n_points=100)
        assert grid.r[0] == pytest.approx(grid.h)
        assert np.allclose(np.diff(grid.r), grid.h)
        assert grid.r_max == pytest.approx(20.0 / np.sqrt(0.5))

    def test_subgrid_is_subset(self):
        grid = RadialGrid(r_max=10.0, n_points=1000)
        sub = grid.subgrid(4, r_cut=6.0)
        idx = grid.restrict_indices(sub)
        assert np.allclose(grid.r[idx], sub.r)
        assert sub.r[-1] <= 6.0 + 1e-12

    def test_density_negativity_rejected(self):
        grid = RadialGrid(r_max=1.0, n_points=50)
        with pytest.raises(InvalidInputError):
            RadialFunction(grid, -np.ones(50), kind="density")


class TestTridiagonal:
    def test_diagonal_matrix(self):
        sys = TridiagonalSystem(np.array([2.0, 2.0]), np.array([0.0]))
        pairs = solve_tridiagonal_eigen(sys, 2)
        assert [p[0] for p in pairs] == pytest.approx([2.0, 2.0])

    def test_2x2_closed_form(self):
        sys = TridiagonalSystem(np.array([1.0, 3.0]), np.array([1.0]))
        pairs = solve_tridiagonal_eigen(sys, 2)
        assert pairs[0][0] == pytest.approx(2 - np.sqrt(2), abs=1e-12)
        assert pairs[1][0] == pytest.approx(2 + np.sqrt(2), abs=1e-12)

    def test_oscillator_s_states(self):
        # -u''/2 + r^2 u / 2 on [h, 20]: lowest s-levels 1.5, 3.5, 5.5.
        # Central differences shift level nu by -(h^2/24)<p^4>, about
        # 1.9e-4 for the third state at this resolution.
        grid = RadialGrid(r_max=20.0, n_points=2000)
        h2 = grid.h ** 2
        sys = TridiagonalSystem(1.0 / h2 + 0.5 * grid.r ** 2,
                                np.full(grid.n_points - 1, -0.5 / h2))
        pairs = solve_tridiagonal_eigen(sys, 3, grid_spacing=grid.h)
        assert pairs[0][0] == pytest.approx(1.5, abs=1e-4)
        assert pairs[1][0] == pytest.approx(3.5, abs=1e-4)
        assert pairs[2][0] == pytest.approx(5.5, abs=2.5e-4)

    def test_grid_orthonormality_and_residual(self):
        grid = RadialGrid(r_max=20.0, n_points=500)
        h2 = grid.h ** 2
        sys = TridiagonalSystem(1.0 / h2 + 0.5 * grid.r ** 2,
                                np.full(grid.n_points - 1, -0.5 / h2))
        pairs = solve_tridiagonal_eigen(sys, 4, grid_spacing=grid.h)
        vecs = np.array([v for _, v in pairs])
        gram = vecs @ vecs.T * grid.h
        assert np.max(np.abs(gram - np.eye(4))) < 1e-10

    def test_n_states_out_of_range(self):
        sys = TridiagonalSystem(np.array([1.0, 2.0]), np.array([0.5]))
        with pytest.raises(InvalidInputError):
            solve_tridiagonal_eigen(sys, 3)


class TestBasis:
    def test_single_gaussian_normalized(self):
        grid = make_grid(1.0, n_points=1500)
        basis = build_orthonormal_basis(1.0, 1, grid)
        w = grid.quadrature_weights() * grid.r ** 2
        norm = 4 * np.pi * np.sum(w * basis.functions[0] ** 2)
        assert norm == pytest.approx(1.0, abs=1e-8)
        # eta_0 is a pure normalized Gaussian: p_0 = (omega_r/pi)^(3/4)
        wr = 0.5
        expected = (wr / np.pi) ** 0.75 * np.exp(-0.5 * wr * grid.r ** 2)
        assert np.max(np.abs(basis.functions[0] - expected)) < 1e-8

    def test_first_two_orthogonal(self):
        grid = make_grid(1.0, n_points=1500)
        basis = build_orthonormal_basis(1.0, 2, grid)
        ov = basis.overlap_matrix()
        assert abs(ov[0, 1]) < 1e-8

    def test_order_20_audit(self):
        grid = make_grid(0.5, n_points=2000)
        basis = build_orthonormal_basis(0.5, 20, grid)
        dev = np.abs(basis.overlap_matrix() - np.eye(20))
        assert dev.max() < 1e-6

    def test_order_30_audit(self):
        grid = make_grid(0.5, n_points=3000)
        basis = build_orthonormal_basis(0.5, 30, grid)
        dev = np.abs(basis.overlap_matrix() - np.eye(30))
        assert dev.max() < 1e-6

    def test_degraded_basis_raises(self):
        grid = RadialGrid(r_max=3.0, n_points=24)  # rank-deficient for order 30
        with pytest.raises(DegradedBasisError):
            build_orthonormal_basis(0.5, 30, grid)


class TestLegendre:
    def test_normalization(self):
        x, w, P = legendre_table(3, 12)
        assert np.sum(w * P[2] * P[2]) == pytest.approx(2.0 / 5.0, abs=1e-12)

    def test_orthogonality(self):
        x, w, P = legendre_table(3, 12)
        assert np.sum(w * P[1] * P[3]) == pytest.approx(0.0, abs=1e-12)

    def test_endpoint_identity(self):
        P = legendre_matrix(4, np.array([1.0]))
        assert np.allclose(P[:, 0], 1.0)

    def test_node_count_validated(self):
        with pytest.raises(InvalidInputError):
            legendre_table(5, 4)

    def test_triple_products(self):
        T = legendre_triple_products(2, 2, 2)
        assert T[0, 0, 0] == pytest.approx(2.0)
        assert T[1, 1, 0] == pytest.approx(2.0 / 3.0)
        assert T[1, 1, 1] == pytest.approx(0.0, abs=1e-14)
        assert T[1, 1, 2] == pytest.approx(4.0 / 15.0)


class TestMultipole:
    def test_pair_integral_symmetric(self):
        grid = RadialGrid(r_max=12.0, n_points=1500)
        f = np.exp(-grid.r ** 2) * grid.r ** 2
        g = np.exp(-0.5 * grid.r ** 2) * grid.r ** 2
        a = multipole_pair_integral(f, g, 2, grid)
        b = multipole_pair_integral(g, f, 2, grid)
        assert a == pytest.approx(b, rel=1e-10)

    def test_l0_against_dense_kernel(self):
        # dense-kernel route has its own kink error at r1 = r2, so the two
        # 4th-order methods agree only to the kink-localized residual
        grid = RadialGrid(r_max=10.0, n_points=800)
        f = np.exp(-grid.r ** 2) * grid.r ** 2
        g = np.exp(-1.3 * grid.r ** 2) * grid.r ** 2
        w = grid.quadrature_weights()
        kern = 1.0 / np.maximum.outer(grid.r, grid.r)
        dense = float(w @ (kern @ (g * w) * f))
        fast = multipole_pair_integral(f, g, 0, grid)
        assert fast == pytest.approx(dense, rel=2e-5)
