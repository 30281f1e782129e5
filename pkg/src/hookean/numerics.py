"""Shared numerical substrate: radial grids, quadrature, tridiagonal
eigensolver, Gram-Schmidt radial bases and Legendre tables.

Conventions (Hartree atomic units throughout):
- Radial grids are uniform, r_i = i*h for i = 1..N.  The origin is excluded
  so reduced functions u(r) = r*R(r) can be stored without special cases;
  quadrature re-inserts the (zero) origin value.
- "Spherical" normalization of a radial orbital eta means
  4*pi * integral eta^2 r^2 dr = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DegradedBasisError, InvalidInputError, NumericFailureError

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "TridiagonalSystem",
    "OrthonormalBasis",
    "make_grid",
    "integrate_radial",
    "cumulative_integral",
    "solve_tridiagonal_eigen",
    "build_orthonormal_basis",
    "legendre_table",
    "legendre_matrix",
]

DEFAULT_POINTS = 4000
DEFAULT_RMAX_SCALE = 20.0


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial mesh r_i = i*h, i = 1..n_points (origin excluded)."""

    r_max: float
    n_points: int
    h: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.r_max <= 0 or self.n_points < 8:
            raise InvalidInputError("grid needs r_max > 0 and n_points >= 8")
        h = self.r_max / self.n_points
        object.__setattr__(self, "h", h)
        r = h * np.arange(1, self.n_points + 1, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    def quadrature_weights(self) -> np.ndarray:
        """Composite Simpson weights for integral over [0, r_max].

        The weights apply to samples at r_1..r_N; the missing origin value
        is supplied by cubic extrapolation folded into the first four
        weights, so polynomials up to degree 3 integrate exactly.  An odd
        interval count is handled with a 3/8-rule tail to keep 4th-order
        accuracy on any grid size.
        """
        return _simpson_weights(self.n_points, self.h)

    def positive_weights(self) -> np.ndarray:
        """Simpson weights without the origin fold; all positive.

        Exact to 4th order for integrands that vanish at the origin (any
        r^2-measure integrand); required wherever sqrt(w) appears, e.g.
        symmetrizing kernel eigenproblems.
        """
        return _simpson_weights(self.n_points, self.h, fold_origin=False)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.quadrature_weights() @ values)

    def subgrid(self, stride: int, r_cut: float | None = None) -> "RadialGrid":
        """Coarser grid whose points are a subset of this one.

        Used for two-electron meshes; restriction of sampled functions is
        then exact (no interpolation).
        """
        if stride < 1:
            raise InvalidInputError("stride must be >= 1")
        n = self.n_points // stride
        if r_cut is not None:
            n = min(n, int(r_cut / (self.h * stride)))
        if n < 8:
            raise InvalidInputError("subgrid would have fewer than 8 points")
        return RadialGrid(r_max=n * stride * self.h, n_points=n)

    def restrict_indices(self, sub: "RadialGrid") -> np.ndarray:
        """Indices of this grid matching the points of ``sub``."""
        stride = int(round(sub.h / self.h))
        if abs(stride * self.h - sub.h) > 1e-12 * self.h:
            raise InvalidInputError("subgrid spacing is not a multiple of parent spacing")
        idx = stride * np.arange(1, sub.n_points + 1) - 1
        if idx[-1] >= self.n_points:
            raise InvalidInputError("subgrid extends beyond parent grid")
        return idx


def make_grid(omega: float, n_points: int = DEFAULT_POINTS,
              r_max_scale: float = DEFAULT_RMAX_SCALE) -> RadialGrid:
    """Grid sized to the oscillator length: r_max = scale / sqrt(omega).

    Ground states decay like exp(-omega r^2 / 2); the default scale keeps
    the tail mass below 1e-12 at every confinement strength.
    """
    if omega <= 0:
        raise InvalidInputError("omega must be positive")
    return RadialGrid(r_max=r_max_scale / np.sqrt(omega), n_points=n_points)


@dataclass(frozen=True)
class RadialFunction:
    """Values of a function of r sampled on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray
    kind: Literal["full", "reduced", "density", "potential"] = "full"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise InvalidInputError("values shape does not match grid")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("radial function contains non-finite values")
        if self.kind == "density" and values.min() < -1e-12:
            raise InvalidInputError("density contains negative values")
        values = values.copy()
        if self.kind == "density":
            values[values < 0] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _simpson_weights(n: int, h: float, fold_origin: bool = True) -> np.ndarray:
    # weights for samples f_1..f_n; the origin node is folded in below
    m = n + 1  # node count including the origin
    w = np.zeros(m)
    if m % 2 == 1:  # even interval count: plain composite Simpson
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
    else:
        # Simpson on the first m-4 intervals, 3/8 rule on the last three
        k = m - 4
        if k >= 2:
            w[0] = w[k] = 1.0
            w[1:k:2] = 4.0
            w[2:k:2] = 2.0
            w[: k + 1] *= h / 3.0
        w[-4:] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    if fold_origin:
        # fold the origin weight into the first four samples through the
        # cubic extrapolation f(0) ~ 4 f1 - 6 f2 + 4 f3 - f4
        w[1:5] += w[0] * np.array([4.0, -6.0, 4.0, -1.0])
    return w[1:]


def integrate_radial(f: RadialFunction | np.ndarray, weight_power: int = 0,
                     grid: RadialGrid | None = None) -> float:
    """integral f(r) r^weight_power dr over [0, r_max], 4th-order composite.

    Accepts a RadialFunction or a bare array with an explicit grid.
    """
    if isinstance(f, RadialFunction):
        grid = f.grid
        values = f.values
    else:
        if grid is None:
            raise InvalidInputError("grid required for bare arrays")
        values = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("integrand contains non-finite values")
    if weight_power == 0:
        integrand = values
    else:
        integrand = values * grid.r ** weight_power
    return grid.integrate(integrand)


def cumulative_integral(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Running integral F(r_i) = integral_0^{r_i} f dr, 4th-order accurate.

    Trapezoid sums with an Euler-Maclaurin endpoint-derivative correction;
    the origin value is supplied by cubic extrapolation.
    """
    values = np.asarray(values, dtype=float)
    origin = 4 * values[0] - 6 * values[1] + 4 * values[2] - values[3]
    v = np.concatenate(([origin], values))
    h = grid.h
    cum = np.concatenate(([0.0], np.cumsum((v[1:] + v[:-1]) * (h / 2.0))))
    # d f/dr at every node by 4th-order differences (one-sided at the ends)
    d = _derivative(v, h)
    cum -= (h * h / 12.0) * (d - d[0])
    return cum[1:]


def _derivative(v: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    for i in (0, 1):
        d[i] = (-25 * v[i] + 48 * v[i + 1] - 36 * v[i + 2]
                + 16 * v[i + 3] - 3 * v[i + 4]) / (12 * h)
    for i in (-1, -2):
        d[i] = (25 * v[i] - 48 * v[i - 1] + 36 * v[i - 2]
                - 16 * v[i - 3] + 3 * v[i - 4]) / (12 * h)
    return d


def derivative_on_grid(values: np.ndarray, grid: RadialGrid,
                       zero_at_origin: bool = True) -> np.ndarray:
    """d/dr of sampled values, 4th order, optionally using f(0) = 0."""
    if zero_at_origin:
        ext = np.concatenate(([0.0], np.asarray(values, dtype=float)))
        return _derivative(ext, grid.h)[1:]
    return _derivative(np.asarray(values, dtype=float), grid.h)


@dataclass(frozen=True)
class TridiagonalSystem:
    """Symmetric tridiagonal matrix given by its diagonals."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        e = np.asarray(self.off_diagonal, dtype=float)
        if d.size < 2 or e.size != d.size - 1:
            raise InvalidInputError("need dimension >= 2 and off-diagonal of length n-1")
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)

    @property
    def dimension(self) -> int:
        return self.diagonal.size


def solve_tridiagonal_eigen(sys: TridiagonalSystem, n_states: int,
                            grid_spacing: float = 1.0,
                            residual_tol: float = 1e-9):
    """Lowest ``n_states`` eigenpairs of a symmetric tridiagonal matrix.

    Eigenvalues come back ascending; eigenvectors are orthonormal in the
    grid inner product sum(v_i w_i) * grid_spacing.  Backed by LAPACK
    bisection + inverse iteration, with an explicit residual audit.
    """
    if n_states < 1 or n_states > sys.dimension:
        raise InvalidInputError("n_states out of range")
    try:
        vals, vecs = eigh_tridiagonal(
            sys.diagonal, sys.off_diagonal,
            select="i", select_range=(0, n_states - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericFailureError(f"tridiagonal eigensolver failed: {exc}") from exc
    vecs = vecs / np.sqrt(grid_spacing)
    # residual audit ||A v - lambda v|| / ||v||
    d, e = sys.diagonal, sys.off_diagonal
    for k in range(n_states):
        v = vecs[:, k]
        av = d * v
        av[:-1] += e * v[1:]
        av[1:] += e * v[:-1]
        res = np.linalg.norm(av - vals[k] * v) / np.linalg.norm(v)
        scale = max(1.0, abs(vals[k]), float(np.max(np.abs(d))))
        if res > residual_tol * scale:
            raise NumericFailureError(
                f"eigenpair {k} residual {res:.3e} exceeds tolerance", residual=res)
    return [(float(vals[k]), vecs[:, k].copy()) for k in range(n_states)]


@dataclass(frozen=True)
class OrthonormalBasis:
    """Radial functions eta_i, orthonormal as 4*pi int eta_i eta_j r^2 dr."""

    omega_r: float
    grid: RadialGrid
    functions: np.ndarray  # shape (order, n_points)

    @property
    def order(self) -> int:
        return self.functions.shape[0]

    def overlap_matrix(self) -> np.ndarray:
        w = self.grid.positive_weights() * self.grid.r ** 2
        return 4.0 * np.pi * (self.functions * w) @ self.functions.T

    def on_grid(self, sub: RadialGrid, parent_indices: np.ndarray) -> np.ndarray:
        return self.functions[:, parent_indices]


def build_orthonormal_basis(omega: float, order: int, grid: RadialGrid,
                            omega_r: float | None = None,
                            orthog_tol: float = 1e-6) -> OrthonormalBasis:
    """Gram-Schmidt basis eta_i(r) = p_i(r) exp(-omega_r r^2 / 2).

    The polynomials p_i are built orthonormal under the weight
    w(r) = r^2 exp(-omega_r r^2) with omega_r = omega / 2 by default.
    Construction is Gram-Schmidt on the sequence eta_0, r*eta_0, r*eta_1, ...
    with one re-orthogonalization pass; classical single-pass loses
    orthogonality past order ~15.
    """
    if order < 1:
        raise InvalidInputError("order must be >= 1")
    if omega <= 0:
        raise InvalidInputError("omega must be positive")
    wr = omega / 2.0 if omega_r is None else omega_r
    r = grid.r
    w = grid.positive_weights() * r ** 2 * 4.0 * np.pi

    def inner(a, b):
        return float(np.sum(w * a * b))

    funcs = np.empty((order, grid.n_points))
    g = np.exp(-0.5 * wr * r ** 2)
    funcs[0] = g / np.sqrt(inner(g, g))
    for i in range(1, order):
        v = r * funcs[i - 1]
        for _ in range(2):  # one extra pass keeps high orders orthogonal
            for j in range(i):
                v = v - inner(funcs[j], v) * funcs[j]
        sq = inner(v, v)
        nrm = np.sqrt(sq) if sq > 0 else 0.0
        if not np.isfinite(nrm) or nrm < 1e-150:
            raise DegradedBasisError(
                f"basis member {i} collapsed during orthogonalization", pair=(i, i))
        funcs[i] = v / nrm
    basis = OrthonormalBasis(omega_r=wr, grid=grid, functions=funcs)
    ov = basis.overlap_matrix()
    dev = np.abs(ov - np.eye(order))
    if dev.max() > orthog_tol:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise DegradedBasisError(
            f"orthogonality audit failed for pair ({i},{j}): deviation {dev.max():.3e}",
            pair=(int(i), int(j)), overlap=float(ov[i, j]))
    return basis


def legendre_table(l_max: int, nodes: int):
    """Gauss-Legendre nodes/weights and P_0..P_lmax at each node.

    Returns (x, w, P) with P of shape (l_max + 1, nodes), generated by the
    three-term recurrence.
    """
    if nodes < l_max + 1:
        raise InvalidInputError("need nodes >= l_max + 1")
    x, w = np.polynomial.legendre.leggauss(nodes)
    return x, w, legendre_matrix(l_max, x)


def legendre_matrix(l_max: int, x: np.ndarray) -> np.ndarray:
    """P_l(x) for l = 0..l_max via the recurrence, shape (l_max+1, len(x))."""
    x = np.asarray(x, dtype=float)
    P = np.empty((l_max + 1, x.size))
    P[0] = 1.0
    if l_max >= 1:
        P[1] = x
    for l in range(1, l_max):
        P[l + 1] = ((2 * l + 1) * x * P[l] - l * P[l - 1]) / (l + 1)
    return P


def legendre_triple_products(l_max_a: int, l_max_b: int, l_max_c: int) -> np.ndarray:
    """T[a, b, c] = integral_{-1}^{1} P_a P_b P_c dx, exact by quadrature."""
    deg = l_max_a + l_max_b + l_max_c
    x, w = np.polynomial.legendre.leggauss(deg // 2 + 2)
    P = legendre_matrix(max(l_max_a, l_max_b, l_max_c), x)
    Pa, Pb, Pc = P[: l_max_a + 1], P[: l_max_b + 1], P[: l_max_c + 1]
    return np.einsum("q,aq,bq,cq->abc", w, Pa, Pb, Pc)


def multipole_potential(source: np.ndarray, l: int, grid: RadialGrid) -> np.ndarray:
    """K_l(r) = r^-(l+1) int_0^r s^l g ds + r^l int_r^inf s^-(l+1) g ds.

    ``source`` is g(s) sampled on the grid; this is the separable inner /
    outer decomposition of the min^l/max^(l+1) Coulomb kernel, O(N).
    """
    r = grid.r
    low = cumulative_integral(source * r ** l, grid)
    high_all = cumulative_integral(source * r ** (-(l + 1)), grid)
    high = high_all[-1] - high_all
    return low * r ** (-(l + 1)) + high * r ** l


def multipole_pair_integral(f: np.ndarray, g: np.ndarray, l: int,
                            grid: RadialGrid) -> float:
    """int int f(r1) [min^l / max^(l+1)] g(r2) dr1 dr2 via the O(N) split."""
    return float(grid.quadrature_weights() @ (f * multipole_potential(g, l, grid)))
