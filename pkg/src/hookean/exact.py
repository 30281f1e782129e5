"""Exact ground state of two Coulomb-interacting electrons in a harmonic
trap.

The Hamiltonian separates in relative and centre-of-mass coordinates.
The centre of mass is a mass-2 oscillator at the trap frequency, with a
Gaussian ground state and zero-point energy 3 omega / 2.  The relative
coordinate obeys

    -u''(r) + (omega^2 r^2 / 4 + 1/r) u(r) = e_rel u(r)

whose regular solution is u = e^{-omega r^2 / 4} * sum_k a_k r^{k+1} with
the three-term recurrence

    a_{k+1} = [a_k + (omega (k + 1/2) - e_rel) a_{k-1}] / ((k+2)(k+1)).

For special trap frequencies the recurrence terminates and the ground
state is a polynomial times a Gaussian (the largest such frequency is
omega = 1/2, energy 2 hartree).  Elsewhere the eigenvalue is found by
shooting: outward Numerov integration seeded by the truncated series,
with bisection on the interior node count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidInputError, SearchFailureError
from .numerics import (RadialGrid, RadialFunction, derivative_on_grid,
                       integrate_radial, make_grid)
from .sectors import SectorWavefunction, separable_density

__all__ = [
    "HookeProblem",
    "RelativeMotionSolution",
    "ExactWavefunction",
    "solve_relative_motion",
    "assemble_exact_wavefunction",
    "solve_exact",
    "exact_density",
    "interaction_ratio",
    "expectation_T_plus_Vee",
    "exact_energy_components",
]

MAX_SERIES_TERMS = 400
MAGIC_MAX_DEGREE = 10
BISECTION_TOL = 1e-10


@dataclass(frozen=True)
class HookeProblem:
    """Two electrons in an isotropic harmonic trap of frequency omega."""

    omega: float
    electron_count: int = 2

    def __post_init__(self):
        if self.omega <= 0:
            raise InvalidInputError("omega must be positive")
        if self.electron_count != 2:
            raise InvalidInputError("only the two-electron problem is supported")


@dataclass(frozen=True)
class RelativeMotionSolution:
    """Ground state of the relative-coordinate radial problem."""

    omega: float
    epsilon_rel: float
    grid: RadialGrid
    u_values: np.ndarray = field(repr=False)
    series_coefficients: np.ndarray = field(repr=False)
    closed_form: bool
    coulomb: bool = True

    @property
    def u(self) -> RadialFunction:
        return RadialFunction(self.grid, self.u_values, kind="reduced")

    def phi_callable(self):
        """phi_rel(r) = u(r)/r as a vectorized callable on r >= 0.

        Uses the power series near the origin (below the first few grid
        points) and a cubic spline of the grid solution elsewhere; for a
        terminated series the two coincide.
        """
        omega = self.omega
        coeffs = np.trim_zeros(self.series_coefficients, "b")
        if self.closed_form:
            def phi(r):
                r = np.asarray(r, dtype=float)
                t_over_r = _poly_eval(coeffs, r)
                return t_over_r * np.exp(-omega * r * r / 4.0)
            return phi
        r_low = 6.0 * self.grid.h
        spline = CubicSpline(self.grid.r, self.u_values / self.grid.r)
        r_stop = self.grid.r_max

        def phi(r):
            r = np.asarray(r, dtype=float)
            out = spline(np.clip(r, self.grid.r[0], r_stop))
            small = r < r_low
            if np.any(small):
                rs = r[small]
                out[small] = _poly_eval(coeffs, rs) * np.exp(-omega * rs * rs / 4.0)
            out[r > r_stop] = 0.0
            return out
        return phi

    def expectation_r_power(self, power: int) -> float:
        """<r^power> over the normalized relative wavefunction."""
        return integrate_radial(self.u_values ** 2 * self.grid.r ** power,
                                0, grid=self.grid)

    def kinetic_energy(self) -> float:
        """<-laplacian_r> = int u'(r)^2 dr (reduced mass 1/2)."""
        du = derivative_on_grid(self.u_values, self.grid, zero_at_origin=True)
        return integrate_radial(du * du, 0, grid=self.grid)


def _poly_eval(coeffs: np.ndarray, r: np.ndarray) -> np.ndarray:
    """sum_k a_k r^k by Horner (this is u / (r e^{-omega r^2/4}))."""
    out = np.zeros_like(r) + coeffs[-1]
    for a in coeffs[-2::-1]:
        out = out * r + a
    return out


def series_coefficients(omega: float, epsilon: float, n_terms: int,
                        coulomb: bool = True) -> np.ndarray:
    c = 1.0 if coulomb else 0.0
    a = np.zeros(n_terms)
    a[0] = 1.0
    if n_terms > 1:
        a[1] = c * a[0] / 2.0
    for j in range(1, n_terms - 1):
        a[j + 1] = (c * a[j] + (omega * (j + 0.5) - epsilon) * a[j - 1]) \
            / ((j + 2) * (j + 1))
    return a


def find_termination(omega: float, coulomb: bool = True,
                     max_degree: int = MAGIC_MAX_DEGREE):
    """Detect a terminating recurrence: returns (epsilon, coefficients).

    Termination at polynomial index n requires e_rel = omega (n + 3/2)
    together with a_{n+1} = 0; the test is scale-aware so it is robust for
    any omega.  Returns None when no degree up to ``max_degree`` works.
    """
    for n in range(0, max_degree + 1):
        eps = omega * (n + 1.5)
        a = series_coefficients(omega, eps, n + 2, coulomb=coulomb)
        scale = np.max(np.abs(a[: n + 1]) * omega ** ((n + 1 - np.arange(n + 1)) / 2.0))
        if abs(a[n + 1]) <= 1e-12 * max(scale, 1e-300):
            return eps, a[: n + 1]
    return None


def _numerov_factors(omega, epsilon, grid, coulomb):
    r = grid.r
    c = 1.0 if coulomb else 0.0
    g = 0.25 * omega ** 2 * r ** 2 + c / r - epsilon
    return 1.0 - (grid.h ** 2 / 12.0) * g


def _numerov_shoot(omega: float, epsilon: float, grid: RadialGrid,
                   i_match: int, coulomb: bool):
    """Outward Numerov sweep; returns (u array up to i_match, node count)."""
    r = grid.r
    f = _numerov_factors(omega, epsilon, grid, coulomb)
    a = series_coefficients(omega, epsilon, 30, coulomb=coulomb)
    u0 = r[0] * _poly_eval(a, np.array([r[0]]))[0] * math.exp(-omega * r[0] ** 2 / 4)
    u1 = r[1] * _poly_eval(a, np.array([r[1]]))[0] * math.exp(-omega * r[1] ** 2 / 4)
    nodes = 0
    fl = f.tolist()
    ul = [0.0] * (i_match + 1)
    ul[0], ul[1] = u0, u1
    prev_sign = 1.0 if ul[1] >= 0 else -1.0
    for i in range(1, i_match):
        ul[i + 1] = ((12.0 - 10.0 * fl[i]) * ul[i] - fl[i - 1] * ul[i - 1]) / fl[i + 1]
        s = 1.0 if ul[i + 1] >= 0 else -1.0
        if s != prev_sign and ul[i + 1] != 0.0:
            nodes += 1
            prev_sign = s
        if abs(ul[i + 1]) > 1e280:  # rescale to dodge overflow, signs survive
            scale = 1e-280
            ul[i + 1] *= scale
            ul[i] *= scale
    return np.array(ul), nodes


def _numerov_inward(omega, epsilon, grid, i_stop, coulomb):
    """Inward Numerov sweep from the outer boundary down to i_stop.

    Integrating toward the origin amplifies the decaying solution, so the
    tail it produces is clean; used to replace the (divergence-polluted)
    outward tail once the eigenvalue is known.
    """
    f = _numerov_factors(omega, epsilon, grid, coulomb).tolist()
    n = grid.n_points
    ul = [0.0] * n
    ul[n - 1] = 0.0
    ul[n - 2] = 1e-250
    for i in range(n - 2, i_stop, -1):
        ul[i - 1] = ((12.0 - 10.0 * f[i]) * ul[i] - f[i + 1] * ul[i + 1]) / f[i - 1]
        if abs(ul[i - 1]) > 1e250:
            scale = 1e-250
            for j in range(i - 1, n):
                ul[j] *= scale
    return np.array(ul)


def solve_relative_motion(omega: float,
                          max_terms: int = MAX_SERIES_TERMS,
                          coulomb: bool = True,
                          grid: RadialGrid | None = None,
                          n_points: int | None = None) -> RelativeMotionSolution:
    """Ground state of the relative motion.

    Tries recurrence termination first (exact algebraic condition, cheap);
    otherwise bisects the shooting problem on the interior node count,
    which isolates the node-less ground state even when several levels sit
    inside the starting window.
    """
    if omega <= 0:
        raise InvalidInputError("omega must be positive")
    if grid is None:
        grid = make_grid(omega, n_points=n_points or 4000)

    term = find_termination(omega, coulomb=coulomb)
    if term is not None:
        eps, coeffs = term
        u = grid.r * _poly_eval(coeffs, grid.r) * np.exp(-omega * grid.r ** 2 / 4)
        u = u / math.sqrt(integrate_radial(u * u, 0, grid=grid))
        full = np.zeros(max_terms)
        full[: coeffs.size] = coeffs
        return RelativeMotionSolution(omega, eps, grid, u, full,
                                      closed_form=True, coulomb=coulomb)

    # shooting window: oscillator floor up to just above the variational
    # bound from the bare Gaussian, e <= 1.5 omega + sqrt(2 omega / pi)
    lo = 1.5 * omega * (1 + 1e-12)
    hi = 1.5 * omega + 1.1 * math.sqrt(2 * omega / math.pi) + 0.05 * omega
    window = (lo, hi)

    # match point: beyond the classical turning point plus a decay margin
    def match_index(eps):
        r_turn = 2.0 * math.sqrt(eps) / omega
        r_m = math.sqrt(r_turn ** 2 + 120.0 / omega)
        return min(grid.n_points - 1, max(16, int(r_m / grid.h)))

    i_match = match_index(hi)

    def count_nodes(eps):
        return _numerov_shoot(omega, eps, grid, i_match, coulomb)[1]

    # the ground eigenvalue is sup{eps : no interior node}
    if count_nodes(lo) != 0:
        raise SearchFailureError("window floor already has nodes", window=window)
    for _ in range(60):
        if count_nodes(hi) >= 1:
            break
        hi = lo + 2 * (hi - lo)
    else:
        raise SearchFailureError("no node appears in the energy window",
                                 window=(lo, hi))
    a, b = lo, hi
    while b - a > BISECTION_TOL * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        if count_nodes(mid) == 0:
            a = mid
        else:
            b = mid
    eps = 0.5 * (a + b)

    # final wavefunction by two-sided integration glued at the outer
    # turning point: the outward tail at the bisected energy is dominated
    # by the diverging admixture, while inward integration is stable
    r_turn = 2.0 * math.sqrt(eps) / omega
    i_glue = min(grid.n_points - 16, max(16, int(r_turn / grid.h)))
    u_out, _ = _numerov_shoot(omega, eps, grid, i_glue + 1, coulomb)
    u_in = _numerov_inward(omega, eps, grid, i_glue - 1, coulomb)
    u = np.zeros(grid.n_points)
    u[: i_glue + 1] = u_out[: i_glue + 1]
    u[i_glue:] = u_in[i_glue:] * (u_out[i_glue] / u_in[i_glue])
    norm = math.sqrt(integrate_radial(u * u, 0, grid=grid))
    u = u / norm
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    coeffs = series_coefficients(omega, eps, max_terms, coulomb=coulomb)
    return RelativeMotionSolution(omega, eps, grid, u, coeffs,
                                  closed_form=False, coulomb=coulomb)


@dataclass(frozen=True)
class ExactWavefunction:
    """Exact two-electron ground state with its sector projection."""

    problem: HookeProblem
    rel: RelativeMotionSolution
    omega_com: float
    energy: float
    sectors: SectorWavefunction

    @property
    def com_exponent(self) -> float:
        # centre-of-mass Gaussian exp(-M omega R^2 / 2) with M = 2
        return self.problem.omega

    def phi_rel(self):
        return self.rel.phi_callable()


def assemble_exact_wavefunction(rel: RelativeMotionSolution,
                                l_max: int = 8,
                                nodes: int = 128,
                                sector_grid: RadialGrid | None = None) -> ExactWavefunction:
    """Combine the relative solution with the centre-of-mass Gaussian and
    project onto Legendre sectors."""
    omega = rel.omega
    problem = HookeProblem(omega)
    if sector_grid is None:
        stride = max(1, rel.grid.n_points // 480)
        sector_grid = rel.grid.subgrid(stride, r_cut=14.0 / math.sqrt(omega))
    e_com = 1.5 * omega
    psi = SectorWavefunction.from_separable(
        rel.phi_callable(), com_exponent=omega, grid=sector_grid,
        l_max=l_max, nodes=nodes)
    return ExactWavefunction(problem=problem, rel=rel, omega_com=omega,
                             energy=rel.epsilon_rel + e_com, sectors=psi)


def solve_exact(omega: float, n_points: int = 4000, l_max: int = 8,
                nodes: int = 128, coulomb: bool = True) -> ExactWavefunction:
    rel = solve_relative_motion(omega, coulomb=coulomb, n_points=n_points)
    return assemble_exact_wavefunction(rel, l_max=l_max, nodes=nodes)


def exact_density(psi: ExactWavefunction,
                  grid: RadialGrid | None = None) -> RadialFunction:
    """Ground-state density, normalized to 2 electrons.

    Evaluated from the separable relative/centre-of-mass structure (the
    centre-of-mass angular fold is analytic), on the requested grid; the
    sector-representation route is available as
    ``psi.sectors.density_values()`` and agrees on the sector grid.
    """
    grid = grid or psi.rel.grid
    raw = separable_density(psi.phi_rel(), psi.com_exponent, psi.rel.grid, grid.r)
    total = integrate_radial(raw, 2, grid=grid) * 4 * np.pi
    return RadialFunction(grid, raw * (2.0 / total), kind="density")


def interaction_ratio(psi: ExactWavefunction) -> float:
    """<Coulomb repulsion> / <external confinement>."""
    omega = psi.problem.omega
    if not psi.rel.coulomb:
        return 0.0
    vee = psi.rel.expectation_r_power(-1)
    vext = 0.25 * omega ** 2 * psi.rel.expectation_r_power(2) + 0.75 * omega
    return vee / vext


def expectation_T_plus_Vee(psi: ExactWavefunction | SectorWavefunction) -> float:
    """<T + Vee>, the constrained-search objective.

    For the exact (relative x centre-of-mass) state this is evaluated in
    the separated frame, where it is free of angular truncation: the
    interelectronic cusp makes the Legendre expansion converge only
    algebraically, so the sector multipole route is reserved for states
    that are band-limited in cos(theta) by construction.
    """
    if isinstance(psi, ExactWavefunction):
        omega = psi.problem.omega
        t_rel = psi.rel.kinetic_energy()
        t_com = 0.75 * omega  # Gaussian centre of mass, mass 2, frequency omega
        vee = psi.rel.expectation_r_power(-1) if psi.rel.coulomb else 0.0
        return t_rel + t_com + vee
    return psi.kinetic_expectation() + psi.coulomb_expectation()


def exact_energy_components(psi: ExactWavefunction) -> dict:
    """Kinetic, external and Coulomb pieces from the relative/CM split."""
    omega = psi.problem.omega
    vee = psi.rel.expectation_r_power(-1) if psi.rel.coulomb else 0.0
    vext = 0.25 * omega ** 2 * psi.rel.expectation_r_power(2) + 0.75 * omega
    kinetic = psi.energy - vext - vee
    return {"T": kinetic, "Vext": vext, "Vee": vee, "E": psi.energy}
