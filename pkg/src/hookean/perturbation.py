"""First-order perturbation theory on top of a Kohn-Sham (or bare
oscillator) reference, for the two-electron harmonic trap.

The full Hamiltonian is split as H = H0 + H', with H0 a sum of single
particle terms containing the frozen effective potential v_int = v_H +
v_xc (zero for the bare-oscillator reference), and

    H' = -sum_i v_int(r_i) + 1 / |x1 - x2|.

The ground state is a singlet; triplet configurations drop out.  Angular
momentum algebra reduces the surviving excited configurations to three
families, each entering the first-order state as a Legendre sector:

  * doubly excited product configurations phi_nlm phi_nl,-m, coupling
    through the Coulomb multipole integral A only; summing over m yields
    A / (4 pi dE) * R_nl R_nl P_l(cos theta);
  * singly excited s configurations (one electron stays in the ground
    orbital), which see v_int and the l = 0 Coulomb kernel;
  * doubly excited non-product pairs (n1 < n2, common l), Coulomb only,
    entering as B / (8 pi dE) * (R_n1l R_n2l + swap) P_l.

All radial integrals use reduced orbitals u = r R with int u^2 dr = 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidInputError, NumericFailureError, TruncationWarning
from .exact import ExactWavefunction, exact_density
from .ksdft import LdaFunctional, ScfState, hartree_potential, invert_ks, lda_vxc, scf_solve
from .numerics import (
    RadialFunction,
    RadialGrid,
    TridiagonalSystem,
    integrate_radial,
    make_grid,
    multipole_pair_integral,
    solve_tridiagonal_eigen,
)
from .sectors import SectorWavefunction

__all__ = [
    "KsSpectrum",
    "CoulombMultipole",
    "PerturbationExpansion",
    "ks_spectrum",
    "coulomb_radial_integrals",
    "first_order_expansion",
    "perturbed_density_and_rdm",
    "energy_percent_error",
]

Source = Literal["exact-vxc", "lda-vxc", "bare-oscillator"]

DEFAULT_N_MAX = 20
DEFAULT_L_MAX = 6
DENOMINATOR_FLOOR = 1e-10


@dataclass(frozen=True)
class KsSpectrum:
    """Radial eigenpairs {u_nl, eps_nl} of the frozen reference potential."""

    omega: float
    grid: RadialGrid
    source: Source
    orbitals: np.ndarray = field(repr=False)   # (l_max+1, n_max+1, n_points)
    energies: np.ndarray                        # (l_max+1, n_max+1)
    v_interaction: np.ndarray = field(repr=False)  # v_H + v_xc on the grid

    @property
    def l_max(self) -> int:
        return self.energies.shape[0] - 1

    @property
    def n_max(self) -> int:
        return self.energies.shape[1] - 1

    @property
    def interacting(self) -> bool:
        return self.source != "bare-oscillator"

    def orthonormality_deviation(self) -> float:
        h = self.grid.h
        worst = 0.0
        for l in range(self.l_max + 1):
            gram = self.orbitals[l] @ self.orbitals[l].T * h
            worst = max(worst, float(np.max(np.abs(gram - np.eye(self.n_max + 1)))))
        return worst


def reference_potential(omega: float, source: Source,
                        grid: RadialGrid | None = None,
                        n_points: int = 4000,
                        functional: LdaFunctional | None = None,
                        scf_state: ScfState | None = None,
                        exact_state: ExactWavefunction | None = None):
    """Frozen v_H + v_xc for the chosen reference, on the chosen grid."""
    if source == "bare-oscillator":
        grid = grid or make_grid(omega, n_points=n_points)
        return grid, np.zeros(grid.n_points)
    if source == "lda-vxc":
        if scf_state is None:
            scf_state = scf_solve(omega, functional=functional, grid=grid,
                                  n_points=n_points)
        grid = scf_state.grid
        n = scf_state.density
        v = hartree_potential(n).values + \
            lda_vxc(n, scf_state.functional or functional or LdaFunctional()).values
        return grid, v
    if source == "exact-vxc":
        if exact_state is None:
            raise InvalidInputError("exact-vxc reference needs the exact state")
        grid = grid or exact_state.rel.grid
        n = exact_density(exact_state, grid=grid)
        v_xc, _, _ = invert_ks(n, omega)
        return grid, hartree_potential(n).values + v_xc.values
    raise InvalidInputError(f"unknown reference source {source!r}")


def ks_spectrum(omega: float, source: Source = "lda-vxc",
                l_max: int = DEFAULT_L_MAX, n_max: int = DEFAULT_N_MAX,
                grid: RadialGrid | None = None, n_points: int = 4000,
                functional: LdaFunctional | None = None,
                scf_state: ScfState | None = None,
                exact_state: ExactWavefunction | None = None) -> KsSpectrum:
    """Diagonalize the frozen reference per angular momentum channel.

    The ground-state self-consistent (or inverted) potential is reused
    unchanged for every l; only the centrifugal term varies.
    """
    grid, v_int = reference_potential(omega, source, grid=grid,
                                      n_points=n_points, functional=functional,
                                      scf_state=scf_state, exact_state=exact_state)
    v_base = 0.5 * omega ** 2 * grid.r ** 2 + v_int
    h2 = grid.h ** 2
    orbitals = np.empty((l_max + 1, n_max + 1, grid.n_points))
    energies = np.empty((l_max + 1, n_max + 1))
    for l in range(l_max + 1):
        v = v_base + l * (l + 1) / (2.0 * grid.r ** 2)
        sys = TridiagonalSystem(1.0 / h2 + v, np.full(grid.n_points - 1, -0.5 / h2))
        pairs = solve_tridiagonal_eigen(sys, n_max + 1, grid_spacing=grid.h)
        for n, (eps, u) in enumerate(pairs):
            if u[np.argmax(np.abs(u))] < 0:
                u = -u
            orbitals[l, n] = u
            energies[l, n] = eps
    return KsSpectrum(omega=omega, grid=grid, source=source,
                      orbitals=orbitals, energies=energies,
                      v_interaction=v_int)


@dataclass(frozen=True)
class CoulombMultipole:
    """Radial Coulomb integrals for one (l; n1, n2) excitation."""

    l: int
    n1: int
    n2: int
    A: float  # product-type double integral (n1 = n2 diagonal case)
    B: float  # symmetrized non-product combination, B = 2A at n1 = n2


def _pair_integral(spec: KsSpectrum, l: int, n1: int, n2: int) -> float:
    """int int [u00 u_{n1 l}](r1) min^l/max^(l+1) [u00 u_{n2 l}](r2)."""
    u0 = spec.orbitals[0, 0]
    f = u0 * spec.orbitals[l, n1]
    g = u0 * spec.orbitals[l, n2]
    return multipole_pair_integral(f, g, l, spec.grid)


def coulomb_radial_integrals(spec: KsSpectrum, l: int, n1: int, n2: int) -> CoulombMultipole:
    a = _pair_integral(spec, l, n1, n2)
    if n1 == n2:
        return CoulombMultipole(l=l, n1=n1, n2=n2, A=a, B=2 * a)
    a2 = _pair_integral(spec, l, n2, n1)
    return CoulombMultipole(l=l, n1=n1, n2=n2, A=a, B=a + a2)


@dataclass(frozen=True)
class Contribution:
    """One excited configuration entering the first-order state."""

    family: Literal["product", "single", "double"]
    l: int
    n1: int
    n2: int
    matrix_element_sq: float  # |<k|H'|0>|^2 summed over m degeneracy
    denominator: float        # E0 - E_k
    amplitude_sq: float       # summed squared coefficients


@dataclass(frozen=True)
class PerturbationExpansion:
    """First-order state and energies for one reference."""

    omega: float
    source: Source
    spectrum: KsSpectrum = field(repr=False)
    e0: float
    e1: float
    e2: float
    coefficients: tuple = field(repr=False)  # Contribution records
    sector_coefficients: np.ndarray = field(repr=False)  # (l_max+1, n+1, n+1)
    first_order_norm_sq: float
    tail_share: float

    @property
    def energy_first_order(self) -> float:
        return self.e0 + self.e1

    @property
    def energy_second_order(self) -> float:
        return self.e0 + self.e1 + self.e2

    def state(self, sector_grid: RadialGrid | None = None) -> SectorWavefunction:
        """Normalized first-order state on a two-electron sector grid."""
        spec = self.spectrum
        if sector_grid is None:
            stride = max(1, spec.grid.n_points // 480)
            sector_grid = spec.grid.subgrid(
                stride, r_cut=14.0 / math.sqrt(self.omega))
        idx = spec.grid.restrict_indices(sector_grid)
        R = spec.orbitals[:, :, idx] / sector_grid.r[None, None, :]
        C = self.sector_coefficients
        sectors = np.einsum("lab,lai,lbj->lij", C, R, R, optimize=True)
        return SectorWavefunction(sector_grid, sectors).normalized()

    def density(self, grid: RadialGrid | None = None) -> RadialFunction:
        """Density of the normalized first-order state on the fine grid.

        Uses orbital orthonormality: with F_l = sum C_ab R_a R_b,
        n(r) = 2 sum_l 4pi/(2l+1) sum_ab [C C^T]_ab R_a(r) R_b(r).
        """
        spec = self.spectrum
        grid = grid or spec.grid
        if grid is spec.grid:
            R = spec.orbitals / grid.r[None, None, :]
        else:
            idx = spec.grid.restrict_indices(grid)
            R = spec.orbitals[:, :, idx] / grid.r[None, None, :]
        C = self.sector_coefficients
        norm_sq = 1.0 + self.first_order_norm_sq
        l = np.arange(C.shape[0])
        pref = 2.0 * (4 * np.pi / (2 * l + 1)) / norm_sq
        G = np.einsum("lab,lcb->lac", C, C)
        vals = np.einsum("l,lac,lai,lci->i", pref, G, R, R, optimize=True)
        return RadialFunction(grid, np.maximum(vals, 0.0), kind="density")


def first_order_expansion(spec: KsSpectrum, coulomb: bool = True,
                          tail_share_tol: float = 1e-3) -> PerturbationExpansion:
    """Assemble the first-order state, E1 and the second-order energy.

    Selection rules are built in: product configurations require n1 = n2,
    l1 = l2, m2 = -m1 and couple through A alone; v_H/v_xc survive only
    for singly excited s configurations; everything else vanishes by
    spherical-harmonic orthogonality.

    ``coulomb=False`` with a bare-oscillator reference makes H' vanish
    identically (test hook): every coefficient, E1 and E2 are then zero.
    """
    omega = spec.omega
    grid = spec.grid
    h = grid.h
    n_max, l_max = spec.n_max, spec.l_max
    u0 = spec.orbitals[0, 0]
    eps = spec.energies
    e00 = eps[0, 0]
    e0_total = 2 * e00

    v_int = spec.v_interaction
    v_expect = float(np.sum(u0 * v_int * u0) * h)
    if not coulomb:
        if spec.interacting:
            raise InvalidInputError(
                "the no-Coulomb hook applies to the bare-oscillator reference")
        C = np.zeros((l_max + 1, n_max + 1, n_max + 1))
        C[0, 0, 0] = 1.0 / (4 * math.pi)
        return PerturbationExpansion(
            omega=omega, source=spec.source, spectrum=spec,
            e0=e0_total, e1=0.0, e2=0.0, coefficients=(),
            sector_coefficients=C, first_order_norm_sq=0.0, tail_share=0.0)
    j_self = _pair_integral(spec, 0, 0, 0)
    e1 = -2 * v_expect + j_self if spec.interacting else j_self

    C = np.zeros((l_max + 1, n_max + 1, n_max + 1))
    C[0, 0, 0] = 1.0 / (4 * math.pi)

    contributions = []
    e2 = 0.0
    norm1 = 0.0
    per_l_weight = np.zeros(l_max + 1)

    def denom_guard(d):
        if abs(d) < DENOMINATOR_FLOOR:
            raise NumericFailureError(
                f"degenerate energy denominator {d:.3e}", residual=d)
        return d

    for l in range(l_max + 1):
        for n in range(n_max + 1):
            if l == 0 and n == 0:
                continue  # the reference configuration itself
            # product family: phi_nlm(1) phi_nl,-m(2), Coulomb only
            a_val = _pair_integral(spec, l, n, n)
            d = denom_guard(e0_total - 2 * eps[l, n])
            C[l, n, n] += a_val / (4 * math.pi * d)
            me_sq = a_val ** 2 / (2 * l + 1)
            amp = me_sq / d ** 2
            e2 += me_sq / d
            norm1 += amp
            per_l_weight[l] += amp
            contributions.append(Contribution("product", l, n, n, me_sq, d, amp))

        if l == 0:
            # singly excited family: (phi_000 phi_n00 + swap)/sqrt(2)
            for n in range(1, n_max + 1):
                c_n = _pair_integral(spec, 0, 0, n)
                v_n = float(np.sum(u0 * v_int * spec.orbitals[0, n]) * h) \
                    if spec.interacting else 0.0
                d = denom_guard(e00 - eps[0, n])
                coeff = (c_n - v_n) / (4 * math.pi * d)
                C[0, 0, n] += coeff
                C[0, n, 0] += coeff
                me_sq = 2 * (c_n - v_n) ** 2
                amp = me_sq / d ** 2
                e2 += me_sq / d
                norm1 += amp
                per_l_weight[0] += amp
                contributions.append(Contribution("single", 0, 0, n, me_sq, d, amp))

        # doubly excited non-product family: n1 < n2, common l; for l = 0
        # both must be excited, for l > 0 n = 0 is already an excited shell
        n_start = 1 if l == 0 else 0
        for n1 in range(n_start, n_max):
            for n2 in range(n1 + 1, n_max + 1):
                b = _pair_integral(spec, l, n1, n2) + _pair_integral(spec, l, n2, n1)
                d = denom_guard(e0_total - eps[l, n1] - eps[l, n2])
                coeff = b / (8 * math.pi * d)
                C[l, n1, n2] += coeff
                C[l, n2, n1] += coeff
                me_sq = b ** 2 / (2 * (2 * l + 1))
                amp = me_sq / d ** 2
                e2 += me_sq / d
                norm1 += amp
                per_l_weight[l] += amp
                contributions.append(Contribution("double", l, n1, n2, me_sq, d, amp))

    tail = float(per_l_weight[l_max] / norm1) if norm1 > 0 else 0.0
    if tail > tail_share_tol:
        warnings.warn(
            f"top angular channel carries {tail:.2e} of the first-order "
            f"weight; increase l_max", TruncationWarning)
    return PerturbationExpansion(
        omega=omega, source=spec.source, spectrum=spec,
        e0=e0_total, e1=e1, e2=e2,
        coefficients=tuple(contributions), sector_coefficients=C,
        first_order_norm_sq=norm1, tail_share=tail)


def perturbed_density_and_rdm(expansion: PerturbationExpansion,
                              grid: RadialGrid | None = None,
                              sector_grid: RadialGrid | None = None):
    """(density on the fine grid, reduced density matrix) of the
    renormalized first-order state."""
    from .entanglement import build_rdm

    n = expansion.density(grid=grid)
    psi = expansion.state(sector_grid=sector_grid)
    return n, build_rdm(psi)


def energy_percent_error(e_approx: float, e_exact: float) -> float:
    if e_exact == 0:
        raise InvalidInputError("exact energy is zero")
    return 100.0 * (e_approx - e_exact) / e_exact


def standard_perturbation_energy(omega: float) -> float:
    """Closed form E0 + E1 for the bare-oscillator reference."""
    return 3 * omega + math.sqrt(2 * omega / math.pi)
