"""Reduced density matrices and entanglement entropies.

For a singlet S state in sector form, tracing out one electron block-
diagonalizes the one-body reduced density matrix over angular momentum:
each l carries a radial kernel rho_l(r1, r2) with multiplicity 2l + 1,

    rho_l(r1, r2) = [4 pi / (2l+1)^2] * int F_l(r1, s) F_l(r2, s) s^2 ds,

normalized so that sum_l (2l+1) * 4 pi * int rho_l(r, r) r^2 dr = 1.

Three measures are computed: the linear entropy 1 - Tr rho^2, the Von
Neumann entropy (bits) from the Schmidt spectrum, and the position-space
information entropy (nats) of the density alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidInputError, NumericFailureError
from .numerics import OrthonormalBasis, RadialFunction, RadialGrid, integrate_radial
from .sectors import SectorWavefunction

__all__ = [
    "ReducedDensityMatrix",
    "SchmidtSpectrum",
    "EntropyRecord",
    "build_rdm",
    "linear_entropy",
    "von_neumann_entropy",
    "von_neumann_by_basis",
    "information_entropy",
    "diagonal_approx_S",
    "entropies_of_state",
]

EIGENVALUE_FLOOR = -1e-9
EIGENVALUE_ERROR = -1e-6
TRACE_TOL = 1e-4


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """Per-angular-momentum kernels of the one-electron density matrix."""

    grid: RadialGrid
    kernels: np.ndarray  # shape (l_max + 1, n, n), symmetric per sector

    def __post_init__(self):
        k = np.asarray(self.kernels, dtype=float)
        n = self.grid.n_points
        if k.ndim != 3 or k.shape[1:] != (n, n):
            raise InvalidInputError("kernels must have shape (l_max+1, n, n)")
        object.__setattr__(self, "kernels", k)

    @property
    def l_max(self) -> int:
        return self.kernels.shape[0] - 1

    def degeneracies(self) -> np.ndarray:
        return 2 * np.arange(self.l_max + 1) + 1

    def trace(self) -> float:
        w = self.grid.positive_weights() * self.grid.r ** 2
        diag = np.einsum("lii,i->l", self.kernels, w)
        return float(self.degeneracies() @ diag) * 4 * np.pi

    def purity(self) -> float:
        """Tr rho^2 by kernel self-contraction."""
        w4 = 4 * np.pi * self.grid.positive_weights() * self.grid.r ** 2
        total = 0.0
        for g, k in zip(self.degeneracies(), self.kernels):
            sq = k @ (w4[:, None] * k)  # rho_l^2 kernel
            total += g * float(np.sum(np.diagonal(sq) * w4))
        return total


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Eigenvalues of the reduced density matrix, grouped by sector."""

    eigenvalues: tuple  # tuple of per-l arrays, descending within each l
    provenance: Literal["sector-diagonalization", "basis-projection"]

    def degeneracies(self) -> np.ndarray:
        return 2 * np.arange(len(self.eigenvalues)) + 1

    def weighted_sum(self, power: int = 1) -> float:
        return float(sum(g * np.sum(lam ** power) for g, lam in
                         zip(self.degeneracies(), self.eigenvalues)))

    def flattened(self) -> np.ndarray:
        """All eigenvalues with multiplicity, descending."""
        out = np.concatenate([np.repeat(lam, g) for g, lam in
                              zip(self.degeneracies(), self.eigenvalues)])
        return np.sort(out)[::-1]


@dataclass(frozen=True)
class EntropyRecord:
    """L dimensionless, S in bits (log2), S_n in nats (ln)."""

    omega: float
    linear: float
    von_neumann: float
    information: float | None = None


def build_rdm(psi: SectorWavefunction, trace_tol: float = TRACE_TOL) -> ReducedDensityMatrix:
    """Contract one electron out of a normalized sector wavefunction."""
    grid = psi.grid
    w = grid.positive_weights() * grid.r ** 2
    l = np.arange(psi.l_max + 1)
    pref = 4 * np.pi / (2 * l + 1) ** 2
    kernels = np.einsum("l,lis,s,ljs->lij", pref, psi.sectors, w, psi.sectors,
                        optimize=True)
    rdm = ReducedDensityMatrix(grid, kernels)
    tr = rdm.trace()
    if abs(tr - 1.0) > trace_tol:
        raise InvalidInputError(
            f"reduced density matrix trace {tr:.6f} deviates from 1 by more "
            f"than {trace_tol}; normalize the state first")
    return ReducedDensityMatrix(grid, kernels / tr)


def linear_entropy(rdm: ReducedDensityMatrix) -> float:
    """L = 1 - Tr rho^2 via kernel self-contraction."""
    return 1.0 - rdm.purity()


def von_neumann_entropy(rdm: ReducedDensityMatrix):
    """Schmidt spectrum by per-sector diagonalization and S in bits.

    Each kernel is symmetrized with the sqrt of the r^2 measure so the
    discrete problem is a real symmetric eigenproblem.
    """
    sq = np.sqrt(4 * np.pi * rdm.grid.positive_weights()) * rdm.grid.r
    spectra = []
    for k in rdm.kernels:
        sym = sq[:, None] * k * sq[None, :]
        vals = np.linalg.eigvalsh(sym)[::-1]
        if vals.min() < EIGENVALUE_ERROR:
            raise NumericFailureError(
                f"non-physical kernel: eigenvalue {vals.min():.3e}",
                residual=float(vals.min()))
        vals = np.clip(vals, 0.0, None)
        spectra.append(vals[vals > 0])
    spec = SchmidtSpectrum(tuple(spectra), "sector-diagonalization")
    return spec, schmidt_entropy_bits(spec)


def schmidt_entropy_bits(spec: SchmidtSpectrum) -> float:
    s = 0.0
    for g, lam in zip(spec.degeneracies(), spec.eigenvalues):
        pos = lam[lam > 1e-300]
        s -= g * float(np.sum(pos * np.log2(pos)))
    return s


def linear_entropy_from_spectrum(spec: SchmidtSpectrum) -> float:
    return 1.0 - spec.weighted_sum(power=2)


def von_neumann_by_basis(rdm: ReducedDensityMatrix, basis: OrthonormalBasis,
                         parent_indices: np.ndarray | None = None) -> SchmidtSpectrum:
    """Spectrum of the l = 0 kernel by projection on an orthonormal basis.

    With an orthonormal basis the generalized problem (A - lambda M) c = 0
    reduces to a symmetric eigenproblem for
    A_nn' = int int eta_n rho_0 eta_n' (4 pi r^2)(4 pi r'^2) dr dr'.
    Kept as an independent route to cross-check the grid diagonalization.
    """
    if parent_indices is not None:
        eta = basis.functions[:, parent_indices]
    elif basis.grid.n_points == rdm.grid.n_points:
        eta = basis.functions
    else:
        raise InvalidInputError("basis and kernel grids do not match")
    w = 4 * np.pi * rdm.grid.positive_weights() * rdm.grid.r ** 2
    proj = eta * w
    A = proj @ rdm.kernels[0] @ proj.T
    vals = np.linalg.eigvalsh(0.5 * (A + A.T))[::-1]
    vals = np.clip(vals, 0.0, None)
    return SchmidtSpectrum((vals,), "basis-projection")


def information_entropy(n: RadialFunction) -> float:
    """S_n = -int n ln n d^3 r in nats; integrand taken as 0 where n = 0."""
    vals = n.values
    if np.min(vals) < -1e-12:
        raise InvalidInputError("density has negative entries")
    integrand = np.zeros_like(vals)
    mask = vals > 0
    integrand[mask] = vals[mask] * np.log(vals[mask])
    return -4 * np.pi * integrate_radial(integrand, 2, grid=n.grid)


def diagonal_approx_S(n: RadialFunction, electron_count: int = 2) -> float:
    """Off-diagonal-free estimate S ~ S_n / (N ln 2) + ln N / ln 2 (bits)."""
    s_n = information_entropy(n)
    ln2 = np.log(2.0)
    return s_n / (electron_count * ln2) + np.log(electron_count) / ln2


def entropies_of_state(psi: SectorWavefunction, omega: float,
                       density: RadialFunction | None = None) -> EntropyRecord:
    """Convenience: L, S and (optionally) S_n for a normalized state."""
    rdm = build_rdm(psi)
    spec, s_bits = von_neumann_entropy(rdm)
    lin = linear_entropy(rdm)
    info = information_entropy(density) if density is not None else None
    return EntropyRecord(omega=omega, linear=lin, von_neumann=s_bits,
                         information=info)
