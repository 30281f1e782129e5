"""Canonical two-electron wavefunction representation.

A singlet S state of two electrons in a central trap can be written as

    psi(r1, r2, theta) = sum_l F_l(r1, r2) P_l(cos theta)

with theta the interelectronic angle and F_l symmetric in (r1, r2).  All
observables used here reduce to radial integrals of the sector amplitudes:

    <psi|psi>  = sum_l 16 pi^2/(2l+1) * ||F_l||^2     (r1^2 r2^2 measure)
    n(r)       = 2 sum_l 4 pi/(2l+1) * int F_l(r, s)^2 s^2 ds
    <1/r12>    = 8 pi^2 sum_{l,k,l'} T_{lkl'} int int F_l W_k F_l'
                 with W_k = min^k / max^(k+1) and T the Legendre triple
                 products.

Internally the reduced amplitudes G_l = r1 r2 F_l are used, which absorb
the radial measure and vanish at the origin.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError, TruncationWarning
from .numerics import RadialGrid, legendre_matrix, legendre_triple_products

__all__ = ["SectorWavefunction", "separable_density"]

DEFAULT_L_MAX = 8
DEFAULT_ANGLE_NODES = 128
L_MAX_CAP = 16


def _row_cumulative(mat: np.ndarray, h: float) -> np.ndarray:
    """Per-row running integral over r2 = h..Nh, 4th-order accurate.

    Same corrected-trapezoid scheme as numerics.cumulative_integral, with
    the origin column supplied by cubic extrapolation.
    """
    origin = (4 * mat[:, :1] - 6 * mat[:, 1:2] + 4 * mat[:, 2:3] - mat[:, 3:4])
    v = np.hstack([origin, mat])
    cum = np.hstack([np.zeros((mat.shape[0], 1)),
                     np.cumsum((v[:, 1:] + v[:, :-1]) * (h / 2.0), axis=1)])
    d = np.empty_like(v)
    d[:, 2:-2] = (v[:, :-4] - 8 * v[:, 1:-3] + 8 * v[:, 3:-1] - v[:, 4:]) / (12 * h)
    for i in (0, 1):
        d[:, i] = (-25 * v[:, i] + 48 * v[:, i + 1] - 36 * v[:, i + 2]
                   + 16 * v[:, i + 3] - 3 * v[:, i + 4]) / (12 * h)
    for i in (-2, -1):
        d[:, i] = (25 * v[:, i] - 48 * v[:, i - 1] + 36 * v[:, i - 2]
                   - 16 * v[:, i - 3] + 3 * v[:, i - 4]) / (12 * h)
    cum -= (h * h / 12.0) * (d - d[:, :1])
    return cum[:, 1:]


def _row_multipole_integral(D: np.ndarray, k: int, grid: RadialGrid) -> float:
    """int int D(r1, r2) min^k/max^(k+1) dr1 dr2, split exactly at r1 = r2."""
    r = grid.r
    w = grid.positive_weights()
    low = _row_cumulative(D * r[None, :] ** k, grid.h)
    high = _row_cumulative(D * r[None, :] ** (-(k + 1)), grid.h)
    diag = np.arange(r.size)
    inner = low[diag, diag] * r ** (-(k + 1))
    outer = (high[:, -1] - high[diag, diag]) * r ** k
    return float(w @ (inner + outer))


def _axis0_derivative(mat: np.ndarray, h: float) -> np.ndarray:
    """d/dr1 of a matrix whose rows sample r1 = h..N h, with f(0) = 0."""
    ext = np.vstack([np.zeros((1, mat.shape[1])), mat])
    d = np.empty_like(ext)
    d[2:-2] = (ext[:-4] - 8 * ext[1:-3] + 8 * ext[3:-1] - ext[4:]) / (12 * h)
    for i in (0, 1):
        d[i] = (-25 * ext[i] + 48 * ext[i + 1] - 36 * ext[i + 2]
                + 16 * ext[i + 3] - 3 * ext[i + 4]) / (12 * h)
    for i in (-2, -1):
        d[i] = (25 * ext[i] - 48 * ext[i - 1] + 36 * ext[i - 2]
                - 16 * ext[i - 3] + 3 * ext[i - 4]) / (12 * h)
    return d[1:]


@dataclass(frozen=True)
class SectorWavefunction:
    """Legendre-sector amplitudes F_l(r1, r2) of a two-electron S state."""

    grid: RadialGrid
    sectors: np.ndarray  # shape (l_max + 1, n, n)

    def __post_init__(self):
        s = np.asarray(self.sectors, dtype=float)
        n = self.grid.n_points
        if s.ndim != 3 or s.shape[1:] != (n, n):
            raise InvalidInputError("sectors must have shape (l_max+1, n, n)")
        object.__setattr__(self, "sectors", s)

    @property
    def l_max(self) -> int:
        return self.sectors.shape[0] - 1

    def prefactors(self) -> np.ndarray:
        l = np.arange(self.l_max + 1)
        return 16 * np.pi ** 2 / (2 * l + 1)

    def reduced(self) -> np.ndarray:
        """G_l = r1 r2 F_l."""
        rr = np.outer(self.grid.r, self.grid.r)
        return self.sectors * rr

    def sector_norms(self) -> np.ndarray:
        w = self.grid.positive_weights()
        G = self.reduced()
        return self.prefactors() * np.einsum("i,lij,j->l", w, G * G, w)

    def norm_squared(self) -> float:
        return float(self.sector_norms().sum())

    def normalized(self) -> "SectorWavefunction":
        n2 = self.norm_squared()
        if n2 <= 0:
            raise InvalidInputError("cannot normalize a null state")
        return SectorWavefunction(self.grid, self.sectors / np.sqrt(n2))

    def exchange_asymmetry(self) -> float:
        return float(max(np.max(np.abs(F - F.T)) for F in self.sectors))

    def symmetrized(self) -> "SectorWavefunction":
        sym = 0.5 * (self.sectors + np.transpose(self.sectors, (0, 2, 1)))
        return SectorWavefunction(self.grid, sym)

    # -- observables ----------------------------------------------------

    def density_values(self) -> np.ndarray:
        """n(r) on this grid; integrates to 2 for a normalized state."""
        w = self.grid.positive_weights()
        G = self.reduced()
        l = np.arange(self.l_max + 1)
        contrib = np.einsum("lij,j->li", G * G, w)  # int G^2 dr2
        n = 2.0 * (4 * np.pi / (2 * l + 1)) @ contrib / self.grid.r ** 2
        return np.maximum(n, 0.0)

    def kinetic_expectation(self) -> float:
        """<T> for the (internally normalized) state, both electrons."""
        # (dG/dr1)^2 does not vanish at the origin, so the origin-folded
        # weights are the right rule here
        w = self.grid.quadrature_weights()
        h = self.grid.h
        r = self.grid.r
        G = self.reduced()
        total = 0.0
        for l, pref in enumerate(self.prefactors()):
            dG = _axis0_derivative(G[l], h)
            term = 0.5 * np.einsum("i,ij,j->", w, dG * dG, w)
            if l > 0:
                over_r = G[l] / r[:, None]
                term += 0.5 * l * (l + 1) * np.einsum("i,ij,j->", w, over_r * over_r, w)
            total += pref * term
        return 2.0 * total / self.norm_squared()

    def coulomb_expectation(self) -> float:
        """<1 / |x1 - x2|> via the multipole expansion of the kernel.

        Each multipole component is integrated with the inner/outer split
        of min^k/max^(k+1) along every r1 row, so the kernel's derivative
        kink at r1 = r2 never crosses a quadrature panel.
        """
        G = self.reduced()
        lm = self.l_max
        triple = legendre_triple_products(lm, 2 * lm, lm)
        total = 0.0
        for k in range(2 * lm + 1):
            T = triple[:, k, :]
            if np.max(np.abs(T)) < 1e-15:
                continue
            # D_k(r1, r2) = sum_{l,m} T_{lkm} G_l G_m for this multipole
            D = np.zeros_like(G[0])
            for l in range(lm + 1):
                for m in range(l, lm + 1):
                    t = T[l, m]
                    if abs(t) < 1e-15:
                        continue
                    D += (t if l == m else 2 * t) * G[l] * G[m]
            total += _row_multipole_integral(D, k, self.grid)
        return 8 * np.pi ** 2 * total / self.norm_squared()

    def external_expectation(self, omega: float) -> float:
        """<(omega^2 / 2)(r1^2 + r2^2)>."""
        w = self.grid.positive_weights()
        r2 = self.grid.r ** 2
        G = self.reduced()
        weight = 0.5 * omega ** 2 * np.add.outer(r2, r2)
        per_l = np.einsum("i,lij,j->l", w, G * G * weight, w)
        return float(self.prefactors() @ per_l) / self.norm_squared()

    def internal_energy_expectation(self) -> float:
        """<T + Vee>, the quantity minimized by constrained search."""
        return self.kinetic_expectation() + self.coulomb_expectation()

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """psi(r1, r2, x=cos theta) on the grid, shape (n, n, len(x))."""
        P = legendre_matrix(self.l_max, np.asarray(x, dtype=float))
        return np.einsum("lij,lq->ijq", self.sectors, P)

    # -- constructors ----------------------------------------------------

    @staticmethod
    def from_separable(phi_rel: Callable[[np.ndarray], np.ndarray],
                       com_exponent: float,
                       grid: RadialGrid,
                       l_max: int = DEFAULT_L_MAX,
                       nodes: int = DEFAULT_ANGLE_NODES,
                       auto_extend: bool = True,
                       tail_share: float = 1e-8,
                       deficit_tol: float = 1e-6) -> "SectorWavefunction":
        """Project psi = phi_rel(|x1 - x2|) * exp(-a |x1 + x2|^2 / 4) onto
        Legendre sectors by Gauss quadrature in cos(theta).

        ``com_exponent`` is a in the centre-of-mass factor exp(-a R^2); the
        result is normalized.  The sector count grows until the top sector
        carries less than ``tail_share`` of the norm (or the cap is hit, in
        which case a TruncationWarning reports the deficit).
        """
        lm = l_max
        while True:
            psi = _project_separable(phi_rel, com_exponent, grid, lm, nodes)
            norms = psi.sector_norms()
            share = norms[-1] / norms.sum()
            if share <= tail_share or not auto_extend or lm >= L_MAX_CAP:
                break
            lm = min(L_MAX_CAP, lm + 4)
        if share > deficit_tol:
            warnings.warn(
                f"sector truncation at l_max={lm} leaves norm share {share:.2e}",
                TruncationWarning)
        return psi.normalized()


def _project_separable(phi_rel, com_exponent, grid, l_max, nodes):
    x, wq = np.polynomial.legendre.leggauss(nodes)
    P = legendre_matrix(l_max, x)
    r1 = grid.r[:, None]
    r2 = grid.r[None, :]
    ssum = r1 ** 2 + r2 ** 2
    prod = r1 * r2
    F = np.zeros((l_max + 1, grid.n_points, grid.n_points))
    for q in range(nodes):
        rel = np.sqrt(np.maximum(ssum - 2 * prod * x[q], 0.0))
        com2 = 0.25 * (ssum + 2 * prod * x[q])
        vals = phi_rel(rel) * np.exp(-com_exponent * com2)
        for l in range(l_max + 1):
            F[l] += (0.5 * (2 * l + 1) * wq[q] * P[l, q]) * vals
    psi = SectorWavefunction(grid, F)
    return psi.symmetrized()


def separable_density(phi_rel: Callable[[np.ndarray], np.ndarray],
                      com_exponent: float,
                      rel_grid: RadialGrid,
                      out_r: np.ndarray) -> np.ndarray:
    """Density of psi = phi_rel(r) exp(-a R^2), unnormalized, at radii out_r.

    Folding the centre-of-mass Gaussian analytically over angles gives

        n(r1) = (2 pi / (a r1)) int_0^inf s phi_rel(s)^2
                * exp(-2a (r1 - s/2)^2) (1 - exp(-4 a r1 s)) ds

    which is numerically stable at every radius (both factors lie in
    [0, 1]).  Multiply by 2 / <psi|psi> for the physical two-electron
    density.
    """
    a = com_exponent
    s = rel_grid.r
    w = rel_grid.positive_weights()
    base = s * phi_rel(s) ** 2 * w
    out = np.empty_like(out_r)
    # chunked broadcast keeps the (len(out_r), n_rel) temporaries small
    chunk = max(1, int(2e6 / s.size))
    for i0 in range(0, out_r.size, chunk):
        r1 = out_r[i0:i0 + chunk, None]
        gauss = np.exp(-2 * a * (r1 - s / 2) ** 2)
        damp = -np.expm1(-4 * a * r1 * s)
        out[i0:i0 + chunk] = (gauss * damp) @ base / r1[:, 0]
    return (2 * np.pi / a) * out
