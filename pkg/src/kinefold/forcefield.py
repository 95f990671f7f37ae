"""Electrostatic and van der Waals energies and forces.

Truncated, weighted pairwise sums in kcal/mol, Angstroms, and elementary
charges.  The Coulomb prefactor (332.06 kcal A mol^-1 e^-2) folds the
1/(4 pi eps0) conversion; the default dielectric grows linearly with
separation to mimic solvent screening, and the force expression keeps
the dielectric frozen at the instantaneous distance (the conventional
form for a distance-dependent dielectric).  Van der Waals interactions
use the 6-12 form with well depth sqrt(eps_i eps_j) and minimum at the
radius sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, StericClashError
from .spatial import NeighborTable, filtered_pairs

COULOMB_K = 332.06          # kcal A / (mol e^2)
MIN_DISTANCE = 1e-6         # A; closer pairs abort as steric clashes


@dataclass(frozen=True)
class AtomParams:
    """Per-atom nonbonded parameters (struct of arrays)."""

    q: np.ndarray          # charge, e
    R: np.ndarray          # van der Waals radius, A
    eps: np.ndarray        # well depth, kcal/mol
    gamma: np.ndarray      # solvation parameter, kcal/(mol A^2)
    solv_class: tuple[str, ...]

    def __post_init__(self):
        n = len(self.q)
        for name in ("R", "eps", "gamma"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError("parameter arrays must share one length")
        if np.any(self.R <= 0):
            raise ConfigurationError("van der Waals radii must be positive")
        if np.any(self.eps < 0):
            raise ConfigurationError("well depths must be non-negative")

    @property
    def n_atoms(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class DielectricModel:
    """kappa(d): ``distance`` mode uses d/1A, ``constant`` a fixed value."""

    mode: str = "distance"
    kappa: float = 1.0

    def __post_init__(self):
        if self.mode not in ("distance", "constant"):
            raise ConfigurationError(f"unknown dielectric mode {self.mode!r}")
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")

    def of(self, d: np.ndarray) -> np.ndarray:
        if self.mode == "distance":
            return np.asarray(d, float)
        return np.full(np.shape(d), self.kappa)


@dataclass(frozen=True)
class EnergyBreakdown:
    g_elec: float
    g_vdw: float
    g_cav: float

    @property
    def g_total(self) -> float:
        return self.g_elec + self.g_vdw + self.g_cav


def extract_pairs(positions, table: NeighborTable, d_cut: float):
    """Exact cut-off pairs (i < j, distances) with the steric-clash guard."""
    i, j, d = filtered_pairs(table, positions, d_cut)
    if len(d) and float(d.min()) < MIN_DISTANCE:
        k = int(np.argmin(d))
        raise StericClashError(
            f"atoms {i[k]} and {j[k]} closer than {MIN_DISTANCE} A (d={d[k]:.3e})"
        )
    return i, j, d


def _pair_terms(positions, table, d_cut, weights, kind):
    i, j, d = extract_pairs(positions, table, d_cut)
    w = weights.weights_for(i, j, kind)
    return i, j, d, w


def elec_pair_quantities(params, i, j, d, w, dielectric):
    """Energy and force magnitude per pair for the Coulomb term."""
    kap = dielectric.of(d)
    e = COULOMB_K * w * params.q[i] * params.q[j] / (kap * d)
    mag = COULOMB_K * w * params.q[i] * params.q[j] / (kap * d * d)
    return e, mag


def vdw_pair_quantities(params, i, j, d, w):
    """Energy and force magnitude per pair for the 6-12 term."""
    eps = np.sqrt(params.eps[i] * params.eps[j])
    dd = params.R[i] + params.R[j]
    ratio6 = dd**6 / d**6
    e = w * eps * (ratio6 * ratio6 - 2.0 * ratio6)
    mag = 12.0 * w * eps * (dd**12 / d**13 - dd**6 / d**7)
    return e, mag


def accumulate_pair_forces(n, positions, i, j, d, mag) -> np.ndarray:
    return _accumulate_n(n, positions, i, j, d, mag)


def elec_energy(positions, params: AtomParams, table: NeighborTable,
                weights, d_cut: float = 9.0,
                dielectric: DielectricModel = DielectricModel()) -> float:
    """Truncated Coulomb energy, each unordered pair counted once."""
    i, j, d, w = _pair_terms(positions, table, d_cut, weights, "elec")
    kap = dielectric.of(d)
    return float(np.sum(COULOMB_K * w * params.q[i] * params.q[j] / (kap * d)))


def elec_forces(positions, params: AtomParams, table: NeighborTable,
                weights, d_cut: float = 9.0,
                dielectric: DielectricModel = DielectricModel()) -> np.ndarray:
    """Per-atom Coulomb force vectors (kcal mol^-1 A^-1)."""
    i, j, d, w = _pair_terms(positions, table, d_cut, weights, "elec")
    kap = dielectric.of(d)
    mag = COULOMB_K * w * params.q[i] * params.q[j] / (kap * d * d)
    return _accumulate(positions, i, j, d, mag)


def vdw_energy(positions, params: AtomParams, table: NeighborTable,
               weights, d_cut: float = 5.0) -> float:
    """Truncated 6-12 energy, each unordered pair counted once."""
    i, j, d, w = _pair_terms(positions, table, d_cut, weights, "vdw")
    eps = np.sqrt(params.eps[i] * params.eps[j])
    ratio6 = (params.R[i] + params.R[j]) ** 6 / d**6
    return float(np.sum(w * eps * (ratio6 * ratio6 - 2.0 * ratio6)))


def vdw_forces(positions, params: AtomParams, table: NeighborTable,
               weights, d_cut: float = 5.0) -> np.ndarray:
    """Per-atom van der Waals force vectors."""
    i, j, d, w = _pair_terms(positions, table, d_cut, weights, "vdw")
    eps = np.sqrt(params.eps[i] * params.eps[j])
    dd = params.R[i] + params.R[j]
    mag = 12.0 * w * eps * (dd**12 / d**13 - dd**6 / d**7)
    return _accumulate(positions, i, j, d, mag)


def _accumulate(positions, i, j, d, mag) -> np.ndarray:
    return _accumulate_n(len(positions), positions, i, j, d, mag)


def _accumulate_n(n, positions, i, j, d, mag) -> np.ndarray:
    """Scatter +/- mag * e_ij onto atoms i and j (action equals reaction)."""
    out = np.zeros((n, 3))
    if len(d) == 0:
        return out
    e = (positions[i] - positions[j]) / d[:, None]
    f = mag[:, None] * e
    for axis in range(3):
        out[:, axis] += np.bincount(i, weights=f[:, axis], minlength=n)
        out[:, axis] -= np.bincount(j, weights=f[:, axis], minlength=n)
    return out
