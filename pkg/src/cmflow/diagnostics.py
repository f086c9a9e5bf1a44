"""Conserved quantities, error norms, EOC tables and spectrum fits.

All quantities use the domain-averaged inner product <f, g> =
mean(f * g) over grid nodes, which is spectrally accurate for periodic
fields and consistent with the shell-spectrum normalization.  Everything
here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .spectral import SpectralWorkspace, curl2d, inv_laplace


@dataclass
class TimeSeriesRecord:
    t: float
    dt: float
    e_kin: float
    e_pot: float
    e_tot: float
    h_c: float
    a_sq: float
    max_u: float
    max_j: float
    n_submaps: int

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


def energies(ux, uy, bx, by):
    """(kinetic, magnetic, total) energy: E = 1/2 ||.||^2, domain-averaged."""
    e_kin = 0.5 * float(np.mean(np.square(ux) + np.square(uy)))
    e_pot = 0.5 * float(np.mean(np.square(bx) + np.square(by)))
    return e_kin, e_pot, e_kin + e_pot


def cross_helicity(ux, uy, bx, by) -> float:
    return float(np.mean(ux * bx + uy * by))


def squared_potential(bx, by, ws: SpectralWorkspace) -> float:
    """1/2 ||a||^2 for the scalar potential solving lap(a) = curl(B)."""
    j = curl2d(bx, by, ws)
    a = inv_laplace(j, ws)
    return 0.5 * float(np.mean(np.square(a)))


def linf_error(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


def eoc(errors) -> np.ndarray:
    """Per-halving convergence orders log2(e_coarse / e_fine).

    ``errors`` is ordered from coarsest to finest with the resolution (or
    step count) doubling between entries.
    """
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size < 2:
        raise ValueError("need at least two errors")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive")
    return np.log2(errors[:-1] / errors[1:])


def spectrum_fit(E, k_lo: int, k_hi: int) -> float:
    """Least-squares slope of log E(k) vs log k on [k_lo, k_hi], skipping empty shells."""
    if not k_hi > k_lo >= 1:
        raise ValueError("need k_hi > k_lo >= 1")
    E = np.asarray(E, dtype=np.float64)
    if k_hi >= E.size:
        raise ValueError(f"k_hi={k_hi} outside spectrum of length {E.size}")
    k = np.arange(k_lo, k_hi + 1)
    e = E[k_lo:k_hi + 1]
    keep = e > 0
    if keep.sum() < 2:
        raise ValueError("fewer than two nonempty shells in fit range")
    slope, _ = np.polyfit(np.log(k[keep]), np.log(e[keep]), 1)
    return float(slope)
