"""FFT-based periodic operators on uniform grids.

Provides the filtered Biot-Savart solve, sharp low-pass filters, spectral
derivatives (curl, divergence, gradient, inverse Laplacian), solenoidal
projection, Fourier shell spectra, and construction of gradient-augmented
node data from grid values.

Transforms are normalized so that the mean of |f|^2 over nodes equals the
sum of |f_hat|^2 over modes (domain-averaged Parseval).  Derivative
operators zero the Nyquist line, which only affects fields with content at
the grid limit.
"""

from __future__ import annotations

import numpy as np
import scipy.fft as sfft

from .hermite import GridSpec, HermiteField, HermiteVectorField


class SpectralWorkspace:
    """Wavenumber tables and filter masks for one grid.

    Mutable scratch state is limited to the mask cache; use one workspace
    per driver loop (not shared across threads).
    """

    def __init__(self, grid: GridSpec, cutoff_map: float = 0.9, cutoff_source: float = 0.1):
        if not (0.0 < cutoff_map <= 1.0 and 0.0 < cutoff_source <= 1.0):
            raise ValueError("cutoff fractions must lie in (0, 1]")
        # integer wavenumbers require the 2*pi domain
        self.grid = grid
        self.cutoff_map = cutoff_map
        self.cutoff_source = cutoff_source
        nx, ny = grid.nx, grid.ny
        kx = sfft.fftfreq(nx, d=grid.lx / (2.0 * np.pi * nx))
        ky = sfft.rfftfreq(ny, d=grid.ly / (2.0 * np.pi * ny))
        self.kx = kx
        self.ky = ky
        self.KX, self.KY = np.meshgrid(kx, ky, indexing="ij")
        self.K2 = self.KX**2 + self.KY**2
        inv = np.zeros_like(self.K2)
        nz = self.K2 > 0
        inv[nz] = 1.0 / self.K2[nz]
        self.K2inv = inv
        # derivative factors with the Nyquist line removed
        dx = self.KX.copy()
        dy = self.KY.copy()
        if nx % 2 == 0:
            dx[nx // 2, :] = 0.0
        if ny % 2 == 0:
            dy[:, ny // 2] = 0.0
        self.DX = 1j * dx
        self.DY = 1j * dy
        self.kmax = min(nx, ny) // 2
        self._masks: dict[float, np.ndarray] = {}

    def fwd(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.shape != self.grid.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite field values")
        return sfft.rfft2(f)

    def inv(self, fhat):
        return sfft.irfft2(fhat, s=self.grid.shape)

    def mask(self, cutoff: float) -> np.ndarray:
        """Sharp square cutoff: keep modes with max(|kx|, |ky|) <= cutoff*kmax."""
        if not (0.0 < cutoff <= 1.0):
            raise ValueError(f"cutoff must lie in (0, 1], got {cutoff}")
        m = self._masks.get(cutoff)
        if m is None:
            kc = cutoff * self.kmax
            m = (np.abs(self.KX) <= kc) & (np.abs(self.KY) <= kc)
            self._masks[cutoff] = m
        return m


def lowpass(f, cutoff: float, ws: SpectralWorkspace):
    """Sharp spectral truncation; idempotent, identity at cutoff=1."""
    if cutoff == 1.0:
        return np.asarray(f, dtype=np.float64).copy()
    return ws.inv(ws.fwd(f) * ws.mask(cutoff))


def grad_spectral(f, ws: SpectralWorkspace):
    fh = ws.fwd(f)
    return ws.inv(ws.DX * fh), ws.inv(ws.DY * fh)


def curl2d(vx, vy, ws: SpectralWorkspace):
    """Scalar curl d(vy)/dx - d(vx)/dy."""
    return ws.inv(ws.DX * ws.fwd(vy) - ws.DY * ws.fwd(vx))


def div2d(vx, vy, ws: SpectralWorkspace):
    return ws.inv(ws.DX * ws.fwd(vx) + ws.DY * ws.fwd(vy))


def laplacian(f, ws: SpectralWorkspace):
    return ws.inv(-ws.K2 * ws.fwd(f))


def inv_laplace(f, ws: SpectralWorkspace):
    """Mean-zero solution of lap(a) = f; the mean of f is projected out."""
    fh = ws.fwd(f)
    fh[0, 0] = 0.0
    return ws.inv(-fh * ws.K2inv)


def leray_project(vx, vy, ws: SpectralWorkspace):
    """Project onto divergence-free fields: v - grad(invlap(div v))."""
    vxh = ws.fwd(vx)
    vyh = ws.fwd(vy)
    s = (ws.KX * vxh + ws.KY * vyh) * ws.K2inv
    return ws.inv(vxh - ws.KX * s), ws.inv(vyh - ws.KY * s)


def hermite_data_spectral(values, ws: SpectralWorkspace):
    """Node data (f, fx, fy, fxy) with derivatives by spectral differentiation."""
    values = np.asarray(values, dtype=np.float64)
    fh = ws.fwd(values)
    data = np.empty((4,) + ws.grid.shape)
    data[0] = values
    data[1] = ws.inv(ws.DX * fh)
    data[2] = ws.inv(ws.DY * fh)
    data[3] = ws.inv(ws.DX * ws.DY * fh)
    return data


def biot_savart(omega, ws: SpectralWorkspace, cutoff: float | None = None) -> HermiteVectorField:
    """Divergence-free velocity from scalar vorticity with sharp filtering.

    u_hat = (i ky, -i kx) w_hat / |k|^2 for 0 < max(|kx|,|ky|) <= cutoff*kmax,
    zero above the cutoff and for the mean mode.  Returns a Hermite velocity
    field whose derivative planes come from the spectral coefficients.
    """
    if cutoff is None:
        cutoff = ws.cutoff_map
    wh = ws.fwd(omega)
    wh[0, 0] = 0.0
    wh *= ws.mask(cutoff)
    psi = wh * ws.K2inv  # = -stream function hat
    uxh = 1j * ws.KY * psi
    uyh = -1j * ws.KX * psi
    data = np.empty((2, 4) + ws.grid.shape)
    for c, uh in enumerate((uxh, uyh)):
        data[c, 0] = ws.inv(uh)
        data[c, 1] = ws.inv(ws.DX * uh)
        data[c, 2] = ws.inv(ws.DY * uh)
        data[c, 3] = ws.inv(ws.DX * ws.DY * uh)
    return HermiteVectorField(ws.grid, data)


def hermite_vector_spectral(vx, vy, ws: SpectralWorkspace) -> HermiteVectorField:
    """Hermite vector field from component grid values, spectral derivatives."""
    data = np.empty((2, 4) + ws.grid.shape)
    data[0] = hermite_data_spectral(vx, ws)
    data[1] = hermite_data_spectral(vy, ws)
    return HermiteVectorField(ws.grid, data)


def shell_spectrum(components, ws: SpectralWorkspace):
    """Energy per integer wavenumber shell, E[k] for k = 0..kmax.

    E(k) = 1/2 * sum_{k-1/2 < |k|_2 <= k+1/2} |v_hat|^2 with the transform
    normalized so that sum_k E(k) = 1/2 * mean(|v|^2) (domain-averaged
    Parseval).  ``components`` is one array or a sequence of component
    arrays; shells beyond kmax (corner modes) are dropped.
    """
    if isinstance(components, np.ndarray) and components.ndim == 2:
        components = (components,)
    nx, ny = ws.grid.shape
    kx = sfft.fftfreq(nx, d=1.0 / nx)
    ky = sfft.fftfreq(ny, d=1.0 / ny)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    kmag = np.hypot(KX, KY)
    shells = np.ceil(kmag - 0.5).astype(np.int64)
    power = np.zeros(ws.grid.shape)
    for comp in components:
        comp = np.asarray(comp, dtype=np.float64)
        if comp.shape != ws.grid.shape:
            raise ValueError("component shape does not match grid")
        ch = sfft.fft2(comp) / (nx * ny)
        power += np.abs(ch) ** 2
    nshell = ws.kmax + 1
    keep = shells < nshell
    spec = np.bincount(shells[keep].ravel(), weights=power[keep].ravel(), minlength=nshell)
    return 0.5 * spec[:nshell]


def tail_energy_fraction(values, ws: SpectralWorkspace, frac: float = 2.0 / 3.0) -> float:
    """Fraction of spectral energy with max(|kx|,|ky|) above frac*kmax.

    The mean mode is excluded from the total; returns 0 for an (almost)
    zero field.
    """
    fh = ws.fwd(values)
    # rfft half-plane: double the weight of interior ky columns
    w = np.full(fh.shape, 2.0)
    w[:, 0] = 1.0
    if ws.grid.ny % 2 == 0:
        w[:, -1] = 1.0
    p = w * np.abs(fh) ** 2
    p[0, 0] = 0.0
    total = float(p.sum())
    if total < 1e-280:
        return 0.0
    kc = frac * ws.kmax
    tail = (np.abs(ws.KX) > kc) | (np.abs(ws.KY) > kc)
    return float(p[tail].sum() / total)
