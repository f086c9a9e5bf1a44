"""Shared helpers for tests: analytic velocity fields and a minimal map driver."""

import numpy as np

from cmflow import (CharMap, GridSpec, HermiteField, HermiteVectorField, OneStepIntegrator,
                    SourceField, SourceHistory, SpectralWorkspace, SubmapStack,
                    VelocityHistory, advance_map, advance_source)
from cmflow.spectral import hermite_data_spectral

CENTER = (np.pi, np.pi)


def rotation_field(grid: GridSpec) -> HermiteVectorField:
    """Rigid rotation about the domain center, exact node data.

    Not periodic, but linear: interior cells reproduce it exactly, so tests
    must keep trajectories away from the domain boundary.
    """
    X, Y = grid.nodes()
    z = np.zeros(grid.shape)
    data = np.empty((2, 4) + grid.shape)
    data[0] = np.stack([-(Y - CENTER[1]), z, -np.ones(grid.shape), z])
    data[1] = np.stack([X - CENTER[0], np.ones(grid.shape), z, z])
    return HermiteVectorField(grid, data)


def rotate_exact(x, y, angle):
    c, s = np.cos(angle), np.sin(angle)
    dx, dy = x - CENTER[0], y - CENTER[1]
    return CENTER[0] + c * dx - s * dy, CENTER[1] + s * dx + c * dy


def steady_swirl_field(grid: GridSpec) -> HermiteVectorField:
    """The swirl velocity shape frozen at t=0 (periodic, divergence-free)."""
    X, Y = grid.nodes()
    data = np.empty((2, 4) + grid.shape)
    data[0] = np.stack([np.sin(0.5 * X) ** 2 * np.sin(Y),
                        0.5 * np.sin(X) * np.sin(Y),
                        np.sin(0.5 * X) ** 2 * np.cos(Y),
                        0.5 * np.sin(X) * np.cos(Y)])
    data[1] = np.stack([-np.sin(X) * np.sin(0.5 * Y) ** 2,
                        -np.cos(X) * np.sin(0.5 * Y) ** 2,
                        -0.5 * np.sin(X) * np.sin(Y),
                        -0.5 * np.cos(X) * np.sin(Y)])
    return HermiteVectorField(grid, data)


def translation_map(grid: GridSpec, ax: float, ay: float, t0=0.0, t1=0.0) -> CharMap:
    data = np.zeros((2, 4) + grid.shape)
    data[0, 0] = ax
    data[1, 0] = ay
    return CharMap(HermiteVectorField(grid, data), t0, t1)


def evolve_map(grid: GridSpec, velocity: HermiteVectorField, t_end: float, dt: float,
               freeze_at: float | None = None, source_stages=None, ws=None):
    """Drive a map (and optionally a source integral) with a steady velocity.

    ``source_stages`` is a callable (t) -> stage evaluator for the running
    source term; when given, a SourceField is advanced alongside and
    (stack, live_source) is returned, otherwise just the stack.
    """
    hist = VelocityHistory(gamma=3)
    hist.push(0.0, velocity)
    stack = SubmapStack(grid)
    if source_stages is not None and ws is None:
        ws = SpectralWorkspace(grid)
    live = SourceField.zeros(grid, 0.0)
    t = 0.0
    nsteps = int(round(t_end / dt))
    for n in range(nsteps):
        t_next = (n + 1) * dt
        integ = OneStepIntegrator(velocity, velocity, velocity, t, t_next)
        stack.head, res = advance_map(stack.head, integ)
        if source_stages is not None:
            evals = [source_stages(s) for (s, _, _) in res.stages]
            live = advance_source(live, res, evals, ws)
        t = t_next
        if freeze_at is not None and abs(t - freeze_at) < 1e-12:
            stack.freeze(live)
            live = SourceField.zeros(grid, t)
    if source_stages is not None:
        return stack, live
    return stack
