"""Accumulated source terms for inhomogeneous advection.

The running time integral F of a source term pulled back along
characteristics is advanced semi-Lagrangially on its own grid, reusing the
RK4 stage locations of the one-step map as quadrature nodes.  On remapping
the current integral is frozen onto the submap stack and restarted from
zero; the total is recovered by evaluating each frozen sub-integral at the
partially composed map points and summing.
"""

from __future__ import annotations

import numpy as np

from .hermite import GridSpec, HermiteField
from .flowmap import OneStepResult, SubmapStack
from .spectral import SpectralWorkspace, hermite_data_spectral

# RK4 time-quadrature weights matching the one-step stage order
# (t_np1, t_mid, t_mid, t_n).
RK4_WEIGHTS = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)


class SourceField:
    """Accumulated source integral F_[t_end, t_start] on its own grid."""

    __slots__ = ("field", "t_start", "t_end")

    def __init__(self, field: HermiteField, t_start: float, t_end: float):
        self.field = field
        self.t_start = t_start
        self.t_end = t_end

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "SourceField":
        return cls(HermiteField.zeros(grid), t, t)

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    def eval(self, x, y):
        return self.field.eval(x, y)


def _stage_eval(evaluator, px, py):
    if isinstance(evaluator, HermiteField):
        return evaluator.eval(px, py)
    return evaluator(px, py)


def advance_source(F: SourceField, onestep: OneStepResult, stage_sources,
                   ws: SpectralWorkspace) -> SourceField:
    """One semi-Lagrangian update of the accumulated source term.

    F_{n+1} = I_A[ F_n o X_step + dt * sum_j a_j f(stage_j, s_j) ] where the
    stage points come from the shared RK4 one-step map.  ``stage_sources``
    holds one evaluator per stage (HermiteField or callable (x, y) -> values,
    already fixed at the stage time).  Node derivative planes of the result
    are rebuilt by spectral differentiation.
    """
    grid = F.grid
    if ws.grid != grid:
        raise ValueError("workspace grid does not match source grid")
    if len(stage_sources) != len(onestep.stages):
        raise ValueError("need one source evaluator per RK stage")
    if onestep.ex.size != grid.nx * grid.ny:
        raise ValueError("one-step result does not cover the source grid nodes")
    dt = onestep.t_np1 - onestep.t_n
    acc = F.field.eval(onestep.ex, onestep.ey)
    for w, (s, px, py), ev in zip(RK4_WEIGHTS, onestep.stages, stage_sources):
        acc = acc + (dt * w) * _stage_eval(ev, px, py)
    values = acc.reshape(grid.shape)
    return SourceField(HermiteField(grid, hermite_data_spectral(values, ws)),
                       F.t_start, onestep.t_np1)


def _accumulate(stack: SubmapStack, head_source: SourceField, x, y):
    """Shared traversal: total frozen+head source and the composed map points."""
    total = head_source.eval(x, y)
    cx, cy = stack.head.eval(x, y)
    for cm, fs in zip(reversed(stack.frozen), reversed(stack.frozen_sources)):
        total += fs.eval(cx, cy)
        cx, cy = cm.eval(cx, cy)
    return total, cx, cy


def total_source_eval(stack: SubmapStack, head_source: SourceField, x, y):
    """F_[t, 0] by the sub-integral recursion across the submap stack."""
    if len(stack.frozen) != len(stack.frozen_sources):
        raise ValueError("frozen maps and frozen sources are misaligned")
    total, _, _ = _accumulate(stack, head_source, x, y)
    return total


def vorticity_eval(stack: SubmapStack, head_source: SourceField, omega0, x, y):
    """omega = omega0 o X_[t,0] + F_[t,0] in a single stack traversal."""
    total, cx, cy = _accumulate(stack, head_source, x, y)
    if callable(omega0):
        return total + omega0(cx, cy)
    return total + omega0.eval(cx, cy)
