"""Backward characteristic map evolution.

The solver advances the backward map X_[t, tau] of a velocity field as
identity plus a periodic Hermite displacement field.  One time step
integrates characteristics backward with RK4 through temporally
extrapolated velocity snapshots, then re-interpolates the composition of
the old map with the one-step map onto the grid.  Long-time maps are held
as a stack of submaps composed right-to-left, with remapping triggered by
a volume-distortion monitor on the map and a spectral-tail monitor on the
accumulated source term.

Map evaluation, composition and pullbacks are pure; advancing and
remapping mutate solver state and belong on the driver thread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite import GridSpec, HermiteField, HermiteVectorField


def _lagrange_weights(times, s):
    times = np.asarray(times, dtype=np.float64)
    w = np.ones(times.size)
    for i in range(times.size):
        for j in range(times.size):
            if j != i:
                w[i] *= (s - times[j]) / (times[i] - times[j])
    return w


class FieldHistory:
    """Ring buffer of field snapshots supporting Lagrange extrapolation in time.

    Keeps at most ``gamma`` snapshots; combining all stored snapshots gives
    the highest extrapolation order available, so the first steps of a run
    bootstrap from constant through linear to the full order.
    """

    def __init__(self, gamma: int = 3):
        if gamma < 1:
            raise ValueError("gamma must be at least 1")
        self.gamma = gamma
        self.times: list[float] = []
        self.fields: list = []

    def push(self, t: float, field) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"snapshot times must increase: {t} after {self.times[-1]}")
        self.times.append(t)
        self.fields.append(field)
        if len(self.times) > self.gamma:
            del self.times[0]
            del self.fields[0]

    def __len__(self):
        return len(self.fields)

    @property
    def latest(self):
        return self.fields[-1]

    def stage_field(self, s: float):
        """Field at time s from Lagrange extrapolation of stored snapshots."""
        if not self.fields:
            raise ValueError("history is empty")
        w = _lagrange_weights(self.times, s)
        data = w[0] * self.fields[0].data
        for wi, f in zip(w[1:], self.fields[1:]):
            data += wi * f.data
        return type(self.fields[-1])(self.fields[-1].grid, data)


VelocityHistory = FieldHistory
SourceHistory = FieldHistory


def _mat2_mul(a, b):
    a11, a12, a21, a22 = a
    b11, b12, b21, b22 = b
    return (a11 * b11 + a12 * b21, a11 * b12 + a12 * b22,
            a21 * b11 + a22 * b21, a21 * b12 + a22 * b22)


@dataclass
class OneStepResult:
    """Backward one-step endpoints with the RK stage locations for reuse."""

    t_n: float
    t_np1: float
    ex: np.ndarray
    ey: np.ndarray
    # four (time, px, py) tuples at times (t_np1, t_mid, t_mid, t_n)
    stages: list
    jac: tuple | None = None


class OneStepIntegrator:
    """RK4 backward integration dX/dr = -u(X, r) over one step.

    Velocity is supplied as three Hermite snapshots at the RK stage times
    (t_np1, t_mid, t_n), normally produced by extrapolating a history.
    """

    def __init__(self, u_end: HermiteVectorField, u_mid: HermiteVectorField,
                 u_beg: HermiteVectorField, t_n: float, t_np1: float):
        if not t_np1 > t_n:
            raise ValueError("time step must be positive")
        self.u_end = u_end
        self.u_mid = u_mid
        self.u_beg = u_beg
        self.t_n = t_n
        self.t_np1 = t_np1

    @classmethod
    def from_history(cls, history: FieldHistory, t_n: float, t_np1: float):
        if len(history) == 0:
            raise ValueError("velocity history is empty")
        mid = 0.5 * (t_n + t_np1)
        return cls(history.stage_field(t_np1), history.stage_field(mid),
                   history.stage_field(t_n), t_n, t_np1)

    def integrate(self, x, y, want_jac: bool = False) -> OneStepResult:
        dt = self.t_np1 - self.t_n
        mid = 0.5 * (self.t_n + self.t_np1)
        x = np.ascontiguousarray(x, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if not want_jac:
            u1x, u1y = self.u_end.eval(x, y)
            y1x = x - 0.5 * dt * u1x
            y1y = y - 0.5 * dt * u1y
            u2x, u2y = self.u_mid.eval(y1x, y1y)
            y2x = x - 0.5 * dt * u2x
            y2y = y - 0.5 * dt * u2y
            u3x, u3y = self.u_mid.eval(y2x, y2y)
            y3x = x - dt * u3x
            y3y = y - dt * u3y
            u4x, u4y = self.u_beg.eval(y3x, y3y)
            ex = x - (dt / 6.0) * (u1x + 2.0 * u2x + 2.0 * u3x + u4x)
            ey = y - (dt / 6.0) * (u1y + 2.0 * u2y + 2.0 * u3y + u4y)
            stages = [(self.t_np1, x, y), (mid, y1x, y1y), (mid, y2x, y2y), (self.t_n, y3x, y3y)]
            return OneStepResult(self.t_n, self.t_np1, ex, ey, stages)

        ident = (1.0, 0.0, 0.0, 1.0)
        u1x, u1y, a11, a12, a21, a22 = self.u_end.eval_grad(x, y)
        D1 = (a11, a12, a21, a22)
        y1x = x - 0.5 * dt * u1x
        y1y = y - 0.5 * dt * u1y
        J1 = (1.0 - 0.5 * dt * a11, -0.5 * dt * a12, -0.5 * dt * a21, 1.0 - 0.5 * dt * a22)
        u2x, u2y, b11, b12, b21, b22 = self.u_mid.eval_grad(y1x, y1y)
        D2 = _mat2_mul((b11, b12, b21, b22), J1)
        y2x = x - 0.5 * dt * u2x
        y2y = y - 0.5 * dt * u2y
        J2 = tuple(i - 0.5 * dt * d for i, d in zip(ident, D2))
        u3x, u3y, c11, c12, c21, c22 = self.u_mid.eval_grad(y2x, y2y)
        D3 = _mat2_mul((c11, c12, c21, c22), J2)
        y3x = x - dt * u3x
        y3y = y - dt * u3y
        J3 = tuple(i - dt * d for i, d in zip(ident, D3))
        u4x, u4y, d11, d12, d21, d22 = self.u_beg.eval_grad(y3x, y3y)
        D4 = _mat2_mul((d11, d12, d21, d22), J3)
        ex = x - (dt / 6.0) * (u1x + 2.0 * u2x + 2.0 * u3x + u4x)
        ey = y - (dt / 6.0) * (u1y + 2.0 * u2y + 2.0 * u3y + u4y)
        jac = tuple(i - (dt / 6.0) * (p + 2.0 * q + 2.0 * r + s)
                    for i, p, q, r, s in zip(ident, D1, D2, D3, D4))
        stages = [(self.t_np1, x, y), (mid, y1x, y1y), (mid, y2x, y2y), (self.t_n, y3x, y3y)]
        return OneStepResult(self.t_n, self.t_np1, ex, ey, stages, jac)


def one_step_map(history: FieldHistory, t_n: float, t_np1: float, x, y,
                 want_jac: bool = False) -> OneStepResult:
    """Backward one-step map at the given query points (RK stages included)."""
    return OneStepIntegrator.from_history(history, t_n, t_np1).integrate(x, y, want_jac)


class CharMap:
    """Backward map X_[t_end, t_start] stored as identity + periodic displacement."""

    __slots__ = ("disp", "t_start", "t_end")

    def __init__(self, disp: HermiteVectorField, t_start: float, t_end: float):
        self.disp = disp
        self.t_start = t_start
        self.t_end = t_end

    @classmethod
    def identity(cls, grid: GridSpec, t: float = 0.0) -> "CharMap":
        return cls(HermiteVectorField.zeros(grid), t, t)

    @property
    def grid(self) -> GridSpec:
        return self.disp.grid

    def eval(self, x, y):
        dx, dy = self.disp.eval(x, y)
        return np.asarray(x) + dx, np.asarray(y) + dy

    def eval_with_jac(self, x, y):
        dx, dy, g11, g12, g21, g22 = self.disp.eval_grad(x, y)
        return (np.asarray(x) + dx, np.asarray(y) + dy,
                (1.0 + g11, g12, g21, 1.0 + g22))

    def eval_with_hess(self, x, y):
        (dx, g11, g12, hx_xx, hx_xy, hx_yy,
         dy, g21, g22, hy_xx, hy_xy, hy_yy) = self.disp.eval_hess(x, y)
        return (np.asarray(x) + dx, np.asarray(y) + dy,
                (1.0 + g11, g12, g21, 1.0 + g22),
                (hx_xx, hx_xy, hx_yy, hy_xx, hy_xy, hy_yy))

    def det_node_deviation(self) -> float:
        """max |det(grad X) - 1| over grid nodes, from stored node data."""
        d = self.disp.data
        det = (1.0 + d[0, 1]) * (1.0 + d[1, 2]) - d[0, 2] * d[1, 1]
        return float(np.max(np.abs(det - 1.0)))


def advance_map(head: CharMap, integ: OneStepIntegrator,
                cross_eps_factor: float = 0.01) -> tuple[CharMap, OneStepResult]:
    """Compose the head map with a one-step map and re-interpolate.

    Node values and the composed first derivatives (chain rule through the
    interpolant gradients and the differentiated RK4 update) are exact
    evaluations; the cross derivative comes from a 4-point stencil of the
    composed evaluation offset by eps = h * cross_eps_factor.

    Returns the new head map and the node one-step result (endpoints and
    RK stage points) for reuse by the source accumulation update.
    """
    grid = head.grid
    x, y = grid.nodes_flat()
    res = integ.integrate(x, y, want_jac=True)

    dvx, dvy, g11, g12, g21, g22 = head.disp.eval_grad(res.ex, res.ey)
    ndx = (res.ex - x) + dvx
    ndy = (res.ey - y) + dvy
    j_old = (1.0 + g11, g12, g21, 1.0 + g22)
    jc = _mat2_mul(j_old, res.jac)

    ex_off = grid.hx * cross_eps_factor
    ey_off = grid.hy * cross_eps_factor
    cross_x = np.zeros_like(x)
    cross_y = np.zeros_like(y)
    for sx, sy, sign in ((ex_off, ey_off, 1.0), (ex_off, -ey_off, -1.0),
                         (-ex_off, ey_off, -1.0), (-ex_off, -ey_off, 1.0)):
        r = integ.integrate(x + sx, y + sy)
        ox, oy = head.disp.eval(r.ex, r.ey)
        cross_x += sign * (r.ex + ox)
        cross_y += sign * (r.ey + oy)
    scale = 1.0 / (4.0 * ex_off * ey_off)
    cross_x *= scale
    cross_y *= scale

    shape = grid.shape
    data = np.empty((2, 4) + shape)
    data[0, 0] = ndx.reshape(shape)
    data[0, 1] = (jc[0] - 1.0).reshape(shape)
    data[0, 2] = jc[1].reshape(shape)
    data[0, 3] = cross_x.reshape(shape)
    data[1, 0] = ndy.reshape(shape)
    data[1, 1] = jc[2].reshape(shape)
    data[1, 2] = (jc[3] - 1.0).reshape(shape)
    data[1, 3] = cross_y.reshape(shape)
    new_head = CharMap(HermiteVectorField(grid, data), head.t_start, integ.t_np1)
    return new_head, res


class SubmapStack:
    """Ordered submaps with frozen source integrals and the live head map.

    Global evaluation applies the head map first, then the frozen submaps
    from newest to oldest; frozen source fields stay aligned with their
    submaps so the source recursion can be evaluated alongside.
    """

    def __init__(self, grid: GridSpec, t0: float = 0.0):
        self.grid = grid
        self.head = CharMap.identity(grid, t0)
        self.frozen: list[CharMap] = []
        self.frozen_sources: list = []
        self.taus: list[float] = [t0]

    @property
    def n_remaps(self) -> int:
        return len(self.frozen)

    @property
    def t(self) -> float:
        return self.head.t_end

    def freeze(self, live_source) -> None:
        """Push the head map and current source integral; restart from identity."""
        t = self.head.t_end
        self.frozen.append(self.head)
        self.frozen_sources.append(live_source)
        self.taus.append(t)
        self.head = CharMap.identity(self.grid, t)

    def maps_newest_first(self):
        yield self.head
        yield from reversed(self.frozen)

    def compose(self, x, y):
        cx, cy = self.head.eval(x, y)
        for cm in reversed(self.frozen):
            cx, cy = cm.eval(cx, cy)
        return cx, cy

    def compose_with_jac(self, x, y):
        cx, cy, jac = self.head.eval_with_jac(x, y)
        for cm in reversed(self.frozen):
            nx_, ny_, jm = cm.eval_with_jac(cx, cy)
            jac = _mat2_mul(jm, jac)
            cx, cy = nx_, ny_
        return cx, cy, jac

    def compose_with_hess(self, x, y):
        """Composition with first and second derivatives chained across submaps."""
        cx, cy, jac, hess = self.head.eval_with_hess(x, y)
        for cm in reversed(self.frozen):
            ncx, ncy, jm, hm = cm.eval_with_hess(cx, cy)
            j11, j12, j21, j22 = jac
            m11, m12, m21, m22 = jm
            fx_xx, fx_xy, fx_yy, fy_xx, fy_xy, fy_yy = hm
            hx_xx, hx_xy, hx_yy, hy_xx, hy_xy, hy_yy = hess
            # second derivative of m(phi): Hm[g(phi)] = D2m . (Dphi x Dphi) + Dm . Hphi
            def chain(hxx, hxy, hyy, da, db):
                return (hxx * j11 * j11 + 2.0 * hxy * j11 * j21 + hyy * j21 * j21
                        + da * hx_xx + db * hy_xx,
                        hxx * j11 * j12 + hxy * (j11 * j22 + j12 * j21) + hyy * j21 * j22
                        + da * hx_xy + db * hy_xy,
                        hxx * j12 * j12 + 2.0 * hxy * j12 * j22 + hyy * j22 * j22
                        + da * hx_yy + db * hy_yy)
            nx_xx, nx_xy, nx_yy = chain(fx_xx, fx_xy, fx_yy, m11, m12)
            ny_xx, ny_xy, ny_yy = chain(fy_xx, fy_xy, fy_yy, m21, m22)
            hess = (nx_xx, nx_xy, nx_yy, ny_xx, ny_xy, ny_yy)
            jac = _mat2_mul(jm, jac)
            cx, cy = ncx, ncy
        return cx, cy, jac, hess


def compose_eval(stack: SubmapStack, x, y):
    """Global backward map X_[t, 0] evaluated through the submap stack."""
    return stack.compose(x, y)


def pullback_scalar(stack: SubmapStack, field0, x, y):
    """theta_0 composed with the global map; field0 is a callable or Hermite field."""
    cx, cy = stack.compose(x, y)
    if callable(field0):
        return field0(cx, cy)
    return field0.eval(cx, cy)


def adjugate_apply(jac, bx, by):
    """adj(J) b for 2x2 J given as (j11, j12, j21, j22) component arrays."""
    j11, j12, j21, j22 = jac
    return j22 * bx - j12 * by, -j21 * bx + j11 * by


def pullback_twoform(stack: SubmapStack, b0, x, y):
    """Two-form pullback adj(DX) (B0 o X) through the stack (chain rule)."""
    cx, cy, jac = stack.compose_with_jac(x, y)
    if callable(b0):
        b0x, b0y = b0(cx, cy)
    else:
        b0x, b0y = b0.eval(cx, cy)
    return adjugate_apply(jac, b0x, b0y)


def check_remap(stack: SubmapStack, live_source, delta_det: float,
                tail_threshold: float, ws_source) -> tuple[bool, object]:
    """Freeze head map and source integral when either resolution monitor fires.

    Triggers when max node |det(grad X) - 1| exceeds delta_det or when the
    fraction of the accumulated source's spectral energy above 2/3 of its
    grid's kmax exceeds tail_threshold.  Both fields are frozen at the same
    time so the map and source recursions stay aligned.

    Returns (fired, live_source); on firing the returned source integral is
    a fresh zero field starting at the remap time.
    """
    from .source import SourceField
    from .spectral import tail_energy_fraction

    det_dev = stack.head.det_node_deviation()
    fired = det_dev > delta_det
    if not fired and tail_threshold is not None:
        fired = tail_energy_fraction(live_source.field.f, ws_source) > tail_threshold
    if not fired:
        return False, live_source
    t = stack.head.t_end
    stack.freeze(live_source)
    return True, SourceField.zeros(live_source.field.grid, t)
