"""Ideal incompressible MHD via the characteristic map with a Lorentz source.

Per step, at the current time: vorticity is evaluated by scalar pullback
plus the accumulated source, the filtered Biot-Savart solve yields the
velocity snapshot, and the curl of the Lorentz force is computed from the
filtered two-form pullback of the initial magnetic field.  Velocity and
source snapshots are extrapolated in time to drive the shared RK4 update
of the map and the source integral; remapping freezes both together.

The curl of the Lorentz force is computed as div(j B), which equals
curl((curl B) x B) in 2D for solenoidal B; the field is projected onto
divergence-free fields after filtering so the identity applies.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .config import RunConfig, serialize_config
from .diagnostics import TimeSeriesRecord, cross_helicity, energies, squared_potential
from .flowmap import (CharMap, OneStepIntegrator, SourceHistory, SubmapStack, VelocityHistory,
                      advance_map, check_remap)
from .hermite import GridSpec, HermiteField, HermiteVectorField
from .source import SourceField, advance_source, vorticity_eval
from .spectral import (SpectralWorkspace, curl2d, div2d, hermite_data_spectral, leray_project,
                       lowpass)
from . import snapshots as snap

BLOWUP_FACTOR = 1e3


def ot_vorticity0(x, y):
    return 2.0 * (np.cos(2.0 * x) + np.cos(2.0 * y))


def ot_magnetic0(x, y):
    return -2.0 * np.sin(2.0 * y), 4.0 * np.sin(x)


def ot_magnetic0_grad(x, y):
    """(dBx/dx, dBx/dy, dBy/dx, dBy/dy) of the initial magnetic field."""
    z = np.zeros_like(x)
    return z, -4.0 * np.cos(2.0 * y), 4.0 * np.cos(x), z


class MhdState:
    """Full solver state: submap stack, live source integral, histories."""

    def __init__(self, cfg: RunConfig):
        cfg.validate()
        if cfg.problem != "mhd-ot":
            raise ValueError(f"unsupported mhd problem {cfg.problem!r}")
        self.cfg = cfg
        self.grid_m = GridSpec(cfg.map_n, cfg.map_n)
        self.grid_a = GridSpec(cfg.resolved_source_n, cfg.resolved_source_n)
        self.grid_v = GridSpec(cfg.resolved_velocity_n, cfg.resolved_velocity_n)
        self.ws_v = SpectralWorkspace(self.grid_v, cfg.cutoff_map, cfg.cutoff_source)
        self.ws_a = SpectralWorkspace(self.grid_a, cfg.cutoff_map, cfg.cutoff_source)
        # the map filter length is set by the map grid; express it as a
        # fraction of the velocity grid's kmax
        self.velocity_cutoff = min(1.0, cfg.cutoff_map * cfg.map_n / self.grid_v.nx)
        self.omega0 = ot_vorticity0
        self.b0 = ot_magnetic0
        self.b0_grad = ot_magnetic0_grad
        self.stack = SubmapStack(self.grid_m)
        self.live_source = SourceField.zeros(self.grid_a)
        self.vel_hist = VelocityHistory(cfg.gamma)
        self.src_hist = SourceHistory(cfg.gamma)
        self.t = 0.0
        self.nsteps = 0
        self.initial_max_u: float | None = None
        self._vnodes = self.grid_v.nodes_flat()
        self._anodes = self.grid_a.nodes_flat()

    @property
    def n_submaps(self) -> int:
        return self.stack.n_remaps + 1


def compute_velocity(state: MhdState) -> HermiteVectorField:
    """Filtered Biot-Savart of the current vorticity; appends to the history."""
    x, y = state._vnodes
    w = vorticity_eval(state.stack, state.live_source, state.omega0, x, y)
    w = w.reshape(state.grid_v.shape)
    from .spectral import biot_savart

    u = biot_savart(w, state.ws_v, state.velocity_cutoff)
    state.vel_hist.push(state.t, u)
    state._last_omega = w
    return u


def filtered_magnetic_field(state: MhdState, ws: SpectralWorkspace, x, y):
    """Two-form pullback of B0 at the given nodes, low-passed and projected."""
    from .flowmap import pullback_twoform

    bx, by = pullback_twoform(state.stack, state.b0, x, y)
    shape = ws.grid.shape
    bx = lowpass(bx.reshape(shape), state.cfg.cutoff_source, ws)
    by = lowpass(by.reshape(shape), state.cfg.cutoff_source, ws)
    return leray_project(bx, by, ws)


def compute_source(state: MhdState) -> HermiteField:
    """Curl of the Lorentz force from the filtered magnetic field pullback."""
    bx, by = filtered_magnetic_field(state, state.ws_a, *state._anodes)
    j = curl2d(bx, by, state.ws_a)
    f = div2d(j * bx, j * by, state.ws_a)
    fld = HermiteField(state.grid_a, hermite_data_spectral(f, state.ws_a))
    state.src_hist.push(state.t, fld)
    return fld


@dataclass
class StepInfo:
    t_before: float
    t_after: float
    dt: float
    max_u: float
    omega: np.ndarray
    velocity: HermiteVectorField
    remapped: bool


def step(state: MhdState, dt: float | None = None, dt_cap: float | None = None) -> StepInfo:
    """One full cycle: velocity, source, shared RK4 advance, remap check."""
    cfg = state.cfg
    u = compute_velocity(state)
    compute_source(state)
    ux, uy = u.values
    max_u = float(np.max(np.hypot(ux, uy)))
    if state.initial_max_u is None:
        state.initial_max_u = max_u
    guard = BLOWUP_FACTOR * max(state.initial_max_u, 1.0)
    if max_u > guard:
        raise RuntimeError(f"velocity blow-up: max|u| = {max_u:.3e} exceeds {guard:.3e}")

    if dt is None:
        dt = cfg.dt
    if dt is None:
        dt = cfg.cfl * state.grid_v.hx / max(max_u, 1e-12)
        dt = min(dt, cfg.dt_max)
    if dt_cap is not None:
        dt = min(dt, dt_cap)

    t0 = state.t
    t1 = t0 + dt
    integ = OneStepIntegrator.from_history(state.vel_hist, t0, t1)
    new_head, res = advance_map(state.stack.head, integ)
    res_a = res if state.grid_a == state.grid_m else integ.integrate(*state._anodes)
    stage_fields = {s: state.src_hist.stage_field(s) for s in (t1, 0.5 * (t0 + t1), t0)}
    state.live_source = advance_source(state.live_source, res_a,
                                       [stage_fields[s] for (s, _, _) in res_a.stages],
                                       state.ws_a)
    state.stack.head = new_head
    state.t = t1
    state.nsteps += 1
    remapped = False
    if cfg.remap:
        remapped, state.live_source = check_remap(state.stack, state.live_source,
                                                  cfg.delta_det, cfg.tail_threshold,
                                                  state.ws_a)
    return StepInfo(t_before=t0, t_after=t1, dt=dt, max_u=max_u,
                    omega=state._last_omega, velocity=u, remapped=remapped)


def measure(state: MhdState, with_fields: bool = False):
    """Diagnostics at the current time on the velocity grid (pure).

    The velocity is recomputed by the same filtered Biot-Savart as the
    solver uses; the magnetic field is the unfiltered pullback.
    """
    from .flowmap import pullback_twoform
    from .spectral import biot_savart

    x, y = state._vnodes
    shape = state.grid_v.shape
    w = vorticity_eval(state.stack, state.live_source, state.omega0, x, y).reshape(shape)
    u = biot_savart(w, state.ws_v, state.velocity_cutoff)
    ux, uy = u.values
    bx, by = pullback_twoform(state.stack, state.b0, x, y)
    bx = bx.reshape(shape)
    by = by.reshape(shape)
    j = curl2d(bx, by, state.ws_v)
    e_kin, e_pot, e_tot = energies(ux, uy, bx, by)
    rec = TimeSeriesRecord(
        t=state.t, dt=0.0, e_kin=e_kin, e_pot=e_pot, e_tot=e_tot,
        h_c=cross_helicity(ux, uy, bx, by),
        a_sq=squared_potential(bx, by, state.ws_v),
        max_u=float(np.max(np.hypot(ux, uy))),
        max_j=float(np.max(np.abs(j))),
        n_submaps=state.n_submaps)
    if with_fields:
        return rec, {"omega": w, "j": j, "u": np.stack([ux, uy]), "b": np.stack([bx, by])}
    return rec


@dataclass
class MhdRun:
    state: MhdState
    records: list = dataclass_field(default_factory=list)
    snapshot_paths: list = dataclass_field(default_factory=list)


def run_mhd(cfg: RunConfig, on_step=None) -> MhdRun:
    """Drive an Orszag-Tang run to t_end, emitting time series and snapshots."""
    state = MhdState(cfg)
    out = MhdRun(state=state)
    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    series_path = os.path.join(outdir, "timeseries.csv")
    if os.path.exists(series_path):
        os.remove(series_path)

    events = sorted(set(list(cfg.snapshot_times) + [cfg.t_end]))

    def emit_snapshot(tag=None):
        rec, fields = measure(state, with_fields=True)
        label = tag if tag is not None else f"{state.t:.6f}"
        for name in ("omega", "j"):
            path = os.path.join(outdir, f"{name}_t{label}.snap")
            snap.write_snapshot(path, name, state.t, fields[name], state.grid_v,
                                problem=cfg.problem)
            out.snapshot_paths.append(path)
        for name in ("u", "b"):
            path = os.path.join(outdir, f"{name}_t{label}.snap")
            snap.write_snapshot(path, name, state.t, fields[name], state.grid_v,
                                problem=cfg.problem)
            out.snapshot_paths.append(path)

    while state.t < cfg.t_end - 1e-12:
        next_event = min(e for e in events if e > state.t + 1e-12)
        info = step(state, dt_cap=next_event - state.t)
        if state.nsteps % cfg.diag_stride == 0 or state.t >= cfg.t_end - 1e-12:
            rec = measure(state)
            rec.dt = info.dt
            out.records.append(rec)
            snap.append_timeseries(series_path, rec)
        at_event = any(abs(state.t - e) <= 1e-12 for e in cfg.snapshot_times)
        by_stride = cfg.snapshot_stride and state.nsteps % cfg.snapshot_stride == 0
        if at_event or by_stride:
            emit_snapshot()
        if on_step is not None:
            on_step(state, info)

    emit_snapshot(tag="final")
    if cfg.save_state:
        save_state(os.path.join(outdir, "state"), state)
    return out


def zoom_eval(state: MhdState, center, half_width: float, n: int, field: str = "j"):
    """Evaluate omega, B, or j on an arbitrary window by direct composition.

    No stored grid is upsampled: values come from evaluating the submap
    stack functionally, so the window resolves structure beyond the map
    grid's Nyquist.  The current density uses map first and second
    derivatives chained across submaps together with the analytic gradient
    of the initial magnetic field.
    """
    if half_width <= 0 or n < 2:
        raise ValueError("zoom window must have positive size and at least 2 points")
    cx, cy = center
    ax = cx - half_width + (2.0 * half_width) * np.arange(n) / n
    ay = cy - half_width + (2.0 * half_width) * np.arange(n) / n
    X, Y = np.meshgrid(ax, ay, indexing="ij")
    xf, yf = X.ravel(), Y.ravel()
    if field == "omega":
        w = vorticity_eval(state.stack, state.live_source, state.omega0, xf, yf)
        return w.reshape(n, n)
    if field == "b":
        from .flowmap import pullback_twoform

        bx, by = pullback_twoform(state.stack, state.b0, xf, yf)
        return np.stack([bx.reshape(n, n), by.reshape(n, n)])
    if field != "j":
        raise ValueError(f"unknown zoom field {field!r}")

    px, py, jac, hess = state.stack.compose_with_hess(xf, yf)
    j11, j12, j21, j22 = jac
    hx_xx, hx_xy, hx_yy, hy_xx, hy_xy, hy_yy = hess
    b0x, b0y = state.b0(px, py)
    gxx, gxy, gyx, gyy = state.b0_grad(px, py)
    # b = B0 o X: spatial derivatives by the chain rule
    dbx_dx = gxx * j11 + gxy * j21
    dbx_dy = gxx * j12 + gxy * j22
    dby_dx = gyx * j11 + gyy * j21
    dby_dy = gyx * j12 + gyy * j22
    # j = curl(adj(DX) b), expanded by the product rule
    jz = (-(hy_xx + hy_yy) * b0x + (hx_xx + hx_yy) * b0y
          - j21 * dbx_dx - j22 * dbx_dy + j11 * dby_dx + j12 * dby_dy)
    return jz.reshape(n, n)


def _state_meta_lines(state: MhdState):
    return [
        "cmflow-state v1",
        f"problem: {state.cfg.problem}",
        f"t: {state.t!r}",
        f"nsteps: {state.nsteps}",
        f"initial_max_u: {state.initial_max_u!r}",
        f"taus: {','.join(repr(t) for t in state.stack.taus)}",
        f"n_frozen: {state.stack.n_remaps}",
        f"n_vel_hist: {len(state.vel_hist)}",
        f"n_src_hist: {len(state.src_hist)}",
    ]


def save_state(dirpath, state: MhdState) -> None:
    """Serialize the full solver state for bit-exact resumption."""
    os.makedirs(dirpath, exist_ok=True)
    with open(os.path.join(dirpath, "state.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(_state_meta_lines(state)) + "\n")
    with open(os.path.join(dirpath, "config.cfg"), "w", encoding="utf-8") as fh:
        fh.write(serialize_config(state.cfg))
    gm, ga, gv = state.grid_m, state.grid_a, state.grid_v

    def warr(name, data, grid, **extra):
        snap.write_state_field(os.path.join(dirpath, name + ".bin"), name, data, grid,
                               extra={k: repr(v) for k, v in extra.items()})

    warr("head", state.stack.head.disp.data, gm,
         t_start=state.stack.head.t_start, t_end=state.stack.head.t_end)
    for k, cm in enumerate(state.stack.frozen):
        warr(f"submap_{k:04d}", cm.disp.data, gm, t_start=cm.t_start, t_end=cm.t_end)
    for k, fs in enumerate(state.stack.frozen_sources):
        warr(f"subsource_{k:04d}", fs.field.data, ga, t_start=fs.t_start, t_end=fs.t_end)
    warr("live_source", state.live_source.field.data, ga,
         t_start=state.live_source.t_start, t_end=state.live_source.t_end)
    for k, (t, f) in enumerate(zip(state.vel_hist.times, state.vel_hist.fields)):
        warr(f"vel_hist_{k}", f.data, gv, time=t)
    for k, (t, f) in enumerate(zip(state.src_hist.times, state.src_hist.fields)):
        warr(f"src_hist_{k}", f.data, ga, time=t)


def load_state(dirpath) -> MhdState:
    """Rebuild a solver state saved by save_state."""
    from .config import parse_config

    with open(os.path.join(dirpath, "state.txt"), "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "cmflow-state v1":
        raise ValueError("not a cmflow state directory (bad magic)")
    meta = {}
    for line in lines[1:]:
        if line.strip():
            k, _, v = line.partition(":")
            meta[k.strip()] = v.strip()
    cfg = parse_config(os.path.join(dirpath, "config.cfg"))
    state = MhdState(cfg)
    state.t = float(meta["t"])
    state.nsteps = int(meta["nsteps"])
    imu = meta.get("initial_max_u", "None")
    state.initial_max_u = None if imu == "None" else float(imu)
    taus = [float(v) for v in meta["taus"].split(",")]

    def rarr(name, grid):
        m, data = snap.read_state_field(os.path.join(dirpath, name + ".bin"))
        if data.shape[-2:] != grid.shape:
            raise ValueError(f"state field {name} does not match grid {grid.shape}")
        return m, data

    gm, ga, gv = state.grid_m, state.grid_a, state.grid_v
    m, data = rarr("head", gm)
    state.stack.head = CharMap(HermiteVectorField(gm, data),
                               float(m["t_start"]), float(m["t_end"]))
    n_frozen = int(meta["n_frozen"])
    for k in range(n_frozen):
        m, data = rarr(f"submap_{k:04d}", gm)
        state.stack.frozen.append(CharMap(HermiteVectorField(gm, data),
                                          float(m["t_start"]), float(m["t_end"])))
        m, data = rarr(f"subsource_{k:04d}", ga)
        state.stack.frozen_sources.append(SourceField(HermiteField(ga, data),
                                                      float(m["t_start"]), float(m["t_end"])))
    state.stack.taus = taus
    m, data = rarr("live_source", ga)
    state.live_source = SourceField(HermiteField(ga, data),
                                    float(m["t_start"]), float(m["t_end"]))
    for k in range(int(meta["n_vel_hist"])):
        m, data = rarr(f"vel_hist_{k}", gv)
        state.vel_hist.push(float(m["time"]), HermiteVectorField(gv, data))
    for k in range(int(meta["n_src_hist"])):
        m, data = rarr(f"src_hist_{k}", ga)
        state.src_hist.push(float(m["time"]), HermiteField(ga, data))
    return state
