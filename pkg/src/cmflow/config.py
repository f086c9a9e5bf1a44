"""Run configuration: plain key=value files with validated defaults.

Defaults follow the reference computation: map 512, velocity 1024 (twice
the map), CFL 1, distortion threshold 0.05, filter fractions 0.9 (map)
and 0.1 (source), third-order time extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

PROBLEMS = ("advect-swirl", "mhd-ot")


class ConfigError(ValueError):
    """Invalid configuration; carries the offending line when parsed from a file."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_times(s):
    s = s.strip()
    if not s:
        return ()
    return tuple(float(p) for p in s.split(","))


def _opt_int(s):
    s = s.strip()
    return None if s.lower() in ("", "none") else int(s)


def _opt_float(s):
    s = s.strip()
    return None if s.lower() in ("", "none") else float(s)


@dataclass
class RunConfig:
    problem: str = ""
    map_n: int = 512
    source_n: int | None = None       # default: same as map_n
    velocity_n: int | None = None     # default: 2 * map_n (mhd), 512 (swirl)
    eval_n: int | None = None         # measurement grid; default: velocity_n
    dt: float | None = None           # fixed step; None means CFL stepping
    cfl: float = 1.0
    dt_max: float = 0.1
    t_end: float = 1.0
    gamma: int = 3
    delta_det: float = 0.05
    tail_threshold: float = 0.01
    cutoff_map: float = 0.9
    cutoff_source: float = 0.1
    epsilon: float = 0.1              # swirl profile width
    remap: bool = True
    output_dir: str = "."
    snapshot_stride: int = 0          # steps between field snapshots; 0 = none
    snapshot_times: tuple = ()        # exact times to land on and snapshot
    diag_stride: int = 1              # steps between time-series records
    save_state: bool = True           # write the final solver state (mhd)
    deterministic: bool = True

    @property
    def resolved_source_n(self) -> int:
        return self.source_n if self.source_n is not None else self.map_n

    @property
    def resolved_velocity_n(self) -> int:
        if self.velocity_n is not None:
            return self.velocity_n
        return 512 if self.problem == "advect-swirl" else 2 * self.map_n

    @property
    def resolved_eval_n(self) -> int:
        return self.eval_n if self.eval_n is not None else self.resolved_velocity_n

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        for name in ("map_n", "resolved_source_n", "resolved_velocity_n", "resolved_eval_n"):
            n = getattr(self, name)
            if n < 4:
                raise ConfigError(f"{name} must be at least 4, got {n}")
            if n % 2:
                raise ConfigError(f"{name} must be even for the spectral operators, got {n}")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.cfl <= 0:
            raise ConfigError(f"cfl must be positive, got {self.cfl}")
        if self.dt_max <= 0:
            raise ConfigError("dt_max must be positive")
        if self.t_end < 0:
            raise ConfigError(f"t_end must be nonnegative, got {self.t_end}")
        if not 1 <= self.gamma <= 4:
            raise ConfigError(f"gamma must be in 1..4, got {self.gamma}")
        if self.delta_det <= 0:
            raise ConfigError(f"delta_det must be positive, got {self.delta_det}")
        if self.tail_threshold <= 0:
            raise ConfigError("tail_threshold must be positive")
        for name in ("cutoff_map", "cutoff_source"):
            c = getattr(self, name)
            if not 0.0 < c <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {c}")
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.snapshot_stride < 0 or self.diag_stride < 1:
            raise ConfigError("snapshot_stride must be >= 0 and diag_stride >= 1")
        if any(t <= 0 or t > self.t_end for t in self.snapshot_times):
            raise ConfigError("snapshot_times must lie in (0, t_end]")
        return self


_PARSERS = {
    "problem": str,
    "map_n": int,
    "source_n": _opt_int,
    "velocity_n": _opt_int,
    "eval_n": _opt_int,
    "dt": _opt_float,
    "cfl": float,
    "dt_max": float,
    "t_end": float,
    "gamma": int,
    "delta_det": float,
    "tail_threshold": float,
    "cutoff_map": float,
    "cutoff_source": float,
    "epsilon": float,
    "remap": _parse_bool,
    "output_dir": str,
    "snapshot_stride": int,
    "snapshot_times": _parse_times,
    "diag_stride": int,
    "save_state": _parse_bool,
    "deterministic": _parse_bool,
}


def parse_config(path, **overrides) -> RunConfig:
    """Read a key=value config file; '#' starts a comment; overrides win."""
    cfg = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got {raw.strip()!r}", line_no)
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _PARSERS:
                raise ConfigError(f"unknown key {key!r}", line_no)
            try:
                setattr(cfg, key, _PARSERS[key](value.strip()))
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", line_no) from None
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _PARSERS:
            raise ConfigError(f"unknown override {key!r}")
        setattr(cfg, key, value)
    return cfg.validate()


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            v = "none"
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ",".join(repr(t) for t in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"
