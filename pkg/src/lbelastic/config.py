"""Run configuration: YAML parsing, defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import yaml

from .material import (Discretization, InvalidParameterError, MaterialParams,
                       compute_relaxation_set, dimensionless_youngs)


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass
class MaterialBlock:
    nu: float | None = None
    E_tilde: float | None = None
    E: float | None = None
    kappa: float | None = None
    dx: float | None = None
    dt: float | None = None
    theta: float = 1.0 / 3.0
    tau_12: float = 0.5
    tau_22: float = 0.5
    U: float = 1.0


@dataclass
class GridBlock:
    nx: int | None = None
    ny: int | None = None
    Lx: float = 1.0
    Ly: float = 1.0


@dataclass
class RunBlock:
    mode: str = "tolerance"
    tol: float = 1e-9
    t_final: float | None = None
    max_steps: int = 10**7
    check_interval: int = 100
    log_interval: int = 100


@dataclass
class CaseBlock:
    id: str = "none"
    variant: str = "standard"
    form: str = "consistent"


@dataclass
class OutputBlock:
    dir: str | None = None
    fields: str = "csv"
    residual_log: bool = False


@dataclass
class RunConfig:
    material: MaterialBlock = field(default_factory=MaterialBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    run: RunBlock = field(default_factory=RunBlock)
    case: CaseBlock = field(default_factory=CaseBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    # derived, filled by validate()
    E_tilde: float = field(default=0.0, init=False)
    eps: float = field(default=0.0, init=False)
    L: float = field(default=1.0, init=False)
    T: float = field(default=1.0, init=False)

    def to_dict(self) -> dict:
        return {k: asdict(getattr(self, k)) for k in ("material", "grid", "run", "case", "output")}

    def header_lines(self, extra: dict | None = None) -> list[str]:
        """Comment lines recording the resolved configuration."""
        from . import __version__
        lines = [f"lbelastic {__version__}", "config: " + json.dumps(self.to_dict(), sort_keys=True)]
        lines.append(f"resolved: E_tilde={self.E_tilde!r} eps={self.eps!r} L={self.L!r} T={self.T!r}")
        for k, v in (extra or {}).items():
            lines.append(f"{k}: {v}")
        return lines

    def material_params(self) -> MaterialParams:
        m = self.material
        return MaterialParams(self.E_tilde, m.nu, E=m.E, kappa=m.kappa)

    def relaxation_set(self):
        m = self.material
        return compute_relaxation_set(self.E_tilde, m.nu, m.theta, tau_12=m.tau_12, tau_22=m.tau_22)

    def discretization(self) -> Discretization:
        return Discretization(self.L, self.T, self.eps, self.material.U)


_BLOCKS = {"material": MaterialBlock, "grid": GridBlock, "run": RunBlock,
           "case": CaseBlock, "output": OutputBlock}
_PHYSICAL = ("E", "kappa", "dx", "dt")


def _build_block(name, cls, data):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(name, "must be a mapping")
    known = set(cls.__dataclass_fields__)
    for k in data:
        if k not in known:
            raise ConfigError(f"{name}.{k}", "unknown key")
    return cls(**{k: _coerce(v) for k, v in data.items()})


def _coerce(v):
    # YAML 1.1 reads forms like 1e-9 as strings
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def from_dict(data: dict) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping")
    for k in data:
        if k not in _BLOCKS:
            raise ConfigError(k, "unknown key")
    cfg = RunConfig(**{k: _build_block(k, cls, data.get(k)) for k, cls in _BLOCKS.items()})
    validate(cfg)
    return cfg


def _num(key, v, positive=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(key, f"must be a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(key, f"must be positive, got {v!r}")
    return float(v)


def _int(key, v):
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(key, f"must be a positive integer, got {v!r}")
    return v


def validate(cfg: RunConfig) -> RunConfig:
    m, g, r, c, o = cfg.material, cfg.grid, cfg.run, cfg.case, cfg.output
    if m.nu is None:
        raise ConfigError("material.nu", "is required")
    nu = _num("material.nu", m.nu, positive=False)
    if not -1.0 < nu < 1.0:
        raise ConfigError("material.nu", f"must lie in the open interval (-1, 1), got {nu!r}")
    theta = _num("material.theta", m.theta)
    if not theta < 1.0:
        raise ConfigError("material.theta", f"must lie in (0, 1), got {theta!r}")
    for k in ("tau_12", "tau_22", "U"):
        _num(f"material.{k}", getattr(m, k))

    if g.nx is None:
        raise ConfigError("grid.nx", "is required")
    for k in ("nx", "ny"):
        if getattr(g, k) is not None:
            setattr(g, k, _int(f"grid.{k}", getattr(g, k)))
    Lx, Ly = _num("grid.Lx", g.Lx), _num("grid.Ly", g.Ly)
    if g.ny is None:
        g.ny = int(round(g.nx * Ly / Lx))
    eps = Lx / g.nx
    if not math.isclose(eps, Ly / g.ny, rel_tol=1e-12):
        raise ConfigError("grid.ny", f"spacing {Ly / g.ny!r} differs from Lx/nx = {eps!r}")
    cfg.eps = eps

    physical = [k for k in _PHYSICAL if getattr(m, k) is not None]
    if m.E_tilde is not None and physical:
        raise ConfigError("material.E_tilde", "give either E_tilde or the physical set (E, kappa, dx, dt), not both")
    if m.E_tilde is not None:
        cfg.E_tilde = _num("material.E_tilde", m.E_tilde)
    elif physical:
        missing = [k for k in _PHYSICAL if getattr(m, k) is None]
        if missing:
            raise ConfigError(f"material.{missing[0]}", "is required with the physical material set")
        for k in _PHYSICAL:
            _num(f"material.{k}", getattr(m, k))
        try:
            cfg.E_tilde = dimensionless_youngs(m.E, m.kappa, m.dx, m.dt)
        except InvalidParameterError as exc:
            raise ConfigError("material", str(exc)) from exc
        cfg.L = m.dx / eps
        cfg.T = m.dt / eps**2
    else:
        raise ConfigError("material.E_tilde", "is required (or the physical set E, kappa, dx, dt)")

    if r.mode not in ("tolerance", "fixed-horizon"):
        raise ConfigError("run.mode", f"must be 'tolerance' or 'fixed-horizon', got {r.mode!r}")
    _num("run.tol", r.tol)
    if r.mode == "fixed-horizon":
        if r.t_final is None:
            raise ConfigError("run.t_final", "is required in fixed-horizon mode")
        _num("run.t_final", r.t_final)
    for k in ("max_steps", "check_interval", "log_interval"):
        setattr(r, k, _int(f"run.{k}", getattr(r, k)))

    if c.id not in ("none", "trig", "separable", "gaussian"):
        raise ConfigError("case.id", f"unknown case {c.id!r}")
    if c.variant not in ("standard", "corrected", "fourth-order"):
        raise ConfigError("case.variant", f"unknown variant {c.variant!r}")
    if c.form not in ("literal", "consistent"):
        raise ConfigError("case.form", f"unknown form {c.form!r}")
    if c.id != "none" and not (math.isclose(Lx, 1.0) and math.isclose(Ly, 1.0)):
        raise ConfigError("grid.Lx", "manufactured cases live on the unit cell")
    if o.fields not in ("csv", "none"):
        raise ConfigError("output.fields", f"must be 'csv' or 'none', got {o.fields!r}")
    return cfg


def _strip_header(text: str) -> dict | None:
    # output files carry the configuration as a JSON comment line
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line.lstrip("#").strip()
        if body.startswith("config: "):
            return json.loads(body[len("config: "):])
    return None


def parse_config(path) -> RunConfig:
    """Read a YAML config, or the header of a previously written output file."""
    with open(path) as fh:
        text = fh.read()
    data = _strip_header(text)
    if data is None:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    return from_dict(data)
