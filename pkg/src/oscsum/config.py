"""Run configuration: defaults, flat key=value config files, provenance."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from .calibration import FROZEN
from .errors import DomainError

VERSION = "0.1.0"


@dataclass
class RunConfig:
    seed: int = 0
    theta_default: float = 0.0
    A0: float = 4.0
    rho: float = 0.1
    eps0: float = 2.0**-10
    C_max: float = 6.0
    max_points: int = 2**24
    max_Q: int = 2**24
    quad_nodes: int = 2**22
    search_budget: int = 10**6
    partitions: int = 1
    grid_G: int = 4
    format: str = "json"
    calibration: dict = field(default_factory=lambda: dict(FROZEN))

    def __post_init__(self):
        for name in ("max_points", "max_Q", "quad_nodes", "search_budget", "partitions"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be positive")
        if self.format not in ("json", "csv"):
            raise DomainError("format must be json or csv")

    def to_dict(self) -> dict:
        return asdict(self)

    def updated(self, **kw) -> "RunConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig(**d)


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name.startswith("calibration."):
        return float(raw)
    if name not in types:
        raise DomainError(f"unknown config key {name!r}")
    t = types[name]
    try:
        if t in ("int", int):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if t in ("float", float):
            return float(raw)
    except ValueError as exc:
        raise DomainError(f"bad value for {name}: {raw!r}") from exc
    return raw.strip()


def parse_config_text(text: str) -> dict:
    """key = value lines; '#' starts a comment; calibration.<name> = value overrides a constant."""
    out: dict = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        v = _coerce(key, val)
        if key.startswith("calibration."):
            out.setdefault("calibration", dict(FROZEN))[key.split(".", 1)[1]] = v
        else:
            out[key] = v
    return out


def load_config(path: str | None, **overrides) -> RunConfig:
    base = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                base = parse_config_text(fh.read())
        except OSError as exc:
            raise DomainError(f"cannot read config: {exc}") from exc
    cfg = RunConfig(**base)
    return cfg.updated(**overrides)


def provenance(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict(), "seed": cfg.seed, "version": VERSION}
