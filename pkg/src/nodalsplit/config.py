"""JSON run configuration."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, replace

from .boundary import BoundaryFn
from .rectangle import aspect_from_k, crossing_guard

COMMANDS = ("analyze", "solve", "sweep", "figures", "verify")
MAX_NODES = 4_000_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    phi: BoundaryFn
    k_list: tuple = (4,)
    eta_list: tuple = ()
    grid: object = "auto"          # "auto" or {"nx": int, "ny": int}
    output_dir: str = "out"
    seed: int = 0
    jobs: int | None = None
    eta_max: float = 0.05
    subspace_dim: int = 6
    refine: bool = True
    flood_rows: int = 1024

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phi"] = self.phi.to_dict()
        d["k_list"] = list(self.k_list)
        d["eta_list"] = list(self.eta_list)
        return d

    def digest(self) -> str:
        """Hash of every field that changes results (output_dir and jobs do not)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("jobs")
        d.pop("command")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _need(d, key, kind, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"field '{key}': missing")
        return default
    val = d[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or (kind is int and isinstance(val, bool)):
        raise ConfigError(f"field '{key}': expected {kind.__name__}, got {type(val).__name__}")
    return val


def parse_config(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("top level: expected a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(extra))}")
    command = _need(d, "command", str, required=True)
    if command not in COMMANDS:
        raise ConfigError(f"field 'command': {command!r} not one of {COMMANDS}")
    try:
        phi = BoundaryFn.from_dict(d.get("phi", "bump"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"field 'phi': {exc}") from None
    k_list = _need(d, "k_list", list, [4])
    for i, k in enumerate(k_list):
        if not isinstance(k, int) or isinstance(k, bool) or k < 3:
            raise ConfigError(f"field 'k_list[{i}]': expected integer >= 3, got {k!r}")
    eta_list = _need(d, "eta_list", list, [])
    for i, e in enumerate(eta_list):
        if not isinstance(e, (int, float)) or isinstance(e, bool) or e < 0:
            raise ConfigError(f"field 'eta_list[{i}]': expected real >= 0, got {e!r}")
        for k in k_list:
            guard = crossing_guard(aspect_from_k(k))
            if e >= guard:
                raise ConfigError(f"field 'eta_list[{i}]': {e} is not below the guard {guard:.6g} for k = {k}")
    grid = d.get("grid", "auto")
    if grid != "auto":
        if not isinstance(grid, dict) or set(grid) != {"nx", "ny"}:
            raise ConfigError("field 'grid': expected \"auto\" or {\"nx\": int, \"ny\": int}")
        for key in ("nx", "ny"):
            if not isinstance(grid[key], int) or grid[key] < 64:
                raise ConfigError(f"field 'grid.{key}': expected integer >= 64, got {grid[key]!r}")
        grid = {"nx": grid["nx"], "ny": grid["ny"]}
    jobs = d.get("jobs")
    if jobs is not None and (not isinstance(jobs, int) or jobs < 1):
        raise ConfigError(f"field 'jobs': expected positive integer, got {jobs!r}")
    return RunConfig(
        command=command, phi=phi, k_list=tuple(k_list), eta_list=tuple(float(e) for e in eta_list),
        grid=grid, output_dir=_need(d, "output_dir", str, "out"), seed=_need(d, "seed", int, 0),
        jobs=jobs, eta_max=_need(d, "eta_max", float, 0.05), subspace_dim=_need(d, "subspace_dim", int, 6),
        refine=_need(d, "refine", bool, True), flood_rows=_need(d, "flood_rows", int, 1024),
    )


def load_config(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return parse_config(d)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolve_jobs(cli_jobs: int | None, cfg_jobs: int | None = None) -> int:
    env = os.environ.get("NODALSPLIT_JOBS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"NODALSPLIT_JOBS={env!r} is not an integer") from None
        return max(1, n)
    if cli_jobs:
        return max(1, cli_jobs)
    if cfg_jobs:
        return cfg_jobs
    return os.cpu_count() or 1
