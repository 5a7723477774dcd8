"""Service configuration: JSON file values overridden by environment vars."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ..errors import ConfigError

ROLES = ("ingest", "graph", "pathfinder", "solver", "monolith")


@dataclass
class ServiceConfig:
    role: str = ""
    listen_host: str = "127.0.0.1"
    listen_port: int = 0
    upstreams: dict[str, list[str]] = field(default_factory=dict)
    store_path: str | None = None
    graph_file: str | None = None
    penalty_factor: float = 3.0
    indirect_radius_m: float = 500.0
    include_bridges: bool = False
    snap_radius_m: float = 5000.0
    max_in_flight: int = 32
    seed: int = 0
    refresh_interval_s: float = 0.0  # graph auto-rebuild; 0 disables

    def validate(self) -> None:
        if self.role not in ROLES:
            raise ConfigError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.role == "solver" and not self.upstreams.get("pathfinder"):
            raise ConfigError("solver role requires pathfinder upstream URLs")
        if self.role == "pathfinder" and not (self.graph_file or self.upstreams.get("graph")):
            raise ConfigError("pathfinder role requires GRAPH_FILE or GRAPH_URL")
        if self.role == "ingest" and not self.store_path:
            raise ConfigError("ingest role requires a store_path")
        if self.role == "graph" and not (
            self.graph_file or self.store_path or self.upstreams.get("ingest")
        ):
            raise ConfigError("graph role requires a graph_file, store_path, or ingest upstream")
        if self.role == "monolith" and not (self.graph_file or self.store_path):
            raise ConfigError("monolith role requires a graph_file or store_path")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        if not 0 < self.listen_port < 65536 and self.listen_port != 0:
            raise ConfigError(f"invalid listen_port {self.listen_port}")


_ENV_SIMPLE = {
    "ROLE": ("role", str),
    "LISTEN_HOST": ("listen_host", str),
    "LISTEN_PORT": ("listen_port", int),
    "STORE_PATH": ("store_path", str),
    "GRAPH_FILE": ("graph_file", str),
    "PENALTY_FACTOR": ("penalty_factor", float),
    "INDIRECT_RADIUS_M": ("indirect_radius_m", float),
    "SNAP_RADIUS_M": ("snap_radius_m", float),
    "MAX_IN_FLIGHT": ("max_in_flight", int),
    "SEED": ("seed", int),
    "REFRESH_INTERVAL_S": ("refresh_interval_s", float),
    "INCLUDE_BRIDGES": ("include_bridges", lambda v: v.strip() in ("1", "true", "yes")),
}

_ENV_UPSTREAMS = {
    "PATHFINDER_URLS": "pathfinder",
    "GRAPH_URL": "graph",
    "INGEST_URL": "ingest",
}


def load_config(path: str | None = None, env: dict | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    cfg = ServiceConfig()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for key, value in doc.items():
            if key == "upstreams":
                cfg.upstreams = {k: list(v) for k, v in value.items()}
            elif hasattr(cfg, key):
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r} in {path}")
    for name, (attr, conv) in _ENV_SIMPLE.items():
        if name in env and str(env[name]).strip() != "":
            try:
                setattr(cfg, attr, conv(env[name]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad env value {name}={env[name]!r}") from exc
    for name, role in _ENV_UPSTREAMS.items():
        if name in env and str(env[name]).strip() != "":
            cfg.upstreams[role] = [u.strip() for u in str(env[name]).split(",") if u.strip()]
    return cfg
