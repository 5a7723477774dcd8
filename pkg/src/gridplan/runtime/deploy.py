"""Process-level deployment orchestration for tests and experiments.

Replaces the cluster: each service runs as a `gridplan serve` subprocess on
an ephemeral port. The child prints a GRIDPLAN_LISTENING line once its
socket is bound, which removes port races entirely.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

from ..errors import ReadinessTimeout
from .conformance import wait_ready

LISTENING_PREFIX = "GRIDPLAN_LISTENING "


@dataclass
class ServiceProcess:
    role: str
    process: subprocess.Popen
    url: str
    config_path: str

    def stop(self) -> None:
        if self.process.poll() is None:
            self.process.terminate()
            try:
                self.process.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.process.kill()
                self.process.wait(timeout=10)
        try:
            os.unlink(self.config_path)
        except OSError:
            pass


def launch_service(
    role: str,
    config: dict,
    env_extra: dict | None = None,
    wait_healthy: bool = True,
    startup_timeout_s: float = 60.0,
) -> ServiceProcess:
    """Spawn one `gridplan serve` process and wait for its bound address."""
    config = dict(config)
    config["role"] = role
    config.setdefault("listen_port", 0)
    fd, config_path = tempfile.mkstemp(prefix=f"gridplan-{role}-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(config, fh)

    env = dict(os.environ)
    env.setdefault("GRIDPLAN_LOG_LEVEL", "warning")
    if env_extra:
        env.update(env_extra)

    proc = subprocess.Popen(
        [sys.executable, "-m", "gridplan", "serve", "--config", config_path],
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        env=env,
        text=True,
    )
    deadline = time.monotonic() + startup_timeout_s
    url = None
    while time.monotonic() < deadline:
        line = proc.stdout.readline()
        if line.startswith(LISTENING_PREFIX):
            url = "http://" + line[len(LISTENING_PREFIX):].strip()
            break
        if proc.poll() is not None:
            raise ReadinessTimeout(f"{role} exited with code {proc.returncode} before binding")
    if url is None:
        proc.kill()
        raise ReadinessTimeout(f"{role} did not bind within {startup_timeout_s}s")
    service = ServiceProcess(role=role, process=proc, url=url, config_path=config_path)
    if wait_healthy:
        try:
            wait_ready(url, timeout_s=startup_timeout_s)
        except ReadinessTimeout:
            service.stop()
            raise
    return service


@dataclass
class Deployment:
    """A set of cooperating service processes; `url` targets the planning API."""

    mode: str
    services: list[ServiceProcess] = field(default_factory=list)
    replicas: int = 1

    @property
    def url(self) -> str:
        return self.services[-1].url

    def stop(self) -> None:
        for svc in reversed(self.services):
            svc.stop()

    def __enter__(self) -> "Deployment":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def launch_monolith(
    graph_file: str,
    store_path: str | None = None,
    env_extra: dict | None = None,
    **config_overrides,
) -> Deployment:
    config = {"graph_file": graph_file, **config_overrides}
    if store_path:
        config["store_path"] = store_path
    svc = launch_service("monolith", config, env_extra=env_extra)
    return Deployment(mode="monolith", services=[svc], replicas=1)


def launch_microservices(
    graph_file: str,
    replicas: int = 1,
    store_path: str | None = None,
    max_in_flight: int = 32,
    env_extra: dict | None = None,
    **config_overrides,
) -> Deployment:
    """Pathfinder replicas behind a solver; optionally an ingest service."""
    services: list[ServiceProcess] = []
    try:
        if store_path:
            services.append(launch_service("ingest", {"store_path": store_path}, env_extra=env_extra))
        pathfinders = []
        for _ in range(replicas):
            pf = launch_service("pathfinder", {"graph_file": graph_file, **config_overrides}, env_extra=env_extra)
            pathfinders.append(pf)
            services.append(pf)
        solver = launch_service(
            "solver",
            {
                "upstreams": {"pathfinder": [pf.url for pf in pathfinders]},
                "max_in_flight": max_in_flight,
                **config_overrides,
            },
            env_extra=env_extra,
        )
        services.append(solver)
    except Exception:
        for svc in reversed(services):
            svc.stop()
        raise
    return Deployment(mode="microservices", services=services, replicas=replicas)
