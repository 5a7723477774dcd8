"""Request counters and latency histograms with text exposition.

A deliberately small registry: one counter family
(http_requests_total{service,route,status}) and one histogram family
(request_duration_seconds{service,route}) with a fixed bucket set,
rendered in the Prometheus text exposition format (version 0.0.4).
"""

from __future__ import annotations

import threading
import time

DURATION_BUCKETS = (0.005, 0.025, 0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0, 60.0)

CONTENT_TYPE = "text/plain; version=0.0.4; charset=utf-8"


def _fmt(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


class MetricsRegistry:
    def __init__(self, service: str):
        self.service = service
        self._lock = threading.Lock()
        self._requests: dict[tuple[str, str], int] = {}
        self._hist: dict[str, list[int]] = {}
        self._hist_sum: dict[str, float] = {}
        self._hist_count: dict[str, int] = {}

    def observe_request(self, route: str, status: int, seconds: float) -> None:
        skey = str(status)
        with self._lock:
            self._requests[(route, skey)] = self._requests.get((route, skey), 0) + 1
            if route not in self._hist:
                self._hist[route] = [0] * len(DURATION_BUCKETS)
                self._hist_sum[route] = 0.0
                self._hist_count[route] = 0
            buckets = self._hist[route]
            for i, bound in enumerate(DURATION_BUCKETS):
                if seconds <= bound:
                    buckets[i] += 1
            self._hist_sum[route] += seconds
            self._hist_count[route] += 1

    def counter_value(self, route: str, status: int) -> int:
        with self._lock:
            return self._requests.get((route, str(status)), 0)

    def render(self) -> str:
        with self._lock:
            lines = [
                "# HELP http_requests_total Total HTTP requests handled.",
                "# TYPE http_requests_total counter",
            ]
            for (route, status), count in sorted(self._requests.items()):
                lines.append(
                    f'http_requests_total{{service="{self.service}",route="{route}",'
                    f'status="{status}"}} {count}'
                )
            lines.append("# HELP request_duration_seconds HTTP request duration.")
            lines.append("# TYPE request_duration_seconds histogram")
            for route in sorted(self._hist):
                base = f'service="{self.service}",route="{route}"'
                for i, bound in enumerate(DURATION_BUCKETS):
                    lines.append(
                        f'request_duration_seconds_bucket{{{base},le="{_fmt(bound)}"}} '
                        f"{self._hist[route][i]}"
                    )
                lines.append(
                    f'request_duration_seconds_bucket{{{base},le="+Inf"}} '
                    f"{self._hist_count[route]}"
                )
                lines.append(
                    f"request_duration_seconds_sum{{{base}}} {repr(self._hist_sum[route])}"
                )
                lines.append(
                    f"request_duration_seconds_count{{{base}}} {self._hist_count[route]}"
                )
            return "\n".join(lines) + "\n"


class MetricsMiddleware:
    """ASGI middleware: every handled request increments exactly one series.

    The route label is the matched route template when routing succeeded,
    the raw path otherwise (404s and friends).
    """

    def __init__(self, app, registry: MetricsRegistry):
        self.app = app
        self.registry = registry

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return
        start = time.perf_counter()
        status_holder = {"status": 500}

        async def send_wrapper(message):
            if message["type"] == "http.response.start":
                status_holder["status"] = message["status"]
            await send(message)

        try:
            await self.app(scope, receive, send_wrapper)
        finally:
            route = scope.get("route")
            route_path = getattr(route, "path", None) or scope.get("path", "?")
            self.registry.observe_request(
                route_path, status_holder["status"], time.perf_counter() - start
            )
