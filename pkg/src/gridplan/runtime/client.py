"""Client-side round-robin over replica URLs with single-retry failover."""

from __future__ import annotations

import httpx

from ..errors import AllReplicasFailed


class RoundRobinClient:
    """Cycles requests across replica URLs; cursor is per-instance.

    A failed call (transport error or 5xx) moves on to the next replica in
    the cycle, which counts as the single retry; a second failure raises
    AllReplicasFailed.
    """

    def __init__(self, urls: list[str], client: httpx.Client | None = None, timeout: float = 30.0):
        if not urls:
            raise ValueError("at least one URL required")
        self.urls = list(urls)
        self._cursor = 0
        self._client = client
        self._timeout = timeout

    def _next_url(self) -> str:
        url = self.urls[self._cursor % len(self.urls)]
        self._cursor += 1
        return url

    def call(self, method: str, path: str, **kwargs) -> httpx.Response:
        client = self._client or httpx
        kwargs.setdefault("timeout", self._timeout)
        failures = []
        for _ in range(2):
            base = self._next_url()
            url = base.rstrip("/") + path
            try:
                resp = client.request(method, url, **kwargs)
            except httpx.HTTPError as exc:
                failures.append((base, repr(exc)))
                continue
            if resp.status_code >= 500:
                failures.append((base, f"HTTP {resp.status_code}"))
                continue
            return resp
        raise AllReplicasFailed(f"{method} {path} failed on all attempts: {failures}")

    def get(self, path: str, **kwargs) -> httpx.Response:
        return self.call("GET", path, **kwargs)

    def post(self, path: str, **kwargs) -> httpx.Response:
        return self.call("POST", path, **kwargs)
