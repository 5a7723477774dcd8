"""Bounded-concurrency HTTP fan-out with round-robin replica dispatch.

A small keepalive connection pool over raw asyncio streams: per-call
overhead stays low enough that replica parallelism, not client CPU,
dominates matrix assembly. URLs are chosen cyclically at dispatch time; a
request that fails on its replica is retried exactly once on the next
replica in the cycle. A stale pooled connection (server closed it between
requests) is replaced transparently without consuming the retry.
"""

from __future__ import annotations

import asyncio
import json
from urllib.parse import urlparse

from .errors import AllReplicasFailed


class _Conn:
    def __init__(self, host: str, port: int):
        self.host = host
        self.port = port
        self.reader: asyncio.StreamReader | None = None
        self.writer: asyncio.StreamWriter | None = None
        self.used = False

    async def connect(self) -> None:
        self.reader, self.writer = await asyncio.open_connection(self.host, self.port)
        self.used = False

    def close(self) -> None:
        if self.writer is not None:
            try:
                self.writer.close()
            except Exception:
                pass
        self.reader = self.writer = None

    async def post_json(self, path: str, payload: bytes) -> tuple[int, bytes]:
        head = (
            f"POST {path} HTTP/1.1\r\n"
            f"host: {self.host}:{self.port}\r\n"
            "content-type: application/json\r\n"
            f"content-length: {len(payload)}\r\n"
            "connection: keep-alive\r\n\r\n"
        ).encode("ascii")
        self.writer.write(head + payload)
        await self.writer.drain()

        status_line = await self.reader.readline()
        if not status_line:
            raise ConnectionError("connection closed before response")
        status = int(status_line.split(b" ", 2)[1])
        content_length = None
        chunked = False
        close_after = False
        while True:
            line = await self.reader.readline()
            if line in (b"\r\n", b""):
                break
            name, _, value = line.partition(b":")
            lname = name.strip().lower()
            value = value.strip()
            if lname == b"content-length":
                content_length = int(value)
            elif lname == b"transfer-encoding" and b"chunked" in value.lower():
                chunked = True
            elif lname == b"connection" and b"close" in value.lower():
                close_after = True
        if chunked:
            body = bytearray()
            while True:
                size_line = await self.reader.readline()
                size = int(size_line.strip(), 16)
                if size == 0:
                    await self.reader.readline()
                    break
                body += await self.reader.readexactly(size)
                await self.reader.readexactly(2)
            payload_out = bytes(body)
        elif content_length is not None:
            payload_out = await self.reader.readexactly(content_length)
        else:
            payload_out = await self.reader.read()
            close_after = True
        if close_after:
            self.close()
        self.used = True
        return status, payload_out


class ReplicaPool:
    """Keepalive connections to a set of replica base URLs."""

    def __init__(self, urls: list[str], max_in_flight: int):
        if not urls:
            raise ValueError("at least one replica URL required")
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.urls = list(urls)
        self.max_in_flight = max_in_flight
        self._endpoints = []
        for url in self.urls:
            parsed = urlparse(url)
            self._endpoints.append((parsed.hostname, parsed.port or 80))
        self._idle: list[list[_Conn]] = [[] for _ in self.urls]
        self._cursor = 0
        self.semaphore = asyncio.Semaphore(max_in_flight)

    def _next_index(self) -> int:
        i = self._cursor % len(self.urls)
        self._cursor += 1
        return i

    async def _acquire_conn(self, idx: int) -> _Conn:
        pool = self._idle[idx]
        if pool:
            return pool.pop()
        host, port = self._endpoints[idx]
        conn = _Conn(host, port)
        await conn.connect()
        return conn

    async def _request_once(self, idx: int, path: str, payload: bytes) -> tuple[int, bytes]:
        conn = await self._acquire_conn(idx)
        try:
            status, body = await conn.post_json(path, payload)
        except (ConnectionError, asyncio.IncompleteReadError, OSError):
            was_reused = conn.used
            conn.close()
            if not was_reused:
                raise
            # stale keepalive connection; one transparent replacement
            conn = _Conn(*self._endpoints[idx])
            await conn.connect()
            try:
                status, body = await conn.post_json(path, payload)
            except (ConnectionError, asyncio.IncompleteReadError, OSError):
                conn.close()
                raise
        if conn.writer is not None:
            self._idle[idx].append(conn)
        return status, body

    async def post_json(self, path: str, obj: dict) -> tuple[int, bytes]:
        """POST to the next replica in the cycle, retrying once on the next one.

        5xx answers and transport failures both count as replica failures;
        everything else (200/4xx) is returned to the caller to interpret.
        Raises AllReplicasFailed when the retry also fails.
        """
        payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
        async with self.semaphore:
            failures = []
            for _ in range(2):
                idx = self._next_index()
                try:
                    status, body = await self._request_once(idx, path, payload)
                except (ConnectionError, asyncio.IncompleteReadError, OSError) as exc:
                    failures.append((self.urls[idx], repr(exc)))
                    continue
                if status >= 500:
                    failures.append((self.urls[idx], f"HTTP {status}"))
                    continue
                return status, body
            raise AllReplicasFailed(f"fan-out request to {path} failed twice: {failures}")

    def close(self) -> None:
        for pool in self._idle:
            for conn in pool:
                conn.close()
            pool.clear()
