"""Offline HTTP replay for remote-client tests.

A cassette is an ordered list of canned exchanges. The transport hands
each request the next response in sequence and records the request so
tests can golden-match bodies without touching the network.
"""

from __future__ import annotations

import json

import httpx


class CassetteExhausted(AssertionError):
    pass


class CassetteTransport(httpx.BaseTransport):
    """Plays back {"status": int, "json": {...}, "headers": {...}} entries."""

    def __init__(self, exchanges: list[dict]):
        self.exchanges = list(exchanges)
        self.requests: list[dict] = []
        self._cursor = 0

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        if self._cursor >= len(self.exchanges):
            raise CassetteExhausted(
                f"unexpected request #{self._cursor + 1} to {request.url}")
        entry = self.exchanges[self._cursor]
        self._cursor += 1
        body = request.read()
        self.requests.append({
            "method": request.method,
            "url": str(request.url),
            "headers": dict(request.headers),
            "body": json.loads(body) if body else None,
        })
        return httpx.Response(
            status_code=entry.get("status", 200),
            json=entry.get("json"),
            headers=entry.get("headers", {}),
            request=request,
        )

    @classmethod
    def from_file(cls, path: str) -> "CassetteTransport":
        with open(path, encoding="utf-8") as handle:
            return cls(json.load(handle))
