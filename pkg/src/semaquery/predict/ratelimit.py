"""Token-bucket rate limiter for vendor requests-per-minute limits.

Capacity is one token so calls are spaced evenly at rpm/60 per second;
smooth spacing keeps measured throughput close to the analytic rate
bound instead of admitting bursts.
"""

from __future__ import annotations

import threading
import time


class RateLimiter:
    def __init__(self, rpm: float):
        if rpm <= 0:
            raise ValueError("rpm must be positive")
        self.interval = 60.0 / rpm
        self._lock = threading.Lock()
        self._next_free = 0.0

    def acquire(self) -> None:
        """Block until a request slot is available."""
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next_free)
            self._next_free = start + self.interval
        delay = start - now
        if delay > 0:
            time.sleep(delay)
