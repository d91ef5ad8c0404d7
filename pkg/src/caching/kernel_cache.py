"""
In-memory cache for per-modulus kernel data.

Landen sequences and antiderivative tables depend only on q, so they are
computed once and shared between solver iterations and threads.
"""

from collections import OrderedDict
from collections.abc import Callable, Hashable
from threading import RLock
from typing import Any, TypeVar

from loguru import logger

T = TypeVar("T")


class KernelCache:
    """Thread-safe LRU cache for immutable per-q values."""

    def __init__(self, max_size: int = 64):
        """
        Initialize kernel cache.

        Args:
            max_size: Maximum number of entries to keep
        """
        self.max_size = max_size
        self._cache: OrderedDict[Hashable, Any] = OrderedDict()
        self._lock = RLock()
        self._stats = {"hits": 0, "misses": 0, "sets": 0, "deletes": 0, "evictions": 0}

    def _evict_lru(self) -> None:
        """Evict the least recently used item."""
        if self._cache:
            key, _ = self._cache.popitem(last=False)
            self._stats["evictions"] += 1
            logger.debug(f"Evicted kernel cache entry {key!r}")

    def get(self, key: Hashable) -> Any | None:
        """Get a cached value, or None when absent."""
        with self._lock:
            if key not in self._cache:
                self._stats["misses"] += 1
                return None

            self._cache.move_to_end(key)
            self._stats["hits"] += 1
            return self._cache[key]

    def set(self, key: Hashable, value: Any) -> None:
        """Store a value, evicting least recently used entries over capacity."""
        with self._lock:
            if key in self._cache:
                del self._cache[key]
            self._cache[key] = value

            while len(self._cache) > self.max_size:
                self._evict_lru()

            self._stats["sets"] += 1

    def get_or_compute(self, key: Hashable, factory: Callable[[], T]) -> T:
        """
        Return the cached value for key, computing it on a miss.

        The factory runs under the lock so concurrent callers never build the
        same table twice.
        """
        with self._lock:
            value = self.get(key)
            if value is None:
                value = factory()
                self.set(key, value)
            return value  # type: ignore[no-any-return]

    def delete(self, key: Hashable) -> bool:
        """Delete a cached value."""
        with self._lock:
            if key in self._cache:
                del self._cache[key]
                self._stats["deletes"] += 1
                return True
            return False

    def clear(self) -> None:
        """Drop all entries."""
        with self._lock:
            self._cache.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._cache)

    def get_stats(self) -> dict[str, Any]:
        """Get cache statistics."""
        with self._lock:
            total_requests = self._stats["hits"] + self._stats["misses"]
            hit_rate = (
                self._stats["hits"] / total_requests if total_requests > 0 else 0.0
            )
            return {
                **self._stats,
                "size": len(self._cache),
                "max_size": self.max_size,
                "hit_rate": hit_rate,
            }
