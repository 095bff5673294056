"""Memo for profiles, placement plans and lower bounds."""

from typing import Any, Callable, Optional, TypeVar
from cachetools import LRUCache
from src.config.settings import settings

T = TypeVar("T")

CACHE_TYPES = ("profile", "placement", "bound")


class CacheManager:
    """One LRU per object kind; keys are built from the parameters that fix the object."""

    def __init__(self, maxsize: Optional[int] = None):
        self.enabled = settings.CACHE_ENABLED
        size = maxsize or settings.CACHE_MAX_SIZE
        self.caches = {name: LRUCache(maxsize=size) for name in CACHE_TYPES}

    def get(self, cache_type: str, key: str) -> Optional[Any]:
        """Cached value, or None when absent, disabled or of an unknown kind."""
        cache = self.caches.get(cache_type)
        if not self.enabled or cache is None:
            return None
        return cache.get(key)

    def set(self, cache_type: str, key: str, value: Any) -> None:
        cache = self.caches.get(cache_type)
        if self.enabled and cache is not None:
            cache[key] = value

    def get_or_build(self, cache_type: str, key: str, build: Callable[[], T]) -> T:
        """
        Return the cached object, building and storing it on a miss.

        Args:
            cache_type: profile, placement or bound
            key: Key from generate_key
            build: Zero-argument constructor

        Returns:
            The cached or freshly built object
        """
        value = self.get(cache_type, key)
        if value is None:
            value = build()
            self.set(cache_type, key, value)
        return value

    def clear(self, cache_type: Optional[str] = None) -> None:
        """Clear one kind, or every kind when cache_type is None."""
        targets = [self.caches[cache_type]] if cache_type in self.caches else []
        if cache_type is None:
            targets = list(self.caches.values())
        for cache in targets:
            cache.clear()

    @staticmethod
    def generate_key(*args: Any) -> str:
        # repr keeps 0.3 and 0.30000000000000004 apart
        return ":".join(repr(arg) for arg in args)


# Global cache instance
cache_manager = CacheManager()
