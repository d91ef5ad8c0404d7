"""Caching package for per-modulus kernel data."""

from .kernel_cache import KernelCache

__all__ = ["KernelCache"]
