"""Utility modules for the cache cluster simulator."""
