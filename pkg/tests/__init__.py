"""Test suite for the cache cluster simulator."""
