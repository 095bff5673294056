"""Cache cluster simulator: placement and delivery policies for a cluster of small caches."""

__version__ = "0.1.0"
