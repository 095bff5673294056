"""Application configuration settings."""

import os
from typing import List


class Settings:
    """Application settings and configuration."""

    # Policies
    PLACEMENT_POLICIES: List[str] = ["pp", "ks"]
    DELIVERY_POLICIES: List[str] = ["omr", "mlp", "orr", "ollr"]
    SWEEP_AXES: List[str] = ["k", "a", "ak", "n", "beta"]
    OUTPUT_FORMATS: List[str] = ["csv", "json"]

    # Default values
    DEFAULT_ITERATIONS = int(os.getenv("SIM_ITERATIONS", "1000"))
    DEFAULT_SEED = int(os.getenv("SIM_SEED", "0"))
    DEFAULT_FORMAT = os.getenv("SIM_FORMAT", "csv")

    # Parallelism
    WORKERS = int(os.getenv("SIM_WORKERS", "1"))

    # Numerics
    KNAPSACK_REL_TOL = 1e-9
    CI_Z = 1.96
    MAX_SEED = 2**63 - 1

    # Output
    CSV_COLUMNS: List[str] = [
        "axis",
        "value",
        "placement",
        "delivery",
        "mean_rate",
        "stddev",
        "ci95",
        "iterations",
        "seed",
        "lower_bound",
    ]
    PRESETS_FILE = os.path.join(os.path.dirname(__file__), "presets.json")

    # Caching
    CACHE_ENABLED = os.getenv("CACHE_ENABLED", "true").lower() == "true"
    CACHE_MAX_SIZE = int(os.getenv("CACHE_MAX_SIZE", "128"))

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE = os.getenv("LOG_FILE", "cache-cluster-sim.log")


# Global settings instance
settings = Settings()
