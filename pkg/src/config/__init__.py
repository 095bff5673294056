"""Configuration modules."""

