"""Cache-cluster simulation: popularity, placement, delivery and bounds."""
