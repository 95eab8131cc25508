"""Cache replacement under content freshness constraints."""

__version__ = "0.1.0"
