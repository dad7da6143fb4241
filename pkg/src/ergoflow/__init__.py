"""Renewal processes, Mittag-Leffler paths and their order-two ergodic averages."""

__version__ = "0.1.0"
