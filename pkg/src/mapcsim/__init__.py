"""Deterministic block-assembly grid world with two cooperative agent-team engines."""

__version__ = "0.1.0"
