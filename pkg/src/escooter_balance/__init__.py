"""Roll dynamics, balancing controllers and scenario simulation for a riderless e-scooter."""

from .cli import main

__all__ = ["main"]
