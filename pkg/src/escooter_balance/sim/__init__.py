"""Closed-loop simulation, monitoring, export and sweeps."""
