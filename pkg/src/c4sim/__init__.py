"""Simulation workbench for the [[4,2,2]] error-detecting code on neutral atoms."""

__version__ = "0.1.0"
