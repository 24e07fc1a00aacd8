"""Semiclassical simulator of an all-optical control and readout link for superconducting qubits."""

__version__ = "0.1.0"
