"""Spherical-pendulum normal form, action integrals and symplectic invariants."""

__version__ = "0.1.0"
