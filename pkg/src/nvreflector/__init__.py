"""Photon-extraction modelling for a dipole emitter in a diamond parabolic reflector."""

__version__ = "0.1.0"
