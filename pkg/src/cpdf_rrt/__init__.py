"""Kinodynamic RRT for car-like robots with learned custom sampling distributions."""

__version__ = "0.1.0"
