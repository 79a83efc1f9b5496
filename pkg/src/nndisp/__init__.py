"""Finite-blocklength dispersion toolkit for nearest-neighbor decoding with
shell and i.i.d. Gaussian codebooks over additive noise and interference."""

__version__ = "0.1.0"
