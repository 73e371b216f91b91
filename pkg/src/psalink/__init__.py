"""Two-tone distortion simulator for analog optical links with a fiber PSA."""

__version__ = "0.1.0"
