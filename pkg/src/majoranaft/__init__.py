"""Frame-level simulation and decoding of a Majorana surface-code memory."""

__version__ = "0.1.0"
