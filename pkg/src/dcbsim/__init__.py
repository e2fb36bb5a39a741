"""Online primary channel selection for dynamic channel bonding WLANs."""

__version__ = "0.1.0"
