"""Computer-assisted labeling toolkit for ship-track bathymetry soundings."""

__version__ = "0.1.0"
