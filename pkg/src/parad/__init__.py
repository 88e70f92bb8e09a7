"""Radon projections from photoacoustic data on open circular/spherical apertures."""

from .geometry import AcquisitionGeometry, cutoff_window, spatial_mask, valid_tau_upper
from .grids_io import Axis, GridArray, read_grid, write_grid
from .phantom import Ball, Phantom, default_phantom_2d, default_phantom_3d

__version__ = "0.1.0"

__all__ = [
    "AcquisitionGeometry", "Axis", "Ball", "GridArray", "Phantom",
    "cutoff_window", "default_phantom_2d", "default_phantom_3d",
    "read_grid", "spatial_mask", "valid_tau_upper", "write_grid",
]
