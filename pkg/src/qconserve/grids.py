"""Uniform 1-D grids used to discretize continuum factors.

Natural units (hbar = 1) throughout; lengths and masses are dimensionless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """A uniform spatial grid of ``points`` samples covering ``length``.

    Coordinates are centered: x_j = (j - points/2) * spacing, so
    x in [-L/2, L/2). Periodic grids pair with Fourier wavenumbers
    2*pi*k/L for k in [-points/2, points/2).
    """

    points: int
    length: float
    periodic: bool = True

    def __post_init__(self) -> None:
        if self.points < 16 or (self.points & (self.points - 1)) != 0:
            raise ValueError(f"points must be a power of two >= 16, got {self.points}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValueError(f"length must be positive and finite, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.points

    def coordinates(self) -> np.ndarray:
        """Centered sample positions, leftmost at -L/2."""
        return (np.arange(self.points) - self.points // 2) * self.spacing

    def wavenumbers(self) -> np.ndarray:
        """Fourier wavenumbers in FFT ordering (0, +, ..., -, ...)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)
