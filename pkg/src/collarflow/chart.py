"""Collar charts: the discretized domain near conformal infinity.

The chart covers a collar (0 < x_min <= x <= x_max) x boundary, discretized
uniformly in the log coordinate s = -log x, so x = exp(-s).  Boundary
coordinates are periodic on [0, 2*pi).  Under the symmetry ansatz only one
tangential coordinate (if any) is resolved; the remaining n-1 directions are
suppressed and carried algebraically.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

MODES = ("torus", "ball")
ANISOTROPIES = ("isotropic", "one_tangential")


@dataclass(frozen=True)
class CollarChart:
    """Discretized collar domain.

    n is the boundary dimension (the manifold has dimension n + 1); s0 and s1
    are the endpoints of s = -log x, so x_max = exp(-s0) and x_min = exp(-s1).
    """

    mode: str
    n: int
    s0: float
    s1: float
    Nx: int
    Ny: int = 1
    anisotropy: str = "isotropic"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.anisotropy not in ANISOTROPIES:
            raise ConfigurationError(
                f"anisotropy must be one of {ANISOTROPIES}, got {self.anisotropy!r}")
        if self.n < 2:
            raise ConfigurationError(f"boundary dimension n must be >= 2, got {self.n}")
        if not (self.s1 > self.s0):
            raise ConfigurationError(f"need s1 > s0, got s0={self.s0}, s1={self.s1}")
        if self.x_max >= 2.0 and self.mode == "ball":
            raise ConfigurationError(
                f"ball mode needs x_max < 2 (got x_max={self.x_max}), "
                "so that 1 - x^2/4 stays positive")
        if self.s0 <= -np.log(2.0) + 1e-15 and self.mode == "ball":
            raise ConfigurationError("ball collar must satisfy x_max < 2")
        if self.x_min <= 0:
            raise ConfigurationError("x_min must be positive")
        if self.Nx < 8:
            raise ConfigurationError(f"Nx must be >= 8, got {self.Nx}")
        if self.Ny < 1:
            raise ConfigurationError(f"Ny must be >= 1, got {self.Ny}")
        if self.anisotropy == "one_tangential" and self.Ny < 8:
            raise ConfigurationError(
                f"one_tangential mode needs Ny >= 8, got {self.Ny}")
        if self.anisotropy == "isotropic" and self.Ny != 1:
            raise ConfigurationError(
                "isotropic mode stores y-independent fields; set Ny = 1")
        if self.mode == "ball" and self.anisotropy == "one_tangential":
            raise ConfigurationError(
                "ball mode supports only the isotropic ansatz (a partial "
                "ansatz on a round boundary is not closed under the flow)")

    # -- derived geometry ------------------------------------------------

    @property
    def d(self):
        """Manifold dimension n + 1 (size of the frame index)."""
        return self.n + 1

    @property
    def x_max(self):
        return float(np.exp(-self.s0))

    @property
    def x_min(self):
        return float(np.exp(-self.s1))

    @property
    def ds(self):
        return (self.s1 - self.s0) / (self.Nx - 1)

    @property
    def dy(self):
        return 2.0 * np.pi / self.Ny

    @property
    def s(self):
        """s-grid, shape (Nx,)."""
        return np.linspace(self.s0, self.s1, self.Nx)

    @property
    def x(self):
        """x-grid, shape (Nx,)."""
        return np.exp(-self.s)

    @property
    def y(self):
        """Periodic y-grid on [0, 2*pi), shape (Ny,)."""
        return np.arange(self.Ny) * self.dy

    @property
    def x_col(self):
        """x broadcast against (Nx, Ny) fields."""
        return self.x[:, None]

    def refined(self, factor=2):
        """Chart with mesh widths divided by `factor` (same endpoints)."""
        return CollarChart(
            mode=self.mode, n=self.n, s0=self.s0, s1=self.s1,
            Nx=factor * (self.Nx - 1) + 1,
            Ny=self.Ny if self.Ny == 1 else factor * self.Ny,
            anisotropy=self.anisotropy)

    def field_shape(self, *trailing):
        return (self.Nx, self.Ny) + tuple(trailing)

    def zeros(self, *trailing):
        return np.zeros(self.field_shape(*trailing))
