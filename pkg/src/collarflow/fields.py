"""Symmetric 2-tensor fields in the 0-frame {dx/x, dy^a/x} under the ansatz.

Only the independent components are stored.  In isotropic mode these are two
profiles of x: the normal-normal component and the common tangential diagonal
value.  In one_tangential mode four fields of (x, y): normal-normal, the
normal/resolved-tangential mix, the resolved tangential diagonal, and the
common diagonal value of the n-1 suppressed tangential directions.
"""

from dataclasses import dataclass, field

import numpy as np

from .chart import CollarChart
from .errors import ConfigurationError, SingularMetricError

ISO_COMPONENTS = ("xx", "tang")
TANG_COMPONENTS = ("xx", "xy", "yy", "zz")


def component_names(chart):
    return ISO_COMPONENTS if chart.anisotropy == "isotropic" else TANG_COMPONENTS


@dataclass
class ZeroFrameTensor:
    """Symmetric 2-tensor stored by its independent ansatz components."""

    chart: CollarChart
    components: dict

    @classmethod
    def zero(cls, chart):
        comps = {name: chart.zeros() for name in component_names(chart)}
        return cls(chart, comps)

    @classmethod
    def from_matrix(cls, chart, mat, tol=1e-12):
        """Project a full (Nx, Ny, d, d) frame matrix onto the ansatz.

        Raises if the matrix carries off-ansatz entries above `tol` relative
        to its own scale: the ansatz is structural, not an approximation.
        """
        obj = cls(chart, cls._extract(chart, mat))
        leak = np.max(np.abs(mat - obj.matrix()))
        scale = max(np.max(np.abs(mat)), 1.0)
        if leak > tol * scale:
            raise ConfigurationError(
                f"matrix has off-ansatz entries (leakage {leak:.3e})")
        return obj

    @staticmethod
    def _extract(chart, mat):
        if chart.anisotropy == "isotropic":
            tang = mat[..., 1, 1] if chart.d > 1 else mat[..., 0, 0]
            return {"xx": mat[..., 0, 0].copy(), "tang": tang.copy()}
        zz = mat[..., 2, 2] if chart.d > 2 else mat[..., 1, 1]
        return {"xx": mat[..., 0, 0].copy(), "xy": mat[..., 0, 1].copy(),
                "yy": mat[..., 1, 1].copy(), "zz": zz.copy()}

    def matrix(self):
        """Full (Nx, Ny, d, d) frame component matrix (ansatz expansion)."""
        chart = self.chart
        d = chart.d
        mat = chart.zeros(d, d)
        c = self.components
        if chart.anisotropy == "isotropic":
            mat[..., 0, 0] = c["xx"]
            for a in range(1, d):
                mat[..., a, a] = c["tang"]
        else:
            mat[..., 0, 0] = c["xx"]
            mat[..., 0, 1] = c["xy"]
            mat[..., 1, 0] = c["xy"]
            mat[..., 1, 1] = c["yy"]
            for a in range(2, d):
                mat[..., a, a] = c["zz"]
        return mat

    def pack(self):
        """Flat vector of independent components (solver ordering)."""
        return np.stack([self.components[k] for k in component_names(self.chart)],
                        axis=-1).ravel()

    @classmethod
    def unpack(cls, chart, vec):
        names = component_names(chart)
        arr = vec.reshape(chart.Nx, chart.Ny, len(names))
        return cls(chart, {k: arr[..., i].copy() for i, k in enumerate(names)})

    def copy(self):
        return ZeroFrameTensor(self.chart, {k: v.copy() for k, v in self.components.items()})

    def __add__(self, other):
        return ZeroFrameTensor(self.chart, {
            k: self.components[k] + other.components[k] for k in self.components})

    def __sub__(self, other):
        return ZeroFrameTensor(self.chart, {
            k: self.components[k] - other.components[k] for k in self.components})

    def __mul__(self, scalar):
        return ZeroFrameTensor(self.chart, {
            k: scalar * v for k, v in self.components.items()})

    __rmul__ = __mul__

    def is_finite(self):
        return all(np.all(np.isfinite(v)) for v in self.components.values())

    def sup_norm(self):
        """Max absolute independent component over nodes."""
        return max(float(np.max(np.abs(v))) for v in self.components.values())


def background_frame(chart):
    """0-frame components of the background metric h, shape (Nx, Ny, d, d).

    Torus boundary: the exact hyperbolic metric (dx^2 + |dy|^2)/x^2, whose
    frame components are the identity.  Ball boundary: the hyperbolic normal
    form (dx^2 + (1 - x^2/4)^2 ghat)/x^2, identity normal component and the
    factor (1 - x^2/4)^2 on every tangential direction.
    """
    d = chart.d
    mat = chart.zeros(d, d)
    idx = np.arange(d)
    mat[..., idx, idx] = 1.0
    if chart.mode == "ball":
        f2 = (1.0 - chart.x_col ** 2 / 4.0) ** 2
        for a in range(1, d):
            mat[..., a, a] = f2
    return mat


@dataclass
class MetricState:
    """Background plus perturbation: g = h + v at flow time t."""

    chart: CollarChart
    v: ZeroFrameTensor
    t: float = 0.0

    def g_matrix(self):
        return background_frame(self.chart) + self.v.matrix()

    def h_matrix(self):
        return background_frame(self.chart)

    def check_positive(self):
        """Raise SingularMetricError at the first non-positive-definite node."""
        g = self.g_matrix()
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            eigs = np.linalg.eigvalsh(g)
            bad = np.argwhere(eigs[..., 0] <= 0.0)
            i, j = bad[0]
            raise SingularMetricError(
                f"metric not positive definite at node s={self.chart.s[i]:.6f} "
                f"(x={self.chart.x[i]:.6e}), y={self.chart.y[j]:.6f}",
                node=(int(i), int(j))) from None

    def closeness(self):
        """sup-node operator norm of v relative to h (epsilon-closeness)."""
        h = self.h_matrix()
        vmat = self.v.matrix()
        L = np.linalg.cholesky(h)
        Linv = np.linalg.inv(L)
        rel = Linv @ vmat @ np.swapaxes(Linv, -1, -2)
        eigs = np.linalg.eigvalsh(rel)
        return float(np.max(np.abs(eigs)))


def build_background(chart):
    """MetricState for the exact background: v = 0 at t = 0."""
    return MetricState(chart, ZeroFrameTensor.zero(chart), 0.0)
