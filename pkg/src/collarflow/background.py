"""Background geometry data consumed by the flow, heat, and stability modules.

A Background packages the frame components of the reference metric together
with its frame connection, curvature, Ricci, and the curvature source
E2 = -(Ric + n h).  For the exact hyperbolic torus collar everything is in
closed form (grid constants), so the background is a machine-precision fixed
point of the discrete flow.  For perturbed reference metrics the same data is
assembled from stencils (Koszul formula in the frame), which is what gives
the discretization its O(ds^2) stationarity defect.
"""

from dataclasses import dataclass

import numpy as np

from . import frames
from .chart import CollarChart
from .errors import ConfigurationError


@dataclass
class Background:
    chart: CollarChart
    h: np.ndarray            # (Nx, Ny, d, d) frame components
    hinv: np.ndarray
    omega: np.ndarray        # (Nx, Ny, d, d, d), omega[a, i, k] = w^k_{ai}
    r4: np.ndarray           # (Nx, Ny, d, d, d, d), <R(e_i,e_j)e_k, e_l>
    ricci: np.ndarray        # (Nx, Ny, d, d) symmetrized Ricci
    e2: np.ndarray           # -(Ric + n h)
    kind: str                # "closed_form" | "numeric"

    @property
    def n(self):
        return self.chart.n

    def e4(self):
        """Curvature error R + R^cc of the background."""
        return self.r4 + rcc_pattern(self.h)

    def eta_measured(self):
        """sup node |R + R^cc|_h, the admissibility defect of the background."""
        if self.kind == "closed_form":
            return 0.0
        return float(np.max(tensor4_norm(self.e4(), self.hinv)))


def rcc_pattern(g):
    """Constant-curvature comparison tensor R^cc_{ijkl} = g_il g_jk - g_ik g_jl."""
    a = np.einsum("...il,...jk->...ijkl", g, g)
    b = np.einsum("...ik,...jl->...ijkl", g, g)
    return a - b


def tensor4_norm(t4, ginv):
    """Pointwise metric norm |T|_g of a (0,4) tensor field."""
    r = np.einsum("...ia,...ajkl->...ijkl", ginv, t4, optimize=True)
    r = np.einsum("...jb,...ibkl->...ijkl", ginv, r, optimize=True)
    r = np.einsum("...kc,...ijcl->...ijkl", ginv, r, optimize=True)
    r = np.einsum("...ld,...ijkd->...ijkl", ginv, r, optimize=True)
    return np.sqrt(np.einsum("...ijkl,...ijkl->...", t4, r, optimize=True))


def tensor2_norm(t2, ginv):
    """Pointwise metric norm |T|_g of a (0,2) tensor field."""
    r = np.einsum("...ik,...jl,...kl->...ij", ginv, ginv, t2, optimize=True)
    return np.sqrt(np.einsum("...ij,...ij->...", t2, r, optimize=True))


def closed_form_hyperbolic(chart):
    """Exact hyperbolic torus background; all arrays are grid constants."""
    if chart.mode != "torus":
        raise ConfigurationError(
            "closed-form flow backgrounds exist for torus collars only; "
            "ball charts are supported by the curvature diagnostics")
    d = chart.d
    shape = (chart.Nx, chart.Ny)
    h = np.broadcast_to(np.eye(d), shape + (d, d)).copy()
    hinv = h.copy()

    omega = np.zeros(shape + (d, d, d))
    for a in range(1, d):
        omega[..., a, 0, a] = -1.0   # nabla_{e_a} e_0 = -e_a
        omega[..., a, a, 0] = 1.0    # nabla_{e_a} e_b = delta_ab e_0

    eye = np.eye(d)
    r4c = -(np.einsum("il,jk->ijkl", eye, eye) - np.einsum("ik,jl->ijkl", eye, eye))
    r4 = np.broadcast_to(r4c, shape + (d, d, d, d)).copy()
    ricci = np.broadcast_to(-chart.n * eye, shape + (d, d)).copy()
    e2 = np.zeros(shape + (d, d))
    return Background(chart, h, hinv, omega, r4, ricci, e2, "closed_form")


def koszul_omega(hmat, chart, tangential=True):
    """Frame connection coefficients of a metric given by frame components.

    2 <nabla_{e_a} e_b, e_l> = e_a h_bl + e_b h_al - e_l h_ab
                               + c^m_{ab} h_ml - c^m_{al} h_mb - c^m_{bl} h_ma
    """
    d = chart.d
    dh = np.zeros(hmat.shape[:2] + (d, d, d))
    for a in (0, 1):
        dh[..., a, :, :] = frames.frame_d_scalar(hmat, chart, a, tangential)
    c = frames.structure_constants(d)
    k = dh + np.swapaxes(dh, 2, 3) - np.transpose(dh, (0, 1, 3, 4, 2))
    k += (np.einsum("abm,xyml->xyabl", c, hmat)
          - np.einsum("alm,xymb->xyabl", c, hmat)
          - np.einsum("blm,xyma->xyabl", c, hmat))
    hinv = np.linalg.inv(hmat)
    return 0.5 * np.einsum("xykl,xyabl->xyabk", hinv, k, optimize=True)


def frame_curvature(omega, hmat, chart, tangential=True):
    """Stored-convention curvature <R(e_a, e_b) e_k, e_l> from the connection.

    R(e_a,e_b) e_k = [e_a(w^m_{bk}) - e_b(w^m_{ak}) + w^m_{ap} w^p_{bk}
                      - w^m_{bp} w^p_{ak} - c^p_{ab} w^m_{pk}] e_m,
    lowered with h in the last slot.
    """
    d = chart.d
    dom = np.zeros(omega.shape[:2] + (d,) + omega.shape[2:])
    for a in (0, 1):
        dom[..., a, :, :, :] = frames.frame_d_scalar(omega, chart, a, tangential)
    c = frames.structure_constants(d)
    rup = (dom                                   # dom[a, b, k, m] = e_a w^m_{bk}
           - np.swapaxes(dom, 2, 3)
           + np.einsum("xyapm,xybkp->xyabkm", omega, omega, optimize=True)
           - np.einsum("xybpm,xyakp->xyabkm", omega, omega, optimize=True)
           - np.einsum("abp,xypkm->xyabkm", c, omega, optimize=True))
    return np.einsum("xyabkm,xyml->xyabkl", rup, hmat, optimize=True)


def ricci_from_r4(r4, hinv):
    """Symmetrized Ricci estimator Rc_pq = -h^{ab} R_{paqb}."""
    rc = -np.einsum("xyab,xypaqb->xypq", hinv, r4, optimize=True)
    return 0.5 * (rc + np.swapaxes(rc, -1, -2))


def from_metric(hmat, chart, tangential=True):
    """Numeric background from frame components (perturbed reference metric)."""
    hinv = np.linalg.inv(hmat)
    omega = koszul_omega(hmat, chart, tangential)
    r4 = frame_curvature(omega, hmat, chart, tangential)
    ricci = ricci_from_r4(r4, hinv)
    e2 = -(ricci + chart.n * hmat)
    return Background(chart, hmat.copy(), hinv, omega, r4, ricci, e2, "numeric")


def from_state(state):
    """Numeric background whose reference metric is the state's full g = h + v."""
    return from_metric(state.g_matrix(), state.chart)
