"""Quadrature weights and norms against the collar volume measure."""

import numpy as np

from .background import tensor2_norm
from .fields import background_frame


def dvol_weights(chart, hmat=None):
    """Trapezoidal dvol weights per grid node, shape (Nx, Ny).

    dvol = sqrt(det h_coords) ds dy = e^{n s} sqrt(det h_frame) ds dy, times
    the volume (2 pi)^(n-1) of the suppressed flat directions (or (2 pi)^n
    when no tangential direction is resolved).
    """
    if hmat is None:
        hmat = background_frame(chart)
    dens = np.exp(chart.n * chart.s)[:, None] * np.sqrt(np.linalg.det(hmat))
    w = dens * chart.ds
    w[0] *= 0.5
    w[-1] *= 0.5
    if chart.Ny > 1:
        return w * chart.dy * (2.0 * np.pi) ** (chart.n - 1)
    return w * (2.0 * np.pi) ** chart.n


def dvol_weights_for(chart, hmat):
    return dvol_weights(chart, hmat)


def collar_volume(chart, hmat=None):
    return float(np.sum(dvol_weights(chart, hmat)))


def l2_energy(vmat, chart, hinv, hmat=None):
    """F = integral of |Z|^2_h dvol_h over the collar."""
    z2 = tensor2_norm(vmat, hinv) ** 2
    return float(np.sum(z2 * dvol_weights(chart, hmat)))


def sup_h_norm(vmat, hinv):
    """sup-node |v|_h."""
    return float(np.max(tensor2_norm(vmat, hinv)))


def weighted_sup(field, chart, nu=1.0):
    """sup x^-nu |u| over nodes; `field` is any (Nx, Ny, ...)-shaped array."""
    w = np.exp(nu * chart.s)[:, None]
    extra = field.ndim - 2
    w = w.reshape(w.shape + (1,) * extra)
    return float(np.max(np.abs(field) * w))


def relative_closeness(vmat, hmat):
    """sup-node operator norm of v measured against h."""
    L = np.linalg.cholesky(hmat)
    Linv = np.linalg.inv(L)
    rel = Linv @ vmat @ np.swapaxes(Linv, -1, -2)
    return float(np.max(np.abs(np.linalg.eigvalsh(rel))))
