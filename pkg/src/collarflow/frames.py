"""Covariant derivatives of 2-tensors in the 0-frame {x dx, x dy^a} dual frame.

The frame fields are e_0 = x d/dx = -d/ds and e_a = x d/dy^a.  Their only
nonzero brackets are [e_0, e_a] = e_a, so the structure constants are grid
constants and second covariant derivatives close over the stencil algebra.
Fields depend on s (and y^1 in one_tangential mode); derivatives along the
suppressed directions vanish while their connection algebra is kept.
"""

import numpy as np

from . import stencils
from ._core import kernels


def structure_constants(d):
    """c[a, b, m] = c^m_{ab} with [e_a, e_b] = c^m_{ab} e_m."""
    c = np.zeros((d, d, d))
    for b in range(1, d):
        c[0, b, b] = 1.0
        c[b, 0, b] = -1.0
    return c


def frame_d_scalar(f, chart, direction, tangential=True):
    """e_a applied to a scalar-like array with leading axes (Nx, Ny)."""
    if direction == 0:
        return -stencils.ds(f, chart.ds)
    if direction == 1 and tangential and chart.Ny > 1:
        return chart.x_col.reshape((chart.Nx, 1) + (1,) * (f.ndim - 2)) \
            * stencils.dy(f, chart.dy)
    return np.zeros_like(f)


def frame_grad_scalar(f, chart, tangential=True):
    """All frame derivatives of a scalar field: shape (Nx, Ny, d)."""
    out = np.zeros(f.shape + (chart.d,))
    out[..., 0] = frame_d_scalar(f, chart, 0)
    if chart.Ny > 1 and tangential:
        out[..., 1] = frame_d_scalar(f, chart, 1)
    return out


def frame_hessian_scalar(f, chart, omega, tangential=True):
    """Second covariant derivative of a scalar: (Nx, Ny, d, d).

    Hess f(e_a, e_b) = e_a(e_b f) - w^c_{ab} e_c f, with the compact stencil
    on the diagonal second derivatives.
    """
    d = chart.d
    g1 = np.zeros(f.shape + (d,))
    for a in (0, 1):
        g1[..., a] = frame_d_scalar(f, chart, a, tangential)
    out = np.zeros(f.shape + (d, d))
    out[..., 0, 0] = stencils.ds2(f, chart.ds)
    if chart.Ny > 1 and tangential:
        x2 = chart.x_col ** 2
        out[..., 1, 1] = x2 * stencils.dy2(f, chart.dy)
        out[..., 0, 1] = frame_d_scalar(g1[..., 1], chart, 0)
        out[..., 1, 0] = frame_d_scalar(g1[..., 0], chart, 1, tangential)
    out -= np.einsum("xyabc,xyc->xyab", omega, g1, optimize=True)
    return out


def _flat(arr, chart):
    return arr.reshape((chart.Nx * chart.Ny,) + arr.shape[2:])


def _unflat(arr, chart):
    return arr.reshape((chart.Nx, chart.Ny) + arr.shape[1:])


def nabla1(t, chart, omega, tangential=True):
    """First covariant derivative of a symmetric 2-tensor.

    t : (Nx, Ny, d, d); omega : (Nx, Ny, d, d, d) with omega[a, i, k] = w^k_{ai}
    returns (Nx, Ny, d, d, d) indexed [a, i, j].
    """
    d = chart.d
    alg = _unflat(kernels.omega_algebra(_flat(omega, chart), _flat(t, chart)), chart)
    out = -alg
    out[..., 0, :, :] += frame_d_scalar(t, chart, 0)
    if chart.Ny > 1 and tangential:
        out[..., 1, :, :] += frame_d_scalar(t, chart, 1)
    return out


def nabla2(t, chart, omega, tangential=True, n1=None):
    """Second covariant derivative: (Nx, Ny, d, d, d, d) indexed [a, b, i, j].

    nabla2[a,b] = e_a(nabla1[b]) - w^c_{ab} nabla1[c]
                  - w^k_{ai} nabla1[b]_{kj} - w^k_{aj} nabla1[b]_{ik},
    with e_a(e_a t) realized by the compact second-difference stencils.
    """
    d = chart.d
    algT = _unflat(kernels.omega_algebra(_flat(omega, chart), _flat(t, chart)), chart)
    if n1 is None:
        n1 = -algT.copy()
        n1[..., 0, :, :] += frame_d_scalar(t, chart, 0)
        if chart.Ny > 1 and tangential:
            n1[..., 1, :, :] += frame_d_scalar(t, chart, 1)

    out = np.zeros(t.shape[:2] + (d, d, d, d))
    # stencil parts e_a(nabla1[b]) for a in {0, 1}; diagonal entries compact
    for a in (0, 1):
        if a == 1 and (chart.Ny == 1 or not tangential):
            continue
        for b in range(d):
            if a == b == 0:
                val = stencils.ds2(t, chart.ds) \
                    - frame_d_scalar(algT[..., 0, :, :], chart, 0)
            elif a == b == 1:
                x2 = chart.x_col[..., None, None] ** 2
                val = x2 * stencils.dy2(t, chart.dy) \
                    - frame_d_scalar(algT[..., 1, :, :], chart, 1, tangential)
            else:
                val = frame_d_scalar(n1[..., b, :, :], chart, a, tangential)
            out[..., a, b, :, :] = val
    # - w^c_{ab} nabla1[c]
    out -= np.einsum("xyabc,xycij->xyabij", omega, n1, optimize=True)
    # - connection action on the tensor slots of nabla1[b], direction a
    alg_pairs = np.einsum("xyaik,xybkj->xyabij", omega, n1, optimize=True)
    out -= alg_pairs + np.swapaxes(alg_pairs, -1, -2)
    return out


def laplacian(t, chart, hinv, omega, tangential=True):
    """Rough Laplacian h^{ab} (nabla^2 t)_{ab,ij}."""
    n2 = nabla2(t, chart, omega, tangential)
    return np.einsum("xyab,xyabij->xyij", hinv, n2, optimize=True)
