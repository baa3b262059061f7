"""Second-order finite-difference stencils on the collar grid.

All fields carry leading axes (Nx, Ny); trailing axes are tensor components.
The s-direction is a uniform non-periodic grid (centered interior stencils,
one-sided second-order stencils at the ends); y is periodic.

Reductions elsewhere rely on these operators being deterministic: output
entries are fixed linear combinations of inputs with no threading.
"""

import numpy as np


def ds(f, step):
    """First s-derivative along axis 0."""
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * step)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * step)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * step)
    return out


def ds2(f, step):
    """Second s-derivative along axis 0 (compact interior stencil)."""
    out = np.empty_like(f)
    h2 = step * step
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    return out


def dy(f, step):
    """First periodic y-derivative along axis 1."""
    if f.shape[1] == 1:
        return np.zeros_like(f)
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * step)


def dy2(f, step):
    """Second periodic y-derivative along axis 1."""
    if f.shape[1] == 1:
        return np.zeros_like(f)
    return (np.roll(f, -1, axis=1) - 2.0 * f + np.roll(f, 1, axis=1)) / (step * step)


def dy_order(f, step, order):
    """Repeated periodic first-derivative stencils (for b-derivatives)."""
    out = f
    for _ in range(order):
        out = dy(out, step)
    return out


def ds4(f, step):
    """Fourth-order-accurate first s-derivative (independent check stencil).

    Used only as an oracle against the second-order pipeline; falls back to
    second order on the four boundary rows.
    """
    out = ds(f, step)
    if f.shape[0] >= 5:
        out[2:-2] = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * step)
    return out
