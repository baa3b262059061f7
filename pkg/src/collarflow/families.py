"""Initial perturbation families and perturbed reference metrics.

All fields vanish at both s-ends (compatible with the Dirichlet closure) and
carry an explicit factor x, so they sit in the x-weighted class the flow
analysis works in.  Randomness comes from one seeded PCG64 generator.
"""

import numpy as np

from .background import from_metric
from .fields import MetricState, ZeroFrameTensor, background_frame
from .errors import ConfigurationError


def conformal(chart, w0):
    """Pure-trace constant perturbation: v = w0 * h, i.e. g = (1 + w0) h."""
    v = ZeroFrameTensor.zero(chart)
    h = background_frame(chart)
    v.components["xx"] = w0 * h[..., 0, 0]
    if chart.anisotropy == "isotropic":
        v.components["tang"] = w0 * h[..., 1, 1]
    else:
        v.components["xy"] = w0 * h[..., 0, 1]
        v.components["yy"] = w0 * h[..., 1, 1]
        v.components["zz"] = w0 * h[..., 2, 2]
    return MetricState(chart, v, 0.0)


def _bump_profile(chart, center, width):
    s = chart.s[:, None]
    prof = np.exp(-0.5 * ((s - center) / width) ** 2)
    ramp = np.sin(np.pi * (s - chart.s0) / (chart.s1 - chart.s0)) ** 2
    return prof * ramp * np.exp(-(s - chart.s0))   # explicit O(x) decay


def bump(chart, amplitude, center, width, component="tang"):
    """Localized pure-profile perturbation of one ansatz component."""
    v = ZeroFrameTensor.zero(chart)
    names = v.components.keys()
    if component not in names:
        raise ConfigurationError(
            f"bump component must be one of {sorted(names)}, got {component!r}")
    prof = amplitude * _bump_profile(chart, center, width)
    v.components[component] = prof * np.ones((1, chart.Ny))
    return MetricState(chart, v, 0.0)


def random_smooth(chart, amplitude, seed):
    """Smooth random perturbation, sup-node |v|_h normalized to `amplitude`.

    Low Fourier modes in s (Dirichlet-compatible) and y, weighted by x.
    """
    rng = np.random.default_rng(seed)
    length = chart.s1 - chart.s0
    s = chart.s[:, None]
    y = chart.y[None, :]
    xw = np.exp(-(s - chart.s0))

    def profile():
        out = np.zeros((chart.Nx, chart.Ny))
        for k in range(1, 4):
            smode = np.sin(k * np.pi * (s - chart.s0) / length)
            if chart.Ny > 1:
                for m in range(3):
                    c1, c2 = rng.standard_normal(2)
                    ymode = c1 * np.cos(m * y) + c2 * np.sin(m * y)
                    out += rng.standard_normal() * smode * ymode
            else:
                out += rng.standard_normal() * smode
        return out * xw

    v = ZeroFrameTensor.zero(chart)
    for name in v.components:
        v.components[name] = profile()
    state = MetricState(chart, v, 0.0)
    sup = _sup_h(state)
    if sup > 0:
        scale = amplitude / sup
        for name in v.components:
            v.components[name] *= scale
    return state


def _sup_h(state):
    from .background import tensor2_norm
    hinv = np.linalg.inv(background_frame(state.chart))
    return float(np.max(tensor2_norm(state.v.matrix(), hinv)))


def perturbed_reference(chart, beta, y_amplitude=0.0):
    """Perturbed reference metric hhat(x) = (1 + beta x (+ wiggle)) * identity.

    Used as a numeric, non-Einstein background (curvature source E != 0).
    Returns the Background built from stencils.
    """
    h = background_frame(chart).copy()
    s = chart.s[:, None]
    fac = 1.0 + beta * np.exp(-s)
    if y_amplitude != 0.0 and chart.Ny > 1:
        fac = fac + y_amplitude * np.exp(-s) * np.sin(chart.y)[None, :]
    for a in range(1, chart.d):
        h[..., a, a] *= fac
    return from_metric(h, chart)


def make_initial_state(chart, family, **kw):
    if family == "conformal":
        return conformal(chart, kw.get("w0", 0.2))
    if family == "bump":
        return bump(chart, kw.get("amplitude", 0.01), kw.get("center", 2.0),
                    kw.get("width", 0.5))
    if family == "random_smooth":
        return random_smooth(chart, kw.get("amplitude", 0.01),
                             kw.get("seed", 12345))
    if family == "none":
        return MetricState(chart, ZeroFrameTensor.zero(chart), 0.0)
    raise ConfigurationError(f"unknown perturbation family {family!r}")
