"""Pure-numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature; ``_core`` selects one implementation at import time.  Inputs carry
a flattened node axis N first; tensor indices follow.
"""

import numpy as np

BACKEND = "python"


def gradient_bracket(ginv, ng):
    """Quadratic gradient terms of the flow right-hand side.

    ginv : (N, d, d) inverse metric per node
    ng   : (N, d, d, d) background-covariant derivative, ng[a, i, j] = D_a g_ij
    returns (N, d, d):
        1/2 g^{ab} g^{pq} ( D_i g_pa D_j g_qb + 2 D_a g_jp D_q g_ib
                            - 2 D_a g_jp D_b g_iq - 2 D_j g_pa D_b g_iq
                            - 2 D_i g_pa D_b g_jq )
    """
    t1 = np.einsum("nab,npq,nipa,njqb->nij", ginv, ginv, ng, ng, optimize=True)
    t2 = np.einsum("nab,npq,najp,nqib->nij", ginv, ginv, ng, ng, optimize=True)
    t3 = np.einsum("nab,npq,najp,nbiq->nij", ginv, ginv, ng, ng, optimize=True)
    t4 = np.einsum("nab,npq,njpa,nbiq->nij", ginv, ginv, ng, ng, optimize=True)
    t5 = np.einsum("nab,npq,nipa,nbjq->nij", ginv, ginv, ng, ng, optimize=True)
    return 0.5 * t1 + t2 - t3 - t4 - t5


def curvature_terms(ginv, g, hinv, r4):
    """Curvature contraction terms of the flow right-hand side.

    With the stored curvature convention (R(hyperbolic) = -R^cc) the terms
    enter with a plus sign:  + g^{ab} g_ip h^{pq} R_{jaqb} + (i <-> j).
    """
    c = np.einsum("nab,nip,npq,njaqb->nij", ginv, g, hinv, r4, optimize=True)
    return c + np.swapaxes(c, -1, -2)


def omega_algebra(omega, t):
    """Connection action on a symmetric 2-tensor, per frame direction.

    omega : (N, d, d, d) with omega[a, i, k] = w^k_{ai}
    t     : (N, d, d)
    returns (N, d, d, d): out[a, i, j] = w^k_{ai} t_kj + w^k_{aj} t_ik
    """
    first = np.einsum("naik,nkj->naij", omega, t, optimize=True)
    return first + np.swapaxes(first, -1, -2)


def omega_algebra_multi(omega, tmulti):
    """omega_algebra applied to a stack of tensors.

    tmulti : (N, m, d, d); returns (N, m, d, d, d) indexed [m, a, i, j]
    wait: returns (N, m, d, d, d) with out[b, a, i, j] = w^k_{ai} t[b]_kj + sym.
    """
    first = np.einsum("naik,nbkj->nbaij", omega, tmulti, optimize=True)
    return first + np.swapaxes(first, -1, -2)


def gamma_gamma(gam_low, gam_up):
    """Christoffel product part of the (0,4) curvature assembly.

    gam_low : (N, d, d, d) with gam_low[m, i, j] = Gamma_{m,ij} (lowered)
    gam_up  : (N, d, d, d) with gam_up[m, i, j] = Gamma^m_{ij}
    returns (N, d, d, d, d):
        out[i,j,k,l] = Gamma_{m,jl} Gamma^m_{ik} - Gamma_{m,il} Gamma^m_{jk}
    """
    a = np.einsum("nmjl,nmik->nijkl", gam_low, gam_up, optimize=True)
    b = np.einsum("nmil,nmjk->nijkl", gam_low, gam_up, optimize=True)
    return a - b


def pair_quotient_max(vals, xs, ys, a, y_period):
    """Max anisotropic Holder quotient over all node pairs in one ball.

    vals, xs, ys : (m,) arrays of field values and background coordinates
    a            : Holder exponent
    y_period     : period of the y coordinate (0 disables periodic wrap)

    quotient = (x + x')^a |u - u'| / (|x - x'|^a + |y - y'|^a)
    """
    m = vals.shape[0]
    if m < 2:
        return 0.0
    dv = np.abs(vals[:, None] - vals[None, :])
    dx = np.abs(xs[:, None] - xs[None, :])
    dyy = np.abs(ys[:, None] - ys[None, :])
    if y_period > 0.0:
        dyy = np.minimum(dyy, y_period - dyy)
    wx = (xs[:, None] + xs[None, :]) ** a
    denom = dx ** a + dyy ** a
    iu = np.triu_indices(m, k=1)
    q = wx[iu] * dv[iu] / denom[iu]
    return float(np.max(q)) if q.size else 0.0


def time_pair_quotient_max(vals, times, a):
    """Max time-Holder quotient |u(t) - u(t')| / |t - t'|^(a/2) per node.

    vals : (nt, m) sample values over times at m nodes; times : (nt,)
    """
    nt = times.shape[0]
    if nt < 2:
        return 0.0
    best = 0.0
    for p in range(nt - 1):
        dt = np.abs(times[p + 1:] - times[p]) ** (0.5 * a)
        dv = np.abs(vals[p + 1:] - vals[p][None, :])
        q = dv / dt[:, None]
        if q.size:
            best = max(best, float(np.max(q)))
    return best
