"""Normalized Ricci-DeTurck flow: right-hand side, conditioning, time stepping.

The right-hand side is evaluated in the quasilinear form (verified exactly
against the definition -2n g - 2 Rc(g) + L_W g):

    d/dt g_ij = g^{ab} D_a D_b g_ij - 2n g_ij
                + [g^{ab} g_ip h^{pq} R_{jaqb} + (i <-> j)]        (stored R)
                + 1/2 g^{ab} g^{pq} ( D_i g_pa D_j g_qb + 2 D_a g_jp D_q g_ib
                  - 2 D_a g_jp D_b g_iq - 2 D_j g_pa D_b g_iq
                  - 2 D_i g_pa D_b g_jq ),

with D the background covariant derivative and R the background curvature in
the convention that makes R + R^cc vanish on hyperbolic space.  Conditioning
splits this as  Lv + Qv + 2 E2  with L the Lichnerowicz operator of the
background, E2 = -(Ric + n h), and Q everything at least quadratic (plus a
v * E2 cross term that vanishes on Einstein backgrounds); the split is exact
node-wise because both sides are assembled from the same stencil arrays.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import frames, measures
from ._core import kernels
from .background import Background, closed_form_hyperbolic, tensor2_norm
from .chart import CollarChart
from .errors import ConfigurationError, LinearSolveError, SingularMetricError
from .fields import MetricState, ZeroFrameTensor, component_names

SCHEMES = ("explicit_rk2", "imex_backward_euler")


# ---------------------------------------------------------------------------
# right-hand side and conditioning


def _flat(arr, chart):
    return arr.reshape((chart.Nx * chart.Ny,) + arr.shape[2:])


def _unflat(arr, chart):
    return arr.reshape((chart.Nx, chart.Ny) + arr.shape[1:])


def _as_vmat(v):
    return v.matrix() if isinstance(v, ZeroFrameTensor) else v


def rdtf_rhs(v, bg: Background, tangential=True):
    """Full normalized Ricci-DeTurck right-hand side; (Nx, Ny, d, d)."""
    chart = bg.chart
    vmat = _as_vmat(v)
    g = bg.h + vmat
    ginv = np.linalg.inv(g)
    ng = frames.nabla1(g, chart, bg.omega, tangential)
    n2 = frames.nabla2(g, chart, bg.omega, tangential, n1=ng)
    second = np.einsum("xyab,xyabij->xyij", ginv, n2, optimize=True)

    gf, ginvf = _flat(g, chart), _flat(ginv, chart)
    curv = _unflat(kernels.curvature_terms(
        ginvf, gf, _flat(bg.hinv, chart), _flat(bg.r4, chart)), chart)
    bracket = _unflat(kernels.gradient_bracket(
        ginvf, _flat(ng, chart)), chart)
    return second - 2.0 * chart.n * g + curv + bracket


def lichnerowicz_apply(v, bg: Background, tangential=True):
    """Lichnerowicz operator of the background:

    Lv = Dh^a Dh_a v_ij + v_i^p Rc_pj + v_j^p Rc_pi
         + 2 v^{ab} R_{aijb} + 2n v_ij   (stored curvature convention).
    """
    chart = bg.chart
    vmat = _as_vmat(v)
    lap = frames.laplacian(vmat, chart, bg.hinv, bg.omega, tangential)
    vmix = np.einsum("xyik,xykp->xyip", vmat, bg.hinv, optimize=True)
    ric = np.einsum("xyip,xypj->xyij", vmix, bg.ricci, optimize=True)
    vup = np.einsum("xyam,xymn,xynb->xyab", bg.hinv, vmat, bg.hinv, optimize=True)
    act = 2.0 * np.einsum("xyab,xyaijb->xyij", vup, bg.r4, optimize=True)
    return (lap + ric + np.swapaxes(ric, -1, -2) + act
            + 2.0 * chart.n * vmat)


@dataclass
class Decomposition:
    """Named pieces of the conditioned equation at one state."""

    rhs: np.ndarray
    lich: np.ndarray       # L v
    quad: np.ndarray       # Q v  (exact: rhs - Lv - 2 E2)
    source2: np.ndarray    # E2 = -(Ric + n h)
    t1: np.ndarray         # (g^{ab} - h^{ab}) D_a D_b g_ij
    t2: np.ndarray         # 2n g - curvature terms (enters rhs as -T2)
    t3: np.ndarray         # quadratic gradient bracket
    q1: np.ndarray         # explicit quadratic pieces; q1 = t1
    q2: np.ndarray
    q3: np.ndarray
    qe: np.ndarray         # 2 (v_i^p E2_pj + v_j^p E2_pi), zero when Einstein

    def reassembled(self):
        return self.lich + self.quad + 2.0 * self.source2

    def explicit_reassembled(self):
        """Lv + (Q1 + Q2 + Q3 + QE) + 2 E2 from the independent piece formulas."""
        return self.lich + self.q1 + self.q2 + self.q3 + self.qe \
            + 2.0 * self.source2

    def _scale(self):
        return max(np.max(np.abs(self.rhs)), np.max(np.abs(self.lich)),
                   np.max(np.abs(self.quad)), 1e-300)

    def identity_residual(self):
        """Relative defect of rhs = Lv + Qv + 2 E2 (algebraic, ~1e-16)."""
        return float(np.max(np.abs(self.rhs - self.reassembled())) / self._scale())

    def explicit_identity_residual(self):
        """Same identity, with Q assembled from the explicit piece formulas."""
        return float(np.max(np.abs(self.rhs - self.explicit_reassembled()))
                     / self._scale())


def condition_decompose(v, bg: Background) -> Decomposition:
    """Split the right-hand side into Lv + Qv + 2 E2 plus named sub-terms."""
    chart = bg.chart
    vmat = _as_vmat(v)
    g = bg.h + vmat
    ginv = np.linalg.inv(g)
    ng = frames.nabla1(g, chart, bg.omega)
    n2 = frames.nabla2(g, chart, bg.omega, n1=ng)

    gf, ginvf = _flat(g, chart), _flat(ginv, chart)
    curv = _unflat(kernels.curvature_terms(
        ginvf, gf, _flat(bg.hinv, chart), _flat(bg.r4, chart)), chart)
    bracket = _unflat(kernels.gradient_bracket(ginvf, _flat(ng, chart)), chart)
    second = np.einsum("xyab,xyabij->xyij", ginv, n2, optimize=True)
    rhs = second - 2.0 * chart.n * g + curv + bracket

    lich = lichnerowicz_apply(vmat, bg)
    quad = rhs - lich - 2.0 * bg.e2

    t1 = np.einsum("xyab,xyabij->xyij", ginv - bg.hinv, n2, optimize=True)
    t2 = 2.0 * chart.n * g - curv
    vmix = np.einsum("xyik,xykp->xyip", vmat, bg.hinv, optimize=True)
    vup = np.einsum("xyam,xymn,xynb->xyab", bg.hinv, vmat, bg.hinv, optimize=True)
    w2 = np.einsum("xybl,xyam,xypq,xylp,xymq->xyab",
                   ginv, bg.hinv, bg.hinv, vmat, vmat, optimize=True)
    eye = np.eye(chart.d)
    dmix = eye + vmix
    q2_one = np.einsum("xyab,xyiq,xyjaqb->xyij", -vup, vmix, bg.r4, optimize=True) \
        + np.einsum("xyab,xyiq,xyjaqb->xyij", w2, dmix, bg.r4, optimize=True)
    q2 = q2_one + np.swapaxes(q2_one, -1, -2)
    qe = np.einsum("xyip,xypj->xyij", vmix, bg.e2, optimize=True)
    qe = 2.0 * (qe + np.swapaxes(qe, -1, -2))
    return Decomposition(rhs=rhs, lich=lich, quad=quad, source2=bg.e2,
                         t1=t1, t2=t2, t3=bracket, q1=t1, q2=q2, q3=bracket,
                         qe=qe)


def deturck_vector_field(v, bg: Background):
    """W^k = g^{pq} (Gamma(g)^k_pq - Gamma(h)^k_pq), frame components."""
    chart = bg.chart
    vmat = _as_vmat(v)
    g = bg.h + vmat
    ginv = np.linalg.inv(g)
    ng = frames.nabla1(g, chart, bg.omega)
    # difference tensor D^k_pq = 1/2 g^{kl} (D_p g_ql + D_q g_pl - D_l g_pq)
    dlow = 0.5 * (np.transpose(ng, (0, 1, 4, 2, 3))      # [l, p, q] <- D_p g_ql
                  + np.transpose(ng, (0, 1, 4, 3, 2))
                  - ng)
    dup = np.einsum("xykl,xylpq->xykpq", ginv, dlow, optimize=True)
    return np.einsum("xypq,xykpq->xyk", ginv, dup, optimize=True)


def deturck_oracle(v, bg: Background):
    """Independent route: frame Koszul connections of g and h, contracted."""
    from .background import koszul_omega
    chart = bg.chart
    g = bg.h + _as_vmat(v)
    gam_g = koszul_omega(g, chart)
    return np.einsum("xypq,xypqk->xyk", np.linalg.inv(g),
                     gam_g - bg.omega, optimize=True)


# ---------------------------------------------------------------------------
# time stepping


@dataclass
class FlowConfig:
    dt: float
    T: float
    scheme: str = "imex_backward_euler"
    epsilon_close: float = 0.25
    sample_every: int = 0          # 0 = choose automatically (~120 samples)
    cfl_constant: float = 0.2

    def validate(self, chart: CollarChart):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(
                f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not (self.T >= self.dt):
            raise ConfigurationError("final time T must be at least one step")
        limit = self.cfl_limit(chart)
        if self.dt > limit:
            raise ConfigurationError(
                f"dt={self.dt:g} violates the stability bound {limit:g} "
                f"for scheme {self.scheme} on this chart")

    def cfl_limit(self, chart: CollarChart):
        """Enforced step bound: the explicit scheme sees the full diffusion
        stiffness; the IMEX scheme only the explicit tangential part."""
        tang = np.inf
        if chart.Ny > 1:
            tang = chart.dy ** 2 / chart.x_max ** 2
        if self.scheme == "explicit_rk2":
            return self.cfl_constant * min(chart.ds ** 2, tang)
        return self.cfl_constant * tang


@dataclass
class FlowTrace:
    chart: CollarChart
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    sup_z: list = field(default_factory=list)
    wnorm: list = field(default_factory=list)
    boundary_sup: list = field(default_factory=list)
    closeness: list = field(default_factory=list)
    samples: list = field(default_factory=list)      # ZeroFrameTensor copies
    flags: dict = field(default_factory=dict)
    failure: tuple = None

    def sample_matrices(self):
        return [t.matrix() for t in self.samples]

    def finite(self):
        return all(np.isfinite(self.times)) and all(np.isfinite(self.energy)) \
            and all(np.isfinite(self.sup_z))


class ImplicitSolver:
    """Frozen-background linear operator, assembled once by strided probing.

    The implicit part is the Lichnerowicz operator without its tangential
    stencil terms, so it never couples y-columns and the solve is banded
    along s (block size = number of ansatz components).
    """

    _HALF = 5      # stencil influence half-width (one-sided edge stencils)

    def __init__(self, bg: Background):
        self.bg = bg
        self.chart = bg.chart
        self.ncomp = len(component_names(bg.chart))
        self.ndof = bg.chart.Nx * bg.chart.Ny * self.ncomp
        self.matrix = self._assemble()
        self._lu = {}

    def _apply(self, comp):
        chart = self.chart
        v = ZeroFrameTensor(chart, {
            name: comp[..., i] for i, name in enumerate(component_names(chart))})
        out = lichnerowicz_apply(v.matrix(), self.bg, tangential=False)
        return np.stack([ZeroFrameTensor._extract(chart, out)[name]
                         for name in component_names(chart)], axis=-1)

    def _assemble(self):
        chart, nc = self.chart, self.ncomp
        stride = 2 * self._HALF + 1
        rows, cols, vals = [], [], []
        yidx = np.arange(chart.Ny)
        for r in range(stride):
            for c0 in range(nc):
                comp = np.zeros((chart.Nx, chart.Ny, nc))
                comp[r::stride, :, c0] = 1.0
                resp = self._apply(comp)
                for i0 in range(r, chart.Nx, stride):
                    lo = max(0, i0 - self._HALF)
                    hi = min(chart.Nx, i0 + self._HALF + 1)
                    for i in range(lo, hi):
                        for c in range(nc):
                            col = (i0 * chart.Ny + yidx) * nc + c0
                            row = (i * chart.Ny + yidx) * nc + c
                            v = resp[i, :, c]
                            nz = v != 0.0
                            rows.append(row[nz])
                            cols.append(col[nz])
                            vals.append(v[nz])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.ndof, self.ndof))

    def apply(self, vec):
        return self.matrix @ vec

    def _dirichlet_mask(self):
        m = np.ones((self.chart.Nx, self.chart.Ny, self.ncomp))
        m[0] = 0.0
        m[-1] = 0.0
        return m.ravel()

    def factor(self, dt):
        key = float(dt)
        if key not in self._lu:
            a = (sp.identity(self.ndof, format="csr") - dt * self.matrix).tolil()
            mask = self._dirichlet_mask()
            for idx in np.nonzero(mask == 0.0)[0]:
                a.rows[idx] = [idx]
                a.data[idx] = [1.0]
            try:
                self._lu[key] = spla.splu(a.tocsc())
            except RuntimeError as exc:
                raise LinearSolveError(f"implicit factorization failed: {exc}")
        return self._lu[key]

    def solve(self, dt, rhs_vec):
        rhs_vec = rhs_vec * self._dirichlet_mask()
        try:
            out = self.factor(dt).solve(rhs_vec)
        except RuntimeError as exc:
            raise LinearSolveError(f"implicit solve failed: {exc}")
        if not np.all(np.isfinite(out)):
            raise LinearSolveError("implicit solve produced non-finite values")
        return out


def _pack(v: ZeroFrameTensor):
    return v.pack()


def _unpack(chart, vec):
    return ZeroFrameTensor.unpack(chart, vec)


def _project(chart, mat):
    return np.stack([ZeroFrameTensor._extract(chart, mat)[name]
                     for name in component_names(chart)], axis=-1).ravel()


def _zero_ends(chart, vec, ncomp):
    arr = vec.reshape(chart.Nx, chart.Ny, ncomp)
    arr[0] = 0.0
    arr[-1] = 0.0
    return arr.ravel()


def _check_positive(v: ZeroFrameTensor, bg: Background, t):
    g = bg.h + v.matrix()
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        eigs = np.linalg.eigvalsh(g)
        bad = np.argwhere(eigs[..., 0] <= 0.0)
        i, j = bad[0]
        chart = bg.chart
        raise SingularMetricError(
            f"positivity lost after step at t={t:.6g}, node s={chart.s[i]:.6f} "
            f"(x={chart.x[i]:.6e}), y={chart.y[j]:.6f}",
            node=(int(i), int(j))) from None


def step(state: MetricState, cfg: FlowConfig, bg: Background = None,
         solver: ImplicitSolver = None) -> MetricState:
    """One time step of the conditioned flow."""
    bg = bg or closed_form_hyperbolic(state.chart)
    cfg.validate(state.chart)
    new_v = _step_tensor(state.v, cfg, bg, solver)
    _check_positive(new_v, bg, state.t + cfg.dt)
    return MetricState(state.chart, new_v, state.t + cfg.dt)


def _step_tensor(v: ZeroFrameTensor, cfg: FlowConfig, bg: Background,
                 solver: ImplicitSolver = None) -> ZeroFrameTensor:
    chart = bg.chart
    ncomp = len(component_names(chart))
    if cfg.scheme == "explicit_rk2":
        k1 = _project(chart, rdtf_rhs(v, bg))
        v1 = _unpack(chart, _zero_ends(chart, v.pack() + cfg.dt * k1, ncomp))
        k2 = _project(chart, rdtf_rhs(v1, bg))
        out = v.pack() + 0.5 * cfg.dt * (k1 + k2)
        return _unpack(chart, _zero_ends(chart, out, ncomp))
    if solver is None:
        solver = ImplicitSolver(bg)
    vec = v.pack()
    expl = _project(chart, rdtf_rhs(v, bg)) - solver.apply(vec)
    return _unpack(chart, solver.solve(cfg.dt, vec + cfg.dt * expl))


def run_flow(state0: MetricState, cfg: FlowConfig,
             bg: Background = None) -> FlowTrace:
    """Advance to T (or first failure), sampling diagnostics on the way."""
    chart = state0.chart
    bg = bg or closed_form_hyperbolic(chart)
    cfg.validate(chart)
    state0.check_positive()

    nsteps = int(round(cfg.T / cfg.dt))
    if abs(nsteps * cfg.dt - cfg.T) > 1e-9 * max(1.0, cfg.T):
        raise ConfigurationError(
            f"T={cfg.T} is not an integer number of steps of dt={cfg.dt}")
    every = cfg.sample_every or max(1, nsteps // 120)
    solver = ImplicitSolver(bg) if cfg.scheme == "imex_backward_euler" else None

    trace = FlowTrace(chart)
    weights = measures.dvol_weights_for(chart, bg.h)
    xw = np.exp(chart.s)[:, None]

    def record(v, t):
        vmat = v.matrix()
        znorm = tensor2_norm(vmat, bg.hinv)
        trace.times.append(t)
        trace.energy.append(float(np.sum(znorm ** 2 * weights)))
        trace.sup_z.append(float(np.max(znorm)))
        trace.wnorm.append(float(np.max(znorm * xw)))
        trace.boundary_sup.append(float(np.max((znorm * xw)[-3:])))
        trace.closeness.append(measures.relative_closeness(vmat, bg.h))
        trace.samples.append(v.copy())

    v, t = state0.v, state0.t
    record(v, t)
    try:
        for k in range(1, nsteps + 1):
            v = _step_tensor(v, cfg, bg, solver)
            t = state0.t + k * cfg.dt
            if not v.is_finite():
                raise LinearSolveError("flow produced non-finite components")
            _check_positive(v, bg, t)
            if k % every == 0 or k == nsteps:
                record(v, t)
    except (SingularMetricError, LinearSolveError) as exc:
        trace.failure = (t, str(exc))
        trace.flags["failed"] = True
        exc.trace = trace
        raise
    _finalize_flags(trace, cfg)
    return trace


def _finalize_flags(trace: FlowTrace, cfg: FlowConfig):
    f = np.asarray(trace.energy)
    t = np.asarray(trace.times)
    post = f[t > t[0] + 10 * cfg.dt]
    trace.flags["monotone_decay"] = bool(
        post.size < 2 or np.all(np.diff(post) <= 1e-12 * max(post[0], 1e-300)))
    trace.flags["closeness_exceeded"] = bool(
        np.max(trace.closeness) > cfg.epsilon_close)
    if trace.boundary_sup[0] > 0:
        ratio = max(trace.boundary_sup) / trace.boundary_sup[0]
        trace.flags["boundary_ratio"] = float(ratio)


# ---------------------------------------------------------------------------
# normalized <-> unnormalized time


@dataclass
class UnnormalizedTrace:
    """Samples of the unnormalized Ricci flow obtained by time rescaling:

    g(tau) = (1 + 2n tau) gN(log(1 + 2n tau) / (2n)).
    """

    n: int
    tau: np.ndarray
    scale: np.ndarray
    normalized_times: np.ndarray
    samples: list                      # ZeroFrameTensor (normalized v)

    def g_matrices(self, bg: Background):
        return [s * (bg.h + v.matrix())
                for s, v in zip(self.scale, self.samples)]


def unnormalize_time(trace: FlowTrace, n: int) -> UnnormalizedTrace:
    t = np.asarray(trace.times)
    tau = (np.exp(2.0 * n * t) - 1.0) / (2.0 * n)
    return UnnormalizedTrace(n=n, tau=tau, scale=1.0 + 2.0 * n * tau,
                             normalized_times=t,
                             samples=[s.copy() for s in trace.samples])


def normalize_time(untrace: UnnormalizedTrace):
    """Inverse map; returns the normalized sample times."""
    return np.log(1.0 + 2.0 * untrace.n * untrace.tau) / (2.0 * untrace.n)
