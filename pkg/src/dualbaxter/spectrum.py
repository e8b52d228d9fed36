"""Solutions of the pair of Baxter equations

    eps t(z) Q(zeta) = Q(zeta + i gamma) + Q(zeta - i gamma),     z = e^(2 zeta)
    eps T(Z) Q(zeta) = Q(zeta + i pi)    + Q(zeta - i pi),        Z = e^(2 pi zeta / gamma)

with eps = (-1)^(g+1).

Two exact local solutions are available for any traces:

* towards -inf, Q = A(z) B(Z) with power series A, B (Q -> 1);
* towards +inf, Q+ = G(zeta) A+(1/z) B+(1/Z) with G = exp(beta zeta + i kappa zeta^2),
  beta = -(g+1)(1 + pi/gamma), kappa = (g+1)/gamma, and its mirror Q-.

Both series are lacunary-like (small divisors sin(m gamma)) and stop converging
on vertical lines, leaving a gap around Re zeta = 0.  An eigenvalue is a choice
of traces for which the left solution continues across the gap into a real
combination c Q+ + conj(c) Q-.  :func:`solve_spectrum` searches for such
traces by least-squares matching through a polynomial bridge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .dilog import GammaContext
from .errors import ContractError, DegeneracyError, DivergedError, RangeError
from .polyalg import TraceData

__all__ = [
    "LatticeQ",
    "lattice_extend",
    "SeriesBranches",
    "QFunction",
    "SpectralPoint",
    "ResidualReport",
    "SolverOptions",
    "residual_report",
    "solve_spectrum",
    "build_point",
    "default_grid",
    "wkb_zero_seeds",
    "q_eval",
    "duality_residual",
]


# ---------------------------------------------------------------------------
# lattice recursion (identity-testing tool)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LatticeQ:
    """Values Q(zeta0 + i step n), n = 0..len-1, produced by the three-term recursion."""

    zeta0: complex
    step: float
    values: np.ndarray
    trace: TraceData
    rate: float = 2.0       # x = exp(rate * zeta): 2 for z, 2 pi / gamma for Z

    @property
    def points(self):
        return self.zeta0 + 1j * self.step * np.arange(len(self.values))

    def recursion_residual(self):
        Q = self.values
        x = np.exp(self.rate * self.points[1:-1])
        lhs = self.trace.sign * self.trace(x) * Q[1:-1]
        rhs = Q[2:] + Q[:-2]
        scale = np.abs(lhs) + np.abs(rhs) + 1e-300
        return float(np.max(np.abs(lhs - rhs) / scale))


def lattice_extend(seed0, seed1, zeta0, n, t: TraceData, ctx: GammaContext, step: str = "gamma") -> LatticeQ:
    """Q_(m+1) = eps t(x_m) Q_m - Q_(m-1) along zeta0 + i*step*m."""
    if n < 2:
        raise ContractError("need n >= 2")
    if step == "gamma":
        h, rate = ctx.gamma, 2.0
    elif step == "pi":
        h, rate = math.pi, 2 * math.pi / ctx.gamma
    else:
        raise ContractError("step must be 'gamma' or 'pi'")
    eps = t.sign
    vals = np.empty(n + 1, dtype=complex)
    vals[0], vals[1] = seed0, seed1
    for m in range(1, n):
        x = np.exp(rate * (zeta0 + 1j * h * m))
        with np.errstate(over="ignore", invalid="ignore"):
            vals[m + 1] = eps * t(x) * vals[m] - vals[m - 1]
        if not np.isfinite(vals[m + 1]) or abs(vals[m + 1]) > 1e300:
            raise RangeError(f"lattice value overflows at n={m + 1}", last_valid=m)
    return LatticeQ(complex(zeta0), h, vals, t, rate)


# ---------------------------------------------------------------------------
# local series solutions
# ---------------------------------------------------------------------------
def _largest_root(t: TraceData):
    return float(np.max(np.abs(np.roots(list(reversed(t.ascending()))))))


def _left_series(t: TraceData, qq: complex, M: int, rho: float):
    """A(x) = sum a_m (x/rho)^m solving A(qq^2 x) + A(qq^-2 x) = eps t(x) A(x), A(0)=1."""
    g, eps = t.genus, t.sign
    co = (1.0,) + t.coefficients          # co[j] multiplies x^(g+1-j)
    a = np.zeros(M, dtype=complex)
    a[0] = 1.0
    for m in range(1, M):
        s = 0
        for j in range(g + 1):
            idx = m - (g + 1) + j
            if idx >= 0:
                s += co[j] * rho ** (g + 1 - j) * a[idx]
        a[m] = eps * s / (qq ** (2 * m) + qq ** (-2 * m) - 2)
    return a


def _right_series(t: TraceData, qq: complex, M: int, rho: float):
    """Coefficients of A+(w) in w/rho, w = 1/x, for the +inf solution."""
    g = t.genus
    co = (1.0,) + t.coefficients
    d = np.zeros(M, dtype=complex)
    d[0] = 1.0
    for m in range(1, M):
        s = 0
        for j in range(1, g + 2):
            if m - j >= 0:
                s += co[j] * rho ** j * d[m - j]
        k = m - 2 * (g + 1)
        if k >= 0:
            s -= qq ** (-2 * (g + 1)) * qq ** (-2 * k) * rho ** (2 * (g + 1)) * d[k]
        d[m] = s / (qq ** (2 * m) - 1)
    return d


def _radius(c):
    m = np.arange(len(c))
    sl = slice(len(c) // 2, None)
    mag = np.abs(c[sl])
    with np.errstate(divide="ignore"):
        r = np.where(mag > 0, mag ** (-1.0 / m[sl]), np.inf)
    return float(np.min(r))


class SeriesBranches:
    """Exact local solutions at both ends for fixed real traces (t, T)."""

    def __init__(self, ctx: GammaContext, t: TraceData, T: TraceData, terms: int = 400, safety: float = 0.8):
        if t.genus != T.genus:
            raise ContractError("t and T must have the same genus")
        if not (t.is_real() and T.is_real()):
            raise ContractError("series branches are implemented for real traces")
        self.ctx, self.t, self.T = ctx, t, T
        g = self.g = t.genus
        gam = ctx.gamma
        q, qd = ctx.q, ctx.q_dual
        self.beta = -(g + 1) * (1 + math.pi / gam)
        self.kappa = (g + 1) / gam
        self.zrate = 2.0
        self.Zrate = 2 * math.pi / gam
        ra = 1.0 / _largest_root(t)
        rb = 1.0 / _largest_root(T)
        self._sa = (ra, _left_series(t, q, terms, ra))
        self._sb = (rb, _left_series(T, qd, terms, rb))
        self._da = (ra, _right_series(t, q, terms, ra))
        self._db = (rb, _right_series(T, qd, terms, rb))
        self.radius = {
            "A": ra * _radius(self._sa[1]), "B": rb * _radius(self._sb[1]),
            "A+": ra * _radius(self._da[1]), "B+": rb * _radius(self._db[1]),
        }
        s = safety
        ln = math.log
        # left solution valid for Re zeta < x_left, right one for Re zeta > x_right
        self.x_left = min(ln(s * self.radius["A"]) / self.zrate, ln(s * self.radius["B"]) / self.Zrate)
        self.x_right = max(-ln(s * self.radius["A+"]) / self.zrate, -ln(s * self.radius["B+"]) / self.Zrate)
        self.terms = terms

    @staticmethod
    def _poly(sc, x):
        rho, c = sc
        return np.polynomial.polynomial.polyval(x / rho, c)

    def left(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        z = np.exp(self.zrate * zeta)
        Z = np.exp(self.Zrate * zeta)
        return self._poly(self._sa, z) * self._poly(self._sb, Z)

    def q_plus(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        w = np.exp(-self.zrate * zeta)
        W = np.exp(-self.Zrate * zeta)
        G = np.exp(self.beta * zeta + 1j * self.kappa * zeta * zeta)
        return G * self._poly(self._da, w) * self._poly(self._db, W)

    def q_minus(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return np.conj(self.q_plus(np.conj(zeta)))


# ---------------------------------------------------------------------------
# Q function
# ---------------------------------------------------------------------------
def _bridge_basis(zeta, centre, scale, degree):
    u = (np.asarray(zeta, dtype=complex).ravel() - centre) / scale
    return np.polynomial.chebyshev.chebvander(u, degree)


@dataclass
class QFunction:
    """Baxter eigenvalue: exact series at both ends, polynomial bridge in between.

    ``tail`` holds (amplitude, phase) of the +inf combination
    Q = amplitude (e^(i phase) Q+ + e^(-i phase) Q-); ``zeros`` are the real
    zeros found on ``zero_window``.
    """

    ctx: GammaContext
    genus: int
    t: TraceData
    T: TraceData
    tail: tuple
    bridge: np.ndarray
    bridge_frame: tuple            # (centre, scale)
    zeros: np.ndarray = field(default_factory=lambda: np.zeros(0))
    normalization: float = 1.0
    terms: int = 400
    zero_window: tuple = (-8.0, 5.0)
    _branches: SeriesBranches = field(default=None, repr=False, compare=False)

    @property
    def branches(self) -> SeriesBranches:
        if self._branches is None:
            self._branches = SeriesBranches(self.ctx, self.t, self.T, self.terms)
        return self._branches

    @property
    def x_left(self):
        return self.branches.x_left

    @property
    def x_right(self):
        return self.branches.x_right

    def right(self, zeta):
        amp, ph = self.tail
        br = self.branches
        c = amp * np.exp(1j * ph)
        return c * br.q_plus(zeta) + np.conj(c) * br.q_minus(zeta)

    def middle(self, zeta):
        centre, scale = self.bridge_frame
        V = _bridge_basis(zeta, centre, scale, len(self.bridge) - 1)
        return (V @ self.bridge).reshape(np.shape(zeta))

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.empty(zeta.shape, dtype=complex)
        x = zeta.real
        L = x <= self.x_left
        R = x >= self.x_right
        M = ~(L | R)
        if np.any(L):
            out[L] = self.branches.left(zeta[L])
        if np.any(R):
            out[R] = self.right(zeta[R])
        if np.any(M):
            out[M] = self.middle(zeta[M])
        out *= self.normalization
        return out if out.shape else complex(out)

    # -- zeros -----------------------------------------------------------
    def find_zeros(self, lo=None, hi=None, density=400):
        lo = self.zero_window[0] if lo is None else lo
        hi = self.zero_window[1] if hi is None else hi
        # sample finely enough to resolve the chirp cos(kappa x^2)
        kap = (self.genus + 1) / self.ctx.gamma
        n = int(max(density, 8 * kap * max(abs(hi), 1.0) * (hi - lo)))
        xs = np.linspace(lo, hi, n)
        f = lambda x: float(np.real(self(np.array([x + 0j]))[0]))
        vals = np.real(self(xs + 0j))
        roots = []
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            roots.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-14))
        roots = np.array(roots)
        if roots.size > 1 and np.min(np.diff(roots)) < 1e-9:
            raise DegeneracyError("coinciding zeros of Q")
        return roots

    def with_zeros(self):
        return replace(self, zeros=self.find_zeros(), _branches=self._branches)

    # -- serialization -------------------------------------------------------
    def to_json(self):
        return {
            "gamma": self.ctx.gamma,
            "genus": self.genus,
            "t": self.t.to_json(),
            "T": self.T.to_json(),
            "tail": [float(self.tail[0]), float(self.tail[1])],
            "bridge": [[complex(c).real, complex(c).imag] for c in self.bridge],
            "bridge_frame": [float(self.bridge_frame[0].real), float(self.bridge_frame[1])],
            "zeros": [float(z) for z in self.zeros],
            "normalization": float(self.normalization),
            "terms": int(self.terms),
            "zero_window": list(self.zero_window),
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            ctx=GammaContext(d["gamma"]),
            genus=int(d["genus"]),
            t=TraceData.from_json(d["t"]),
            T=TraceData.from_json(d["T"]),
            tail=tuple(d["tail"]),
            bridge=np.array([complex(a, b) for a, b in d["bridge"]]),
            bridge_frame=(complex(d["bridge_frame"][0]), float(d["bridge_frame"][1])),
            zeros=np.array(d["zeros"], dtype=float),
            normalization=float(d["normalization"]),
            terms=int(d["terms"]),
            zero_window=tuple(d["zero_window"]),
        )


def q_eval(Q: QFunction, zeta):
    return Q(zeta)


def wkb_zero_seeds(g, gamma, count, phase=0.0):
    """zeta_n with (g+1) zeta_n^2 / gamma + pi/4 + phase = pi (n - 1/2), n >= 1."""
    n = np.arange(1, count + 1)
    val = gamma * (math.pi * (n - 0.25) - phase) / (g + 1)
    return np.sqrt(np.clip(val, 0, None))


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------
@dataclass
class ResidualReport:
    baxter_res: float
    dual_res: float
    asym_res: float
    realness_res: float

    def as_dict(self):
        return {"baxter_res": self.baxter_res, "dual_res": self.dual_res,
                "asym_res": self.asym_res, "realness_res": self.realness_res}

    def max(self):
        return max(self.baxter_res, self.dual_res, self.asym_res, self.realness_res)


def _tq_residual(Q, grid, shift, x_of, trace):
    zeta = np.asarray(grid, dtype=complex)
    up, dn, mid = Q(zeta + 1j * shift), Q(zeta - 1j * shift), Q(zeta)
    lhs = trace.sign * trace(x_of(zeta)) * mid
    scale = np.abs(up) + np.abs(dn) + np.abs(lhs) + 1e-300
    return np.abs(lhs - up - dn) / scale


def residual_report(Q: QFunction, grid) -> ResidualReport:
    ctx = Q.ctx
    grid = np.asarray(grid, dtype=float)
    bax = _tq_residual(Q, grid, ctx.gamma, ctx.z_of, Q.t)
    dual = _tq_residual(Q, grid, math.pi, ctx.Z_of, Q.T)
    vals = Q(grid + 0j)
    real = np.abs(vals.imag) / np.maximum(np.abs(vals), 1e-300)
    # asymptotics: compare with the leading model on the right end of the grid
    br = Q.branches
    far = grid[grid >= max(br.x_right, grid.max() - 2.0)]
    if far.size:
        amp, ph = Q.tail
        model = 2 * amp * np.exp(br.beta * far) * np.cos(br.kappa * far ** 2 + ph)
        asym = np.abs(np.real(Q(far + 0j)) - model) / (2 * amp * np.exp(br.beta * far) + 1e-300)
        asym_res = float(np.max(asym))
    else:
        asym_res = float("inf")
    return ResidualReport(float(np.max(bax)), float(np.max(dual)), asym_res, float(np.max(real)))


def default_grid(Q: QFunction, n=200):
    last = Q.zeros[-1] if len(Q.zeros) else Q.zero_window[1]
    return np.linspace(-8.0, last + 2.0, n)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------
@dataclass
class SolverOptions:
    tolerance: float = 1e-8
    max_iterations: int = 60
    bridge_degree: int = 48
    band_width: float = 0.6
    band_margin: float = 0.05
    height_extra: float = 0.35
    samples: int = 16
    terms: int = 400
    complex_search: bool = False
    zero_window: tuple = (-8.0, 5.0)


@dataclass
class SpectralPoint:
    t: TraceData
    T: TraceData
    Q: QFunction
    residuals: ResidualReport
    status: str = "accepted"
    label: str = "ground"
    metadata: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "gamma": self.Q.ctx.gamma,
            "genus": self.Q.genus,
            "t": self.t.to_json(),
            "T": self.T.to_json(),
            "Q": self.Q.to_json(),
            "residuals": self.residuals.as_dict(),
            "status": self.status,
            "label": self.label,
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, d):
        Q = QFunction.from_json(d["Q"])
        return cls(t=Q.t, T=Q.T, Q=Q, residuals=ResidualReport(**d["residuals"]),
                   status=d["status"], label=d["label"], metadata=d.get("metadata", {}))


def _matching_system(ctx, t, T, opts: SolverOptions, height=None):
    """Weighted linear system for (bridge coefficients, Re c, Im c).

    Rows: bridge = left solution on a band left of the gap, and
    bridge = c Q+ + conj(c) Q- on a band right of it, over a rectangle
    tall enough to cover the shifts +- i gamma (and +- i pi when affordable).
    """
    br = SeriesBranches(ctx, t, T, opts.terms)
    xl, xr = br.x_left, br.x_right
    H = (ctx.gamma if height is None else height) + opts.height_extra
    a = (xl - opts.band_margin - opts.band_width, xl - opts.band_margin)
    b = (xr + opts.band_margin, xr + opts.band_margin + opts.band_width)
    n = opts.samples
    ys = np.linspace(-H, H, n)
    zl = (np.linspace(*a, n)[:, None] + 1j * ys[None, :]).ravel()
    zr = (np.linspace(*b, n)[:, None] + 1j * ys[None, :]).ravel()
    centre = complex(0.5 * (a[0] + b[1]))
    scale = float(max(0.5 * (b[1] - a[0]), H))
    deg = opts.bridge_degree
    ql = br.left(zl)
    qp, qm = br.q_plus(zr), br.q_minus(zr)
    # envelope weights: largest modulus on each vertical sample line
    env = lambda v: np.repeat(np.max(np.abs(v).reshape(n, n), axis=1), n)
    wl = 1 / np.maximum(env(ql), 1e-300)
    wr = 1 / np.maximum(env(qp) + env(qm), 1e-300)
    Vl = _bridge_basis(zl, centre, scale, deg) * wl[:, None]
    Vr = _bridge_basis(zr, centre, scale, deg) * wr[:, None]
    # real parametrisation of c: c Q+ + conj(c) Q- = Re c (Q+ + Q-) + i Im c (Q+ - Q-)
    top = np.hstack([Vl, np.zeros((len(zl), 2))])
    bot = np.hstack([Vr, -((qp + qm) * wr)[:, None], -(1j * (qp - qm) * wr)[:, None]])
    A = np.vstack([top, bot])
    rhs = np.concatenate([ql * wl, np.zeros(len(zr))])
    return br, A, rhs, (centre, scale)


def _solve_matching(ctx, t, T, opts):
    br, A, rhs, frame = _matching_system(ctx, t, T, opts)
    bad = ~np.isfinite(A).all(axis=1) | ~np.isfinite(rhs)
    if bad.any():
        A, rhs = A[~bad], rhs[~bad]
    # column scaling for conditioning
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1
    sol, *_ = np.linalg.lstsq(A / norms, rhs, rcond=1e-13)
    sol = sol / norms
    res = A @ sol - rhs
    rel = float(np.linalg.norm(res) / max(np.linalg.norm(rhs), 1e-300))
    deg = opts.bridge_degree
    bridge = sol[:deg + 1]
    c = complex(sol[deg + 1].real, sol[deg + 2].real) if np.isrealobj(sol) else complex(sol[deg + 1].real, sol[deg + 2].real)
    return br, bridge, frame, c, rel, res


def _traces(params, g):
    return TraceData.from_free(tuple(params[:g])), TraceData.from_free(tuple(params[g:2 * g]))


def solve_spectrum(g: int, ctx: GammaContext, init: SpectralPoint | tuple, opts: SolverOptions | None = None) -> SpectralPoint:
    """Damped least-squares search over (t_1..t_g, T_1..T_g).

    ``init`` is a SpectralPoint or a tuple (t_free, T_free).  The residual
    vector is the weighted matching mismatch; the bridge and the tail
    amplitude enter linearly and are eliminated at every step.
    """
    opts = opts or SolverOptions()
    ctx.check_resonance(g)
    if isinstance(init, SpectralPoint):
        x0 = np.array([c.real for c in init.t.free] + [c.real for c in init.T.free])
        label = init.label
    else:
        tf, Tf = init
        x0 = np.array(list(tf) + list(Tf), dtype=float)
        label = "ground"
    if g < 1:
        raise ContractError("g >= 1 required")

    history = []

    def fun(p):
        t, T = _traces(p, g)
        try:
            *_, rel, res = _solve_matching(ctx, t, T, opts)
        except (FloatingPointError, ValueError, np.linalg.LinAlgError):
            return np.full(2 * opts.samples ** 2, 1e3)
        history.append((rel, p.copy()))
        return np.concatenate([res.real, res.imag])

    with np.errstate(all="ignore"):
        fit = optimize.least_squares(fun, x0, method="lm", x_scale="jac",
                                     max_nfev=opts.max_iterations * (2 * g + 1))
    best = min(history, key=lambda h: h[0]) if history else (np.inf, x0)
    t, T = _traces(best[1], g)
    return build_point(ctx, t, T, opts, label=label,
                       metadata={"matching_residual": best[0], "evaluations": len(history),
                                 "optimizer_status": int(fit.status)})


def build_point(ctx, t, T, opts: SolverOptions | None = None, label="ground", metadata=None) -> SpectralPoint:
    """Assemble the QFunction for fixed traces and score it."""
    opts = opts or SolverOptions()
    br, bridge, frame, c, rel, _ = _solve_matching(ctx, t, T, opts)
    amp = abs(c)
    ph = float(np.angle(c)) if amp else 0.0
    Q = QFunction(ctx, t.genus, t, T, (amp, ph), bridge, frame, terms=opts.terms,
                  zero_window=opts.zero_window, _branches=br)
    Q = Q.with_zeros()
    rep = residual_report(Q, default_grid(Q))
    ok = rep.baxter_res < opts.tolerance and rep.dual_res < opts.tolerance and rep.realness_res < opts.tolerance
    meta = dict(metadata or {})
    meta.setdefault("matching_residual", rel)
    return SpectralPoint(t, T, Q, rep, "accepted" if ok else "diverged", label, meta)


def duality_residual(point: SpectralPoint, opts: SolverOptions | None = None, grid=None):
    """Rebuild at gamma' = pi^2/gamma with t <-> T and compare Q on a common grid.

    Returns (relative max deviation, dual SpectralPoint).  Both functions obey
    Q -> 1 at -inf, so no extra rescaling of values is needed.
    """
    Q = point.Q
    ctx = Q.ctx
    dual = build_point(ctx.dual(), point.T, point.t, opts, label=point.label + "-dual")
    grid = default_grid(Q) if grid is None else np.asarray(grid, dtype=float)
    a = Q(grid + 0j)
    b = dual.Q(grid * (math.pi / ctx.gamma) + 0j)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300)), dual
