"""Deformed Abelian differentials and their pairings.

The z side lives in coupling gamma with x = z; the Z side is the same algebra
in the dual coupling pi^2/gamma, evaluated at zeta' = pi zeta / gamma (so that
an i pi shift of zeta is an i pi^2/gamma shift of zeta').
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .deform_algebra import SideAlgebra
from .dilog import GammaContext
from .errors import ContractError, LimitError, RegularizationError
from .polyalg import LaurentPoly, LogLaurent, TraceData, Variable

__all__ = [
    "DeformContext",
    "PeriodMatrix",
    "s_poly",
    "dual_S_poly",
    "u_func",
    "v_func",
    "pk_identity_residual",
    "pairing_reg",
    "pairing_reg_alt",
    "unregularized_pairing",
    "circ_pairing",
    "period_matrix",
    "symplectic_residual",
    "pairing_matrix_J",
    "vanishing_checks",
    "classical_limit_check",
    "basis_indices",
    "QuadOptions",
    "sector_expansion",
    "VanishingReport",
    "LimitReport",
]


@dataclass
class DeformContext:
    """Traces on both sides of the pairing plus (optionally) the two Q functions."""

    ctx: GammaContext
    t: TraceData
    t_prime: TraceData
    T: TraceData
    T_prime: TraceData
    Q: object = None
    Q_prime: object = None
    reading: str = "corrected"
    normalization: str = "leading"
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        gs = {self.t.genus, self.t_prime.genus, self.T.genus, self.T_prime.genus}
        if len(gs) != 1:
            raise ContractError("all traces must share the genus")
        self.g = self.t.genus
        self.z_side = SideAlgebra(self.ctx.gamma, self.t, self.t_prime, Variable("z", 2.0),
                                  self.reading, self.normalization)
        self.Z_side = SideAlgebra(self.ctx.gamma_dual, self.T, self.T_prime, Variable("Z", 2.0),
                                  self.reading, self.normalization)

    @classmethod
    def from_points(cls, left, right, **kw):
        """Build from two SpectralPoints (left eigenstate, right eigenstate)."""
        d = cls(left.Q.ctx, left.t, right.t, left.T, right.T, left.Q, right.Q, **kw)
        d.residuals = {"left": left.residuals.as_dict(), "right": right.residuals.as_dict()}
        return d

    def side(self, which):
        if which in ("z", "z-side"):
            return self.z_side
        if which in ("Z", "Z-side"):
            return self.Z_side
        raise ContractError("side must be 'z' or 'Z'")

    def to_side(self, which, zeta):
        """Side-local coordinate of zeta."""
        zeta = np.asarray(zeta, dtype=complex)
        return zeta if self.side(which) is self.z_side else zeta * (math.pi / self.ctx.gamma)

    def step(self, which):
        return self.ctx.gamma if self.side(which) is self.z_side else math.pi


# ---------------------------------------------------------------------------
# polynomials and functionals
# ---------------------------------------------------------------------------
def s_poly(k: int, dctx: DeformContext) -> LaurentPoly:
    return dctx.z_side.s(k)


def dual_S_poly(k: int, dctx: DeformContext) -> LaurentPoly:
    """S_k as a polynomial in Z (coupling pi^2/gamma)."""
    return dctx.Z_side.s(k)


def u_func(f: LogLaurent, dctx: DeformContext, side="z"):
    alg = dctx.side(side)
    poly = alg.u(f)
    return lambda zeta: poly(dctx.to_side(side, zeta))


def v_func(f: LogLaurent, dctx: DeformContext, Q, Qp, side="z"):
    """p-type function zeta -> v[f](zeta) built from callables Q, Q'."""
    alg = dctx.side(side)
    a, b = alg.anti_differences(f)
    x, e, pr = alg.xi, alg.eps, alg.pref()
    c_0m = (e * (a.shifted(-x) - b)) * pr
    c_m0 = (e * (b.shifted(-x) - a)) * pr
    c_mm = f * pr
    c_00 = f.shifted(-x) * pr
    h = dctx.step(side)

    def value(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        w = dctx.to_side(side, zeta)
        q0, qm = Q(zeta), Q(zeta - 1j * h)
        p0, pm = Qp(zeta), Qp(zeta - 1j * h)
        return c_mm(w) * qm * pm + c_m0(w) * qm * p0 + c_0m(w) * q0 * pm + c_00(w) * q0 * p0

    return value


def _p_on_lattice(alg, k, w, Q, Qp, n):
    return alg.p_values(k, w[n], Q[n], Q[n - 1], Qp[n], Qp[n - 1])


def _abs_eval(f: LogLaurent, w):
    """sum |c| |zeta^j x^n|: the size of the summands behind f(w)."""
    logx = f.var.rate * np.asarray(w, dtype=complex)
    out = np.zeros(logx.shape)
    for (j, n), c in f.terms.items():
        out = out + abs(c) * np.exp(n * logx.real) * (np.abs(w) ** j if j else 1.0)
    return out


def _p_magnitude(alg, k, w, Q, Qp, n):
    c_mm, c_m0, c_0m, c_00 = alg.v_parts(k)
    a0, am, b0, bm = (np.abs(v) for v in (Q[n], Q[n - 1], Qp[n], Qp[n - 1]))
    x = w[n]
    return (_abs_eval(c_mm, x) * am * bm + _abs_eval(c_m0, x) * am * b0
            + _abs_eval(c_0m, x) * a0 * bm + _abs_eval(c_00, x) * a0 * b0)


def pk_identity_residual(k: int, dctx: DeformContext, lattice, lattice_prime, side="z") -> float:
    """max over the lattice of |(s_k + s_k^-) Q Q' - (p_k(+) - p_k)| / scale.

    The scale is the absolute size of every summand entering both sides, so a
    result near machine epsilon means the identity holds to round-off even when
    near-resonant anti-difference coefficients cancel inside p_k.
    """
    alg = dctx.side(side)
    if abs(lattice.step - dctx.step(side)) > 1e-12 or abs(lattice_prime.step - lattice.step) > 1e-12:
        raise ContractError("lattice step does not match the side")
    if abs(lattice.zeta0 - lattice_prime.zeta0) > 1e-12:
        raise ContractError("lattices must share the base point")
    Q, Qp = lattice.values, lattice_prime.values
    N = min(len(Q), len(Qp))
    w = dctx.to_side(side, lattice.points[:N])
    n = np.arange(1, N - 1)
    lhs = (alg.s(k)(w[n]) + alg.s_minus(k)(w[n])) * Q[n] * Qp[n]
    if k <= -1:
        return float(np.max(np.abs(lhs)))
    pp = _p_on_lattice(alg, k, w, Q, Qp, n + 1)
    p0 = _p_on_lattice(alg, k, w, Q, Qp, n)
    s_all = alg.s(k) + alg.s_minus(k)
    scale = (_abs_eval(s_all, w[n]) * np.abs(Q[n] * Qp[n]) + _p_magnitude(alg, k, w, Q, Qp, n + 1)
             + _p_magnitude(alg, k, w, Q, Qp, n) + 1e-300)
    return float(np.max(np.abs(lhs - (pp - p0)) / scale))


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------
_GL_CACHE: dict = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


@dataclass(frozen=True)
class QuadOptions:
    """Real-line panels of width <= max_panel (shrunk where Q Q' oscillates), nodes per panel."""

    nodes: int = 24
    max_panel: float = 0.25
    vertical_start: int = 32
    vertical_max: int = 2048
    vertical_tol: float = 1e-12
    lower_cutoff: float | None = None
    tail_length: float | None = None

    def refined(self):
        return QuadOptions(self.nodes, self.max_panel / 2, self.vertical_start * 2, self.vertical_max * 2,
                           self.vertical_tol, self.lower_cutoff, self.tail_length)


def _panels(a, b, kappa, opts: QuadOptions):
    """Panel edges on [a, b] with width <= min(max_panel, pi / local chirp frequency)."""
    edges = [a]
    x = a
    while x < b:
        freq = 4 * kappa * max(abs(x), abs(min(b, x + opts.max_panel))) + 1.0
        h = min(opts.max_panel, math.pi / freq * 2)
        x = min(b, x + h)
        edges.append(x)
    return np.array(edges)


def real_nodes(a, b, kappa, opts, breaks=()):
    """Panelled Gauss-Legendre nodes and weights on [a, b], split at ``breaks``."""
    pts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    xg, wg = _gl(opts.nodes)
    xs, ws = [], []
    for u, v in zip(pts[:-1], pts[1:]):
        e = _panels(u, v, kappa, opts)
        mids, halves = 0.5 * (e[1:] + e[:-1]), 0.5 * (e[1:] - e[:-1])
        xs.append((mids[:, None] + halves[:, None] * xg[None, :]).ravel())
        ws.append((halves[:, None] * wg[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _real_integral(fun, a, b, kappa, opts, breaks=()):
    if b <= a:
        return 0j if b == a else -_real_integral(fun, b, a, kappa, opts, breaks)
    x, w = real_nodes(a, b, kappa, opts, breaks)
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.asarray(fun(x + 0j), dtype=complex)
    return complex(np.sum(w * v))


def _vertical_integral(fun, base, height, opts):
    """int_base^{base + i height} fun(zeta) d zeta with node doubling."""
    n = opts.vertical_start
    prev = None
    while True:
        xg, wg = _gl(n)
        y = 0.5 * height * (xg + 1)
        val = complex(1j * 0.5 * height * np.sum(wg * fun(base + 1j * y)))
        if prev is not None and abs(val - prev) <= opts.vertical_tol * max(abs(val), 1e-300):
            return val
        if n >= opts.vertical_max:
            return val
        prev, n = val, n * 2


# ---------------------------------------------------------------------------
# integrand pieces
# ---------------------------------------------------------------------------
class _Pieces:
    """Callables for s_k, sigma_k = -s_k^-, S_l, sigma_l = -S_l^-, p_k, P_l, F = Q Q'."""

    def __init__(self, dctx: DeformContext, k, l, Q=None, Qp=None):
        self.d = dctx
        Q = Q or dctx.Q
        Qp = Qp or dctx.Q_prime
        if Q is None or Qp is None:
            raise ContractError("pairings need Q and Q' (QFunction-like callables)")
        self.Q, self.Qp = Q, Qp
        A, B = dctx.z_side, dctx.Z_side
        r = math.pi / dctx.ctx.gamma
        sk, smk = A.s(k), A.s_minus(k)
        Sl, Sml = B.s(l), B.s_minus(l)
        self.s = lambda z: sk(z)
        self.sig = lambda z: -smk(z)
        self.S = lambda z: Sl(z * r)
        self.Sig = lambda z: -Sml(z * r)
        zero = lambda z: np.zeros(np.shape(z), dtype=complex)
        self.p = v_func(A.f_of(k), dctx, Q, Qp, "z") if k >= 0 else zero
        self.P = v_func(B.f_of(l), dctx, Q, Qp, "Z") if l >= 0 else zero
        self.kappa = 2 * (dctx.g + 1) / dctx.ctx.gamma
        self.k, self.l = k, l
        self.lowest = (min(n for _, n in sk.terms), min(n for _, n in Sl.terms))
        # branch switch points of piecewise Q representations
        br = []
        for q in (Q, Qp):
            for name in ("x_left", "x_right"):
                v = getattr(q, name, None)
                if v is not None:
                    br.append(float(v))
        self.breaks = tuple(br)

    def F(self, z):
        return self.Q(z) * self.Qp(z)

    def lower_cutoff(self, opts):
        if opts.lower_cutoff is not None:
            return opts.lower_cutoff
        dz, dZ = self.lowest
        rate = 2 * max(dz, 0) + 2 * math.pi / self.d.ctx.gamma * max(dZ, 0)
        if rate <= 0:
            raise RegularizationError("integrand does not decay at -infinity (l(0) or L(0) nonzero)")
        return -40.0 / rate - 0.5

    def tail_rate(self, zpart, Zpart):
        """Decay rate of Q Q' * zpart * Zpart at +inf (negative: growth)."""
        g, gam = self.d.g, self.d.ctx.gamma
        dz = max((n for _, n in zpart.terms), default=0)
        dZ = max((n for _, n in Zpart.terms), default=0)
        return 2 * (g + 1) * (1 + math.pi / gam) - 2 * dz - 2 * math.pi / gam * dZ

    def tail_end(self, start, opts, rate=None):
        if opts.tail_length is not None:
            return start + opts.tail_length
        if rate is None:
            rate = self.tail_rate(self.d.z_side.s_minus(self.k), self.d.Z_side.s_minus(self.l))
        if rate <= 0:
            raise RegularizationError(f"tail grows like exp({-rate:.3g} zeta)")
        return start + min(45.0 / rate + 1.0, 40.0)


def _check_tail(fun, a, b):
    xs = np.linspace(a, b, 400)
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.abs(fun(xs + 0j))
    first, last = np.nanmax(v[:40]), np.nanmax(v[-40:])
    if not np.isfinite(last) or last > first:
        raise RegularizationError(f"tail integrand not decaying ({first:.3g} -> {last:.3g})")
    return float(last / max(first, 1e-300))


def pairing_reg(k, l, dctx: DeformContext, lam1=2.0, lam2=4.0, opts: QuadOptions | None = None, Q=None, Qp=None):
    """Regularized <s_k | S_l> with seams Lambda_1 (s_k switch) < Lambda_2 (S_l switch).

    Tails use sigma = -s^-, the sign that makes the value seam-independent
    under (s + s^-) Q Q' = delta p.
    """
    if not lam1 < lam2:
        raise ContractError("need Lambda_1 < Lambda_2")
    opts = opts or QuadOptions()
    P = _Pieces(dctx, k, l, Q, Qp)
    lo = P.lower_cutoff(opts)
    hi = P.tail_end(lam2, opts)
    head = lambda z: P.F(z) * P.s(z) * P.S(z)
    mid = lambda z: P.F(z) * P.sig(z) * P.S(z)
    tail = lambda z: P.F(z) * P.sig(z) * P.Sig(z)
    _check_tail(tail, lam2, hi)
    total = (_real_integral(head, lo, lam1, P.kappa, opts, P.breaks)
             + _real_integral(mid, lam1, lam2, P.kappa, opts, P.breaks)
             + _real_integral(tail, lam2, hi, P.kappa, opts, P.breaks))
    total -= _vertical_integral(lambda z: P.S(z) * P.p(z), lam1, dctx.ctx.gamma, opts)
    total -= _vertical_integral(lambda z: P.sig(z) * P.P(z), lam2, math.pi, opts)
    return complex(total)


def pairing_reg_alt(k, l, dctx: DeformContext, lam1=2.0, lam2=4.0, opts: QuadOptions | None = None, Q=None, Qp=None):
    """Swapped seam order: S_l switches at Lambda_1, s_k at Lambda_2."""
    if not lam1 < lam2:
        raise ContractError("need Lambda_1 < Lambda_2")
    opts = opts or QuadOptions()
    P = _Pieces(dctx, k, l, Q, Qp)
    lo = P.lower_cutoff(opts)
    hi = P.tail_end(lam2, opts)
    head = lambda z: P.F(z) * P.s(z) * P.S(z)
    mid = lambda z: P.F(z) * P.s(z) * P.Sig(z)
    tail = lambda z: P.F(z) * P.sig(z) * P.Sig(z)
    _check_tail(tail, lam2, hi)
    total = (_real_integral(head, lo, lam1, P.kappa, opts, P.breaks)
             + _real_integral(mid, lam1, lam2, P.kappa, opts, P.breaks)
             + _real_integral(tail, lam2, hi, P.kappa, opts, P.breaks))
    total -= _vertical_integral(lambda z: P.s(z) * P.P(z), lam1, math.pi, opts)
    total -= _vertical_integral(lambda z: P.Sig(z) * P.p(z), lam2, dctx.ctx.gamma, opts)
    return complex(total)


def unregularized_pairing(k, l, dctx: DeformContext, upper=None, opts: QuadOptions | None = None, Q=None, Qp=None):
    """Plain int_R Q Q' s_k S_l; raises RegularizationError when the +inf tail grows."""
    opts = opts or QuadOptions()
    P = _Pieces(dctx, k, l, Q, Qp)
    lo = P.lower_cutoff(opts)
    x0 = 2.0
    rate = P.tail_rate(dctx.z_side.s(k), dctx.Z_side.s(l))
    if upper is None and rate <= 0:
        raise RegularizationError(f"plain integral diverges: integrand grows like exp({-rate:.3g} zeta)")
    hi = P.tail_end(x0, opts, rate) if upper is None else upper
    fun = lambda z: P.F(z) * P.s(z) * P.S(z)
    _check_tail(fun, x0, hi)
    return _real_integral(fun, lo, hi, P.kappa, opts, P.breaks)


# ---------------------------------------------------------------------------
# sector expansion of Q Q' at +infinity and its anti-differences
# ---------------------------------------------------------------------------
@dataclass
class _Sector:
    """exp(2 beta zeta + i chirp kappa zeta^2) sum c[i, j] u^(i+moff) U^(j+noff)."""

    chirp: int
    coeffs: np.ndarray
    moff: int = 0
    noff: int = 0
    zeta_power: int = 0


class _SectorSum:
    """Right-end expansion, u = e^(-2 zeta)/rho_w, U = e^(-2 pi zeta/gamma)/rho_W."""

    def __init__(self, sectors, beta, kappa, rho_w, rho_W, gamma, genus):
        self.sectors = list(sectors)
        self.beta, self.kappa = beta, kappa
        self.rho_w, self.rho_W, self.gamma = rho_w, rho_W, gamma
        self.genus = genus

    def _like(self, sectors):
        return _SectorSum(sectors, self.beta, self.kappa, self.rho_w, self.rho_W, self.gamma, self.genus)

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        u = np.exp(-2 * zeta) / self.rho_w
        U = np.exp(-2 * math.pi * zeta / self.gamma) / self.rho_W
        out = np.zeros(zeta.shape, dtype=complex)
        P = np.polynomial.polynomial
        for s in self.sectors:
            inner = np.array([P.polyval(U, row) for row in s.coeffs])   # (M, ...)
            val = P.polyval(u, inner, tensor=False) if inner.ndim > 1 else P.polyval(u, inner)
            pref = np.exp(2 * self.beta * zeta + 1j * s.chirp * self.kappa * zeta * zeta)
            out = out + pref * val * u ** s.moff * U ** s.noff * zeta ** s.zeta_power
        return out

    def times(self, poly: LaurentPoly, axis: str):
        """Multiply by a Laurent polynomial in z (axis 'w') or in Z (axis 'W')."""
        co = poly.coefficients
        if not co:
            return self._like([])
        lo, hi = min(co), max(co)
        rho = self.rho_w if axis == "w" else self.rho_W
        out = []
        for s in self.sectors:
            M, N = s.coeffs.shape
            if axis == "w":
                new = np.zeros((M + hi - lo, N), dtype=complex)
                for j, c in co.items():                 # z^j = rho^-j u^-j
                    new[hi - j:hi - j + M] += c * rho ** (-j) * s.coeffs
                out.append(_Sector(s.chirp, new, s.moff - hi, s.noff, s.zeta_power))
            else:
                new = np.zeros((M, N + hi - lo), dtype=complex)
                for j, c in co.items():
                    new[:, hi - j:hi - j + N] += c * rho ** (-j) * s.coeffs
                out.append(_Sector(s.chirp, new, s.moff, s.noff - hi, s.zeta_power))
        return self._like(out)

    def anti_difference(self, axis: str, tol=1e-10):
        """G with G(zeta + i h) - G(zeta) = self; h = gamma on 'w', pi on 'W'.

        The shift multiplies the chirped sectors by the expansion variable to
        the power +-2(g+1); in each sector the unique formal solution is taken,
        so no periodic constant is left free.
        """
        gam, beta, kappa = self.gamma, self.beta, self.kappa
        h = gam if axis == "w" else math.pi
        L = 2 * (self.genus + 1)
        rho = self.rho_w if axis == "w" else self.rho_W
        out = []
        for s in self.sectors:
            if s.zeta_power:
                raise ContractError("anti-difference of a secular sector")
            H = s.coeffs if axis == "w" else s.coeffs.T
            a0, b0 = (s.moff, s.noff) if axis == "w" else (s.noff, s.moff)
            ra, rb = (2.0, 2 * math.pi / gam) if axis == "w" else (2 * math.pi / gam, 2.0)
            M, N = H.shape
            a = np.arange(M) + a0
            b = np.arange(N) + b0
            ph_b = np.exp(-1j * rb * h * b)[None, :]
            phase = lambda e: np.exp(-1j * ra * h * e)[:, None] * ph_b
            if s.chirp == 0:
                den = np.exp(2j * beta * h) * phase(a) - 1
                # e^(2 beta zeta) times this power is h-periodic: secular term
                res_row = a == -(L // 2)
                bad = (np.abs(den) < tol) & ~res_row[:, None]
                if np.any(bad & (H != 0)):
                    raise LimitError("resonant denominator in the anti-difference")
                G = np.where(res_row[:, None], 0, H / np.where(np.abs(den) < tol, 1, den))
                off = a0
                if np.any(res_row):
                    sec = np.zeros_like(H)
                    sec[res_row] = H[res_row] / (1j * h)
                    if axis == "w":
                        out.append(_Sector(0, sec, a0, b0, 1))
                    else:
                        out.append(_Sector(0, sec.T, b0, a0, 1))
            elif s.chirp == 2:
                c = np.exp(2j * beta * h - 2j * kappa * h * h) * rho ** L
                G = np.zeros((M, N), dtype=complex)
                ph = phase(a - L)
                for i in range(M):
                    G[i] = (c * ph[i] * G[i - L] if i >= L else 0) - H[i]
                off = a0
            else:
                c = np.exp(2j * beta * h + 2j * kappa * h * h) / rho ** L
                G = np.zeros((M + L, N), dtype=complex)
                ph = phase(a + L)
                for i in range(M):
                    G[i + L] = (H[i] + G[i]) / (c * ph[i])
                G = G[:M + L]
                off = a0
            if axis == "w":
                out.append(_Sector(s.chirp, G, off, b0))
            else:
                out.append(_Sector(s.chirp, G.T, b0, off))
        return self._like(out)


def sector_expansion(Q, Qp, terms_w=96, terms_W=24) -> _SectorSum:
    """Q Q' at +inf split into chirp sectors +2, 0, -2 (right branch only)."""
    b1, b2 = Q.branches, Qp.branches
    (ra, da), (rb, db) = b1._da, b1._db
    (ra2, da2), (rb2, db2) = b2._da, b2._db
    rw, rW = min(ra, ra2), min(rb, rb2)
    m, n = np.arange(terms_w), np.arange(terms_W)
    A1, A2 = da[:terms_w] * (rw / ra) ** m, da2[:terms_w] * (rw / ra2) ** m
    B1, B2 = db[:terms_W] * (rW / rb) ** n, db2[:terms_W] * (rW / rb2) ** n
    c1 = Q.normalization * Q.tail[0] * np.exp(1j * Q.tail[1])
    c2 = Qp.normalization * Qp.tail[0] * np.exp(1j * Qp.tail[1])
    cj = np.conj

    def outer(a, b, x, y):
        return np.outer(np.convolve(a, b)[:terms_w], np.convolve(x, y)[:terms_W])

    pp = c1 * c2 * outer(A1, A2, B1, B2)
    mm = cj(c1) * cj(c2) * outer(cj(A1), cj(A2), cj(B1), cj(B2))
    mixed = (c1 * cj(c2) * outer(A1, cj(A2), B1, cj(B2))
             + cj(c1) * c2 * outer(cj(A1), A2, cj(B1), B2))
    secs = [_Sector(2, pp), _Sector(0, mixed), _Sector(-2, mm)]
    return _SectorSum(secs, b1.beta, b1.kappa, rw, rW, Q.ctx.gamma, Q.genus)


def _circ_segment(F, l1_vals, G, base, h_seg, h_shift, opts):
    """int_base^(base + i h_seg) [F(z) l1 G(z - i h_seg) + F(z - i h_seg) l1 G(z - i h_shift)]."""
    def integrand(zeta):
        return l1_vals(zeta) * (F(zeta) * G(zeta - 1j * h_seg) + F(zeta - 1j * h_seg) * G(zeta - 1j * h_shift))
    return _vertical_integral(integrand, base, h_seg, opts)


def circ_pairing(k, l, dctx: DeformContext, variant="z", lams=(2.0, 2.5, 3.0, 3.5), tol=1e-9,
                 opts: QuadOptions | None = None, Q=None, Qp=None, history=False):
    """s_k o s_l (or S_k o S_l for variant 'Z') as the large-Lambda segment integral.

    The anti-difference of Q Q' s_l is the formal one of the right-end
    expansion; successive Lambda values must agree to ``tol``.
    """
    opts = opts or QuadOptions()
    Q = Q if Q is not None else dctx.Q
    Qp = Qp if Qp is not None else dctx.Q_prime
    if Q is None or Qp is None:
        raise ContractError("circ pairing needs Q functions")
    side = dctx.side(variant)
    axis = "w" if side is dctx.z_side else "W"
    h_seg = math.pi if axis == "w" else dctx.ctx.gamma      # segment height
    h_shift = dctx.ctx.gamma if axis == "w" else math.pi     # anti-difference step
    l1, l2 = side.s(k), side.s(l)
    S = sector_expansion(Q, Qp)
    G = S.times(l2, axis).anti_difference(axis)
    F = lambda zeta: Q(zeta) * Qp(zeta)
    l1_vals = lambda zeta: l1(dctx.to_side(variant, zeta))
    if min(lams) < max(Q.x_right, Qp.x_right):
        raise ContractError("Lambda must lie in the right expansion region")
    vals = [_circ_segment(F, l1_vals, G, lam, h_seg, h_shift, opts) for lam in lams]
    diffs = [abs(a - b) for a, b in zip(vals[1:], vals[:-1])]
    if not all(np.isfinite(vals)):
        raise LimitError("circ pairing overflowed before stabilizing")
    if diffs and diffs[-1] > tol * max(1.0, abs(vals[-1])):
        raise LimitError(f"circ pairing did not stabilize: successive difference {diffs[-1]:.3g}")
    return (vals[-1], vals) if history else vals[-1]


# ---------------------------------------------------------------------------
# period matrix and identities
# ---------------------------------------------------------------------------
def basis_indices(g):
    """Signed index order (-g..-1, 1..g) shared by P and J."""
    return [k for k in range(-g, g + 1) if k != 0]


def pairing_matrix_J(g) -> np.ndarray:
    idx = basis_indices(g)
    return np.array([[float(np.sign(k - l)) if k == -l else 0.0 for l in idx] for k in idx])


@dataclass
class PeriodMatrix:
    g: int
    entries: np.ndarray
    indices: list = field(default_factory=list)
    residual: float = float("nan")

    def __post_init__(self):
        self.indices = self.indices or basis_indices(self.g)
        if not np.all(np.isfinite(self.entries)):
            raise ContractError("period matrix has non-finite entries")
        if math.isnan(self.residual):
            self.residual = symplectic_residual(self)

    def to_json(self):
        return {"g": self.g, "indices": self.indices,
                "re": self.entries.real.tolist(), "im": self.entries.imag.tolist(),
                "symplectic_residual": self.residual}

    def to_csv(self):
        head = "," + ",".join(str(i) for i in self.indices)
        rows = [head]
        for k, row in zip(self.indices, self.entries):
            rows.append(str(k) + "," + ",".join(f"{complex(v).real:.17g}{complex(v).imag:+.17g}j" for v in row))
        return "\n".join(rows) + "\n"


def symplectic_residual(P) -> float:
    M = P.entries if isinstance(P, PeriodMatrix) else np.asarray(P)
    g = M.shape[0] // 2
    J = pairing_matrix_J(g)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def period_matrix(dctx: DeformContext, lam1=1.5, lam2=2.0, opts: QuadOptions | None = None) -> PeriodMatrix:
    idx = basis_indices(dctx.g)
    M = np.array([[pairing_reg(k, l, dctx, lam1, lam2, opts) for l in idx] for k in idx])
    return PeriodMatrix(dctx.g, M, idx)


def _d_pairing(dctx, l, lam1, lam2, opts, dual=False):
    """<d | S_l> (or <s_l | D> when dual) with d = sum_j (t_j - t'_j) s_(-j)."""
    if dual:
        a, b = dctx.T.coefficients, dctx.T_prime.coefficients
    else:
        a, b = dctx.t.coefficients, dctx.t_prime.coefficients
    out = 0j
    for j in range(1, dctx.g + 1):
        c = a[j - 1] - b[j - 1]
        if c:
            out += c * (pairing_reg(l, -j, dctx, lam1, lam2, opts) if dual
                        else pairing_reg(-j, l, dctx, lam1, lam2, opts))
    return out


@dataclass
class VanishingReport:
    scale: float
    values: dict
    tolerance: float

    @property
    def max(self):
        return max(abs(v) for v in self.values.values()) / self.scale

    @property
    def passed(self):
        return self.max < self.tolerance

    def as_dict(self):
        return {"scale": self.scale, "tolerance": self.tolerance, "max_normalized": self.max,
                "values": {k: [v.real, v.imag] for k, v in self.values.items()}}


def vanishing_checks(dctx: DeformContext, lam1=1.5, lam2=2.0, opts=None, tolerance=1e-6) -> VanishingReport:
    """Exactness and d = 0 / D = 0 pairings, normalized by the largest basis pairing."""
    g = dctx.g
    idx = basis_indices(g)
    vals = {}
    for l in idx:
        vals[f"<s_{g + 1}|S_{l}>"] = pairing_reg(g + 1, l, dctx, lam1, lam2, opts)
        vals[f"<s_{l}|S_{g + 1}>"] = pairing_reg(l, g + 1, dctx, lam1, lam2, opts)
        vals[f"<d|S_{l}>"] = _d_pairing(dctx, l, lam1, lam2, opts)
        vals[f"<s_{l}|D>"] = _d_pairing(dctx, l, lam1, lam2, opts, dual=True)
    scale = max(abs(pairing_reg(k, l, dctx, lam1, lam2, opts)) for k in idx for l in idx)
    return VanishingReport(max(scale, 1e-300), vals, tolerance)


@dataclass
class LimitReport:
    k: int
    gammas: list
    coefficients: list          # per gamma, {power: coeff} of z^-1 s_k
    extrapolated: dict
    target: dict
    error: float
    slope: float
    deviations: list

    def as_dict(self):
        enc = lambda d: {str(n): [complex(c).real, complex(c).imag] for n, c in d.items()}
        return {"k": self.k, "gammas": self.gammas, "extrapolated": enc(self.extrapolated),
                "target": enc(self.target), "error": self.error, "slope": self.slope,
                "deviations": self.deviations}


def classical_limit_check(k, t: TraceData, gammas=(0.2, 0.1, 0.05), normalization="leading",
                          reading="corrected") -> LimitReport:
    """z^-1 s_k at t = t' per gamma, Richardson extrapolation to 0, compared with mu_k."""
    from .curve import HyperellipticCurve, mu_differential

    gammas = list(gammas)
    if any(b >= a for a, b in zip(gammas, gammas[1:])):
        raise ContractError("gamma sequence must decrease")
    per = []
    for gam in gammas:
        alg = SideAlgebra(gam, t, t, Variable("z", 2.0), reading, normalization)
        per.append({n - 1: c for n, c in alg.s(k).coefficients.items()})
    target = mu_differential(k, HyperellipticCurve(t)).coefficients
    powers = sorted(set(target).union(*per))
    table = np.array([[complex(p.get(n, 0)) for n in powers] for p in per])
    # polynomial extrapolation in gamma (Neville at gamma = 0)
    h = np.array(gammas)
    est = table.copy()
    for lev in range(1, len(h)):
        for i in range(len(h) - lev):
            est[i] = (h[i + lev] * est[i] - h[i] * est[i + 1]) / (h[i + lev] - h[i])
    extrap = dict(zip(powers, est[0]))
    tv = np.array([complex(target.get(n, 0)) for n in powers])
    err = float(np.max(np.abs(est[0] - tv)))
    dev = [float(np.max(np.abs(row - tv))) for row in table]
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(h), np.log(np.maximum(dev, 1e-300)), 1)[0]) if len(h) > 1 else float("nan")
    return LimitReport(k, gammas, per, extrap, dict(target), err, slope, dev)
