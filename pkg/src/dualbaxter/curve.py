"""Hyperelliptic curve w^2 - t(z) w + 1 = 0, i.e. y^2 = t(z)^2 - 4 with y = 2w - t.

On the sheet containing infinity+ we use the branch

    y(z) = prod_i sqrt(z - q_i)          (principal square roots)

which is analytic off the cuts [q_1, q_2], [q_3, q_4], ... for real branch
points and behaves like +z^(g+1) at infinity.  Real-line integrals are taken
on the upper edge (z + i0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguityError, ContourError, ContractError, DegeneracyError
from .polyalg import LaurentPoly, TraceData, truncate

__all__ = [
    "HyperellipticCurve",
    "Cycle",
    "Differential",
    "branch_points",
    "mu_differential",
    "exact_differential",
    "cycle_period",
    "a_cycle",
    "b_cycle",
    "infinity_cycle",
    "normalized_periods",
    "residue_pairing",
    "residue_at_infinity",
    "period_pairing",
]

DEGENERACY_TOLERANCE = 1e-10


def _polyval(coeffs: dict, z):
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    for n, c in coeffs.items():
        out = out + c * z ** n
    return out


def branch_points(trace: TraceData):
    """Sorted roots of t(z)^2 - 4 and flags (admissible, degenerate)."""
    disc = np.polynomial.polynomial.polymul(trace.ascending(), trace.ascending())
    disc[0] -= 4
    roots = np.polynomial.polynomial.polyroots(disc)
    dp = np.polynomial.polynomial.polyder(disc)
    polished = []
    for r in roots:
        d = np.polynomial.polynomial.polyval(r, dp)
        if abs(d) > 1e-300:
            r = r - np.polynomial.polynomial.polyval(r, disc) / d
        polished.append(complex(r))
    roots = np.array(sorted(polished, key=lambda r: (round(r.real, 12), r.imag)))
    # exact zero: t_(g+1)^2 = 4 makes z = 0 a root
    i0 = int(np.argmin(np.abs(roots)))
    if abs(roots[i0]) < 1e-9:
        roots[i0] = 0.0
    dist = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(dist, np.inf)
    sep = np.min(dist)
    big = max(1.0, float(np.max(np.abs(roots))))
    # a double root splits like sqrt(eps) under rounding, so also test disc'
    scale = np.sum(np.abs(disc)) * big ** (len(disc) - 2)
    slope = np.abs(np.polynomial.polynomial.polyval(roots, dp)) / scale
    degenerate = bool(sep < DEGENERACY_TOLERANCE * big or np.min(slope) < 1e-7)
    real = bool(np.all(np.abs(roots.imag) < 1e-9 * max(1.0, np.max(np.abs(roots)))))
    if real:
        roots = roots.real.astype(complex)
    admissible = real and not degenerate and bool(np.all(roots.real >= -1e-12))
    return roots, admissible, degenerate


@dataclass(frozen=True)
class HyperellipticCurve:
    trace: TraceData
    branch_points: np.ndarray = field(init=False, compare=False)
    admissible: bool = field(init=False, compare=False)
    degenerate: bool = field(init=False, compare=False)

    def __post_init__(self):
        bp, adm, deg = branch_points(self.trace)
        object.__setattr__(self, "branch_points", bp)
        object.__setattr__(self, "admissible", adm)
        object.__setattr__(self, "degenerate", deg)

    @property
    def genus(self):
        return self.trace.genus

    @property
    def discriminant(self) -> LaurentPoly:
        t = self.trace.poly()
        return t * t - 4.0

    def y(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        for q in self.branch_points:
            out = out * np.sqrt(z - q + 0j)
        return out

    def require_periods(self):
        if self.degenerate:
            raise DegeneracyError("coinciding branch points")
        if not np.all(np.abs(self.branch_points.imag) == 0):
            raise ContourError("period contours are implemented for real branch points")


@dataclass(frozen=True)
class Differential:
    """numerator(z) dz / y; numerator given as {exponent: coefficient}."""

    numerator: tuple            # sorted ((n, c), ...)

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(sorted((int(n), complex(c)) for n, c in d.items() if c != 0)))

    @property
    def coefficients(self):
        return dict(self.numerator)

    def __call__(self, z):
        return _polyval(self.coefficients, z)

    def __add__(self, other):
        c = self.coefficients
        for n, v in other.coefficients.items():
            c[n] = c.get(n, 0) + v
        return Differential.from_dict(c)

    def __mul__(self, s):
        return Differential.from_dict({n: v * s for n, v in self.numerator})

    __rmul__ = __mul__


def _poly_dict(p: LaurentPoly):
    return {n: c for n, c in p.coefficients.items()}


def mu_differential(k: int, curve: HyperellipticCurve) -> Differential:
    """Basis differential: z^(g+k) dz/y for k <= 0, [y d/dz(z^(k-g-1) y)]_>= dz/y for k >= 1.

    Uses y y' = t t', so the bracket is the Laurent polynomial
    (k-g-1) z^(k-g-2) (t^2 - 4) + z^(k-g-1) t t'.
    """
    g = curve.genus
    if k < -g:
        raise ContractError(f"k must be >= -g = {-g}")
    if k <= 0:
        return Differential.from_dict({g + k: 1.0})
    t = _poly_dict(curve.trace.poly())
    disc = _poly_dict(curve.discriminant)
    dt = {n - 1: n * c for n, c in t.items() if n}
    acc = {}
    m = k - g - 1
    for n, c in disc.items():
        acc[n + m - 1] = acc.get(n + m - 1, 0) + m * c
    for n1, c1 in t.items():
        for n2, c2 in dt.items():
            e = n1 + n2 + m
            acc[e] = acc.get(e, 0) + c1 * c2
    return Differential.from_dict({n: c for n, c in acc.items() if n >= 0})


def exact_differential(m: int, curve: HyperellipticCurve) -> Differential:
    """d(z^m y) written as numerator dz / y."""
    t = _poly_dict(curve.trace.poly())
    disc = _poly_dict(curve.discriminant)
    dt = {n - 1: n * c for n, c in t.items() if n}
    acc = {}
    for n, c in disc.items():
        if m:
            acc[n + m - 1] = acc.get(n + m - 1, 0) + m * c
    for n1, c1 in t.items():
        for n2, c2 in dt.items():
            acc[n1 + n2 + m] = acc.get(n1 + n2 + m, 0) + c1 * c2
    return Differential.from_dict(acc)


# ---------------------------------------------------------------------------
# cycles and periods
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Cycle:
    """Cycle as a weighted sum of upper-edge segments between branch points.

    ``segments`` holds (i, j, weight): weight * int_{q_i}^{q_j} numerator/y(x+i0) dx
    on the infinity+ sheet (0-based branch point indices).  ``residue_weight``
    adds weight * 2 pi i res_(inf+) for the cycle around the puncture.
    """

    kind: str
    index: int
    segments: tuple = ()
    residue_weight: complex = 0.0

    def reversed(self):
        return Cycle(self.kind, self.index, tuple((i, j, -w) for i, j, w in self.segments),
                     -self.residue_weight)

    def __add__(self, other):
        return Cycle("sum", 0, self.segments + other.segments, self.residue_weight + other.residue_weight)


def a_cycle(j: int, curve: HyperellipticCurve) -> Cycle:
    """delta_(-j): counter-clockwise loop around the cut [q_(2j-1), q_(2j)]."""
    g = curve.genus
    if not 1 <= j <= g:
        raise ContractError("a-cycle index must be in 1..g")
    # lower edge (y -> -y) left to right plus upper edge right to left
    return Cycle("a_cycle", -j, ((2 * j - 2, 2 * j - 1, -2.0),))


def b_cycle(j: int, curve: HyperellipticCurve) -> Cycle:
    """delta_j: from the cut I_j to the last cut on one sheet, back on the other.

    Orientation fixed so that the a/b intersection number is +1, which makes
    Im B positive definite.  Over an intermediate cut the outgoing and the
    returning pass cancel, so only the gaps between cuts contribute; keeping
    either edge of such a cut would add a loop around it.
    """
    g = curve.genus
    if not 1 <= j <= g:
        raise ContractError("b-cycle index must be in 1..g")
    return Cycle("b_cycle", j, tuple((m, m + 1, -2.0) for m in range(2 * j - 1, 2 * g, 2)))


def infinity_cycle(curve: HyperellipticCurve) -> Cycle:
    """delta_0: small positive loop around infinity+."""
    return Cycle("infinity_cycle", 0, (), 1.0)


def _segment_integral(diff: Differential, curve: HyperellipticCurve, i, j, nodes=None):
    """int_{q_i}^{q_j} numerator / y(x + i0) dx with q_i, q_j branch points.

    x = mid + half cos(theta) removes both inverse square roots; the remaining
    integrand is smooth and periodic, so Gauss-Chebyshev converges geometrically.
    """
    q = curve.branch_points.real
    lo, hi = (i, j) if q[i] <= q[j] else (j, i)
    sign = 1.0 if q[i] <= q[j] else -1.0
    a, b = q[lo], q[hi]
    others = [qq for k, qq in enumerate(q) if k not in (lo, hi)]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    # nodes: endpoint distance to the nearest other branch point fixes the rate
    gapn = min([abs(o - a) for o in others] + [abs(o - b) for o in others] + [b - a])
    rho = 1 + gapn / max(half, 1e-300)
    n = nodes or int(min(4000, max(64, 40 / math.log(rho) + 32)))
    th = (np.arange(n) + 0.5) * math.pi / n
    x = mid + half * np.cos(th)
    rest = np.ones(n, dtype=complex)
    for o in others:
        rest = rest * np.sqrt(x - o + 0j)
    # y(x+i0) = rest * sqrt(x-a) * sqrt(x-b+i0) = rest * i sqrt((x-a)(b-x))
    vals = diff(x) / (1j * rest)
    return sign * complex(np.sum(vals) * math.pi / n)


def cycle_period(diff: Differential, cyc: Cycle, curve: HyperellipticCurve) -> complex:
    curve.require_periods()
    total = 0j
    q = curve.branch_points.real
    for i, j, w in cyc.segments:
        # split at interior branch points so every piece has singularities only at its ends
        lo, hi = sorted((i, j), key=lambda m: q[m])
        chain = sorted((m for m in range(len(q)) if q[lo] <= q[m] <= q[hi]), key=lambda m: q[m])
        sign = 1.0 if q[i] <= q[j] else -1.0
        for a, b in zip(chain, chain[1:]):
            total += sign * w * _segment_integral(diff, curve, a, b)
    if cyc.residue_weight:
        total += cyc.residue_weight * 2j * math.pi * residue_at_infinity(diff, curve)
    return complex(total)


def normalized_periods(curve: HyperellipticCurve):
    """(C, B): omega_j = sum_i C[j, i] mu_(-(i+1)), a-periods of omega = identity, B_ij = int_(delta_i) omega_j."""
    curve.require_periods()
    g = curve.genus
    basis = [mu_differential(-(i + 1), curve) for i in range(g)]
    A = np.array([[cycle_period(basis[m], a_cycle(i + 1, curve), curve) for m in range(g)] for i in range(g)])
    Bm = np.array([[cycle_period(basis[m], b_cycle(i + 1, curve), curve) for m in range(g)] for i in range(g)])
    if abs(np.linalg.det(A)) < 1e-14 * max(1.0, np.max(np.abs(A))) ** g:
        raise DegeneracyError("singular a-period matrix")
    # A[i, m] = a_i(mu_m); want a_i(omega_j) = delta_ij with omega_j = sum_m C[j, m] mu_m
    C = np.linalg.solve(A, np.eye(g)).T
    B = Bm @ C.T
    return C, B


# ---------------------------------------------------------------------------
# local expansion at infinity+
# ---------------------------------------------------------------------------
def _inv_y_series(curve: HyperellipticCurve, order: int):
    """Power series R(s) with 1/y = s^(g+1) R(s), s = 1/z, on the infinity+ sheet."""
    g = curve.genus
    co = np.array((1.0,) + curve.trace.coefficients, dtype=complex)      # tau(s) = t(1/s) s^(g+1)
    tau = np.zeros(order, dtype=complex)
    tau[:len(co)] = co[:order]
    # y^2 s^(2g+2) = tau^2 - 4 s^(2g+2)
    ys2 = np.zeros(order, dtype=complex)
    sq = np.polynomial.polynomial.polymul(tau, tau)[:order]
    ys2[:len(sq)] = sq
    if 2 * g + 2 < order:
        ys2[2 * g + 2] -= 4
    # sqrt of series with leading 1, then reciprocal
    r = np.zeros(order, dtype=complex)
    r[0] = 1.0
    for m in range(1, order):
        r[m] = (ys2[m] - np.dot(r[1:m], r[m - 1:0:-1])) / 2
    inv = np.zeros(order, dtype=complex)
    inv[0] = 1.0
    for m in range(1, order):
        inv[m] = -np.dot(r[1:m + 1], inv[m - 1::-1][:m])
    return inv


def _local_series(diff: Differential, curve: HyperellipticCurve, order: int):
    """(offset, coeffs): diff = sum_m coeffs[m] s^(offset+m) ds near infinity+."""
    g = curve.genus
    R = _inv_y_series(curve, order)
    deg = max(n for n, _ in diff.numerator) if diff.numerator else 0
    # N(1/s) = s^(-deg) * sum_n c_n s^(deg - n)
    num = np.zeros(deg - min(0, min((n for n, _ in diff.numerator), default=0)) + 1, dtype=complex)
    for n, c in diff.numerator:
        num[deg - n] += c
    prod = np.zeros(order, dtype=complex)
    pr = np.polynomial.polynomial.polymul(num, R)[:order]
    prod[:len(pr)] = pr
    # dz = -ds / s^2
    return -deg + g + 1 - 2, -prod


def residue_at_infinity(diff: Differential, curve: HyperellipticCurve, order: int = 64) -> complex:
    off, c = _local_series(diff, curve, order)
    m = -1 - off
    return complex(c[m]) if 0 <= m < len(c) else 0j


def residue_pairing(d1: Differential, d2: Differential, curve: HyperellipticCurve, order: int = 64) -> complex:
    """res_(inf+) ( d1 * int d2 ), antiderivative taken without constant term."""
    o1, c1 = _local_series(d1, curve, order)
    o2, c2 = _local_series(d2, curve, order)
    log_coeff = c2[-1 - o2] if 0 <= -1 - o2 < len(c2) else 0
    # antiderivative of d2: sum c2[m] s^(o2+m+1)/(o2+m+1), skipping the log term
    prim = {}
    for m, c in enumerate(c2):
        e = o2 + m + 1
        if e != 0:
            prim[e] = c / e
    if abs(log_coeff) > 1e-13 and o1 < -1 and np.any(np.abs(c1[: -1 - o1]) > 1e-13):
        raise AmbiguityError("logarithmic antiderivative meets a pole of the first differential",
                             values=(complex(log_coeff), 0j))
    res = 0j
    for m, c in enumerate(c1):
        e1 = o1 + m
        e2 = -1 - e1
        if e2 in prim:
            res += c * prim[e2]
    return complex(res)


def period_pairing(d1: Differential, d2: Differential, curve: HyperellipticCurve) -> complex:
    """Residue-free pairing through periods: sum_j (A_j(d2) B_j(d1) - B_j(d2) A_j(d1)) / (4 pi i).

    Both punctures contribute equally, hence 4 pi i rather than 2 pi i.
    """
    g = curve.genus
    out = 0j
    for j in range(1, g + 1):
        a, b = a_cycle(j, curve), b_cycle(j, curve)
        out += (cycle_period(d2, a, curve) * cycle_period(d1, b, curve)
                - cycle_period(d2, b, curve) * cycle_period(d1, a, curve))
    return complex(out / (4j * math.pi))
