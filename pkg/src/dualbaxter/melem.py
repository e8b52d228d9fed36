"""Antisymmetric polynomial forms and matrix elements between two eigenstates.

A term with sorted labels (l_1, ..., l_m) stands for det[l_i(z_j)], so the
g-fold integral against prod_j Q(zeta_j) Q'(zeta_j) collapses (Andreief) to
g! det[<l_i | L_j>].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .deform import DeformContext, QuadOptions, pairing_reg, real_nodes, _Pieces
from .errors import ContractError
from .polyalg import LaurentPoly

__all__ = [
    "WedgeForm",
    "ObservableSpec",
    "wedge",
    "matrix_element",
    "brute_force_element",
    "kernel_relation_residuals",
    "KernelReport",
    "c_form",
    "d_form",
    "random_form",
]


def _label_key(lab):
    if isinstance(lab, (int, np.integer)):
        return (0, int(lab), ())
    if isinstance(lab, LaurentPoly):
        return (1, 0, tuple(sorted((n, c.real, c.imag) for n, c in lab.coefficients.items())))
    raise ContractError(f"label must be a basis index or a LaurentPoly, got {type(lab).__name__}")


def _sort_labels(labels):
    """(sign, sorted labels); sign 0 when two labels coincide."""
    keys = [_label_key(l) for l in labels]
    if len(set(keys)) < len(keys):
        return 0, ()
    order = sorted(range(len(labels)), key=lambda i: keys[i])
    # parity of the sorting permutation
    sign, seen = 1, [False] * len(order)
    for i in range(len(order)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign, tuple(labels[i] for i in order)


@dataclass(frozen=True)
class WedgeForm:
    """Linear combination of sorted label lists on one side ('z' or 'Z')."""

    degree: int
    terms: tuple = ()
    side: str = "z"

    @classmethod
    def make(cls, terms, side="z", degree=None):
        acc = {}
        store = {}
        for coef, labels in terms:
            labels = tuple(labels)
            if degree is None:
                degree = len(labels)
            if len(labels) != degree:
                raise ContractError("all terms of a form must have the same degree")
            for lab in labels:
                if isinstance(lab, LaurentPoly) and abs(lab.coefficient(0)) > 0:
                    raise ContractError("constituent polynomials must vanish at 0")
            sign, srt = _sort_labels(labels)
            if sign == 0 or coef == 0:
                continue
            key = tuple(_label_key(l) for l in srt)
            acc[key] = acc.get(key, 0) + sign * complex(coef)
            store[key] = srt
        out = tuple((c, store[k]) for k, c in sorted(acc.items()) if c != 0)
        return cls(degree if degree is not None else 0, out, side)

    @classmethod
    def basis(cls, *labels, side="z"):
        return cls.make([(1.0, labels)], side)

    def __add__(self, other):
        self._compatible(other)
        return WedgeForm.make(list(self.terms) + list(other.terms), self.side, self.degree)

    def __rmul__(self, s):
        return WedgeForm.make([(s * c, l) for c, l in self.terms], self.side, self.degree)

    __mul__ = __rmul__

    def __neg__(self):
        return (-1) * self

    def __sub__(self, other):
        return self + (-other)

    def _compatible(self, other):
        if self.side != other.side:
            raise ContractError("forms live on different sides")

    def is_zero(self):
        return not self.terms

    def evaluate(self, points, dctx: DeformContext):
        """Value at variables zeta_1..zeta_m (determinant of label polynomials)."""
        if len(points) != self.degree:
            raise ContractError("need one point per variable")
        alg = dctx.side(self.side)
        tot = 0j
        for c, labels in self.terms:
            polys = [alg.s(l) if not isinstance(l, LaurentPoly) else l for l in labels]
            M = np.array([[p(dctx.to_side(self.side, x)) for x in points] for p in polys])
            tot += c * np.linalg.det(M)
        return tot

    def to_json(self):
        enc = lambda l: int(l) if not isinstance(l, LaurentPoly) else l.to_json()
        return {"side": self.side, "degree": self.degree,
                "terms": [[[c.real, c.imag], [enc(l) for l in labels]] for c, labels in self.terms]}

    @classmethod
    def from_json(cls, d, side=None):
        side = side or (d.get("side", "z") if isinstance(d, dict) else "z")
        terms = d["terms"] if isinstance(d, dict) else d
        out = []
        for coef, labels in terms:
            c = complex(*coef) if isinstance(coef, (list, tuple)) else complex(coef)
            labs = [l if isinstance(l, int) else LaurentPoly.from_json(l) for l in labels]
            out.append((c, labs))
        deg = d.get("degree") if isinstance(d, dict) else None
        return cls.make(out, side, deg)


def wedge(h: WedgeForm, hp: WedgeForm) -> WedgeForm:
    """h ^ h' in the sorted-label convention (no factorial weights)."""
    h._compatible(hp)
    terms = [(c1 * c2, tuple(l1) + tuple(l2)) for c1, l1 in h.terms for c2, l2 in hp.terms]
    return WedgeForm.make(terms, h.side, h.degree + hp.degree)


def c_form(g: int, side="z") -> WedgeForm:
    """sum_j s_j ^ s_-j."""
    return WedgeForm.make([(1.0, (j, -j)) for j in range(1, g + 1)], side, 2)


def d_form(dctx: DeformContext, side="z") -> WedgeForm:
    """sum_j (t_j - t'_j) s_-j (dual traces on the Z side)."""
    a, b = (dctx.t, dctx.t_prime) if side == "z" else (dctx.T, dctx.T_prime)
    terms = [(a.coefficients[j - 1] - b.coefficients[j - 1], (-j,)) for j in range(1, dctx.g + 1)]
    return WedgeForm.make(terms, side, 1)


def random_form(degree, labels, rng, n_terms=3, side="z") -> WedgeForm:
    """Random combination of sorted label subsets (empty form for degree 0 is the unit)."""
    if degree == 0:
        return WedgeForm.make([(1.0, ())], side, 0)
    subsets = list(itertools.combinations(labels, degree))
    pick = rng.choice(len(subsets), size=min(n_terms, len(subsets)), replace=False)
    return WedgeForm.make([(complex(rng.normal(), rng.normal()), subsets[i]) for i in pick], side, degree)


@dataclass
class ObservableSpec:
    h: WedgeForm
    H: WedgeForm
    p_L: object = None            # callables on trace coefficient tuples; None means 1
    p_R: object = None
    P_L: object = None
    P_R: object = None

    def prefactor(self, dctx: DeformContext):
        val = 1.0
        for f, tr in ((self.p_L, dctx.t), (self.p_R, dctx.t_prime), (self.P_L, dctx.T), (self.P_R, dctx.T_prime)):
            if f is not None:
                val *= f(tr.free)
        return val

    @classmethod
    def from_json(cls, d):
        polys = {}
        for key in ("pL", "pR", "PL", "PR"):
            entry = d.get(key)
            polys[key] = None if entry is None else _monomial_poly(entry)
        return cls(WedgeForm.from_json(d["h"], "z"), WedgeForm.from_json(d["H"], "Z"),
                   polys["pL"], polys["pR"], polys["PL"], polys["PR"])


def _monomial_poly(terms_in):
    """[[coef, [e_1..e_g]], ...] -> callable on (t_1..t_g)."""
    terms = [(complex(*c) if isinstance(c, (list, tuple)) else complex(c), tuple(e)) for c, e in terms_in]

    def f(x):
        return sum(c * math.prod(xi ** ei for xi, ei in zip(x, e)) for c, e in terms)
    return f


def _pairing_table(h, H, dctx, pair):
    lab_z = {l for _, ls in h.terms for l in ls if not isinstance(l, LaurentPoly)}
    lab_Z = {l for _, ls in H.terms for l in ls if not isinstance(l, LaurentPoly)}
    if any(isinstance(l, LaurentPoly) for _, ls in h.terms + H.terms for l in ls):
        raise ContractError("matrix elements are implemented on the s-basis labels")
    return {(a, b): pair(a, b) for a in lab_z for b in lab_Z}


def matrix_element(obs: ObservableSpec, dctx: DeformContext, pair=None, **pair_kw) -> complex:
    """prefactor * sum_terms c c' g! det[<l_i | L_j>]."""
    h, H = obs.h, obs.H
    if h.side != "z" or H.side != "Z":
        raise ContractError("h must be a z-side form and H a Z-side form")
    if h.degree != H.degree:
        raise ContractError("h and H must have the same degree")
    pair = pair or (lambda a, b: pairing_reg(a, b, dctx, **pair_kw))
    table = _pairing_table(h, H, dctx, pair)
    m = h.degree
    tot = 0j
    for c1, l1 in h.terms:
        for c2, l2 in H.terms:
            M = np.array([[table[(a, b)] for b in l2] for a in l1]).reshape(m, m)
            tot += c1 * c2 * math.factorial(m) * (np.linalg.det(M) if m else 1.0)
    return obs.prefactor(dctx) * tot


def brute_force_element(obs: ObservableSpec, dctx: DeformContext, opts: QuadOptions | None = None) -> complex:
    """Literal m-fold tensor quadrature of h H prod Q Q' (plain, convergent integrands only)."""
    opts = opts or QuadOptions()
    h, H = obs.h, obs.H
    m = h.degree
    if m > 2:
        raise ContractError("brute-force oracle limited to two variables")
    P = _Pieces(dctx, -1, -1)
    lo = P.lower_cutoff(opts)
    hi = _plain_upper(h, H, dctx)
    nodes, weights = real_nodes(lo, hi, P.kappa, opts, P.breaks)
    F = P.F(nodes + 0j)
    zvals = {}
    for alg_side, form in (("z", h), ("Z", H)):
        alg = dctx.side(alg_side)
        for _, labels in form.terms:
            for l in labels:
                zvals[(alg_side, l)] = alg.s(l)(dctx.to_side(alg_side, nodes + 0j))
    tot = 0j
    for c1, l1 in h.terms:
        for c2, l2 in H.terms:
            if m == 1:
                f = zvals[("z", l1[0])] * zvals[("Z", l2[0])]
                tot += c1 * c2 * np.sum(weights * F * f)
            else:
                a = [zvals[("z", l)] for l in l1]
                b = [zvals[("Z", l)] for l in l2]
                hz = np.outer(a[0], a[1]) - np.outer(a[1], a[0])
                HZ = np.outer(b[0], b[1]) - np.outer(b[1], b[0])
                W = np.outer(weights * F, weights * F)
                tot += c1 * c2 * np.sum(W * hz * HZ)
    return obs.prefactor(dctx) * tot


def _plain_upper(h, H, dctx):
    g, gam = dctx.g, dctx.ctx.gamma
    dz = max(dctx.z_side.s(l).degree() for _, ls in h.terms for l in ls)
    dZ = max(dctx.Z_side.s(l).degree() for _, ls in H.terms for l in ls)
    rate = 2 * (g + 1) * (1 + math.pi / gam) - 2 * dz - 2 * math.pi / gam * dZ
    if rate <= 0:
        raise ContractError("brute-force oracle needs a convergent configuration")
    return 2.0 + min(45.0 / rate + 1.0, 40.0)


@dataclass
class KernelReport:
    seed: int
    residuals: dict = field(default_factory=dict)      # name -> list of normalized residuals
    tolerance: float = 1e-6

    @property
    def max(self):
        vals = [v for vs in self.residuals.values() for v in vs]
        return max(vals) if vals else 0.0

    @property
    def passed(self):
        return self.max < self.tolerance

    def as_dict(self):
        return {"seed": self.seed, "tolerance": self.tolerance, "max": self.max, "residuals": self.residuals}


def kernel_relation_residuals(dctx: DeformContext, count=10, seed=20261014, tolerance=1e-6, **pair_kw) -> KernelReport:
    """Report keys: eq1 for s_k^w with k >= g+1, eq2 for c^w, eq3 for d^w, each against random Z-side forms.

    Each residual is |<h|H>| divided by the same element with the distinguished
    factor replaced by a unit-coefficient basis label of matching degree.
    """
    g = dctx.g
    rng = np.random.default_rng(seed)
    basis = [k for k in range(-g, g + 1) if k != 0]
    cache = {}

    def pair(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = pairing_reg(a, b, dctx, **pair_kw)
        return cache[(a, b)]

    def element(h, H):
        return matrix_element(ObservableSpec(h, H), dctx, pair=pair)

    def scaled(h, ref, H):
        num = abs(element(h, H))
        den = abs(element(ref, H))
        return num / den if den > 0 else num

    out = {"eq1": [], "eq2": [], "eq3": []}
    for _ in range(count):
        H = random_form(g, basis, rng, side="Z")
        w = random_form(g - 1, basis, rng)
        for kk in range(g + 1, g + 3):
            h = wedge(WedgeForm.basis(kk), w)
            ref = wedge(WedgeForm.basis(-1), w) if not wedge(WedgeForm.basis(-1), w).is_zero() else WedgeForm.basis(*basis[:g])
            if not h.is_zero():
                out["eq1"].append(scaled(h, ref, H))
        d = d_form(dctx)
        if not d.is_zero():
            h = wedge(d, w)
            if not h.is_zero():
                out["eq3"].append(scaled(h, WedgeForm.basis(*basis[:g]), H))
        elif g >= 1:
            out["eq3"].append(0.0)
        if g >= 2:
            w2 = random_form(g - 2, basis, rng)
            h = wedge(c_form(g), w2)
            if not h.is_zero():
                out["eq2"].append(scaled(h, WedgeForm.basis(*basis[:g]), H))
    return KernelReport(seed, out, tolerance)
