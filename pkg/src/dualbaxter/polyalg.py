"""Laurent polynomials in z = e^(2 zeta) (or Z = e^(2 pi zeta / gamma)) with
polynomial dependence on zeta, and the shift calculus acting on them.

A term ``(j, n) -> c`` stands for ``c * zeta**j * x**n`` where ``x`` is the
variable of the polynomial.  Shifting zeta by ``i xi`` multiplies ``x**n`` by
``exp(i n rate xi)``, where ``rate`` is 2 for z and 2 pi / gamma for Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ContractError, NotInvertibleError, RangeError, ResonanceError

__all__ = [
    "Variable",
    "z_variable",
    "Z_variable",
    "LogLaurent",
    "LaurentPoly",
    "TraceData",
    "shift",
    "anti_shift",
    "truncate",
    "eval_at",
    "DROP_TOLERANCE",
]

DROP_TOLERANCE = 1e-14


@dataclass(frozen=True)
class Variable:
    """Exponential variable x = exp(rate * zeta); ``tag`` is 'z' or 'Z'."""

    tag: str
    rate: float

    def of(self, zeta):
        return np.exp(self.rate * np.asarray(zeta, dtype=complex))


def z_variable() -> Variable:
    return Variable("z", 2.0)


def Z_variable(gamma: float) -> Variable:
    return Variable("Z", 2.0 * math.pi / gamma)


def _binom(j, m):
    return math.comb(j, m)


class LogLaurent:
    """Finite sum of c * zeta^j * x^n, immutable."""

    __slots__ = ("var", "terms")

    def __init__(self, terms: Mapping | None = None, var: Variable | None = None, drop=DROP_TOLERANCE):
        var = var or z_variable()
        raw = {}
        for key, c in (terms or {}).items():
            j, n = (0, key) if isinstance(key, (int, np.integer)) else key
            j, n = int(j), int(n)
            if j < 0:
                raise ContractError("zeta powers must be non-negative")
            raw[(j, n)] = raw.get((j, n), 0) + complex(c)
        big = max((abs(c) for c in raw.values()), default=0.0)
        cut = drop * big
        self.terms = {k: c for k, c in sorted(raw.items()) if abs(c) > cut and c != 0}
        self.var = var
        self._validate()

    def _validate(self):
        pass

    # -- constructors ---------------------------------------------------------
    @classmethod
    def monomial(cls, n, c=1.0, var=None, zeta_power=0):
        return LogLaurent({(zeta_power, n): c}, var)

    @classmethod
    def constant(cls, c, var=None):
        return LogLaurent({(0, 0): c}, var)

    def _new(self, terms, drop=DROP_TOLERANCE):
        if all(j == 0 for j, _ in terms):
            return LaurentPoly({n: c for (_, n), c in terms.items()}, self.var, drop=drop)
        return LogLaurent(terms, self.var, drop=drop)

    # -- structure ---------------------------------------------------------
    @property
    def zeta_degree(self) -> int:
        return max((j for j, _ in self.terms), default=0)

    @property
    def exponents(self):
        return sorted({n for _, n in self.terms})

    def degree(self) -> int:
        if not self.terms:
            return -10**9
        return max(n for _, n in self.terms)

    def lowest(self) -> int:
        if not self.terms:
            return 10**9
        return min(n for _, n in self.terms)

    def coefficient(self, n, zeta_power=0) -> complex:
        return self.terms.get((zeta_power, n), 0j)

    def zeta_part(self, j) -> "LaurentPoly":
        return LaurentPoly({n: c for (jj, n), c in self.terms.items() if jj == j}, self.var)

    def is_zero(self):
        return not self.terms

    def _check_var(self, other):
        if other.var != self.var:
            raise ContractError(f"variable mismatch: {self.var} vs {other.var}")

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            other = LogLaurent.constant(other, self.var)
        self._check_var(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self._new({k: c * other for k, c in self.terms.items()})
        self._check_var(other)
        out = {}
        for (j1, n1), c1 in self.terms.items():
            for (j2, n2), c2 in other.terms.items():
                key = (j1 + j2, n1 + n2)
                out[key] = out.get(key, 0) + c1 * c2
        return self._new(out)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    def times_monomial(self, n):
        return self._new({(j, m + n): c for (j, m), c in self.terms.items()})

    def scale_argument(self, factor):
        """f(x) -> f(factor * x) on the x-dependence (zeta powers untouched)."""
        return self._new({(j, n): c * factor ** n for (j, n), c in self.terms.items()})

    def shifted(self, xi):
        """f(zeta + i xi) as a new element (xi may be any complex number)."""
        out = {}
        w = self.var.rate
        for (j, n), c in self.terms.items():
            ph = c * np.exp(1j * n * w * xi)
            iz = 1j * xi
            for m in range(j + 1):
                key = (m, n)
                out[key] = out.get(key, 0) + ph * _binom(j, m) * iz ** (j - m)
        return self._new(out)

    # -- numerics ----------------------------------------------------------
    def __call__(self, zeta):
        return eval_at(self, zeta)

    def max_abs(self):
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def close_to(self, other, tol=1e-12):
        d = self - other
        scale = max(self.max_abs(), other.max_abs(), 1e-300)
        return d.max_abs() <= tol * scale

    def to_json(self):
        return {f"{j},{n}": [c.real, c.imag] for (j, n), c in self.terms.items()}

    def __eq__(self, other):
        return isinstance(other, LogLaurent) and self.var == other.var and self.terms == other.terms

    def __hash__(self):
        return hash((self.var, tuple(self.terms.items())))

    def __repr__(self):
        parts = []
        x = self.var.tag
        for (j, n), c in self.terms.items():
            zs = f"*zeta^{j}" if j else ""
            parts.append(f"({c:.6g}){zs}*{x}^{n}")
        return " + ".join(parts) or "0"


class LaurentPoly(LogLaurent):
    """Laurent polynomial with no zeta dependence."""

    __slots__ = ()

    def __init__(self, coefficients: Mapping | None = None, var: Variable | None = None, drop=DROP_TOLERANCE):
        terms = {}
        for key, c in (coefficients or {}).items():
            if isinstance(key, tuple):
                if key[0] != 0:
                    raise ContractError("LaurentPoly cannot carry zeta powers")
                key = key[1]
            terms[(0, int(key))] = c
        super().__init__(terms, var, drop=drop)

    @property
    def coefficients(self):
        return {n: c for (_, n), c in self.terms.items()}

    @classmethod
    def from_ascending(cls, coeffs, var=None, start=0):
        return LaurentPoly({start + i: c for i, c in enumerate(coeffs)}, var)

    def leading(self) -> complex:
        return self.coefficient(self.degree())

    def to_json(self):
        return {str(n): [c.real, c.imag] for n, c in self.coefficients.items()}

    @classmethod
    def from_json(cls, data, var=None):
        return LaurentPoly({int(k): complex(v[0], v[1]) for k, v in data.items()}, var)


def shift(f: LogLaurent, xi: float, mode: str = "Delta") -> LogLaurent:
    """delta_xi f = f(zeta + i xi) - f(zeta) or Delta_xi f = f(zeta + i xi) - f(zeta - i xi)."""
    if mode == "delta":
        return f.shifted(xi) - f
    if mode == "Delta":
        return f.shifted(xi) - f.shifted(-xi)
    raise ContractError(f"unknown shift mode {mode!r}")


def _resonance_guard(n, theta, tol):
    s = math.sin(theta)
    if abs(s) <= tol:
        raise ResonanceError(f"resonant exponent n={n}: |sin(n*rate*xi)|={abs(s):.3g}", order=n)


def anti_shift(f: LogLaurent, xi: float, secular: bool = False, resonance_tolerance: float = 1e-10) -> LogLaurent:
    """Solve Delta_xi g = f.

    Terms zeta^j x^n with n != 0 are inverted by a triangular solve in the
    zeta powers.  Pure powers zeta^j (n = 0) map to a polynomial of degree
    j+1 without constant term; this is only allowed when ``secular`` is set,
    otherwise any n = 0 term raises :class:`NotInvertibleError`.
    """
    w = f.var.rate
    by_exp = {}
    for (j, n), c in f.terms.items():
        by_exp.setdefault(n, {})[j] = c
    out = {}
    ix = 1j * xi
    for n, poly in by_exp.items():
        top = max(poly)
        if n == 0:
            if not secular:
                raise NotInvertibleError("anti-shift of a function with a constant (x^0) component")
            # g = sum_{m=1}^{top+1} b_m zeta^m, Delta(zeta^m) = sum_r C(m,r) zeta^r (ix)^(m-r) (1-(-1)^(m-r))
            rhs = dict(poly)
            b = {}
            for m in range(top + 1, 0, -1):
                r = m - 1
                lead = 2 * m * ix
                b[m] = rhs.get(r, 0) / lead
                for rr in range(r + 1):
                    d = m - rr
                    if d % 2 == 1:
                        rhs[rr] = rhs.get(rr, 0) - b[m] * _binom(m, rr) * ix ** d * 2
            for m, c in b.items():
                out[(m, 0)] = out.get((m, 0), 0) + c
            continue
        theta = n * w * xi
        _resonance_guard(n, theta, resonance_tolerance)
        ep, em = np.exp(1j * theta), np.exp(-1j * theta)
        rhs = dict(poly)
        b = {}
        for m in range(top, -1, -1):
            lead = ep - em
            b[m] = rhs.get(m, 0) / lead
            # subtract contribution of b_m zeta^m x^n to lower zeta powers
            for r in range(m):
                d = m - r
                contrib = _binom(m, r) * (ep * ix ** d - em * (-ix) ** d)
                rhs[r] = rhs.get(r, 0) - b[m] * contrib
        for m, c in b.items():
            out[(m, n)] = out.get((m, n), 0) + c
    return f._new(out, drop=0.0)


def truncate(f: LogLaurent, mode: str = "strictly_positive") -> LogLaurent:
    """[f]_> keeps exponents > 0, [f]_>= keeps exponents >= 0."""
    if mode in ("strictly_positive", ">"):
        keep = {k: c for k, c in f.terms.items() if k[1] > 0}
    elif mode in ("non_negative", ">="):
        keep = {k: c for k, c in f.terms.items() if k[1] >= 0}
    else:
        raise ContractError(f"unknown truncation mode {mode!r}")
    return f._new(keep)


def eval_at(f: LogLaurent, zeta, ctx=None):
    """Numeric value of f at zeta (array-friendly)."""
    z = np.asarray(zeta, dtype=complex)
    logx = f.var.rate * z
    big = np.max(np.abs(logx.real)) if logx.size else 0.0
    span = max((abs(n) for _, n in f.terms), default=0)
    if span and big * span > 700:
        raise RangeError(f"x^{span} overflows at |Re log x| = {big:.3g}")
    out = np.zeros(z.shape, dtype=complex)
    for (j, n), c in f.terms.items():
        term = c * np.exp(n * logx)
        if j:
            term = term * z ** j
        out = out + term
    return out if out.shape else complex(out)


@dataclass(frozen=True)
class TraceData:
    """Monic trace polynomial x^(g+1) + t_1 x^g + ... + t_(g+1) with t_(g+1) = (-1)^(g+1) 2."""

    coefficients: tuple

    def __post_init__(self):
        co = tuple(complex(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", co)
        g = len(co) - 1
        if g < 1:
            raise ContractError("need g >= 1, i.e. at least t_1 and t_(g+1)")
        if abs(co[-1] - (-1) ** (g + 1) * 2) > 1e-14:
            raise ContractError(f"t_(g+1) must equal (-1)^(g+1)*2 = {(-1) ** (g + 1) * 2}, got {co[-1]}")

    @classmethod
    def from_free(cls, free):
        """Build from t_1..t_g; the last coefficient is pinned."""
        free = tuple(free)
        g = len(free)
        return cls(free + ((-1) ** (g + 1) * 2,))

    @classmethod
    def parse(cls, text):
        """Parse '1,t_1,...,t_(g+1)' (leading monic coefficient included)."""
        vals = [float(v) for v in str(text).replace(" ", "").split(",") if v]
        if len(vals) < 3 or vals[0] != 1.0:
            raise ContractError("trace must be given as '1,t_1,...,t_(g+1)'")
        return cls(tuple(vals[1:]))

    @property
    def genus(self) -> int:
        return len(self.coefficients) - 1

    @property
    def free(self):
        return self.coefficients[:-1]

    @property
    def sign(self) -> int:
        return (-1) ** (self.genus + 1)

    def is_real(self):
        return all(abs(c.imag) == 0 for c in self.coefficients)

    def poly(self, var: Variable | None = None) -> LaurentPoly:
        g = self.genus
        c = {g + 1: 1.0}
        for j, tj in enumerate(self.coefficients, start=1):
            c[g + 1 - j] = tj
        return LaurentPoly(c, var, drop=0.0)

    def ascending(self):
        """numpy.polynomial ordering (constant first)."""
        return np.array(list(reversed(self.coefficients)) + [1.0], dtype=complex)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=complex), self.ascending())

    def to_json(self):
        return [[c.real, c.imag] for c in self.coefficients]

    @classmethod
    def from_json(cls, data):
        return cls(tuple(complex(a, b) for a, b in data))
