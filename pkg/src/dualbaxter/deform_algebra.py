"""Polynomials s_k, completions s_k^-, and the u/v functionals, on one side.

Everything here is expressed in the side's own variables: zeta, x = e^(2 zeta)
and shift step xi (the coupling of that side).  The Z side is the same algebra
in the dual coupling pi^2/gamma evaluated at zeta' = pi zeta / gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .polyalg import LaurentPoly, LogLaurent, TraceData, anti_shift, truncate, Variable

__all__ = ["SideAlgebra", "EXPONENT_READINGS", "NORMALIZATIONS"]

# two readings of the q-power in the constant term of s_k (k >= 1)
EXPONENT_READINGS = ("printed", "corrected")
# "leading": the k-th family (s_k, s_k^-, p_k) rescaled so that s_k has leading
# coefficient (1/(i xi)) (q^k - 1)/(q^k + 1); "appendix": the bare formula
NORMALIZATIONS = ("leading", "appendix")


@dataclass
class SideAlgebra:
    """s_k, u[f], s_k^- and v[f] for traces (t, t') at coupling xi."""

    xi: float
    t: TraceData
    t_prime: TraceData
    var: Variable = field(default=None)
    reading: str = "corrected"
    normalization: str = "leading"
    resonance_tolerance: float = 1e-10
    cancel_tolerance: float = 1e-12

    def __post_init__(self):
        if self.t.genus != self.t_prime.genus:
            raise ContractError("t and t' must have the same genus")
        if self.reading not in EXPONENT_READINGS:
            raise ContractError(f"unknown exponent reading {self.reading!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ContractError(f"unknown normalization {self.normalization!r}")
        if self.var is None:
            self.var = Variable("z", 2.0)
        self.g = self.t.genus
        self.eps = (-1) ** (self.g + 1)
        self.qq = np.exp(1j * self.xi)
        self.tp = self.t.poly(self.var)
        self.tpp = self.t_prime.poly(self.var)
        self._s_cache: dict = {}

    # -- helpers -------------------------------------------------------------
    def inv(self, f, secular=False):
        return anti_shift(f, self.xi, secular=secular, resonance_tolerance=self.resonance_tolerance)

    def pref(self):
        return 1.0 / (2j * self.xi)

    def monomial(self, n, zeta_power=0):
        return LogLaurent.monomial(n, 1.0, self.var, zeta_power)

    def scale(self, k):
        """Factor applied to the whole k-th family (1 for k <= 0)."""
        if k <= 0 or self.normalization == "appendix":
            return 1.0
        # bare formula leads with -tan(k xi)/(2 xi); target tan(k xi/2)/xi
        return -2.0 * math.tan(k * self.xi / 2) / math.tan(k * self.xi)

    def seed(self, k):
        """x^(k-g-1), or zeta x^(-g-1) for k = 0."""
        g = self.g
        if k >= 1:
            return self.monomial(k - g - 1)
        if k == 0:
            return self.monomial(-g - 1, zeta_power=1)
        raise ContractError("seed function defined for k >= 0 only")

    def f_of(self, k):
        """Seed function f of u[f] and v[f], including the family scale."""
        return self.seed(k) * self.scale(k)

    # -- s_k ---------------------------------------------------------------
    def s(self, k: int) -> LaurentPoly:
        if k < -self.g:
            raise ContractError(f"k must be >= -g = {-self.g}")
        if k in self._s_cache:
            return self._s_cache[k]
        g = self.g
        if k <= 0:
            out = LaurentPoly({g + 1 + k: 1.0}, self.var)
        else:
            t, tp = self.tp, self.tpp
            qq = self.qq
            f = self.seed(k)
            fm = f * qq ** (2 * (g + 1 - k))             # f(zeta - i xi)
            pos = lambda h: truncate(h, "strictly_positive")
            body = (t * self.inv(pos(f * t)) + tp * self.inv(pos(f * tp))
                    - t * self.inv(pos(fm * tp.scale_argument(qq ** -2)))
                    - tp * self.inv(pos(fm * t.scale_argument(qq ** -2)))
                    - 0.5 * (tp * pos(f * t) + t * pos(f * tp)))
            if self.reading == "printed":
                c = qq ** (2 * (g + 1 - k) * k) - qq ** (2 * (k - g - 1))
            else:
                c = qq ** (2 * (g + 1 - k)) - qq ** (2 * (k - g - 1))
            body = body + c * pos(f)
            out = body * (self.pref() * self.scale(k))
        self._s_cache[k] = out
        return out

    # -- u[f], v[f] --------------------------------------------------------
    def anti_differences(self, f):
        """(a, b) = (Delta^-1(f t), Delta^-1(f t')), secular branch, no constant term."""
        return self.inv(f * self.tp, secular=True), self.inv(f * self.tpp, secular=True)

    def u(self, f: LogLaurent) -> LogLaurent:
        t, tp = self.tp, self.tpp
        a, b = self.anti_differences(f)
        x = self.xi
        body = (t * a + tp * b - t * b.shifted(-x) - tp * a.shifted(-x)
                - f * t * tp + f.shifted(x) - f.shifted(-x))
        return body * self.pref()

    def s_minus(self, k: int, printed_constant: bool = False) -> LogLaurent:
        """Completion s_k^- with (s_k + s_k^-) Q Q' = p_k(zeta + i xi) - p_k(zeta).

        ``printed_constant`` adds the extra eps*2 at k = 0; that variant breaks
        the telescoping identity and is kept only for comparison.
        """
        if k <= -1:
            return -self.s(k)
        sk, uk = self.s(k), self.u(self.f_of(k))
        out = -sk + uk
        # positive powers cancel between s_k and u[f]; drop the round-off left behind
        scale = max(sk.max_abs(), uk.max_abs())
        out = out._new({key: c for key, c in out.terms.items() if abs(c) > self.cancel_tolerance * scale})
        if k == 0 and printed_constant:
            out = out + self.eps * 2.0
        return out

    def v_parts(self, k: int):
        """Polynomial coefficients (c_mm, c_m0, c_0m, c_00) so that

        p_k = c_mm Q(-)Q'(-) + c_m0 Q(-)Q' + c_0m Q Q'(-) + c_00 Q Q'

        with Q(-) = Q(zeta - i xi).  Zero for k <= -1.
        """
        if k <= -1:
            z = LaurentPoly({}, self.var)
            return z, z, z, z
        f = self.f_of(k)
        a, b = self.anti_differences(f)
        x = self.xi
        e = self.eps
        pr = self.pref()
        c_0m = (e * (a.shifted(-x) - b)) * pr            # Q Q'(-)
        c_m0 = (e * (b.shifted(-x) - a)) * pr            # Q(-) Q'
        c_mm = f * pr                                     # Q(-) Q'(-)
        c_00 = f.shifted(-x) * pr                         # Q Q'
        return c_mm, c_m0, c_0m, c_00

    def p_values(self, k, zeta, q0, qm, qp0, qpm):
        """p_k at zeta given Q(zeta), Q(zeta - i xi), Q'(zeta), Q'(zeta - i xi)."""
        c_mm, c_m0, c_0m, c_00 = self.v_parts(k)
        return (c_mm(zeta) * qm * qpm + c_m0(zeta) * qm * qp0
                + c_0m(zeta) * q0 * qpm + c_00(zeta) * q0 * qp0)
