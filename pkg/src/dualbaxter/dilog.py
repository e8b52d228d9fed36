"""Non-compact quantum dilogarithm, the one-site weight and the Q-kernel.

Convention used throughout the package::

    log Phi(phi) = int_{Im k = +delta} exp(-i k phi) / (4 k sinh(gamma k) sinh(pi k)) dk

which is the solution of Phi(phi + i gamma) / Phi(phi - i gamma) = 1 / (1 + e^phi)
and of the dual equation with i pi shifts and 1 / (1 + e^(pi phi / gamma)).
With this choice Phi -> 1 for phi -> -inf, |Phi| = 1 on the real axis and
log Phi ~ i phi^2 / (4 gamma) for phi -> +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PrecisionLossError, ResonanceError

__all__ = [
    "GammaContext",
    "DilogConfig",
    "QuantumDilog",
    "phi_eval",
    "lambda_eval",
    "qkernel_eval",
    "overlap",
]


@dataclass(frozen=True)
class GammaContext:
    """Coupling constant together with its dual and the resonance guard."""

    gamma: float
    resonance_tolerance: float = 1e-6
    resonance_order: int = 8

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ContractError(f"gamma must be positive and finite, got {self.gamma!r}")
        if self.resonance_tolerance <= 0:
            raise ContractError("resonance_tolerance must be positive")

    @property
    def q(self) -> complex:
        return complex(np.exp(1j * self.gamma))

    @property
    def gamma_dual(self) -> float:
        return math.pi ** 2 / self.gamma

    @property
    def q_dual(self) -> complex:
        return complex(np.exp(1j * self.gamma_dual))

    def dual(self) -> "GammaContext":
        return GammaContext(self.gamma_dual, self.resonance_tolerance, self.resonance_order)

    def resonant_orders(self, orders=None):
        """Orders n with |sin 2n gamma| or |sin 2n gamma_dual| at or below the tolerance."""
        top = self.resonance_order if orders is None else orders
        bad = []
        for n in range(1, top + 1):
            if (abs(math.sin(2 * n * self.gamma)) <= self.resonance_tolerance
                    or abs(math.sin(2 * n * self.gamma_dual)) <= self.resonance_tolerance):
                bad.append(n)
        return bad

    def check_resonance(self, orders=None):
        bad = self.resonant_orders(orders)
        if bad:
            raise ResonanceError(f"gamma={self.gamma!r} is resonant at order n={bad[0]}", order=bad[0])
        return self

    def z_of(self, zeta):
        return np.exp(2 * np.asarray(zeta, dtype=complex))

    def Z_of(self, zeta):
        return np.exp(2 * np.pi * np.asarray(zeta, dtype=complex) / self.gamma)


@dataclass(frozen=True)
class DilogConfig:
    """Quadrature line Im k = contour_offset, truncation |Re k| <= truncation.

    Any field left as ``None`` is derived from the coupling when the
    evaluator is built.
    """

    contour_offset: float | None = None
    truncation: float | None = None
    node_count: int | None = None
    tolerance: float = 1e-11

    def resolved(self, ctx: GammaContext) -> "DilogConfig":
        cap = min(1.0, math.pi / ctx.gamma) / 2
        delta = cap * 0.999 if self.contour_offset is None else self.contour_offset
        if not (0 < delta < cap):
            raise ContractError(f"contour offset must lie in (0, {cap}), got {delta}")
        # the integrand decays like exp(-(pi + gamma - |Im phi|) |k|); the
        # evaluator keeps |Im phi| <= max(pi, gamma) so the rate is >= min(pi, gamma)
        rate = min(math.pi, ctx.gamma)
        trunc = 40.0 / rate if self.truncation is None else self.truncation
        if self.node_count is None:
            step = delta / 8
            nodes = 2 * int(math.ceil(trunc / step)) + 1
        else:
            nodes = int(self.node_count) | 1
        return DilogConfig(delta, trunc, nodes, self.tolerance)


class QuantumDilog:
    """Vectorized evaluator of Phi for a fixed coupling.

    >>> dl = QuantumDilog(GammaContext(0.7))
    >>> abs(dl(1j * 0.7) / dl(-1j * 0.7) - 0.5) < 1e-12
    True
    """

    def __init__(self, ctx: GammaContext, cfg: DilogConfig | None = None):
        self.ctx = ctx
        self.cfg = (cfg or DilogConfig()).resolved(ctx)
        g = ctx.gamma
        self.strip = math.pi + g
        self.reduced_strip = max(math.pi, g)
        n = self.cfg.node_count
        x = np.linspace(-self.cfg.truncation, self.cfg.truncation, n)
        self._h = x[1] - x[0]
        d = self.cfg.contour_offset
        self._nodes = {}
        for side in (+1, -1):
            k = x + 1j * side * d
            self._nodes[side] = (k, 1.0 / (4 * k * np.sinh(g * k) * np.sinh(np.pi * k)))
        self._res_c = (g * g + np.pi * np.pi) / 6.0

    # -- raw strip integral -------------------------------------------------
    def _line_integral(self, phi, side, stride=1):
        k, w = self._nodes[side]
        k = k[::stride]
        w = w[::stride]
        out = np.empty(phi.shape, dtype=complex)
        chunk = max(1, 2_000_000 // max(1, k.size))
        for s in range(0, phi.size, chunk):
            p = phi[s:s + chunk]
            out[s:s + chunk] = np.exp(-1j * np.outer(p, k)) @ w
        return out * (self._h * stride)

    def _residue_zero(self, phi):
        # residue at k=0 of exp(-i k phi) / (4 k sinh(gamma k) sinh(pi k))
        return (-phi * phi / 2 - self._res_c) / (4 * np.pi * self.ctx.gamma)

    def log_strip(self, phi):
        """log Phi for |Im phi| < pi + gamma, with a two-step-size error estimate."""
        phi = np.asarray(phi, dtype=complex).ravel()
        if np.any(np.abs(phi.imag) >= self.strip):
            raise ContractError("log_strip requires |Im phi| < pi + gamma")
        val = np.empty(phi.shape, dtype=complex)
        err = np.empty(phi.shape)
        upper = phi.real <= 0
        for mask, side in ((upper, +1), (~upper, -1)):
            if not np.any(mask):
                continue
            p = phi[mask]
            fine = self._line_integral(p, side)
            coarse = self._line_integral(p, side, stride=2)
            if side < 0:
                corr = -2j * np.pi * self._residue_zero(p)
                fine = fine + corr
                coarse = coarse + corr
            val[mask] = fine
            # trapezoid error on an analytic strip falls like exp(-2 pi d / h), so
            # the fine-grid error is about the square of the coarse one
            diff = np.abs(fine - coarse)
            err[mask] = diff * diff + 4e-16 * np.abs(fine)
        # tail bound at the truncation point
        rate = self.strip - np.abs(phi.imag)
        tail = np.exp(-rate * self.cfg.truncation) / (
            self.ctx.gamma * np.pi * self.cfg.truncation ** 3 * rate)
        err = np.maximum(err, tail)
        return val, err

    # -- public ------------------------------------------------------------
    def evaluate(self, phi, check=True):
        """Return (Phi(phi), absolute error estimate) for scalar or array input.

        Outside the reduced strip |Im phi| <= max(pi, gamma) the gamma-shift
        equation Phi(phi) = Phi(phi - 2i gamma) / (1 + e^(phi - i gamma)) is
        applied recursively, in that order, before quadrature.
        """
        arr = np.asarray(phi, dtype=complex)
        shape = arr.shape
        p = arr.ravel().copy()
        g = self.ctx.gamma
        factor = np.ones(p.shape, dtype=complex)
        bound = self.reduced_strip
        for _ in range(10_000):
            up = p.imag > bound
            dn = p.imag < -bound
            if not (np.any(up) or np.any(dn)):
                break
            factor[up] /= 1 + np.exp(p[up] - 1j * g)
            p[up] -= 2j * g
            factor[dn] *= 1 + np.exp(p[dn] + 1j * g)
            p[dn] += 2j * g
        logv, err = self.log_strip(p)
        val = np.exp(logv) * factor
        aerr = np.abs(val) * err
        if check and np.any(err > self.cfg.tolerance):
            worst = float(np.max(err))
            raise PrecisionLossError(
                f"quadrature error estimate {worst:.3g} exceeds tolerance {self.cfg.tolerance:.3g}",
                achieved=worst)
        if shape == ():
            return complex(val[0]), float(aerr[0])
        return val.reshape(shape), aerr.reshape(shape)

    def __call__(self, phi):
        return self.evaluate(phi)[0]

    def log(self, phi):
        """Principal-strip log Phi (no continuation); handy for asymptotic studies."""
        arr = np.asarray(phi, dtype=complex)
        v, _ = self.log_strip(arr)
        return v.reshape(arr.shape) if arr.shape else complex(v[0])


_CACHE: dict = {}


def _evaluator(ctx, cfg):
    key = (ctx, cfg)
    ev = _CACHE.get(key)
    if ev is None:
        if len(_CACHE) > 32:
            _CACHE.clear()
        ev = _CACHE[key] = QuantumDilog(ctx, cfg)
    return ev


def phi_eval(ctx: GammaContext, cfg: DilogConfig | None, phi):
    """Phi(phi); see :class:`QuantumDilog` for the error estimate variant."""
    return _evaluator(ctx, cfg)(phi)


def lambda_eval(ctx, cfg, zeta, psi):
    """One-site weight exp(-zeta psi / (2i gamma)) Phi(psi - zeta) exp(((pi+gamma)/gamma)(psi - zeta))."""
    g = ctx.gamma
    zeta = np.asarray(zeta, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    d = psi - zeta
    out = np.exp(-zeta * psi / (2j * g) + (np.pi + g) / g * d) * phi_eval(ctx, cfg, d)
    return out if out.shape else complex(out)


def overlap(ctx, phi, psi):
    """<phi|psi> = exp((2 phi psi - phi^2) / (4 i gamma))."""
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    return np.exp((2 * phi * psi - phi * phi) / (4j * ctx.gamma))


def qkernel_eval(ctx, cfg, phis, zeta, psis):
    """Kernel of the Q-operator between phi- and psi-representations (psi_0 = psi_last)."""
    phis = np.asarray(phis, dtype=complex).ravel()
    psis = np.asarray(psis, dtype=complex).ravel()
    if phis.size != psis.size or phis.size < 2 or phis.size % 2:
        raise ContractError("need equal, even-length (2g+2) lists of site variables")
    g = ctx.gamma
    zeta = complex(zeta)
    pref = np.exp(0.5 * (1 + np.pi / g) * zeta + zeta * zeta / (4j * g))
    weights = lambda_eval(ctx, cfg, np.full(phis.shape, zeta), phis - psis)
    links = overlap(ctx, phis, np.roll(psis, 1))
    return complex(pref * np.prod(weights * links))
