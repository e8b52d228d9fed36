"""Self-contained check batteries used by the ``verify`` command and the tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dilog import GammaContext, QuantumDilog

__all__ = ["Check", "SuiteReport", "SUITES", "run_suite", "agm", "elliptic_oracle"]


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value < self.tolerance)

    def as_dict(self):
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class SuiteReport:
    suite: str
    params: dict
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {"suite": self.suite, "params": self.params, "passed": self.passed,
                "seconds": self.seconds, "checks": [c.as_dict() for c in self.checks]}


def agm(a, b):
    for _ in range(64):
        a, b = (a + b) / 2, math.sqrt(a * b)
    return a


def elliptic_oracle(p):
    """Half-periods of dz/sqrt(prod (z - p_i)) for four real points by the AGM.

    Returns (cut integral over [p0, p1], gap integral over [p1, p2]).
    """
    a, b, c, d = sorted(float(np.real(v)) for v in p)
    k2 = (b - a) * (d - c) / ((c - a) * (d - b))
    K = lambda m: math.pi / (2 * agm(1.0, math.sqrt(1 - m)))
    s = math.sqrt((c - a) * (d - b))
    return 2 * K(k2) / s, 2 * K(1 - k2) / s


def _dilog_suite(gamma=0.7, n=200):
    ctx = GammaContext(gamma)
    D = QuantumDilog(ctx)
    x = np.linspace(-6, 6, n)
    g = gamma
    up, dn = D(x + 1j * g), D(x - 1j * g)
    eq = np.max(np.abs(up - dn / (1 + np.exp(x))) / np.abs(dn))
    up, dn = D(x + 1j * math.pi), D(x - 1j * math.pi)
    deq = np.max(np.abs(up - dn / (1 + np.exp(math.pi * x / g))) / np.abs(dn))
    w = x[::20] + 0.3j
    unit = np.max(np.abs(np.conj(D(w)) * D(np.conj(w)) - 1))
    # second difference of log Phi far out vs the quadratic phase exp(-phi^2/(4 i gamma)),
    # the sign forced by the shift equation with Phi -> 1 at -inf
    h = 0.5
    pts = np.array([19.5, 20.0, 20.5]) + 0j
    lg = np.log(D(pts))
    sd = lg[0] - 2 * lg[1] + lg[2]
    sd = sd - 2j * math.pi * round((sd / (2j * math.pi)).real)
    asym = abs(sd + 2 * h * h / (4j * g))
    return [Check("phieq", float(eq), 1e-10), Check("dual_phieq", float(deq), 1e-10),
            Check("unitarity", float(unit), 1e-10), Check("quadratic_asymptotic", float(asym), 1e-6)]


def _lattice_suite(gamma=0.9, seed=5, pairs=5, points=50):
    from .deform import DeformContext, pk_identity_residual
    from .polyalg import TraceData
    from .spectrum import lattice_extend

    rng = np.random.default_rng(seed)
    ctx = GammaContext(gamma)
    worst = {"z": 0.0, "Z": 0.0}
    for _ in range(pairs):
        tr = [TraceData.from_free((-rng.uniform(4, 9),)) for _ in range(4)]
        d = DeformContext(ctx, *tr)
        z0 = complex(rng.uniform(-1, 0.3), rng.uniform(-0.2, 0.2))
        for side, step, a, b in (("z", "gamma", tr[0], tr[1]), ("Z", "pi", tr[2], tr[3])):
            s1 = rng.normal(size=2) + 1j * rng.normal(size=2)
            s2 = rng.normal(size=2) + 1j * rng.normal(size=2)
            L = lattice_extend(s1[0], s1[1], z0, points, a, ctx, step)
            Lp = lattice_extend(s2[0], s2[1], z0, points, b, ctx, step)
            for k in (-1, 0, 1, 2, 3):
                worst[side] = max(worst[side], pk_identity_residual(k, d, L, Lp, side))
    return [Check("pk_z_lattice", worst["z"], 1e-12), Check("pk_pi_lattice", worst["Z"], 1e-12)]


def _sk_suite(gamma=0.7, seed=3):
    from .deform_algebra import SideAlgebra
    from .polyalg import TraceData

    rng = np.random.default_rng(seed)
    q = np.exp(1j * gamma)
    deg_bad, lead = 0, 0.0
    for g in (1, 2):
        t = TraceData.from_free(tuple(rng.normal(size=g) * 3))
        tp = TraceData.from_free(tuple(rng.normal(size=g) * 3))
        alg = SideAlgebra(gamma, t, tp)
        for k in range(1, 5):
            s = alg.s(k)
            deg_bad += s.degree() != g + 1 + k
            lead = max(lead, abs(s.leading() - (q ** k - 1) / (q ** k + 1) / (1j * gamma)))
    return [Check("degree_mismatches", float(deg_bad), 0.5), Check("leading_coefficient", lead, 1e-13)]


def _curve_suite(t1=-5.0):
    from .curve import (HyperellipticCurve, a_cycle, b_cycle, cycle_period, exact_differential,
                        mu_differential, normalized_periods)
    from .polyalg import TraceData

    c = HyperellipticCurve(TraceData.from_free((t1,)))
    cut, gap = elliptic_oracle(c.branch_points)
    w = mu_differential(-1, c)
    A = cycle_period(w, a_cycle(1, c), c)
    B = cycle_period(w, b_cycle(1, c), c)
    _, Bn = normalized_periods(c)
    ex = max(abs(cycle_period(exact_differential(m, c), cy, c))
             for m in range(0, 4) for cy in (a_cycle(1, c), b_cycle(1, c)))
    return [Check("a_period_vs_agm", abs(abs(A) / 2 - cut) / cut, 1e-8),
            Check("b_period_vs_agm", abs(abs(B) / 2 - gap) / gap, 1e-8),
            Check("B_symmetric", float(np.max(np.abs(Bn - Bn.T))), 1e-8),
            Check("B_imag_positive_margin", float(-np.min(np.linalg.eigvalsh(np.atleast_2d(Bn.imag)))), 0.0),
            Check("exact_periods", float(ex), 1e-9)]


def _classical_suite():
    from .deform import classical_limit_check
    from .polyalg import TraceData

    r = classical_limit_check(1, TraceData.from_free((-5.0,)))
    return [Check("extrapolated_vs_mu", r.error, 1e-3), Check("slope_offset", abs(r.slope - 1), 0.2)]


SUITES = {
    "dilog": _dilog_suite,
    "lattice": _lattice_suite,
    "sk": _sk_suite,
    "curve": _curve_suite,
    "classical": _classical_suite,
}


def run_suite(name, **params) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(name)
    t0 = time.perf_counter()
    checks = SUITES[name](**params)
    return SuiteReport(name, params, checks, time.perf_counter() - t0)
