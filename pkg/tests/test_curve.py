import math

import numpy as np
import pytest

from dualbaxter.curve import (Differential, HyperellipticCurve, a_cycle, b_cycle, cycle_period,
                              exact_differential, infinity_cycle, mu_differential, normalized_periods,
                              period_pairing, residue_at_infinity, residue_pairing)
from dualbaxter.errors import ContractError, DegeneracyError
from dualbaxter.polyalg import TraceData
from dualbaxter.verify import elliptic_oracle

GENUS_ONE = TraceData.from_free((-5.0,))
GENUS_TWO = TraceData.from_free((-8.0, 12.0))


@pytest.fixture(scope="module", params=[GENUS_ONE, GENUS_TWO], ids=["g1", "g2"])
def curve(request):
    return HyperellipticCurve(request.param)


def test_branch_points_factorization():
    c = HyperellipticCurve(GENUS_ONE)
    assert np.allclose(c.branch_points, [0, 1, 4, 5])
    assert c.admissible and not c.degenerate


def test_smallest_branch_point_is_zero(curve):
    assert abs(curve.branch_points[0]) < 1e-12


def test_degenerate_trace_refuses_periods():
    # z^2 - 4z + 2: t^2 - 4 = z (z - 4) (z - 2)^2, a double root
    c = HyperellipticCurve(TraceData.from_free((-4.0,)))
    assert c.degenerate
    with pytest.raises(DegeneracyError):
        cycle_period(mu_differential(-1, c), a_cycle(1, c), c)


def test_mu_basis_numerators():
    c = HyperellipticCurve(GENUS_ONE)
    assert mu_differential(-1, c).coefficients == {0: 1.0}
    assert mu_differential(0, c).coefficients == {1: 1.0}
    # [y (y/z)']_>= with y^2 = z^4 - 10 z^3 + 29 z^2 - 20 z
    mu1 = mu_differential(1, c).coefficients
    y2 = np.polynomial.Polynomial([0, -20, 29, -10, 1])
    # y (y/z)' = (y^2)'/(2z) - y^2/z^2
    full = {}
    d = y2.deriv().coef
    for n, v in enumerate(d):
        full[n - 1] = full.get(n - 1, 0) + v / 2
    for n, v in enumerate(y2.coef):
        full[n - 2] = full.get(n - 2, 0) - v
    want = {n: v for n, v in full.items() if n >= 0 and abs(v) > 0}
    assert set(mu1) == set(want)
    assert all(abs(mu1[n] - want[n]) < 1e-12 for n in want)
    with pytest.raises(ContractError):
        mu_differential(-2, c)


def test_agm_oracle():
    c = HyperellipticCurve(GENUS_ONE)
    cut, gap = elliptic_oracle(c.branch_points)
    A = cycle_period(mu_differential(-1, c), a_cycle(1, c), c)
    B = cycle_period(mu_differential(-1, c), b_cycle(1, c), c)
    assert abs(abs(A) / 2 - cut) / cut < 1e-12
    assert abs(abs(B) / 2 - gap) / gap < 1e-12


def test_riemann_matrix(curve):
    C, B = normalized_periods(curve)
    g = curve.genus
    A = np.array([[cycle_period(sum((C[j, m] * mu_differential(-(m + 1), curve) for m in range(1, g)),
                                    C[j, 0] * mu_differential(-1, curve)), a_cycle(i + 1, curve), curve)
                   for j in range(g)] for i in range(g)])
    assert np.max(np.abs(A - np.eye(g))) < 1e-10
    assert np.max(np.abs(B - B.T)) < 1e-8
    assert np.min(np.linalg.eigvalsh(B.imag)) > 0


def test_exact_forms_have_no_periods(curve):
    g = curve.genus
    cycles = [a_cycle(j, curve) for j in range(1, g + 1)] + [b_cycle(j, curve) for j in range(1, g + 1)]
    for m in range(4):
        d = exact_differential(m, curve)
        size = Differential.from_dict({n: abs(v) for n, v in d.coefficients.items()})
        for cy in cycles:
            ref = abs(cycle_period(size, cy, curve))
            assert abs(cycle_period(d, cy, curve)) < 1e-12 * max(1.0, ref)


def test_orientation_and_additivity(curve):
    w = mu_differential(-1, curve)
    a, b = a_cycle(1, curve), b_cycle(1, curve)
    assert abs(cycle_period(w, a.reversed(), curve) + cycle_period(w, a, curve)) < 1e-14
    assert abs(cycle_period(w, a + b, curve) - cycle_period(w, a, curve) - cycle_period(w, b, curve)) < 1e-12


def test_residues_at_infinity(curve):
    g = curve.genus
    assert abs(residue_at_infinity(mu_differential(0, curve), curve)) > 0.1
    assert abs(residue_at_infinity(mu_differential(-g, curve), curve)) < 1e-14
    res = cycle_period(mu_differential(0, curve), infinity_cycle(curve), curve)
    assert abs(res - 2j * math.pi * residue_at_infinity(mu_differential(0, curve), curve)) < 1e-14


def test_bilinear_relation(curve):
    g = curve.genus
    ks = [k for k in range(-g, g + 1) if k]
    for k in ks:
        for l in ks:
            d1, d2 = mu_differential(k, curve), mu_differential(l, curve)
            r = residue_pairing(d1, d2, curve)
            p = period_pairing(d1, d2, curve)
            assert abs(r - p) < 1e-8 * max(1.0, abs(r)), (k, l)
    for k in range(1, g + 1):
        assert abs(residue_pairing(mu_differential(k, curve), mu_differential(-k, curve), curve) - 1) < 1e-12


def test_residue_pairing_structure(curve):
    g = curve.genus
    for k in range(-g, g + 1):
        if k:
            w = mu_differential(k, curve)
            assert abs(residue_pairing(w, w, curve)) < 1e-12
    assert abs(residue_pairing(mu_differential(-1, curve), mu_differential(-g, curve), curve)) < 1e-14
