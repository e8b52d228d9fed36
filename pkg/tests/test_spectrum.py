import math

import numpy as np
import pytest

from dualbaxter.dilog import GammaContext
from dualbaxter.errors import ContractError, RangeError
from dualbaxter.polyalg import TraceData
from dualbaxter.spectrum import (SeriesBranches, SpectralPoint, default_grid, lattice_extend, residual_report,
                                 wkb_zero_seeds)

CTX = GammaContext(0.9)
T_Z = TraceData.from_free((-5.0,))
T_DUAL = TraceData.from_free((-6.0,))


def _tq(f, zeta, shift, x, trace):
    up, dn, mid = f(zeta + 1j * shift), f(zeta - 1j * shift), f(zeta)
    lhs = trace.sign * trace(x) * mid
    return np.max(np.abs(lhs - up - dn) / (np.abs(up) + np.abs(dn) + np.abs(lhs)))


@pytest.fixture(scope="module")
def branches():
    return SeriesBranches(CTX, T_Z, T_DUAL)


def test_lattice_recursion_exact():
    L = lattice_extend(1.0, 0.3 + 0.2j, -0.4 + 0.1j, 40, T_Z, CTX, "gamma")
    assert L.recursion_residual() < 1e-13
    L = lattice_extend(1.0, 0.3, -0.4, 20, T_DUAL, CTX, "pi")
    assert L.recursion_residual() < 1e-13


def test_lattice_guards():
    with pytest.raises(ContractError):
        lattice_extend(1.0, 1.0, 0.0, 1, T_Z, CTX)
    with pytest.raises(ContractError):
        lattice_extend(1.0, 1.0, 0.0, 5, T_Z, CTX, "bogus")
    with pytest.raises(RangeError):
        lattice_extend(1.0, 1.0, 3.0, 400, T_Z, CTX, "pi")


def test_left_branch_solves_both_equations(branches):
    zeta = np.linspace(-6, branches.x_left - 0.3 - math.pi, 20)
    z_of = lambda s: np.exp(2 * s)
    Z_of = lambda s: np.exp(2 * math.pi * s / CTX.gamma)
    assert _tq(branches.left, zeta, CTX.gamma, z_of(zeta), T_Z) < 1e-12
    assert _tq(branches.left, zeta, math.pi, Z_of(zeta), T_DUAL) < 1e-12
    assert abs(branches.left(-30.0) - 1) < 1e-12


def test_right_branch_solves_both_equations(branches):
    zeta = np.linspace(branches.x_right + 0.3, branches.x_right + 2.5, 20)
    for f in (branches.q_plus, branches.q_minus):
        assert _tq(f, zeta, CTX.gamma, np.exp(2 * zeta), T_Z) < 1e-10
        assert _tq(f, zeta, math.pi, np.exp(2 * math.pi * zeta / CTX.gamma), T_DUAL) < 1e-10


def test_right_branch_leading_behaviour(branches):
    lead = lambda z: np.exp(branches.beta * z + 1j * branches.kappa * z ** 2)
    dev = [abs(branches.q_plus(z) / lead(z) - 1) for z in (6.0, 7.0)]
    # first correction ~ exp(-2 zeta)
    assert dev[0] < 1e-4
    assert dev[1] / dev[0] == pytest.approx(math.exp(-2), rel=0.05)
    assert branches.beta == pytest.approx(-2 * (1 + math.pi / 0.9))


def test_complex_traces_rejected():
    with pytest.raises(ContractError):
        SeriesBranches(CTX, TraceData((-5 + 1j, 2.0)), T_DUAL)


def test_wkb_seeds_increase():
    s = wkb_zero_seeds(1, 0.9, 6)
    assert np.all(np.diff(s) > 0)


def test_point_structure(point_one):
    Q = point_one.Q
    assert Q.zeros is not None and len(Q.zeros) > 0
    assert np.all(np.diff(Q.zeros) > 0)
    assert abs(Q(-20.0) - 1) < 1e-10
    assert point_one.residuals.realness_res < 1e-6
    # no state passing the self-consistency gate is claimed
    assert point_one.status in ("accepted", "diverged")
    if point_one.status == "diverged":
        assert point_one.residuals.max() >= 1e-8


def test_negative_control(point_one):
    # traces far from any eigenvalue must show large residuals
    from dualbaxter.spectrum import build_point
    p = build_point(CTX, TraceData.from_free((-3.0,)), TraceData.from_free((-20.0,)))
    assert max(p.residuals.baxter_res, p.residuals.dual_res) > 1e-2
    assert p.status == "diverged"


def test_point_json_roundtrip(point_one):
    d = point_one.to_json()
    back = SpectralPoint.from_json(d)
    grid = default_grid(point_one.Q)
    assert np.max(np.abs(back.Q(grid + 0j) - point_one.Q(grid + 0j))) < 1e-14
    rep = residual_report(back.Q, grid)
    for k, v in point_one.residuals.as_dict().items():
        assert abs(rep.as_dict()[k] - v) <= 1e-12 * max(1.0, v)
