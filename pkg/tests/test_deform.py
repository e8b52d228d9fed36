import math

import numpy as np
import pytest

from dualbaxter.deform import (DeformContext, PeriodMatrix, QuadOptions, basis_indices, circ_pairing,
                               classical_limit_check, dual_S_poly, pairing_matrix_J, pairing_reg,
                               pairing_reg_alt, pk_identity_residual, s_poly, sector_expansion,
                               symplectic_residual, u_func, unregularized_pairing)
from dualbaxter.errors import ContractError, LimitError, RegularizationError
from dualbaxter.polyalg import TraceData
from dualbaxter.spectrum import lattice_extend

SX = 1.1 + 0.3j     # probe point right of the expansion radius


def test_context_requires_common_genus(ctx):
    a = TraceData.from_free((-5.0,))
    b = TraceData.from_free((-9.0, 9.0))
    with pytest.raises(ContractError):
        DeformContext(ctx, a, b, a, a)


def test_s_poly_dual_side(diagonal_pair):
    S = dual_S_poly(1, diagonal_pair)
    q = np.exp(1j * diagonal_pair.ctx.gamma_dual)
    assert S.degree() == 3
    assert abs(S.leading() - (q - 1) / (q + 1) / (1j * diagonal_pair.ctx.gamma_dual)) < 1e-13
    # s_(-j) = z^(g+1-j)
    assert s_poly(-1, diagonal_pair).coefficients == {1: 1.0}


def test_s_minus_for_negative_k(mixed_pair):
    alg = mixed_pair.z_side
    assert (alg.s(-1) + alg.s_minus(-1)).max_abs() == 0


def test_pk_negative_control(ctx):
    tr = [TraceData.from_free((-6.0,)), TraceData.from_free((-7.0,))]
    d = DeformContext(ctx, tr[0], tr[1], tr[0], tr[1])
    L = lattice_extend(1.0, 0.5j, 0.2, 30, tr[0], ctx, "gamma")
    Lp = lattice_extend(0.3, 1.0, 0.2, 30, tr[1], ctx, "gamma")
    assert pk_identity_residual(2, d, L, Lp) < 1e-12
    wrong = lattice_extend(0.3, 1.0, 0.2, 30, TraceData.from_free((-7.5,)), ctx, "gamma")
    assert pk_identity_residual(2, d, L, wrong) > 1e-6


def test_pk_lattice_mismatch(ctx):
    t = TraceData.from_free((-6.0,))
    d = DeformContext(ctx, t, t, t, t)
    L = lattice_extend(1.0, 0.5, 0.2, 10, t, ctx, "gamma")
    with pytest.raises(ContractError):
        pk_identity_residual(1, d, L, L, "Z")


def test_u_func_is_callable(diagonal_pair):
    f = diagonal_pair.z_side.f_of(1)
    u = u_func(f, diagonal_pair)
    assert np.isfinite(u(0.3 + 0.1j))


def test_sector_expansion_matches_product(point_one, point_two):
    S = sector_expansion(point_one.Q, point_two.Q)
    zeta = np.array([2.0, 2.4 + 0.3j, 2.8 - 0.5j])
    want = point_one.Q(zeta) * point_two.Q(zeta)
    assert np.max(np.abs(S(zeta) - want) / np.abs(want)) < 1e-10


@pytest.mark.parametrize("axis,step", [("w", None), ("W", math.pi)])
def test_sector_anti_difference_exact(point_one, diagonal_pair, axis, step):
    h = diagonal_pair.ctx.gamma if step is None else step
    poly = diagonal_pair.z_side.s(1) if axis == "w" else diagonal_pair.Z_side.s(1)
    S = sector_expansion(point_one.Q, point_one.Q).times(poly, axis)
    G = S.anti_difference(axis)
    zeta = np.array([2.2 + 0.1j, 2.6 - 0.2j])
    lhs = G(zeta + 1j * h) - G(zeta)
    assert np.max(np.abs(lhs - S(zeta)) / np.abs(S(zeta))) < 1e-9


def test_regularization_is_window_independent(diagonal_pair):
    a = pairing_reg(1, -1, diagonal_pair, 1.5, 2.0)
    b = pairing_reg(1, -1, diagonal_pair, 2.0, 2.5)
    c = pairing_reg_alt(1, -1, diagonal_pair, 1.5, 2.0)
    assert abs(a - b) < 1e-8 * abs(a) and abs(a - c) < 1e-8 * abs(a)


@pytest.mark.parametrize("k,l", [(1, -1), (-1, 0), (2, -1), (-1, -1)])
def test_plain_integral_agrees_in_convergent_cases(diagonal_pair, k, l):
    plain = unregularized_pairing(k, l, diagonal_pair)
    reg = pairing_reg(k, l, diagonal_pair, 1.5, 2.0)
    assert abs(plain - reg) < 1e-6 * abs(plain)


def test_plain_integral_refuses_growth(diagonal_pair):
    with pytest.raises(RegularizationError):
        unregularized_pairing(1, 0, diagonal_pair)


def test_quadrature_refinement_stable(diagonal_pair):
    a = pairing_reg(-1, 1, diagonal_pair, 1.5, 2.0)
    b = pairing_reg(-1, 1, diagonal_pair, 1.5, 2.0, QuadOptions().refined())
    assert abs(a - b) < 1e-8 * abs(a)


def test_circ_pairing_does_not_stabilize(diagonal_pair):
    with pytest.raises(LimitError):
        circ_pairing(1, -1, diagonal_pair)


def test_J_matrix():
    assert basis_indices(2) == [-2, -1, 1, 2]
    J = pairing_matrix_J(2)
    assert np.array_equal(J, -J.T)
    assert symplectic_residual(J) == 0
    assert J[basis_indices(2).index(1), basis_indices(2).index(-1)] == 1


def test_period_matrix_serialization():
    P = PeriodMatrix(1, pairing_matrix_J(1).astype(complex))
    assert P.residual == 0
    csv = P.to_csv().splitlines()
    assert csv[0] == ",-1,1"
    assert csv[1].startswith("-1,0+0j,")
    assert P.to_json()["indices"] == [-1, 1]
    with pytest.raises(ContractError):
        PeriodMatrix(1, np.array([[np.nan, 0], [0, 0]]))


def test_classical_limit_report():
    r = classical_limit_check(1, TraceData.from_free((-5.0,)))
    assert set(r.as_dict()) >= {"error", "slope", "extrapolated", "target"}
    with pytest.raises(ContractError):
        classical_limit_check(1, TraceData.from_free((-5.0,)), gammas=(0.05, 0.1))
