import numpy as np
import pytest

from dualbaxter.errors import ContractError, NotInvertibleError, RangeError, ResonanceError
from dualbaxter.polyalg import (LaurentPoly, LogLaurent, TraceData, Variable, anti_shift, eval_at, shift,
                                truncate, z_variable)


def test_trace_pinning_and_parse():
    t = TraceData.parse("1,-5,2")
    assert t.genus == 1 and t.free == (-5 + 0j,)
    assert TraceData.from_free((1.0, 2.0)).coefficients[-1] == -2
    with pytest.raises(ContractError):
        TraceData((-5.0, 3.0))
    with pytest.raises(ContractError):
        TraceData.parse("2,-5,2")


def test_trace_poly_matches_call():
    t = TraceData.from_free((-9.0, 9.0))
    x = np.array([0.3, -1.2, 2.0])
    assert np.allclose(t.poly()(np.log(x + 0j) / 2), t(x))


def test_monomial_shift():
    f = LaurentPoly({2: 1.0})
    xi = 0.4
    d = shift(f, xi, "delta")
    assert abs(d.coefficient(2) - (np.exp(2j * 2 * xi) - 1)) < 1e-15
    D = shift(f, xi)
    assert abs(D.coefficient(2) - 2j * np.sin(4 * xi)) < 1e-15


def test_anti_shift_zeta_terms():
    f = LogLaurent({(1, 1): 2.0, (0, -2): 1.0 - 1j})
    g = anti_shift(f, 0.6)
    assert shift(g, 0.6).close_to(f, 1e-13)


def test_secular_branch():
    f = LaurentPoly({0: 3.0, 1: 1.0})
    with pytest.raises(NotInvertibleError):
        anti_shift(f, 0.5)
    g = anti_shift(f, 0.5, secular=True)
    assert g.zeta_degree == 1
    assert shift(g, 0.5).close_to(f, 1e-13)


def test_resonance_guard():
    xi = np.pi / 2     # x^1 picks up exp(2 i xi) = -1 twice: Delta kills x^1
    with pytest.raises(ResonanceError):
        anti_shift(LaurentPoly({1: 1.0}), xi)


def test_truncate_modes():
    f = LaurentPoly({-1: 1.0, 0: 2.0, 3: 4.0})
    assert truncate(f, ">").coefficients == {3: 4.0}
    assert set(truncate(f, ">=").coefficients) == {0, 3}
    with pytest.raises(ContractError):
        truncate(f, "bogus")


def test_eval_overflow():
    with pytest.raises(RangeError):
        eval_at(LaurentPoly({40: 1.0}), 20.0)


def test_variable_rates():
    Z = Variable("Z", 2 * np.pi / 0.9)
    f = LaurentPoly({1: 1.0}, Z)
    assert abs(f(0.1) - np.exp(2 * np.pi / 0.9 * 0.1)) < 1e-14
    assert z_variable().rate == 2.0


def test_negative_zeta_power_rejected():
    with pytest.raises(ContractError):
        LogLaurent({(-1, 0): 1.0})


def test_json_roundtrip():
    f = LaurentPoly({-2: 1 + 2j, 3: -0.5})
    assert LaurentPoly.from_json(f.to_json()).close_to(f, 0)
