import numpy as np
import pytest

from dualbaxter.deform import pairing_reg
from dualbaxter.errors import ContractError
from dualbaxter.melem import (ObservableSpec, WedgeForm, brute_force_element, c_form, d_form,
                              kernel_relation_residuals, matrix_element, random_form, wedge)
from dualbaxter.polyalg import LaurentPoly


def test_label_sorting_sign():
    a = WedgeForm.basis(1, -1)
    b = WedgeForm.basis(-1, 1)
    assert (a + b).is_zero()
    assert WedgeForm.basis(2, 2).is_zero()


def test_wedge_graded_antisymmetry():
    x, y = WedgeForm.basis(1), WedgeForm.basis(-2)
    assert (wedge(x, y) + wedge(y, x)).is_zero()


def test_polynomial_labels_must_vanish_at_zero():
    with pytest.raises(ContractError):
        WedgeForm.basis(LaurentPoly({0: 1.0, 1: 2.0}))
    WedgeForm.basis(LaurentPoly({1: 2.0}))


def test_mixed_degrees_rejected():
    with pytest.raises(ContractError):
        WedgeForm.make([(1.0, (1,)), (1.0, (1, 2))])


def test_sides_do_not_mix():
    with pytest.raises(ContractError):
        WedgeForm.basis(1) + WedgeForm.basis(1, side="Z")


def test_json_roundtrip():
    f = WedgeForm.make([(1 + 2j, (1, -1)), (0.5, (LaurentPoly({2: 1.0}), -1))])
    back = WedgeForm.from_json(f.to_json())
    assert (back - f).is_zero()
    listed = WedgeForm.from_json([[[1.0, 0.0], [1, -1]]])
    assert listed.degree == 2


def test_c_and_d_forms(mixed_pair):
    c = c_form(2)
    assert c.degree == 2 and len(c.terms) == 2
    d = d_form(mixed_pair)
    assert d.degree == 1
    (coef, labels), = d.terms
    assert labels == (-1,) and abs(coef - (-5.0 + 5.5)) < 1e-15


def test_random_form_degree():
    rng = np.random.default_rng(0)
    f = random_form(2, [-2, -1, 1, 2], rng)
    assert f.degree == 2 and 1 <= len(f.terms) <= 3
    assert random_form(0, [1], rng).degree == 0


def test_evaluate_is_determinant(mixed_pair):
    f = WedgeForm.basis(-1, 1)
    p, q = 0.2 + 0.1j, -0.3
    s = mixed_pair.z_side
    want = s.s(-1)(p) * s.s(1)(q) - s.s(1)(p) * s.s(-1)(q)
    assert abs(f.evaluate([p, q], mixed_pair) - want) < 1e-12 * abs(want)


def test_degree_one_element_is_pairing(mixed_pair):
    obs = ObservableSpec(WedgeForm.basis(-1), WedgeForm.basis(-1, side="Z"))
    v = matrix_element(obs, mixed_pair, lam1=1.5, lam2=2.0)
    assert abs(v - pairing_reg(-1, -1, mixed_pair, 1.5, 2.0)) < 1e-14 * abs(v)


def test_degree_one_brute_force(mixed_pair):
    obs = ObservableSpec(WedgeForm.basis(-1), WedgeForm.basis(-1, side="Z"))
    v = matrix_element(obs, mixed_pair, lam1=1.5, lam2=2.0)
    b = brute_force_element(obs, mixed_pair)
    assert abs(v - b) < 1e-8 * abs(b)


def test_prefactor_from_json(mixed_pair):
    d = {"h": {"terms": [[[1, 0], [-1]]]}, "H": {"terms": [[[1, 0], [-1]]]},
         "pL": [[[2, 0], [1]]], "PR": [[1, [0]]]}
    obs = ObservableSpec.from_json(d)
    assert obs.h.side == "z" and obs.H.side == "Z"
    assert abs(obs.prefactor(mixed_pair) - 2 * (-5.0)) < 1e-14


def test_side_and_degree_checks(mixed_pair):
    with pytest.raises(ContractError):
        matrix_element(ObservableSpec(WedgeForm.basis(-1), WedgeForm.basis(-1)), mixed_pair)
    with pytest.raises(ContractError):
        matrix_element(ObservableSpec(WedgeForm.basis(-1), WedgeForm.basis(-1, 1, side="Z")), mixed_pair)


def test_divergent_brute_force_refused(genus_two_pair):
    obs = ObservableSpec(WedgeForm.make([(1.0, (-1, -2)), (0.3j, (-2, 1))]),
                         WedgeForm.make([(2.0, (-1, -2)), (-1.0, (-1, 2))], side="Z"))
    with pytest.raises(ContractError):
        brute_force_element(obs, genus_two_pair)


def test_mixed_convergent_configuration(genus_two_pair):
    obs = ObservableSpec(WedgeForm.make([(1.0, (-1, -2)), (0.3j, (-2, 1))]),
                         WedgeForm.basis(-2, -1, side="Z"))
    v = matrix_element(obs, genus_two_pair)
    b = brute_force_element(obs, genus_two_pair)
    assert abs(v - b) < 1e-6 * abs(b)


def test_kernel_report_shape(genus_two_pair):
    r = kernel_relation_residuals(genus_two_pair, count=2)
    assert {k: len(v) for k, v in r.residuals.items()} == {"eq1": 4, "eq2": 2, "eq3": 2}
    assert r.as_dict()["max"] == r.max
