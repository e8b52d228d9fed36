"""Randomized invariants."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from dualbaxter.dilog import GammaContext, QuantumDilog
from dualbaxter.melem import WedgeForm, wedge
from dualbaxter.polyalg import LaurentPoly, LogLaurent, TraceData, anti_shift, shift, truncate

coef = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False)
laurent = st.dictionaries(st.integers(-4, 4), coef, min_size=1, max_size=5).map(LaurentPoly)
nonconstant = st.dictionaries(st.integers(-4, 4).filter(bool), coef, min_size=1, max_size=5).map(LaurentPoly)
# steps away from the resonances n * 2 * xi = pi * m for |n| <= 6
steps = st.floats(0.05, 1.5).filter(lambda x: min(abs(math.sin(2 * n * x)) for n in range(1, 7)) > 1e-2)


@given(laurent)
def test_truncate_idempotent(f):
    for mode in (">", ">="):
        once = truncate(f, mode)
        assert truncate(once, mode).close_to(once, 0)


@given(laurent)
def test_truncation_split(f):
    low = LaurentPoly({n: c for n, c in f.coefficients.items() if n <= 0})
    assert (truncate(f, ">") + low).close_to(f, 1e-12)


@given(nonconstant, steps)
@settings(max_examples=60)
def test_anti_shift_inverts_shift(f, xi):
    g = anti_shift(f, xi)
    assert shift(g, xi).close_to(f, 1e-9 * max(1.0, f.max_abs()))


@given(nonconstant, steps, st.integers(1, 3))
@settings(max_examples=40)
def test_anti_shift_with_zeta_powers(f, xi, j):
    h = LogLaurent({(j, n): c for n, c in f.coefficients.items()})
    g = anti_shift(h, xi)
    assert shift(g, xi).close_to(h, 1e-7 * max(1.0, h.max_abs()))


labels = st.lists(st.integers(-3, 3).filter(bool), min_size=1, max_size=3, unique=True)


@given(labels, labels)
def test_wedge_graded_commutativity(a, b):
    x, y = WedgeForm.basis(*a), WedgeForm.basis(*b)
    sign = (-1) ** (len(a) * len(b))
    assert (wedge(x, y) - sign * wedge(y, x)).is_zero()


@given(labels, labels, labels)
def test_wedge_associative(a, b, c):
    x, y, z = (WedgeForm.basis(*v) for v in (a, b, c))
    assert (wedge(wedge(x, y), z) - wedge(x, wedge(y, z))).is_zero()


@given(st.permutations([-2, -1, 1, 2]))
def test_basis_sign_is_permutation_parity(p):
    f = WedgeForm.basis(*p)
    inv = sum(1 for i in range(4) for j in range(i + 1, 4) if p[i] > p[j])
    (c, _), = f.terms
    assert c == (-1) ** inv


_DILOG = QuantumDilog(GammaContext(0.8))


@given(st.floats(-6, 6), st.floats(-0.6, 0.6))
@settings(max_examples=50)
def test_dilog_unitarity(x, y):
    w = complex(x, y)
    assert abs(np.conj(_DILOG(w)) * _DILOG(w.conjugate()) - 1) < 1e-10


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=3))
def test_trace_json_roundtrip(free):
    t = TraceData.from_free(tuple(free))
    assert TraceData.from_json(t.to_json()) == t
    assert t.coefficients[-1] == (-1) ** (t.genus + 1) * 2
