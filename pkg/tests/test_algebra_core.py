from hypothesis import given, settings, strategies as st

from vertexfol.linalg import nullspace, rank
from vertexfol.poly import MultiPoly
from vertexfol.rational import LinearForm, RationalForm, SingularAssignment
from vertexfol.scalars import GaussQ, Q, to_q
from vertexfol.series import Region, rf_expand, series_to_rational

import pytest

small = st.integers(-4, 4)
VARS = ("z1", "z2")


@st.composite
def polys(draw):
    terms = {}
    for _ in range(draw(st.integers(0, 4))):
        mono = {v: draw(st.integers(0, 2)) for v in VARS}
        terms[tuple(sorted((v, e) for v, e in mono.items() if e))] = draw(small)
    return MultiPoly(terms)


@given(polys(), polys(), polys())
@settings(max_examples=60, deadline=None)
def test_polynomial_ring_laws(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert (p * q) * r == p * (q * r)
    assert p * q == q * p
    assert p - p == MultiPoly.const(0)


@given(polys(), st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=40, deadline=None)
def test_substitution_is_a_ring_map(p, x, y):
    vals = {"z1": Q(x), "z2": Q(y)}
    assert (p * p).evaluate(vals) == p.evaluate(vals) ** 2


def test_to_q_parses_fractions():
    assert to_q("3/4") == Q(3, 4)
    assert to_q(" -2 ") == Q(-2)


@given(small, small, small, small)
def test_gaussian_rationals_form_a_field(a, b, c, d):
    x, y = GaussQ(a, b), GaussQ(c, d)
    if not y.is_zero():
        assert (x / y) * y == x
    assert (x * y).norm2() == x.norm2() * y.norm2()


def test_rational_form_canonical_and_singular():
    d = LinearForm.diff("z1", "z2")
    f = RationalForm.inverse_power(d, 2)
    g = RationalForm.from_poly(MultiPoly.var("z1") - MultiPoly.var("z2")) * f
    assert g == RationalForm.inverse_power(d, 1)
    with pytest.raises(SingularAssignment):
        f.subs({"z1": Q(1), "z2": Q(1)})
    assert f.subs({"z1": Q(3), "z2": Q(1)}) == RationalForm.const(Q(1, 4))


def test_rational_derivative():
    z = "z1"
    f = RationalForm.inverse_power(LinearForm.var(z), 1)
    assert f.diff(z) == RationalForm.inverse_power(LinearForm.var(z), 2, -1)


def test_expansion_and_reconstruction_round_trip():
    d = LinearForm.diff("z1", "z2")
    f = RationalForm.inverse_power(d, 2) + RationalForm.inverse_power(LinearForm.var("z1"), 1)
    region = Region(["z1", "z2"])
    series = rf_expand(f, region, (6,))
    back = series_to_rational(series, {d: 2, LinearForm.var("z1"): 1})
    assert back == f


def test_two_point_expansion_coefficients():
    f = RationalForm.inverse_power(LinearForm.diff("z1", "z2"), 2)
    s = rf_expand(f, Region(["z1", "z2"]), (3,))
    # 1/(z1 - z2)^2 = sum_m m z1^{-m-1} z2^{m-1}
    assert s.terms == {(-2, 0): 1, (-3, 1): 2, (-4, 2): 3, (-5, 3): 4}


def test_exact_linear_algebra():
    rows = [{"x": Q(1), "y": Q(2)}, {"x": Q(2), "y": Q(4)}, {"y": Q(1), "z": Q(1)}]
    assert rank(rows) == 2
    (v,) = nullspace(rows, ["x", "y", "z"])
    for r in rows:
        assert sum(c * v.get(k, 0) for k, c in r.items()) == 0
