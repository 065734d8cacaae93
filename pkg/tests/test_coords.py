import pytest
from hypothesis import given, settings, strategies as st

from vertexfol.coords import (NotACoordinateChange, CoordMap, beta_coefficients, certify_representation,
                              commutator_check, compose, generating_set, invariance_check, moebius, p_operator,
                              power_shift, reexpand, rep_check, rescaling)
from vertexfol.poly import MultiPoly
from vertexfol.scalars import Q
from vertexfol.wvalued import EElement, TranslatedMap, number_operator

from conftest import A, A2, AA, VAC

eps = MultiPoly.var("eps")


def test_moebius_is_a_single_flow():
    # z / (1 - z) is the time-one flow of z^2 d/dz
    b = beta_coefficients(moebius(Q(1), 6))
    assert [x.to_str() for x in b] == ["1", "1", "0", "0", "0", "0"]


def test_rescaling_has_only_dilation():
    b = beta_coefficients(rescaling(Q(3), 5))
    assert b[0] == MultiPoly.const(3) and all(x.is_zero() for x in b[1:])


@given(st.integers(-3, 3).filter(bool), st.integers(2, 4))
@settings(max_examples=20, deadline=None)
def test_exponential_form_round_trip(c, k):
    rho = power_shift(Q(c), k, 7)
    assert reexpand(beta_coefficients(rho), 7).coeffs == rho.coeffs


def test_weighted_convention_divides_by_index():
    plain = beta_coefficients(power_shift(Q(1), 3, 6))
    weighted = beta_coefficients(power_shift(Q(1), 3, 6), "weighted")
    for m in range(1, 6):
        assert weighted[m] * Q(m + 1) == plain[m]


def test_vanishing_linear_term_rejected():
    with pytest.raises(NotACoordinateChange):
        beta_coefficients(CoordMap([MultiPoly.const(0), MultiPoly.const(1)]))


def test_composition_order():
    f, g = rescaling(Q(2), 4), moebius(Q(1), 4)
    # f o g = 2z/(1-z); g o f = 2z/(1-2z)
    assert [c.to_str() for c in compose(f, g).coeffs] == ["2", "2", "2", "2"]
    assert [c.to_str() for c in compose(g, f).coeffs] == ["2", "4", "8", "16"]


def test_group_law_certifies_dilation_last(alg):
    r = certify_representation(alg, 3)
    assert r["certified"] == ["dilation-last"]
    assert r["results"]["dilation-first"]["status"] == "fail"


def test_group_law_witness(alg):
    r = rep_check(rescaling(Q(2), 5), moebius(Q(1), 5), alg, 3, "dilation-first")
    assert r["status"] == "fail"
    assert r["witness"]["state"] == "a(-2)1"


def test_operator_needs_enough_coefficients(alg):
    with pytest.raises(ValueError):
        p_operator(moebius(Q(1), 3), alg, 3)


def test_operator_preserves_filtration(alg):
    P = p_operator(moebius(Q(1), 6), alg, 4)
    assert P.preserves_filtration()


@pytest.mark.parametrize("field", [{-1: 1}, {0: 1}, {1: 1}, {2: 1}, {3: 2, -1: 1}])
def test_commutator_formula(alg, field):
    assert commutator_check(field, {A: Q(1)}, alg, 3)["status"] == "pass"
    assert commutator_check(field, {A2: Q(1)}, alg, 3)["status"] == "pass"


def test_commutator_with_opposite_sign_fails(alg):
    assert commutator_check({-1: 1}, {A: Q(1)}, alg, 3, sign=-1)["status"] == "fail"


@pytest.mark.parametrize("lam", [Q(2), Q(-1, 3)])
def test_rescaling_invariance(mod, lam):
    r = invariance_check(EElement(mod, 2, VAC), rescaling(lam, 6), [A, A2], mod.basis_upto(3))
    assert r["status"] == "pass" and r["exact"]


def test_perturbative_invariance(mod):
    phi = TranslatedMap(mod, number_operator)
    r = invariance_check(phi, moebius(eps, 6, 2), [A, A2, AA], mod.basis_upto(3))
    assert r["status"] == "pass"
    assert invariance_check(phi, power_shift(eps, 3, 6, 2), [A, A2], mod.basis_upto(3))["status"] == "pass"


def test_invariance_precondition(mod):
    r = invariance_check(EElement(mod, 1, A), rescaling(2, 6), [A], mod.basis_upto(3))
    assert r["status"] == "rejected"
    assert "vacuum-like target (degree offset 0)" in r["missing"]


def test_generating_set_size():
    assert len(generating_set(6)) == 7
