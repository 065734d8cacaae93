import pytest

from vertexfol.cohomology import (PreconditionError, check_delta_squared, check_ef_agreement,
                                  check_extension_equivalence, coboundary, coboundary_ex, cochain_to_extension,
                                  connection_predicates, corrupted_sign, derivation_space, extension_axioms,
                                  extension_from_map, extension_to_cocycle, h1_compute, is_exact, membership_C2ex,
                                  trivial_extension)
from vertexfol.rational import LinearForm, RationalForm
from vertexfol.wvalued import EElement, ElementCochain, TranslatedMap, essential_singularity_fixture, number_operator

from conftest import A, AA, A2, VAC


@pytest.fixture(scope="module")
def phi_n(mod):
    return TranslatedMap(mod, number_operator, name="Phi_N")


def test_degree_zero_coboundary(mod):
    d = coboundary(ElementCochain(mod, {A: 1}))
    assert d.arity == 1
    assert check_delta_squared(ElementCochain(mod, {A: 1}), [A], [VAC, A, AA])["status"] == "pass"


def test_coboundary_of_number_operator(mod, phi_n):
    # the outer terms each see N(a) = a; the middle term sees N(1) = 0 at the vacuum
    d = coboundary(phi_n)
    assert d.entry((A, A), VAC) == RationalForm.inverse_power(LinearForm.diff("z1", "z2"), 2, 2)
    assert d.entry((A, A), AA).is_zero()


@pytest.mark.parametrize("phi_name", ["Phi_N", "E1"])
def test_delta_squared_vanishes(mod, phi_n, phi_name):
    phi = phi_n if phi_name == "Phi_N" else EElement(mod, 1, VAC)
    assert check_delta_squared(phi, [A], [VAC, A, AA])["status"] == "pass"


def test_corrupted_sign_breaks_delta_squared(mod, phi_n):
    from vertexfol.cohomology import _nonzero_witness

    _, witness = _nonzero_witness(coboundary(corrupted_sign(phi_n)), [A], [VAC, A])
    assert witness is not None


def test_exceptional_coboundary_sign_variants(mod, phi_n):
    assert check_delta_squared(phi_n, [A], [VAC, A], ex_variant="alternating")["status"] == "pass"
    r = check_delta_squared(phi_n, [A], [VAC, A], ex_variant="printed")
    assert r["status"] == "fail" and r["witness"]


def test_exceptional_coboundary_needs_arity_two(mod, phi_n):
    with pytest.raises((PreconditionError, ValueError)):
        coboundary_ex(phi_n, "alternating").entry((A, A), VAC)


def test_h1_matches_derivations_at_cutoff_two(mod):
    r = h1_compute(mod, 1, 2)
    assert r["dim_H1"] == r["dim_Der"] == len(derivation_space(mod, 2))
    assert r["status"] == "pass"
    with pytest.raises(PreconditionError):
        h1_compute(mod, 0, 2)


def test_connection_predicates(mod, phi_n):
    assert connection_predicates(TranslatedMap(mod, lambda k: {}), "fixed-point", [A], [VAC, A])["status"] == "pass"


def test_membership_of_two_point_element(mod):
    assert membership_C2ex(EElement(mod, 2, VAC), [A], [VAC, A])["status"] == "pass"
    assert membership_C2ex(essential_singularity_fixture(mod), [VAC], [VAC], majorant=False)["status"] == "fail"


@pytest.fixture(scope="module")
def extension(mod):
    return extension_from_map(mod, number_operator, 3)


def test_square_zero_extension_axioms(extension):
    r = extension_axioms(extension, 3, 2)
    assert r["passed"]


def test_ef_expressions_agree(extension):
    assert check_ef_agreement(extension, 2)["status"] == "pass"


def test_extension_cocycle_is_minus_coboundary(mod, extension, phi_n):
    cocycle = extension_to_cocycle(extension)
    d = coboundary(phi_n)
    for keys in [(A, A), (A, AA)]:
        for ko in mod.basis_upto(3):
            assert cocycle.entry(keys, ko) == -d.entry(keys, ko)
    r = is_exact(cocycle, [phi_n, EElement(mod, 1, VAC)], [A, AA], [VAC, A, AA])
    assert r["exact"]


def test_trivial_round_trip_and_equivalence(mod, extension, phi_n):
    trivial = trivial_extension(mod, 3)
    assert all(extension_to_cocycle(trivial).entry((k1, k2), VAC).is_zero() for k1 in (A, AA) for k2 in (A, A2))
    back = cochain_to_extension(coboundary(phi_n).scale(-1), 3, conformal_w=extension._conformal_w)
    assert check_extension_equivalence(trivial, back, number_operator, 3)["status"] == "pass"
    assert check_extension_equivalence(trivial, back, lambda k: {}, 3)["status"] == "fail"
