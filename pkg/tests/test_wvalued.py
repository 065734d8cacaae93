import pytest

from vertexfol.rational import LinearForm, RationalForm
from vertexfol.wvalued import (EElement, ElementCochain, Permuted, TranslatedMap, check_L0_conjugation,
                               check_L1_derivative, check_composable, check_nesting, check_shuffle,
                               essential_singularity_fixture, number_operator, perm_sign, shuffles)

from conftest import A, A2, AA, VAC


def test_e_elements(mod):
    E2 = EElement(mod, 2, VAC)
    assert E2.entry((A, A), VAC) == RationalForm.inverse_power(LinearForm.diff("z1", "z2"), 2)
    E1 = EElement(mod, 1, VAC)
    assert E1.entry((A,), A2).to_str() == "z1"
    assert EElement(mod, 0, A).entry((), A) == RationalForm.const(1)


def test_translated_map_is_polynomial(mod):
    phi = TranslatedMap(mod, number_operator)
    assert phi.entry((A,), A).to_str() == "1"
    assert phi.entry((A,), A2).to_str() == "z1"
    assert phi.entry((A2,), A).is_zero()


def test_wrong_arity_rejected(mod):
    with pytest.raises(ValueError):
        EElement(mod, 2, VAC).entry((A,), VAC)


@pytest.mark.parametrize("arity", [1, 2])
def test_e_elements_have_derivative_and_conjugation_properties(mod, arity):
    phi = EElement(mod, arity, VAC)
    assert check_L1_derivative(phi, 1, 3)["status"] == "pass"
    assert check_L0_conjugation(phi, 1, 3)["status"] == "pass"


def test_shuffle_enumeration():
    assert len(shuffles(3, 1)) == 3
    assert len(shuffles(4, 2)) == 6
    assert perm_sign((2, 3, 1)) == 1 and perm_sign((2, 1, 3)) == -1


def test_symmetric_two_cochain_fails_shuffle_at_arity_two(mod):
    # Phi(v1, z1; v2, z2) - Phi(v2, z2; v1, z1) vanishes for E2, which is symmetric
    assert check_shuffle(EElement(mod, 2, VAC), 2, 1)["status"] == "pass"


def test_composability_certificate(mod):
    r = check_composable(EElement(mod, 2, VAC), 1, [A], [VAC, A, AA])
    assert r["status"] == "pass"
    assert r["N"] == {"a(-1)1,a(-1)1": 2}


def test_arity_one_composable(mod):
    assert check_composable(EElement(mod, 1, VAC), 1, [A], [VAC, AA])["status"] == "pass"


def test_nesting_of_composability(mod):
    r = check_nesting(EElement(mod, 2, VAC), 1, [A], [VAC, A])
    assert r["status"] == "pass"
    assert all(r["N_upper"].get(k, 0) >= v for k, v in r["N_lower"].items())


def test_essential_singularity_is_not_composable(mod):
    r = check_composable(essential_singularity_fixture(mod), 1, [VAC], [VAC], majorant=False)
    assert r["status"] == "fail"
    assert r["witness"]["condition"] in ("I", "J")


def test_permuted_cochain_swaps_slots(mod):
    phi = ElementCochain(mod, {A: 1})
    assert phi.entry((), A) == RationalForm.const(1)
    E2 = EElement(mod, 2, A)
    swapped = Permuted(E2, (2, 1))
    assert swapped.entry((A, VAC), AA) == E2.entry((VAC, A), AA).rename({"z1": "z2", "z2": "z1"})
