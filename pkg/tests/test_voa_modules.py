import pytest

from vertexfol.modules import check_f_intertwine, check_translation, exp_translate
from vertexfol.rational import LinearForm, RationalForm
from vertexfol.scalars import Q
from vertexfol.voa import (ConfigurationError, CorruptedAlgebra, check_axioms, heisenberg_voa, matrix_element,
                           partition_count, virasoro_bracket)
from vertexfol.wvalued import number_operator

from conftest import A, A2, AA, VAC


def test_graded_dimensions_are_partition_numbers(alg):
    assert [len(alg.basis(n)) for n in range(7)] == [1, 1, 2, 3, 5, 7, 11]
    assert partition_count(10) == 42


def test_small_cutoff_rejected():
    with pytest.raises(ConfigurationError):
        heisenberg_voa(1)


def test_axioms_at_cutoff_three():
    r = check_axioms(heisenberg_voa(3))
    assert r["passed"], r["checks"]


def test_corrupted_mode_table_fails_axioms(alg):
    bad = CorruptedAlgebra(heisenberg_voa(4), A, A, A2)
    r = check_axioms(bad, 2)
    assert not r["passed"]
    assert any(c.get("witness") for c in r["checks"] if c["status"] != "pass")


def test_two_point_function(alg):
    one, a = {VAC: Q(1)}, {A: Q(1)}
    f = matrix_element(alg, one, [(a, "z1"), (a, "z2")], one)
    assert f == RationalForm.inverse_power(LinearForm.diff("z1", "z2"), 2)


def test_mode_commutator_oracle(alg):
    # coefficient of a(-1)a(-1)1 in Y(a, z1)a: only the creation mode a(-1) reaches it
    a = {A: Q(1)}
    assert matrix_element(alg, {AA: Q(1)}, [(a, "z1")], a) == RationalForm.const(Q(1))
    # a(1)a(-1)1 = 1 gives the z1^{-2} term
    assert matrix_element(alg, {VAC: Q(1)}, [(a, "z1")], a) == RationalForm.inverse_power(LinearForm.var("z1"), 2)


@pytest.mark.parametrize("m,n", [(1, -1), (2, -2), (2, -1), (0, 1)])
def test_virasoro_relations(alg, m, n):
    assert virasoro_bracket(alg, m, n, 3)["status"] == "pass"


def test_translation_series(mod):
    assert check_translation(mod, {A: Q(1)}, 3, 4)["status"] == "pass"
    e = exp_translate(mod, {A: Q(1)}, 3)
    assert e[A] == 1 and e[A2] == 1


def test_intertwining_needs_L_minus1_commuting_map(mod):
    assert check_f_intertwine(mod, lambda v: {k: c * len(k) for k, c in v.items() if k}, {A: Q(1)}, 4)["status"] == "pass"
    weight_map = lambda v: {k: c * mod.weight(k) for k, c in v.items()}
    r = check_f_intertwine(mod, weight_map, {A: Q(1)}, 4)
    assert r["status"] == "fail" and r["witness"]


def test_number_operator_counts_parts():
    assert number_operator(AA) == {AA: 2}
    assert number_operator(VAC) == {}
