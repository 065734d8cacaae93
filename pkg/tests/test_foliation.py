import math

import pytest
from hypothesis import given, settings, strategies as st

from vertexfol import foliation as fol
from vertexfol.cohomology import coboundary
from vertexfol.poly import MultiPoly
from vertexfol.rational import LinearForm, RationalForm
from vertexfol.scalars import GaussQ, Q
from vertexfol.wvalued import EElement, ElementCochain, TranslatedMap, number_operator

from conftest import A, VAC

SQRT2 = {"surd": [0, 1, 2, 1]}


def torus(slope="1/2", sections=1):
    return fol.build_model({"kind": "torus", "slope": slope, "sections": sections})


ANNULUS = {"kind": "annulus", "sections": [[1, 3], ["3/2", "5/2"]]}
CYLINDER = {"kind": "cylinder", "sections": [0, 1]}


def test_half_slope_doubled_loop_is_identity():
    m = torus("1/2")
    (h,) = m.generators()
    assert not m.is_identity_germ(h)
    assert m.is_identity_germ(m.compose(h, h))


def test_irrational_slope_has_no_periodic_holonomy():
    m = torus(SQRT2)
    assert m.char_order is None
    assert not any(m.is_identity_germ(fol.HolonomyEmbedding(0, 0, n)) for n in range(-20, 21) if n)


def test_zero_slope_is_tagged_degenerate():
    assert any("degenerate" in t for t in torus("0").tags)


def test_surd_sign_is_exact():
    assert fol.QuadraticSurd(3, -2, 2, 1).sign() == 1     # 3 - 2 sqrt 2 > 0
    assert fol.QuadraticSurd(-3, 2, 2, 1).sign() == -1
    assert fol.QuadraticSurd(1, -1, 2, -1).sign() == 1    # (1 - sqrt 2) / -1 > 0
    with pytest.raises(fol.FoliationError):
        fol.QuadraticSurd(0, 1, 4, 1)


def test_transversal_bases():
    assert len(fol.transversal_basis(torus(), 3)["generators"]) == 3
    ann = fol.build_model(ANNULUS)
    gens = fol.transversal_basis(ann)["generators"]
    assert all(g.scale <= 1 for g in gens)
    cyl = fol.build_model({"kind": "cylinder", "sections": [0]})
    assert [g.winding for g in fol.transversal_basis(cyl)["generators"]] == [0]
    with pytest.raises(fol.FoliationError):
        fol.transversal_basis(torus(), 0)


def test_holonomy_is_functorial():
    m = torus("1/3", 2)
    g0, g1 = m.generators()
    path = [g0, g1, g0]
    hol = fol.path_holonomy(m, path)
    assert hol == m.compose(m.compose(g0, g1), g0)
    assert hol.winding == 3
    with pytest.raises(fol.NotComposable):
        m.compose(g0, g0)


def test_delta_of_constant_is_zero():
    m = torus()
    d = fol.cech_delta(fol.unit_cochain(m))
    assert all(d(ch).is_zero() for ch in fol.chains(m, 1))


def test_delta_of_fourier_mode():
    m = torus("1/3")
    w = fol.CechCochain(m, 0, 0, lambda ch: fol.SectionForm(m, ch[0], 0, {(1, 0): 1}))
    (h,) = m.generators()
    val = fol.cech_delta(w)((0, (h,)))
    # e^{2 pi i alpha} e^{2 pi i t} - e^{2 pi i t}
    assert val.data == {(1, 1): 1, (1, 0): -1}


def test_interval_pullback_is_affine_substitution():
    m = fol.build_model(ANNULUS)
    h = next(e for e in m.embeddings(0) if e.source == 1 and e.target == 0)
    f = fol.SectionForm(m, 0, 0, {1: 1})           # t on the wide section
    assert f.pullback(h).data == {0: Q(1, 4), 1: Q(1, 2)}
    df = fol.SectionForm(m, 0, 1, {0: 1})          # dt pulls back to (1/2) dt
    assert df.pullback(h).data == {0: Q(1, 2)}


@pytest.mark.parametrize("spec", [{"kind": "torus", "slope": "1/2", "sections": 1},
                                  {"kind": "torus", "slope": SQRT2, "sections": 1}, ANNULUS, CYLINDER])
def test_delta_squared_and_leibniz(spec):
    m = fol.build_model(spec)
    assert fol.check_delta_squared(m, 4, 3)["status"] == "pass"
    assert fol.check_leibniz(m, 4, 3)["status"] == "pass"


def test_degree_product_sign_breaks_leibniz():
    r = fol.check_leibniz(torus(), 3, 2, sign="printed")
    assert r["status"] == "fail"
    assert r["witness"]["residual"] != "0"


def test_unit_is_two_sided_identity():
    m = fol.build_model(ANNULUS)
    one = fol.unit_cochain(m)
    w = fol.random_cochain(m, 2, 1, 3, seed=5)
    for ch in fol.chains(m, 2):
        assert fol.cech_product(one, w)(ch) == w(ch)
        assert fol.cech_product(w, one)(ch) == w(ch)


def test_swapping_degree_one_factors_costs_a_sign():
    m = torus()
    x, y = fol.random_cochain(m, 1, 0, 2, 1), fol.random_cochain(m, 1, 0, 2, 2)
    for ch in fol.chains(m, 2):
        assert fol.cech_product(x, y, "printed")(ch) == -fol.cech_product(x, y, "form-degree")(ch)


def test_random_tables_are_reproducible():
    m = torus()
    ch = fol.chains(m, 1)[0]
    assert fol.random_cochain(m, 1, 0, 4, 9)(ch) == fol.random_cochain(m, 1, 0, 4, 9)(ch)
    assert fol.random_cochain(m, 1, 0, 4, 9)(ch) != fol.random_cochain(m, 1, 0, 4, 10)(ch)


@pytest.mark.parametrize("slope,q", [("1/2", 2), ("1/3", 3), ("2/3", 3), ("3/4", 4)])
def test_rational_slope_invariants(slope, q):
    D = 4
    m = torus(slope)
    assert fol.cech_cohomology(m, 0, 0, D)["betti"][0] == 2 * (D // q) + 1


@pytest.mark.parametrize("surd", [[0, 1, 2, 1], [1, 1, 5, 2], [0, 1, 3, 7]])
def test_irrational_slope_invariants_are_constants(surd):
    assert fol.cech_cohomology(torus({"surd": surd}), 0, 0, 4)["betti"][0] == 1


@pytest.mark.parametrize("slope", ["1/2", "2/5", SQRT2])
def test_refining_the_basis_keeps_h0(slope):
    counts = {fol.cech_cohomology(torus(slope, s), 0, 0, 4)["betti"][0] for s in (1, 2, 3)}
    assert len(counts) == 1


def test_annulus_and_cylinder_h0():
    assert fol.cech_cohomology(fol.build_model(ANNULUS), 1, 0, 4)["betti"][0] == 5
    assert fol.cech_cohomology(fol.build_model(CYLINDER), 1, 0, 4)["betti"][0] == 9


def test_cyclotomic_arithmetic():
    F = fol.CharacterField(6)
    xi = F.power(1)
    assert F.power(6) == F.const(1)
    assert F.mul(xi, F.inv(xi)) == F.const(1)
    G = fol.CharacterField(None)
    x = G.add(G.power(1), G.const(-1))
    assert G.mul(x, G.inv(x)) == G.const(1)


def test_characteristic_form_on_one_leaf(mod):
    E2 = EElement(mod, 2, VAC)
    y1, y2 = MultiPoly.var("y1"), MultiPoly.var("y2")
    r = fol.characteristic_form(E2, VAC, [A, A], {"z1": fol.ChartPoint(0, y1), "z2": fol.ChartPoint(0, y2)})
    assert r["value"] == RationalForm.inverse_power(LinearForm.diff("y1", "y2"), 2)
    r = fol.characteristic_form(E2, VAC, [A, A], {"z1": fol.ChartPoint(0, Q(2)), "z2": fol.ChartPoint(1, Q(2))})
    assert r["status"] == "singular"


def test_characteristic_form_of_translated_map_is_constant(mod):
    phi = TranslatedMap(mod, number_operator)
    vals = {fol.characteristic_form(phi, A, [A], {"z1": Q(t)})["value_str"] for t in (0, 1, 5)}
    assert vals == {"1"}


W = GaussQ(Q(1, 3), Q(1, 5))


def test_log_integral():
    r = fol.characteristic_integral(fol.ComplexRational([1], {W: 1}), [W + 1, W + 2])
    assert abs(r["value"] - math.log(2)) <= r["error_bound"] + 1e-15


def test_rational_term_is_exact():
    r = fol.characteristic_integral(fol.ComplexRational([1], {W: 2}), [W + 1, W + 2])
    assert r["exact_rational"] == ("1/2", "0")


def test_path_through_pole_rejected():
    with pytest.raises(fol.PathThroughPole):
        fol.characteristic_integral(fol.ComplexRational([1], {W: 1}), [W - 1, W + 1])
    with pytest.raises(fol.PathThroughPole):
        fol.characteristic_integral(fol.ComplexRational([1], {W: 1}), [W + GaussQ(1, Q(-1, 10)), W + GaussQ(1, Q(1, 10))],
                                    clearance=Q(2))


@given(st.integers(-3, 3), st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_winding_number_times_residue(c, turns):
    loop = []
    for _ in range(turns):
        loop += [W + GaussQ(1, -1), W + GaussQ(1, 1), W + GaussQ(-1, 1), W + GaussQ(-1, -1)]
    loop.append(loop[0])
    R = fol.ComplexRational([c, 1], {W: 1, W + 5: 2})
    r = fol.characteristic_integral(R, loop)
    _, terms = R.partial_fractions()
    residue = terms[(W, 1)].to_complex()
    assert abs(r["value"] - 2j * math.pi * turns * residue) <= 1e-10


def test_partial_fractions_rebuild():
    R = fol.ComplexRational([1, 2, 3], {GaussQ(0, 1): 2, GaussQ(1): 1})
    poly, terms = R.partial_fractions()
    z = GaussQ(Q(7, 3), Q(-2, 5))
    lhs = (GaussQ(1) + GaussQ(2) * z + GaussQ(3) * z * z) / ((z - GaussQ(0, 1)) ** 2 * (z - GaussQ(1)))
    rhs = sum((c / (z - r) ** k for (r, k), c in terms.items()), GaussQ(0))
    for i, c in enumerate(poly):
        rhs = rhs + c * z ** i
    assert lhs == rhs


def test_integral_from_rational_form():
    rf = RationalForm.inverse_power(LinearForm.var("z"), 1)
    square = [GaussQ(1, -1), GaussQ(1, 1), GaussQ(-1, 1), GaussQ(-1, -1), GaussQ(1, -1)]
    assert fol.characteristic_integral(rf, square)["two_pi_i_coefficient"] == ("1", "0")


def test_bridge_reports_both_routes(mod):
    m = torus()
    zero = fol.cm_bridge(ElementCochain(mod, {A: 1}), m, [A], A, coboundary=coboundary)
    assert zero["agreeing"] == zero["entries"] == 3
    r = fol.cm_bridge(TranslatedMap(mod, lambda k: {}), m, [A, A], A, coboundary=coboundary)
    assert r["cech_zero"] == r["entries"]
    r = fol.cm_bridge(EElement(mod, 1, VAC), m, [A, A], A, coboundary=coboundary)
    assert r["entries"] == 9 and all("residual" in x for x in r["records"])
    with pytest.raises(fol.FoliationError):
        fol.cm_bridge(TranslatedMap(mod, number_operator), m, [A, A], A, l=3)
