"""Formal coordinate changes rho(z) = a_1 z + a_2 z^2 + ... and their action on
graded spaces.

Coefficients are MultiPoly objects so that maps may depend on a formal
deformation parameter ``eps`` (truncated at a fixed order) and on auxiliary
variables such as the base point of a local coordinate.

Exponential form: rho = exp(sum_{k>0} b_k z^{k+1} d/dz) b_0^{z d/dz} . z, which
unwinds to rho = b_0 * phi where phi is the time-one flow of the vector field.
"""

from __future__ import annotations

from typing import Dict, List, Mapping, Sequence

from .poly import MultiPoly
from .rational import RationalForm, rf_sum
from .scalars import Q, ZERO, binom, factorial
from .voa import VertexAlgebra, vec_str
from .wvalued import Cochain, check_L0_conjugation, check_L1_derivative, zvars

EPS = "eps"


class NotACoordinateChange(ValueError):
    pass


def _mp(x) -> MultiPoly:
    return x if isinstance(x, MultiPoly) else MultiPoly.const(x)


def _trunc(p: MultiPoly, eps_order: int | None) -> MultiPoly:
    if eps_order is None:
        return p
    return MultiPoly({m: c for m, c in p.terms.items() if dict(m).get(EPS, 0) <= eps_order})


def _mul(a: MultiPoly, b: MultiPoly, eps_order) -> MultiPoly:
    return _trunc(a * b, eps_order)


def unit_inverse(u: MultiPoly, eps_order: int | None) -> MultiPoly:
    """Inverse of u whose eps-free part is a nonzero constant."""
    u = _mp(u)
    base = _trunc(u, 0)
    if not base.is_const() or base.const_value() == 0:
        raise NotACoordinateChange(f"{u.to_str()} is not invertible in the coefficient ring")
    c = base.const_value()
    x = (u - base) * (Q(1) / c)
    if x.is_zero():
        return MultiPoly.const(Q(1) / c)
    if eps_order is None:
        raise NotACoordinateChange("non-constant unit needs an eps truncation")
    out = MultiPoly.const(1)
    term = MultiPoly.const(1)
    for _ in range(eps_order):
        term = _mul(term, -x, eps_order)
        out = out + term
    return out * (Q(1) / c)


def unit_power(u: MultiPoly, n: int, eps_order: int | None) -> MultiPoly:
    base = _mp(u) if n >= 0 else unit_inverse(u, eps_order)
    out = MultiPoly.const(1)
    for _ in range(abs(n)):
        out = _mul(out, base, eps_order)
    return out


class CoordMap:
    """rho(z) = sum_{k=1}^{order} a_k z^k; ``coeffs[k-1]`` holds a_k."""

    def __init__(self, coeffs: Sequence, eps_order: int | None = None, name: str = "rho"):
        self.coeffs = [_trunc(_mp(c), eps_order) for c in coeffs]
        self.eps_order = eps_order
        self.name = name

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def series(self) -> List[MultiPoly]:
        """Coefficient list indexed by power of z, starting at z^0."""
        return [MultiPoly.const(0)] + list(self.coeffs)

    def is_linear(self) -> bool:
        return all(c.is_zero() for c in self.coeffs[1:])

    def polynomial(self, var: str) -> MultiPoly:
        x = MultiPoly.var(var)
        return sum((c * x ** (k + 1) for k, c in enumerate(self.coeffs)), MultiPoly.const(0))

    def __repr__(self):
        return f"CoordMap({self.name}: {[c.to_str() for c in self.coeffs]})"


def identity_map(order: int) -> CoordMap:
    return CoordMap([1] + [0] * (order - 1), name="id")


def rescaling(lam, order: int) -> CoordMap:
    return CoordMap([lam] + [0] * (order - 1), name=f"{lam}z")


def moebius(eps, order: int, eps_order: int | None = None) -> CoordMap:
    """z / (1 - eps z) = z + eps z^2 + eps^2 z^3 + ..."""
    e = _mp(eps)
    return CoordMap([e ** k for k in range(order)], eps_order, name=f"z/(1-({e.to_str()})z)")


def power_shift(eps, k: int, order: int, eps_order: int | None = None) -> CoordMap:
    """z + eps z^k."""
    coeffs = [MultiPoly.const(0) for _ in range(order)]
    coeffs[0] = MultiPoly.const(1)
    if k - 1 < order:
        coeffs[k - 1] = coeffs[k - 1] + _mp(eps)
    return CoordMap(coeffs, eps_order, name=f"z+({_mp(eps).to_str()})z^{k}")


def _series_mul(a, b, n, eps_order):
    out = [MultiPoly.const(0) for _ in range(n + 1)]
    for i, x in enumerate(a[: n + 1]):
        if x.is_zero():
            continue
        for j, y in enumerate(b[: n + 1 - i]):
            if not y.is_zero():
                out[i + j] = out[i + j] + _mul(x, y, eps_order)
    return out


def compose(f: CoordMap, g: CoordMap) -> CoordMap:
    """(f o g)(z) = f(g(z)) through the smaller order."""
    n = min(f.order, g.order)
    eo = _merge_eps(f.eps_order, g.eps_order)
    gs = g.series()[: n + 1]
    total = [MultiPoly.const(0) for _ in range(n + 1)]
    power = [MultiPoly.const(1)] + [MultiPoly.const(0)] * n
    for k in range(1, n + 1):
        power = _series_mul(power, gs, n, eo)
        a = f.coeffs[k - 1]
        if a.is_zero():
            continue
        for i in range(n + 1):
            total[i] = total[i] + _mul(a, power[i], eo)
    return CoordMap(total[1:], eo, name=f"({f.name})o({g.name})")


def _merge_eps(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _apply_field(betas, g, n, eps_order):
    """X g with X = sum_{k>=1} b_k z^{k+1} d/dz, on coefficient lists."""
    dg = [g[i + 1] * (i + 1) for i in range(len(g) - 1)] + [MultiPoly.const(0)]
    out = [MultiPoly.const(0) for _ in range(n + 1)]
    for k in range(1, len(betas)):
        b = betas[k]
        if b.is_zero():
            continue
        for i, c in enumerate(dg):
            if i + k + 1 <= n and not c.is_zero():
                out[i + k + 1] = out[i + k + 1] + _mul(b, c, eps_order)
    return out


def flow(betas: Sequence, n: int, eps_order=None) -> List[MultiPoly]:
    """exp(X) z through z^n, as coefficients indexed by power."""
    betas = [_mp(b) for b in betas]
    cur = [MultiPoly.const(0), MultiPoly.const(1)] + [MultiPoly.const(0)] * (n - 1)
    total = list(cur)
    for j in range(1, n + 1):
        cur = [c * Q(1, j) for c in _apply_field(betas, cur, n, eps_order)]
        if all(c.is_zero() for c in cur):
            break
        total = [x + y for x, y in zip(total, cur)]
    return total


def beta_coefficients(rho: CoordMap, convention: str = "plain") -> List[MultiPoly]:
    """(b_0, ..., b_{N-1}) with rho = exp(sum b_k z^{k+1} d/dz) b_0^{z d/dz} . z.

    ``convention="weighted"`` returns c_k = b_k / (k + 1), the coefficients for
    which the exponent reads sum (k+1) c_k z^{k+1} d/dz."""
    a1 = rho.coeffs[0]
    if a1.is_zero():
        raise NotACoordinateChange("leading coefficient vanishes")
    eo = rho.eps_order
    n = rho.order
    inv = unit_inverse(a1, eo)
    target = [MultiPoly.const(0)] + [_mul(c, inv, eo) for c in rho.coeffs]
    betas = [a1] + [MultiPoly.const(0) for _ in range(n - 1)]
    for k in range(1, n):
        got = flow(betas, k + 1, eo)
        betas[k] = _trunc(target[k + 1] - got[k + 1], eo)
    if convention == "weighted":
        return [betas[0]] + [b * Q(1, k + 1) for k, b in enumerate(betas) if k > 0]
    if convention != "plain":
        raise ValueError(f"unknown convention {convention!r}")
    return betas


def plain_betas(betas: Sequence, convention: str) -> List[MultiPoly]:
    if convention == "plain":
        return [_mp(b) for b in betas]
    return [_mp(betas[0])] + [_mp(b) * (k + 1) for k, b in enumerate(betas) if k > 0]


def reexpand(betas: Sequence, n: int, eps_order=None, convention: str = "plain") -> CoordMap:
    """rho rebuilt from its exponential-form coefficients."""
    b = plain_betas(betas, convention)
    phi = flow([MultiPoly.const(0)] + b[1:], n, eps_order)
    return CoordMap([_mul(b[0], c, eps_order) for c in phi[1:]], eps_order)


# ---------------------------------------------------------------- operators
ORDERINGS = ("dilation-first", "dilation-last")


class RepOperator:
    """Truncated linear map on V_{<= cutoff}: columns[key] = image vector with
    MultiPoly coefficients."""

    def __init__(self, alg: VertexAlgebra, cutoff: int, columns: Dict, eps_order=None):
        self.alg = alg
        self.cutoff = cutoff
        self.columns = columns
        self.eps_order = eps_order

    def apply(self, v: Mapping) -> Dict:
        out: Dict = {}
        for k, c in v.items():
            for ko, x in self.columns[k].items():
                out[ko] = _trunc(out.get(ko, MultiPoly.const(0)) + x * c, self.eps_order)
        return {k: x for k, x in out.items() if not x.is_zero()}

    def __matmul__(self, other: "RepOperator") -> "RepOperator":
        cols = {k: self.apply(other.columns[k]) for k in other.columns}
        return RepOperator(self.alg, self.cutoff, cols, _merge_eps(self.eps_order, other.eps_order))

    def entry(self, out_key, in_key) -> MultiPoly:
        return self.columns[in_key].get(out_key, MultiPoly.const(0))

    def __eq__(self, other):
        return self.columns == other.columns

    def preserves_filtration(self) -> bool:
        w = self.alg.weight
        return all(w(ko) <= w(ki) for ki, col in self.columns.items() for ko in col)

    def degree_zero_block(self) -> Dict:
        w = self.alg.weight
        return {ki: {ko: x for ko, x in col.items() if w(ko) == w(ki)} for ki, col in self.columns.items()}


def _apply_L(alg, m, vec, eps_order):
    out: Dict = {}
    for k, c in vec.items():
        for ko, x in alg.L(m, {k: Q(1)}).items():
            out[ko] = _trunc(out.get(ko, MultiPoly.const(0)) + c * x, eps_order)
    return {k: x for k, x in out.items() if not x.is_zero()}


def operator_from_betas(alg: VertexAlgebra, betas: Sequence, cutoff: int, eps_order=None,
                        convention: str = "weighted", ordering: str = "dilation-first") -> RepOperator:
    """exp(sum_{m>0} (m+1) c_m L(m)) b_0^{L(0)} in the weighted convention.

    With ``ordering="dilation-first"`` the dilation b_0^{L(0)} acts before the
    exponential (the operator is written exp(...) b_0^{L(0)}); with
    ``"dilation-last"`` it is b_0^{L(0)} exp(...)."""
    b = plain_betas(betas, convention)
    b0 = b[0]
    columns = {}
    for key in alg.basis_upto(cutoff):
        wt = alg.weight(key)
        if ordering == "dilation-first":
            vec = {key: unit_power(b0, wt, eps_order)}
            vec = _exp_positive(alg, b, vec, eps_order)
        elif ordering == "dilation-last":
            vec = _exp_positive(alg, b, {key: MultiPoly.const(1)}, eps_order)
            vec = {k: _mul(x, unit_power(b0, alg.weight(k), eps_order), eps_order) for k, x in vec.items()}
        else:
            raise ValueError(f"unknown ordering {ordering!r}")
        columns[key] = {k: x for k, x in vec.items() if not x.is_zero()}
    return RepOperator(alg, cutoff, columns, eps_order)


def _exp_positive(alg, b, vec, eps_order):
    total = dict(vec)
    cur = dict(vec)
    j = 0
    while cur:
        j += 1
        nxt: Dict = {}
        for m in range(1, len(b)):
            if b[m].is_zero():
                continue
            for k, x in _apply_L(alg, m, cur, eps_order).items():
                nxt[k] = _trunc(nxt.get(k, MultiPoly.const(0)) + _mul(x, b[m], eps_order), eps_order)
        cur = {k: x * Q(1, j) for k, x in nxt.items() if not x.is_zero()}
        for k, x in cur.items():
            total[k] = total.get(k, MultiPoly.const(0)) + x
    return {k: x for k, x in total.items() if not x.is_zero()}


def p_operator(f: CoordMap, alg: VertexAlgebra, cutoff: int, ordering: str = "dilation-last") -> RepOperator:
    """The operator representing ``f`` on V_{<= cutoff}; weighted coefficients
    carry the (m+1) prefactor so that (m+1) c_m equals the plain b_m."""
    if f.order <= cutoff:
        raise ValueError("coordinate map order must exceed the weight cutoff")
    return operator_from_betas(alg, beta_coefficients(f, "weighted"), cutoff, f.eps_order, "weighted", ordering)


def rep_check(f1: CoordMap, f2: CoordMap, alg: VertexAlgebra, cutoff: int, ordering: str = "dilation-last") -> Dict:
    """P(f1 * f2) = P(f1) P(f2) with f1 * f2 = f1 o f2, as truncated matrices."""
    lhs = p_operator(compose(f1, f2), alg, cutoff, ordering)
    rhs = p_operator(f1, alg, cutoff, ordering) @ p_operator(f2, alg, cutoff, ordering)
    checked = len(lhs.columns)
    for k in lhs.columns:
        if lhs.columns[k] != rhs.columns[k]:
            diff = {ko: (lhs.entry(ko, k) - rhs.entry(ko, k)).to_str() for ko in set(lhs.columns[k]) | set(rhs.columns[k])
                    if lhs.entry(ko, k) != rhs.entry(ko, k)}
            return {"status": "fail", "checked": checked,
                    "witness": {"f1": f1.name, "f2": f2.name, "state": alg.key_str(k),
                                "difference": {alg.key_str(ko): s for ko, s in diff.items()}}}
    return {"status": "pass", "checked": checked, "ordering": ordering}


def generating_set(order: int) -> List[CoordMap]:
    return [rescaling(Q(2), order), rescaling(Q(-1, 3), order), moebius(Q(1), order), moebius(Q(-1, 2), order),
            power_shift(Q(1), 2, order), power_shift(Q(3, 2), 3, order), power_shift(Q(-1), 4, order)]


def certify_representation(alg: VertexAlgebra, cutoff: int, maps: Sequence[CoordMap] | None = None) -> Dict:
    """Run rep_check over all ordered pairs of ``maps`` for each operator
    ordering; reports the orderings under which the group law holds."""
    maps = list(maps) if maps is not None else generating_set(cutoff + 2)
    results = {}
    for ordering in ORDERINGS:
        res = {"status": "pass", "pairs": 0}
        for f1 in maps:
            for f2 in maps:
                r = rep_check(f1, f2, alg, cutoff, ordering)
                res["pairs"] += 1
                if r["status"] != "pass":
                    res = {"status": "fail", "pairs": res["pairs"], "witness": r["witness"]}
                    break
            if res["status"] != "pass":
                break
        results[ordering] = res
    certified = [o for o in ORDERINGS if results[o]["status"] == "pass"]
    return {"status": "pass" if certified else "fail", "certified": certified, "results": results}


# ------------------------------------------------------------ commutators
def commutator_check(beta_field: Mapping[int, object], v: Mapping, alg: VertexAlgebra, cutoff: int,
                     sign: int = 1, extra: int = 1) -> Dict:
    """[B, Y(v, z)] = sum_{m >= -1} (d^{m+1}b(z) / (m+1)!) Y(L(m)v, z) with
    b(z) = sum_n b_n z^{n+1} and B = sign * sum_n b_n L(n), compared as
    coefficients of z on basis states of weight <= cutoff."""
    field = {n: Q(c) for n, c in beta_field.items() if Q(c) != 0}
    if any(n < -1 for n in field):
        raise ValueError("vector field must be regular at the origin")
    top_n = max(field, default=-1)
    wv = max(alg.weight(k) for k in v)
    checked = 0
    for ku in alg.basis_upto(cutoff):
        u = {ku: Q(1)}
        wu = alg.weight(ku)
        out_top = wu + wv + extra
        lhs: Dict = {}
        yu = alg.Y(v, u, out_top + max(top_n, 0))
        for n, bn in field.items():
            _add_graded(alg, lhs, _Lmap(alg, n, yu), wu, wv, n, sign * bn)
            _add_graded(alg, lhs, alg.Y(v, _Lmap(alg, n, u), out_top + max(top_n, 0)), wu, wv, 0, -sign * bn, shift_in=-n)
        rhs: Dict = {}
        for m in range(-1, top_n + 1):
            lv = _Lmap(alg, m, v)
            if not lv:
                continue
            ylv = alg.Y(lv, u, out_top)
            for n, bn in field.items():
                c = bn * binom(n + 1, m + 1) if n + 1 >= m + 1 else 0
                if c:
                    _add_graded(alg, rhs, ylv, wu, wv - m, n - m, c)
        lhs = {k: c for k, c in lhs.items() if c != 0 and alg.weight(k[0]) <= out_top}
        rhs = {k: c for k, c in rhs.items() if c != 0 and alg.weight(k[0]) <= out_top}
        checked += 1
        if lhs != rhs:
            bad = sorted(set(lhs) | set(rhs), key=lambda t: (t[1], alg.weight(t[0]), str(t[0])))
            for key in bad:
                if lhs.get(key, ZERO) != rhs.get(key, ZERO):
                    return {"status": "fail", "checked": checked,
                            "witness": {"state": alg.key_str(ku), "output": alg.key_str(key[0]), "z_power": key[1],
                                        "lhs": str(lhs.get(key, ZERO)), "rhs": str(rhs.get(key, ZERO))}}
    return {"status": "pass", "checked": checked}


def _Lmap(alg, n, vec):
    if n == -1:
        return alg.L_minus1(vec)
    if n == 0:
        return alg.L0(vec)
    return alg.L(n, vec)


def _add_graded(alg, acc, vec, wu, wv, zshift, scale, shift_in=0):
    """Record components of a Y-image as (key, z-power) -> coefficient.

    A component of weight k of Y(v', z)u' multiplies z^(k - wt v' - wt u');
    ``shift_in`` corrects wt u' when u' = L(n)u."""
    for k, c in vec.items():
        p = alg.weight(k) - wv - (wu + shift_in) + zshift
        acc[(k, p)] = acc.get((k, p), ZERO) + scale * c


# ---------------------------------------------------------------- invariance
def local_map(rho: CoordMap, base: str) -> CoordMap:
    """rho_x(t) = rho(x + t) - rho(x) with x the variable ``base``."""
    n = rho.order
    x = MultiPoly.var(base)
    coeffs = [MultiPoly.const(0) for _ in range(n)]
    for k, a in enumerate(rho.coeffs, start=1):
        if a.is_zero():
            continue
        for j in range(1, k + 1):
            if j <= n:
                coeffs[j - 1] = coeffs[j - 1] + a * x ** (k - j) * binom(k, j)
    return CoordMap(coeffs, rho.eps_order, name=f"{rho.name}@{base}")


def _vector_rf(vec):
    return {k: RationalForm.from_poly(_mp(c)) for k, c in vec.items()}


def _eps_coefficients(f: RationalForm, order: int) -> List[RationalForm]:
    """Split a form polynomial in eps (no eps in poles) into eps-coefficients."""
    parts = f.num.coefficients_in(EPS)
    out = []
    for j in range(order + 1):
        p = parts.get(j)
        out.append(RationalForm.zero() if p is None else RationalForm(p, f.poles))
    return out


def _shifted_entry(phi: Cochain, keys, ko, shifts: Mapping[str, MultiPoly], eps_order: int) -> RationalForm:
    """<w', Phi(keys; z_i + shift_i)> by Taylor expansion in the shifts, which
    are O(eps)."""
    base = phi.entry(keys, ko)
    names = [n for n, s in shifts.items() if not s.is_zero()]
    total = RationalForm.zero()
    frontier = [((), base)]
    seen = set()
    while frontier:
        nxt = []
        for alpha, deriv in frontier:
            coeff = MultiPoly.const(1)
            for n in names:
                e = alpha.count(n)
                if e:
                    coeff = _mul(coeff, unit_power(shifts[n], e, eps_order), eps_order) * Q(1, factorial(e))
            total = total + deriv * RationalForm.from_poly(coeff)
            if len(alpha) >= eps_order:
                continue
            for n in names:
                beta = tuple(sorted(alpha + (n,)))
                if beta not in seen:
                    seen.add(beta)
                    nxt.append((beta, deriv.diff(n)))
        frontier = nxt
    return total


def _truncate_rf(f: RationalForm, eps_order: int) -> RationalForm:
    return RationalForm(_trunc(f.num, eps_order), f.poles)


def invariance_check(phi: Cochain, rho: CoordMap, input_keys: Sequence, dual_keys: Sequence,
                     ordering: str = "dilation-last", precheck: bool = True) -> Dict:
    """<w', P(rho) Phi(v_1, z_1; ...)> = <w', Phi(P(rho_{z_1})v_1, rho(z_1); ...)>.

    For inputs killed by the positive Virasoro modes P(rho_z)v is the Jacobian
    factor rho'(z)^{wt v} times v.  Linear rho is checked exactly by
    substitution; otherwise rho must be the identity modulo eps, and both
    sides are compared coefficientwise through ``rho.eps_order``."""
    mod = phi.mod
    alg = mod.alg
    if precheck:
        missing = []
        if check_L1_derivative(phi, input_cutoff=1, out_cutoff=2, shift_order=1)["status"] != "pass":
            missing.append("L(-1)-derivative")
        if check_L0_conjugation(phi, input_cutoff=1, out_cutoff=2)["status"] != "pass":
            missing.append("L(0)-conjugation")
        if phi.degree_offset() != 0:
            missing.append("vacuum-like target (degree offset 0)")
        if missing:
            return {"status": "rejected", "missing": missing}
    n = phi.arity
    names = zvars(n)
    eo = rho.eps_order
    exact = rho.is_linear()
    if not exact:
        if eo is None:
            raise ValueError("non-linear maps are checked perturbatively; set eps_order")
        for k, c in enumerate(rho.coeffs):
            if _trunc(c, 0) != MultiPoly.const(1 if k == 0 else 0):
                raise ValueError("non-linear map must reduce to the identity at eps = 0")
    betas = beta_coefficients(rho, "weighted")
    # positive modes lower weight; each carries at least one power of eps
    reach = 0 if exact else eo * max((m for m, b in enumerate(betas) if m and not b.is_zero()), default=0)
    top = max((mod.weight(k) for k in dual_keys), default=0) + reach
    p_out = operator_from_betas(alg, betas, top, eo, "weighted", ordering)
    locals_ = [local_map(rho, z) for z in names]
    local_ops = {}
    checked = 0
    for keys in _input_tuples(input_keys, n):
        # right side: Phi evaluated on transformed inputs at transformed points
        images = []
        for i, k in enumerate(keys):
            lk = (i, k)
            if lk not in local_ops:
                wt = mod.weight(k)
                op = operator_from_betas(alg, beta_coefficients(locals_[i], "weighted"), wt, eo, "weighted", ordering)
                local_ops[lk] = op.columns[k]
            images.append(local_ops[lk])
        for ko in dual_keys:
            checked += 1
            lhs = RationalForm.zero()
            for ku in mod.basis_upto(mod.weight(ko) + reach):
                c = p_out.columns[ku].get(ko)
                if c is not None and not c.is_zero():
                    lhs = lhs + phi.entry(keys, ku) * RationalForm.from_poly(c)
            rhs = RationalForm.zero()
            for combo in _product_terms(images, eo):
                ks, coeff = combo
                if exact:
                    lam = rho.coeffs[0].const_value()
                    val = phi.entry(ks, ko).subs({z: MultiPoly.var(z) * lam for z in names})
                else:
                    shifts = {z: _trunc(rho.polynomial(z) - MultiPoly.var(z), eo) for z in names}
                    val = _shifted_entry(phi, ks, ko, shifts, eo)
                rhs = rhs + val * RationalForm.from_poly(coeff)
            if not exact:
                lhs, rhs = _truncate_rf(lhs, eo), _truncate_rf(rhs, eo)
            if lhs != rhs:
                return {"status": "fail", "checked": checked,
                        "witness": {"inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko),
                                    "lhs": lhs.to_str(), "rhs": rhs.to_str()}}
    return {"status": "pass", "checked": checked, "exact": exact,
            "orders": None if exact else eo}


def _input_tuples(input_keys, n):
    if n == 0:
        yield ()
        return
    for k in input_keys:
        for rest in _input_tuples(input_keys, n - 1):
            yield (k,) + rest


def _product_terms(images, eps_order):
    """Expand prod_i (sum_k c_{i,k} k) into (key tuple, coefficient) pairs."""
    terms = [((), MultiPoly.const(1))]
    for img in images:
        new = []
        for ks, c in terms:
            for k, x in img.items():
                y = _mul(c, x, eps_order)
                if not y.is_zero():
                    new.append((ks + (k,), y))
        terms = new
    return terms
