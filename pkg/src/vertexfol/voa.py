"""Graded vertex algebras realized by mode tables, with the rank-one
Heisenberg Fock space as the working instance.

Vectors are plain dicts ``basis key -> Q``.  ``Y(v, z)u`` is stored as the
vector of its components: the component of weight k multiplies
``z^(k - wt v - wt u)``, so the z-exponent is never stored separately.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Sequence, Tuple

from .rational import LinearForm, RationalForm, z as zname
from .series import LaurentSeries, Region, required_bounds, series_to_rational
from .scalars import Q, ZERO, binom

Key = Hashable
Vector = Dict[Key, Q]


class ConfigurationError(ValueError):
    pass


# vector helpers ---------------------------------------------------------------

def vec_add(a: Mapping, b: Mapping, scale=1) -> Vector:
    out = dict(a)
    s = Q(scale)
    for k, c in b.items():
        v = out.get(k, ZERO) + s * c
        if v == 0:
            out.pop(k, None)
        else:
            out[k] = v
    return out


def vec_scale(a: Mapping, c) -> Vector:
    c = Q(c)
    if c == 0:
        return {}
    return {k: v * c for k, v in a.items()}


def vec_accumulate(acc: Vector, b: Mapping, scale) -> None:
    for k, c in b.items():
        v = acc.get(k, ZERO) + scale * c
        if v == 0:
            acc.pop(k, None)
        else:
            acc[k] = v


def vec_clean(a: Mapping) -> Vector:
    return {k: Q(c) for k, c in a.items() if c != 0}


class VertexAlgebra:
    """A graded space with a vertex operator given on basis keys.

    Subclasses supply ``vacuum``, ``weight``, ``basis`` and ``_Y_basis``.
    ``cutoff`` is the largest weight of states fed into checks; operators
    themselves compute exact components up to any requested weight.
    """

    vacuum: Key = None
    cutoff: int = 0
    central_charge = None

    def weight(self, key: Key) -> int:
        raise NotImplementedError

    def basis(self, weight: int) -> List[Key]:
        raise NotImplementedError

    def _Y_basis(self, v: Key, u: Key, max_weight: int) -> Vector:
        raise NotImplementedError

    def conformal_vector(self) -> Vector | None:
        return None

    def key_str(self, key: Key) -> str:
        return str(key)

    # derived structure ------------------------------------------------------
    def basis_upto(self, cutoff: int) -> List[Key]:
        out = []
        for w in range(cutoff + 1):
            out.extend(self.basis(w))
        return out

    def dims(self, cutoff: int) -> Tuple[int, ...]:
        return tuple(len(self.basis(w)) for w in range(cutoff + 1))

    def vec_weights(self, v: Mapping) -> set:
        return {self.weight(k) for k in v}

    def Y(self, v: Mapping, u: Mapping, max_weight: int, min_weight: int = 0) -> Vector:
        """Components of Y(v, z)u with weights in [min_weight, max_weight]."""
        out: Vector = {}
        for kv, cv in v.items():
            for ku, cu in u.items():
                res = self._Y_basis(kv, ku, max_weight)
                vec_accumulate(out, {k: c for k, c in res.items() if self.weight(k) >= min_weight}, cv * cu)
        return out

    def mode(self, v: Mapping, n: int, u: Mapping) -> Vector:
        """v(n)u: the coefficient of z^(-n-1) in Y(v, z)u."""
        out: Vector = {}
        for kv, cv in v.items():
            for ku, cu in u.items():
                target = self.weight(kv) + self.weight(ku) - n - 1
                if target < 0:
                    continue
                res = self._Y_basis(kv, ku, target)
                vec_accumulate(out, {k: c for k, c in res.items() if self.weight(k) == target}, cv * cu)
        return out

    def L(self, n: int, u: Mapping) -> Vector:
        """Virasoro mode L(n) = omega(n + 1)."""
        omega = self.conformal_vector()
        if omega is None:
            if n == 0:
                return self.L0(u)
            if n == -1:
                return self.L_minus1(u)
            raise ConfigurationError("algebra has no conformal vector")
        return self.mode(omega, n + 1, u)

    def L0(self, u: Mapping) -> Vector:
        """Weight operator."""
        return {k: c * self.weight(k) for k, c in u.items() if self.weight(k) != 0}

    def L_minus1(self, u: Mapping) -> Vector:
        """Translation operator v -> v(-2)1."""
        cache = self.__dict__.setdefault("_lm1_cache", {})
        out: Vector = {}
        for k, c in u.items():
            img = cache.get(k)
            if img is None:
                img = self.mode({k: Q(1)}, -2, {self.vacuum: Q(1)})
                cache[k] = img
            vec_accumulate(out, img, c)
        return out

    def exp_L_minus1(self, u: Mapping, max_weight: int, scale=1) -> Dict[int, Vector]:
        """e^{x L(-1)} u by powers of x: {k: L(-1)^k u / k!}, truncated by weight."""
        out = {0: dict(u)}
        cur = dict(u)
        k = 0
        while cur and min(self.vec_weights(cur)) + 1 <= max_weight:
            k += 1
            cur = vec_scale(self.L_minus1(cur), Q(scale) / k)
            if cur:
                out[k] = cur
        return out


def vec_str(alg: VertexAlgebra, v: Mapping) -> str:
    if not v:
        return "0"
    items = sorted(v.items(), key=lambda kc: (alg.weight(kc[0]), str(kc[0])))
    return " + ".join(f"{c}*{alg.key_str(k)}" for k, c in items)


# Heisenberg Fock space ------------------------------------------------------

def partitions(n: int, largest: int | None = None) -> List[Tuple[int, ...]]:
    """Partitions of n as non-increasing tuples."""
    return list(_partitions(n, n if largest is None else largest))


@lru_cache(maxsize=None)
def _partitions(n: int, largest: int | None = None) -> Tuple[Tuple[int, ...], ...]:
    if largest is None:
        largest = n
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def _insert_part(lam: Tuple[int, ...], part: int) -> Tuple[int, ...]:
    lst = list(lam)
    i = 0
    while i < len(lst) and lst[i] >= part:
        i += 1
    lst.insert(i, part)
    return tuple(lst)


def _remove_part(lam: Tuple[int, ...], part: int) -> Tuple[int, ...]:
    lst = list(lam)
    lst.remove(part)
    return tuple(lst)


def generator_mode(j: int, lam: Tuple[int, ...]) -> Tuple[Tuple[int, ...], int] | None:
    """a(j) on the partition state lam; None if the result vanishes."""
    if j < 0:
        return _insert_part(lam, -j), 1
    if j == 0:
        return None
    mult = lam.count(j)
    if mult == 0:
        return None
    return _remove_part(lam, j), j * mult


class Heisenberg(VertexAlgebra):
    """Rank-one free boson at zero momentum.

    Basis keys are partitions: (n1, n2, ...) is a(-n1)a(-n2)...1.  The
    generator a = a(-1)1 has weight 1 and [a(m), a(n)] = m delta_{m+n,0}.
    """

    central_charge = Q(1)

    def __init__(self, cutoff: int):
        if cutoff < 2:
            raise ConfigurationError("cutoff must be at least 2 to contain the conformal vector")
        self.cutoff = cutoff
        self.vacuum = ()
        self._memo: Dict[Tuple, Vector] = {}

    def weight(self, key) -> int:
        return sum(key)

    def basis(self, weight: int):
        return partitions(weight) if weight >= 0 else []

    def key_str(self, key) -> str:
        if not key:
            return "1"
        return "".join(f"a({-p})" for p in key) + "1"

    def conformal_vector(self) -> Vector:
        return {(1, 1): Q(1, 2)}

    def generator(self) -> Vector:
        return {(1,): Q(1)}

    def _Y_basis(self, v, u, max_weight: int) -> Vector:
        if max_weight < 0:
            return {}
        memo_key = (v, u, max_weight)
        hit = self._memo.get(memo_key)
        if hit is not None:
            return hit
        if v == ():
            res = {u: Q(1)} if self.weight(u) <= max_weight else {}
        else:
            n = v[0]
            b = v[1:]
            res: Vector = {}
            # creation half: a(j), j <= -n, applied after Y(b, z)
            j = -n
            while max_weight + j >= 0:
                c = binom(-j - 1, n - 1)
                inner = self._Y_basis(b, u, max_weight + j)
                for k, x in inner.items():
                    moved = generator_mode(j, k)
                    if moved is not None:
                        key, f = moved
                        vec_accumulate(res, {key: Q(1)}, c * f * x)
                j -= 1
            # annihilation half: Y(b, z) a(j) u, j > 0
            for j in sorted(set(u)):
                c = binom(-j - 1, n - 1)
                moved = generator_mode(j, u)
                key, f = moved
                inner = self._Y_basis(b, key, max_weight)
                vec_accumulate(res, inner, c * f)
        self._memo[memo_key] = res
        return res


class TrivialAlgebra(VertexAlgebra):
    """The one-dimensional algebra spanned by the vacuum."""

    def __init__(self):
        self.vacuum = ()
        self.cutoff = 0

    def weight(self, key) -> int:
        return 0

    def basis(self, weight: int):
        return [()] if weight == 0 else []

    def _Y_basis(self, v, u, max_weight):
        return {(): Q(1)} if max_weight >= 0 else {}

    def L_minus1(self, u):
        return {}


def heisenberg_voa(cutoff: int) -> Heisenberg:
    return Heisenberg(cutoff)


class CorruptedAlgebra(VertexAlgebra):
    """Wraps an algebra and perturbs one entry of its mode table."""

    def __init__(self, base: VertexAlgebra, v: Key, u: Key, out: Key, delta=1):
        self.base = base
        self.vacuum = base.vacuum
        self.cutoff = base.cutoff
        self.central_charge = base.central_charge
        self.target = (v, u, out)
        self.delta = Q(delta)

    def weight(self, key):
        return self.base.weight(key)

    def basis(self, weight):
        return self.base.basis(weight)

    def key_str(self, key):
        return self.base.key_str(key)

    def conformal_vector(self):
        return self.base.conformal_vector()

    def _Y_basis(self, v, u, max_weight):
        res = self.base._Y_basis(v, u, max_weight)
        tv, tu, tout = self.target
        if (v, u) == (tv, tu) and self.weight(tout) <= max_weight:
            res = vec_add(res, {tout: self.delta})
        return res


# correlators ------------------------------------------------------------------

def _homogeneous_parts(alg: VertexAlgebra, v: Mapping) -> List[Tuple[Key, Q]]:
    return [(k, Q(c)) for k, c in v.items() if c != 0]


def chain_apply(alg: VertexAlgebra, keys: Sequence[Key], target: Key, limits: Sequence[int]) -> Dict[Tuple[int, ...], Vector]:
    """Y(k_1, z_1)...Y(k_n, z_n) target, sorted by intermediate weights.

    ``limits[i]`` bounds the weight of the state produced by the factor at
    position i.  Returns {(wt u_{n-1}, ..., wt u_0): vector u_0}.
    """
    states: Dict[Tuple[int, ...], Vector] = {(): {target: Q(1)}}
    for pos in range(len(keys) - 1, -1, -1):
        k = keys[pos]
        nxt: Dict[Tuple[int, ...], Vector] = {}
        for hist, vec in states.items():
            for ku, cu in vec.items():
                out = alg._Y_basis(k, ku, limits[pos])
                for ko, co in out.items():
                    h = hist + (alg.weight(ko),)
                    bucket = nxt.setdefault(h, {})
                    val = bucket.get(ko, ZERO) + cu * co
                    if val == 0:
                        bucket.pop(ko, None)
                    else:
                        bucket[ko] = val
        states = {h: v for h, v in nxt.items() if v}
    return states


def _tail_limits(alg, keys, target, bounds, final_max):
    n = len(keys)
    wts = [alg.weight(k) for k in keys]
    wt_t = alg.weight(target)
    limits = [final_max] + [0] * (n - 1)
    for j in range(2, n + 1):  # 1-based factor index
        limits[j - 1] = bounds[j - 2] + sum(wts[j - 1:]) + wt_t
    return limits


def correlator_series_all(alg: VertexAlgebra, keys: Sequence[Key], target: Key, bounds, out_weights: Iterable[int]) -> Dict[Key, Dict[Tuple[int, ...], Q]]:
    """Exponent tables of <k', Y(k_1,z_1)...Y(k_n,z_n)target> for all output
    basis keys k' with weight in ``out_weights``."""
    out_weights = set(out_weights)
    n = len(keys)
    if n == 0:
        return {target: {(): Q(1)}} if alg.weight(target) in out_weights else {}
    limits = _tail_limits(alg, keys, target, bounds, max(out_weights))
    wts = [alg.weight(k) for k in keys]
    wt_t = alg.weight(target)
    states = chain_apply(alg, keys, target, limits)
    result: Dict[Key, Dict[Tuple[int, ...], Q]] = {}
    for hist, vec in states.items():
        # hist = (wt u_{n-1}, ..., wt u_0); u_n = target
        inter = [wt_t] + list(hist)  # inter[t] = wt u_{n-t}
        e = [0] * n
        for i in range(1, n + 1):
            e[i - 1] = inter[n - i + 1] - wts[i - 1] - inter[n - i]
        e = tuple(e)
        for ko, c in vec.items():
            if alg.weight(ko) not in out_weights:
                continue
            tab = result.setdefault(ko, {})
            tab[e] = tab.get(e, ZERO) + c
    return result


def default_budget(alg: VertexAlgebra, keys: Sequence[Key], variables: Sequence[str], target: Key) -> Dict[LinearForm, int]:
    """Pole budget wt v_i + wt v_j on z_i - z_j, and wt v_i + wt w on z_i
    (dropped when the target is the vacuum)."""
    wts = [alg.weight(k) for k in keys]
    budget: Dict[LinearForm, int] = {}
    n = len(keys)
    for i in range(n):
        for j in range(i + 1, n):
            m = wts[i] + wts[j]
            if m > 0:
                budget[LinearForm.diff(variables[i], variables[j])] = m
    if target != alg.vacuum:
        for i in range(n):
            m = wts[i] + alg.weight(target)
            if m > 0:
                budget[LinearForm.var(variables[i])] = m
    return budget


def _as_pairs(v) -> List[Tuple[Key, Q]]:
    return [(k, Q(c)) for k, c in v.items() if c != 0]


def matrix_element(alg: VertexAlgebra, dual: Mapping, factors: Sequence[Tuple[Mapping, str]], target: Mapping, budget: Mapping | None = None) -> RationalForm:
    """R(<dual, Y(v_1,z_1)...Y(v_n,z_n) target>) as a canonical rational form.

    ``dual`` is a coefficient row over basis keys; ``factors`` pairs each
    vector with its variable name, dominant first.
    """
    variables = [name for _, name in factors]
    region = Region(variables)
    total = RationalForm.zero()
    vec_lists = [_as_pairs(v) for v, _ in factors]
    dual = {k: Q(c) for k, c in dual.items() if c != 0}
    dual_weights = {alg.weight(k) for k in dual}
    if not dual:
        return total
    forms = []
    for choice in product(*vec_lists):
        keys = [k for k, _ in choice]
        coeff = Q(1)
        for _, c in choice:
            coeff *= c
        for kt, ct in _as_pairs(target):
            bud = budget if budget is not None else default_budget(alg, keys, variables, kt)
            wsum = sum(alg.weight(k) for k in keys) + alg.weight(kt)
            maxdeg = max(dual_weights) - wsum
            bounds = required_bounds(region, bud, maxdeg) if len(keys) > 1 else ()
            tabs = correlator_series_all(alg, keys, kt, bounds, dual_weights)
            series_terms: Dict[Tuple[int, ...], Q] = {}
            for ko, cd in dual.items():
                for e, c in tabs.get(ko, {}).items():
                    series_terms[e] = series_terms.get(e, ZERO) + cd * c
            if len(keys) == 0:
                val = series_terms.get((), ZERO)
                forms.append(RationalForm.const(val * coeff * ct))
                continue
            s = LaurentSeries(region, bounds, series_terms)
            forms.append(series_to_rational(s, bud).scale(coeff * ct))
    from .rational import rf_sum

    return rf_sum(forms)


def dual_basis(key: Key) -> Dict[Key, Q]:
    return {key: Q(1)}


# axiom verification -------------------------------------------------------------

def _report_entry(name, ok, checked, witness=None):
    entry = {"name": name, "status": "pass" if ok else "fail", "checked": checked}
    if witness is not None:
        entry["witness"] = witness
    return entry


def partition_count(n: int) -> int:
    """p(n) by the standard dynamic program over allowed part sizes."""
    ways = [1] + [0] * n
    for part in range(1, n + 1):
        for total in range(part, n + 1):
            ways[total] += ways[total - part]
    return ways[n]


def two_point_region_forms(alg: VertexAlgebra, k1, k2, kt, out_keys: Sequence[Key]):
    """The three duality orderings for (k1, k2, kt) as rational forms per
    output key; returns (forms12, forms21, forms_iterate)."""
    z1, z2 = zname(1), zname(2)
    w1, w2, wt = alg.weight(k1), alg.weight(k2), alg.weight(kt)
    out_w = {alg.weight(k) for k in out_keys}
    bud12 = default_budget(alg, [k1, k2], [z1, z2], kt)
    bud21 = default_budget(alg, [k2, k1], [z2, z1], kt)
    maxdeg = max(out_w) - w1 - w2 - wt
    r12 = Region([z1, z2])
    b12 = required_bounds(r12, bud12, maxdeg)
    t12 = correlator_series_all(alg, [k1, k2], kt, b12, out_w)
    r21 = Region([z2, z1])
    b21 = required_bounds(r21, bud21, maxdeg)
    t21 = correlator_series_all(alg, [k2, k1], kt, b21, out_w)
    # iterate: Y(Y(k1, x)k2, z2) kt with x = z1 - z2 and |z2| > |x|
    x = "x12"
    rit = Region([z2, x])
    from .poly import MultiPoly

    bud_it: Dict[LinearForm, int] = {}
    for f, m in bud12.items():
        p = f.to_poly().subs({z1: MultiPoly.var(z2) + MultiPoly.var(x)})
        _, nf = LinearForm.from_poly(p)
        bud_it[nf] = bud_it.get(nf, 0) + m
    bit = required_bounds(rit, bud_it, maxdeg)
    inner = alg._Y_basis(k1, k2, bit[0] + w1 + w2)
    tit: Dict[Key, Dict[Tuple[int, ...], Q]] = {}
    for ku, cu in inner.items():
        ex = alg.weight(ku) - w1 - w2
        outer = alg._Y_basis(ku, kt, max(out_w))
        for ko, co in outer.items():
            if alg.weight(ko) not in out_w:
                continue
            ez = alg.weight(ko) - alg.weight(ku) - wt
            tab = tit.setdefault(ko, {})
            tab[(ez, ex)] = tab.get((ez, ex), ZERO) + cu * co
    res = []
    for region, bud, bounds, tabs in ((r12, bud12, b12, t12), (r21, bud21, b21, t21), (rit, bud_it, bit, tit)):
        forms = {}
        for ko in out_keys:
            s = LaurentSeries(region, bounds, tabs.get(ko, {}))
            f = series_to_rational(s, bud)
            if region is rit:
                f = f.subs({x: MultiPoly.var(z1) - MultiPoly.var(z2)})
            forms[ko] = f
        res.append(forms)
    return res


def check_axioms(alg: VertexAlgebra, cutoff: int | None = None, duality_cutoff: int | None = None) -> Dict:
    """Verify the vertex algebra axioms on all basis states of weight <= cutoff.

    Returns {"algebra", "cutoff", "checks": [entries], "passed"}; each entry
    carries the first counterexample on failure.
    """
    from .series import ReconstructionFailure, InsufficientCutoff

    if cutoff is None:
        cutoff = alg.cutoff
    if duality_cutoff is None:
        duality_cutoff = cutoff
    states = alg.basis_upto(cutoff)
    one = {alg.vacuum: Q(1)}
    checks = []

    # grading restriction: finite graded pieces, nothing in negative weight,
    # modes shift weight as prescribed
    ok, witness, n = True, None, 0
    for w in range(-2, 0):
        if alg.basis(w):
            ok, witness = False, {"weight": w, "dim": len(alg.basis(w))}
    for v in states:
        for u in states:
            n += 1
            for ko in alg._Y_basis(v, u, cutoff):
                if ko not in set(alg.basis(alg.weight(ko))):
                    ok, witness = False, {"v": alg.key_str(v), "u": alg.key_str(u), "out": str(ko)}
    checks.append(_report_entry("grading_restriction", ok, n, witness))

    # lower truncation: v(n)u = 0 once wt v + wt u - n - 1 < 0
    ok, witness, n = True, None, 0
    for v in states:
        for u in states:
            n += 1
            top = alg.weight(v) + alg.weight(u)
            if alg.mode({v: 1}, top, {u: 1}) or alg.mode({v: 1}, top + 1, {u: 1}):
                ok, witness = False, {"v": alg.key_str(v), "u": alg.key_str(u)}
                break
    checks.append(_report_entry("lower_truncation", ok, n, witness))

    # identity
    ok, witness, n = True, None, 0
    for u in states:
        n += 1
        res = alg._Y_basis(alg.vacuum, u, cutoff + 2)
        if res != {u: Q(1)}:
            ok, witness = False, {"u": alg.key_str(u), "got": vec_str(alg, res)}
            break
    checks.append(_report_entry("identity", ok, n, witness))

    # creation: no negative powers, constant term v
    ok, witness, n = True, None, 0
    for v in states:
        n += 1
        res = alg._Y_basis(v, alg.vacuum, alg.weight(v) + 2)
        low = {k: c for k, c in res.items() if alg.weight(k) < alg.weight(v)}
        const = {k: c for k, c in res.items() if alg.weight(k) == alg.weight(v)}
        if low or const != {v: Q(1)}:
            ok, witness = False, {"v": alg.key_str(v), "negative_part": vec_str(alg, low), "constant": vec_str(alg, const)}
            break
    checks.append(_report_entry("creation", ok, n, witness))

    # duality: the three orderings give one rational form
    ok, witness, n = True, None, 0
    dstates = alg.basis_upto(duality_cutoff)
    out_keys_all = alg.basis_upto(duality_cutoff)
    for k1 in dstates:
        if not ok:
            break
        for k2 in dstates:
            if not ok:
                break
            for kt in dstates:
                n += 1
                try:
                    f12, f21, fit = two_point_region_forms(alg, k1, k2, kt, out_keys_all)
                except (ReconstructionFailure, InsufficientCutoff) as exc:
                    ok = False
                    witness = {"v1": alg.key_str(k1), "v2": alg.key_str(k2), "w": alg.key_str(kt), "error": str(exc)}
                    break
                for ko in out_keys_all:
                    if not (f12[ko] == f21[ko] == fit[ko]):
                        ok = False
                        witness = {
                            "v1": alg.key_str(k1), "v2": alg.key_str(k2), "w": alg.key_str(kt),
                            "dual": alg.key_str(ko),
                            "forms": [f12[ko].to_str(), f21[ko].to_str(), fit[ko].to_str()],
                        }
                        break
                if not ok:
                    break
    checks.append(_report_entry("duality", ok, n, witness))

    # L(0)-bracket: with L(0) the weight operator and also omega(1) when present
    ok, witness, n = True, None, 0
    omega = alg.conformal_vector()
    for u in states:
        if omega is not None:
            l0 = alg.mode(omega, 1, {u: 1})
            if l0 != alg.L0({u: 1}):
                ok, witness = False, {"u": alg.key_str(u), "omega(1)u": vec_str(alg, l0)}
                break
    if ok:
        for v in states:
            for u in states:
                n += 1
                res = alg._Y_basis(v, u, cutoff + 1)
                lhs = {}
                for ko, c in res.items():
                    # [L0, Y(v,z)]u component of weight k: (k - wt u) c
                    val = (alg.weight(ko) - alg.weight(u)) * c
                    if val != 0:
                        lhs[ko] = val
                rhs = {}
                for ko, c in res.items():
                    e = alg.weight(ko) - alg.weight(v) - alg.weight(u)
                    val = alg.weight(v) * c + e * c
                    if val != 0:
                        rhs[ko] = val
                l0_out = alg.L0(res)
                lhs2 = vec_add(l0_out, alg.Y({v: 1}, alg.L0({u: 1}), cutoff + 1), -1)
                if lhs != rhs or lhs2 != rhs:
                    ok, witness = False, {"v": alg.key_str(v), "u": alg.key_str(u)}
                    break
            if not ok:
                break
    checks.append(_report_entry("L0_bracket", ok, n, witness))

    # L(-1)-derivative: Y(L(-1)v, z) = d/dz Y(v, z) = [L(-1), Y(v, z)]
    ok, witness, n = True, None, 0
    for v in states:
        lv = alg.L_minus1({v: 1})
        if omega is not None and lv != alg.mode(omega, 0, {v: 1}):
            ok, witness = False, {"v": alg.key_str(v), "reason": "v(-2)1 differs from omega(0)v"}
            break
        for u in states:
            n += 1
            top = cutoff + 1
            res = alg._Y_basis(v, u, top)
            deriv = {}
            for ko, c in res.items():
                e = alg.weight(ko) - alg.weight(v) - alg.weight(u)
                if e != 0:
                    deriv[ko] = e * c
            lhs = alg.Y(lv, {u: 1}, top)
            comm = vec_add(alg.L_minus1(alg.Y({v: 1}, {u: 1}, top - 1)), alg.Y({v: 1}, alg.L_minus1({u: 1}), top), -1)
            # [L(-1), Y]u at weight <= top needs Y(v)u at weight <= top - 1
            lhs_t = {k: c for k, c in lhs.items() if alg.weight(k) <= top}
            der_t = {k: c for k, c in deriv.items() if alg.weight(k) <= top}
            comm_t = {k: c for k, c in comm.items() if alg.weight(k) <= top}
            if lhs_t != der_t or comm_t != der_t:
                ok, witness = False, {"v": alg.key_str(v), "u": alg.key_str(u)}
                break
        if not ok:
            break
    checks.append(_report_entry("L_minus1_derivative", ok, n, witness))

    return {
        "algebra": type(alg).__name__,
        "cutoff": cutoff,
        "checks": checks,
        "passed": all(c["status"] == "pass" for c in checks),
    }


def virasoro_bracket(alg: VertexAlgebra, m: int, n: int, cutoff: int | None = None) -> Dict:
    """Check [L(m), L(n)] = (m-n)L(m+n) + c/12 (m^3-m) delta_{m+n,0} on all
    basis states of weight <= cutoff."""
    if cutoff is None:
        cutoff = alg.cutoff
    c = alg.central_charge
    failures = []
    checked = 0
    for u in alg.basis_upto(cutoff):
        checked += 1
        vu = {u: Q(1)}
        lhs = vec_add(alg.L(m, alg.L(n, vu)), alg.L(n, alg.L(m, vu)), -1)
        rhs = vec_scale(alg.L(m + n, vu), m - n)
        if m + n == 0:
            rhs = vec_add(rhs, vu, c * Q(m ** 3 - m, 12))
        if lhs != rhs:
            failures.append({"state": alg.key_str(u), "lhs": vec_str(alg, lhs), "rhs": vec_str(alg, rhs)})
            break
    return {"m": m, "n": n, "checked": checked, "status": "pass" if not failures else "fail", "witness": failures[0] if failures else None}
