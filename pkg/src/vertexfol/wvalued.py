"""W-bar valued rational functions: cochain tables, E-elements, projections,
the L(-1)/L(0)/shuffle properties and composability with vertex operators.

A cochain of arity n is a linear map V^n -> W-bar_{z_1..z_n}.  It is stored
lazily: ``entry(keys, out_key)`` is the canonical rational form of
<out_key', Phi(k_1, z_1; ...; k_n, z_n)> in the variables z1..zn, where
out_key' is the dual basis element (coefficient extraction).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

from .linalg import nullspace
from .modules import VModule, exp_translate
from .poly import MultiPoly
from .rational import LinearForm, RationalForm, rf_sum, z as zname
from .scalars import Q, ZERO
from .series import (
    DomainError,
    InsufficientCutoff,
    LaurentSeries,
    ReconstructionFailure,
    Region,
    _fits,
    required_bounds,
    rf_expand,
    series_to_rational,
    tails,
)
from .voa import _tail_limits, chain_apply, correlator_series_all, default_budget, vec_accumulate


class NotRational(ValueError):
    """The cochain only provides series data for its entries."""


class OutsideTruncation(ValueError):
    """An entry needs data beyond the weight truncation of the cochain."""


class CompositionError(ValueError):
    """A composite series does not reconstruct within the pole budget."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def zvars(n: int, start: int = 1) -> List[str]:
    return [zname(i) for i in range(start, start + n)]


# cochains ---------------------------------------------------------------------

class Cochain:
    """Base class; subclasses implement ``_entry``."""

    arity: int = 0

    def __init__(self, mod: VModule, arity: int, name: str = ""):
        self.mod = mod
        self.arity = arity
        self.name = name or type(self).__name__
        self._cache: Dict[Tuple, RationalForm] = {}

    def entry(self, keys: Sequence, out_key) -> RationalForm:
        keys = tuple(keys)
        if len(keys) != self.arity:
            raise ValueError(f"{self.name} takes {self.arity} inputs, got {len(keys)}")
        ck = (keys, out_key)
        hit = self._cache.get(ck)
        if hit is None:
            hit = self._entry(keys, out_key)
            self._cache[ck] = hit
        return hit

    def _entry(self, keys, out_key) -> RationalForm:
        raise NotImplementedError

    def expansion(self, keys, out_key, rename: Mapping, region: Region, limit) -> Dict:
        """Tail-coordinate expansion of an entry in ``region`` after renaming
        z1..zn by ``rename``."""
        f = self.entry(keys, out_key)
        if f.is_zero():
            return {}
        if rename:
            f = f.subs(rename)
        return rf_expand(f, region, limit).tail_terms()

    def degree_offset(self) -> int | None:
        """Entries are homogeneous of degree wt(out) - sum wt(keys) - offset;
        None when no such statement is made."""
        return 0

    def entry_degree(self, keys, out_weight: int):
        off = self.degree_offset()
        if off is None:
            return None
        return out_weight - sum(self.mod.weight(k) for k in keys) - off

    def output_weight_range(self, keys, max_degree: int) -> range:
        """Output weights whose entries can have total degree <= max_degree."""
        off = self.degree_offset() or 0
        top = max_degree + sum(self.mod.weight(k) for k in keys) + off
        return range(0, max(top, -1) + 1)

    def values(self, keys, weight: int) -> Dict:
        """All nonzero entries with output weight ``weight``."""
        out = {}
        for ko in self.mod.basis(weight):
            f = self.entry(keys, ko)
            if not f.is_zero():
                out[ko] = f
        return out

    def __add__(self, other):
        return LinearCombination([(1, self), (1, other)])

    def __sub__(self, other):
        return LinearCombination([(1, self), (-1, other)])

    def scale(self, c):
        return LinearCombination([(c, self)])


class ElementCochain(Cochain):
    """Arity 0: an element w of W."""

    def __init__(self, mod, w: Mapping, name="element"):
        super().__init__(mod, 0, name)
        self.w = {k: Q(c) for k, c in w.items() if c != 0}

    def _entry(self, keys, out_key):
        return RationalForm.const(self.w.get(out_key, ZERO))

    def degree_offset(self):
        ws = {self.mod.weight(k) for k in self.w}
        return ws.pop() if len(ws) == 1 else (0 if not ws else None)


class EElement(Cochain):
    """E^{(n)}_W(v_1, z_1; ...; v_n, z_n; w) = E(Y_W(v_1, z_1)...Y_W(v_n, z_n)w)."""

    def __init__(self, mod, arity: int, target, name=""):
        super().__init__(mod, arity, name or f"E{arity}[{mod.key_str(target)}]")
        self.target = target

    def _entry(self, keys, out_key):
        mod = self.mod
        alg = mod.alg
        n = self.arity
        if n == 0:
            return RationalForm.const(1 if out_key == self.target else 0)
        vars_ = zvars(n)
        region = Region(vars_)
        budget = default_budget(alg, keys, vars_, self.target)
        deg = mod.weight(out_key) - sum(mod.weight(k) for k in keys) - mod.weight(self.target)
        bounds = required_bounds(region, budget, deg) if n > 1 else ()
        tabs = correlator_series_all(alg, list(keys), self.target, bounds, {mod.weight(out_key)})
        s = LaurentSeries(region, bounds, tabs.get(out_key, {}))
        return series_to_rational(s, budget)

    def degree_offset(self):
        return self.mod.weight(self.target)


class TranslatedMap(Cochain):
    """Arity 1: Phi_h(v, z) = e^{z L_W(-1)} h(v) = Y_WV(h(v), z)1 for a
    weight-preserving map h.  ``h`` is either a table on basis keys up to
    ``cutoff`` or a callable key -> vector defined on every weight."""

    def __init__(self, mod, h, cutoff: int | None = None, name="Phi_h"):
        super().__init__(mod, 1, name)
        if callable(h):
            self.h = h
            self.cutoff = None
        else:
            self.h = {k: {kk: Q(c) for kk, c in v.items() if c != 0} for k, v in h.items()}
            self.cutoff = cutoff

    def _translated(self, key, d: int) -> Dict:
        """L(-1)^d h(key) / d!"""
        memo = self.__dict__.setdefault("_tmemo", {})
        hit = memo.get((key, d))
        if hit is None:
            if d == 0:
                hit = dict(self.image(key))
            else:
                hit = {kk: c / d for kk, c in self.mod.L_minus1(self._translated(key, d - 1)).items()}
            memo[(key, d)] = hit
        return hit

    def image(self, key):
        if callable(self.h):
            return self.h(key)
        if self.cutoff is not None and self.mod.weight(key) > self.cutoff:
            raise OutsideTruncation(f"h is only known up to weight {self.cutoff}")
        return self.h.get(key, {})

    def _entry(self, keys, out_key):
        (k,) = keys
        d = self.mod.weight(out_key) - self.mod.weight(k)
        if d < 0:
            return RationalForm.zero()
        hv = self.image(k)
        if not hv:
            return RationalForm.zero()
        cur = self._translated(k, d)
        c = cur.get(out_key, ZERO)
        if c == 0:
            return RationalForm.zero()
        return RationalForm.from_poly(MultiPoly.monomial({zname(1): d}, c))


class TableCochain(Cochain):
    """Explicit finite table; missing entries are zero."""

    def __init__(self, mod, arity, table: Mapping, offset: int | None = None, name="table"):
        super().__init__(mod, arity, name)
        self.table = {(tuple(k), o): f for (k, o), f in table.items()}
        self._offset = offset

    def _entry(self, keys, out_key):
        return self.table.get((keys, out_key), RationalForm.zero())

    def degree_offset(self):
        return self._offset

    def output_weight_range(self, keys, max_degree):
        ws = {self.mod.weight(o) for (k, o) in self.table if k == tuple(keys)}
        return sorted(ws)

    def to_json(self) -> str:
        mod = self.mod
        rows = []
        for (k, o), f in sorted(self.table.items(), key=lambda kv: (repr(kv[0][0]), repr(kv[0][1]))):
            if not f.is_zero():
                rows.append({"inputs": [list(x) for x in k], "dual": list(o), "form": f.to_json()})
        return json.dumps({"schema": 1, "arity": self.arity, "offset": self._offset, "entries": rows}, sort_keys=True)

    @classmethod
    def from_json(cls, mod, text: str) -> "TableCochain":
        data = json.loads(text)
        table = {}
        for row in data["entries"]:
            table[(tuple(tuple(x) for x in row["inputs"]), tuple(row["dual"]))] = RationalForm.from_json(row["form"])
        return cls(mod, data["arity"], table, data["offset"])


class FunctionCochain(Cochain):
    """Entries given by a callable (keys, out_key) -> RationalForm."""

    def __init__(self, mod, arity, fn: Callable, offset: int | None = 0, name="function", weight_range=None):
        super().__init__(mod, arity, name)
        self.fn = fn
        self._offset = offset
        self._weight_range = weight_range

    def _entry(self, keys, out_key):
        return self.fn(keys, out_key)

    def degree_offset(self):
        return self._offset

    def output_weight_range(self, keys, max_degree):
        if self._weight_range is not None:
            return self._weight_range(keys, max_degree)
        return super().output_weight_range(keys, max_degree)


class LinearCombination(Cochain):
    def __init__(self, terms: Sequence[Tuple[object, Cochain]], name="combination"):
        terms = [(Q(c), phi) for c, phi in terms if Q(c) != 0]
        if not terms:
            raise ValueError("empty combination; use a zero table")
        arity = terms[0][1].arity
        if any(phi.arity != arity for _, phi in terms):
            raise ValueError("arity mismatch in combination")
        super().__init__(terms[0][1].mod, arity, name)
        self.terms = terms

    def _entry(self, keys, out_key):
        return rf_sum(phi.entry(keys, out_key).scale(c) for c, phi in self.terms)

    def degree_offset(self):
        offs = {phi.degree_offset() for _, phi in self.terms}
        return offs.pop() if len(offs) == 1 else None

    def output_weight_range(self, keys, max_degree):
        ws = set()
        for _, phi in self.terms:
            ws.update(phi.output_weight_range(keys, max_degree))
        return sorted(ws)


class Permuted(Cochain):
    """(sigma Phi)(v_1, z_1; ...) = Phi(v_sigma(1), z_sigma(1); ...), sigma as
    a tuple of 1-based images."""

    def __init__(self, phi: Cochain, sigma: Sequence[int]):
        super().__init__(phi.mod, phi.arity, f"{phi.name}o{tuple(sigma)}")
        self.phi = phi
        self.sigma = tuple(sigma)

    def _entry(self, keys, out_key):
        perm_keys = tuple(keys[s - 1] for s in self.sigma)
        f = self.phi.entry(perm_keys, out_key)
        ren = {zname(i + 1): MultiPoly.var(zname(s)) for i, s in enumerate(self.sigma)}
        return f.subs(ren)

    def degree_offset(self):
        return self.phi.degree_offset()

    def output_weight_range(self, keys, max_degree):
        return self.phi.output_weight_range(tuple(keys[s - 1] for s in self.sigma), max_degree)


class SeriesCochain(Cochain):
    """Entries known only as Laurent series in |z1| > ... > |zn|, given by
    ``fn(keys, out_key) -> {exponent tuple: coefficient}``."""

    def __init__(self, mod, arity, fn: Callable, name="series"):
        super().__init__(mod, arity, name)
        self.fn = fn

    def _entry(self, keys, out_key):
        raise NotRational(f"{self.name} has no rational entries")

    def expansion(self, keys, out_key, rename, region, limit):
        names = [zname(i + 1) for i in range(self.arity)]
        target = [rename[v].to_str() if v in rename else v for v in names]
        pos = [region.index(v) for v in target]
        if pos != sorted(pos):
            raise DomainError("series data is only valid in the order z1 > ... > zn")
        out = {}
        for e, c in self.fn(keys, out_key).items():
            full = [0] * len(region)
            for p, k in zip(pos, e):
                full[p] = k
            f = tails(full)
            if _fits(f, limit):
                out[f] = out.get(f, ZERO) + Q(c)
        return out

    def degree_offset(self):
        return None

    def output_weight_range(self, keys, max_degree):
        return range(0, 1)


def essential_singularity_fixture(mod, order: int = 30, depth: int = 40) -> SeriesCochain:
    """Arity 2: <1', Phi(v1, z1; v2, z2)> = exp(1/(z1 - z2)) cut at ``order``
    terms and expanded in |z1| > |z2| to ``depth`` powers of z2; every other
    entry is zero."""
    from .scalars import binom, factorial

    vac = mod.vacuum

    def fn(keys, out_key):
        if out_key != vac:
            return {}
        out = {}
        for k in range(order + 1):
            for j in range(depth + 1):
                c = binom(k + j - 1, j) / factorial(k) if k else (Q(1) if j == 0 else ZERO)
                if c:
                    out[(-k - j, j)] = out.get((-k - j, j), ZERO) + c
        return out

    return SeriesCochain(mod, 2, fn, name="exp(1/(z1-z2)) truncated")


def number_operator(key) -> Dict:
    """N: multiplication by the number of parts of a partition key."""
    return {key: Q(len(key))} if len(key) else {}


def zero_cochain(mod, arity) -> TableCochain:
    return TableCochain(mod, arity, {}, offset=0, name="zero")


def e_element_W(mod, factors: Sequence, target) -> Dict:
    """Components of E^{(n)}_W(v_1, z_1; ...; w) for all dual basis elements of
    admissible weight: returns {out_key: RationalForm}.  ``factors`` are basis
    keys; the variables are z1..zn."""
    phi = EElement(mod, len(factors), target)
    deg_w = sum(mod.weight(k) for k in factors) + mod.weight(target)
    out = {}
    for w in range(0, deg_w + 1):
        out.update(phi.values(tuple(factors), w))
    return out


# projections ----------------------------------------------------------------------

def project(mod, x: Mapping, m: int) -> Dict:
    """P_m: the weight-m component of a (truncated) W-bar element."""
    return {k: c for k, c in x.items() if mod.weight(k) == m}


# properties ----------------------------------------------------------------------

def _sample_keys(mod, arity, input_cutoff):
    states = mod.basis_upto(input_cutoff)
    return list(itertools.product(states, repeat=arity))


def check_L1_derivative(phi: Cochain, input_cutoff: int = 2, out_cutoff: int = 3, shift_order: int = 2) -> Dict:
    """d/dz_i <w', Phi> = <w', Phi(...; L(-1)v_i, z_i; ...)>, the summed form
    against L_W(-1), and the shift identity <w', e^{zL(-1)}Phi(..z_i..)> =
    <w', Phi(..z_i + z..)> through order ``shift_order`` in z."""
    mod = phi.mod
    n = phi.arity
    checked = 0
    if n == 0:
        return {"status": "pass", "checked": 0, "note": "arity 0"}
    outs = mod.basis_upto(out_cutoff)
    for keys in _sample_keys(mod, n, input_cutoff):
        for ko in outs:
            try:
                f = phi.entry(keys, ko)
            except OutsideTruncation:
                continue
            total_derivative = RationalForm.zero()
            for i in range(n):
                checked += 1
                lv = mod.L_minus1({keys[i]: 1})
                rhs = rf_sum(
                    phi.entry(keys[:i] + (k,) + keys[i + 1:], ko).scale(c) for k, c in lv.items()
                ) if lv else RationalForm.zero()
                d = f.diff(zname(i + 1))
                total_derivative = total_derivative + d
                if d != rhs:
                    return {"status": "fail", "checked": checked, "witness": {
                        "inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko), "slot": i + 1,
                        "derivative": d.to_str(), "expected": rhs.to_str()}}
            # summed form: <w', L(-1) Phi> = sum_{w} <w', L(-1) w><w', Phi>
            wk = mod.weight(ko) - 1
            acc = RationalForm.zero()
            if wk >= 0:
                for kw in mod.basis(wk):
                    c = mod.L_minus1({kw: 1}).get(ko, ZERO)
                    if c != 0:
                        acc = acc + phi.entry(keys, kw).scale(c)
            checked += 1
            if acc != total_derivative:
                return {"status": "fail", "checked": checked, "witness": {
                    "inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko), "slot": "sum",
                    "derivative": total_derivative.to_str(), "expected": acc.to_str()}}
            # shift identity by powers of the shift parameter
            shifted = f.subs({zname(i + 1): MultiPoly.var(zname(i + 1)) + MultiPoly.var("s") for i in range(n)})
            for order in range(shift_order + 1):
                checked += 1
                lhs = _taylor_coefficient(shifted, "s", order)
                rhs = RationalForm.zero()
                wk = mod.weight(ko) - order
                if wk >= 0:
                    for kw in mod.basis(wk):
                        cur = {kw: Q(1)}
                        for j in range(1, order + 1):
                            cur = {k: c / j for k, c in mod.L_minus1(cur).items()}
                        c = cur.get(ko, ZERO)
                        if c != 0:
                            rhs = rhs + phi.entry(keys, kw).scale(c)
                if lhs != rhs:
                    return {"status": "fail", "checked": checked, "witness": {
                        "inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko), "shift_order": order}}
    return {"status": "pass", "checked": checked}


def _taylor_coefficient(f: RationalForm, var: str, order: int) -> RationalForm:
    g = f
    fact = 1
    for j in range(1, order + 1):
        g = g.diff(var)
        fact *= j
    return g.subs({var: 0}).scale(Q(1, fact))


def check_L0_conjugation(phi: Cochain, input_cutoff: int = 2, out_cutoff: int = 3) -> Dict:
    """Each entry is homogeneous of degree wt(w') - sum wt(v_i) - offset, which
    is the L(0)-conjugation identity after comparing z-scalings."""
    mod = phi.mod
    checked = 0
    off = phi.degree_offset()
    if phi.arity == 0:
        ws = {mod.weight(k) for k in getattr(phi, "w", {})}
        ok = len(ws) <= 1
        return {"status": "pass" if ok else "fail", "checked": 1, **({} if ok else {"witness": {"weights": sorted(ws)}})}
    for keys in _sample_keys(mod, phi.arity, input_cutoff):
        for ko in mod.basis_upto(out_cutoff):
            try:
                f = phi.entry(keys, ko)
            except OutsideTruncation:
                continue
            checked += 1
            if f.is_zero():
                continue
            d = f.homogeneous_degree()
            expected = None if off is None else mod.weight(ko) - sum(mod.weight(k) for k in keys) - off
            if d is None or (expected is not None and d != expected):
                return {"status": "fail", "checked": checked, "witness": {
                    "inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko),
                    "form": f.to_str(), "degree": d, "expected": expected}}
    return {"status": "pass", "checked": checked}


def shuffles(l: int, s: int) -> List[Tuple[int, ...]]:
    """J_{l;s}: permutations (one-line, 1-based) increasing on the first s and
    on the last l - s positions."""
    out = []
    for first in itertools.combinations(range(1, l + 1), s):
        rest = [i for i in range(1, l + 1) if i not in first]
        out.append(tuple(first) + tuple(rest))
    return out


def perm_inverse(p: Sequence[int]) -> Tuple[int, ...]:
    inv = [0] * len(p)
    for i, x in enumerate(p):
        inv[x - 1] = i + 1
    return tuple(inv)


def perm_sign(p: Sequence[int]) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def shuffle_sum(phi: Cochain, l: int, s: int) -> Cochain:
    terms = [(perm_sign(inv), Permuted(phi, inv)) for inv in (perm_inverse(p) for p in shuffles(l, s))]
    return LinearCombination(terms, name=f"shuffle[{l};{s}]")


def check_shuffle(phi: Cochain, l: int, s: int, input_cutoff: int = 1, out_cutoff: int = 3) -> Dict:
    if phi.arity != l or not (1 <= s <= l - 1):
        raise ValueError("need 1 <= s <= l - 1 and l equal to the arity")
    total = shuffle_sum(phi, l, s)
    mod = phi.mod
    checked = 0
    for keys in _sample_keys(mod, l, input_cutoff):
        for ko in mod.basis_upto(out_cutoff):
            checked += 1
            f = total.entry(keys, ko)
            if not f.is_zero():
                return {"status": "fail", "checked": checked, "witness": {
                    "inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko), "residual": f.to_str()}}
    return {"status": "pass", "checked": checked}


def harrison_fixture(phi0: Cochain, input_keys: Sequence, out_keys: Sequence) -> Cochain:
    """A combination sum_pi c_pi pi(phi0) of arity 3 killed by every shuffle
    sum, found by solving the linear conditions on the coefficients c_pi."""
    l = phi0.arity
    perms = list(itertools.permutations(range(1, l + 1)))
    images = {p: Permuted(phi0, p) for p in perms}
    rows = []
    # conditions: for each s and each sampled entry, sum_pi c_pi (shuffle_s(pi phi0)) = 0
    for s in range(1, l):
        for keys in itertools.product(input_keys, repeat=l):
            for ko in out_keys:
                coeff_forms = {}
                for p in perms:
                    f = shuffle_sum(images[p], l, s).entry(keys, ko)
                    coeff_forms[p] = f
                # linear independence over Q of rational forms: compare by
                # expanding each in monomials of a common denominator
                den = {}
                for f in coeff_forms.values():
                    for g, m in f.poles:
                        den[g] = max(den.get(g, 0), m)
                for p, f in coeff_forms.items():
                    num = f.num
                    for g, m in den.items():
                        extra = m - f.pole_order(g)
                        if extra:
                            num = num * g.to_poly() ** extra
                    coeff_forms[p] = num
                monos = set()
                for num in coeff_forms.values():
                    monos.update(num.terms)
                for mono in monos:
                    rows.append({p: coeff_forms[p].terms.get(mono, ZERO) for p in perms})
    sols = nullspace(rows, perms)
    if not sols:
        raise ValueError("no shuffle-free combination for this base cochain")
    sol = sols[0]
    return LinearCombination([(c, images[p]) for p, c in sol.items() if c != 0], name="harrison")


# composite series -------------------------------------------------------------------

@dataclass
class Block:
    """Y(k_a, y_a)...Y(k_b, y_b) target inserted into one slot of a cochain at
    the point ``center``; a plain input is a block with no factors."""

    center: str
    factors: List[Tuple[object, str]] = field(default_factory=list)
    target: object = None


def _block_expansion(alg, block: Block, region: Region, limit: Tuple[int, ...]):
    """{tail vector over region: vector of states} for one block; exact for
    tails bounded by ``limit`` (tail bounds for positions 2..n)."""
    n = len(region)
    if not block.factors:
        return {tuple([0] * n): {block.target: Q(1)}}
    keys = [k for k, _ in block.factors]
    pos = [region.index(v) for _, v in block.factors]
    if pos != sorted(pos) or pos[0] == 0:
        raise DomainError("block variables must follow the region order after the dominant one")
    wts = [alg.weight(k) for k in keys]
    wt_t = alg.weight(block.target)
    m = len(keys)
    # the tail at factor i is wt(u_{i-1}) - sum_{i' >= i} wt k_i' - wt target
    limits = [limit[pos[i] - 1] + sum(wts[i:]) + wt_t for i in range(m)]
    states = chain_apply(alg, keys, block.target, limits)
    out: Dict[Tuple[int, ...], Dict] = {}
    for hist, vec in states.items():
        inter = [wt_t] + list(hist)
        e = [0] * n
        for i in range(m):
            e[pos[i]] = inter[m - i] - wts[i] - inter[m - i - 1]
        f = tails(e)
        if not _fits(f, limit):
            continue
        vec_accumulate(out.setdefault(f, {}), vec, Q(1))
    return {f: v for f, v in out.items() if v}


def _block_floor(alg, block: Block, region: Region) -> Tuple[int, ...]:
    """Lower bounds for the tails of a block expansion."""
    n = len(region)
    floor = [0] * n
    if not block.factors:
        return tuple(floor)
    pos = [region.index(v) for _, v in block.factors]
    wts = [alg.weight(k) for k, _ in block.factors]
    wt_t = alg.weight(block.target)
    for j in range(n):
        later = [i for i in range(len(pos)) if pos[i] >= j]
        if later:
            floor[j] = -(sum(wts[i] for i in later) + wt_t)
    return tuple(floor)


class CompositeSeries:
    """Series of <w', Y(l_1, x_1)...Y(l_m, x_m) Phi(B_1, ...; B_n)> in an ordered
    region: left variables first, then the block centers, then all block
    variables.  ``phi_floor`` bounds the tails of Phi expansions from below."""

    def __init__(self, phi: Cochain, left: Sequence[Tuple[object, str]], blocks: Sequence[Block], region: Region,
                 bounds, phi_floor: int = 0):
        self.phi = phi
        self.left = list(left)
        self.blocks = list(blocks)
        self.region = region
        self.bounds = tuple(bounds)
        self.phi_floor = phi_floor
        self.center_rename = {zname(i + 1): MultiPoly.var(b.center) for i, b in enumerate(self.blocks)
                              if zname(i + 1) != b.center}
        self._expansions: Dict[Tuple, Dict] = {}

    def _phi_expansion(self, keys, out_key, limit):
        ck = (keys, out_key, limit)
        hit = self._expansions.get(ck)
        if hit is None:
            hit = self.phi.expansion(keys, out_key, self.center_rename, self.region, limit)
            self._expansions[ck] = hit
        return hit

    def _nonzero(self, keys, weight):
        """[(out key, degree)] for the nonzero entries of output ``weight``."""
        memo = self.__dict__.setdefault("_nz", {})
        hit = memo.get((keys, weight))
        if hit is None:
            hit = []
            for kw in self.phi.mod.basis(weight):
                f = self.phi.entry(keys, kw)
                if f.is_zero():
                    continue
                deg = f.homogeneous_degree()
                if deg is None:
                    raise DomainError("cochain entries must be homogeneous")
                hit.append((kw, deg))
            memo[(keys, weight)] = hit
        return hit

    def terms(self, dual_key) -> Dict[Tuple[int, ...], Q]:
        mod = self.phi.mod
        alg = mod.alg
        region = self.region
        n = len(region)
        B = self.bounds
        m = len(self.left)
        floors = [_block_floor(alg, b, region) for b in self.blocks]
        left_w = sum(alg.weight(k) for k, _ in self.left)
        # every part's tail is at least its floor, so each part gets the
        # budget left after the others sit at their floors
        centers = [region.index(b.center) for b in self.blocks]
        last_center = max(centers) if centers else -1
        last_left = max((region.index(v) for _, v in self.left), default=-1)
        slack = [sum(-fl[j] for fl in floors)
                 + (-self.phi_floor if j <= last_center else 0)
                 + (left_w if j <= last_left else 0) for j in range(n)]
        combos = [(tuple([0] * n), Q(1), ())]
        for fl, b in zip(floors, self.blocks):
            lim = tuple(B[j - 1] + slack[j] + fl[j] for j in range(1, n))
            part = _block_expansion(alg, b, region, lim)
            nxt = []
            for f0, c0, ks in combos:
                for f, vec in part.items():
                    g = tuple(x + y for x, y in zip(f0, f))
                    for k, c in vec.items():
                        nxt.append((g, c0 * c, ks + (k,)))
            combos = nxt
        left_keys = [k for k, _ in self.left]
        left_pos = [region.index(v) for _, v in self.left]
        wts = [alg.weight(k) for k in left_keys]
        wt_dual = mod.weight(dual_key)
        total: Dict[Tuple[int, ...], Q] = {}

        def add(exp, shift, coeff):
            for f, c in exp.items():
                g = tuple(x + y for x, y in zip(f, shift))
                if _fits(g, B):
                    total[g] = total.get(g, ZERO) + c * coeff

        for fb, cb, ks in combos:
            if m == 0:
                lim = tuple(B[j - 1] - fb[j] for j in range(1, n))
                add(self._phi_expansion(ks, dual_key, lim), fb, cb)
                continue
            cap = B[m - 1] - fb[m] if m < n else 0
            for ow in self.phi.output_weight_range(ks, cap + left_w):
                for kw, deg in self._nonzero(ks, ow):
                    limits = [wt_dual] + [B[j - 1] - fb[j] - deg + sum(wts[j:]) + ow for j in range(1, m)]
                    states = chain_apply(alg, left_keys, kw, limits)
                    for hist, vec in states.items():
                        c_left = vec.get(dual_key, ZERO)
                        if c_left == 0:
                            continue
                        inter = [ow] + list(hist)
                        e = [0] * n
                        for i in range(m):
                            e[left_pos[i]] = inter[m - i] - wts[i] - inter[m - i - 1]
                        shift = tuple(x + y for x, y in zip(tails(e), fb))
                        lim = tuple(B[j - 1] - shift[j] for j in range(1, n))
                        add(self._phi_expansion(ks, kw, lim), shift, cb * c_left)
        return {f: c for f, c in total.items() if c != 0}


def composite_degree(phi: Cochain, left_keys, blocks, dual_key):
    mod = phi.mod
    off = phi.degree_offset()
    if off is None:
        return None
    wsum = sum(mod.weight(k) for k in left_keys)
    for b in blocks:
        wsum += sum(mod.weight(k) for k, _ in b.factors) + mod.weight(b.target)
    return mod.weight(dual_key) - wsum - off


def reconstruct_composite(phi: Cochain, left, blocks, region: Region, dual_key, budget_z: Mapping[LinearForm, int],
                          coords: Mapping[str, MultiPoly], back: Mapping[str, MultiPoly], max_extra: int = 6,
                          step: int = 2, max_degree: int | None = None, phi_floor: int = 0):
    """Reconstruct the composite series as a rational form in the original
    variables.

    ``budget_z`` lists pole factors in the original z-variables; ``coords``
    expresses each original variable in region coordinates and ``back`` maps
    region coordinates to original ones.  The budget grows by ``step`` on
    failure up to ``max_extra``.
    """
    if max_degree is None:
        max_degree = composite_degree(phi, [k for k, _ in left], blocks, dual_key)
        if max_degree is None:
            max_degree = 0
    extra = 0
    last_error = None
    while extra <= max_extra:
        budget: Dict[LinearForm, int] = {}
        for f, mult in budget_z.items():
            p = f.to_poly().subs(coords)
            _, g = LinearForm.from_poly(p)
            if g is None:
                continue
            budget[g] = budget.get(g, 0) + mult + extra
        bounds = required_bounds(region, budget, max_degree)
        comp = CompositeSeries(phi, left, blocks, region, bounds, phi_floor)
        s = LaurentSeries.from_tail_terms(region, bounds, comp.terms(dual_key))
        try:
            form = series_to_rational(s, budget)
            return form.subs(back) if back else form, budget
        except (ReconstructionFailure, InsufficientCutoff) as exc:
            last_error = exc
            extra += step
    raise CompositionError(str(last_error), witness=getattr(last_error, "witness", None))


def full_budget(variables: Sequence[str], pair_orders: Mapping[Tuple[int, int], int], single_orders: Mapping[int, int]):
    out = {}
    for (i, j), m in pair_orders.items():
        if m > 0:
            out[LinearForm.diff(variables[i], variables[j])] = m
    for i, m in single_orders.items():
        if m > 0:
            out[LinearForm.var(variables[i])] = m
    return out


def entry_pole_profile(phi: Cochain, key_tuples: Iterable, out_keys: Sequence) -> Tuple[int, int, int]:
    """(largest difference-pole order, largest single-pole order, largest
    total pole order) among the given entries."""
    pd = ps = pt = 0
    for keys in key_tuples:
        for ko in out_keys:
            try:
                f = phi.entry(keys, ko)
            except (OutsideTruncation, NotRational):
                continue
            pt = max(pt, sum(m for _, m in f.poles))
            for g, m in f.poles:
                if len(g.coeffs) == 1:
                    ps = max(ps, m)
                else:
                    pd = max(pd, m)
    return pd, ps, pt


# composability -------------------------------------------------------------------

def compositions(total: int, parts: int) -> List[Tuple[int, ...]]:
    """Ordered tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 0:
        return [()] if total == 0 else []
    out = []
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def majorant_ratio(terms: Mapping[Tuple[int, ...], Q], region: Region, point: Mapping[str, Q], level_positions: Sequence[int]):
    """Level sums A_k = sum |c * monomial(point)| grouped by the total exponent
    at ``level_positions``; returns (levels, fitted ratio or None)."""
    levels: Dict[int, Q] = {}
    vals = [Q(point[v]) for v in region.order]
    for f, c in terms.items():
        e = [f[i] - (f[i + 1] if i + 1 < len(f) else 0) for i in range(len(f))]
        mag = abs(Q(c))
        for x, k in zip(vals, e):
            mag *= abs(x) ** k if k >= 0 else 1 / abs(x) ** (-k)
        lvl = sum(e[i] for i in level_positions)
        levels[lvl] = levels.get(lvl, ZERO) + mag
    keys = sorted(levels)
    ratios = []
    for a, b in zip(keys, keys[1:]):
        if levels[a] != 0 and b == a + 1:
            ratios.append(levels[b] / levels[a])
    ratio = max(ratios[-3:]) if ratios else None
    return {k: float(levels[k]) for k in keys}, ratio


def _pair_key(form: LinearForm, position: Mapping[str, int]):
    if len(form.coeffs) == 2 and form.const == 0 and form.coeffs[1][1] == -1:
        i, j = sorted(position[v] for v in form.variables())
        return i, j
    return None


def _block_layout(zs: Sequence[str], keys: Sequence, sizes: Sequence[int], vacuum):
    """Blocks with fresh centers zeta_a and relative variables y_i = z_i - zeta_a."""
    blocks, coords, back, centers, rel = [], {}, {}, [], []
    start = 0
    for bi, size in enumerate(sizes):
        center = f"zeta{bi + 1}"
        centers.append(center)
        facs = []
        for idx in range(start, start + size):
            y = f"y{idx + 1}"
            facs.append((keys[idx], y))
            rel.append(y)
            coords[zs[idx]] = MultiPoly.var(center) + MultiPoly.var(y)
            back[y] = MultiPoly.var(zs[idx]) - MultiPoly.var(center)
        blocks.append(Block(center, facs, vacuum))
        start += size
    return blocks, coords, back, Region(centers + rel)


def check_composable(phi: Cochain, m: int, input_keys: Sequence, dual_keys: Sequence, max_extra: int = 6,
                     majorant: bool = True) -> Dict:
    """Both composability conditions with m vertex operators, for all input
    tuples drawn from ``input_keys`` and duals from ``dual_keys``.

    Condition I inserts Y(v, z - zeta)...1 blocks into the slots of phi and
    needs a rational, zeta-free sum; condition J puts m vertex operators to the
    left of phi.  On success returns the certified table N of pole orders at
    z_i = z_j (largest order seen, by input pair)."""
    mod = phi.mod
    n = phi.arity
    found: Dict[Tuple, int] = {}
    checked = 0
    total = n + m
    zs = zvars(total)
    position = {v: i for i, v in enumerate(zs)}
    probe = list(itertools.product(input_keys, repeat=n))
    probe_outs = mod.basis_upto(max(mod.weight(k) for k in dual_keys) + (m + n) * max(mod.weight(k) for k in input_keys))
    pd, ps, pt = entry_pole_profile(phi, probe, probe_outs)
    floor = -pt

    def fail(condition, keys, ko, **extra):
        return {"status": "fail", "checked": checked, "witness": {
            "condition": condition, "inputs": [mod.key_str(k) for k in keys], "dual": mod.key_str(ko), **extra}}

    def record(tag, keys, form):
        for g, mult in form.poles:
            ij = _pair_key(g, position)
            if ij is not None:
                key = (tag, keys[ij[0]], keys[ij[1]])
                found[key] = max(found.get(key, 0), mult)

    for keys in itertools.product(input_keys, repeat=total):
        wts = [mod.weight(k) for k in keys]
        if n >= 1:
            for sizes in compositions(total, n):
                blocks, coords, back, region = _block_layout(zs, keys, sizes, mod.vacuum)
                pair = {(i, j): wts[i] + wts[j] + pd for i in range(total) for j in range(i + 1, total)}
                budget = full_budget(zs, pair, {i: ps for i in range(total)})
                for ko in dual_keys:
                    checked += 1
                    try:
                        form, _ = reconstruct_composite(phi, [], blocks, region, ko, budget, coords, back,
                                                        max_extra, phi_floor=floor)
                    except (CompositionError, OutsideTruncation, DomainError) as exc:
                        return fail("I", keys, ko, sizes=list(sizes), error=str(exc))
                    stray = sorted(v for v in form.variables() if v.startswith("zeta"))
                    if stray:
                        return fail("I", keys, ko, sizes=list(sizes), zeta_dependence=stray, form=form.to_str())
                    record("I", keys, form)
                    if majorant:
                        ratio = _majorant_for(phi, blocks, region, ko, budget, coords, floor)
                        if ratio is not None and ratio >= 1:
                            return fail("I", keys, ko, sizes=list(sizes), majorant_ratio=float(ratio))
        left = [(keys[i], zs[i]) for i in range(m)]
        blocks = [Block(zs[m + i], [], keys[m + i]) for i in range(n)]
        region = Region(zs)
        pair = {(i, j): wts[i] + wts[j] + pd for i in range(total) for j in range(i + 1, total)}
        single = {i: wts[i] + ps for i in range(total)}
        budget = full_budget(zs, pair, single)
        for ko in dual_keys:
            checked += 1
            try:
                form, _ = reconstruct_composite(phi, left, blocks, region, ko, budget, {}, {}, max_extra,
                                                phi_floor=floor)
            except (CompositionError, OutsideTruncation, DomainError) as exc:
                return fail("J", keys, ko, error=str(exc), detail=getattr(exc, "witness", None))
            record("J", keys, form)
    table: Dict[str, int] = {}
    for (tag, a, b), v in found.items():
        name = f"{mod.key_str(a)},{mod.key_str(b)}"
        table[name] = max(table.get(name, 0), v)
    return {"status": "pass", "checked": checked, "N": dict(sorted(table.items()))}


def _majorant_for(phi, blocks, region, ko, budget_z, coords, floor):
    """Fitted ratio of consecutive level sums of the block expansion at a
    sample point with centers 4 apart and block variables of size 1/2^k; a
    ratio below 1 certifies geometric decay at that point."""
    budget = {}
    for f, mult in budget_z.items():
        _, g = LinearForm.from_poly(f.to_poly().subs(coords))
        if g is not None:
            budget[g] = mult
    deg = composite_degree(phi, [], blocks, ko) or 0
    bounds = tuple(b + 4 for b in required_bounds(region, budget, deg))
    terms = CompositeSeries(phi, [], blocks, region, bounds, floor).terms(ko)
    point, rel_positions = {}, []
    for i, v in enumerate(region.order):
        if v.startswith("zeta"):
            point[v] = Q(4 * (len(region) - i))
        else:
            point[v] = Q(1, 2 ** (i + 1))
            rel_positions.append(i)
    _, ratio = majorant_ratio(terms, region, point, rel_positions)
    return ratio


def check_nesting(phi: Cochain, m: int, input_keys: Sequence, dual_keys: Sequence, **kw) -> Dict:
    """Composable with m operators implies composable with m - 1; every pole
    order certified at m - 1 is bounded by the order certified at m."""
    if m < 1:
        raise ValueError("nesting needs m >= 1")
    upper = check_composable(phi, m, input_keys, dual_keys, **kw)
    if upper["status"] != "pass":
        return {"status": "not-applicable", "reason": f"not composable with m = {m}", "upper": upper}
    lower = check_composable(phi, m - 1, input_keys, dual_keys, **kw)
    if lower["status"] != "pass":
        return {"status": "fail", "witness": {"m": m - 1, "lower": lower}}
    bad = {k: v for k, v in lower["N"].items() if v > upper["N"].get(k, v)}
    if bad:
        return {"status": "fail", "witness": {"exceeding": bad, "N_upper": upper["N"], "N_lower": lower["N"]}}
    return {"status": "pass", "N_upper": upper["N"], "N_lower": lower["N"]}
