"""Multivariate Laurent expansions in ordered regions and reconstruction.

A region |x_1| > |x_2| > ... > |x_n| (> 0) is given by the variable order.
Expansions are iterated geometric expansions of each pole factor in its
dominant (earliest) variable.  Truncation uses tail sums: for exponent
vector e, f_j = e_j + ... + e_n; a series with bounds B keeps the terms with
f_j <= B_j for every j >= 2.  Multiplying by x_k / x_d (d < k) raises
f_{d+1..k} by one, so each geometric factor only moves terms outward.

Reconstruction multiplies the series by the budget denominator
Q = prod L^beta and reads off the polynomial numerator on the window where
the product is exactly known.
"""

from __future__ import annotations

from dataclasses import dataclass
from operator import add
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .poly import MultiPoly
from .rational import LinearForm, RationalForm
from .scalars import Q, ZERO, binom

Vec = Tuple[int, ...]


class DomainError(ValueError):
    """Region does not cover the form, or a pole is not expandable there."""


class ReconstructionFailure(ValueError):
    """No rational form within the pole budget matches the series."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class InsufficientCutoff(ValueError):
    """The series window is too small to pin down the numerator."""


@dataclass(frozen=True)
class Region:
    """Ordered magnitude chain, dominant variable first."""

    order: Tuple[str, ...]

    def __init__(self, order: Iterable[str]):
        object.__setattr__(self, "order", tuple(order))
        if len(set(self.order)) != len(self.order):
            raise DomainError("region lists a variable twice")

    def index(self, var: str) -> int:
        try:
            return self.order.index(var)
        except ValueError:
            raise DomainError(f"variable {var} is not in region {self.order}") from None

    def __len__(self):
        return len(self.order)

    def describe(self) -> str:
        return " > ".join(f"|{v}|" for v in self.order) + " > 0"


def tails(e: Sequence[int]) -> Vec:
    out = [0] * len(e)
    s = 0
    for i in range(len(e) - 1, -1, -1):
        s += e[i]
        out[i] = s
    return tuple(out)


def untails(f: Sequence[int]) -> Vec:
    n = len(f)
    return tuple(f[i] - (f[i + 1] if i + 1 < n else 0) for i in range(n))


def _norm_bounds(bounds, n: int) -> Vec:
    if isinstance(bounds, int):
        return tuple([bounds] * max(n - 1, 0))
    bounds = tuple(bounds)
    if len(bounds) != max(n - 1, 0):
        raise ValueError(f"need {n - 1} tail bounds, got {len(bounds)}")
    return bounds


def _fits(f: Vec, limit: Vec) -> bool:
    for j in range(1, len(f)):
        if f[j] > limit[j - 1]:
            return False
    return True


class LaurentSeries:
    """Truncated multivariate Laurent series in an ordered region.

    ``terms`` maps exponent vectors (region order) to coefficients; every
    stored term satisfies the tail bounds.
    """

    __slots__ = ("region", "bounds", "terms")

    def __init__(self, region: Region, bounds, terms: Mapping[Vec, object] | None = None):
        self.region = region
        self.bounds = _norm_bounds(bounds, len(region))
        clean = {}
        if terms:
            for e, c in terms.items():
                c = Q(c)
                if c != 0 and _fits(tails(e), self.bounds):
                    clean[tuple(e)] = c
        self.terms: Dict[Vec, Q] = clean

    @classmethod
    def from_tail_terms(cls, region: Region, bounds, fterms: Mapping[Vec, Q]) -> "LaurentSeries":
        s = cls.__new__(cls)
        s.region = region
        s.bounds = _norm_bounds(bounds, len(region))
        s.terms = {untails(f): c for f, c in fterms.items() if c != 0 and _fits(f, s.bounds)}
        return s

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.region.order

    @property
    def cutoff(self) -> Vec:
        return self.bounds

    def tail_terms(self) -> Dict[Vec, Q]:
        return {tails(e): c for e, c in self.terms.items()}

    def restrict(self, bounds) -> "LaurentSeries":
        b = _norm_bounds(bounds, len(self.region))
        b = tuple(min(x, y) for x, y in zip(b, self.bounds))
        return LaurentSeries(self.region, b, self.terms)

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        self._check(other)
        b = tuple(min(x, y) for x, y in zip(self.bounds, other.bounds))
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return LaurentSeries(self.region, b, out)

    def __neg__(self):
        return LaurentSeries(self.region, self.bounds, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LaurentSeries":
        c = Q(c)
        return LaurentSeries(self.region, self.bounds, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        """Product, exact only where both factors are known; callers that
        multiply by a factor with negative tails must widen bounds first."""
        self._check(other)
        b = tuple(min(x, y) for x, y in zip(self.bounds, other.bounds))
        fa = self.tail_terms()
        fb = other.tail_terms()
        out: Dict[Vec, Q] = {}
        for f1, c1 in fa.items():
            for f2, c2 in fb.items():
                f = tuple(map(add, f1, f2))
                if _fits(f, b):
                    out[f] = out.get(f, ZERO) + c1 * c2
        return LaurentSeries.from_tail_terms(self.region, b, out)

    def _check(self, other):
        if self.region != other.region:
            raise DomainError("series live in different regions")

    def agrees_with(self, other: "LaurentSeries"):
        """Compare on the common window; returns (ok, first differing exponent)."""
        self._check(other)
        b = tuple(min(x, y) for x, y in zip(self.bounds, other.bounds))
        keys = set(self.terms) | set(other.terms)
        for e in sorted(keys):
            if not _fits(tails(e), b):
                continue
            if self.terms.get(e, ZERO) != other.terms.get(e, ZERO):
                return False, e
        return True, None

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.region == other.region and self.bounds == other.bounds and self.terms == other.terms

    def total_degrees(self) -> set:
        return {sum(e) for e in self.terms}

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda e: (tails(e)[1:], e)):
            mono = "*".join(f"{v}^{k}" if k != 1 else v for v, k in zip(self.region.order, e) if k != 0)
            parts.append(f"{self.terms[e]}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def __repr__(self):
        return f"LaurentSeries[{self.region.describe()}; bounds={self.bounds}]({self.to_str()})"


# expansion -------------------------------------------------------------------

def _poly_tail_terms(p: MultiPoly, region: Region) -> Dict[Vec, Q]:
    n = len(region)
    out: Dict[Vec, Q] = {}
    for m, c in p.terms.items():
        e = [0] * n
        for v, k in m:
            e[region.index(v)] += k
        out[tails(e)] = c
    return out


def _pole_factor(form: LinearForm, mult: int, region: Region, limit: Vec) -> Dict[Vec, Q]:
    """Tail-coordinate expansion of form^(-mult) truncated at ``limit``."""
    if not form.is_homogeneous():
        raise DomainError(f"affine pole {form.to_str()} has no expansion in an ordered region")
    n = len(region)
    idx = sorted((region.index(v), c) for v, c in form.coeffs)
    d, cd = idx[0]
    lead = [0] * n
    lead[d] = -mult
    lead_f = tails(lead)
    base = Q(1) / cd ** mult
    if len(idx) == 1:
        return {lead_f: base} if _fits(lead_f, limit) else {}
    # u = sum_k (c_k / c_d) x_k / x_d
    steps = []
    for k, ck in idx[1:]:
        delta = tuple(1 if d < j <= k else 0 for j in range(n))
        steps.append((delta, ck / cd))
    # allowed increments beyond the leading term
    room = tuple(limit[j - 1] - lead_f[j] for j in range(1, n))
    out: Dict[Vec, Q] = {}
    power: Dict[Vec, Q] = {tuple([0] * n): Q(1)}
    r = 0
    while power:
        coeff = binom(-mult, r) * base
        for f, c in power.items():
            key = tuple(map(add, f, lead_f))
            out[key] = out.get(key, ZERO) + coeff * c
        nxt: Dict[Vec, Q] = {}
        for f, c in power.items():
            for delta, a in steps:
                g = tuple(map(add, f, delta))
                ok = True
                for j in range(1, n):
                    if g[j] > room[j - 1]:
                        ok = False
                        break
                if ok:
                    nxt[g] = nxt.get(g, ZERO) + c * a
        power = {g: c for g, c in nxt.items() if c != 0}
        r += 1
    return {f: c for f, c in out.items() if c != 0}


def _min_tails(fterms: Mapping[Vec, Q], n: int) -> Vec:
    if not fterms:
        return tuple([0] * n)
    return tuple(min(f[j] for f in fterms) for j in range(n))


def _mul_pruned(a: Mapping[Vec, Q], b: Mapping[Vec, Q], limit: Vec) -> Dict[Vec, Q]:
    out: Dict[Vec, Q] = {}
    n = len(limit) + 1
    for f1, c1 in a.items():
        for f2, c2 in b.items():
            f = tuple(map(add, f1, f2))
            ok = True
            for j in range(1, n):
                if f[j] > limit[j - 1]:
                    ok = False
                    break
            if ok:
                out[f] = out.get(f, ZERO) + c1 * c2
    return {f: c for f, c in out.items() if c != 0}


def expand_tail_terms(rf: RationalForm, region: Region, bounds: Vec) -> Dict[Vec, Q]:
    """Expansion of ``rf`` in tail coordinates, exact on the window."""
    n = len(region)
    for v in rf.variables():
        region.index(v)
    if rf.is_zero():
        return {}
    num = _poly_tail_terms(rf.num, region)
    factors = [("num", None, 0)] + [("pole", f, m) for f, m in rf.poles]
    mins = []
    for kind, f, m in factors:
        if kind == "num":
            mins.append(_min_tails(num, n))
        else:
            if not f.is_homogeneous():
                raise DomainError(f"affine pole {f.to_str()} has no expansion in an ordered region")
            idx = min(region.index(v) for v in f.variables())
            lead = [0] * n
            lead[idx] = -m
            mins.append(tails(lead))
    total_min = tuple(sum(mn[j] for mn in mins) for j in range(n))
    expanded = []
    for (kind, f, m), mn in zip(factors, mins):
        limit = tuple(bounds[j - 1] - total_min[j] + mn[j] for j in range(1, n))
        if kind == "num":
            expanded.append({g: c for g, c in num.items() if _fits(g, limit)})
        else:
            expanded.append(_pole_factor(f, m, region, limit))
    acc = expanded[0]
    rest_min = list(total_min)
    for j in range(n):
        rest_min[j] -= mins[0][j]
    for ser, mn in zip(expanded[1:], mins[1:]):
        for j in range(n):
            rest_min[j] -= mn[j]
        limit = tuple(bounds[j - 1] - rest_min[j] for j in range(1, n))
        acc = _mul_pruned(acc, ser, limit)
    return {f: c for f, c in acc.items() if _fits(f, bounds)}


def rf_expand(rf: RationalForm, region: Region, cutoff) -> LaurentSeries:
    """Laurent expansion of ``rf`` valid in ``region`` with tail bounds ``cutoff``."""
    bounds = _norm_bounds(cutoff, len(region))
    return LaurentSeries.from_tail_terms(region, bounds, expand_tail_terms(rf, region, bounds))


# reconstruction ----------------------------------------------------------------

_DENOMS: Dict[Tuple, MultiPoly] = {}
_DENOM_TAILS: Dict[Tuple, Dict[Vec, Q]] = {}


def _budget_key(budget: Mapping[LinearForm, int]) -> Tuple:
    return tuple(sorted((f, m) for f, m in budget.items() if m > 0))


def budget_denominator(budget: Mapping[LinearForm, int]) -> MultiPoly:
    key = _budget_key(budget)
    q = _DENOMS.get(key)
    if q is None:
        q = MultiPoly.const(1)
        for f, m in key:
            q = q * f.to_poly() ** m
        _DENOMS[key] = q
    return q


def _denominator_tails(budget: Mapping[LinearForm, int], region: Region) -> Dict[Vec, Q]:
    key = (_budget_key(budget), region.order)
    t = _DENOM_TAILS.get(key)
    if t is None:
        t = _poly_tail_terms(budget_denominator(budget), region)
        _DENOM_TAILS[key] = t
    return t


def required_bounds(region: Region, budget: Mapping[LinearForm, int], max_total_degree: int, margin: int = 2) -> Vec:
    """Tail bounds that make series_to_rational exact for a series whose
    terms have total degree at most ``max_total_degree``."""
    n = len(region)
    qt = _denominator_tails(budget, region)
    dq = sum(m * 1 for f, m in budget.items())
    dp = max_total_degree + dq
    qmin = _min_tails(qt, n)
    return tuple(max(dp - qmin[j], 0) + margin for j in range(1, n))


def series_to_rational(series: LaurentSeries, pole_budget: Mapping[LinearForm, int], verify: bool = True) -> RationalForm:
    """Rational form with poles inside ``pole_budget`` matching ``series``."""
    region = series.region
    n = len(region)
    budget = {f: m for f, m in pole_budget.items() if m > 0}
    for f in budget:
        if not f.is_homogeneous():
            raise DomainError(f"budget factor {f.to_str()} is not homogeneous")
        for v in f.variables():
            region.index(v)
    if not series.terms:
        return RationalForm.zero()
    qt = _denominator_tails(budget, region)
    qmin = _min_tails(qt, n)
    window = tuple(series.bounds[j - 1] + qmin[j] for j in range(1, n))
    dq = sum(budget.values())
    dp = max(series.total_degrees()) + dq
    if n > 1 and min(window) < dp:
        raise InsufficientCutoff(
            f"window {window} cannot hold a numerator of degree {dp}; widen the series bounds"
        )
    st = series.tail_terms()
    prod = _mul_pruned(st, qt, window)
    terms = {}
    for f, c in prod.items():
        e = untails(f)
        if any(k < 0 for k in e):
            raise ReconstructionFailure(
                "series times budget denominator is not a polynomial",
                witness={"exponent": dict(zip(region.order, e)), "coefficient": str(c)},
            )
        terms[tuple((v, k) for v, k in sorted(zip(region.order, e)) if k)] = c
    candidate = RationalForm(MultiPoly(terms), budget)
    if verify:
        check = rf_expand(candidate, region, series.bounds)
        ok, where = check.agrees_with(series)
        if not ok:
            raise ReconstructionFailure(
                "reconstructed form disagrees with the series",
                witness={"exponent": dict(zip(region.order, where))},
            )
    return candidate
