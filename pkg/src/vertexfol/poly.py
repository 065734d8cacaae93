"""Sparse multivariate polynomials over exact rationals.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable
name with positive exponents; the empty tuple is the constant monomial.
"""

from __future__ import annotations

import re
from typing import Dict, Iterable, Mapping, Tuple

from .scalars import Q, ZERO, q_str

Monomial = Tuple[Tuple[str, int], ...]

_NAT = re.compile(r"(\d+)")


def var_key(name: str):
    """Natural sort key: 'z2' < 'z10', letters compared lexicographically."""
    parts = _NAT.split(name)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p != "")


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in d.items() if e != 0))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class MultiPoly:
    """Polynomial with rational coefficients; immutable by convention."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: Dict[Monomial, Q] = {}
        if terms:
            for m, c in terms.items():
                c = Q(c)
                if c != 0:
                    clean[m] = clean.get(m, ZERO) + c
                    if clean[m] == 0:
                        del clean[m]
        self.terms = clean

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Q]) -> "MultiPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def const(cls, c) -> "MultiPoly":
        c = Q(c)
        return cls._raw({(): c} if c != 0 else {})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "MultiPoly":
        if power == 0:
            return cls.const(1)
        return cls._raw({((name, power),): Q(1)})

    @classmethod
    def monomial(cls, mono: Mapping[str, int] | Monomial, c=1) -> "MultiPoly":
        items = mono.items() if isinstance(mono, Mapping) else mono
        m = tuple(sorted((v, e) for v, e in items if e != 0))
        if any(e < 0 for _, e in m):
            raise ValueError("polynomial monomials need nonnegative exponents")
        return cls._raw({m: Q(c)} if Q(c) != 0 else {})

    # arithmetic ------------------------------------------------------------
    def __add__(self, other) -> "MultiPoly":
        other = _lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, ZERO) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        return MultiPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "MultiPoly":
        return _lift(other) - self

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            c = Q(other)
            if c == 0:
                return MultiPoly._raw({})
            return MultiPoly._raw({m: v * c for m, v in self.terms.items()})
        out: Dict[Monomial, Q] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                s = out.get(m, ZERO) + c1 * c2
                if s == 0:
                    out.pop(m, None)
                else:
                    out[m] = s
        return MultiPoly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = MultiPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c) -> "MultiPoly":
        return self * Q(c)

    # structure -------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    def const_value(self) -> Q:
        return self.terms.get((), ZERO)

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=-1)

    def degree_in(self, var: str) -> int:
        return max((dict(m).get(var, 0) for m in self.terms), default=-1)

    def homogeneous_degree(self):
        """Common total degree of all terms, or None if not homogeneous."""
        degs = {mono_degree(m) for m in self.terms}
        if len(degs) == 1:
            return degs.pop()
        return None if degs else None

    def coefficients_in(self, var: str) -> Dict[int, "MultiPoly"]:
        """Write self = sum_k A_k var^k; returns {k: A_k}."""
        out: Dict[int, Dict[Monomial, Q]] = {}
        for m, c in self.terms.items():
            k = 0
            rest = []
            for v, e in m:
                if v == var:
                    k = e
                else:
                    rest.append((v, e))
            out.setdefault(k, {})[tuple(rest)] = c
        return {k: MultiPoly._raw(t) for k, t in out.items()}

    def diff(self, var: str) -> "MultiPoly":
        out: Dict[Monomial, Q] = {}
        for m, c in self.terms.items():
            d = dict(m)
            e = d.get(var, 0)
            if e == 0:
                continue
            if e == 1:
                del d[var]
            else:
                d[var] = e - 1
            key = tuple(sorted(d.items()))
            out[key] = out.get(key, ZERO) + c * e
        return MultiPoly._raw({m: c for m, c in out.items() if c != 0})

    def subs(self, mapping: Mapping[str, object]) -> "MultiPoly":
        """Substitute polynomials (or scalars) for variables."""
        cache: Dict[Tuple[str, int], MultiPoly] = {}
        out = MultiPoly._raw({})
        for m, c in self.terms.items():
            term = MultiPoly.const(c)
            keep = []
            for v, e in m:
                if v in mapping:
                    key = (v, e)
                    if key not in cache:
                        cache[key] = _lift(mapping[v]) ** e
                    term = term * cache[key]
                else:
                    keep.append((v, e))
            if keep:
                term = term * MultiPoly._raw({tuple(keep): Q(1)})
            out = out + term
        return out

    def evaluate(self, values: Mapping[str, object]):
        total = ZERO
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t = t * values[v] ** e
            total = total + t
        return total

    def rename(self, mapping: Mapping[str, str]) -> "MultiPoly":
        out: Dict[Monomial, Q] = {}
        for m, c in self.terms.items():
            d: Dict[str, int] = {}
            for v, e in m:
                nv = mapping.get(v, v)
                d[nv] = d.get(nv, 0) + e
            out[tuple(sorted(d.items()))] = c
        return MultiPoly._raw(out)

    # comparison / display ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.terms == other.terms
        try:
            return self.terms == MultiPoly.const(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self):
        """Terms in canonical order: descending total degree, then descending
        exponents along naturally sorted variables."""
        names = sorted(self.variables(), key=var_key)

        def key(item):
            m, _ = item
            d = dict(m)
            return (-mono_degree(m), tuple(-d.get(v, 0) for v in names))

        return sorted(self.terms.items(), key=key)

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for m, c in self.sorted_terms():
            mono = "*".join(
                v if e == 1 else f"{v}^{e}"
                for v, e in sorted(m, key=lambda ve: var_key(ve[0]))
            )
            neg = c < 0
            a = -c if neg else c
            if mono and a == 1:
                body = mono
            elif mono:
                body = f"{q_str(a)}*{mono}"
            else:
                body = q_str(a)
            pieces.append(("-" if neg else "+", body))
        out = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"MultiPoly({self.to_str()})"

    def to_json(self):
        return [[[list(p) for p in m], q_str(c)] for m, c in self.sorted_terms()]

    @classmethod
    def from_json(cls, data) -> "MultiPoly":
        from .scalars import to_q

        return cls({tuple(sorted((v, int(e)) for v, e in m)): to_q(c) for m, c in data})


def _lift(x) -> MultiPoly:
    if isinstance(x, MultiPoly):
        return x
    return MultiPoly.const(x)


def poly_sum(polys: Iterable[MultiPoly]) -> MultiPoly:
    out: Dict[Monomial, Q] = {}
    for p in polys:
        for m, c in p.terms.items():
            out[m] = out.get(m, ZERO) + c
    return MultiPoly._raw({m: c for m, c in out.items() if c != 0})
