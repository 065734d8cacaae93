"""Rational forms whose denominators are products of linear factors.

A ``LinearForm`` is c0 + sum c_k x_k, scaled so that the coefficient of its
first variable (natural order) is 1.  Matrix elements only ever need
z_i, z_i - z_j and, after changes of variables, other homogeneous forms;
affine forms appear only when points are substituted.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Tuple

from .poly import MultiPoly, var_key
from .scalars import Q, ZERO, q_str, to_q


class SingularAssignment(ZeroDivisionError):
    """A substitution landed exactly on a pole."""


class LinearForm:
    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs: Tuple[Tuple[str, Q], ...], const: Q = ZERO):
        # use LinearForm.make for normalization; this stores as given
        self.coeffs = coeffs
        self.const = Q(const)
        self._hash = hash((coeffs, self.const))

    @staticmethod
    def make(coeffs: Mapping[str, object], const=0) -> Tuple[Q, "LinearForm | None"]:
        """Normalize; returns (scale, form) with original = scale * form.

        A form without variables returns (constant, None).
        """
        items = sorted(((v, Q(c)) for v, c in coeffs.items() if Q(c) != 0), key=lambda t: var_key(t[0]))
        const = Q(const)
        if not items:
            return const, None
        lead = items[0][1]
        return lead, LinearForm(tuple((v, c / lead) for v, c in items), const / lead)

    @staticmethod
    def var(name: str) -> "LinearForm":
        return LinearForm(((name, Q(1)),))

    @staticmethod
    def diff(a: str, b: str) -> "LinearForm":
        """The normalized form of a - b (sign absorbed if b sorts first)."""
        _, form = LinearForm.make({a: 1, b: -1})
        return form

    @staticmethod
    def from_poly(p: MultiPoly) -> Tuple[Q, "LinearForm | None"]:
        if p.degree() > 1:
            raise ValueError("not a linear polynomial")
        coeffs = {}
        const = ZERO
        for m, c in p.terms.items():
            if m == ():
                const = c
            else:
                coeffs[m[0][0]] = c
        return LinearForm.make(coeffs, const)

    def to_poly(self) -> MultiPoly:
        terms = {((v, 1),): c for v, c in self.coeffs}
        if self.const != 0:
            terms[()] = self.const
        return MultiPoly._raw(terms)

    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def coefficient(self, var: str) -> Q:
        for v, c in self.coeffs:
            if v == var:
                return c
        return ZERO

    def is_homogeneous(self) -> bool:
        return self.const == 0

    def kind(self) -> str:
        if self.const != 0:
            return "affine"
        if len(self.coeffs) == 1:
            return "single"
        if len(self.coeffs) == 2 and self.coeffs[1][1] == -1:
            return "difference"
        return "general"

    def sort_key(self):
        return (len(self.coeffs), self.const != 0,
                tuple((var_key(v), c) for v, c in self.coeffs), self.const)

    def __eq__(self, other):
        return isinstance(other, LinearForm) and self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def to_str(self) -> str:
        out = ""
        for i, (v, c) in enumerate(self.coeffs):
            neg = c < 0
            a = -c if neg else c
            body = v if a == 1 else f"{q_str(a)}*{v}"
            if i == 0:
                out = ("-" if neg else "") + body
            else:
                out += f" {'-' if neg else '+'} {body}"
        if self.const != 0:
            out += f" {'-' if self.const < 0 else '+'} {q_str(abs(self.const))}"
        return out

    def __repr__(self):
        return f"LinearForm({self.to_str()})"

    def to_json(self):
        return {"coeffs": [[v, q_str(c)] for v, c in self.coeffs], "const": q_str(self.const)}

    @staticmethod
    def from_json(data) -> "LinearForm":
        return LinearForm(tuple((v, to_q(c)) for v, c in data["coeffs"]), to_q(data["const"]))


def _divide_by_linear(num: MultiPoly, form: LinearForm):
    """Return num / form if exact, else None (synthetic division in the
    leading variable)."""
    lead = form.coeffs[0][0]
    # form = lead - root, root = -(rest)
    root = -(form.to_poly() - MultiPoly.var(lead))
    coeffs = num.coefficients_in(lead)
    top = max(coeffs)
    if top == 0:
        return None if not num.is_zero() else num
    quotient: Dict[int, MultiPoly] = {}
    carry = MultiPoly.const(0)
    for k in range(top, 0, -1):
        carry = coeffs.get(k, MultiPoly.const(0)) + root * carry if k != top else coeffs[top]
        quotient[k - 1] = carry
    remainder = coeffs.get(0, MultiPoly.const(0)) + root * carry
    if not remainder.is_zero():
        return None
    out = MultiPoly.const(0)
    for k, c in quotient.items():
        out = out + c * MultiPoly.var(lead, k)
    return out


class RationalForm:
    """numerator / prod(pole ** multiplicity), kept canonical."""

    __slots__ = ("num", "poles", "_hash")

    def __init__(self, num: MultiPoly, poles: Mapping[LinearForm, int] | Iterable = (), *, canonical=False):
        if isinstance(poles, Mapping):
            poles = poles.items()
        if canonical:
            self.num = num
            self.poles = tuple(poles)
        else:
            n, p = _normalize(num, poles)
            self.num = n
            self.poles = p
        self._hash = None

    # constructors ---------------------------------------------------------
    @classmethod
    def const(cls, c) -> "RationalForm":
        return cls(MultiPoly.const(c), (), canonical=True)

    @classmethod
    def zero(cls) -> "RationalForm":
        return cls(MultiPoly.const(0), (), canonical=True)

    @classmethod
    def from_poly(cls, p: MultiPoly) -> "RationalForm":
        return cls(p, (), canonical=True)

    @classmethod
    def var(cls, name: str) -> "RationalForm":
        return cls(MultiPoly.var(name), (), canonical=True)

    @classmethod
    def inverse_power(cls, form: LinearForm, m: int, coeff=1) -> "RationalForm":
        return cls(MultiPoly.const(coeff), ((form, m),), canonical=True)

    # queries ----------------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def pole_dict(self) -> Dict[LinearForm, int]:
        return dict(self.poles)

    def pole_order(self, form: LinearForm) -> int:
        for f, m in self.poles:
            if f == form:
                return m
        return 0

    def variables(self) -> set:
        out = set(self.num.variables())
        for f, _ in self.poles:
            out.update(f.variables())
        return out

    def denominator(self) -> MultiPoly:
        out = MultiPoly.const(1)
        for f, m in self.poles:
            out = out * f.to_poly() ** m
        return out

    def homogeneous_degree(self):
        """Degree of homogeneity, None if not homogeneous, 'zero' for 0."""
        if self.is_zero():
            return "zero"
        if any(not f.is_homogeneous() for f, _ in self.poles):
            return None
        d = self.num.homogeneous_degree()
        if d is None:
            return None
        return d - sum(m for _, m in self.poles)

    # arithmetic -------------------------------------------------------------
    def __add__(self, other) -> "RationalForm":
        other = _lift(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        mine = dict(self.poles)
        theirs = dict(other.poles)
        common = {f: max(mine.get(f, 0), theirs.get(f, 0)) for f in set(mine) | set(theirs)}
        n1 = self.num
        n2 = other.num
        for f, m in common.items():
            a = m - mine.get(f, 0)
            b = m - theirs.get(f, 0)
            if a:
                n1 = n1 * f.to_poly() ** a
            if b:
                n2 = n2 * f.to_poly() ** b
        return RationalForm(n1 + n2, common)

    __radd__ = __add__

    def __neg__(self) -> "RationalForm":
        return RationalForm(-self.num, self.poles, canonical=True)

    def __sub__(self, other) -> "RationalForm":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "RationalForm":
        return _lift(other) - self

    def __mul__(self, other) -> "RationalForm":
        if not isinstance(other, RationalForm):
            if isinstance(other, MultiPoly):
                other = RationalForm.from_poly(other)
            else:
                c = Q(other)
                if c == 0:
                    return RationalForm.zero()
                return RationalForm(self.num * c, self.poles, canonical=True)
        poles = dict(self.poles)
        for f, m in other.poles:
            poles[f] = poles.get(f, 0) + m
        return RationalForm(self.num * other.num, poles)

    __rmul__ = __mul__

    def scale(self, c) -> "RationalForm":
        return self * Q(c)

    def __pow__(self, k: int) -> "RationalForm":
        if k < 0:
            raise ValueError("negative powers are not closed in this representation")
        return RationalForm(self.num ** k, {f: m * k for f, m in self.poles})

    def divide_by_linear(self, form: LinearForm, m: int = 1) -> "RationalForm":
        poles = dict(self.poles)
        poles[form] = poles.get(form, 0) + m
        return RationalForm(self.num, poles)

    # calculus / substitution ----------------------------------------------
    def diff(self, var: str) -> "RationalForm":
        # d(N / prod L^m) = (N' prod L - N sum m c_L prod_{other}) / prod L^{m+1}
        if self.is_zero():
            return self
        involved = [(f, m) for f, m in self.poles if f.coefficient(var) != 0]
        num = self.num.diff(var)
        others = MultiPoly.const(1)
        for f, _ in involved:
            others = others * f.to_poly()
        num = num * others
        for f, m in involved:
            rest = MultiPoly.const(1)
            for g, _ in involved:
                if g is not f:
                    rest = rest * g.to_poly()
            num = num - self.num * rest * (m * f.coefficient(var))
        poles = dict(self.poles)
        for f, m in involved:
            poles[f] = m + 1
        return RationalForm(num, poles)

    def subs(self, mapping: Mapping[str, object]) -> "RationalForm":
        """Substitute affine polynomials (or scalars) for variables."""
        lifted = {v: (x if isinstance(x, MultiPoly) else MultiPoly.const(x)) for v, x in mapping.items()}
        num = self.num.subs(lifted)
        poles: Dict[LinearForm, int] = {}
        for f, m in self.poles:
            if not any(v in lifted for v in f.variables()):
                poles[f] = poles.get(f, 0) + m
                continue
            scale, nf = LinearForm.from_poly(f.to_poly().subs(lifted))
            if nf is None:
                if scale == 0:
                    raise SingularAssignment(f"substitution hits the pole {f.to_str()}")
                num = num * (Q(1) / scale ** m)
            else:
                num = num * (Q(1) / scale ** m)
                poles[nf] = poles.get(nf, 0) + m
        return RationalForm(num, poles)

    def evaluate(self, values: Mapping[str, object]):
        den = ZERO + 1
        for f, m in self.poles:
            val = f.const + sum((c * values[v] for v, c in f.coeffs), ZERO)
            if val == 0:
                raise SingularAssignment(f"evaluation at the pole {f.to_str()}")
            den = den * val ** m
        return self.num.evaluate(values) / den

    def rename(self, mapping: Mapping[str, str]) -> "RationalForm":
        return self.subs({a: MultiPoly.var(b) for a, b in mapping.items()})

    # comparison / display -----------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, RationalForm):
            try:
                other = _lift(other)
            except TypeError:
                return NotImplemented
        return self.num == other.num and self.poles == other.poles

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.poles))
        return self._hash

    def to_str(self) -> str:
        """Canonical text: numerator in sorted monomial order over the sorted
        product of pole factors (single variables first)."""
        num = self.num.to_str()
        if not self.poles:
            return num
        factors = []
        for f, m in self.poles:
            body = f.to_str()
            if len(f.coeffs) > 1 or f.const != 0:
                body = f"({body})"
            factors.append(body if m == 1 else f"{body}^{m}")
        return f"({num})/({'*'.join(factors)})"

    def __repr__(self):
        return f"RationalForm({self.to_str()})"

    __str__ = to_str

    def to_json(self):
        return {"num": self.num.to_json(), "poles": [[f.to_json(), m] for f, m in self.poles]}

    @classmethod
    def from_json(cls, data) -> "RationalForm":
        return cls(MultiPoly.from_json(data["num"]), {LinearForm.from_json(f): int(m) for f, m in data["poles"]})


def _normalize(num: MultiPoly, poles) -> Tuple[MultiPoly, Tuple[Tuple[LinearForm, int], ...]]:
    merged: Dict[LinearForm, int] = {}
    for f, m in poles:
        if m < 0:
            num = num * f.to_poly() ** (-m)
        elif m > 0:
            merged[f] = merged.get(f, 0) + m
    if num.is_zero():
        return num, ()
    out = []
    for f in sorted(merged):
        m = merged[f]
        while m > 0:
            q = _divide_by_linear(num, f)
            if q is None:
                break
            num = q
            m -= 1
        if m > 0:
            out.append((f, m))
    return num, tuple(out)


def rf_normalize(rf: RationalForm) -> RationalForm:
    """Return the canonical form (construction already normalizes; this
    re-runs normalization on the stored data)."""
    return RationalForm(rf.num, rf.poles)


def rf_pole_order(rf: RationalForm, factor: LinearForm) -> int:
    return rf.pole_order(factor)


def _lift(x) -> RationalForm:
    if isinstance(x, RationalForm):
        return x
    if isinstance(x, MultiPoly):
        return RationalForm.from_poly(x)
    return RationalForm.const(x)


def z(i: int) -> str:
    return f"z{i}"


def zdiff(i: int, j: int) -> LinearForm:
    """Pole factor z_i - z_j."""
    return LinearForm.diff(z(i), z(j))


def rf_sum(forms: Iterable[RationalForm]) -> RationalForm:
    """Sum with a single common denominator (cheaper than pairwise adds)."""
    forms = [f for f in forms if not f.is_zero()]
    if not forms:
        return RationalForm.zero()
    if len(forms) == 1:
        return forms[0]
    common: Dict[LinearForm, int] = {}
    for f in forms:
        for g, m in f.poles:
            if m > common.get(g, 0):
                common[g] = m
    total = MultiPoly.const(0)
    powers: Dict[Tuple[LinearForm, int], MultiPoly] = {}
    for f in forms:
        mine = dict(f.poles)
        n = f.num
        for g, m in common.items():
            k = m - mine.get(g, 0)
            if k:
                if (g, k) not in powers:
                    powers[(g, k)] = g.to_poly() ** k
                n = n * powers[(g, k)]
        total = total + n
    return RationalForm(total, common)
