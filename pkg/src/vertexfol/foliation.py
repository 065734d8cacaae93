"""Codimension-one foliation models on surfaces, holonomy embeddings between
transversal sections, and the Cech-de Rham double complex over them.

Function spaces on sections are truncated: trigonometric polynomials of degree
<= D on circle sections, ordinary polynomials of degree <= D on interval
sections.  On circles a function is stored by Fourier mode m together with an
exact power of the rotation character xi = exp(2 pi i alpha / s), so pulling
back along a rotation is multiplication by a power of xi and never needs a
transcendental number.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

from .poly import MultiPoly
from .rational import RationalForm, SingularAssignment
from .scalars import GaussQ, Q, ZERO, binom, to_q
from .wvalued import Cochain, zvars


class FoliationError(ValueError):
    pass


class NotComposable(FoliationError):
    pass


class PathThroughPole(FoliationError):
    pass


# ------------------------------------------------------------------ slopes
@dataclass(frozen=True)
class QuadraticSurd:
    """(a + b sqrt(d)) / c with d > 1 square-free."""

    a: int
    b: int
    d: int
    c: int

    def __post_init__(self):
        if self.c == 0:
            raise FoliationError("zero denominator in surd")
        if self.d < 2 or any(self.d % (p * p) == 0 for p in range(2, math.isqrt(self.d) + 1)):
            raise FoliationError("surd radicand must be square-free and > 1")

    def is_irrational(self) -> bool:
        return self.b != 0

    def sign(self) -> int:
        """Exact sign of (a + b sqrt d) / c."""
        a, b = self.a, self.b
        if b == 0:
            s = (a > 0) - (a < 0)
        elif a >= 0 and b >= 0:
            s = 1
        elif a <= 0 and b <= 0:
            s = -1
        else:
            # a and b have opposite signs: compare a^2 with b^2 d
            lhs, rhs = a * a, b * b * self.d
            bigger_a = lhs > rhs
            s = ((a > 0) - (a < 0)) if bigger_a else ((b > 0) - (b < 0))
        return s * (1 if self.c > 0 else -1)

    def multiple_is_integer(self, n: int) -> bool:
        """n * alpha in Z, decided exactly."""
        if n == 0:
            return True
        if self.b != 0:
            return False
        return (n * self.a) % self.c == 0

    def __float__(self):
        return (self.a + self.b * math.sqrt(self.d)) / self.c

    def __str__(self):
        return f"({self.a}+{self.b}*sqrt({self.d}))/{self.c}"


def parse_slope(value):
    """'p/q', an int, a Fraction, or {'surd': [a, b, d, c]}."""
    if isinstance(value, QuadraticSurd):
        return value
    if isinstance(value, Mapping) and "surd" in value:
        return QuadraticSurd(*[int(x) for x in value["surd"]])
    if isinstance(value, (list, tuple)) and len(value) == 4:
        return QuadraticSurd(*[int(x) for x in value])
    return to_q(value)


# ----------------------------------------------------------- exact fields
def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else ZERO) + (b[i] if i < len(b) else ZERO) for i in range(n)])


def _pneg(a):
    return tuple(-x for x in a)


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _pdivmod(a, b):
    a = list(a)
    q = [ZERO] * max(len(a) - len(b) + 1, 0)
    lead = b[-1]
    while len(a) >= len(b) and a:
        c = a[-1] / lead
        shift = len(a) - len(b)
        q[shift] = c
        for i, y in enumerate(b):
            a[i + shift] -= c * y
        a = list(_trim(a))
    return _trim(q), _trim(a)


def _monic(a):
    return tuple(x / a[-1] for x in a) if a else a


def _pgcd(a, b):
    while b:
        a, b = b, _pdivmod(a, b)[1]
    return _monic(a)


def _xgcd(a, b):
    """(g, s) with s a = g mod b."""
    r0, r1, s0, s1 = a, b, (Q(1),), ()
    while r1:
        qt, r = _pdivmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _padd(s0, _pneg(_pmul(qt, s1)))
    return r0, s0


def cyclotomic(n: int):
    """Coefficients of the n-th cyclotomic polynomial."""
    p = tuple([Q(-1)] + [ZERO] * (n - 1) + [Q(1)])
    for d in range(1, n):
        if n % d == 0:
            p = _pdivmod(p, cyclotomic(d))[0]
    return p


class CharacterField:
    """Q(xi) for xi a primitive ``order``-th root of unity, or xi transcendental
    when ``order`` is None.  Elements are coefficient tuples (cyclotomic case)
    or (numerator, denominator) pairs."""

    def __init__(self, order: int | None):
        self.order = order
        self.modulus = cyclotomic(order) if order else None

    def _reduce(self, p):
        return _pdivmod(p, self.modulus)[1] if self.modulus else p

    def power(self, e: int):
        if self.order:
            e %= self.order
            return self._reduce(tuple([ZERO] * e + [Q(1)]))
        if e >= 0:
            return (tuple([ZERO] * e + [Q(1)]), (Q(1),))
        return ((Q(1),), tuple([ZERO] * (-e) + [Q(1)]))

    def const(self, c):
        c = Q(c)
        p = (c,) if c else ()
        return p if self.order else (p, (Q(1),))

    def zero(self):
        return self.const(0)

    def is_zero(self, x) -> bool:
        return not x if self.order else not x[0]

    def add(self, x, y):
        if self.order:
            return _padd(x, y)
        return self._norm(_padd(_pmul(x[0], y[1]), _pmul(y[0], x[1])), _pmul(x[1], y[1]))

    def neg(self, x):
        return _pneg(x) if self.order else (_pneg(x[0]), x[1])

    def mul(self, x, y):
        if self.order:
            return self._reduce(_pmul(x, y))
        return self._norm(_pmul(x[0], y[0]), _pmul(x[1], y[1]))

    def inv(self, x):
        if self.is_zero(x):
            raise ZeroDivisionError("inverse of zero")
        if self.order:
            g, s = _xgcd(x, self.modulus)
            return self._reduce(tuple(c / g[0] for c in s))
        return self._norm(x[1], x[0])

    def _norm(self, num, den):
        if not num:
            return ((), (Q(1),))
        g = _pgcd(num, den)
        num, den = _pdivmod(num, g)[0], _pdivmod(den, g)[0]
        lead = den[-1]
        return tuple(c / lead for c in num), tuple(c / lead for c in den)

    def from_laurent(self, terms: Mapping[int, object]):
        out = self.zero()
        for e, c in terms.items():
            out = self.add(out, self.mul(self.const(c), self.power(e)))
        return out


def field_rank(rows: Sequence[Mapping], F: CharacterField) -> int:
    """Rank over F of sparse rows (column -> field element)."""
    pivots: List[Tuple[object, Dict]] = []
    rank = 0
    for row in rows:
        r = {k: v for k, v in row.items() if not F.is_zero(v)}
        for col, prow in pivots:
            c = r.get(col)
            if c is None:
                continue
            for k, v in prow.items():
                nv = F.add(r.get(k, F.zero()), F.neg(F.mul(c, v)))
                if F.is_zero(nv):
                    r.pop(k, None)
                else:
                    r[k] = nv
        if not r:
            continue
        col = min(r, key=repr)
        inv = F.inv(r[col])
        pivots.append((col, {k: F.mul(v, inv) for k, v in r.items()}))
        rank += 1
    return rank


# ----------------------------------------------------------------- models
@dataclass(frozen=True)
class TransversalSection:
    index: int
    kind: str  # "circle" or "interval"
    label: str
    chart: Tuple = ()


@dataclass(frozen=True)
class HolonomyEmbedding:
    """Leafwise transport U_source -> U_target.

    Circle sections: t -> t + winding * (rotation step); interval sections:
    t -> scale * t + offset.  ``winding`` doubles as the homotopy tag."""

    source: int
    target: int
    winding: int = 0
    scale: object = Q(1)
    offset: object = ZERO

    def key(self):
        return (self.source, self.target, self.winding, str(self.scale), str(self.offset))


@dataclass
class FoliationModel:
    kind: str
    sections: List[TransversalSection]
    slope: object = None
    char_order: int | None = 1
    char_step: int = 0
    tags: List[str] = field(default_factory=list)

    # embeddings -------------------------------------------------------------
    def embeddings(self, bound: int = 1) -> List[HolonomyEmbedding]:
        out = []
        for U in self.sections:
            for V in self.sections:
                out.extend(self._between(U, V, bound))
        return out

    def _between(self, U, V, bound):
        if self.kind == "torus":
            s = len(self.sections)
            return [HolonomyEmbedding(U.index, V.index, n) for n in range(-bound * s, bound * s + 1)
                    if (n - (V.index - U.index)) % s == 0]
        if self.kind == "cylinder":
            return [HolonomyEmbedding(U.index, V.index, 0)]
        if self.kind == "annulus":
            (r0, r1), (s0, s1) = U.chart, V.chart
            if not (s0 <= r0 and r1 <= s1):
                return []
            scale = (r1 - r0) / (s1 - s0)
            offset = (r0 - s0) / (s1 - s0)
            return [HolonomyEmbedding(U.index, V.index, n, scale, offset) for n in range(-bound, bound + 1)]
        raise FoliationError(f"unknown model {self.kind}")

    def generators(self) -> List[HolonomyEmbedding]:
        """Generating embeddings of the transversal basis."""
        if self.kind == "torus":
            s = len(self.sections)
            return [HolonomyEmbedding(i, (i + 1) % s, 1) for i in range(s)]
        if self.kind == "cylinder":
            return [HolonomyEmbedding(U.index, V.index, 0) for U in self.sections for V in self.sections if U.index != V.index] or \
                   [HolonomyEmbedding(0, 0, 0)]
        out = []
        for U in self.sections:
            for V in self.sections:
                out.extend(e for e in self._between(U, V, 1) if e.winding == (1 if U.index == V.index else 0))
        return out

    def compose(self, first: HolonomyEmbedding, second: HolonomyEmbedding) -> HolonomyEmbedding:
        """second o first (apply ``first`` then ``second``)."""
        if first.target != second.source:
            raise NotComposable(f"{first.key()} then {second.key()}")
        return HolonomyEmbedding(first.source, second.target, first.winding + second.winding,
                                 Q(second.scale) * Q(first.scale), Q(second.scale) * Q(first.offset) + Q(second.offset))

    def is_identity_germ(self, h: HolonomyEmbedding) -> bool:
        if h.source != h.target:
            return False
        if self.kind == "torus":
            return self.translation_is_integer(h.winding)
        return Q(h.scale) == 1 and Q(h.offset) == 0

    def translation_is_integer(self, winding: int) -> bool:
        """winding * alpha / s in Z, decided exactly."""
        s = len(self.sections)
        if winding % s:
            return False
        n = winding // s
        a = self.slope
        if isinstance(a, QuadraticSurd):
            return a.multiple_is_integer(n)
        return (Q(n) * Q(a)).denominator == 1

    def section(self, i) -> TransversalSection:
        return self.sections[i]

    # function spaces ----------------------------------------------------------
    def basis(self, index: int, D: int) -> List:
        if self.sections[index].kind == "circle":
            return list(range(-D, D + 1))
        return list(range(D + 1))

    def character_field(self) -> CharacterField:
        return CharacterField(self.char_order if self.kind == "torus" else 1)


def _char_order(alpha, s: int):
    if isinstance(alpha, QuadraticSurd):
        return None if alpha.is_irrational() else _rational_order(Fraction(alpha.a, alpha.c), s)
    return _rational_order(Fraction(int(Q(alpha).numerator), int(Q(alpha).denominator)), s)


def _rational_order(alpha: Fraction, s: int) -> int:
    # xi = exp(2 pi i alpha / s) has order (q s) / gcd(p, q s)
    step = alpha / s
    return step.denominator


def build_model(spec: Mapping) -> FoliationModel:
    """Models from a dict: {"kind": "torus", "slope": "1/2" | {"surd": [a,b,d,c]},
    "sections": s}, {"kind": "annulus", "sections": [[r0, r1], ...]} or
    {"kind": "cylinder", "sections": [y0, y1, ...]}."""
    kind = spec.get("kind")
    if kind == "torus":
        alpha = parse_slope(spec.get("slope", "1/2"))
        s = int(spec.get("sections", 1))
        if s < 1:
            raise FoliationError("need at least one section")
        secs = [TransversalSection(j, "circle", f"x={Fraction(j, s)}", (Fraction(j, s),)) for j in range(s)]
        tags = []
        if not isinstance(alpha, QuadraticSurd) and alpha == 0:
            tags.append("degenerate: leaves are compact circles")
        if isinstance(alpha, QuadraticSurd) and alpha.is_irrational():
            tags.append("irrational slope: dense leaves")
        return FoliationModel("torus", secs, alpha, _char_order(alpha, s), 1, tags)
    if kind == "annulus":
        raw = spec.get("sections", [[1, 3]])
        secs = [TransversalSection(j, "interval", f"r in [{r0}, {r1}]", (to_q(r0), to_q(r1))) for j, (r0, r1) in enumerate(raw)]
        return FoliationModel("annulus", secs, None, 1, 0, ["trivial holonomy"])
    if kind == "cylinder":
        raw = spec.get("sections", [0])
        secs = [TransversalSection(j, "circle", f"y={y}", (to_q(y),)) for j, y in enumerate(raw)]
        return FoliationModel("cylinder", secs, None, 1, 0, ["vertical leaves"])
    raise FoliationError(f"unknown surface kind {kind!r}")


def transversal_basis(model: FoliationModel, count: int | None = None) -> Dict:
    """Sections and generating embeddings; ``count`` rebuilds the model with
    that many sections where the model allows it."""
    if count is not None:
        if count < 1:
            raise FoliationError("count must be positive")
        if model.kind == "torus":
            model = build_model({"kind": "torus", "slope": _slope_spec(model.slope), "sections": count})
        elif model.kind == "cylinder":
            model = build_model({"kind": "cylinder", "sections": list(range(count))})
        elif model.kind == "annulus":
            r0, r1 = model.sections[0].chart
            width = (r1 - r0) / (2 * count)
            secs = [[r0, r1]] + [[r0 + width * j, r0 + width * (j + 1)] for j in range(count - 1)]
            model = build_model({"kind": "annulus", "sections": secs})
    return {"model": model, "sections": model.sections, "generators": model.generators()}


def _slope_spec(alpha):
    if isinstance(alpha, QuadraticSurd):
        return {"surd": [alpha.a, alpha.b, alpha.d, alpha.c]}
    return str(alpha)


def path_holonomy(model: FoliationModel, path: Sequence[HolonomyEmbedding]) -> HolonomyEmbedding:
    """Holonomy of a concatenated path, composing germs in travel order."""
    out = path[0]
    for h in path[1:]:
        out = model.compose(out, h)
    return out


def invariant_function_count(model: FoliationModel, D: int) -> int:
    """Modes m with |m| <= D fixed by every holonomy, decided exactly."""
    if model.kind != "torus":
        raise FoliationError("invariant count is defined for torus models")
    s = len(model.sections)
    return sum(1 for m in range(-D, D + 1) if model.translation_is_integer(m * s))


# ------------------------------------------------------------ section forms
class SectionForm:
    """An l-form (l in {0, 1}) on one section.

    circle: keys (m, e) meaning xi^e e^{2 pi i m t} (times 2 pi i dt if l = 1);
    interval: keys k meaning t^k (times dt if l = 1)."""

    __slots__ = ("model", "section", "degree", "data")

    def __init__(self, model: FoliationModel, section: int, degree: int, data: Mapping):
        self.model = model
        self.section = section
        self.degree = degree
        self.data = {k: Q(c) for k, c in self._canon(data).items() if c != 0}

    def _canon(self, data):
        if self.model.sections[self.section].kind != "circle" or not self.model.char_order:
            return data
        N = self.model.char_order
        out: Dict = {}
        for (m, e), c in data.items():
            key = (m, e % N)
            out[key] = out.get(key, ZERO) + c
        return out

    def is_circle(self):
        return self.model.sections[self.section].kind == "circle"

    def _like(self, data, degree=None):
        return SectionForm(self.model, self.section, self.degree if degree is None else degree, data)

    def __add__(self, other):
        if other.section != self.section or other.degree != self.degree:
            raise FoliationError("adding forms on different sections or degrees")
        out = dict(self.data)
        for k, c in other.data.items():
            out[k] = out.get(k, ZERO) + c
        return self._like(out)

    def scale(self, c):
        return self._like({k: v * c for k, v in self.data.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return (self.section, self.degree, self.data) == (other.section, other.degree, other.data)

    def is_zero(self):
        return not self.data

    def __mul__(self, other):
        """Wedge product; forms of total degree 2 vanish on a section."""
        if other.section != self.section:
            raise FoliationError("product of forms on different sections")
        deg = self.degree + other.degree
        if deg > 1:
            return self._like({}, 1)
        out: Dict = {}
        for k1, c1 in self.data.items():
            for k2, c2 in other.data.items():
                k = (k1[0] + k2[0], k1[1] + k2[1]) if self.is_circle() else k1 + k2
                out[k] = out.get(k, ZERO) + c1 * c2
        return self._like(out, deg)

    def d(self):
        if self.degree >= 1:
            return self._like({}, 1)
        if self.is_circle():
            # d e^{2 pi i m t} = m e^{2 pi i m t} (2 pi i dt)
            return self._like({(m, e): c * m for (m, e), c in self.data.items()}, 1)
        return self._like({k - 1: c * k for k, c in self.data.items() if k}, 1)

    def pullback(self, h: HolonomyEmbedding):
        """h^* of a form living on h.target, as a form on h.source."""
        if h.target != self.section:
            raise NotComposable("pullback of a form from the wrong section")
        if self.is_circle():
            step = self.model.char_step * h.winding
            return SectionForm(self.model, h.source, self.degree, {(m, e + m * step): c for (m, e), c in self.data.items()})
        a, b = Q(h.scale), Q(h.offset)
        out: Dict = {}
        for k, c in self.data.items():
            for j in range(k + 1):
                out[j] = out.get(j, ZERO) + c * binom(k, j) * a ** j * b ** (k - j)
        if self.degree == 1:
            out = {j: c * a for j, c in out.items()}
        return SectionForm(self.model, h.source, self.degree, out)

    def to_str(self):
        return " + ".join(f"{c}*{k}" for k, c in sorted(self.data.items())) or "0"


def zero_form(model, section, degree):
    return SectionForm(model, section, degree, {})


def unit_form(model, section):
    return SectionForm(model, section, 0, {(0, 0) if model.sections[section].kind == "circle" else 0: 1})


# -------------------------------------------------------------- cochains
Chain = Tuple[int, Tuple[HolonomyEmbedding, ...]]


def chain_targets(chain: Chain) -> List[int]:
    src, hs = chain
    out = [src]
    for h in hs:
        if h.source != out[-1]:
            raise NotComposable("chain embeddings are not composable")
        out.append(h.target)
    return out


class CechCochain:
    """Bidegree (k, l); ``fn`` maps a chain (U_0, (h_1..h_k)) to a form on U_0."""

    def __init__(self, model: FoliationModel, k: int, l: int, fn: Callable[[Chain], SectionForm], name: str = ""):
        self.model, self.k, self.l, self.fn, self.name = model, k, l, fn, name
        self._memo: Dict = {}

    def __call__(self, chain: Chain) -> SectionForm:
        if len(chain[1]) != self.k:
            raise FoliationError(f"expected a {self.k}-chain")
        chain_targets(chain)
        key = (chain[0], tuple(h.key() for h in chain[1]))
        hit = self._memo.get(key)
        if hit is None:
            hit = self.fn(chain)
            self._memo[key] = hit
        return hit


def random_cochain(model: FoliationModel, k: int, l: int, D: int, seed: int = 0) -> CechCochain:
    """Entries with small random integer coefficients, generated on demand and
    reproducible from (seed, chain)."""

    def fn(chain):
        rng = random.Random(f"{seed}|{k}|{l}|{chain[0]}|{[h.key() for h in chain[1]]}")
        sec = chain[0]
        if model.sections[sec].kind == "circle":
            data = {(m, 0): rng.randint(-3, 3) for m in range(-D, D + 1)}
        else:
            data = {j: rng.randint(-3, 3) for j in range(D + 1)}
        return SectionForm(model, sec, l, data)

    return CechCochain(model, k, l, fn, f"random({k},{l};{seed})")


def unit_cochain(model: FoliationModel) -> CechCochain:
    return CechCochain(model, 0, 0, lambda ch: unit_form(model, ch[0]), "unit")


def _total_pullback(model, hs, form):
    for h in reversed(hs):
        form = form.pullback(h)
    return form


def cech_delta(w: CechCochain, faces: str = "full") -> CechCochain:
    """(delta w)(h_1..h_{k+1}) = sum_i (-1)^i delta_i w with the front face
    pulled back along h_1, inner faces composing h_{i+1} after h_i and the
    back face dropping h_{k+1}.  ``faces="printed"`` keeps only 1 <= i <= k."""
    model, k = w.model, w.k
    lo, hi = (0, k + 1) if faces == "full" else (1, k)

    def fn(chain):
        src, hs = chain
        total = zero_form(model, src, w.l)
        for i in range(lo, hi + 1):
            sign = -1 if i % 2 else 1
            if i == 0:
                term = w((hs[0].target, hs[1:])).pullback(hs[0])
            elif i == k + 1:
                term = w((src, hs[:k]))
            else:
                merged = model.compose(hs[i - 1], hs[i])
                term = w((src, hs[: i - 1] + (merged,) + hs[i + 1:]))
            total = total + term.scale(sign)
        return total

    return CechCochain(model, k + 1, w.l, fn, f"delta({w.name})")


def vertical_d(w: CechCochain) -> CechCochain:
    sign = -1 if w.k % 2 else 1
    return CechCochain(w.model, w.k, w.l + 1, lambda ch: w(ch).d().scale(sign), f"d({w.name})")


def add_cochains(a: CechCochain, b: CechCochain, scale=1) -> CechCochain:
    if (a.k, a.l) != (b.k, b.l):
        raise FoliationError("bidegree mismatch")
    return CechCochain(a.model, a.k, a.l, lambda ch: a(ch) + b(ch).scale(scale), f"{a.name}+{b.name}")


PRODUCT_SIGNS = ("form-degree", "printed")


def cech_product(w: CechCochain, eta: CechCochain, sign: str = "form-degree") -> CechCochain:
    """(w . eta)(h_1..h_{k+k'}) = s w(h_1..h_k) (h_k o .. o h_1)^* eta(h_{k+1}..)
    with s = (-1)^{k' l} ("form-degree") or (-1)^{k k'} ("printed")."""
    if w.l + eta.l > 1:
        raise FoliationError("product exceeds the form degree of a section")
    model, k, kp = w.model, w.k, eta.k
    s = (-1) ** (kp * w.l) if sign == "form-degree" else (-1) ** (k * kp)

    def fn(chain):
        src, hs = chain
        mid = chain_targets(chain)[k]
        left = w((src, hs[:k]))
        right = _total_pullback(model, hs[:k], eta((mid, hs[k:])))
        return (left * right).scale(s)

    return CechCochain(model, k + kp, w.l + eta.l, fn, f"({w.name}.{eta.name})")


def chains(model: FoliationModel, k: int, bound: int = 1, closed: bool = False) -> List[Chain]:
    """k-chains from embeddings with |winding| <= bound; with ``closed`` every
    consecutive composite must also lie in that set (a truncated nerve)."""
    emb = model.embeddings(bound)
    allowed = {e.key() for e in emb}
    by_source: Dict[int, List[HolonomyEmbedding]] = {}
    for e in emb:
        by_source.setdefault(e.source, []).append(e)
    out: List[Chain] = []

    def grow(src, cur, hs):
        if len(hs) == k:
            out.append((src, tuple(hs)))
            return
        for e in by_source.get(cur, []):
            if closed:
                ok = True
                acc = e
                for h in reversed(hs):
                    acc = model.compose(h, acc)
                    if acc.key() not in allowed:
                        ok = False
                        break
                if not ok:
                    continue
            grow(src, e.target, hs + [e])

    for U in model.sections:
        grow(U.index, U.index, [])
    return out


def check_delta_squared(model: FoliationModel, D: int = 4, k_max: int = 3, bound: int = 1, seed: int = 0,
                        faces: str = "full") -> Dict:
    """delta o delta = 0 on random tables of every bidegree (k, l), k <= k_max,
    plus anticommutation of delta with the vertical differential."""
    checked = 0
    for l in (0, 1):
        for k in range(k_max + 1):
            w = random_cochain(model, k, l, D, seed)
            dd = cech_delta(cech_delta(w, faces), faces)
            for ch in chains(model, k + 2, bound):
                checked += 1
                val = dd(ch)
                if not val.is_zero():
                    return {"status": "fail", "checked": checked,
                            "witness": {"k": k, "l": l, "chain": _chain_str(ch), "value": val.to_str()}}
            if l == 0:
                anti = add_cochains(cech_delta(vertical_d(w), faces), vertical_d(cech_delta(w, faces)))
                for ch in chains(model, k + 1, bound):
                    checked += 1
                    if not anti(ch).is_zero():
                        return {"status": "fail", "checked": checked,
                                "witness": {"k": k, "relation": "delta d + d delta", "chain": _chain_str(ch)}}
    return {"status": "pass", "checked": checked}


def check_leibniz(model: FoliationModel, D: int = 4, k_max: int = 3, bound: int = 1, seed: int = 0,
                  sign: str = "form-degree") -> Dict:
    """delta(w . eta) = delta w . eta + (-1)^{k + l} w . delta eta and the same
    rule for the vertical differential, for k + k' + 1 <= k_max."""
    checked = 0
    for k in range(k_max):
        for kp in range(k_max - k):
            for l, lp in ((0, 0), (0, 1), (1, 0)):
                w = random_cochain(model, k, l, D, seed + 1)
                eta = random_cochain(model, kp, lp, D, seed + 2)
                prod = cech_product(w, eta, sign)
                s = (-1) ** (k + l)
                lhs = cech_delta(prod)
                rhs = add_cochains(cech_product(cech_delta(w), eta, sign), cech_product(w, cech_delta(eta), sign), s)
                for ch in chains(model, k + kp + 1, bound):
                    checked += 1
                    if lhs(ch) != rhs(ch):
                        return {"status": "fail", "checked": checked,
                                "witness": {"k": k, "k'": kp, "l": l, "l'": lp, "differential": "delta", "chain": _chain_str(ch),
                                            "residual": (lhs(ch) - rhs(ch)).to_str()}}
                if l + lp == 0:
                    lhs_v = vertical_d(prod)
                    rhs_v = add_cochains(cech_product(vertical_d(w), eta, sign), cech_product(w, vertical_d(eta), sign), s)
                    for ch in chains(model, k + kp, bound):
                        checked += 1
                        if lhs_v(ch) != rhs_v(ch):
                            return {"status": "fail", "checked": checked,
                                    "witness": {"k": k, "k'": kp, "differential": "d", "chain": _chain_str(ch)}}
    return {"status": "pass", "checked": checked}


def _chain_str(ch: Chain) -> str:
    return f"U{ch[0]}:" + ",".join(f"{h.source}->{h.target}[{h.winding}]" for h in ch[1])


# ------------------------------------------------------------- cohomology
def cech_cohomology(model: FoliationModel, k_max: int = 1, l: int = 0, D: int = 4, bound: int = 1) -> Dict:
    """Ranks of delta on the truncated nerve (embeddings with |winding| <=
    bound, closed under consecutive composites) with section functions of
    degree <= D.  Circle models split by Fourier mode; entries live in
    Q(xi)."""
    F = model.character_field()
    cells = {k: chains(model, k, bound, closed=True) for k in range(k_max + 2)}
    circle = model.sections[0].kind == "circle"
    modes = list(range(-D, D + 1)) if circle else [None]
    ranks = {k: 0 for k in range(k_max + 1)}
    dims = {k: 0 for k in range(k_max + 2)}
    for m in modes:
        for k in range(k_max + 2):
            per = 1 if circle else D + 1
            dims[k] += len(cells[k]) * per
        for k in range(k_max + 1):
            rows = _delta_matrix_rows(model, F, cells[k], cells[k + 1], k, l, D, m)
            ranks[k] += field_rank(rows, F)
    betti = {}
    for k in range(k_max + 1):
        prev = ranks[k - 1] if k > 0 else 0
        betti[k] = dims[k] - ranks[k] - prev
    return {"model": model.kind, "l": l, "D": D, "bound": bound, "k_max": k_max,
            "cochain_dims": {k: dims[k] for k in range(k_max + 1)}, "delta_ranks": ranks, "betti": betti,
            "field": "transcendental" if F.order is None else ("rational" if F.order == 1 else f"cyclotomic({F.order})")}


def _delta_matrix_rows(model, F, src_cells, dst_cells, k, l, D, mode):
    """Rows of delta^k (one per (k+1)-chain and output basis element)."""
    index = {(c[0], tuple(h.key() for h in c[1])): c for c in src_cells}
    rows = []
    for ch in dst_cells:
        src, hs = ch
        faces = []
        for i in range(k + 2):
            sign = -1 if i % 2 else 1
            if i == 0:
                face = (hs[0].target, hs[1:])
                pull = hs[0]
            elif i == k + 1:
                face, pull = (src, hs[:k]), None
            else:
                merged = model.compose(hs[i - 1], hs[i])
                face, pull = (src, hs[: i - 1] + (merged,) + hs[i + 1:]), None
            fkey = (face[0], tuple(h.key() for h in face[1]))
            if fkey not in index:
                raise FoliationError("truncated nerve is not closed under faces")
            faces.append((sign, fkey, pull))
        if mode is not None:
            row: Dict = {}
            for sign, fkey, pull in faces:
                e = 0 if pull is None else model.char_step * pull.winding * mode
                val = F.mul(F.const(sign), F.power(e))
                row[fkey] = F.add(row.get(fkey, F.zero()), val)
            rows.append(row)
        else:
            for j in range(D + 1):
                row = {}
                for sign, fkey, pull in faces:
                    for i2 in range(D + 1):
                        # coefficient of t^j in the pulled back basis element t^i2
                        if pull is None:
                            c = Q(1) if i2 == j else ZERO
                        else:
                            c = binom(i2, j) * Q(pull.scale) ** j * Q(pull.offset) ** (i2 - j) if j <= i2 else ZERO
                            if l == 1:
                                c *= Q(pull.scale)
                        if c:
                            col = (fkey, i2)
                            row[col] = F.add(row.get(col, F.zero()), F.const(sign * c))
                rows.append(row)
    return rows


# --------------------------------------------------- characteristic forms
@dataclass(frozen=True)
class ChartPoint:
    """A point given by its coordinate in a leaf chart or a section chart."""

    section: int
    coordinate: object
    chart: str = "leaf"


def characteristic_form(phi: Cochain, dual_key, input_keys: Sequence, assignment: Mapping) -> Dict:
    """<w', Phi(v_1, z_1; ...)> with z_i replaced by chart coordinates; pole
    hits are reported as singular points instead of raising."""
    form = phi.entry(tuple(input_keys), dual_key)
    subs = {}
    for var, pt in assignment.items():
        value = pt.coordinate if isinstance(pt, ChartPoint) else pt
        subs[var] = value if isinstance(value, MultiPoly) else to_q(value)
    try:
        value = form.subs(subs)
    except SingularAssignment as exc:
        return {"status": "singular", "form": form.to_str(), "reason": str(exc)}
    return {"status": "ok", "form": form.to_str(), "value": value, "value_str": value.to_str()}


class ComplexRational:
    """N(z) / prod (z - r)^m with Gaussian rational coefficients and poles."""

    def __init__(self, numerator: Sequence, poles: Mapping):
        self.num = [GaussQ.of(c) for c in numerator]
        self.poles = {GaussQ.of(r): int(m) for r, m in poles.items() if m}

    @classmethod
    def from_form(cls, rf: RationalForm, var: str | None = None) -> "ComplexRational":
        vs = rf.variables()
        if len(vs) > 1:
            raise FoliationError("characteristic integral needs a one-variable form")
        var = var or (next(iter(vs)) if vs else "z")
        scale = Q(1)
        poles: Dict = {}
        for f, m in rf.poles:
            c = f.coefficient(var)
            root = -f.const / c
            poles[GaussQ.of(root)] = poles.get(GaussQ.of(root), 0) + m
            scale /= c ** m
        coeffs = rf.num.coefficients_in(var)
        top = max(coeffs, default=0)
        num = [GaussQ.of(coeffs[i].const_value() * scale) if i in coeffs else GaussQ(0) for i in range(top + 1)]
        return cls(num, poles)

    def partial_fractions(self) -> Tuple[List[GaussQ], Dict[Tuple[GaussQ, int], GaussQ]]:
        den = [GaussQ(1)]
        for r, m in self.poles.items():
            for _ in range(m):
                den = _gmul(den, [-r, GaussQ(1)])
        quot, rem = _gdivmod(self.num, den)
        terms: Dict = {}
        for r, m in self.poles.items():
            # Taylor coefficients of rem / prod_{s != r} (z - s)^{m_s} at r
            series = _gshift(rem, r)[:m] + [GaussQ(0)] * max(0, m - len(rem))
            series = series[:m]
            for s, ms in self.poles.items():
                if s == r:
                    continue
                c = r - s
                inv = [GaussQ(binom(ms + i - 1, i) * (-1) ** i) / c ** (ms + i) for i in range(m)]
                series = _gmul(series, inv)[:m]
            for j in range(m):
                coef = series[j] if j < len(series) else GaussQ(0)
                if not coef.is_zero():
                    terms[(r, m - j)] = coef
        return quot, terms


def _gmul(a, b):
    out = [GaussQ(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _gdivmod(a, b):
    a = list(a)
    while a and a[-1].is_zero():
        a.pop()
    q = [GaussQ(0)] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        c = a[-1] / b[-1]
        shift = len(a) - len(b)
        q[shift] = c
        for i, y in enumerate(b):
            a[i + shift] = a[i + shift] - c * y
        a.pop()
        while a and a[-1].is_zero():
            a.pop()
    return q, a


def _gshift(p, r):
    """Coefficients of p(u + r) in u."""
    out = [GaussQ(0)] * len(p)
    for k, c in enumerate(p):
        for j in range(k + 1):
            out[j] = out[j] + c * binom(k, j) * r ** (k - j)
    return out


def _segment_distance2(p: GaussQ, q: GaussQ, r: GaussQ):
    d = q - p
    n = d.norm2()
    if n == 0:
        return (r - p).norm2()
    tau = ((r - p) * d.conj()).re / n
    tau = min(max(tau, Q(0)), Q(1))
    foot = p + d * GaussQ(tau)
    return (foot - r).norm2()


def characteristic_integral(R, path: Sequence, clearance=None) -> Dict:
    """Integral of a one-variable rational form along a polygon.

    Rational terms integrate exactly; logarithmic terms are tracked segment by
    segment with a continuous branch, so a closed loop contributes exactly
    2 pi i times its winding number around each simple pole."""
    if isinstance(R, RationalForm):
        R = ComplexRational.from_form(R)
    pts = [GaussQ.of(p) for p in path]
    if len(pts) < 2:
        raise FoliationError("path needs at least two vertices")
    clear2 = None if clearance is None else to_q(clearance) ** 2
    for p, q in zip(pts, pts[1:]):
        for r in R.poles:
            d2 = _segment_distance2(p, q, r)
            if d2 == 0 or (clear2 is not None and d2 < clear2):
                raise PathThroughPole(f"segment {p}->{q} passes within the clearance of pole {r}")
    quot, terms = R.partial_fractions()
    a, b = pts[0], pts[-1]
    exact = GaussQ(0)
    for k, c in enumerate(quot):
        exact = exact + c * (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    log_terms = []
    two_pi_i = GaussQ(0)
    numeric_log = 0j
    closed = a == b
    for (r, k), c in terms.items():
        if k >= 2:
            exact = exact + c * ((b - r) ** (1 - k) - (a - r) ** (1 - k)) / (1 - k)
            continue
        arg = 0.0
        for p, q in zip(pts, pts[1:]):
            w = ((q - r) / (p - r)).to_complex()
            arg += math.atan2(w.imag, w.real)
        modulus = math.log(abs((b - r).to_complex())) - math.log(abs((a - r).to_complex()))
        winding = round(arg / (2 * math.pi)) if closed else None
        if closed:
            two_pi_i = two_pi_i + c * winding
        log_terms.append({"pole": (str(r.re), str(r.im)), "coefficient": (str(c.re), str(c.im)),
                          "winding": winding, "arg_change": arg})
        numeric_log += c.to_complex() * complex(modulus, arg)
    value = exact.to_complex() + numeric_log
    # floating error: a few ulps per atan2/log evaluation, scaled by coefficients
    bound = sum(abs(GaussQ.of(c).to_complex()) for (_, k), c in terms.items() if k == 1) * (len(pts) + 2) * 1e-14
    out = {"value": value, "exact_rational": (str(exact.re), str(exact.im)), "log_terms": log_terms,
           "error_bound": bound + 1e-15 * abs(value), "closed": closed}
    if closed:
        out["two_pi_i_coefficient"] = (str(two_pi_i.re), str(two_pi_i.im))
    return out


# ----------------------------------------------------------------- bridge
def leaf_coordinate(model: FoliationModel, hs: Sequence[HolonomyEmbedding], t: MultiPoly) -> MultiPoly:
    """Coordinate of the point reached from t on U_0 after transport along hs:
    lifted transverse coordinate on the torus, leaf height on the cylinder,
    accumulated turns along the circular leaves of the annulus."""
    if model.kind == "torus":
        return t + MultiPoly.const(sum(h.winding for h in hs) * _numeric_step(model))
    if model.kind == "cylinder":
        target = hs[-1].target if hs else None
        return MultiPoly.const(model.sections[target].chart[0]) if target is not None else t
    return t + MultiPoly.const(sum(h.winding for h in hs))


def cm_bridge(phi: Cochain, model: FoliationModel, input_keys: Sequence, dual_key, bound: int = 1,
              coboundary: Callable | None = None, l: int | None = None) -> Dict:
    """Characteristic forms of Phi as a Cech cochain of degree k = arity.

    The entry on (U_0; h_1..h_k) is <w', Phi(v_1, x_1; ..; v_k, x_k)> with
    x_i the coordinate reached after h_1..h_i.  On every (k+1)-chain the Cech
    coboundary of this image is compared with the image of the vertex-algebra
    coboundary; agreement and residuals are reported, not asserted."""
    k = phi.arity
    keys = list(input_keys)
    if len(keys) < k + 1:
        raise FoliationError("need k + 1 input states to compare both routes")
    if l is not None and sum(phi.mod.weight(v) for v in keys[:k]) != l:
        raise FoliationError("degree mismatch: input weights do not add up to the form degree")
    t = MultiPoly.var("t")
    delta_phi = coboundary(phi) if coboundary is not None else None

    def image(psi, ks, hs, base):
        f = psi.entry(tuple(ks), dual_key)
        xs = [leaf_coordinate(model, hs[: i + 1], base) for i in range(len(ks))]
        return f.subs(dict(zip(zvars(len(ks)), xs)))

    records = []
    for ch in chains(model, k + 1, bound):
        src, hs = ch
        try:
            cech = RationalForm.zero()
            for i in range(k + 2):
                sign = -1 if i % 2 else 1
                if i == 0:
                    # pull back along h_1: evaluate the face at the image of t
                    val = image(phi, keys[:k], hs[1:], leaf_coordinate(model, hs[:1], t))
                elif i == k + 1:
                    val = image(phi, keys[:k], hs[:k], t)
                else:
                    merged = model.compose(hs[i - 1], hs[i])
                    val = image(phi, keys[:k], hs[: i - 1] + (merged,) + hs[i + 1:], t)
                cech = cech + val.scale(sign)
        except SingularAssignment:
            cech = None
        vertex = None
        if delta_phi is not None:
            try:
                vertex = image(delta_phi, keys[: k + 1], hs, t)
            except SingularAssignment:
                vertex = None
        residual = None if cech is None or vertex is None else cech - vertex
        records.append({"chain": _chain_str(ch), "cech": None if cech is None else cech.to_str(),
                        "vertex": None if vertex is None else vertex.to_str(),
                        "agree": residual is not None and residual.is_zero(),
                        "residual": None if residual is None else residual.to_str(),
                        "singular": cech is None or (delta_phi is not None and vertex is None)})
    return {"k": k, "entries": len(records), "agreeing": sum(r["agree"] for r in records),
            "cech_zero": sum(1 for r in records if r["cech"] == "0"), "records": records}


def _numeric_step(model):
    """Rotation step of one winding as a rational number when it is one."""
    a = model.slope
    if isinstance(a, QuadraticSurd):
        if a.is_irrational():
            raise FoliationError("irrational rotation has no rational coordinate")
        a = Q(a.a, a.c)
    return Q(a) / len(model.sections)
