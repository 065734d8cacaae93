"""Modules over a vertex algebra: the adjoint module, the intertwining
operator Y_WV(w, z)v = e^{z L(-1)} Y_W(v, -z) w, translation and the
intertwining property of L(-1)-compatible maps."""

from __future__ import annotations

from typing import Callable, Dict, List, Mapping

from .scalars import Q, ZERO, factorial
from .voa import VertexAlgebra, Vector, vec_accumulate, vec_add, vec_scale, vec_str


class VModule:
    """A module W over ``alg``; subclasses provide the module vertex map."""

    def __init__(self, alg: VertexAlgebra):
        self.alg = alg

    def weight(self, key) -> int:
        raise NotImplementedError

    def basis(self, weight: int) -> List:
        raise NotImplementedError

    def Y(self, v: Mapping, w: Mapping, max_weight: int) -> Vector:
        raise NotImplementedError

    def L(self, n: int, w: Mapping) -> Vector:
        raise NotImplementedError

    def L_minus1(self, w: Mapping) -> Vector:
        return self.L(-1, w)

    def basis_upto(self, cutoff: int) -> List:
        out = []
        for k in range(cutoff + 1):
            out.extend(self.basis(k))
        return out


class AdjointModule(VModule):
    """V as a module over itself: Y_W = Y_V and L_W(n) = L_V(n)."""

    def weight(self, key) -> int:
        return self.alg.weight(key)

    def basis(self, weight: int):
        return self.alg.basis(weight)

    def key_str(self, key) -> str:
        return self.alg.key_str(key)

    @property
    def vacuum(self):
        return self.alg.vacuum

    def Y(self, v, w, max_weight):
        return self.alg.Y(v, w, max_weight)

    def Y_basis(self, kv, kw, max_weight):
        return self.alg._Y_basis(kv, kw, max_weight)

    def L(self, n, w):
        if n == -1:
            return self.alg.L_minus1(w)
        if n == 0:
            return self.alg.L0(w)
        return self.alg.L(n, w)


def adjoint_module(alg: VertexAlgebra) -> AdjointModule:
    return AdjointModule(alg)


def _weights(mod, v: Mapping) -> set:
    return {mod.weight(k) for k in v}


def exp_translate(mod: VModule, x: Mapping, max_weight: int, sign=1) -> Vector:
    """e^{s z L(-1)} applied to a graded family whose z-exponent is implied by
    weight; returns components of weight <= max_weight."""
    out: Vector = {}
    cur = dict(x)
    k = 0
    while cur:
        vec_accumulate(out, {key: c for key, c in cur.items() if mod.weight(key) <= max_weight}, Q(1))
        k += 1
        cur = {key: c for key, c in cur.items() if mod.weight(key) + 1 <= max_weight}
        if not cur:
            break
        cur = vec_scale(mod.L_minus1(cur), Q(sign, k))
    return out


def intertwiner_apply(mod: VModule, w: Mapping, v: Mapping, max_weight: int) -> Vector:
    """Components of Y_WV(w, z)v = e^{z L_W(-1)} Y_W(v, -z) w up to weight
    ``max_weight``.  The component of weight k multiplies z^(k - wt w - wt v).
    """
    out: Vector = {}
    for kw, cw in w.items():
        for kv, cv in v.items():
            base = mod.weight(kw) + mod.weight(kv)
            inner = mod.Y({kv: 1}, {kw: 1}, max_weight)
            signed = {k: c * (-1 if (mod.weight(k) - base) % 2 else 1) for k, c in inner.items()}
            vec_accumulate(out, exp_translate(mod, signed, max_weight), cw * cv)
    return out


def _translation_coefficient(mod: VModule, ku, w: Mapping, k: int, top: int) -> Vector:
    """Coefficient of z'^k in e^{-z'L(-1)} Y(ku, z + z') e^{z'L(-1)} w."""
    wt_u = mod.weight(ku)
    right = {0: dict(w)}
    cur = dict(w)
    for c in range(1, k + 1):
        cur = vec_scale(mod.L_minus1(cur), Q(1, c))
        right[c] = cur
    total: Vector = {}
    for a in range(k + 1):
        for b in range(k - a + 1):
            x = right[k - a - b]
            for kx, cx in x.items():
                y = mod.Y({ku: 1}, {kx: 1}, top - a)
                # (1/b!) d^b/dz^b acts on z^e as binom(e, b) z^(e - b)
                dy: Vector = {}
                for key, coef in y.items():
                    e = mod.weight(key) - wt_u - mod.weight(kx)
                    fall = Q(1)
                    for i in range(b):
                        fall *= e - i
                    fall /= factorial(b)
                    if fall != 0:
                        dy[key] = coef * fall * cx
                for i in range(1, a + 1):
                    dy = vec_scale(mod.L_minus1(dy), Q(-1, i))
                vec_accumulate(total, dy, Q(1))
    return {key: c for key, c in total.items() if mod.weight(key) <= top}


def check_translation(mod: VModule, u: Mapping, order: int, cutoff: int) -> Dict:
    """Y_W(u, z) = e^{-z'L(-1)} Y_W(u, z + z') e^{z'L(-1)} as polynomials in
    z' through ``order``, on basis states of weight <= cutoff."""
    checked = 0
    for kw in mod.basis_upto(cutoff):
        w = {kw: Q(1)}
        for ku, cu in u.items():
            top = cutoff + mod.weight(ku) + 1
            for k in range(order + 1):
                checked += 1
                got = _translation_coefficient(mod, ku, w, k, top)
                expected = mod.Y({ku: 1}, w, top) if k == 0 else {}
                if got != expected:
                    return {
                        "status": "fail",
                        "checked": checked,
                        "witness": {"state": mod.key_str(kw), "order": k, "residual": vec_str(mod.alg, vec_add(got, expected, -1))},
                    }
    return {"status": "pass", "checked": checked}


def check_f_intertwine(mod: VModule, g: Callable[[Mapping], Vector], u: Mapping, cutoff: int) -> Dict:
    """g(Y_V(u, z)1) = Y_WV(g(u), z)1 through weight ``cutoff``; holds when g
    preserves weight and commutes with L(-1)."""
    alg = mod.alg
    one = {alg.vacuum: Q(1)}
    lhs = g(alg.Y(u, one, cutoff))
    lhs = {k: c for k, c in lhs.items() if mod.weight(k) <= cutoff}
    rhs = intertwiner_apply(mod, g(u), one, cutoff)
    if lhs == rhs:
        return {"status": "pass"}
    diff = vec_add(lhs, rhs, -1)
    low = min(mod.weight(k) for k in diff)
    wu = min(_weights(mod, u))
    return {
        "status": "fail",
        "witness": {"z_power": low - wu, "residual": vec_str(alg, {k: c for k, c in diff.items() if mod.weight(k) == low})},
    }
