"""Exact linear algebra over Q on sparse rows (dict column -> Q)."""

from __future__ import annotations

from typing import Dict, Hashable, List, Sequence, Tuple

from .scalars import Q, ZERO

Row = Dict[Hashable, Q]


def rref(rows: Sequence[Row]) -> Tuple[List[Row], List[Hashable]]:
    """Reduced row echelon form; returns (pivot rows, pivot columns)."""
    pivots: List[Hashable] = []
    basis: List[Row] = []
    for r in rows:
        r = {k: Q(v) for k, v in r.items() if v != 0}
        for p, b in zip(pivots, basis):
            c = r.get(p)
            if c:
                for k, v in b.items():
                    nv = r.get(k, ZERO) - c * v
                    if nv == 0:
                        r.pop(k, None)
                    else:
                        r[k] = nv
        if not r:
            continue
        p = min(r, key=_col_key)
        inv = 1 / r[p]
        r = {k: v * inv for k, v in r.items()}
        for i, b in enumerate(basis):
            c = b.get(p)
            if c:
                for k, v in r.items():
                    nv = b.get(k, ZERO) - c * v
                    if nv == 0:
                        b.pop(k, None)
                    else:
                        b[k] = nv
        pivots.append(p)
        basis.append(r)
    return basis, pivots


def _col_key(k):
    return (str(type(k)), repr(k))


def rank(rows: Sequence[Row]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Row], columns: Sequence[Hashable]) -> List[Row]:
    """Basis of {x : row . x = 0 for every row} over the given columns."""
    basis, pivots = rref(rows)
    pivset = set(pivots)
    free = [c for c in columns if c not in pivset]
    out = []
    for f in free:
        vec = {f: Q(1)}
        for p, b in zip(pivots, basis):
            c = b.get(f)
            if c:
                vec[p] = -c
        out.append(vec)
    return out


def solve(rows: Sequence[Row], rhs: Sequence, columns: Sequence[Hashable]):
    """One solution of rows . x = rhs, or None when inconsistent."""
    marker = ("__rhs__",)
    aug = []
    for r, b in zip(rows, rhs):
        a = dict(r)
        if b != 0:
            a[marker] = Q(b)
        aug.append(a)
    basis, pivots = rref_with_last(aug, marker)
    x = {c: ZERO for c in columns}
    for p, b in zip(pivots, basis):
        if p == marker:
            return None
        x[p] = b.get(marker, ZERO)
    return x


def rref_with_last(rows, last):
    """rref that never pivots on ``last`` unless a row has nothing else."""
    pivots, basis = [], []
    for r in rows:
        r = {k: Q(v) for k, v in r.items() if v != 0}
        for p, b in zip(pivots, basis):
            c = r.get(p)
            if c:
                for k, v in b.items():
                    nv = r.get(k, ZERO) - c * v
                    if nv == 0:
                        r.pop(k, None)
                    else:
                        r[k] = nv
        if not r:
            continue
        cand = [k for k in r if k != last]
        p = min(cand, key=_col_key) if cand else last
        inv = 1 / r[p]
        r = {k: v * inv for k, v in r.items()}
        for b in basis:
            c = b.get(p)
            if c:
                for k, v in r.items():
                    nv = b.get(k, ZERO) - c * v
                    if nv == 0:
                        b.pop(k, None)
                    else:
                        b[k] = nv
        pivots.append(p)
        basis.append(r)
    return basis, pivots
