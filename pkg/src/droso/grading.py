"""Weights, multidegrees, uniform tuples and depletion.

Generation-0 pivots get unit multidegrees ``e_i``; a child inherits
``Gr(ab) = p^S_a Gr(a) + (p^S_b - 1) Gr(b)``.  A pure Lie monomial
``t^α ∂_b^{p^l}`` has multidegree ``p^l Gr(b) - Σ α_c Gr(c)``, and the total
weight is the sum of the components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .deriv import Derivation, Key
from .dpring import DPRing, ExponentTuple, p_adic_norm
from .species import Specie


class NotUniform(ValueError):
    pass


class Grading:
    """Per-fly multidegrees for one ring (exact integers)."""

    def __init__(self, ring: DPRing):
        self.ring = ring
        self.k = ring.specie.k
        self._gr: dict[int, tuple[int, ...]] = {}

    def fly_multidegree(self, f: int) -> tuple[int, ...]:
        got = self._gr.get(f)
        if got is None:
            par = self.ring.specie.parents(f)
            if par is None:
                got = tuple(int(i == f) for i in range(self.k))
            else:
                a, b = par
                sa, sb = self.ring.pcap[a], self.ring.pcap[b] - 1
                ga, gb = self.fly_multidegree(a), self.fly_multidegree(b)
                got = tuple(sa * x + sb * y for x, y in zip(ga, gb))
            self._gr[f] = got
        return got

    def fly_weight(self, f: int) -> int:
        return sum(self.fly_multidegree(f))

    def multidegree(self, key: Key) -> tuple[int, ...]:
        b, l, tail = key
        scale = self.ring.p ** l
        out = [scale * x for x in self.fly_multidegree(b)]
        for c, e in tail:
            for i, x in enumerate(self.fly_multidegree(c)):
                out[i] -= e * x
        return tuple(out)

    def weight(self, key: Key) -> int:
        return sum(self.multidegree(key))

    def multidegrees(self, w: Derivation) -> set[tuple[int, ...]]:
        return {self.multidegree(k) for k in w.terms}

    def is_homogeneous(self, w: Derivation, expected: tuple[int, ...] | None = None) -> bool:
        degs = self.multidegrees(w)
        if not degs:
            return True
        if len(degs) != 1:
            return False
        return expected is None or degs == {tuple(expected)}


def monomial_weight(ring: DPRing, key: Key) -> int:
    return Grading(ring).weight(key)


def multidegree(ring: DPRing, key: Key) -> tuple[int, ...]:
    return Grading(ring).multidegree(key)


# --------------------------------------------------------------------------
# uniform tuples


@dataclass
class Uniformity:
    uniform: bool
    per_generation: list[tuple[int, int]]  # (S_n, R_n); S_n is the cap of the first fly
    splits: list[tuple[list[int], list[int]]]  # (flies with S_n, flies with R_n)
    reason: str = ""

    def __bool__(self) -> bool:
        return self.uniform


def is_uniform(specie: Specie, caps: ExponentTuple) -> Uniformity:
    depth = min(specie.depth, caps.depth)
    pairs, splits = [], []
    for n in range(depth + 1):
        flies = list(specie.generation(n))
        row = [int(c) for c in caps.generation_caps(n)]
        values = sorted(set(row))
        if len(values) > 2:
            return Uniformity(False, pairs, splits, f"generation {n} has caps {values}")
        s = row[0]
        r = next((c for c in row if c != s), s)
        top = [f for f, c in zip(flies, row) if c == s]
        rest = [f for f, c in zip(flies, row) if c != s]
        pairs.append((s, r))
        splits.append((top, rest))
        if s != r and n < specie.depth:
            topset = set(top)
            for ch in specie.generation(n + 1):
                fa, mo = specie.parents(ch)
                if (fa in topset) == (mo in topset):
                    return Uniformity(False, pairs, splits,
                                      f"{specie.text(ch)} does not pair across the split of generation {n}")
    return Uniformity(True, pairs, splits)


def generation_weight(specie: Specie, caps: ExponentTuple, p: int, n: int) -> int:
    """Π_{m<n} (p^S_m + p^R_m - 1) for a uniform tuple."""
    info = is_uniform(specie, caps)
    if not info:
        raise NotUniform(info.reason)
    if n > len(info.per_generation):
        raise NotUniform(f"tuple known only through generation {len(info.per_generation) - 1}")
    return generation_weight_from_pairs(info.per_generation[:n], p)


def generation_weight_from_pairs(pairs: Sequence[tuple[int, int]], p: int) -> int:
    out = 1
    for s, r in pairs:
        out *= p ** s + p ** r - 1
    return out


def weight_lower_bound_holds(pairs: Sequence[tuple[int, int]], p: int) -> bool:
    """wt(Θ_n) > p^{Σ (S_m + R_m) / 2}, compared exactly by squaring."""
    wt = generation_weight_from_pairs(pairs, p)
    total = sum(s + r for s, r in pairs)
    return wt * wt > p ** total


def est34_holds(p: int, s: int, r: int) -> bool:
    """p^s + p^r - 1 <= (3/4) p^{s+r}."""
    return 4 * (p ** s + p ** r - 1) <= 3 * p ** (s + r)


# --------------------------------------------------------------------------
# depletion


def variable_depletion(ring: DPRing, c: int, exponent: int) -> int:
    """S_c (p-1) - |ξ_c|_p."""
    return ring.caps[c] * (ring.p - 1) - p_adic_norm(exponent, ring.p)


def term_depletion(ring: DPRing, key: Key) -> int:
    """(p-1) l plus the variable depletions over paternal-by-one ancestors of the target."""
    b, l, tail = key
    exps = dict(tail)
    total = (ring.p - 1) * l
    for pair in ring.specie.pbo_ancestors(b):
        for c in pair:
            total += variable_depletion(ring, c, exps.get(c, 0))
    return total


def depletion(w: Derivation) -> int:
    """Largest term depletion (0 for the zero derivation)."""
    return max((term_depletion(w.ring, k) for k in w.terms), default=0)


def partial_depletion(ring: DPRing, d: int, m: int = 0) -> int:
    """depl(∂_d^{p^m}) = (p-1)(m + Σ_{c ⊢ d} S_c)."""
    return (ring.p - 1) * (m + sum(ring.caps[c] for pair in ring.specie.pbo_ancestors(d) for c in pair))


def nillity_generation_bound(C: int, p: int) -> int:
    """floor(C log_{4/3} p / (p - 1))."""
    return math.floor(C * math.log(p) / math.log(4 / 3) / (p - 1))
