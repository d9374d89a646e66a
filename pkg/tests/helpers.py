"""Shared builders and random generators for the test suite."""

from __future__ import annotations

import random
from functools import lru_cache

from hypothesis import strategies as st

from droso.deriv import Derivation
from droso.dpring import DPRing, ExponentTuple
from droso.species import Clover, Specie, Wild, new_specie


@lru_cache(maxsize=None)
def specie(kind: str, generations: int, k: int = 3) -> Specie:
    sp = new_specie(k)
    rule = Clover() if kind == "clover" else Wild()
    for _ in range(generations):
        sp.extend(rule)
    return sp


@lru_cache(maxsize=None)
def ring(kind: str, p: int, depth: int, k: int = 3) -> DPRing:
    sp = specie(kind, depth, k)
    return DPRing(sp, ExponentTuple.trivial(sp, depth), p, depth)


def random_key(rng: random.Random, r: DPRing, depth: int, max_tail: int | None = None):
    """A random ancestral pure Lie monomial key (target, power, tail)."""
    n = r.specie.num_flies(depth)
    b = rng.randrange(n)
    l = rng.randrange(r.caps[b])
    anc = sorted(r.specie.ancestors(b))
    rng.shuffle(anc)
    if max_tail is not None:
        anc = anc[:max_tail]
    tail = []
    for c in anc:
        if rng.random() < 0.6:
            e = rng.randrange(1, r.pcap[c])
            tail.append((c, e))
    return b, l, tuple(sorted(tail))


def random_derivation(rng: random.Random, r: DPRing, depth: int, terms: int = 3,
                      max_tail: int | None = None) -> Derivation:
    out = {}
    for _ in range(terms):
        key = random_key(rng, r, depth, max_tail)
        out[key] = (out.get(key, 0) + rng.randrange(1, r.p)) % r.p
    return Derivation(r, depth, {k: c for k, c in out.items() if c}, check=True)


def derivations(r: DPRing, depth: int, terms: int = 3, max_tail: int | None = None):
    """Hypothesis strategy: random ancestral derivations driven by a drawn seed."""
    return st.integers(0, 2 ** 32 - 1).map(
        lambda seed: random_derivation(random.Random(seed), r, depth, terms, max_tail))
