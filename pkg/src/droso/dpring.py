"""Divided power truncated rings over a prime field.

The ring R(Θ, S) has basis ``Π t_a^(i_a)`` with ``0 <= i_a < p^S_a``.  Products
follow ``t^(i) t^(j) = C(i+j, i) t^(i+j)``; by Lucas' rule the binomial vanishes
mod p exactly when adding ``i`` and ``j`` in base p carries, which also kills
every product that would exceed the cap.

A monomial is a sorted tuple of ``(fly, exponent)`` pairs with positive
exponents; the empty tuple is the unit.  Scalars are plain ints in ``[0, p)``.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .species import Specie

Monomial = tuple  # tuple[tuple[int, int], ...]
UNIT: Monomial = ()


class RingError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


class PrimeField:
    """Arithmetic mod a prime ``p`` (residues are ints in ``[0, p)``)."""

    def __init__(self, p: int):
        if not isinstance(p, (int, np.integer)) or not is_prime(int(p)):
            raise RingError(f"{p!r} is not a prime")
        if p >= 2 ** 31:
            raise RingError("prime too large")
        self.p = int(p)

    def __repr__(self) -> str:
        return f"PrimeField({self.p})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(self.p)

    def __call__(self, x: int) -> int:
        return int(x) % self.p

    def add(self, x: int, y: int) -> int:
        return (x + y) % self.p

    def sub(self, x: int, y: int) -> int:
        return (x - y) % self.p

    def mul(self, x: int, y: int) -> int:
        return x * y % self.p

    def neg(self, x: int) -> int:
        return -x % self.p

    def inv(self, x: int) -> int:
        if x % self.p == 0:
            raise ZeroDivisionError("zero has no inverse")
        return pow(x, -1, self.p)

    def div(self, x: int, y: int) -> int:
        return x * self.inv(y) % self.p


def digits(x: int, p: int) -> list[int]:
    """Base-p digits of ``x``, least significant first."""
    out = []
    while x:
        x, d = divmod(x, p)
        out.append(d)
    return out


def p_adic_norm(x: int, p: int) -> int:
    """Digit sum of ``x`` in base p."""
    if x < 0:
        raise ValueError("negative argument")
    return sum(digits(x, p))


def _small_binom(m: int, n: int) -> int:
    if n < 0 or n > m:
        return 0
    out = 1
    for i in range(n):
        out = out * (m - i) // (i + 1)
    return out


def lucas_binomial(m: int, n: int, p: int) -> int:
    """C(m, n) mod p as a product of digitwise binomials."""
    if n < 0 or m < 0 or n > m:
        return 0
    out = 1
    while n:
        m, mk = divmod(m, p)
        n, nk = divmod(n, p)
        if nk > mk:
            return 0
        out = out * _small_binom(mk, nk) % p
    return out


class ExponentTuple:
    """Cap exponents ``S_a >= 1`` for every fly up to some generation."""

    def __init__(self, specie: Specie, caps: Sequence[Sequence[int]]):
        self.specie = specie
        arrays = []
        for n, row in enumerate(caps):
            arr = np.asarray(row, dtype=np.int64)
            if arr.shape != (specie.size(n),):
                raise RingError(f"generation {n}: expected {specie.size(n)} caps, got {arr.shape}")
            if arr.size and arr.min() < 1:
                raise RingError(f"generation {n}: caps must be >= 1")
            arrays.append(arr)
        self._caps = arrays

    @property
    def depth(self) -> int:
        return len(self._caps) - 1

    def cap(self, f: int) -> int:
        n = self.specie.gen_of(f)
        if n > self.depth:
            raise RingError(f"no cap recorded for generation {n}")
        return int(self._caps[n][self.specie.local(f)])

    def generation_caps(self, n: int) -> np.ndarray:
        if n > self.depth:
            raise RingError(f"no caps recorded for generation {n}")
        return self._caps[n]

    def __eq__(self, other) -> bool:
        return (isinstance(other, ExponentTuple) and other.specie is self.specie
                and len(other._caps) == len(self._caps)
                and all(np.array_equal(a, b) for a, b in zip(self._caps, other._caps)))

    @classmethod
    def trivial(cls, specie: Specie, depth: int | None = None) -> "ExponentTuple":
        depth = specie.depth if depth is None else depth
        return cls(specie, [np.ones(specie.size(n), dtype=np.int64) for n in range(depth + 1)])

    @classmethod
    def uniform(cls, specie: Specie, per_generation: Sequence[tuple[int, int]],
                splits: Mapping[int, Iterable[int]] | None = None) -> "ExponentTuple":
        """Caps ``S_n`` on one part of each generation and ``R_n`` on the rest.

        On clover-labelled generations the ``a`` fly takes ``S_n``; elsewhere an
        explicit split (handles carrying ``S_n``) is required when ``S_n != R_n``.
        """
        splits = dict(splits or {})
        rows = []
        for n, (s, r) in enumerate(per_generation):
            if n > specie.depth:
                break
            size = specie.size(n)
            if s == r:
                rows.append(np.full(size, s, dtype=np.int64))
                continue
            if n in splits:
                top = {specie.local(f) for f in splits[n]}
            else:
                roles = specie._gens[n].roles
                if roles is None or len(roles) != 3:
                    raise RingError(f"generation {n}: S != R needs a split or clover labels")
                top = {roles[0]}
            rows.append(np.array([s if i in top else r for i in range(size)], dtype=np.int64))
        return cls(specie, rows)

    @classmethod
    def from_caps(cls, specie: Specie, caps: Mapping[int, int], default: int | None = None,
                  depth: int | None = None) -> "ExponentTuple":
        depth = specie.depth if depth is None else depth
        rows = []
        for n in range(depth + 1):
            row = []
            for f in specie.generation(n):
                if f in caps:
                    row.append(caps[f])
                elif default is not None:
                    row.append(default)
                else:
                    raise RingError(f"fly {specie.text(f)} has no cap")
            rows.append(row)
        return cls(specie, rows)

    def rooted_at(self, m: int, sub: Specie) -> "ExponentTuple":
        """The same caps on ``specie.rooted_at(m)``."""
        return ExponentTuple(sub, self._caps[m:m + sub.depth + 1])


class DPRing:
    """The divided power ring on flies of generations ``0..depth``."""

    def __init__(self, specie: Specie, caps: ExponentTuple | None, p: int,
                 depth: int | None = None):
        self.field = PrimeField(p)
        self.p = self.field.p
        self.specie = specie
        self.tuple = ExponentTuple.trivial(specie) if caps is None else caps
        if self.tuple.specie is not specie:
            raise RingError("tuple belongs to a different specie")
        self.depth = min(specie.depth, self.tuple.depth) if depth is None else depth
        if self.depth > specie.depth or self.depth > self.tuple.depth:
            raise RingError(f"depth {self.depth} exceeds the constructed generations")
        nfl = specie.num_flies(self.depth)
        self.gen = [n for n in range(self.depth + 1) for _ in range(specie.size(n))]
        self.caps = [int(c) for n in range(self.depth + 1) for c in self.tuple.generation_caps(n)]
        self.pcap = [self.p ** c for c in self.caps]
        self.num_flies = nfl
        self._binom: dict[tuple[int, int], int] = {}

    # ---- monomials ------------------------------------------------------

    def mono(self, exps: Mapping[int, int] | Iterable[tuple[int, int]] = ()) -> Monomial:
        """Canonical monomial from ``{fly: exponent}``; validates caps."""
        items = exps.items() if isinstance(exps, Mapping) else exps
        out = {}
        for f, e in items:
            f, e = int(f), int(e)
            if not 0 <= f < self.num_flies:
                raise RingError(f"fly {f} outside the ring (depth {self.depth})")
            if e < 0 or e >= self.pcap[f]:
                raise RingError(f"exponent {e} out of range for {self.specie.text(f)}")
            if e:
                out[f] = out.get(f, 0) + e
        return tuple(sorted(out.items()))

    def binom(self, i: int, j: int) -> int:
        """C(i + j, i) mod p, cached."""
        key = (i, j)
        c = self._binom.get(key)
        if c is None:
            c = lucas_binomial(i + j, i, self.p)
            self._binom[key] = c
        return c

    def mono_mul(self, a: Monomial, b: Monomial):
        """``(coefficient, monomial)`` or ``None`` when the product vanishes."""
        if not a:
            return 1, b
        if not b:
            return 1, a
        merged = dict(a)
        coef = 1
        binom = self._binom
        p = self.p
        for f, e in b:
            i = merged.get(f)
            if i is None:
                merged[f] = e
            else:
                c = binom.get((i, e))
                if c is None:
                    c = self.binom(i, e)
                if not c:
                    return None
                coef = coef * c % p
                merged[f] = i + e
        return coef, tuple(sorted(merged.items()))

    def apply_partial(self, b: int, l: int, a: Monomial):
        """``∂_b^{p^l}`` applied to ``t^a``: the lowered monomial or ``None``."""
        if not 0 <= l < self.caps[b]:
            raise RingError(f"∂^(p^{l}) vanishes identically on {self.specie.text(b)}")
        return lower(a, b, self.p ** l)

    def mono_norm(self, a: Monomial) -> int:
        return sum(p_adic_norm(e, self.p) for _, e in a)

    def mono_text(self, a: Monomial) -> str:
        if not a:
            return "1"
        return "*".join(f"t[{self.specie.text(f)}]^({e})" for f, e in a)

    def max_exp(self, f: int) -> int:
        return self.pcap[f] - 1

    def element(self, terms: Mapping[Monomial, int] | None = None) -> "RingElement":
        return RingElement(self, terms or {})

    def basis(self, flies: Sequence[int]) -> list[Monomial]:
        """All monomials in the given flies (lexicographic in exponents)."""
        flies = sorted(flies)
        out: list[Monomial] = [()]
        for f in reversed(flies):
            out = [((f, e),) + m if e else m for e in range(self.pcap[f]) for m in out]
        return out


def lower(a: Monomial, b: int, step: int):
    """Decrease the exponent of ``b`` in ``a`` by ``step`` (``None`` if too small)."""
    for i, (f, e) in enumerate(a):
        if f == b:
            if e < step:
                return None
            if e == step:
                return a[:i] + a[i + 1:]
            return a[:i] + ((f, e - step),) + a[i + 1:]
        if f > b:
            break
    return None


def mono_mul(ring: DPRing, a: Monomial, b: Monomial):
    return ring.mono_mul(a, b)


def apply_partial(ring: DPRing, b: int, l: int, a: Monomial):
    return ring.apply_partial(b, l, a)


def mono_norm(ring: DPRing, a: Monomial) -> int:
    return ring.mono_norm(a)


class RingElement:
    """Finite F_p-combination of monomials."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: DPRing, terms: Mapping[Monomial, int]):
        p = ring.p
        self.ring = ring
        self.terms = {m: c % p for m, c in terms.items() if c % p}

    @classmethod
    def monomial(cls, ring: DPRing, exps=(), coeff: int = 1) -> "RingElement":
        return cls(ring, {ring.mono(exps): coeff})

    def _check(self, other: "RingElement") -> None:
        if other.ring is not self.ring:
            raise RingError("elements of different rings")

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return RingElement(self.ring, out)

    def __neg__(self) -> "RingElement":
        return RingElement(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def scale(self, k: int) -> "RingElement":
        return RingElement(self.ring, {m: c * k for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        mul = self.ring.mono_mul
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                r = mul(a, b)
                if r is not None:
                    out[r[1]] = out.get(r[1], 0) + ca * cb * r[0]
        return RingElement(self.ring, out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, RingElement) and other.ring is self.ring and other.terms == self.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms):
            c = self.terms[m]
            parts.append(("" if c == 1 else f"{c}*") + self.ring.mono_text(m))
        return " + ".join(parts)

    __repr__ = __str__
