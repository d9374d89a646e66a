"""Special derivations of a divided power ring, truncated at a depth.

A derivation is a finite sum of pure Lie monomials ``c · t^α ∂_b^{p^l}``,
stored as ``{(b, l, α): c}``.  Because fly handles are ordered by generation,
sorting keys orders terms by (target generation, target, power, tail).

Truncating at depth D (dropping targets deeper than D) is a homomorphism of
restricted Lie algebras, so every identity checked here on truncations holds
for the images of the untruncated elements.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .dpring import DPRing, Monomial, RingElement, RingError, lower

Key = tuple  # (target, power, tail)


class DerivationError(ValueError):
    pass


class Derivation:
    """Immutable finite sum of pure Lie monomials at a fixed depth."""

    __slots__ = ("ring", "depth", "terms", "_index", "_sorted")

    def __init__(self, ring: DPRing, depth: int, terms: Mapping[Key, int] | None = None,
                 check: bool = False):
        if depth > ring.depth:
            raise DerivationError(f"depth {depth} exceeds ring depth {ring.depth}")
        self.ring = ring
        self.depth = depth
        p = ring.p
        self.terms = {k: c % p for k, c in (terms or {}).items() if c % p}
        self._index = None
        self._sorted = None
        if check:
            self.validate()

    @classmethod
    def _raw(cls, ring: DPRing, depth: int, terms: dict) -> "Derivation":
        # terms already reduced mod p with no zeros
        obj = cls.__new__(cls)
        obj.ring, obj.depth, obj.terms = ring, depth, terms
        obj._index = None
        obj._sorted = None
        return obj

    @classmethod
    def zero(cls, ring: DPRing, depth: int) -> "Derivation":
        return cls._raw(ring, depth, {})

    @classmethod
    def partial(cls, ring: DPRing, depth: int, b: int, l: int = 0,
                tail: Mapping[int, int] | Monomial = (), coeff: int = 1) -> "Derivation":
        """The single term ``coeff · t^tail ∂_b^{p^l}``."""
        tail = ring.mono(tail)
        return cls(ring, depth, {(b, l, tail): coeff}, check=True)

    def validate(self) -> None:
        ring, sp_ = self.ring, self.ring.specie
        for (b, l, tail), c in self.terms.items():
            if not 0 <= b < ring.num_flies or ring.gen[b] > self.depth:
                raise DerivationError(f"target {b} outside depth {self.depth}")
            if not 0 <= l < ring.caps[b]:
                raise DerivationError(f"power p^{l} vanishes on {sp_.text(b)}")
            anc = sp_.ancestors(b)
            for f, e in tail:
                if f not in anc:
                    raise DerivationError(
                        f"t[{sp_.text(f)}] is not a proper ancestor of {sp_.text(b)}")
                if not 0 < e < ring.pcap[f]:
                    raise DerivationError(f"exponent {e} out of range for {sp_.text(f)}")

    def is_ancestral(self) -> bool:
        try:
            self.validate()
        except DerivationError:
            return False
        return True

    # ---- linear structure ---------------------------------------------------

    def _same(self, other: "Derivation") -> None:
        if other.ring is not self.ring:
            raise DerivationError("derivations over different rings")
        if other.depth != self.depth:
            raise DerivationError(f"depth mismatch {self.depth} != {other.depth}")

    def __add__(self, other: "Derivation") -> "Derivation":
        self._same(other)
        p = self.ring.p
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = (out.get(k, 0) + c) % p
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return Derivation._raw(self.ring, self.depth, out)

    def __neg__(self) -> "Derivation":
        p = self.ring.p
        return Derivation._raw(self.ring, self.depth, {k: p - c for k, c in self.terms.items()})

    def __sub__(self, other: "Derivation") -> "Derivation":
        return self + (-other)

    def scale(self, s: int) -> "Derivation":
        s %= self.ring.p
        if not s:
            return Derivation.zero(self.ring, self.depth)
        p = self.ring.p
        return Derivation._raw(self.ring, self.depth, {k: c * s % p for k, c in self.terms.items()})

    def __rmul__(self, s: int) -> "Derivation":
        return self.scale(s)

    def times(self, r: RingElement | Monomial) -> "Derivation":
        """Multiply every coefficient by the ring element ``r`` (left module action)."""
        ring, p = self.ring, self.ring.p
        rterms = r.terms if isinstance(r, RingElement) else {r: 1}
        out: dict = {}
        mul = ring.mono_mul
        for (b, l, tail), c in self.terms.items():
            for m, cm in rterms.items():
                got = mul(m, tail)
                if got is None:
                    continue
                key = (b, l, got[1])
                out[key] = (out.get(key, 0) + c * cm * got[0]) % p
        return Derivation._raw(ring, self.depth, {k: c for k, c in out.items() if c})

    def __eq__(self, other) -> bool:
        return (isinstance(other, Derivation) and other.ring is self.ring
                and other.depth == self.depth and other.terms == self.terms)

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def sorted_terms(self) -> list[tuple[Key, int]]:
        if self._sorted is None:
            self._sorted = sorted(self.terms.items())
        return self._sorted

    def targets(self) -> set[int]:
        return {b for b, _, _ in self.terms}

    def tail_index(self) -> dict[int, list]:
        """fly -> terms whose tail contains that fly (cached)."""
        if self._index is None:
            idx: dict[int, list] = {}
            for (b, l, tail), c in self.terms.items():
                for f, _ in tail:
                    idx.setdefault(f, []).append((b, l, tail, c))
            self._index = idx
        return self._index

    def restrict(self, depth: int) -> "Derivation":
        return restrict(self, depth)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return "\n".join(format_term(self.ring, k, c) for k, c in self.sorted_terms())

    def __repr__(self) -> str:
        return f"<Derivation depth={self.depth} terms={len(self.terms)}>"


def format_term(ring: DPRing, key: Key, c: int) -> str:
    b, l, tail = key
    coeff = "" if c == 1 else f"{c}*"
    head = "" if not tail else ring.mono_text(tail) + "*"
    return f"+ {coeff}{head}D[{ring.specie.text(b)}]^({ring.p}^{l})"


# --------------------------------------------------------------------------
# action, bracket, p-th power


def act(w: Derivation, r: RingElement) -> RingElement:
    """Apply ``w`` to a ring element supported on generations <= depth."""
    ring = w.ring
    if r.ring is not ring:
        raise DerivationError("ring element from a different ring")
    for m in r.terms:
        for f, _ in m:
            if ring.gen[f] > w.depth:
                raise DerivationError(f"{ring.specie.text(f)} lies below depth {w.depth}")
    p = ring.p
    out: dict = {}
    for (b, l, tail), c in w.terms.items():
        step = p ** l
        for m, cm in r.terms.items():
            low = lower(m, b, step)
            if low is None:
                continue
            got = ring.mono_mul(tail, low)
            if got is None:
                continue
            out[got[1]] = (out.get(got[1], 0) + c * cm * got[0]) % p
    return RingElement(ring, out)


def _half(u: Derivation, v: Derivation, sign: int, out: dict) -> None:
    """Accumulate ``sign · Σ t^α ∂_b^{p^l}(t^β) ∂_c^{p^l'}`` over u-terms and v-terms."""
    idx = v.tail_index()
    if not idx:
        return
    ring = u.ring
    p = ring.p
    mul = ring.mono_mul
    for (b, l, alpha), cu in u.terms.items():
        lst = idx.get(b)
        if not lst:
            continue
        step = p ** l
        cu = cu * sign
        for c, l2, beta, cv in lst:
            low = lower(beta, b, step)
            if low is None:
                continue
            got = mul(alpha, low)
            if got is None:
                continue
            key = (c, l2, got[1])
            out[key] = (out.get(key, 0) + cu * cv * got[0]) % p


def bracket(u: Derivation, v: Derivation) -> Derivation:
    """Lie bracket ``[u, v]``."""
    u._same(v)
    out: dict = {}
    _half(u, v, 1, out)
    _half(v, u, -1, out)
    return Derivation._raw(u.ring, u.depth, {k: c for k, c in out.items() if c})


def ad_power(x: Derivation, k: int, y: Derivation) -> Derivation:
    """``ad(x)^k (y)``."""
    for _ in range(k):
        if not y.terms:
            break
        y = bracket(x, y)
    return y


def _power_single(ring: DPRing, depth: int, key: Key, c: int) -> Derivation:
    b, l, tail = key
    if tail or l + 1 >= ring.caps[b]:
        return Derivation.zero(ring, depth)
    # (c ∂)^p = c^p ∂^p = c ∂^p by Fermat
    return Derivation._raw(ring, depth, {(b, l + 1, ()): c})


def jacobson_corrections(x: Derivation, y: Derivation) -> Derivation:
    """Σ_{i=1}^{p-1} s_i(x, y), where i·s_i is the t^{i-1} coefficient of ad(tx+y)^{p-1}(x)."""
    ring = x.ring
    p = ring.p
    zero = Derivation.zero(ring, x.depth)
    poly = [x]
    for _ in range(p - 1):
        nxt = [zero] * (len(poly) + 1)
        for k, cf in enumerate(poly):
            if not cf.terms:
                continue
            nxt[k] = nxt[k] + bracket(y, cf)
            nxt[k + 1] = nxt[k + 1] + bracket(x, cf)
        poly = nxt
    total = zero
    for i in range(1, p):
        if i - 1 < len(poly) and poly[i - 1].terms:
            total = total + poly[i - 1].scale(pow(i, -1, p))
    return total


def p_power(u: Derivation) -> Derivation:
    """Restricted p-th power, splitting the sum in halves recursively."""
    return _p_power_items(u.ring, u.depth, u.sorted_terms())


def _p_power_items(ring: DPRing, depth: int, items: Sequence) -> Derivation:
    if not items:
        return Derivation.zero(ring, depth)
    if len(items) == 1:
        return _power_single(ring, depth, *items[0])
    mid = len(items) // 2
    left, right = items[:mid], items[mid:]
    x = Derivation._raw(ring, depth, dict(left))
    y = Derivation._raw(ring, depth, dict(right))
    return (_p_power_items(ring, depth, left) + _p_power_items(ring, depth, right)
            + jacobson_corrections(x, y))


def p_power_iter(u: Derivation, m: int) -> Derivation:
    """``u^{[p^m]}``."""
    for _ in range(m):
        if not u.terms:
            break
        u = p_power(u)
    return u


def restrict(u: Derivation, depth: int) -> Derivation:
    """Drop terms whose target lies below generation ``depth``."""
    if depth < 0:
        raise DerivationError("negative depth")
    if depth > u.depth:
        raise DerivationError(f"cannot restrict depth {u.depth} to deeper {depth}")
    gen = u.ring.gen
    return Derivation._raw(u.ring, depth,
                           {k: c for k, c in u.terms.items() if gen[k[0]] <= depth})


# --------------------------------------------------------------------------
# operator matrices (brute-force oracle)


class BasisTooLarge(MemoryError):
    pass


class OperatorRepresentation:
    """Action of depth-D derivations on rings of ancestor-closed fly sets.

    With ``blocks=None`` the single block is every fly of generations 0..D.
    Otherwise one block per leaf fly (its ancestor closure); the direct sum of
    these actions is faithful on depth-D derivations and stays small when the
    full ring would not.
    """

    def __init__(self, ring: DPRing, depth: int, blocks: Sequence[Sequence[int]] | None = None,
                 limit: int = 1 << 17):
        self.ring = ring
        self.depth = depth
        specie = ring.specie
        if blocks is None:
            blocks = [list(range(specie.num_flies(depth)))]
        self.blocks = [sorted(b) for b in blocks]
        self.bases = []
        self.positions = []
        for flies in self.blocks:
            size = 1
            for f in flies:
                size *= ring.pcap[f]
            if size > limit:
                raise BasisTooLarge(f"ring basis of size {size} exceeds limit {limit}")
            basis = ring.basis(flies)
            self.bases.append(basis)
            self.positions.append({m: i for i, m in enumerate(basis)})
        self.flysets = [set(b) for b in self.blocks]

    @classmethod
    def by_leaves(cls, ring: DPRing, depth: int, limit: int = 1 << 17) -> "OperatorRepresentation":
        specie = ring.specie
        blocks = [specie.closure([f]) for f in specie.leaves(depth)]
        return cls(ring, depth, blocks, limit)

    def matrices(self, u: Derivation) -> list[sp.csr_matrix]:
        if u.depth != self.depth:
            raise DerivationError("depth mismatch with representation")
        ring, p = self.ring, self.ring.p
        out = []
        for flies, basis, pos in zip(self.flysets, self.bases, self.positions):
            rows, cols, vals = [], [], []
            terms = [(k, c) for k, c in u.terms.items() if k[0] in flies]
            for j, m in enumerate(basis):
                col: dict = {}
                for (b, l, tail), c in terms:
                    low = lower(m, b, p ** l)
                    if low is None:
                        continue
                    got = ring.mono_mul(tail, low)
                    if got is None:
                        continue
                    i = pos[got[1]]
                    col[i] = (col.get(i, 0) + c * got[0]) % p
                for i, v in col.items():
                    if v:
                        rows.append(i)
                        cols.append(j)
                        vals.append(v)
            n = len(basis)
            out.append(sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=(n, n)))
        return out

    def reduce(self, mats: Iterable[sp.csr_matrix]) -> list[sp.csr_matrix]:
        p = self.ring.p
        out = []
        for m in mats:
            m = m.tocsr().copy()
            m.data %= p
            m.eliminate_zeros()
            out.append(m)
        return out

    def commutator(self, a: list, b: list) -> list:
        return self.reduce(x @ y - y @ x for x, y in zip(a, b))

    def power(self, a: list, k: int) -> list:
        out = []
        for x in a:
            acc = x
            for _ in range(k - 1):
                acc = self.reduce([acc @ x])[0]
            out.append(acc)
        return self.reduce(out)

    @staticmethod
    def equal(a: list, b: list) -> bool:
        return all((x != y).nnz == 0 for x, y in zip(a, b))


def operator_matrix(u: Derivation, depth: int | None = None, limit: int = 1 << 17) -> sp.csr_matrix:
    """Matrix of ``u`` on the full monomial basis of generations 0..depth."""
    depth = u.depth if depth is None else depth
    if depth != u.depth:
        u = restrict(u, depth)
    return OperatorRepresentation(u.ring, depth, limit=limit).matrices(u)[0]
