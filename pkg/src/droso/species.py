"""Species of fruit flies: binary words built generation by generation.

A specie starts from an alphabet of ``k`` letters (generation 0).  Every fly
of generation ``n + 1`` is the concatenation ``ab`` of two distinct flies of
generation ``n``; ``a`` is the father and ``b`` the mother.  Which pairs are
kept is decided by a selection rule (wild, duplex, clover, custom).

Flies are addressed by dense integer handles.  Handles are global across the
specie and ordered by ``(generation, word)``, so sorting handles sorts words.
Only parent links are stored; words are rebuilt on demand.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class SpecieError(ValueError):
    """Invalid construction request for a specie."""


class NeedsExtension(SpecieError):
    """A query reached past the last constructed generation."""


# --------------------------------------------------------------------------
# selection rules


@dataclass(frozen=True)
class Wild:
    """Keep every ordered pair of distinct flies."""

    name = "wild"


@dataclass(frozen=True)
class Duplex:
    """Two labelled flies a, b produce ab and ba."""

    name = "duplex"


@dataclass(frozen=True)
class Clover:
    """Three labelled flies a, b, c produce ab, ba, ca (labelled in that order).

    With ``relabel=True`` an unlabelled generation is first labelled by its
    lexicographically first three flies.
    """

    relabel: bool = False
    name = "clover"


@dataclass(frozen=True)
class Custom:
    """Explicit ordered parent pairs, as local indices into the current generation."""

    pairs: tuple[tuple[int, int], ...]
    name = "custom"

    def __init__(self, pairs: Iterable[Sequence[int]]):
        object.__setattr__(self, "pairs", tuple((int(f), int(m)) for f, m in pairs))


SelectionRule = Wild | Duplex | Clover | Custom


# --------------------------------------------------------------------------
# flies and species


@dataclass(frozen=True)
class Fly:
    id: int
    generation: int
    word: str
    father: int | None
    mother: int | None


@dataclass
class _Generation:
    fathers: np.ndarray  # local indices into the previous generation
    mothers: np.ndarray
    rule: str
    roles: tuple[int, ...] | None = None  # labelled flies (a, b[, c]) as local indices
    pair_index: dict | None = None  # lazily built (father, mother) -> local
    by_father: list | None = None  # lazily built father local -> child locals

    def __len__(self) -> int:
        return len(self.fathers)


class Specie:
    """A specie of flies built from ``k`` letters.

    ``min_generation_size`` defaults to 3; lowering it is only meant for
    exploring degenerate rules such as duplex.
    """

    def __init__(self, k: int | None = None, labels: Sequence[str] | None = None,
                 min_generation_size: int = 3):
        if labels is None:
            if k is None:
                raise SpecieError("either k or labels is required")
            labels = [str(i + 1) for i in range(k)]
        labels = [str(s) for s in labels]
        if len(set(labels)) != len(labels):
            raise SpecieError("letters must be distinct")
        if len(labels) < min_generation_size:
            raise SpecieError(f"need at least {min_generation_size} letters, got {len(labels)}")
        self.k = len(labels)
        self.labels = tuple(labels)
        self.min_generation_size = min_generation_size
        empty = np.zeros(self.k, dtype=np.int64)
        roles = tuple(range(3)) if self.k == 3 else None
        self._gens: list[_Generation] = [_Generation(empty, empty, "root", roles)]
        self._offsets: list[int] = [0, self.k]
        self._ancestors: dict[int, frozenset] = {}

    # ---- shape -----------------------------------------------------------

    @property
    def depth(self) -> int:
        """Index of the last constructed generation."""
        return len(self._gens) - 1

    @property
    def sizes(self) -> list[int]:
        return [len(g) for g in self._gens]

    @property
    def rules(self) -> list[str]:
        return [g.rule for g in self._gens]

    def size(self, n: int) -> int:
        self._need(n)
        return len(self._gens[n])

    def num_flies(self, depth: int | None = None) -> int:
        depth = self.depth if depth is None else depth
        self._need(depth)
        return self._offsets[depth + 1]

    def generation(self, n: int) -> range:
        """Handles of generation ``n`` in word order."""
        self._need(n)
        return range(self._offsets[n], self._offsets[n + 1])

    def roles(self, n: int) -> tuple[int, ...] | None:
        """Labelled flies (a, b, c) of generation ``n`` as handles, if any."""
        self._need(n)
        r = self._gens[n].roles
        return None if r is None else tuple(self._offsets[n] + i for i in r)

    def _need(self, n: int) -> None:
        if n < 0:
            raise SpecieError(f"negative generation {n}")
        if n > self.depth:
            raise NeedsExtension(f"generation {n} not constructed (depth {self.depth})")

    # ---- handles -----------------------------------------------------------

    def gen_of(self, f: int) -> int:
        if not 0 <= f < self._offsets[-1]:
            raise SpecieError(f"unknown fly handle {f}")
        lo, hi = 0, len(self._offsets) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._offsets[mid] <= f:
                lo = mid
            else:
                hi = mid
        return lo

    def local(self, f: int) -> int:
        return f - self._offsets[self.gen_of(f)]

    def handle(self, n: int, local: int) -> int:
        self._need(n)
        if not 0 <= local < len(self._gens[n]):
            raise SpecieError(f"generation {n} has no fly #{local}")
        return self._offsets[n] + local

    def parents(self, f: int) -> tuple[int, int] | None:
        n = self.gen_of(f)
        if n == 0:
            return None
        g = self._gens[n]
        i = f - self._offsets[n]
        base = self._offsets[n - 1]
        return base + int(g.fathers[i]), base + int(g.mothers[i])

    def father(self, f: int) -> int | None:
        par = self.parents(f)
        return None if par is None else par[0]

    def mother(self, f: int) -> int | None:
        par = self.parents(f)
        return None if par is None else par[1]

    def letters(self, f: int) -> tuple[int, ...]:
        """The word of ``f`` as a tuple of letter indices (length 2^gen)."""
        par = self.parents(f)
        if par is None:
            return (f,)
        return self.letters(par[0]) + self.letters(par[1])

    def text(self, f: int) -> str:
        """Parenthesized word, e.g. ``12`` or ``(12)(31)``."""
        par = self.parents(f)
        if par is None:
            return self.labels[f]
        a, b = (self.text(x) for x in par)
        wrap = lambda s: s if len(s) == 1 else f"({s})"
        return wrap(a) + wrap(b)

    def fly(self, f: int) -> Fly:
        par = self.parents(f)
        return Fly(f, self.gen_of(f), self.text(f),
                   None if par is None else par[0], None if par is None else par[1])

    def child(self, father: int, mother: int) -> int | None:
        """Handle of the fly ``father·mother`` if it was selected."""
        n = self.gen_of(father)
        if self.gen_of(mother) != n or n + 1 > self.depth:
            return None
        g = self._gens[n + 1]
        if g.pair_index is None:
            g.pair_index = dict(zip(zip(g.fathers.tolist(), g.mothers.tolist()), range(len(g))))
        i = g.pair_index.get((father - self._offsets[n], mother - self._offsets[n]))
        return None if i is None else self._offsets[n + 1] + i

    def children_by_father(self, f: int) -> list[int]:
        """Flies whose father is ``f``."""
        n = self.gen_of(f)
        if n + 1 > self.depth:
            return []
        g = self._gens[n + 1]
        if g.by_father is None:
            buckets: list[list[int]] = [[] for _ in range(len(self._gens[n]))]
            for i, fa in enumerate(g.fathers.tolist()):
                buckets[fa].append(i)
            g.by_father = buckets
        base = self._offsets[n + 1]
        return [base + i for i in g.by_father[f - self._offsets[n]]]

    def find(self, word: str | Sequence[int]) -> int:
        """Handle of a fly given its word (text with or without parentheses,
        or a sequence of letter handles)."""
        if isinstance(word, str):
            flat = word.replace("(", "").replace(")", "")
            if any(len(s) != 1 for s in self.labels):
                raise SpecieError("text lookup needs single-character letters")
            try:
                seq = [self.labels.index(ch) for ch in flat]
            except ValueError:
                raise SpecieError(f"unknown letter in {word!r}") from None
        else:
            seq = list(word)
        n = len(seq).bit_length() - 1
        if len(seq) == 0 or len(seq) != 1 << n:
            raise SpecieError(f"word length {len(seq)} is not a power of two")
        return self._find(tuple(seq), word)

    def _find(self, seq: tuple[int, ...], original) -> int:
        if len(seq) == 1:
            if not 0 <= seq[0] < self.k:
                raise SpecieError(f"unknown letter {seq[0]}")
            return seq[0]
        h = len(seq) // 2
        c = self.child(self._find(seq[:h], original), self._find(seq[h:], original))
        if c is None:
            raise SpecieError(f"{original!r} is not a fly of this specie")
        return c

    # ---- construction -------------------------------------------------------

    def extend(self, rule: SelectionRule) -> int:
        """Append the next generation produced by ``rule``; returns its index."""
        n = self.depth
        cur = self._gens[n]
        size = len(cur)
        roles = None
        if isinstance(rule, Wild):
            f, m = np.divmod(np.arange(size * size, dtype=np.int64), size)
            keep = f != m
            fathers, mothers = f[keep], m[keep]
        elif isinstance(rule, Clover):
            lab = cur.roles if cur.roles is not None and len(cur.roles) == 3 else None
            if lab is None:
                if not rule.relabel:
                    raise SpecieError("clover rule needs a generation with three labelled flies")
                if size < 3:
                    raise SpecieError("clover rule needs at least three flies")
                lab = (0, 1, 2)
            a, b, c = lab
            fathers = np.array([a, b, c], dtype=np.int64)
            mothers = np.array([b, a, a], dtype=np.int64)
            roles = (0, 1, 2)
        elif isinstance(rule, Duplex):
            lab = cur.roles[:2] if cur.roles is not None else (0, 1)
            if size < 2:
                raise SpecieError("duplex rule needs at least two flies")
            a, b = lab
            fathers = np.array([a, b], dtype=np.int64)
            mothers = np.array([b, a], dtype=np.int64)
            roles = (0, 1)
        elif isinstance(rule, Custom):
            seen = set()
            for f, m in rule.pairs:
                if not (0 <= f < size and 0 <= m < size):
                    raise SpecieError(f"pair ({f}, {m}) out of range for a generation of {size}")
                if f == m:
                    raise SpecieError(f"pair ({f}, {m}) repeats a fly")
                if (f, m) in seen:
                    raise SpecieError(f"duplicate pair ({f}, {m})")
                seen.add((f, m))
            fathers = np.array([f for f, _ in rule.pairs], dtype=np.int64)
            mothers = np.array([m for _, m in rule.pairs], dtype=np.int64)
        else:
            raise SpecieError(f"unknown selection rule {rule!r}")
        if len(fathers) < self.min_generation_size:
            raise SpecieError(
                f"generation {n + 1} would have {len(fathers)} flies "
                f"(minimum {self.min_generation_size})")
        # word order inside a generation equals (father, mother) order
        order = np.lexsort((mothers, fathers))
        if not np.all(order == np.arange(len(order))):
            inverse = np.empty_like(order)
            inverse[order] = np.arange(len(order))
            fathers, mothers = fathers[order], mothers[order]
            if roles is not None:
                roles = tuple(int(inverse[r]) for r in roles)
        self._gens.append(_Generation(fathers, mothers, rule.name, roles))
        self._offsets.append(self._offsets[-1] + len(fathers))
        return n + 1

    # ---- genealogy ------------------------------------------------------------

    def ancestors(self, d: int) -> frozenset:
        """Proper ancestors (binary subwords) of ``d``."""
        got = self._ancestors.get(d)
        if got is None:
            par = self.parents(d)
            if par is None:
                got = frozenset()
            else:
                got = frozenset(par) | self.ancestors(par[0]) | self.ancestors(par[1])
            self._ancestors[d] = got
        return got

    def is_ancestor(self, c: int, d: int) -> bool:
        """``c > d``: ``c`` is a proper binary subword of ``d``."""
        if self.gen_of(c) >= self.gen_of(d):
            return False
        return c in self.ancestors(d)

    def is_ancestor_or_self(self, c: int, d: int) -> bool:
        return c == d or self.is_ancestor(c, d)

    def _line(self, d: int, side: int, gen: int) -> int | None:
        while self.gen_of(d) > gen:
            d = self.parents(d)[side]
        return d

    def paternal(self, c: int, d: int) -> bool:
        """``c`` is a proper binary prefix of ``d``."""
        gc = self.gen_of(c)
        return gc < self.gen_of(d) and self._line(d, 0, gc) == c

    def maternal(self, c: int, d: int) -> bool:
        """``c`` is a proper binary suffix of ``d``."""
        gc = self.gen_of(c)
        return gc < self.gen_of(d) and self._line(d, 1, gc) == c

    def paternal_by_one(self, c: int, d: int) -> bool:
        """``c`` is a parent of ``d`` or of a paternal ancestor of ``d``."""
        gc = self.gen_of(c)
        if gc >= self.gen_of(d):
            return False
        return c in self.parents(self._line(d, 0, gc + 1))

    def pbo_ancestors(self, d: int) -> list[tuple[int, int]]:
        """The two paternal-by-one ancestors of ``d`` per generation, deepest first."""
        out = []
        cur = d
        while self.gen_of(cur) > 0:
            par = self.parents(cur)
            out.append(par)
            cur = par[0]
        return out

    def closure(self, flies: Iterable[int]) -> list[int]:
        """Smallest ancestor-closed set containing ``flies`` (sorted)."""
        out = set()
        for f in flies:
            out.add(f)
            out |= self.ancestors(f)
        return sorted(out)

    def leaves(self, depth: int) -> list[int]:
        """Flies of generations <= depth with no selected child within depth."""
        self._need(depth)
        out = list(self.generation(depth))
        for n in range(depth):
            g = self._gens[n + 1]
            used = set(g.fathers.tolist()) | set(g.mothers.tolist())
            out += [self._offsets[n] + i for i in range(len(self._gens[n])) if i not in used]
        return sorted(out)

    def rooted_at(self, m: int) -> "Specie":
        """A fresh specie whose letters are the flies of generation ``m``."""
        self._need(m)
        sub = Specie(labels=[self.text(f) for f in self.generation(m)],
                     min_generation_size=min(self.min_generation_size, self.size(m)))
        sub._gens[0].roles = self._gens[m].roles
        for g in self._gens[m + 1:]:
            sub._gens.append(_Generation(g.fathers, g.mothers, g.rule, g.roles))
            sub._offsets.append(sub._offsets[-1] + len(g))
        return sub

    def check(self) -> None:
        """Validate parent links (both parents present, distinct, no duplicates)."""
        for n in range(1, self.depth + 1):
            g = self._gens[n]
            prev = len(self._gens[n - 1])
            if np.any(g.fathers == g.mothers):
                raise SpecieError(f"generation {n} has a fly with equal parents")
            if np.any((g.fathers < 0) | (g.fathers >= prev) | (g.mothers < 0) | (g.mothers >= prev)):
                raise SpecieError(f"generation {n} references a missing parent")
            if len(set(zip(g.fathers.tolist(), g.mothers.tolist()))) != len(g):
                raise SpecieError(f"generation {n} repeats a fly")

    def __repr__(self) -> str:
        return f"Specie(k={self.k}, sizes={self.sizes})"


def new_specie(k: int) -> Specie:
    if k < 3:
        raise SpecieError(f"k must be at least 3, got {k}")
    return Specie(k)


# --------------------------------------------------------------------------
# combinatorial growth


def _floor_log2(n: int) -> int:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return n.bit_length() - 1


def groupoid_growth(specie, n: int) -> int:
    """1 + total number of flies in generations 0..floor(log2 n)."""
    m = _floor_log2(n)
    if isinstance(specie, Census):
        return specie.groupoid_growth_log2(m)
    sizes = specie.sizes
    if m >= len(sizes):
        raise NeedsExtension(f"groupoid growth at n={n} needs generation {m}")
    return 1 + sum(sizes[: m + 1])


def subexp_root(specie, n: int) -> float:
    """|Θ_n|^(1/2^n)."""
    size = specie.size(n)
    if n == 0:
        return float(size)
    return math.exp(math.log(size) / 2 ** n)


def sylow_coset_count(n: int) -> int:
    """(2^n)! / 2^(n(n-1)/2)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.factorial(2 ** n) // 2 ** (n * (n - 1) // 2)


def sylow_constraints(n: int) -> list[tuple[int, int]]:
    """Pairs (i, j) of 1-based positions with the requirement π(i) < π(j).

    Level l compares the first entries of consecutive blocks of length 2^l.
    """
    out = []
    for lev in range(n):
        step = 2 ** lev
        for j in range(0, 2 ** n, 2 * step):
            out.append((1 + j, 1 + j + step))
    return out


def sylow_permutations(n: int) -> list[tuple[int, ...]]:
    """All permutations of 1..2^n obeying :func:`sylow_constraints` (brute force)."""
    cons = [(i - 1, j - 1) for i, j in sylow_constraints(n)]
    return [perm for perm in itertools.permutations(range(1, 2 ** n + 1))
            if all(perm[i] < perm[j] for i, j in cons)]


# --------------------------------------------------------------------------
# schedules and size-only censuses


@dataclass(frozen=True)
class Segment:
    rule: str
    length: int
    pairs: tuple[tuple[int, int], ...] | None = None


@dataclass(frozen=True)
class Schedule:
    k: int
    segments: tuple[Segment, ...]

    @property
    def generations(self) -> int:
        return sum(s.length for s in self.segments)

    def to_json(self) -> dict:
        segs = []
        for s in self.segments:
            d = {"rule": s.rule, "length": s.length}
            if s.pairs is not None:
                d["pairs"] = [list(p) for p in s.pairs]
            segs.append(d)
        return {"k": self.k, "segments": segs}

    @classmethod
    def from_json(cls, data: dict) -> "Schedule":
        if not isinstance(data, dict) or "k" not in data or "segments" not in data:
            raise SpecieError('schedule must be an object with "k" and "segments"')
        k = data["k"]
        if not isinstance(k, int) or k < 3:
            raise SpecieError(f'"k" must be an integer >= 3, got {k!r}')
        segs = []
        for i, s in enumerate(data["segments"]):
            where = f"segment #{i}"
            if not isinstance(s, dict):
                raise SpecieError(f"{where}: expected an object")
            rule = s.get("rule")
            if rule not in ("wild", "clover", "duplex", "custom"):
                raise SpecieError(f"{where}: unknown rule {rule!r}")
            length = s.get("length")
            if not isinstance(length, int) or length < 0:
                raise SpecieError(f"{where}: length must be a nonnegative integer")
            pairs = s.get("pairs")
            if rule == "custom":
                if not pairs:
                    raise SpecieError(f"{where}: custom rule needs pairs")
                try:
                    pairs = tuple((int(a), int(b)) for a, b in pairs)
                except (TypeError, ValueError):
                    raise SpecieError(f"{where}: pairs must be [father, mother] index lists") from None
            elif pairs is not None:
                raise SpecieError(f"{where}: pairs only allowed for custom rules")
            segs.append(Segment(rule, length, pairs))
        return cls(k, tuple(segs))

    @classmethod
    def load(cls, path) -> "Schedule":
        with open(path) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            line = text.splitlines()[exc.lineno - 1] if exc.lineno <= len(text.splitlines()) else ""
            raise SpecieError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None
        return cls.from_json(data)

    def rules(self) -> list[SelectionRule]:
        """One selection rule per generation to construct."""
        out: list[SelectionRule] = []
        for s in self.segments:
            for i in range(s.length):
                if s.rule == "wild":
                    out.append(Wild())
                elif s.rule == "clover":
                    out.append(Clover(relabel=(i == 0)))
                elif s.rule == "duplex":
                    out.append(Duplex())
                else:
                    out.append(Custom(s.pairs))
        return out

    def build(self, generations: int | None = None) -> Specie:
        """Materialize the specie (optionally only the first ``generations`` steps)."""
        sp = new_specie(self.k)
        for i, rule in enumerate(self.rules()):
            if generations is not None and i >= generations:
                break
            sp.extend(rule)
        return sp


def wild_schedule(k: int, length: int) -> Schedule:
    return Schedule(k, (Segment("wild", length),))


def clover_schedule(length: int) -> Schedule:
    return Schedule(3, (Segment("clover", length),))


@dataclass
class Census:
    """Generation sizes only, run-length encoded, exact big integers.

    Suitable for schedules far beyond what can be materialized.
    """

    runs: list[tuple[int, int]] = field(default_factory=list)  # (size, count)
    segment_ends: list[tuple[str, int]] = field(default_factory=list)  # (rule, last gen index)

    @property
    def depth(self) -> int:
        return sum(c for _, c in self.runs) - 1

    def append(self, size: int, count: int = 1) -> None:
        if count <= 0:
            return
        if self.runs and self.runs[-1][0] == size:
            self.runs[-1] = (size, self.runs[-1][1] + count)
        else:
            self.runs.append((size, count))

    def size(self, n: int) -> int:
        for size, count in self.runs:
            if n < count:
                return size
            n -= count
        raise NeedsExtension(f"generation {n} beyond census")

    @property
    def sizes(self) -> list[int]:
        total = sum(c for _, c in self.runs)
        if total > 10 ** 6:
            raise SpecieError("census too long to list; use size() or groupoid_growth_log2()")
        return [s for s, c in self.runs for _ in range(c)]

    def groupoid_growth_log2(self, m: int) -> int:
        """1 + Σ_{j<=m} |Θ_j| (i.e. γ_G at n = 2^m)."""
        if m > self.depth:
            raise NeedsExtension(f"generation {m} beyond census depth {self.depth}")
        total, left = 1, m + 1
        for size, count in self.runs:
            take = min(count, left)
            total += size * take
            left -= take
            if not left:
                break
        return total

    @classmethod
    def from_schedule(cls, schedule: Schedule, max_bits: int = 1 << 24) -> "Census":
        c = cls()
        c.append(schedule.k)
        for seg in schedule.segments:
            c.extend(seg.rule, seg.length, seg.pairs, max_bits=max_bits)
        return c

    def extend(self, rule: str, length: int, pairs=None, max_bits: int = 1 << 24) -> None:
        size = self.runs[-1][0] if self.runs else None
        if size is None:
            raise SpecieError("census has no root generation")
        if rule == "wild":
            for _ in range(length):
                size = size * (size - 1)
                if size.bit_length() > max_bits:
                    raise SpecieError("wild census exceeds the size budget")
                self.append(size)
        elif rule == "clover":
            if size < 3:
                raise SpecieError("clover rule needs at least three flies")
            self.append(3, length)
        elif rule == "duplex":
            raise SpecieError("duplex generations have two flies (minimum is three)")
        elif rule == "custom":
            if len(pairs) < 3:
                raise SpecieError("custom generation with fewer than three flies")
            self.append(len(pairs), length)
        else:
            raise SpecieError(f"unknown rule {rule!r}")
        if length:
            self.segment_ends.append((rule, self.depth))


def oscillating_census(checkpoint: Callable[[int], int], cycles: int,
                       ratio: Fraction | int | str = Fraction(7, 2), k: int = 3,
                       max_wild: int = 40) -> Census:
    """Alternate wild and clover segments, sizing each one greedily.

    ``checkpoint(m)`` is a target for the groupoid growth at n = 2^m.  Each wild
    segment runs until γ_G(2^m) >= checkpoint(m); the following clover segment
    runs until γ_G(2^m) / m < ``ratio``.  Every segment opens with three flies.
    """
    ratio = Fraction(ratio)
    if ratio <= 3:
        raise ValueError("clover segments add three flies per generation; ratio must exceed 3")
    census = Census()
    census.append(k)
    for _ in range(cycles):
        m, size = census.depth, census.size(census.depth)
        total = census.groupoid_growth_log2(m)
        steps = 0
        while steps == 0 or total < checkpoint(m):
            size *= size - 1
            total += size
            m += 1
            steps += 1
            if steps > max_wild:
                raise SpecieError("checkpoint not reached within the wild budget")
        census.extend("wild", steps)
        # γ_G(2^(m0+L)) = total + 3L; least L with (total + 3L) / (m0 + L) < ratio
        m0, total = census.depth, census.groupoid_growth_log2(census.depth)
        bound = (total - ratio * m0) / (ratio - 3)
        length = max(1, math.floor(bound) + 1)
        census.extend("clover", length)
    return census
