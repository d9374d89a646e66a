"""Virtual and actual pivot elements, and machine checks of their relations.

The virtual pivot of a fly ``a`` is the sum over its paternal descendants
``d`` (``a`` itself included) of ``∂_d`` times the top divided powers of the
paternal-by-one ancestors of ``d`` lying between ``a`` and ``d``:

    v_a = ∂_a + t_a^(max) Σ_{ab} t_b^(max) v_{ab}.

Actual pivots are built only from brackets and p-th powers of the
generation-0 pivots:  v̄_{ab} = ad(v̄_b)^{p^S_b - 1} (v̄_a^{[p^S_a]}).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from .deriv import Derivation, ad_power, bracket, format_term, p_power, p_power_iter
from .dpring import DPRing
from .linalg import Echelon


class PivotSet:
    """Memoized pivots of one ring at one truncation depth."""

    def __init__(self, ring: DPRing, depth: int | None = None):
        self.ring = ring
        self.depth = ring.depth if depth is None else depth
        if self.depth > ring.depth:
            raise ValueError(f"depth {self.depth} exceeds ring depth {ring.depth}")
        self.specie = ring.specie
        self._virtual: dict[int, Derivation] = {}
        self._actual: dict[int, Derivation] = {}
        self._vpow: dict[tuple[int, int], Derivation] = {}
        self._apow: dict[tuple[int, int], Derivation] = {}

    def _check_fly(self, a: int) -> None:
        if not 0 <= a < self.ring.num_flies or self.ring.gen[a] > self.depth:
            raise ValueError(f"fly {a} is not within depth {self.depth}")

    def children(self, a: int) -> list[int]:
        """Selected flies with father ``a`` (empty past the depth)."""
        if self.ring.gen[a] >= self.depth:
            return []
        return self.specie.children_by_father(a)

    def virtual(self, a: int) -> Derivation:
        got = self._virtual.get(a)
        if got is not None:
            return got
        self._check_fly(a)
        ring = self.ring
        top = ring.pcap
        terms = {}
        stack = [(a, ())]
        while stack:
            d, factor = stack.pop()
            terms[(d, 0, factor)] = 1
            for ch in self.children(d):
                m = self.specie.mother(ch)
                extra = ((d, top[d] - 1), (m, top[m] - 1)) if d < m else ((m, top[m] - 1), (d, top[d] - 1))
                stack.append((ch, factor + extra))
        got = Derivation._raw(ring, self.depth, terms)
        self._virtual[a] = got
        return got

    def virtual_or_zero(self, a: int | None) -> Derivation:
        """The convention v = 0 for pairs that were not selected."""
        if a is None or self.ring.gen[a] > self.depth:
            return Derivation.zero(self.ring, self.depth)
        return self.virtual(a)

    def virtual_power(self, a: int, m: int) -> Derivation:
        key = (a, m)
        got = self._vpow.get(key)
        if got is None:
            got = self.virtual(a) if m == 0 else p_power(self.virtual_power(a, m - 1))
            self._vpow[key] = got
        return got

    def actual(self, c: int) -> Derivation:
        got = self._actual.get(c)
        if got is not None:
            return got
        self._check_fly(c)
        par = self.specie.parents(c)
        if par is None:
            got = self.virtual(c)
        else:
            a, b = par
            got = ad_power(self.actual(b), self.ring.pcap[b] - 1,
                           self.actual_power(a, self.ring.caps[a]))
        self._actual[c] = got
        return got

    def actual_power(self, a: int, m: int) -> Derivation:
        key = (a, m)
        got = self._apow.get(key)
        if got is None:
            got = self.actual(a) if m == 0 else p_power(self.actual_power(a, m - 1))
            self._apow[key] = got
        return got

    def override(self, a: int, w: Derivation) -> None:
        """Replace a virtual pivot (used for negative controls)."""
        self._virtual[a] = w
        self._vpow = {k: v for k, v in self._vpow.items() if k[0] != a}


def virtual_pivot(ring: DPRing, a: int, depth: int) -> Derivation:
    return PivotSet(ring, depth).virtual(a)


def actual_pivot(ring: DPRing, c: int, depth: int) -> Derivation:
    return PivotSet(ring, depth).actual(c)


# --------------------------------------------------------------------------
# relation checks


@dataclass
class RelationResult:
    relation: str
    status: str = "pass"
    checks: int = 0
    counterexample: dict | None = None

    def as_dict(self) -> dict:
        out = {"relation": self.relation, "status": self.status, "checks": self.checks}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


@dataclass
class VerifyReport:
    p: int
    depth: int
    results: list[RelationResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status == "pass" for r in self.results)

    def get(self, relation: str) -> RelationResult:
        for r in self.results:
            if r.relation == relation:
                return r
        raise KeyError(relation)

    def as_dict(self) -> dict:
        return {"p": self.p, "depth": self.depth, "passed": self.passed,
                "results": [r.as_dict() for r in self.results]}


class _Checker:
    def __init__(self, name: str, ring: DPRing):
        self.res = RelationResult(name)
        self.ring = ring

    def equal(self, lhs: Derivation, rhs: Derivation, where: str) -> bool:
        self.res.checks += 1
        if lhs == rhs:
            return True
        diff = lhs - rhs
        key, c = diff.sorted_terms()[0]
        self.fail(where, format_term(self.ring, key, c))
        return False

    def fail(self, where: str, term: str) -> None:
        if self.res.status == "pass":
            self.res.status = "fail"
            self.res.counterexample = {"instance": where, "term": term}


def _child_sum(piv: PivotSet, a: int, extra: Iterable[tuple[int, int]] = ()) -> Derivation:
    """Σ_{ac} t_c^(max) v_{ac}, optionally times a further monomial."""
    ring = piv.ring
    total = Derivation.zero(ring, piv.depth)
    extra = dict(extra)
    for ch in piv.children(a):
        c = piv.specie.mother(ch)
        total = total + piv.virtual(ch).times(ring.mono({**extra, c: ring.pcap[c] - 1}))
    return total


def _correction(piv: PivotSet, a: int, b: int, distinct: bool = False) -> Derivation:
    """Σ_{ac, bd} t_c^(max) t_d^(max) [v_{bd}, v_{ac}]."""
    ring, specie = piv.ring, piv.specie
    total = Derivation.zero(ring, piv.depth)
    for ac in piv.children(a):
        c = specie.mother(ac)
        for bd in piv.children(b):
            d = specie.mother(bd)
            if distinct and len({a, b, c, d}) < 4:
                continue
            got = ring.mono_mul(ring.mono({c: ring.pcap[c] - 1}), ring.mono({d: ring.pcap[d] - 1}))
            if got is None:
                continue
            coef, mono = got
            br = bracket(piv.virtual(bd), piv.virtual(ac))
            if br.terms:
                total = total + br.times(mono).scale(coef)
    return total


def _pairs(piv: PivotSet, n: int):
    gen = list(piv.specie.generation(n))
    for a in gen:
        for b in gen:
            if a != b:
                yield a, b


def check_vap(piv: PivotSet) -> RelationResult:
    ring = piv.ring
    chk = _Checker("vap", ring)
    for a in range(ring.specie.num_flies(piv.depth)):
        s = ring.caps[a]
        for m in range(s + 1):
            lhs = piv.virtual_power(a, m)
            if m < s:
                rhs = Derivation._raw(ring, piv.depth, {(a, m, ()): 1})
                step = ring.p ** m
                rhs = rhs + _child_sum(piv, a, [(a, ring.pcap[a] - step)])
            else:
                rhs = _child_sum(piv, a)
            if not chk.equal(lhs, rhs, f"a={ring.specie.text(a)}, m={m}"):
                return chk.res
    return chk.res


def _power_bracket(piv: PivotSet, a: int, b: int) -> Derivation:
    ring = piv.ring
    return ad_power(piv.virtual(b), ring.pcap[b] - 1, piv.virtual_power(a, ring.caps[a]))


def check_v_power(piv: PivotSet) -> RelationResult:
    ring, specie = piv.ring, piv.specie
    chk = _Checker("v_power", ring)
    for n in range(piv.depth):
        for a, b in _pairs(piv, n):
            lhs = _power_bracket(piv, a, b)
            rhs = piv.virtual_or_zero(specie.child(a, b))
            rhs = rhs + _correction(piv, a, b).times(ring.mono({b: 1}))
            if not chk.equal(lhs, rhs, f"a={specie.text(a)}, b={specie.text(b)}"):
                return chk.res
    return chk.res


def check_ternary(piv: PivotSet) -> RelationResult:
    """Between two three-fly generations the correction of v_power vanishes
    for selected ab unless the next generation is {ab, ba, af}."""
    ring, specie = piv.ring, piv.specie
    chk = _Checker("ternary", ring)
    for n in range(piv.depth):
        gen = list(specie.generation(n))
        nxt = set(specie.generation(n + 1))
        if len(gen) != 3 or len(nxt) != 3:
            continue
        for a, b in _pairs(piv, n):
            ab = specie.child(a, b)
            if ab is None:
                continue
            f = next(x for x in gen if x not in (a, b))
            excluded = {specie.child(a, b), specie.child(b, a), specie.child(a, f)}
            if None not in excluded and excluded == nxt:
                continue
            lhs = _power_bracket(piv, a, b)
            if not chk.equal(lhs, piv.virtual(ab), f"a={specie.text(a)}, b={specie.text(b)}"):
                return chk.res
    return chk.res


def check_comm_head(piv: PivotSet) -> RelationResult:
    ring, specie = piv.ring, piv.specie
    chk = _Checker("comm_pivot_head", ring)
    top = ring.pcap
    for n in range(piv.depth):
        for a, b in _pairs(piv, n):
            lhs = bracket(piv.virtual(b), piv.virtual(a))
            rhs = piv.virtual_or_zero(specie.child(a, b)).times(ring.mono({a: top[a] - 1, b: top[b] - 2}))
            rhs = rhs - piv.virtual_or_zero(specie.child(b, a)).times(ring.mono({a: top[a] - 2, b: top[b] - 1}))
            rhs = rhs + _correction(piv, a, b, distinct=True).times(ring.mono({a: top[a] - 1, b: top[b] - 1}))
            if not chk.equal(lhs, rhs, f"a={specie.text(a)}, b={specie.text(b)}"):
                return chk.res
    return chk.res


def _in_unit_ideal(ring: DPRing, tail, d: int) -> bool:
    """Whether t^tail lies in t_d^(1)·R, i.e. the t_d exponent has a nonzero last digit."""
    for f, e in tail:
        if f == d:
            return e % ring.p != 0
    return False


def check_ab_ab(piv: PivotSet) -> RelationResult:
    ring, specie = piv.ring, piv.specie
    chk = _Checker("ab_ab", ring)
    for n in range(piv.depth):
        for a, b in _pairs(piv, n):
            diff = _power_bracket(piv, a, b) - piv.virtual_or_zero(specie.child(a, b))
            chk.res.checks += 1
            for (t, l, tail), c in diff.sorted_terms():
                if ring.gen[t] < n + 2 or not _in_unit_ideal(ring, tail, b):
                    chk.fail(f"a={specie.text(a)}, b={specie.text(b)}", format_term(ring, (t, l, tail), c))
                    return chk.res
    return chk.res


def check_clover(piv: PivotSet) -> RelationResult:
    ring, specie = piv.ring, piv.specie
    chk = _Checker("clover_relations", ring)
    for i in range(piv.depth):
        roles, nxt = specie.roles(i), specie.roles(i + 1)
        if roles is None or nxt is None or len(roles) != 3 or specie.rules[i + 1] != "clover":
            continue
        x, y, z = roles
        x1, y1, z1 = nxt
        top, caps = ring.pcap, ring.caps
        piv_, pow_ = piv.virtual, piv.virtual_power
        items = [
            ("v^p^S = y^max v'", pow_(x, caps[x]), piv_(x1).times(ring.mono({y: top[y] - 1}))),
            ("w^p^R = x^max w'", pow_(y, caps[y]), piv_(y1).times(ring.mono({x: top[x] - 1}))),
            ("u^p^R = x^max u'", pow_(z, caps[z]), piv_(z1).times(ring.mono({x: top[x] - 1}))),
            ("[w^(p^R-1), v^p^S] = v'", ad_power(piv_(y), top[y] - 1, pow_(x, caps[x])), piv_(x1)),
            ("[v^(p^S-1), w^p^R] = w'", ad_power(piv_(x), top[x] - 1, pow_(y, caps[y])), piv_(y1)),
            ("[v^(p^S-1), u^p^R] = u'", ad_power(piv_(x), top[x] - 1, pow_(z, caps[z])), piv_(z1)),
        ]
        for name, lhs, rhs in items:
            if not chk.equal(lhs, rhs, f"generation {i}: {name}"):
                return chk.res
    return chk.res


def check_actual_congruence(piv: PivotSet) -> RelationResult:
    ring, specie = piv.ring, piv.specie
    chk = _Checker("actual_pivot_congruence", ring)
    for c in range(specie.num_flies(piv.depth)):
        if ring.gen[c] == 0:
            chk.equal(piv.actual(c), piv.virtual(c), f"c={specie.text(c)}")
            continue
        moms = []
        cur = c
        while ring.gen[cur] > 0:
            cur = specie.mother(cur)
            moms.append(cur)
        diff = piv.actual(c) - piv.virtual(c)
        chk.res.checks += 1
        for (t, l, tail), coef in diff.sorted_terms():
            if not any(ring.gen[t] >= ring.gen[d] + 2 and _in_unit_ideal(ring, tail, d) for d in moms):
                chk.fail(f"c={specie.text(c)}", format_term(ring, (t, l, tail), coef))
                return chk.res
    return chk.res


def check_actual_independence(piv: PivotSet) -> RelationResult:
    ring = piv.ring
    chk = _Checker("actual_pivot_independence", ring)
    ech = Echelon(ring.p)
    for c in range(ring.specie.num_flies(piv.depth)):
        chk.res.checks += 1
        if ech.insert(piv.actual(c).terms) is None:
            chk.fail(f"c={ring.specie.text(c)}", "dependent on earlier actual pivots")
            return chk.res
    return chk.res


CHECKS: dict[str, Callable[[PivotSet], RelationResult]] = {
    "vap": check_vap,
    "v_power": check_v_power,
    "ternary": check_ternary,
    "comm_pivot_head": check_comm_head,
    "ab_ab": check_ab_ab,
    "clover_relations": check_clover,
    "actual_pivot_congruence": check_actual_congruence,
    "actual_pivot_independence": check_actual_independence,
}


def verify_suite(ring: DPRing, depth: int, relations: Iterable[str] | None = None,
                 pivots: PivotSet | None = None) -> VerifyReport:
    if depth < 2:
        raise ValueError("the relation suite needs depth >= 2")
    piv = pivots if pivots is not None else PivotSet(ring, depth)
    report = VerifyReport(ring.p, depth)
    for name in relations or CHECKS:
        report.results.append(CHECKS[name](piv))
    return report
