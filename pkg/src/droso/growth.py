"""Growth of the restricted Lie algebra generated by the generation-0 pivots.

``enumerate_growth`` builds, weight by weight, a basis of the depth-D image of
L = Lie_p(v_1, ..., v_k):

* weight n is spanned by ``[v_i, b]`` for basis elements ``b`` of weight n-1,
  together with p-th powers of basis elements of weight n/p;
* each weight splits further by multidegree, so row reduction runs on many
  small components.

Also here: tuple constructors, depth stabilization, slope fits, reference
curves, the cut comparison, and two brute-force cross-checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .deriv import Derivation, OperatorRepresentation, bracket, p_power
from .dpring import DPRing, ExponentTuple
from .grading import Grading, NotUniform, generation_weight, is_uniform
from .linalg import Echelon
from .pivots import PivotSet
from .species import Specie, sylow_permutations


class BudgetExceeded(RuntimeError):
    pass


# --------------------------------------------------------------------------
# tuples


def tuple_kappa(kappa: float, i: int) -> tuple[int, int]:
    """(floor((i+1)^{1/κ-1}), 1), with S clamped to >= 1."""
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    value = (i + 1) ** (1 / kappa - 1)
    s = math.floor(value + 1e-9)  # (i+1)^2 must not land just below an integer
    return max(1, s), 1


def _iterated_exp(x, q: int):
    for _ in range(q):
        x = mpmath.exp(x)
    return x


def tuple_q_kappa(q: int, kappa: float, p: int, n: int) -> tuple[int, int]:
    """S_0 = 1 and S_n = floor(exp^(q)(λ(n+2))) + 1 - Σ_{j<n} S_j with λ = ln(p²)/κ."""
    if q < 1 or kappa <= 0:
        raise ValueError("need q >= 1 and kappa > 0")
    if n == 0:
        return 1, 1

    def partial(m: int) -> int:
        # Σ_{j<=m} S_j
        if m == 0:
            return 1
        lam = mpmath.log(p ** 2) / kappa
        with mpmath.workdps(50):
            x = _iterated_exp(lam * (m + 2), q)
            digits = int(mpmath.log10(x)) + 30 if x > 1 else 30
        with mpmath.workdps(max(50, digits)):
            lam = mpmath.log(p ** 2) / kappa
            return int(mpmath.floor(_iterated_exp(lam * (m + 2), q))) + 1

    s = partial(n) - partial(n - 1)
    if s < 1:
        raise ValueError(f"degenerate tuple: S_{n} = {s}")
    return s, 1


@dataclass(frozen=True)
class TupleGenerator:
    """Per-generation caps (S_n, R_n).

    kind is one of ``trivial``, ``kappa``, ``qkappa``, ``constant``, ``custom``.
    """

    kind: str = "trivial"
    kappa: float | None = None
    q: int | None = None
    p: int | None = None
    s: int = 1
    r: int = 1
    values: tuple[tuple[int, int], ...] = ()

    def caps(self, n: int) -> tuple[int, int]:
        if self.kind == "trivial":
            return 1, 1
        if self.kind == "kappa":
            return tuple_kappa(self.kappa, n)
        if self.kind == "qkappa":
            return tuple_q_kappa(self.q, self.kappa, self.p, n)
        if self.kind == "constant":
            return self.s, self.r
        if self.kind == "custom":
            if n >= len(self.values):
                raise ValueError(f"custom tuple has no entry for generation {n}")
            return self.values[n]
        raise ValueError(f"unknown tuple kind {self.kind!r}")

    def build(self, specie: Specie, depth: int | None = None) -> ExponentTuple:
        depth = specie.depth if depth is None else depth
        pairs = [self.caps(n) for n in range(depth + 1)]
        for n, (s, r) in enumerate(pairs):
            if s < 1 or r < 1:
                raise ValueError(f"generation {n}: caps must be positive, got {(s, r)}")
        return ExponentTuple.uniform(specie, pairs)

    def describe(self) -> str:
        if self.kind == "kappa":
            return f"kappa:{self.kappa}"
        if self.kind == "qkappa":
            return f"qkappa:{self.q},{self.kappa}"
        if self.kind == "constant":
            return f"constant:{self.s},{self.r}"
        if self.kind == "custom":
            return "custom:" + ";".join(f"{s},{r}" for s, r in self.values)
        return "trivial"


# --------------------------------------------------------------------------
# enumeration


@dataclass
class GrowthTable:
    dims: list[int]  # dims[n-1] = dim L_n
    depth: int
    p: int
    status: str = "unchecked"  # "stable", "unstable" or "unchecked"
    meta: dict = field(default_factory=dict)

    @property
    def max_weight(self) -> int:
        return len(self.dims)

    @property
    def gamma(self) -> list[int]:
        return list(itertools.accumulate(self.dims))

    def gamma_at(self, n: int) -> int:
        if n <= 0:
            return 0
        if n > len(self.dims):
            raise ValueError(f"table stops at weight {len(self.dims)}")
        return sum(self.dims[:n])

    def rows(self) -> list[tuple[int, int, int, str]]:
        return [(n, d, g, self.status) for n, (d, g) in enumerate(zip(self.dims, self.gamma), 1)]

    @classmethod
    def from_gamma(cls, gamma: Sequence[int], depth: int = -1, p: int = 0) -> "GrowthTable":
        dims = [int(g) - (int(gamma[i - 1]) if i else 0) for i, g in enumerate(gamma)]
        return cls(dims, depth, p)


@dataclass
class GradedBasis:
    """Basis rows per weight (only kept when requested)."""

    rows: dict[int, list[Derivation]] = field(default_factory=dict)
    multidegrees: dict[int, list[tuple[int, ...]]] = field(default_factory=dict)

    def all_rows(self, max_weight: int | None = None) -> list[Derivation]:
        return [r for n in sorted(self.rows) if max_weight is None or n <= max_weight
                for r in self.rows[n]]


def _add(md: tuple, i: int) -> tuple:
    return md[:i] + (md[i] + 1,) + md[i + 1:]


def enumerate_growth(ring: DPRing, max_weight: int, depth: int | None = None,
                     keep_basis: bool = False, check_grading: bool = False,
                     max_rows: int | None = None,
                     progress: Callable[[int, int], None] | None = None):
    """Per-weight dimensions of the depth-D image of the generated algebra.

    Returns the table, plus the :class:`GradedBasis` when ``keep_basis``.
    ``check_grading`` verifies that every bracket and power is homogeneous of
    the predicted multidegree (raises AssertionError otherwise).
    """
    depth = ring.depth if depth is None else depth
    piv = PivotSet(ring, depth)
    k = ring.specie.k
    p = ring.p
    gens = [piv.virtual(i) for i in range(k)]
    grading = Grading(ring) if check_grading else None
    basis = GradedBasis() if keep_basis else None
    pending: dict[int, list[tuple[tuple, Derivation]]] = {}
    prev: list[tuple[tuple, Derivation]] = []
    dims: list[int] = []
    unit = tuple(0 for _ in range(k))
    total = 0

    def check(md, w):
        if grading is not None and not grading.is_homogeneous(w, md):
            raise AssertionError(f"inhomogeneous element, expected multidegree {md}")

    for n in range(1, max_weight + 1):
        comps: dict[tuple, Echelon] = {}

        def insert(md, w):
            if not w.terms:
                return
            ech = comps.get(md)
            if ech is None:
                ech = comps[md] = Echelon(p)
            ech.insert(w.terms)

        for md, w in pending.pop(n, []):
            insert(md, w)
        if n == 1:
            for i, g in enumerate(gens):
                md = _add(unit, i)
                check(md, g)
                insert(md, g)
        else:
            for md, b in prev:
                for i, g in enumerate(gens):
                    w = bracket(g, b)
                    if w.terms:
                        md2 = _add(md, i)
                        check(md2, w)
                        insert(md2, w)
        cur = [(md, Derivation._raw(ring, depth, row))
               for md in sorted(comps) for row in comps[md].rows.values()]
        dims.append(len(cur))
        total += len(cur)
        if max_rows is not None and total > max_rows:
            raise BudgetExceeded(f"more than {max_rows} basis elements by weight {n}")
        if n * p <= max_weight:
            lst = pending.setdefault(n * p, [])
            for md, b in cur:
                w = p_power(b)
                if w.terms:
                    md2 = tuple(p * x for x in md)
                    check(md2, w)
                    lst.append((md2, w))
        if basis is not None:
            basis.rows[n] = [w for _, w in cur]
            basis.multidegrees[n] = [md for md, _ in cur]
        prev = cur
        if progress is not None:
            progress(n, len(cur))
    table = GrowthTable(dims, depth, p, meta={"k": k})
    return (table, basis) if keep_basis else table


def stabilize_depth(ring: DPRing, max_weight: int, start_depth: int = 0,
                    max_depth: int | None = None, **kwargs) -> tuple[int, GrowthTable]:
    """Increase the depth until two consecutive depths give identical tables."""
    max_depth = ring.depth if max_depth is None else max_depth
    if start_depth > max_depth:
        raise ValueError("start depth beyond the available generations")
    prev = enumerate_growth(ring, max_weight, start_depth, **kwargs)
    for d in range(start_depth + 1, max_depth + 1):
        cur = enumerate_growth(ring, max_weight, d, **kwargs)
        if cur.dims == prev.dims:
            prev.status = "stable"
            return d - 1, prev
        prev = cur
    prev.status = "unstable"
    return max_depth, prev


# --------------------------------------------------------------------------
# fits and reference curves


@dataclass
class SlopeFit:
    slope: float
    upper: float
    lower: float
    window: tuple[int, int]


def _points(table) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(table, GrowthTable):
        gamma = table.gamma
    else:
        gamma = list(table)
    n = np.arange(1, len(gamma) + 1, dtype=float)
    return n, np.asarray(gamma, dtype=float)


def gk_fit(table, window: float = 8.0, pieces: int = 4) -> SlopeFit:
    """Least-squares slope of ln γ against ln n over n in [N/window, N].

    ``upper``/``lower`` are the extreme slopes over ``pieces`` consecutive
    sub-windows of equal logarithmic length.
    """
    n, g = _points(table)
    if len(n) < 16:
        raise ValueError("need at least 16 points")
    N = len(n)
    lo = max(1, int(math.ceil(N / window)))
    sel = (n >= lo) & (g > 0)
    x, y = np.log(n[sel]), np.log(g[sel])
    slope = float(np.polyfit(x, y, 1)[0])
    edges = np.linspace(x[0], x[-1], pieces + 1)
    local = []
    for a, b in zip(edges[:-1], edges[1:]):
        m = (x >= a) & (x <= b)
        if m.sum() >= 2:
            local.append(float(np.polyfit(x[m], y[m], 1)[0]))
    return SlopeFit(slope, max(local, default=slope), min(local, default=slope), (lo, N))


def iterated_log(n: float, q: int) -> float:
    """ln^(q) n, redefined as 1 whenever it is undefined or below 1."""
    x = float(n)
    for _ in range(q):
        if x <= 1:
            return 1.0
        x = math.log(x)
    return max(x, 1.0)


def q_dimension_fit(table, q: int, window: float = 8.0) -> float:
    """Estimate α with γ(n) ≈ Φ^q_α(n) over the trailing window."""
    n, g = _points(table)
    if len(n) < 16:
        raise ValueError("need at least 16 points")
    if q == 1:
        return float(g[-1])
    if q == 2:
        return gk_fit(table, window).slope
    lo = max(1, int(math.ceil(len(n) / window)))
    sel = n >= lo
    n, g = n[sel], g[sel]
    if q == 3:
        m = g > math.e
        if m.sum() < 2:
            raise ValueError("growth too small for q = 3")
        beta = float(np.polyfit(np.log(n[m]), np.log(np.log(g[m])), 1)[0])
        if beta >= 1:
            return math.inf
        return beta / (1 - beta)
    # ln(n / ln γ) = (1/α) ln L with L = ln^(q-3) n
    m = g > 1
    xs = np.log([iterated_log(v, q - 3) for v in n[m]])
    ys = np.log(n[m] / np.log(g[m]))
    denom = float(np.dot(xs, xs))
    if denom == 0:
        raise ValueError("iterated logarithm is constant on this window")
    inv = float(np.dot(xs, ys)) / denom
    return math.inf if inv <= 0 else 1 / inv


def overlay_lambda(p: int) -> float:
    """λ = log2(p - 1/2)."""
    return math.log2(p - 0.5)


def overlay_mu(p: int) -> float:
    """μ = log_{2p-1} 2."""
    return math.log(2) / math.log(2 * p - 1)


def bound_overlay(p: int, k: int, n: int, C: float = 1.0, q: int = 1,
                  kappa: float = 1.0) -> tuple[float, float]:
    """Reference curves n (ln^(q) n)^κ and exp(C n / (ln n)^λ).

    The constants are free plotting parameters; ``k`` is accepted so rows can
    be labelled by the alphabet size.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    lower = n * iterated_log(n, q) ** kappa
    upper = math.exp(C * n / math.log(n) ** overlay_lambda(p))
    return lower, upper


# --------------------------------------------------------------------------
# cut comparison


@dataclass
class CutReport:
    M: int
    q: int
    points: list[tuple[int, int, int]]  # (N, γ_H(N // q), γ_L(N))
    degenerate: bool = False

    @property
    def holds(self) -> bool:
        return all(h < l for _, h, l in self.points)

    def failures(self) -> list[tuple[int, int, int]]:
        return [pt for pt in self.points if pt[1] >= pt[2]]


def cut_compare(specie: Specie, caps: ExponentTuple, p: int, M: int, max_weight: int,
                depth: int) -> CutReport:
    """Compare γ_L(N) with γ_H(N // q), H generated by the pivots of generation M.

    H is computed on the specie rooted at generation M, truncated at depth
    ``depth - M`` so both sides see the same flies.
    """
    try:
        q = generation_weight(specie, caps, p, M)
    except NotUniform as exc:
        raise ValueError(f"generation {M} has no uniform weight: {exc}") from None
    ring_l = DPRing(specie, caps, p, depth)
    table_l = enumerate_growth(ring_l, max_weight, depth)
    sub = specie.rooted_at(M)
    ring_h = DPRing(sub, caps.rooted_at(M, sub), p, depth - M)
    h_weight = max_weight // q
    table_h = enumerate_growth(ring_h, max(h_weight, 1), depth - M)
    points = [(N, table_h.gamma_at(N // q), table_l.gamma_at(N)) for N in range(1, max_weight + 1)]
    return CutReport(M, q, points, degenerate=(M == 0))


# --------------------------------------------------------------------------
# brute-force cross-checks


def oracle_growth(ring: DPRing, max_weight: int, depth: int, blocks=None,
                  limit: int = 1 << 17) -> list[int]:
    """Per-weight dimensions computed with operator matrices only.

    Generators become (block-diagonal) matrices; brackets are matrix
    commutators, p-th powers are matrix powers, ranks come from the matrix
    entries.
    """
    if blocks is None:
        rep = OperatorRepresentation.by_leaves(ring, depth, limit)
    else:
        rep = OperatorRepresentation(ring, depth, blocks, limit)
    piv = PivotSet(ring, depth)
    p = ring.p
    gens = [rep.matrices(piv.virtual(i)) for i in range(ring.specie.k)]

    def entries(mats):
        out = {}
        for b, m in enumerate(mats):
            coo = m.tocoo()
            for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
                if v % p:
                    out[(b, i, j)] = v % p
        return out

    pending: dict[int, list] = {}
    prev: list = []
    dims = []
    for n in range(1, max_weight + 1):
        ech = Echelon(p)
        cur = []

        def take(mats):
            if ech.insert(entries(mats)) is not None:
                cur.append(mats)

        for mats in pending.pop(n, []):
            take(mats)
        if n == 1:
            for g in gens:
                take(g)
        else:
            for b in prev:
                for g in gens:
                    take(rep.commutator(g, b))
        dims.append(len(cur))
        if n * p <= max_weight:
            pending.setdefault(n * p, []).extend(rep.power(b, p) for b in cur)
        prev = cur
    return dims


def span_definition_growth(ring: DPRing, max_weight: int, depth: int) -> list[int]:
    """γ(n) for n = 1..N straight from the spanning set
    {[x_i1, ..., x_is]^{p^j} : s p^j <= n} (right-normed commutators)."""
    piv = PivotSet(ring, depth)
    k, p = ring.specie.k, ring.p
    gens = [piv.virtual(i) for i in range(k)]
    by_weight: dict[int, list[Derivation]] = {1: list(gens)}
    # right-normed commutators of length s, memoized by suffix
    level = {(i,): g for i, g in enumerate(gens)}
    for s in range(2, max_weight + 1):
        nxt = {}
        for word, w in level.items():
            for i, g in enumerate(gens):
                nxt[(i,) + word] = bracket(g, w)
        level = nxt
        by_weight[s] = list(level.values())
    for s in range(1, max_weight + 1):
        base = by_weight[s] if s > 1 else list(gens)
        powered = base
        weight = s * p
        while weight <= max_weight:
            powered = [p_power(w) for w in powered]
            by_weight.setdefault(weight, []).extend(powered)
            weight *= p
    ech = Echelon(p)
    out = []
    for n in range(1, max_weight + 1):
        for w in by_weight.get(n, []):
            if w.terms:
                ech.insert(w.terms)
        out.append(len(ech))
    return out


def fn_monomial(xs: Sequence[Derivation]) -> Derivation:
    """F_n: [F_{n-1}(first half), F_{n-1}(second half)], F_0(x) = x."""
    if len(xs) == 1:
        return xs[0]
    h = len(xs) // 2
    return bracket(fn_monomial(xs[:h]), fn_monomial(xs[h:]))


def fn_independence(ring: DPRing, flies: Sequence[int], depth: int) -> tuple[int, int]:
    """(rank, count) of {F_n(v_{a_π(1)}, ...) : π admissible} for 2^n given flies."""
    size = len(flies)
    n = size.bit_length() - 1
    if size != 1 << n or n < 1:
        raise ValueError("need 2^n flies with n >= 1")
    piv = PivotSet(ring, depth)
    vs = [piv.virtual(a) for a in flies]
    ech = Echelon(ring.p)
    perms = sylow_permutations(n)
    for perm in perms:
        ech.insert(fn_monomial([vs[i - 1] for i in perm]).terms)
    return len(ech), len(perms)
