"""Nil index of sampled elements in the depth-D quotient.

Vanishing at depth D only shows the image in that quotient is nil; comparing
depths D and D+1 is the available sanity check.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .deriv import Derivation, p_power, restrict
from .dpring import DPRing
from .grading import depletion, is_uniform, nillity_generation_bound
from .growth import enumerate_growth
from .linalg import Echelon


class OutsideHypotheses(ValueError):
    """Raised for non-uniform tuples unless explicitly allowed."""


@dataclass
class NilReport:
    label: str
    depth: int
    nil_index: int | None  # None when max_n was reached first
    trajectory: list[int]  # depl(w^{p^j}) for j = 0, 1, ...
    bound_ok: bool  # depl(w^{p^j}) <= depl(w) + j(p-1) at every step
    generation_bound: int  # n_0 from C = depl(w)
    max_n: int
    note: str = ""

    @property
    def conclusive(self) -> bool:
        return self.nil_index is not None

    def as_dict(self) -> dict:
        return asdict(self)


def default_max_n(ring: DPRing, depth: int) -> int:
    s_max = max(ring.caps[: ring.specie.num_flies(depth)])
    return s_max * (depth + 2) * ring.p


def nil_index(w: Derivation, depth: int | None = None, max_n: int | None = None,
              label: str = "") -> NilReport:
    """Smallest N with w^{p^N} = 0 after restricting to ``depth``."""
    ring = w.ring
    depth = w.depth if depth is None else depth
    if depth < w.depth:
        w = restrict(w, depth)
    max_n = default_max_n(ring, depth) if max_n is None else max_n
    p = ring.p
    c = depletion(w)
    trajectory = [c]
    ok = True
    cur = w
    found = 0 if not cur.terms else None
    j = 0
    while found is None and j < max_n:
        cur = p_power(cur)
        j += 1
        if not cur.terms:
            found = j
            break
        d = depletion(cur)
        trajectory.append(d)
        ok = ok and d <= c + j * (p - 1)
    note = "" if found is not None else f"no zero power up to p^{max_n}; inconclusive in the quotient"
    return NilReport(label, depth, found, trajectory, ok, nillity_generation_bound(c, p), max_n, note)


def nil_index_across_depths(w: Derivation, depth: int, max_n: int | None = None) -> tuple[int | None, int | None]:
    """Nil indices of the images at ``depth`` and ``depth + 1`` (w must live at depth + 1)."""
    if w.depth < depth + 1:
        raise ValueError("element must be defined at depth + 1")
    return (nil_index(w, depth, max_n).nil_index, nil_index(w, depth + 1, max_n).nil_index)


def require_uniform(ring: DPRing, allow: bool = False) -> str:
    """'' for uniform tuples; a label for allowed non-uniform ones; raises otherwise."""
    info = is_uniform(ring.specie, ring.tuple)
    if info:
        return ""
    if not allow:
        raise OutsideHypotheses(f"non-uniform tuple ({info.reason}); pass allow_nonuniform to explore")
    return "outside the uniform-tuple hypotheses"


@dataclass
class Sample:
    elements: list[Derivation]
    basis: list[Derivation] = field(repr=False)
    seed: int

    def in_span(self, w: Derivation) -> bool:
        ech = Echelon(w.ring.p)
        for b in self.basis:
            ech.insert(b.terms)
        return ech.contains(w.terms)


def sample_elements(ring: DPRing, depth: int, count: int, seed: int,
                    max_weight: int = 6, allow_nonuniform: bool = False) -> Sample:
    """Seeded random F_p-combinations of the enumerated basis up to ``max_weight``."""
    require_uniform(ring, allow_nonuniform)
    if count == 0:
        return Sample([], [], seed)
    _, graded = enumerate_growth(ring, max_weight, depth, keep_basis=True)
    basis = graded.all_rows()
    rng = np.random.default_rng(seed)
    p = ring.p
    out = []
    for _ in range(count):
        while True:
            coeffs = rng.integers(0, p, size=len(basis))
            # sparse combinations keep the depletion spread wide
            mask = rng.random(len(basis)) < min(1.0, 4 / max(1, len(basis)))
            coeffs = np.where(mask, coeffs, 0)
            if coeffs.any():
                break
        w = Derivation.zero(ring, depth)
        for c, b in zip(coeffs.tolist(), basis):
            if c:
                w = w + b.scale(c)
        out.append(w)
    return Sample(out, basis, seed)


def _nil_job(args):
    w, depth, max_n, label = args
    return nil_index(w, depth, max_n, label)


def thread_count() -> int:
    raw = os.environ.get("DROSO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"DROSO_THREADS must be an integer, got {raw!r}") from None


def check_elements(elements: list[Derivation], depth: int, max_n: int | None = None,
                   threads: int | None = None, label: str = "sample") -> list[NilReport]:
    """nil_index for every element; uses a process pool when threads > 1."""
    threads = thread_count() if threads is None else threads
    jobs = [(w, depth, max_n, f"{label}[{i}]") for i, w in enumerate(elements)]
    if threads <= 1 or len(jobs) < 2:
        return [_nil_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_nil_job, jobs))
