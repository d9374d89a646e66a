"""Incremental row reduction over F_p for sparse rows keyed by sortable keys."""

from __future__ import annotations

from typing import Hashable, Iterable, Mapping


class Echelon:
    """Rows with distinct leading (largest) keys, leading coefficient 1.

    ``insert`` reduces a vector against the stored rows and keeps the
    remainder when it is nonzero, so the row count is the rank of everything
    inserted so far.
    """

    __slots__ = ("p", "rows")

    def __init__(self, p: int):
        self.p = p
        self.rows: dict[Hashable, dict] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Mapping) -> dict:
        p = self.p
        rows = self.rows
        r = {k: c % p for k, c in vec.items() if c % p}
        if not rows:
            return r
        while True:
            hits = [k for k in r if k in rows]
            if not hits:
                return r
            k = max(hits)
            c = r[k]
            for kk, cc in rows[k].items():
                v = (r.get(kk, 0) - c * cc) % p
                if v:
                    r[kk] = v
                else:
                    r.pop(kk, None)

    def insert(self, vec: Mapping) -> dict | None:
        """Add ``vec``; returns the new normalized row, or None if dependent."""
        r = self.reduce(vec)
        if not r:
            return None
        lead = max(r)
        inv = pow(r[lead], -1, self.p)
        if inv != 1:
            p = self.p
            r = {k: c * inv % p for k, c in r.items()}
        self.rows[lead] = r
        return r

    def contains(self, vec: Mapping) -> bool:
        return not self.reduce(vec)


def rank(vectors: Iterable[Mapping], p: int) -> int:
    ech = Echelon(p)
    for v in vectors:
        ech.insert(v)
    return len(ech)
