import pytest

from droso.deriv import Derivation, OperatorRepresentation, p_power_iter
from droso.dpring import DPRing, ExponentTuple
from droso.nilcheck import (OutsideHypotheses, check_elements, nil_index, nil_index_across_depths,
                            sample_elements, thread_count)
from droso.pivots import PivotSet

from helpers import ring, specie


def test_zero_and_single_partial():
    r = ring("clover", 2, 2)
    assert nil_index(Derivation.zero(r, 2)).nil_index == 0
    rep = nil_index(Derivation.partial(r, 2, 4))
    assert rep.nil_index == 1 and rep.bound_ok


def test_pivot_sum_against_matrix_powers():
    r = ring("clover", 2, 3)
    piv = PivotSet(r, 3)
    w = piv.virtual(0) + piv.virtual(1)
    rep = nil_index(w, 3)
    assert rep.conclusive
    # the depth-2 image, checked with operator matrices
    low = nil_index(w, 2).nil_index
    shallow = PivotSet(r, 2)
    w2 = shallow.virtual(0) + shallow.virtual(1)
    orep = OperatorRepresentation(r, 2)
    m = orep.matrices(w2)
    k = 0
    while any(x.nnz for x in m):
        m = orep.power(m, 2)
        k += 1
    assert k == low
    assert p_power_iter(w2, low).is_zero()


def test_budget_is_inconclusive():
    r = ring("clover", 2, 3)
    w = PivotSet(r, 3).virtual(0)
    rep = nil_index(w, 3, max_n=1)
    assert rep.nil_index is None and "inconclusive" in rep.note


def test_sample_is_reproducible_and_in_span():
    r = ring("clover", 3, 3)
    a = sample_elements(r, 3, 10, seed=4)
    b = sample_elements(r, 3, 10, seed=4)
    assert a.elements == b.elements
    assert all(a.in_span(w) for w in a.elements)
    assert sample_elements(r, 3, 0, seed=4).elements == []


def test_samples_are_nil_with_depletion_bound():
    for kind, p in (("clover", 2), ("wild", 3)):
        r = ring(kind, p, 3 if kind == "clover" else 2)
        s = sample_elements(r, r.depth, 15, seed=1)
        for rep in check_elements(s.elements, r.depth, threads=1):
            assert rep.conclusive and rep.bound_ok
            c = rep.trajectory[0]
            assert all(d <= c + j * (p - 1) for j, d in enumerate(rep.trajectory))


def test_nil_index_stable_across_depths():
    r = ring("clover", 2, 4)
    s = sample_elements(r, 4, 10, seed=2)
    for w in s.elements:
        lo, hi = nil_index_across_depths(w, 3)
        assert lo is not None and hi is not None and lo <= hi


def test_parallel_matches_serial():
    r = ring("clover", 2, 3)
    s = sample_elements(r, 3, 6, seed=9)
    serial = check_elements(s.elements, 3, threads=1)
    parallel = check_elements(s.elements, 3, threads=2)
    assert [x.as_dict() for x in serial] == [x.as_dict() for x in parallel]


def test_non_uniform_refused_unless_allowed():
    sp = specie("clover", 2)
    caps = {f: 1 for f in range(sp.num_flies())}
    caps.update({0: 1, 1: 2, 2: 3})
    r = DPRing(sp, ExponentTuple.from_caps(sp, caps), 2)
    with pytest.raises(OutsideHypotheses):
        sample_elements(r, 2, 3, seed=0)
    assert len(sample_elements(r, 2, 3, seed=0, allow_nonuniform=True).elements) == 3


def test_thread_env(monkeypatch):
    monkeypatch.setenv("DROSO_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("DROSO_THREADS", "x")
    with pytest.raises(ValueError):
        thread_count()
