import pytest

from droso.deriv import Derivation, bracket, restrict
from droso.dpring import DPRing, ExponentTuple
from droso.pivots import CHECKS, PivotSet, actual_pivot, verify_suite, virtual_pivot

from helpers import ring, specie


def test_virtual_at_own_depth_is_partial():
    r = ring("wild", 2, 2)
    for a in range(r.num_flies):
        n = r.gen[a]
        assert virtual_pivot(r, a, n) == Derivation.partial(r, n, a)


def test_virtual_one_level_down():
    r = ring("wild", 3, 1)
    sp = r.specie
    a = sp.find("1")
    v = virtual_pivot(r, a, 1)
    expected = {(a, 0, ()): 1}
    for ch in sp.children_by_father(a):
        b = sp.mother(ch)
        expected[(ch, 0, tuple(sorted([(a, 2), (b, 2)])))] = 1
    assert v.terms == expected


def test_virtual_pattern_two_variables_per_generation():
    r = ring("wild", 2, 3)
    piv = PivotSet(r, 3)
    for a in (0, 4, 20):
        for (d, l, tail), c in piv.virtual(a).terms.items():
            assert l == 0 and c == 1
            assert len(tail) == 2 * (r.gen[d] - r.gen[a])
            assert all(r.specie.is_ancestor(x, d) for x, _ in tail)
            assert all(e == r.pcap[x] - 1 for x, e in tail)
            assert r.specie.is_ancestor_or_self(a, d) and (d == a or r.specie.paternal(a, d))


def test_clover_pivot_recursion():
    # v_i = ∂_i + t_i^(top) t_{y_i}^(top) v_{i+1} with y the partner of the a-fly
    sp = specie("clover", 4)
    r = DPRing(sp, ExponentTuple.uniform(sp, [(2, 1)] * 5), 3, 4)
    piv = PivotSet(r, 4)
    for n in range(3):
        a, b, _ = sp.roles(n)
        a1 = sp.roles(n + 1)[0]
        assert sp.parents(a1) == (a, b)
        expected = Derivation.partial(r, 4, a) + piv.virtual(a1).times(
            r.mono({a: r.pcap[a] - 1, b: r.pcap[b] - 1}))
        assert piv.virtual(a) == expected


def test_actual_base_case_and_clover_equality():
    r = ring("clover", 2, 4)
    piv = PivotSet(r, 4)
    for a in range(3):
        assert piv.actual(a) == piv.virtual(a)
    for n in range(1, 4):
        a = r.specie.roles(n)[0]
        assert piv.actual(a) == piv.virtual(a)


def test_actual_pivot_wrapper():
    r = ring("clover", 2, 2)
    assert actual_pivot(r, 3, 2) == PivotSet(r, 2).actual(3)


@pytest.mark.parametrize("kind,p,depth", [("clover", 2, 3), ("clover", 3, 3), ("clover", 2, 4),
                                          ("wild", 2, 2), ("wild", 3, 2)])
def test_suite_passes(kind, p, depth):
    report = verify_suite(ring(kind, p, depth), depth)
    failing = [(x.relation, x.counterexample) for x in report.results if x.status == "fail"]
    assert report.passed, failing


def test_suite_checks_each_relation_nontrivially():
    report = verify_suite(ring("clover", 2, 3), 3)
    assert {x.relation for x in report.results} == set(CHECKS)
    assert all(x.checks > 0 for x in report.results)


def test_negative_control_detects_deleted_term():
    r = ring("clover", 2, 3)
    piv = PivotSet(r, 3)
    a = 0
    v = piv.virtual(a)
    victim = max(v.terms)
    broken = Derivation._raw(r, 3, {k: c for k, c in v.terms.items() if k != victim})
    piv.override(a, broken)
    report = verify_suite(r, 3, ["vap"], pivots=piv)
    res = report.get("vap")
    assert res.status == "fail"
    assert res.counterexample


def test_suite_requires_depth_two():
    with pytest.raises(ValueError):
        verify_suite(ring("clover", 2, 1), 1)


def test_report_serializes():
    d = verify_suite(ring("clover", 2, 2), 2, ["vap"]).as_dict()
    assert d["passed"] is True
    assert d["results"][0]["relation"] == "vap"


def test_pivots_restrict_across_depths():
    r = ring("clover", 3, 4)
    deep, shallow = PivotSet(r, 4), PivotSet(r, 3)
    for a in range(r.specie.num_flies(3)):
        assert restrict(deep.virtual(a), 3) == shallow.virtual(a)
    x = bracket(deep.virtual(0), deep.virtual(1))
    assert restrict(x, 3) == bracket(shallow.virtual(0), shallow.virtual(1))
