import math

import pytest
from hypothesis import given, strategies as st

from droso.dpring import DPRing, ExponentTuple
from droso.grading import Grading
from droso.growth import (BudgetExceeded, GrowthTable, TupleGenerator, bound_overlay, cut_compare,
                          enumerate_growth, fn_independence, gk_fit, iterated_log, oracle_growth,
                          overlay_lambda, overlay_mu, q_dimension_fit, span_definition_growth,
                          stabilize_depth, tuple_kappa, tuple_q_kappa)
from droso.species import Wild, new_specie

from helpers import ring, specie


# ---- tuples ------------------------------------------------------------------


def test_tuple_kappa_examples():
    assert tuple_kappa(0.5, 0) == (1, 1)
    assert tuple_kappa(0.5, 3) == (4, 1)
    assert tuple_kappa(1 / 3, 1) == (4, 1)
    assert tuple_kappa(1 / 3, 2) == (9, 1)
    with pytest.raises(ValueError):
        tuple_kappa(1.0, 2)


def test_tuple_q_kappa_examples():
    assert tuple_q_kappa(1, 1.0, 2, 0) == (1, 1)
    assert tuple_q_kappa(1, math.log(4), 2, 1) == (20, 1)


@given(st.integers(1, 2), st.floats(0.5, 3.0), st.sampled_from([2, 3]), st.integers(1, 4))
def test_tuple_q_kappa_partial_sums(q, kappa, p, n):
    lam = math.log(p * p) / kappa
    x = lam * (n + 2)
    for _ in range(q):
        if x > 27:
            return  # beyond exact float integers
        x = math.exp(x)
    if x > 1e12 or abs(x - round(x)) < 1e-6:
        return  # float reference too coarse here
    total = sum(tuple_q_kappa(q, kappa, p, j)[0] for j in range(n + 1))
    assert total == math.floor(x) + 1


def test_tuple_q_kappa_degenerate():
    with pytest.raises(ValueError, match="S_2"):
        tuple_q_kappa(1, 100.0, 2, 2)


def test_tuple_generator_builds_uniform_caps():
    sp = specie("clover", 3)
    t = TupleGenerator("kappa", kappa=0.5).build(sp)
    a = sp.roles(3)[0]
    assert t.cap(a) == 4 and t.cap(sp.roles(3)[1]) == 1
    assert TupleGenerator("custom", values=((1, 1), (2, 1))).describe() == "custom:1,1;2,1"
    with pytest.raises(ValueError):
        TupleGenerator("custom", values=((1, 1),)).build(sp)


# ---- enumeration ---------------------------------------------------------------


def test_gamma_starts_with_generators():
    for kind in ("clover", "wild"):
        t = enumerate_growth(ring(kind, 2, 2), 4, 2)
        assert t.gamma[0] == 3


@pytest.mark.parametrize("kind,p,depth,N", [("clover", 2, 3, 8), ("clover", 3, 2, 8),
                                            ("wild", 2, 2, 6), ("wild", 3, 2, 6)])
def test_enumeration_matches_matrix_oracle(kind, p, depth, N):
    r = ring(kind, p, depth)
    assert enumerate_growth(r, N, depth).dims == oracle_growth(r, N, depth)


@pytest.mark.parametrize("kind,depth", [("clover", 3), ("wild", 2)])
def test_enumeration_matches_span_definition(kind, depth):
    r = ring(kind, 2, depth)
    assert enumerate_growth(r, 8, depth).gamma == span_definition_growth(r, 8, depth)


def test_depth_monotone():
    r = ring("clover", 2, 4)
    tables = [enumerate_growth(r, 24, d).dims for d in range(5)]
    for lo, hi in zip(tables, tables[1:]):
        assert all(a <= b for a, b in zip(lo, hi))


def test_clover_dims_positive():
    r = ring("clover", 2, 5)
    assert all(d > 0 for d in enumerate_growth(r, 64, 5).dims)


def test_basis_rows_are_homogeneous_and_ancestral():
    r = ring("clover", 3, 3)
    table, basis = enumerate_growth(r, 12, 3, keep_basis=True, check_grading=True)
    g = Grading(r)
    for n, rows in basis.rows.items():
        assert len(rows) == table.dims[n - 1]
        for w, md in zip(rows, basis.multidegrees[n]):
            assert w.is_ancestral()
            assert g.is_homogeneous(w, md)
            assert sum(md) == n


def test_stabilize_depth_examples():
    depth, table = stabilize_depth(ring("wild", 2, 2), 1)
    assert depth == 0 and table.status == "stable" and table.dims == [3]
    r = ring("wild", 3, 2)
    depth, table = stabilize_depth(r, 6)
    assert table.dims == oracle_growth(r, 6, 2)


def test_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_growth(ring("wild", 2, 2), 8, 2, max_rows=10)


def test_table_rows_and_from_gamma():
    t = GrowthTable([3, 2, 4], 2, 2, "stable")
    assert t.rows() == [(1, 3, 3, "stable"), (2, 2, 5, "stable"), (3, 4, 9, "stable")]
    assert GrowthTable.from_gamma([3, 5, 9]).dims == [3, 2, 4]
    assert t.gamma_at(0) == 0 and t.gamma_at(3) == 9


# ---- fits and overlays ---------------------------------------------------------


def test_gk_fit_synthetic():
    n = range(1, 201)
    assert gk_fit(list(n)).slope == pytest.approx(1.0, abs=0.01)
    assert gk_fit([k * k for k in n]).slope == pytest.approx(2.0, abs=0.01)
    with pytest.raises(ValueError):
        gk_fit(list(range(1, 10)))


def test_q_dimension_fit_synthetic():
    n = range(1, 401)
    assert q_dimension_fit([k ** 3 for k in n], 2) == pytest.approx(3.0, abs=0.01)
    # γ = exp(n^β) with β = 1/2 gives α = β / (1 - β) = 1
    assert q_dimension_fit([math.exp(math.sqrt(k)) for k in n], 3) == pytest.approx(1.0, abs=0.01)
    # γ = exp(n / (ln n)^(1/α)) with α = 2
    gamma = [math.exp(k / iterated_log(k, 1) ** 0.5) for k in n]
    assert q_dimension_fit(gamma, 4) == pytest.approx(2.0, abs=0.05)
    assert q_dimension_fit(list(n), 1) == 400


def test_overlay_constants():
    assert overlay_lambda(2) == pytest.approx(0.585, abs=1e-3)
    assert overlay_lambda(3) == pytest.approx(1.3219, abs=1e-4)
    for p in (2, 3, 5):
        assert 1 / overlay_mu(p) == pytest.approx(1 + overlay_lambda(p))
    lo, hi = bound_overlay(2, 3, 100, C=1.0, q=1, kappa=1.0)
    assert lo == pytest.approx(100 * math.log(100))
    assert hi == pytest.approx(math.exp(100 / math.log(100) ** overlay_lambda(2)))
    with pytest.raises(ValueError):
        bound_overlay(2, 3, 2)


# ---- cut comparison and F_n independence ---------------------------------------


def test_cut_compare_degenerate_at_zero():
    sp = specie("clover", 3)
    rep = cut_compare(sp, ExponentTuple.trivial(sp), 2, 0, 8, 3)
    assert rep.degenerate and rep.q == 1
    # H = L, so the strict inequality fails everywhere
    assert len(rep.failures()) == len(rep.points)


def test_cut_compare_clover():
    sp = specie("clover", 5)
    rep = cut_compare(sp, ExponentTuple.trivial(sp), 2, 1, 64, 5)
    assert rep.q == 3 and rep.holds


def test_cut_compare_refuses_non_uniform():
    sp = specie("clover", 2)
    caps = {f: 1 for f in range(sp.num_flies())}
    caps.update({0: 1, 1: 2, 2: 3})
    with pytest.raises(ValueError, match="uniform"):
        cut_compare(sp, ExponentTuple.from_caps(sp, caps), 2, 1, 8, 2)


@pytest.mark.parametrize("p", [2, 3])
def test_fn_independence_small(p):
    sp = new_specie(4)
    sp.extend(Wild())
    sp.extend(Wild())
    for n in (1, 2):
        r = DPRing(sp, ExponentTuple.trivial(sp, n), p, n)
        rank, count = fn_independence(r, list(range(2 ** n)), n)
        assert rank == count
