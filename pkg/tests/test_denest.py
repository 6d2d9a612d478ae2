import time

import pytest

from telescoper.corpus import EXAMPLES, example, same_up_to_constant
from telescoper.denest import estden, only_in, reduction_candidates, split_known, theorem_bound
from telescoper.polykernel import Ring


def test_estden_andrews_paule():
    ex = example(1)
    t0 = time.perf_counter()
    est = estden(ex.term)
    assert time.perf_counter() - t0 < 5
    assert same_up_to_constant(est.g1, ex.poly(ex.estden[0]))
    assert same_up_to_constant(est.g2, ex.poly(ex.estden[1]))


def test_estden_carlitz():
    ex = example(2)
    est = estden(ex.term)
    assert same_up_to_constant(est.g1, ex.poly(ex.estden[0]))
    assert same_up_to_constant(est.g2, ex.poly(ex.estden[1]))


def test_estden_factor_lists_multiply_back():
    est = estden(example(1).term)
    for g, fl in ((est.g1, est.factors1), (est.g2, est.factors2)):
        prod = g.ring.one()
        for p, m in fl:
            prod = prod * p**m
        assert same_up_to_constant(prod, g)


def test_theorem_bound_andrews_paule():
    ex = example(1)
    t0 = time.perf_counter()
    b = theorem_bound(ex.term)
    assert time.perf_counter() - t0 < 10
    assert same_up_to_constant(b.G1, ex.poly(ex.theorem[0]))
    assert same_up_to_constant(b.G2, ex.poly(ex.theorem[1]))


def test_theorem_bound_is_multiple_of_estimate():
    F = example(1).term
    est, b = estden(F), theorem_bound(F)
    from telescoper.polykernel import exact_div

    exact_div(b.G1, est.g1)
    exact_div(b.G2, est.g2)


@pytest.mark.parametrize("ex", EXAMPLES, ids=lambda e: str(e.key))
def test_w2_variants_agree_up_to_constant(ex):
    a = estden(ex.term, "algorithm")
    b = estden(ex.term, "theorem")
    assert same_up_to_constant(a.g2, b.g2)


def test_bad_w2_variant():
    with pytest.raises(ValueError):
        estden(example(1).term, "other")


@pytest.mark.parametrize("ex", [e for e in EXAMPLES if e.reduced], ids=lambda e: str(e.key))
def test_reported_reduced_pair_is_a_candidate(ex):
    est = estden(ex.term)
    pairs = reduction_candidates(est.g1, est.g2, est.factors1, est.factors2, ex.term.sum_vars)
    want = tuple(ex.poly(s).unit_normal() for s in ex.reduced)
    assert want in pairs


def test_candidates_end_with_unreduced_pair():
    est = estden(example(4).term)
    pairs = reduction_candidates(est.g1, est.g2, est.factors1, est.factors2, ("i", "j"))
    assert pairs[-1] == (est.g1.unit_normal(), est.g2.unit_normal())
    assert len(set(pairs)) == len(pairs)


def test_candidate_order_squares_first():
    ex = example(1)
    est = estden(ex.term)
    pairs = reduction_candidates(est.g1, est.g2, est.factors1, est.factors2, ("i", "j"))
    # first candidate drops the squared i+1 factor of g2
    assert same_up_to_constant(pairs[0][1], ex.poly("(2*n-2*i+1)*(n-i+1)"))
    assert same_up_to_constant(pairs[0][0], ex.poly("(n-i+1)*(j+1)^2"))


def test_candidates_without_factor_lists():
    R = Ring(("n", "i", "j"))
    n, i, j = R.gens()
    pairs = reduction_candidates((i + 1) * (j + 1), (i + 1) ** 2, sum_vars=("i", "j"))
    assert pairs[-1] == (((i + 1) * (j + 1)).unit_normal(), ((i + 1) ** 2).unit_normal())


def test_only_in():
    R = Ring(("n", "i", "j"))
    n, i, j = R.gens()
    f = (n + 1) * (i + 2) * (j + 3) * (i + j)
    assert only_in(f, "i", "j") == i + 2


def test_split_known_leaves_remainder():
    R = Ring(("n", "i", "j"))
    n, i, j = R.gens()
    fl = dict(split_known((i + 1) ** 2 * (i * j + 1), [i + 1]))
    assert fl[(i + 1).unit_normal()] == 2
