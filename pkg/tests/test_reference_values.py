"""Small worked values for each operation, checked against hand computation
or an independent route."""

import random
from dataclasses import replace

import pytest
from helpers import solved

from telescoper.certify import (
    SingleSum,
    identity_numeric_check,
    sum_annihilation_check,
    verify_certificate,
    verify_numeric,
)
from telescoper.corpus import EXAMPLES, example, same_up_to_constant
from telescoper.denest import estden, reduction_candidates, theorem_bound
from telescoper.hyperterm import EvaluationError, eval_sum, eval_term, quotient_set, shift_quotient
from telescoper.parsing import parse_expression, parse_term
from telescoper.polykernel import (
    Polynomial,
    PolynomialError,
    RationalFunction,
    RFMatrix,
    Ring,
    content_primitive,
    exact_div,
    max_factor_free_of,
    nullspace,
    poly_gcd,
    shift_poly,
)
from telescoper.telescope import (
    Certificate,
    _particular_solution,
    _probe,
    assemble_system,
)

R = Ring(("n", "i", "j"))
n, i, j = R.gens()
AP = example(1)


# -- polynomial kernel ------------------------------------------------------------


def test_gcd_with_zero_is_unit_normal():
    assert poly_gcd(-3 * i - 3, R.zero()) == i + 1


def test_andrews_paule_denominator_gcd():
    qs = quotient_set(AP.term, 0)
    common = (4 * n - 2 * i - 2 * j) * (4 * n - 2 * i - 2 * j - 1)
    assert same_up_to_constant(qs.s1, (i + 1) ** 2 * common)
    assert same_up_to_constant(qs.s2, (j + 1) ** 2 * common)
    u = poly_gcd(qs.s1, qs.s2)
    assert same_up_to_constant(u, common)
    assert same_up_to_constant(exact_div(qs.s1, u), (i + 1) ** 2)


def test_max_factor_values():
    f = (2 * n - 2 * i) * (2 * n - 2 * i - 1) * (i + j + 1) ** 2 * (j + 1) ** 2
    assert same_up_to_constant(max_factor_free_of(f, ["n", "i"]), (2 * n - 2 * i) * (2 * n - 2 * i - 1))
    # cross-check by the other route: g = gcd(f, f with j shifted) keeps only j-free parts after repeating
    g = f
    for a in (1, 2, 3):
        g = poly_gcd(g, shift_poly(f, "j", a))
    assert same_up_to_constant(g, (2 * n - 2 * i) * (2 * n - 2 * i - 1))
    assert max_factor_free_of(i + 1, ["j"]).is_constant()
    assert max_factor_free_of((j + 1) ** 2, ["j"]) == (j + 1) ** 2


def test_shift_values():
    assert shift_poly(i**2, "i", 1) == i**2 + 2 * i + 1
    assert shift_poly(2 * n - 2 * i + 1, "i", -1) == 2 * n - 2 * i + 3
    assert shift_poly(-n + i - 1 + j, "n", 2) == -n + i - 3 + j


def test_exact_division_values():
    assert exact_div((i + 1) ** 2 * (j + 1), i + 1) == (i + 1) * (j + 1)
    with pytest.raises(PolynomialError):
        exact_div(i + 1, j + 1)


def test_nullspace_values():
    P = Ring(("n",))
    m = P.gens()[0]
    assert nullspace(RFMatrix(P, [[1, 0], [0, 1]])) == []
    (v,) = nullspace(RFMatrix(P, [[m, m**2]]))
    ratio = v[0] / v[1]
    assert ratio == RationalFunction(-m, P.one())


def test_content_values():
    c, p = content_primitive(2 * n * i + 2 * n, ["i"])
    assert same_up_to_constant(c, n) and same_up_to_constant(p, i + 1) and c * p == 2 * n * i + 2 * n
    c, p = content_primitive(i + n, ["i"])
    assert c.is_constant() and same_up_to_constant(p, i + n)
    P = Ring(("n",))
    m = P.gens()[0]
    # the carlitz operator coefficients are coprime
    assert poly_gcd(poly_gcd(4 * m + 6, -(5 * m + 8)), m + 2).is_constant()


# -- quotients and values ---------------------------------------------------------


def test_andrews_paule_i_quotient():
    q = shift_quotient(AP.term, "i", 1)
    want = RationalFunction(
        (i + j + 1) ** 2 * (2 * n - 2 * i) * (2 * n - 2 * i - 1),
        (i + 1) ** 2 * (4 * n - 2 * i - 2 * j) * (4 * n - 2 * i - 2 * j - 1),
    )
    assert q == want
    rng = random.Random(1)
    for _ in range(20):
        a, b = rng.randint(0, 6), rng.randint(0, 6)
        m = rng.randint(a + b + 3, 20)
        pt = {"n": m, "i": a, "j": b}
        assert want.evaluate(pt) == eval_term(AP.term, dict(pt, i=a + 1)) / eval_term(AP.term, pt)


def test_geometric_quotient_and_zero_shift():
    F = parse_term("(-1)^(i+j)", "n", ("i", "j"))
    assert shift_quotient(F, "i", 1) == RationalFunction(-R.one(), R.one())
    assert shift_quotient(AP.term, "n", 0) == RationalFunction(R.one(), R.one())


def test_point_values():
    assert eval_term(AP.term, {"n": 1, "i": 1, "j": 1}) == 4
    assert eval_term(AP.term, {"n": 0, "i": 0, "j": 0}) == 1
    with pytest.raises(EvaluationError):
        eval_term(parse_term("fact(i-2)", "n", ("i", "j")), {"n": 0, "i": 0, "j": 0})


def test_sum_values():
    assert eval_sum(AP.term, {"i": (0, 1), "j": (0, 1)}, {"n": 1}) == 12
    assert eval_sum(AP.term, {"i": (0, 0), "j": (0, 0)}, {"n": 0}) == 1
    P = Ring(("n",))
    rhs = SingleSum(parse_expression("binom(2*k,k)", ["n", "k"]), "k", P.zero(), P.parse("n"))
    assert rhs.value({"n": 2}) == 9


# -- denominators -----------------------------------------------------------------


def test_estden_reciprocal_factorials():
    F = parse_term("fact(i)^(-1)*fact(j)^(-1)", "n", ("i", "j"))
    est = estden(F)
    assert same_up_to_constant(est.g1, j + 1)
    assert same_up_to_constant(est.g2, i + 1)


def test_theorem_bound_v1_trivial():
    # the i-quotient of binom(n,j) is 1, so r1*s2' has no i
    F = parse_term("binom(n,j)", "n", ("i", "j"))
    assert theorem_bound(F).v1.is_constant()


def _factors(fl):
    return sorted((str(p), m) for p, m in fl)


def test_theorem_bound_carlitz_regression():
    b = theorem_bound(example(2).term)
    assert _factors(b.factors1) == [("i + j", 1), ("j + 1", 2), ("n - i - j + 1", 2), ("n - j", 1)]
    assert _factors(b.factors2) == [("i + 1", 2), ("i + j", 1), ("n - i", 1), ("n - i - j + 1", 2)]
    for part, rhs in (("v1", "rhs_v1"), ("v2", "rhs_v2"), ("v4", "rhs_v4"), ("u2", "rhs_u2"), ("w2", "rhs_w2")):
        exact_div(getattr(b, rhs), getattr(b, part))


def test_reduced_pairs_listed():
    for key in (1, 2):
        ex = example(key)
        est = estden(ex.term)
        pairs = reduction_candidates(est.g1, est.g2, est.factors1, est.factors2, ("i", "j"))
        assert tuple(ex.poly(s).unit_normal() for s in ex.reduced) in pairs


def test_unit_denominators_single_candidate():
    assert reduction_candidates(R.one(), R.one(), sum_vars=("i", "j")) == [(R.one(), R.one())]


# -- systems ----------------------------------------------------------------------


def test_andrews_paule_reduced_system_gives_2n_plus_1():
    g1, g2 = (AP.poly(s) for s in AP.reduced)
    system = assemble_system(AP.term, 0, g1, g2, 4, 3)
    structure = _probe(system, random.Random(0))
    vec = _particular_solution(system, structure, 0)
    P = system.param_ring
    a0 = Polynomial(P, vec[0])
    assert same_up_to_constant(a0, P.parse("2*n + 1"))


def test_smallest_system_shape():
    one = R.one()
    s = assemble_system(AP.term, 0, one, one, 0, 0)
    assert s.shape[1] == 3 and s.n_a == 1


# -- verification -----------------------------------------------------------------


def _printed(key):
    ex = example(key)
    F, cert = solved(key)
    pr = cert.coeffs[0].ring
    coeffs = tuple(c.to_ring(pr) for c in ex.golden_operator())
    return F, replace(cert, coeffs=coeffs, R1=ex.rational(ex.R1), R2=ex.rational(ex.R2))


def test_printed_andrews_paule_certificate_verifies():
    F, cert = _printed(1)
    assert verify_certificate(F, cert).status == "pass"
    assert verify_numeric(F, cert, 20, 7).status == "pass"


def test_printed_certificate_with_perturbed_r1_rejected():
    F, cert = _printed(1)
    bad = replace(cert, R1=RationalFunction(cert.R1.num + 1, cert.R1.den))
    v = verify_certificate(F, bad)
    assert v.status == "fail" and v.residual not in (None, "0")
    assert verify_numeric(F, bad, 20, 7).status == "fail"


def test_printed_petkovsek_operator_annihilates():
    ex = example(7)
    F, cert = solved(7)
    pr = cert.coeffs[0].ring
    printed = replace(cert, coeffs=tuple(c.to_ring(pr) for c in ex.golden_operator()))
    assert sum_annihilation_check(F, printed, (0, 6)).status == "pass"


def test_shift_difference_on_constant_sum():
    F = parse_term("binom(2,i)*binom(2,j)", "n", ("i", "j"))
    P = Ring(("n",))
    zero = RationalFunction(R.zero(), R.one())
    cert = Certificate("n", (-P.one(), P.one()), zero, zero, R.one(), R.one(), R.one(), R.zero(), R.zero())
    box = lambda pt: {"i": (0, 2), "j": (0, 2)}  # noqa: E731
    assert sum_annihilation_check(F, cert, (0, 5), box).status == "pass"


@pytest.mark.parametrize("ex", EXAMPLES, ids=lambda e: str(e.key))
def test_identities_at_zero(ex):
    v = identity_numeric_check(ex.term, ex.rhs_spec(), (0, 0), ex.support_rule(), ex.param_values or None)
    assert v.status == "pass", v.data
