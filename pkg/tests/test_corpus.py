import pytest

from telescoper.corpus import (
    EXAMPLES,
    example,
    normalize_operator,
    operators_match,
    pipeline_timings,
    run_example,
    same_up_to_constant,
)
from telescoper.polykernel import Ring

P = Ring(("n",))
n = P.gens()[0]


def test_seven_examples_with_unique_keys():
    assert [e.key for e in EXAMPLES] == list(range(1, 8))
    assert [e.key for e in EXAMPLES if e.slow] == [5]


def test_lookup_by_name_and_number():
    assert example("Carlitz (1968)").key == 2
    assert example("4").key == 4
    with pytest.raises(KeyError):
        example(99)


@pytest.mark.parametrize("ex", EXAMPLES, ids=lambda e: str(e.key))
def test_reference_data_parses(ex):
    F = ex.term
    assert F.rec_var == ex.rec_var
    if ex.operator is not None:
        assert len(ex.golden_operator()) == ex.order + 1
    for pair in (ex.estden, ex.theorem, ex.reduced):
        if pair:
            assert all(not ex.poly(s).is_zero() for s in pair)


def test_normalize_operator_scaling_and_sign():
    ops = [4 * n + 6, -(5 * n + 8), n + 2]
    scaled = [c * (-6) * (n + 3) for c in ops]
    assert normalize_operator(scaled) == ops


def test_normalize_operator_rational_content():
    assert normalize_operator([n / 2, P.one() / 3]) == [3 * n, 2 * P.one()]


def test_normalize_zero_operator():
    with pytest.raises(ValueError):
        normalize_operator([P.zero(), P.zero()])


def test_operators_match_needs_same_order():
    assert not operators_match([n + 1], [n + 1, n])
    assert operators_match([2 * n + 2, 2 * n], [n + 1, n])


def test_same_up_to_constant():
    assert same_up_to_constant(-3 * (n + 1), n + 1)
    assert not same_up_to_constant(n + 1, n + 2)
    assert same_up_to_constant(P.zero(), P.zero())


@pytest.mark.parametrize("key", [1, 4])
def test_run_example_all_checks(key):
    res = run_example(example(key), trials=10)
    assert res.ok, res.checks
    assert res.checks["symbolic"] and res.checks["numeric"]
    d = res.to_dict()
    assert d["key"] == key and d["ok"]


def test_support_rule_uses_parameters():
    rule = example(3).support_rule()
    assert rule({"n": 4, "m": 2}) == {"i": (0, 2), "j": (0, 4)}


def test_pipeline_timings_terminate():
    t = pipeline_timings(example(1))
    assert set(t) == {"reduced", "estden", "theorem"}
    assert all(v is not None and v >= 0 for v in t.values())
