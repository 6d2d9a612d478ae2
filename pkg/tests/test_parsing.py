import pytest

from telescoper.hyperterm import Binomial, Factorial, Geometric
from telescoper.parsing import ParseError, parse_expression, parse_linear, parse_polynomial, parse_term
from telescoper.polykernel import Ring

AP = "binom(i+j,i)^2*binom(4*n-2*i-2*j,2*n-2*i)"
PWZ = "(-1)^(n+r+s)*binom(n,r)*binom(n,s)*binom(n+s,s)*binom(n+r,r)*binom(2*n-r-s,n)"


def test_andrews_paule_atoms():
    F = parse_term(AP, "n", ("i", "j"))
    assert [type(a) for a in F.atoms] == [Binomial, Binomial]
    assert F.atoms[0].exponent == 2
    assert (F.atoms[1].top.coeff("n"), F.atoms[1].top.coeff("i")) == (4, -2)


def test_example7_geometric_sign():
    F = parse_term(PWZ, "n", ("r", "s"))
    g = F.atoms[0]
    assert isinstance(g, Geometric) and g.base == -1
    assert len(F.atoms) == 6


def test_ring_order_rec_params_sum():
    F = parse_term("binom(m-i+j,j)*binom(n,i)", "n", ("i", "j"), ("m",))
    assert F.ring.names == ("n", "m", "i", "j")


def test_unclosed_binomial_column():
    with pytest.raises(ParseError) as e:
        parse_term("binom(i+j", "n", ("i", "j"))
    assert (e.value.line, e.value.column) == (1, 10)


def test_undeclared_symbol():
    with pytest.raises(ParseError) as e:
        parse_term("binom(n,k)", "n", ("i", "j"))
    assert "undeclared" in e.value.message and e.value.column == 9


def test_nonlinear_argument():
    with pytest.raises(ParseError, match="not linear"):
        parse_term("binom(i*j,i)", "n", ("i", "j"))


def test_noninteger_linear_coefficient():
    with pytest.raises(ParseError, match="non-integer"):
        parse_term("binom(n/2,i)", "n", ("i", "j"))


def test_multiline_position():
    with pytest.raises(ParseError) as e:
        parse_term("binom(n,i)*\n  binom(n,j", "n", ("i", "j"))
    assert e.value.line == 2 and e.value.column == 12


def test_factorials_and_division():
    F = parse_term("fact(n+i)/fact(j)^2", "n", ("i", "j"))
    assert isinstance(F.atoms[1], Factorial) and F.atoms[1].exponent == -2


def test_polynomial_prefactor():
    F = parse_term("(2*n+1)*binom(n,i)*binom(n,j)", "n", ("i", "j"))
    assert str(F.prefactor) == "2*n + 1"


def test_dividing_by_polynomial_rejected():
    with pytest.raises(ParseError):
        parse_term("binom(n,i)/(n+1)", "n", ("i", "j"))


def test_rational_geometric_base():
    F = parse_term("(1/2)^(i)*binom(n,j)", "n", ("i", "j"))
    assert F.atoms[0].base == pytest.approx(0.5)


def test_parse_polynomial_factored_equals_expanded():
    R = Ring(("n", "i", "j"))
    assert parse_polynomial("(2*n-2*i+1)*(1+j)^2", R) == parse_polynomial(
        "2*n*j^2 - 2*i*j^2 + 4*n*j - 4*i*j + j^2 + 2*n - 2*i + 2*j + 1", R
    )


def test_power_star_star_alias():
    R = Ring(("x",))
    assert parse_polynomial("x**3", R) == parse_polynomial("x^3", R)


def test_parse_linear():
    R = Ring(("n", "i"))
    f = parse_linear("2*n - i + 3", R)
    assert f.coeff("n") == 2 and f.coeff("i") == -1 and f.constant == 3


def test_expression_value():
    e = parse_expression("(2*n+1)*binom(2*n,n)^2", ["n"])
    assert [e.value({"n": k}) for k in range(3)] == [1, 12, 180]


def test_trailing_garbage():
    with pytest.raises(ParseError, match="unexpected"):
        parse_term("binom(n,i) binom(n,j)", "n", ("i", "j"))


def test_bad_character():
    with pytest.raises(ParseError) as e:
        parse_term("binom(n,i)$", "n", ("i", "j"))
    assert e.value.column == 11
