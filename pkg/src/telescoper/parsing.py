"""Parsers for polynomial text and hypergeometric term expressions.

Term grammar::

    term     := factor (('*' | '/') factor)*
    factor   := atom ('^' sint)?
    atom     := 'binom(' lin ',' lin ')' | 'fact(' lin ')'
              | '(' rational ')' '^' '(' lin ')'
              | '(' poly ')' | integer | symbol

Errors carry 1-based line and column numbers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .hyperterm import Binomial, Expression, Factorial, Geometric, HyperTerm, LinearForm
from .polykernel import Polynomial, Ring

__all__ = ["ParseError", "parse_polynomial", "parse_term", "parse_linear", "parse_expression"]


class ParseError(ValueError):
    """Syntax or symbol error with a source position."""

    def __init__(self, message: str, line: int, column: int, source: str = ""):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column
        self.source = source


@dataclass(frozen=True)
class Token:
    kind: str  # 'int', 'name', 'op', 'eof'
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^(),]))")


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while True:
        while pos < len(source) and source[pos].isspace():
            if source[pos] == "\n":
                line += 1
                line_start = pos + 1
            pos += 1
        if pos >= len(source):
            tokens.append(Token("eof", "", line, pos - line_start + 1))
            return tokens
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col, source)
        if m.group(1):
            tokens.append(Token("int", m.group(1), line, col))
        elif m.group(2):
            tokens.append(Token("name", m.group(2), line, col))
        else:
            text = "^" if m.group(3) == "**" else m.group(3)
            tokens.append(Token("op", text, line, col))
        pos = m.end()


class _Parser:
    def __init__(self, source: str, symbols: Iterable[str]):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0
        self.symbols = set(symbols)

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column, self.source)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.tok
        if not self.accept(text):
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            self.error(f"expected {text!r}, found {found}")
        return tok

    def expect_eof(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")

    def symbol(self) -> str:
        tok = self.tok
        if tok.kind != "name":
            self.error("expected a symbol")
        if tok.text not in self.symbols:
            self.error(f"undeclared symbol {tok.text!r}")
        self.pos += 1
        return tok.text

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "int":
            self.error("expected an integer")
        self.pos += 1
        return int(tok.text)

    def signed_int(self) -> int:
        if self.accept("("):
            v = self.signed_int()
            self.expect(")")
            return v
        if self.accept("-"):
            return -self.integer()
        self.accept("+")
        return self.integer()

    # -- generic polynomial expressions over Q (sum/product/power) --

    def poly_expr(self, ring: Ring) -> Polynomial:
        neg = False
        if self.accept("-"):
            neg = True
        else:
            self.accept("+")
        acc = self.poly_product(ring)
        if neg:
            acc = -acc
        while True:
            if self.accept("+"):
                acc = acc + self.poly_product(ring)
            elif self.accept("-"):
                acc = acc - self.poly_product(ring)
            else:
                return acc

    def poly_product(self, ring: Ring) -> Polynomial:
        acc = self.poly_power(ring)
        while True:
            if self.accept("*"):
                acc = acc * self.poly_power(ring)
            elif self.tok.kind == "op" and self.tok.text == "/":
                tok = self.tok
                self.pos += 1
                d = self.poly_power(ring)
                if not d.is_constant() or d.is_zero():
                    self.error("division only by nonzero constants", tok)
                acc = acc / d.constant_value()
            else:
                return acc

    def poly_power(self, ring: Ring) -> Polynomial:
        base = self.poly_atom(ring)
        if self.accept("^"):
            tok = self.tok
            e = self.signed_int()
            if e < 0:
                self.error("negative exponent in a polynomial", tok)
            base = base**e
        return base

    def poly_atom(self, ring: Ring) -> Polynomial:
        tok = self.tok
        if tok.kind == "int":
            self.pos += 1
            return ring.const(int(tok.text))
        if tok.kind == "name":
            name = self.symbol()
            if name not in ring:
                self.error(f"symbol {name!r} not allowed here", tok)
            return ring.gen(name)
        if self.accept("("):
            inner = self.poly_expr(ring)
            self.expect(")")
            return inner
        if self.accept("-"):
            return -self.poly_power(ring)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        self.error(f"expected an expression, found {found}")

    # -- linear forms --

    def linear(self, ring: Ring) -> LinearForm:
        start = self.tok
        p = self.poly_expr(ring)
        if p.total_degree() > 1:
            self.error("argument is not linear", start)
        coeffs = {}
        constant = Fraction(0)
        for e, c in p.terms.items():
            if sum(e) == 0:
                constant = c
            else:
                coeffs[ring.names[e.index(1)]] = c
        bad = [c for c in [constant, *coeffs.values()] if c.denominator != 1]
        if bad:
            self.error("non-integer coefficient in linear form", start)
        return LinearForm.make({v: int(c) for v, c in coeffs.items()}, int(constant))

    # -- hypergeometric terms --

    def term(self, ring: Ring):
        atoms: list = []
        pref = ring.one()
        atoms, pref = self.factor(ring, atoms, pref, sign=1)
        while True:
            if self.accept("*"):
                atoms, pref = self.factor(ring, atoms, pref, sign=1)
            elif self.accept("/"):
                atoms, pref = self.factor(ring, atoms, pref, sign=-1)
            else:
                return atoms, pref

    def factor(self, ring: Ring, atoms, pref, sign: int):
        tok = self.tok
        kind, payload = self.term_atom(ring)
        exponent = 1
        if self.accept("^"):
            exponent = self.signed_int()
            if exponent == 0:
                self.error("zero exponent", tok)
        exponent *= sign
        if kind == "poly":
            if exponent < 0:
                if not payload.is_constant():
                    self.error("polynomial factors cannot be divided by", tok)
                return atoms, pref * Fraction(payload.constant_value()) ** exponent
            return atoms, pref * payload**exponent
        if kind == "binom":
            atoms.append(Binomial(payload[0], payload[1], exponent))
        elif kind == "fact":
            atoms.append(Factorial(payload, exponent))
        else:
            base, form = payload
            atoms.append(Geometric(base, form, exponent))
        return atoms, pref

    def term_atom(self, ring: Ring):
        tok = self.tok
        if tok.kind == "name" and tok.text in ("binom", "fact") and self.peek().text == "(":
            self.pos += 2
            if tok.text == "binom":
                top = self.linear(ring)
                self.expect(",")
                bottom = self.linear(ring)
                self.expect(")")
                return "binom", (top, bottom)
            arg = self.linear(ring)
            self.expect(")")
            return "fact", arg
        if tok.kind == "op" and tok.text == "(":
            base = self._try_geometric(ring)
            if base is not None:
                return "geom", base
            self.pos += 1
            inner = self.poly_expr(ring)
            self.expect(")")
            return "poly", inner
        if tok.kind == "int":
            self.pos += 1
            return "poly", ring.const(int(tok.text))
        if tok.kind == "name":
            name = self.symbol()
            return "poly", ring.gen(name)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        self.error(f"expected a factor, found {found}")

    def _looks_geometric(self) -> bool:
        # '(' ['-'] int ['/' int] ')' '^' '('
        k = self.pos + 1
        texts = [t.text if t.kind == "op" else t.kind for t in self.tokens[k : k + 7]]
        if texts[:1] == ["-"]:
            texts = texts[1:]
        if texts[:1] != ["int"]:
            return False
        texts = texts[1:]
        if texts[:2] == ["/", "int"]:
            texts = texts[2:]
        return texts[:3] == [")", "^", "("]

    def _try_geometric(self, ring: Ring):
        if not self._looks_geometric():
            return None
        start = self.tok
        self.expect("(")
        sign = -1 if self.accept("-") else 1
        num = self.integer()
        den = self.integer() if self.accept("/") else 1
        self.expect(")")
        self.expect("^")
        self.expect("(")
        form = self.linear(ring)
        self.expect(")")
        if num == 0 or den == 0:
            self.error("geometric base must be a nonzero rational", start)
        return Fraction(sign * num, den), form


def parse_polynomial(source: str, ring: Ring) -> Polynomial:
    """Parse an expanded or factored polynomial over ``ring``'s variables."""
    p = _Parser(source, ring.names)
    out = p.poly_expr(ring)
    p.expect_eof()
    return out


def parse_linear(source: str, ring: Ring) -> LinearForm:
    p = _Parser(source, ring.names)
    out = p.linear(ring)
    p.expect_eof()
    return out


def parse_term(
    source: str,
    rec_var: str,
    sum_vars: Iterable[str],
    params: Iterable[str] = (),
) -> HyperTerm:
    """Parse a hypergeometric term given the symbol roles.

    >>> F = parse_term("binom(i+j,i)^2*binom(4*n-2*i-2*j,2*n-2*i)", "n", ("i", "j"))
    >>> len(F.atoms)
    2
    """
    sum_vars = tuple(sum_vars)
    params = tuple(params)
    ring = Ring((rec_var, *params, *sum_vars))
    p = _Parser(source, ring.names)
    atoms, pref = p.term(ring)
    p.expect_eof()
    return HyperTerm(tuple(atoms), rec_var, sum_vars, params, pref, source=source)


def parse_expression(source: str, variables: Iterable[str]) -> Expression:
    """Parse a term-grammar product over ``variables`` with no summation roles."""
    ring = Ring(tuple(variables))
    p = _Parser(source, ring.names)
    atoms, pref = p.term(ring)
    p.expect_eof()
    return Expression(tuple(atoms), pref, source=source)
