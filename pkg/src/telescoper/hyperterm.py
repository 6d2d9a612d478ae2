"""Hypergeometric terms built from binomial, factorial and geometric atoms.

A term is a polynomial prefactor times a product of atoms raised to
nonzero integer powers; every atom argument is an integer-linear form, so
shifting any variable by an integer changes each argument by an integer
and the shift quotient is a rational function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .polykernel import Polynomial, RationalFunction, Ring, poly_lcm

__all__ = [
    "EvaluationError",
    "LinearForm",
    "Binomial",
    "Factorial",
    "Geometric",
    "HyperTerm",
    "QuotientSet",
    "shift_quotient",
    "quotient_set",
    "eval_term",
    "eval_sum",
    "binomial_value",
    "Expression",
]


class EvaluationError(ValueError):
    """An atom has no value at the requested point."""


@dataclass(frozen=True)
class LinearForm:
    """``constant + sum(coeffs[v] * v)`` with integer coefficients."""

    coeffs: tuple[tuple[str, int], ...]
    constant: int = 0

    @classmethod
    def make(cls, coeffs: Mapping[str, int], constant: int = 0) -> "LinearForm":
        items = []
        for v, c in sorted(coeffs.items()):
            if int(c) != c:
                raise ValueError(f"non-integer coefficient {c} of {v}")
            if c:
                items.append((v, int(c)))
        if int(constant) != constant:
            raise ValueError(f"non-integer constant {constant}")
        return cls(tuple(items), int(constant))

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, var: str) -> int:
        for v, c in self.coeffs:
            if v == var:
                return c
        return 0

    def delta(self, offsets: Mapping[str, int]) -> int:
        """Change of the form's value under ``v -> v + offsets[v]``."""
        return sum(c * offsets.get(v, 0) for v, c in self.coeffs)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) - c
        return LinearForm.make(d, self.constant - other.constant)

    def value(self, point: Mapping[str, int]) -> int:
        return self.constant + sum(c * int(point[v]) for v, c in self.coeffs)

    def to_poly(self, ring: Ring) -> Polynomial:
        return ring.linear(dict(self.coeffs), self.constant)

    def __str__(self) -> str:
        out = ""
        for v, c in self.coeffs:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            sign = "-" if c < 0 else ("+" if out else "")
            out += sign + mag + v
        if not out:
            return str(self.constant)
        if self.constant:
            out += f"{self.constant:+d}"
        return out


@dataclass(frozen=True)
class Binomial:
    top: LinearForm
    bottom: LinearForm
    exponent: int = 1

    def __str__(self) -> str:
        s = f"binom({self.top},{self.bottom})"
        return s if self.exponent == 1 else f"{s}^({self.exponent})"


@dataclass(frozen=True)
class Factorial:
    arg: LinearForm
    exponent: int = 1

    def __str__(self) -> str:
        s = f"fact({self.arg})"
        return s if self.exponent == 1 else f"{s}^({self.exponent})"


@dataclass(frozen=True)
class Geometric:
    """``base ** (exponent * arg)``; base -1 encodes alternating signs."""

    base: Fraction
    arg: LinearForm
    exponent: int = 1

    def __str__(self) -> str:
        s = f"({self.base})^({self.arg})"
        return s if self.exponent == 1 else f"{s}^({self.exponent})"


Atom = Binomial | Factorial | Geometric


@dataclass(frozen=True)
class HyperTerm:
    """``prefactor * prod(atoms)`` with declared symbol roles.

    ``ring`` orders the variables as recurrence variable, parameters,
    then the two summation variables.
    """

    atoms: tuple[Atom, ...]
    rec_var: str
    sum_vars: tuple[str, str]
    params: tuple[str, ...] = ()
    prefactor: Polynomial | None = None
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.sum_vars) != 2:
            raise ValueError("exactly two summation variables are required")
        names = (self.rec_var, *self.params, *self.sum_vars)
        if len(set(names)) != len(names):
            raise ValueError(f"symbol roles overlap: {names}")
        for a in self.atoms:
            if a.exponent == 0:
                raise ValueError(f"zero exponent in atom {a}")
            if isinstance(a, Geometric) and a.base == 0:
                raise ValueError("geometric atom with base 0")
            used = _atom_symbols(a)
            if not used <= set(names):
                raise ValueError(f"undeclared symbols {sorted(used - set(names))} in {a}")
        if self.prefactor is None:
            object.__setattr__(self, "prefactor", self.ring.one())
        elif self.prefactor.ring is not self.ring:
            object.__setattr__(self, "prefactor", self.prefactor.to_ring(self.ring))
        if self.prefactor.is_zero():
            raise ValueError("zero prefactor")

    @property
    def ring(self) -> Ring:
        return Ring((self.rec_var, *self.params, *self.sum_vars))

    @property
    def param_ring(self) -> Ring:
        return Ring((self.rec_var, *self.params))

    @property
    def variables(self) -> tuple[str, ...]:
        return self.ring.names

    def __str__(self) -> str:
        parts = [str(a) for a in self.atoms]
        if self.prefactor != 1:
            parts.insert(0, f"({self.prefactor})")
        return "*".join(parts) or "1"


def _atom_symbols(a: Atom) -> frozenset[str]:
    if isinstance(a, Binomial):
        return a.top.symbols | a.bottom.symbols
    return a.arg.symbols


def _factorial_ratio(arg: Polynomial, step: int) -> tuple[list[Polynomial], list[Polynomial]]:
    """Factors of ``(arg+step)!/arg!`` as (numerator list, denominator list)."""
    if step > 0:
        return [arg + t for t in range(1, step + 1)], []
    if step < 0:
        return [], [arg - t for t in range(0, -step)]
    return [], []


def _atom_ratio(a: Atom, ring: Ring, offsets: Mapping[str, int]):
    num: list[Polynomial] = []
    den: list[Polynomial] = []
    const = Fraction(1)
    if isinstance(a, Geometric):
        const = a.base ** (a.exponent * a.arg.delta(offsets))
        return num, den, const
    if isinstance(a, Factorial):
        parts = [(a.arg, 1)]
    else:
        parts = [(a.top, 1), (a.bottom, -1), (a.top - a.bottom, -1)]
    for form, sign in parts:
        step = form.delta(offsets)
        if step == 0:
            continue
        n_, d_ = _factorial_ratio(form.to_poly(ring), step)
        if sign * a.exponent < 0:
            n_, d_ = d_, n_
        for _ in range(abs(a.exponent)):
            num.extend(n_)
            den.extend(d_)
    return num, den, const


def _cancel_lists(num: list[Polynomial], den: list[Polynomial]):
    rest = list(den)
    keep = []
    for f in num:
        for k, g in enumerate(rest):
            if f == g:
                del rest[k]
                break
        else:
            keep.append(f)
    return keep, rest


def shift_quotient(F: HyperTerm, var: str | Mapping[str, int], k: int = 1) -> RationalFunction:
    """``F(var + k) / F`` as a reduced rational function.

    ``var`` may also be a mapping of simultaneous offsets.
    """
    offsets = {var: k} if isinstance(var, str) else dict(var)
    ring = F.ring
    for v in offsets:
        if v not in ring:
            raise KeyError(f"{v!r} is not a declared variable")
    if not any(offsets.values()):
        return RationalFunction(ring.one())
    num: list[Polynomial] = []
    den: list[Polynomial] = []
    const = Fraction(1)
    for a in F.atoms:
        n_, d_, c = _atom_ratio(a, ring, offsets)
        num += n_
        den += d_
        const *= c
    num, den = _cancel_lists(num, den)
    p = F.prefactor
    top = ring.const(const) * p.shifts(offsets)
    bottom = p
    for f in num:
        top = top * f
    for g in den:
        bottom = bottom * g
    return RationalFunction(top, bottom)


@dataclass(frozen=True)
class QuotientSet:
    """Shift data of a term: summation-variable quotients and the recurrence-shift denominators."""

    r1: Polynomial
    s1: Polynomial
    r2: Polynomial
    s2: Polynomial
    q: tuple[RationalFunction, ...]
    d: Polynomial

    @property
    def order(self) -> int:
        return len(self.q)

    def numerators(self) -> list[Polynomial]:
        """``d * F(n+l)/F`` for l = 0..r (l = 0 gives ``d``)."""
        from .polykernel import exact_div

        out = [self.d]
        for ql in self.q:
            out.append(ql.num * exact_div(self.d, ql.den))
        return out


def quotient_set(F: HyperTerm, r: int) -> QuotientSet:
    if r < 0:
        raise ValueError("order must be nonnegative")
    i, j = F.sum_vars
    q1 = shift_quotient(F, i, 1)
    q2 = shift_quotient(F, j, 1)
    qs = tuple(shift_quotient(F, F.rec_var, l) for l in range(1, r + 1))
    d = F.ring.one()
    for ql in qs:
        d = poly_lcm(d, ql.den)
    return QuotientSet(q1.num, q1.den, q2.num, q2.den, qs, d.unit_normal())


# -- exact numeric evaluation --------------------------------------------------


def binomial_value(a: int, b: int) -> int:
    """``a(a-1)...(a-b+1)/b!`` for ``b >= 0`` (any integer ``a``), else 0."""
    if b < 0:
        return 0
    if a >= 0:
        return math.comb(a, b)
    # upper negation: C(a, b) = (-1)^b C(b - a - 1, b)
    return (-1) ** b * math.comb(b - a - 1, b)


def _atom_value(a: Atom, point: Mapping[str, int]) -> Fraction:
    if isinstance(a, Binomial):
        v = Fraction(binomial_value(a.top.value(point), a.bottom.value(point)))
        if v == 0 and a.exponent < 0:
            raise EvaluationError(f"{a} is zero at {dict(point)} but has a negative exponent")
        return v**a.exponent
    if isinstance(a, Factorial):
        m = a.arg.value(point)
        if m < 0:
            raise EvaluationError(f"factorial of negative integer {m} in {a} at {dict(point)}")
        return Fraction(math.factorial(m)) ** a.exponent
    e = a.exponent * a.arg.value(point)
    return Fraction(a.base) ** e


def eval_term(F: HyperTerm, point: Mapping[str, int]) -> Fraction:
    """Exact value of ``F`` at an integer point.

    Binomials follow the polynomial extension in the upper argument and vanish
    for a negative lower argument; factorials are defined for nonnegative
    arguments only.
    """
    missing = [v for v in F.variables if v not in point]
    if missing:
        raise EvaluationError(f"unassigned symbols {missing}")
    val = F.prefactor.evaluate(point)
    for a in F.atoms:
        val *= _atom_value(a, point)
    return val


def eval_sum(
    F: HyperTerm,
    ranges: Mapping[str, tuple[int, int]],
    point: Mapping[str, int],
) -> Fraction:
    """Sum of ``F`` over the integer box ``ranges`` (inclusive bounds)."""
    i, j = F.sum_vars
    (ilo, ihi), (jlo, jhi) = ranges[i], ranges[j]
    total = Fraction(0)
    pt = dict(point)
    for a in range(ilo, ihi + 1):
        pt[i] = a
        for b in range(jlo, jhi + 1):
            pt[j] = b
            total += eval_term(F, pt)
    return total


def make_term(
    atoms: Sequence[Atom],
    rec_var: str,
    sum_vars: Iterable[str],
    params: Iterable[str] = (),
    prefactor: Polynomial | None = None,
    source: str = "",
) -> HyperTerm:
    return HyperTerm(tuple(atoms), rec_var, tuple(sum_vars), tuple(params), prefactor, source)


@dataclass(frozen=True)
class Expression:
    """A product of atoms without summation roles, used for right-hand sides."""

    atoms: tuple[Atom, ...]
    prefactor: Polynomial
    source: str = field(default="", compare=False)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.prefactor.ring.names

    def value(self, point: Mapping[str, int]) -> Fraction:
        val = self.prefactor.evaluate(point)
        for a in self.atoms:
            val *= _atom_value(a, point)
        return val
