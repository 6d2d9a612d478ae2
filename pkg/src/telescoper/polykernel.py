"""Exact sparse multivariate polynomials and rational functions over Q.

Arithmetic, gcd and substitution are delegated to FLINT's ``fmpq_mpoly``;
this module fixes the conventions the rest of the package relies on
(graded-lex order under a declared variable order, positive leading
coefficient as the unit normalization, a canonical text form) and adds
the factor-extraction and nullspace routines used by the summation code.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import flint

__all__ = [
    "PolynomialError",
    "Ring",
    "Polynomial",
    "RationalFunction",
    "RFMatrix",
    "poly_gcd",
    "poly_lcm",
    "max_factor_free_of",
    "factor_depending_on",
    "shift_poly",
    "exact_div",
    "content_primitive",
    "nullspace",
]


class PolynomialError(ArithmeticError):
    """Raised on domain errors (gcd of zeros, inexact division, ...)."""


def _to_fraction(c) -> Fraction:
    c = flint.fmpq(c)
    return Fraction(int(c.p), int(c.q))


def _to_fmpq(c) -> flint.fmpq:
    if isinstance(c, Fraction):
        return flint.fmpq(c.numerator, c.denominator)
    return flint.fmpq(c)


class Ring:
    """Polynomial ring Q[x1, ..., xk] with a fixed variable order.

    Rings are interned by their variable tuple, so ``Ring(("n", "i"))`` is
    ``Ring(("n", "i"))``.
    """

    _cache: dict[tuple[str, ...], "Ring"] = {}

    def __new__(cls, names: Sequence[str]):
        names = tuple(names)
        ring = cls._cache.get(names)
        if ring is None:
            if not names:
                raise ValueError("a ring needs at least one variable")
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate variable names in {names}")
            ring = super().__new__(cls)
            ring.names = names
            ring.ctx = flint.fmpq_mpoly_ctx.get(names, "deglex")
            ring._index = {v: k for k, v in enumerate(names)}
            cls._cache[names] = ring
        return ring

    def __repr__(self) -> str:
        return f"Ring({self.names!r})"

    def __reduce__(self):
        return (Ring, (self.names,))

    @property
    def nvars(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"{name!r} is not a variable of {self!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def _raw_const(self, c):
        return self.ctx.from_dict({(0,) * self.nvars: _to_fmpq(c)}) if c else self.ctx.from_dict({})

    def const(self, c) -> "Polynomial":
        return Polynomial(self, self._raw_const(c))

    def zero(self) -> "Polynomial":
        return self.const(0)

    def one(self) -> "Polynomial":
        return self.const(1)

    def gen(self, name: str) -> "Polynomial":
        k = self.index(name)
        exps = tuple(1 if t == k else 0 for t in range(self.nvars))
        return Polynomial(self, self.ctx.from_dict({exps: 1}))

    def gens(self) -> tuple["Polynomial", ...]:
        return tuple(self.gen(v) for v in self.names)

    def from_terms(self, terms: Mapping[tuple[int, ...], object]) -> "Polynomial":
        data = {}
        for exps, c in terms.items():
            if len(exps) != self.nvars or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {exps} for {self!r}")
            if c:
                data[tuple(exps)] = _to_fmpq(c)
        return Polynomial(self, self.ctx.from_dict(data))

    def linear(self, coeffs: Mapping[str, int], constant: int = 0) -> "Polynomial":
        terms = {(0,) * self.nvars: constant}
        for name, c in coeffs.items():
            k = self.index(name)
            terms[tuple(1 if t == k else 0 for t in range(self.nvars))] = c
        return self.from_terms(terms)

    def extend(self, names: Iterable[str]) -> "Ring":
        extra = [v for v in names if v not in self._index]
        return Ring(self.names + tuple(extra))

    def fresh_name(self, stem: str = "_a") -> str:
        for k in itertools.count():
            name = f"{stem}{k}"
            if name not in self._index:
                return name
        raise AssertionError("unreachable")

    def parse(self, text: str) -> "Polynomial":
        from .parsing import parse_polynomial

        return parse_polynomial(text, self)


class Polynomial:
    """Immutable exact polynomial over Q in the variables of ``ring``."""

    __slots__ = ("ring", "raw")

    def __init__(self, ring: Ring, raw):
        self.ring = ring
        self.raw = raw

    # -- inspection --------------------------------------------------------

    @property
    def variables(self) -> tuple[str, ...]:
        return self.ring.names

    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return {tuple(e): _to_fraction(c) for e, c in self.raw.terms()}

    def is_zero(self) -> bool:
        return self.raw.is_zero()

    def __bool__(self) -> bool:
        return not self.raw.is_zero()

    def is_constant(self) -> bool:
        return self.raw.is_constant()

    def constant_value(self) -> Fraction:
        if not self.raw.is_constant():
            raise PolynomialError(f"{self} is not constant")
        if self.raw.is_zero():
            return Fraction(0)
        return _to_fraction(self.raw.leading_coefficient())

    def leading_coefficient(self) -> Fraction:
        if self.raw.is_zero():
            return Fraction(0)
        return _to_fraction(self.raw.leading_coefficient())

    def free_symbols(self) -> frozenset[str]:
        if self.raw.is_zero():
            return frozenset()
        degs = self.raw.degrees()
        return frozenset(v for v, d in zip(self.ring.names, degs) if d > 0)

    def degree(self, var: str) -> int:
        """Degree in ``var``; -1 for the zero polynomial."""
        if self.raw.is_zero():
            return -1
        return int(self.raw.degrees()[self.ring.index(var)])

    def total_degree(self, variables: Iterable[str] | None = None) -> int:
        """Total degree, optionally counting only ``variables``."""
        if self.raw.is_zero():
            return -1
        if variables is None:
            return int(self.raw.total_degree())
        idx = [self.ring.index(v) for v in variables]
        return max(sum(int(e[k]) for k in idx) for e in self.raw.monoms())

    def __len__(self) -> int:
        return len(self.raw)

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.ring is not self.ring:
                raise PolynomialError(f"ring mismatch: {self.ring!r} vs {other.ring!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self.ring, self.raw + other.raw)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self.ring, self.raw - other.raw)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self.ring, other.raw - self.raw)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial(self.ring, self.raw * other.raw)

    __rmul__ = __mul__

    def __neg__(self):
        return Polynomial(self.ring, -self.raw)

    def __pow__(self, k: int):
        if k < 0:
            raise PolynomialError("negative power of a polynomial")
        return Polynomial(self.ring, self.raw**k)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("polynomial division by zero")
            return Polynomial(self.ring, self.raw / _to_fmpq(other))
        return RationalFunction(self, self._coerce(other))

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.ring is other.ring and self.raw == other.raw
        if isinstance(other, (int, Fraction)):
            return self.raw.is_constant() and self.constant_value() == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.ring.names, str(self.raw)))

    # -- normalization ----------------------------------------------------

    def unit_normal(self) -> Polynomial:
        """Scale to integer coprime coefficients with positive leading coefficient."""
        if self.raw.is_zero():
            return self
        return Polynomial(self.ring, _unit_normal_raw(self.raw))

    def monic(self) -> Polynomial:
        if self.raw.is_zero():
            return self
        return Polynomial(self.ring, self.raw / self.raw.leading_coefficient())

    # -- substitution -----------------------------------------------------

    def shift(self, var: str, offset: int) -> Polynomial:
        return shift_poly(self, var, offset)

    def shifts(self, offsets: Mapping[str, int]) -> Polynomial:
        if not any(offsets.values()):
            return self
        ctx = self.ring.ctx
        gens = list(ctx.gens())
        for v, k in offsets.items():
            if k and v in self.ring:
                gens[self.ring.index(v)] = gens[self.ring.index(v)] + k
        return Polynomial(self.ring, self.raw.compose(*gens, ctx=ctx))

    def substitute(self, mapping: Mapping[str, Polynomial]) -> Polynomial:
        """Simultaneously replace variables by polynomials of the same ring."""
        ctx = self.ring.ctx
        gens = list(ctx.gens())
        for v, p in mapping.items():
            if v in self.ring:
                gens[self.ring.index(v)] = self._coerce(p).raw
        return Polynomial(self.ring, self.raw.compose(*gens, ctx=ctx))

    def rename(self, mapping: Mapping[str, str]) -> Polynomial:
        return self.substitute({a: self.ring.gen(b) for a, b in mapping.items()})

    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        """Exact value at a full assignment of the variables."""
        missing = [v for v in self.free_symbols() if v not in point]
        if missing:
            raise PolynomialError(f"unassigned variables {missing} in {self}")
        args = [_to_fmpq(point.get(v, 0)) for v in self.ring.names]
        return _to_fraction(self.raw(*args))

    def partial(self, point: Mapping[str, int]) -> Polynomial:
        """Substitute integer values for some variables."""
        vals = {v: int(c) for v, c in point.items() if v in self.ring}
        if not vals:
            return self
        return Polynomial(self.ring, self.raw.subs(vals))

    def to_ring(self, ring: Ring) -> Polynomial:
        """Re-express in another ring containing every variable used here."""
        if ring is self.ring:
            return self
        used = self.free_symbols()
        missing = [v for v in used if v not in ring]
        if missing:
            raise PolynomialError(f"variables {missing} not in {ring!r}")
        perm = [ring.index(v) if v in ring else None for v in self.ring.names]
        data = {}
        for e, c in self.raw.terms():
            new = [0] * ring.nvars
            for k, d in enumerate(e):
                if d:
                    new[perm[k]] = int(d)
            data[tuple(new)] = c
        return Polynomial(ring, ring.ctx.from_dict(data))

    def coefficients_in(self, variables: Sequence[str], ring: Ring | None = None) -> dict[tuple[int, ...], Polynomial]:
        """Coefficients w.r.t. ``variables``; values live in ``ring`` (default: same ring)."""
        idx = [self.ring.index(v) for v in variables]
        target = ring or self.ring
        others = [k for k in range(self.ring.nvars) if k not in idx]
        perm = {k: target.index(self.ring.names[k]) for k in others if self.ring.names[k] in target}
        buckets: dict[tuple[int, ...], dict] = {}
        for e, c in self.raw.terms():
            key = tuple(int(e[k]) for k in idx)
            new = [0] * target.nvars
            for k in others:
                if e[k]:
                    if k not in perm:
                        raise PolynomialError(f"variable {self.ring.names[k]} not in {target!r}")
                    new[perm[k]] = int(e[k])
            if target is self.ring:
                for k in idx:
                    new[k] = 0
            buckets.setdefault(key, {})[tuple(new)] = c
        return {k: Polynomial(target, target.ctx.from_dict(v)) for k, v in buckets.items()}

    # -- printing ---------------------------------------------------------

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"Polynomial({str(self)!r}, {self.ring.names!r})"


def _unit_normal_raw(raw):
    lc = raw.leading_coefficient()
    den = 1
    for c in raw.coeffs():
        den = math.lcm(den, int(flint.fmpq(c).q))
    scaled = raw * den
    g = 0
    for c in scaled.coeffs():
        g = math.gcd(g, int(flint.fmpq(c).p))
    if lc < 0:
        g = -g
    return scaled / g


def format_poly(f: Polynomial) -> str:
    """Canonical text: expanded, graded-lex term order, explicit ``*`` and ``^``."""
    if f.raw.is_zero():
        return "0"
    names = f.ring.names
    pieces = []
    for e, c in f.raw.terms():
        c = _to_fraction(c)
        mono = "*".join(
            v if d == 1 else f"{v}^{d}" for v, d in zip(names, e) if d
        )
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        pieces.append((sign, body))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


# -- gcd and friends -----------------------------------------------------------


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    """Greatest common divisor with positive leading coefficient.

    >>> R = Ring(("i", "j"))
    >>> i, j = R.gens()
    >>> print(poly_gcd((i + 1)**2 * (j + 1), (i + 1) * (i + j)))
    i + 1
    """
    b = a._coerce(b)
    if a.is_zero() and b.is_zero():
        raise PolynomialError("gcd(0, 0) is undefined")
    if a.is_zero():
        return b.unit_normal()
    if b.is_zero():
        return a.unit_normal()
    return Polynomial(a.ring, _unit_normal_raw(a.raw.gcd(b.raw)))


def poly_lcm(a: Polynomial, b: Polynomial) -> Polynomial:
    if a.is_zero() or b.is_zero():
        return a.ring.zero()
    g = a.raw.gcd(b.raw)
    return Polynomial(a.ring, _unit_normal_raw(_divexact(a.raw, g) * b.raw))


def _divexact(a, b):
    q, r = divmod(a, b)
    if not r.is_zero():
        raise PolynomialError("inexact polynomial division")
    return q


def exact_div(a: Polynomial, b: Polynomial) -> Polynomial:
    """Quotient ``a / b``; raises :class:`PolynomialError` unless ``b | a``."""
    b = a._coerce(b)
    if b.is_zero():
        raise PolynomialError("division by the zero polynomial")
    try:
        return Polynomial(a.ring, _divexact(a.raw, b.raw))
    except PolynomialError:
        raise PolynomialError(f"{b} does not divide {a}") from None


def shift_poly(f: Polynomial, var: str, offset: int) -> Polynomial:
    """Substitute ``var -> var + offset``; identity if ``var`` is not in the ring."""
    if offset == 0 or var not in f.ring:
        return f
    ctx = f.ring.ctx
    gens = list(ctx.gens())
    k = f.ring.index(var)
    gens[k] = gens[k] + offset
    return Polynomial(f.ring, f.raw.compose(*gens, ctx=ctx))


@lru_cache(maxsize=64)
def _fresh_ring(names: tuple[str, ...]) -> tuple[Ring, str]:
    base = Ring(names)
    a = base.fresh_name()
    return base.extend([a]), a


def max_factor_free_of(f: Polynomial, deps: Iterable[str]) -> Polynomial:
    """Largest factor of ``f`` involving no variable outside ``deps``.

    Computed as ``gcd(f, f|x->x+a)`` for a fresh symbol ``a``, once per
    excluded variable ``x``; multiplicities survive.
    """
    if f.is_zero():
        raise PolynomialError("max_factor_free_of(0) is undefined")
    deps = set(deps)
    excluded = [v for v in f.ring.names if v not in deps and f.degree(v) > 0]
    if not excluded:
        return f.unit_normal()
    big, a = _fresh_ring(f.ring.names)
    h = f.to_ring(big)
    ga = big.gen(a)
    for x in excluded:
        if h.degree(x) <= 0:
            continue
        moved = h.substitute({x: big.gen(x) + ga})
        h = poly_gcd(h, moved)
    return h.to_ring(f.ring).unit_normal()


def factor_depending_on(f: Polynomial, var: str) -> Polynomial:
    """Largest factor of ``f`` all of whose irreducible factors involve ``var``."""
    if f.is_zero():
        raise PolynomialError("factor_depending_on(0) is undefined")
    free = max_factor_free_of(f, [v for v in f.ring.names if v != var])
    return exact_div(f, free).unit_normal()


def content_primitive(f: Polynomial, main: Iterable[str]) -> tuple[Polynomial, Polynomial]:
    """Split ``f`` into content (gcd of its coefficients w.r.t. ``main``) and primitive part.

    The content is unit-normalized; ``content * primitive == f``.
    """
    if f.is_zero():
        raise PolynomialError("content of the zero polynomial is undefined")
    coeffs = f.coefficients_in(list(main)).values()
    g = None
    for c in coeffs:
        g = c if g is None else poly_gcd(g, c)
        if g.is_constant():
            break
    g = g.unit_normal()
    return g, exact_div(f, g)


# -- rational functions --------------------------------------------------------


class RationalFunction:
    """Reduced quotient ``num/den``; ``den`` is primitive over Z with positive lc."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial | None = None, *, reduced: bool = False):
        if den is None:
            den = num.ring.one()
        den = num._coerce(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            self.num, self.den = num, num.ring.one()
            return
        if not reduced:
            g = num.raw.gcd(den.raw)
            if not g.is_constant():
                num = Polynomial(num.ring, _divexact(num.raw, g))
                den = Polynomial(den.ring, _divexact(den.raw, g))
        nd = _unit_normal_raw(den.raw)
        scale = nd.leading_coefficient() / den.raw.leading_coefficient()
        self.num = Polynomial(num.ring, num.raw * scale) if scale != 1 else num
        self.den = Polynomial(den.ring, nd)

    @property
    def ring(self) -> Ring:
        return self.num.ring

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def _coerce(self, other) -> RationalFunction:
        if isinstance(other, RationalFunction):
            if other.ring is not self.ring:
                raise PolynomialError("ring mismatch")
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(self.num._coerce(other))
        if isinstance(other, (int, Fraction)):
            return RationalFunction(self.ring.const(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        g = self.den.raw.gcd(o.den.raw)
        a = _divexact(self.den.raw, g)
        b = _divexact(o.den.raw, g)
        num = self.num.raw * b + o.num.raw * a
        return RationalFunction(Polynomial(self.ring, num), Polynomial(self.ring, a * o.den.raw))

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den, reduced=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        g1 = self.num.raw.gcd(o.den.raw)
        g2 = o.num.raw.gcd(self.den.raw)
        num = _divexact(self.num.raw, g1) * _divexact(o.num.raw, g2)
        den = _divexact(self.den.raw, g2) * _divexact(o.den.raw, g1)
        return RationalFunction(Polynomial(self.ring, num), Polynomial(self.ring, den), reduced=True)

    __rmul__ = __mul__

    def inverse(self) -> RationalFunction:
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        return RationalFunction(self.den, self.num, reduced=True)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RationalFunction(self.num**k, self.den**k, reduced=True)

    def __eq__(self, other) -> bool:
        o = self._coerce(other) if not isinstance(other, RationalFunction) else other
        if o is NotImplemented:
            return NotImplemented
        return self.ring is o.ring and (self.num.raw * o.den.raw == o.num.raw * self.den.raw)

    def __hash__(self) -> int:
        return hash((hash(self.num), hash(self.den)))

    def shift(self, var: str, offset: int) -> RationalFunction:
        return RationalFunction(shift_poly(self.num, var, offset), shift_poly(self.den, var, offset), reduced=True)

    def shifts(self, offsets: Mapping[str, int]) -> RationalFunction:
        return RationalFunction(self.num.shifts(offsets), self.den.shifts(offsets), reduced=True)

    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        d = self.den.evaluate(point)
        if d == 0:
            raise ZeroDivisionError(f"denominator {self.den} vanishes at {dict(point)}")
        return self.num.evaluate(point) / d

    def to_ring(self, ring: Ring) -> RationalFunction:
        return RationalFunction(self.num.to_ring(ring), self.den.to_ring(ring), reduced=True)

    def __str__(self) -> str:
        if self.den == 1:
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self) -> str:
        return f"RationalFunction({str(self.num)!r}, {str(self.den)!r})"


def _as_rf(x, ring: Ring) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x)
    return RationalFunction(ring.const(x))


class RFMatrix:
    """Dense matrix of rational functions over one ring."""

    def __init__(self, ring: Ring, entries: Sequence[Sequence[object]]):
        rows = [list(r) for r in entries]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix")
        self.ring = ring
        self.entries = [[_as_rf(x, ring) for x in r] for r in rows]
        self.rows = len(rows)
        self.cols = ncols

    def __getitem__(self, rc: tuple[int, int]) -> RationalFunction:
        r, c = rc
        return self.entries[r][c]

    def apply(self, vec: Sequence[object]) -> list[RationalFunction]:
        vec = [_as_rf(x, self.ring) for x in vec]
        out = []
        for row in self.entries:
            acc = RationalFunction(self.ring.zero())
            for a, x in zip(row, vec):
                if not a.is_zero() and not x.is_zero():
                    acc = acc + a * x
            out.append(acc)
        return out


def nullspace(M: RFMatrix, *, seed: int = 0) -> list[list[RationalFunction]]:
    """Basis of the right nullspace of ``M`` over the fraction field of its ring.

    Basis vectors have polynomial entries with joint content 1, the free
    coordinate normalized positive. The result is exact; see
    :func:`poly_nullspace` for the method.
    """
    ring = M.ring
    rows = []
    for row in M.entries:
        den = ring.one()
        for x in row:
            den = poly_lcm(den, x.den)
        rows.append([(x.num * exact_div(den, x.den)).raw for x in row])
    basis = poly_nullspace(rows, M.cols, ring, seed=seed)
    return [[RationalFunction(Polynomial(ring, x)) for x in v] for v in basis]


# -- fraction-free nullspace over Q(params) ------------------------------------

_PRIME = (1 << 61) - 1


def _rref_pivots(mat) -> list[int]:
    rr, rank = mat.rref()
    pivots = []
    for r in range(rank):
        for c in range(mat.ncols()):
            if int(rr[r, c]) != 0:
                pivots.append(c)
                break
    return pivots


def modular_probe(rows, ncols: int, ring: Ring, rng: random.Random):
    """Rank, pivot columns and independent rows at a random point, modulo a prime.

    Every entry is first evaluated exactly at random integer values of
    the ring's variables (the image is a specialization, so its rank is
    at most the generic rank).
    """
    values = [rng.randrange(1 << 20, 1 << 40) for _ in ring.names]
    fvals = [flint.fmpq(v) for v in values]
    p = _PRIME
    mat = _modular_image_q(rows, ncols, fvals, p)
    pivots = _rref_pivots(mat)
    row_sel = _rref_pivots(mat.transpose()) if rows else []
    return len(pivots), pivots, row_sel, mat


def _modular_image_q(rows, ncols, fvals, p):
    data = []
    for row in rows:
        for x in row:
            if x.is_zero():
                data.append(0)
            else:
                v = x(*fvals)
                data.append(int(v.p) * pow(int(v.q), -1, p) % p)
    return flint.nmod_mat(len(rows), ncols, data, p)


def _size(x) -> tuple[int, int]:
    if x.is_zero():
        return (1 << 60, 0)
    return (int(x.total_degree()), len(x))


def _row_primitive(row: dict[int, object]):
    """Divide a sparse row by the gcd of its entries, sign-normalized."""
    g = None
    for x in row.values():
        g = x if g is None else g.gcd(x)
        if g.is_constant():
            break
    if g is None:
        return row
    if g.is_constant():
        # rational content: scale to coprime integers
        den = 1
        num = 0
        for x in row.values():
            for c in x.coeffs():
                q = flint.fmpq(c)
                den = den * int(q.q) // math.gcd(den, int(q.q))
        for x in row.values():
            for c in x.coeffs():
                num = math.gcd(num, int((flint.fmpq(c) * den).p))
        scale = flint.fmpq(den, num)
        if scale == 1:
            return row
        return {k: v * scale for k, v in row.items()}
    return {k: _divexact(v, g) for k, v in row.items()}


def poly_nullspace(rows, ncols: int, ring: Ring, *, seed: int = 0, max_attempts: int = 4):
    """Nullspace basis of a matrix with raw ``fmpq_mpoly`` entries.

    A modular probe fixes the generic rank, an independent set of rows and
    the pivot columns; the selected rows are then reduced to diagonal form
    by fraction-free elimination (each updated row divided by the gcd of
    its entries). Every returned vector is checked against all original
    rows, and a fresh probe is drawn if an unlucky specialization
    produced a wrong pivot structure.
    """
    rng = random.Random(seed)
    for _ in range(max_attempts):
        rank, pivots, row_sel, _ = modular_probe(rows, ncols, ring, rng)
        basis = _solve_structure(rows, ncols, ring, pivots, row_sel)
        if basis is not None and all(_check(rows, v) for v in basis):
            return basis
    raise PolynomialError("nullspace computation failed to stabilize")


def _solve_structure(rows, ncols, ring, pivots, row_sel):
    rank = len(pivots)
    zero = ring.ctx.from_dict({})
    if rank == 0:
        basis = []
        for t in range(ncols):
            v = [zero] * ncols
            v[t] = ring.ctx.from_dict({(0,) * ring.nvars: 1})
            basis.append(v)
        return basis
    free = [c for c in range(ncols) if c not in set(pivots)]
    work = []
    for r in row_sel:
        row = {c: x for c, x in enumerate(rows[r]) if not x.is_zero()}
        work.append(_row_primitive(row))
    # Gauss-Jordan over polynomial rows: pivot choice prefers small entries.
    remaining_cols = set(pivots)
    done_rows: list[tuple[int, dict]] = []
    active = list(range(len(work)))
    while active:
        best = None
        for ri in active:
            row = work[ri]
            for c, x in row.items():
                if c in remaining_cols:
                    key = (_size(x), len(row), c, ri)
                    if best is None or key < best[0]:
                        best = (key, ri, c)
        if best is None:
            return None
        _, pr, pc = best
        prow = work[pr]
        piv = prow[pc]
        active.remove(pr)
        remaining_cols.discard(pc)
        for ri in [ri for ri in active if pc in work[ri]]:
            work[ri] = _eliminate(work[ri], prow, pc, piv)
        for k, (c0, row) in enumerate(done_rows):
            if pc in row:
                done_rows[k] = (c0, _eliminate(row, prow, pc, piv))
        done_rows.append((pc, prow))
    # Each done row now reads piv*x_pc + sum_{free} e_t x_t = 0.
    basis = []
    one = ring.ctx.from_dict({(0,) * ring.nvars: 1})
    for t in free:
        # x_t = L (lcm of pivots), x_pc = -e_t * L / piv
        dens = []
        for pc, row in done_rows:
            dens.append(row[pc])
        L = one
        for d in dens:
            L = _divexact(L * d, L.gcd(d))
        v = [zero] * ncols
        v[t] = L
        for pc, row in done_rows:
            e = row.get(t)
            if e is not None:
                v[pc] = -_divexact(L * e, row[pc])
        basis.append(_vector_primitive(v))
    return basis


def _eliminate(row: dict, prow: dict, pc: int, piv):
    a = row[pc]
    g = a.gcd(piv)
    ma = _divexact(piv, g)
    mb = _divexact(a, g)
    out = {}
    keys = set(row) | set(prow)
    for c in keys:
        x = row.get(c)
        y = prow.get(c)
        if c == pc:
            continue
        val = (x * ma if x is not None else None)
        if y is not None:
            t = y * mb
            val = t.__neg__() if val is None else val - t
        if val is not None and not val.is_zero():
            out[c] = val
    return _row_primitive(out)


def _vector_primitive(v):
    nz = {k: x for k, x in enumerate(v) if not x.is_zero()}
    nz = _row_primitive(nz)
    out = list(v)
    for k, x in nz.items():
        out[k] = x
    # sign: first nonzero entry's leading coefficient positive
    for x in out:
        if not x.is_zero():
            if x.leading_coefficient() < 0:
                out = [-y for y in out]
            break
    return out


def _check(rows, v) -> bool:
    for row in rows:
        acc = None
        for a, x in zip(row, v):
            if a.is_zero() or x.is_zero():
                continue
            acc = a * x if acc is None else acc + a * x
        if acc is not None and not acc.is_zero():
            return False
    return True


# -- one-parameter kernels by evaluation and interpolation ---------------------


def _primes_from(start: int):
    p = start
    while True:
        p -= 1
        if flint.fmpz(p).is_prime():
            yield p


def _ratrecon(a: int, m: int) -> Fraction | None:
    """Rational ``u/w`` with ``u = a*w mod m`` and both parts below ``sqrt(m/2)``."""
    bound = math.isqrt(m // 2)
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or math.gcd(r1, abs(s1)) != 1:
        return None
    return Fraction(r1, s1)


class _ImageFailure(Exception):
    pass


def _coefficient_mats(rows, ncols, p):
    """Matrices ``M_k`` mod ``p`` with ``M = sum M_k x^k``."""
    deg = 0
    entries = []
    for r, row in enumerate(rows):
        for c, x in enumerate(row):
            if x.is_zero():
                continue
            for e, coeff in x.terms():
                q = int(coeff.q)
                if q % p == 0:
                    raise _ImageFailure
                k = int(e[0])
                deg = max(deg, k)
                entries.append((k, r * ncols + c, int(coeff.p) * pow(q, -1, p) % p))
    data = [[0] * (len(rows) * ncols) for _ in range(deg + 1)]
    for k, pos, val in entries:
        data[k][pos] = (data[k][pos] + val) % p
    return [flint.nmod_mat(len(rows), ncols, d, p) for d in data]


def _kernel_at(mats, x, k):
    m = mats[-1]
    for a in reversed(mats[:-1]):
        m = m * x + a
    rr, rank = m.rref()
    if rank != k - 1 or int(rr[k - 2, k - 2]) != 1:
        return None
    return [-int(rr[t, k - 1]) for t in range(k - 1)] + [1]


def _image(mats, k, p, npts, rng, hold=3):
    """Monic common denominator and numerators of the kernel vector mod ``p``."""
    pts, vals = [], []
    seen = set()
    tries = 0
    while len(pts) < npts:
        tries += 1
        if tries > 4 * npts + 20:
            raise _ImageFailure
        x = rng.randrange(1, p)
        if x in seen:
            continue
        seen.add(x)
        v = _kernel_at(mats, x, k)
        if v is not None:
            pts.append(x)
            vals.append(v)
    m = npts - hold
    lam = [rng.randrange(1, p) for _ in range(k)]
    w = [sum(a * b for a, b in zip(lam, v)) % p for v in vals]
    a = b = (m - 4) // 2
    sys_rows = []
    for x, wx in zip(pts[:m], w[:m]):
        powers = [pow(x, t, p) for t in range(max(a, b) + 1)]
        sys_rows += powers[: a + 1] + [-wx * q % p for q in powers[: b + 1]]
    kern, nullity = flint.nmod_mat(m, a + b + 2, sys_rows, p).nullspace()
    if nullity == 0:
        return None
    col = [int(kern[t, 0]) for t in range(a + b + 2)]
    num = flint.nmod_poly(col[: a + 1], p)
    den = flint.nmod_poly(col[a + 1 :], p)
    if den.is_zero():
        return None
    g = num.gcd(den)
    den = den // g
    den = den * pow(int(den.leading_coefficient()), -1, p)
    dvals = [int(den(x)) for x in pts]
    if any(d == 0 for d in dvals):
        raise _ImageFailure
    vand = flint.nmod_mat(m, m, [pow(x, t, p) for x in pts[:m] for t in range(m)], p)
    ys = flint.nmod_mat(m, k, [d * y % p for d, v in zip(dvals[:m], vals[:m]) for y in v], p)
    coeffs = vand.solve(ys)
    held_v = flint.nmod_mat(hold, m, [pow(x, t, p) for x in pts[m:] for t in range(m)], p)
    held_y = flint.nmod_mat(hold, k, [d * y % p for d, v in zip(dvals[m:], vals[m:]) for y in v], p)
    if held_v * coeffs != held_y:
        return None
    top = max((t for t in range(m) for c in range(k) if int(coeffs[t, c])), default=0)
    if top > m - hold - 1:
        return None
    return [int(c) for c in den.coeffs()], [[int(coeffs[t, c]) for t in range(top + 1)] for c in range(k)]


def univariate_kernel_vector(rows, ncols: int, ring: Ring, *, seed: int = 0, max_primes: int = 400):
    """Primitive kernel vector of a one-variable polynomial matrix with nullity one.

    The first ``ncols - 1`` columns must be generically independent. The
    kernel vector, scaled so the last entry is 1, is recovered modulo
    word-size primes from its values at random points (common denominator
    by rational interpolation, numerators by polynomial interpolation);
    the coefficients are lifted by Chinese remaindering and rational
    reconstruction, and the result is checked against every row.
    """
    if ring.nvars != 1:
        raise ValueError("univariate_kernel_vector needs a one-variable ring")
    rng = random.Random(seed)
    k = ncols
    npts = 16
    shape = None
    residues: list[int] = []
    modulus = 1
    last = None
    used = 0
    for p in _primes_from(1 << 62):
        if used >= max_primes:
            break
        try:
            mats = _coefficient_mats(rows, ncols, p)
            img = None
            while img is None:
                img = _image(mats, k, p, npts, rng)
                if img is None:
                    if shape is not None:
                        break
                    npts *= 2
                    if npts > 8192:
                        raise PolynomialError("kernel degree exceeds interpolation limit")
        except _ImageFailure:
            continue
        if img is None:
            continue
        den, nums = img
        sig = (len(den), tuple(len(c) for c in nums))
        flat = den + [x for c in nums for x in c]
        used += 1
        if shape is None or sig != shape:
            shape, residues, modulus, last = sig, flat, p, None
            continue
        inv = pow(modulus, -1, p)
        residues = [r + modulus * ((f - r) * inv % p) for r, f in zip(residues, flat)]
        modulus *= p
        rec = [_ratrecon(r, modulus) for r in residues]
        if any(x is None for x in rec):
            continue
        if rec != last:
            last = rec
            continue
        vec = _assemble_vector(rec, shape, ring)
        if _check(rows, vec):
            return vec
        last = None
    raise PolynomialError("modular kernel reconstruction did not converge")


def _assemble_vector(rec, shape, ring):
    nd, lens = shape
    pos = nd
    scale = math.lcm(*(x.denominator for x in rec))
    out = []
    for ln in lens:
        terms = {(t,): int(rec[pos + t] * scale) for t in range(ln) if rec[pos + t]}
        out.append(ring.ctx.from_dict(terms))
        pos += ln
    return _vector_primitive(out)
