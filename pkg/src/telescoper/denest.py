"""Denominator estimates for the certificates of a bivariate telescoping problem."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .hyperterm import HyperTerm, quotient_set
from .polykernel import (
    Polynomial,
    exact_div,
    factor_depending_on,
    max_factor_free_of,
    poly_gcd,
    shift_poly,
)

__all__ = [
    "DenominatorEstimate",
    "BoundSet",
    "FactorList",
    "estden",
    "theorem_bound",
    "reduction_candidates",
    "only_in",
]

W2_VARIANTS = ("algorithm", "theorem")


def only_in(f: Polynomial, var: str, other: str) -> Polynomial:
    """Largest factor of ``f`` that involves ``var`` but not ``other``."""
    if f.is_zero():
        return f
    keep = [v for v in f.ring.names if v != other]
    return factor_depending_on(max_factor_free_of(f, keep), var)


def _both(f: Polynomial, i: str, j: str) -> Polynomial:
    return factor_depending_on(factor_depending_on(f, i), j)


# -- factor bookkeeping ---------------------------------------------------------

FactorList = tuple[tuple[Polynomial, int], ...]


def split_known(f: Polynomial, pool: Iterable[Polynomial]) -> FactorList:
    """Write ``f`` as a product of pool members (with multiplicity) and a residual.

    The pool holds the linear factors that arise from the term's shift
    quotients; anything left over after trial division is reported as a
    single residual factor. Constants are dropped.
    """
    rest = f.unit_normal()
    out = []
    for p in sorted({q.unit_normal() for q in pool if not q.is_constant()}, key=_factor_key):
        m = 0
        while rest.total_degree() >= p.total_degree():
            try:
                rest = exact_div(rest, p)
            except ArithmeticError:
                break
            m += 1
        if m:
            out.append((p, m))
    if not rest.is_constant():
        out.append((rest.unit_normal(), 1))
    return tuple(sorted(out, key=lambda t: _factor_key(t[0])))


def _factor_key(p: Polynomial):
    return (p.total_degree(), str(p))


def _linear_pool(F: HyperTerm) -> list[Polynomial]:
    from .hyperterm import Binomial, Factorial

    ring = F.ring
    i, j = F.sum_vars
    rec = F.rec_var
    pool = []
    forms = []
    for a in F.atoms:
        if isinstance(a, Binomial):
            forms += [a.top, a.bottom, a.top - a.bottom]
        elif isinstance(a, Factorial):
            forms.append(a.arg)
    for form in forms:
        base = form.to_poly(ring)
        span = 2 + sum(abs(c) for _, c in form.coeffs)
        pool += [base + t for t in range(-span - 1, span + 2)]
    if F.prefactor.total_degree() > 0:
        for di, dj, dn in itertools.product((-1, 0, 1), repeat=3):
            pool.append(F.prefactor.shifts({i: di, j: dj, rec: dn}))
    return pool


# -- EstDen -------------------------------------------------------------------


@dataclass(frozen=True)
class DenominatorEstimate:
    """Factors of the estimated certificate denominators ``g1 = v*u1*u2`` and ``g2 = v*w1*w2``."""

    v: Polynomial
    u1: Polynomial
    u2: Polynomial
    w1: Polynomial
    w2: Polynomial
    v1: Polynomial
    v2: Polynomial
    step4_u: Polynomial = field(repr=False)
    step4_w: Polynomial = field(repr=False)
    factors1: FactorList = field(default=(), repr=False)
    factors2: FactorList = field(default=(), repr=False)

    @property
    def g1(self) -> Polynomial:
        return (self.v * self.u1 * self.u2).unit_normal()

    @property
    def g2(self) -> Polynomial:
        return (self.v * self.w1 * self.w2).unit_normal()


def _primes(F: HyperTerm):
    qs = quotient_set(F, 0)
    u = poly_gcd(qs.s1, qs.s2)
    s1p = exact_div(qs.s1, u)
    s2p = exact_div(qs.s2, u)
    return qs, s1p, s2p


def estden(F: HyperTerm, w2_variant: str = "algorithm") -> DenominatorEstimate:
    """Estimated denominators of ``R1`` and ``R2`` by the five-step EstDen procedure.

    ``w2_variant`` selects ``s1*s2'`` ("algorithm") or ``s2*s1'``
    ("theorem") as the first gcd argument for ``w2``; the two products
    agree up to a constant, so the switch only documents the choice.
    """
    if w2_variant not in W2_VARIANTS:
        raise ValueError(f"w2_variant must be one of {W2_VARIANTS}")
    i, j = F.sum_vars
    qs, s1p, s2p = _primes(F)
    r1, s1, r2, s2 = qs.r1, qs.s1, qs.r2, qs.s2

    v1 = only_in(r1 * s2p, i, j)
    v2 = only_in(r2 * s1p, j, i)
    v2_as_i = v2.rename({j: i})
    v = poly_gcd(shift_poly(v1, i, -1), shift_poly(v2_as_i, i, -1))

    base = s1 * s2p
    u1 = only_in(base, j, i)
    w1 = only_in(base, i, j)

    step4_u = poly_gcd(base, shift_poly(r1 * s2p, i, -1))
    u2 = factor_depending_on(step4_u, i)
    w_first = base if w2_variant == "algorithm" else s2 * s1p
    step4_w = poly_gcd(w_first, shift_poly(r2 * s1p, j, -1))
    w2 = factor_depending_on(step4_w, j)

    pool = _linear_pool(F)
    est = DenominatorEstimate(
        v=v.unit_normal(),
        u1=u1,
        u2=u2,
        w1=w1,
        w2=w2,
        v1=v1,
        v2=v2,
        step4_u=step4_u,
        step4_w=step4_w,
    )
    return DenominatorEstimate(
        **{k: getattr(est, k) for k in ("v", "u1", "u2", "w1", "w2", "v1", "v2", "step4_u", "step4_w")},
        factors1=split_known(est.g1, pool),
        factors2=split_known(est.g2, pool),
    )


# -- divisibility bounds ------------------------------------------------------


@dataclass(frozen=True)
class BoundSet:
    """Right-hand sides of the five divisibility bounds and the assembled ``G1``, ``G2``.

    ``v3`` has no bound and is taken as 1; ``u1`` and ``w1`` come from EstDen.
    """

    v1: Polynomial
    v2: Polynomial
    v4: Polynomial
    u2: Polynomial
    w2: Polynomial
    u1: Polynomial
    w1: Polynomial
    rhs_v1: Polynomial = field(repr=False)
    rhs_v2: Polynomial = field(repr=False)
    rhs_v4: Polynomial = field(repr=False)
    rhs_u2: Polynomial = field(repr=False)
    rhs_w2: Polynomial = field(repr=False)
    factors1: FactorList = field(default=(), repr=False)
    factors2: FactorList = field(default=(), repr=False)

    @property
    def G1(self) -> Polynomial:
        return (self.v1 * self.v2 * self.v4 * self.u1 * self.u2).unit_normal()

    @property
    def G2(self) -> Polynomial:
        return (self.v1 * self.v2 * self.v4 * self.w1 * self.w2).unit_normal()


def theorem_bound(F: HyperTerm, w2_variant: str = "theorem") -> BoundSet:
    """Factor bounds with ``v1, v2, v4, u2, w2`` at their divisibility bounds."""
    i, j = F.sum_vars
    qs, s1p, s2p = _primes(F)
    r1, s1, r2, s2 = qs.r1, qs.s1, qs.r2, qs.s2

    rhs_v1 = shift_poly(r1 * s2p, i, -1)
    rhs_v2 = shift_poly(r2 * s1p, j, -1)
    rhs_v4 = poly_gcd(rhs_v1, rhs_v2)
    rhs_u2 = poly_gcd(s1 * s2p, rhs_v1)
    w_first = s2 * s1p if w2_variant == "theorem" else s1 * s2p
    rhs_w2 = poly_gcd(w_first, rhs_v2)

    base = s1 * s2p
    pool = _linear_pool(F)
    bs = dict(
        v1=only_in(rhs_v1, i, j),
        v2=only_in(rhs_v2, j, i),
        v4=_both(rhs_v4, i, j),
        u2=factor_depending_on(rhs_u2, i),
        w2=factor_depending_on(rhs_w2, j),
        u1=only_in(base, j, i),
        w1=only_in(base, i, j),
        rhs_v1=rhs_v1,
        rhs_v2=rhs_v2,
        rhs_v4=rhs_v4,
        rhs_u2=rhs_u2,
        rhs_w2=rhs_w2,
    )
    tmp = BoundSet(**bs)
    return BoundSet(**bs, factors1=split_known(tmp.G1, pool), factors2=split_known(tmp.G2, pool))


# -- reductions ---------------------------------------------------------------


def _expand(factors: FactorList) -> list[Polynomial]:
    out = []
    for p, m in factors:
        out += [p] * m
    return out


def _sum_degree(p: Polynomial, sum_vars) -> int:
    return p.total_degree(sum_vars)


def _drops(factors: FactorList, degree: int, sum_vars) -> list[tuple[Polynomial, ...]]:
    """Distinct sub-multisets of listed factors with total summation degree ``degree``."""
    items = _expand(factors)
    seen = []
    for size in range(1, degree + 1):
        for combo in itertools.combinations(range(len(items)), size):
            sel = tuple(items[k] for k in combo)
            if sum(_sum_degree(p, sum_vars) for p in sel) != degree:
                continue
            key = tuple(sorted(str(p) for p in sel))
            if key not in [k for k, _ in seen]:
                seen.append((key, sel))
    # squares of a single factor first, then fewer factors, then by text
    seen.sort(key=lambda t: (len(set(t[0])) > 1, len(t[0]), t[0]))
    return [sel for _, sel in seen]


def _remove(g: Polynomial, sel: tuple[Polynomial, ...]) -> Polynomial:
    for p in sel:
        g = exact_div(g, p)
    return g.unit_normal()


def reduction_candidates(
    g1: Polynomial,
    g2: Polynomial,
    factors1: FactorList | None = None,
    factors2: FactorList | None = None,
    sum_vars: tuple[str, str] | None = None,
    one_sided: bool = True,
) -> list[tuple[Polynomial, Polynomial]]:
    """Reduced denominator pairs to try before the unreduced ``(g1, g2)``.

    Order: a degree-2 factor cancelled from ``g2`` (squares first) together
    with a degree-1 factor from ``g1``; then the mirror image; then (with
    ``one_sided``) single-sided cancellations; the unreduced pair comes
    last. Degrees are total degrees in the summation variables.
    """
    if sum_vars is None:
        sum_vars = tuple(g1.ring.names[-2:])
    if factors1 is None:
        factors1 = ((g1.unit_normal(), 1),) if not g1.is_constant() else ()
    if factors2 is None:
        factors2 = ((g2.unit_normal(), 1),) if not g2.is_constant() else ()
    one1 = _drops(factors1, 1, sum_vars)
    two1 = _drops(factors1, 2, sum_vars)
    one2 = _drops(factors2, 1, sum_vars)
    two2 = _drops(factors2, 2, sum_vars)
    out: list[tuple[Polynomial, Polynomial]] = []

    def add(a, b):
        pair = (_remove(g1, a), _remove(g2, b))
        if pair not in out and pair != (g1.unit_normal(), g2.unit_normal()):
            out.append(pair)

    for b in two2:
        for a in one1:
            add(a, b)
    for a in two1:
        for b in one2:
            add(a, b)
    if one_sided:
        for b in two2:
            add((), b)
        for a in one1:
            add(a, ())
        for a in two1:
            add(a, ())
        for b in one2:
            add((), b)
    out.append((g1.unit_normal(), g2.unit_normal()))
    return out
