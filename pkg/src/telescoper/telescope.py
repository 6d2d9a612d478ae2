"""Search for telescopers ``L`` and certificates ``R1, R2`` with ``L F = D_i(R1 F) + D_j(R2 F)``.

The numerators of ``R1 = f1/(d*g1)`` and ``R2 = f2/(d*g2)`` are found by
undetermined coefficients: after clearing denominators, the coefficient
of every monomial in the summation variables gives one linear equation
over the field of rational functions in the recurrence variable and the
parameters.
"""

from __future__ import annotations

import json
import logging
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import flint

from .denest import estden, reduction_candidates, theorem_bound
from .hyperterm import HyperTerm, QuotientSet, quotient_set
from .polykernel import (
    Polynomial,
    PolynomialError,
    RationalFunction,
    Ring,
    RFMatrix,
    _PRIME,
    _rref_pivots,
    _modular_image_q,
    _row_primitive,
    exact_div,
    poly_gcd,
    poly_lcm,
    poly_nullspace,
    univariate_kernel_vector,
)

log = logging.getLogger(__name__)

__all__ = [
    "NoCertificateFound",
    "SolveOptions",
    "Certificate",
    "LinearSystem",
    "assemble_system",
    "bizeil",
    "solve_fixed",
    "normalize_certificate",
    "primitive_operator",
    "certificate_to_json",
    "certificate_from_json",
]


class NoCertificateFound(RuntimeError):
    """The search exhausted its bounds; this is not a proof that none exists."""

    def __init__(self, message: str, trace: list[dict]):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolveOptions:
    max_order: int = 6
    initial_excess: int = 1
    max_excess: int = 3
    reduce: bool = True
    denominators: str = "estden"  # or "theorem"
    w2_variant: str = "algorithm"
    one_sided: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        if not (1 <= self.initial_excess <= self.max_excess <= 3):
            raise ValueError("degree excesses must satisfy 1 <= initial <= max <= 3")
        if self.denominators not in ("estden", "theorem"):
            raise ValueError("denominators must be 'estden' or 'theorem'")


@dataclass(frozen=True)
class Certificate:
    """A telescoper with its certificates.

    ``R1 = f1 / (d * g1)`` and ``R2 = f2 / (d * g2)`` are the unreduced
    presentations, with ``f1, f2`` polynomial.
    """

    shift_var: str
    coeffs: tuple[Polynomial, ...]
    R1: RationalFunction
    R2: RationalFunction
    d: Polynomial
    g1: Polynomial
    g2: Polynomial
    f1: Polynomial
    f2: Polynomial
    sum_vars: tuple[str, str] = ("i", "j")
    search_trace: tuple[dict, ...] = field(default=(), compare=False)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def ring(self) -> Ring:
        return self.R1.ring

    def primitive_coeffs(self) -> tuple[Polynomial, ...]:
        """Operator divided by the polynomial gcd of its coefficients, top one positive.

        The certificates belong to ``coeffs``; for these coefficients they
        would pick up the removed gcd as an extra denominator.
        """
        return primitive_operator(self.coeffs)

    def operator_str(self, primitive: bool = False) -> str:
        sym = self.shift_var.upper() if self.shift_var.upper() != self.shift_var else "S"
        parts = []
        for l, a in enumerate(self.primitive_coeffs() if primitive else self.coeffs):
            if a.is_zero():
                continue
            s = f"({a})"
            if l == 1:
                s += f"*{sym}"
            elif l > 1:
                s += f"*{sym}^{l}"
            parts.append(s)
        return " + ".join(parts)


def primitive_operator(coeffs: Sequence[Polynomial]) -> tuple[Polynomial, ...]:
    """Divide by the joint gcd and rational content; top coefficient positive."""
    coeffs = list(coeffs)
    nz = [c for c in coeffs if not c.is_zero()]
    if not nz:
        raise ValueError("zero operator")
    g = nz[0]
    for c in nz[1:]:
        g = poly_gcd(g, c)
    out = [c if c.is_zero() else exact_div(c, g) for c in coeffs]
    unit = _rational_content(out)
    if [c for c in out if not c.is_zero()][-1].leading_coefficient() < 0:
        unit = -unit
    return tuple(c / unit for c in out)


# -- system assembly ----------------------------------------------------------


def _monomials(deg: int) -> list[tuple[int, int]]:
    """Exponent pairs with total degree <= deg, graded-lex descending."""
    out = []
    for t in range(deg, -1, -1):
        for a in range(t, -1, -1):
            out.append((a, t - a))
    return out


@dataclass
class LinearSystem:
    """Homogeneous system for fixed order, denominators and numerator degrees."""

    ring: Ring
    param_ring: Ring
    rows: list[list]  # raw fmpq_mpoly entries over param_ring
    labels: list[tuple]
    order: int
    d: Polynomial
    g1: Polynomial
    g2: Polynomial
    deg1: int
    deg2: int

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), len(self.labels))

    @property
    def n_a(self) -> int:
        return self.order + 1

    def matrix(self) -> RFMatrix:
        pr = self.param_ring
        return RFMatrix(pr, [[Polynomial(pr, x) for x in row] for row in self.rows])


class _Assembler:
    """Shared quotient data for systems of one term at one order."""

    def __init__(self, F: HyperTerm, qs: QuotientSet):
        self.F = F
        self.qs = qs
        self.ring = F.ring
        self.param_ring = F.param_ring
        i, j = F.sum_vars
        self.i, self.j = i, j
        self.ii = self.ring.index(i)
        self.jj = self.ring.index(j)
        self.p = qs.numerators()  # p_l = d * F(n+l)/F, p_0 = d
        # map full-ring exponents to param-ring exponents
        self._keep = [k for k in range(self.ring.nvars) if k not in (self.ii, self.jj)]
        self._pctx = self.param_ring.ctx

    def multipliers(self, g1: Polynomial, g2: Polynomial):
        qs, i, j = self.qs, self.i, self.j
        d = qs.d
        t1 = RationalFunction(qs.r1, qs.s1 * d.shift(i, 1) * g1.shift(i, 1))
        t3 = RationalFunction(qs.r2, qs.s2 * d.shift(j, 1) * g2.shift(j, 1))
        dg1 = d * g1
        dg2 = d * g2
        D = poly_lcm(poly_lcm(poly_lcm(d, t1.den), poly_lcm(dg1, t3.den)), dg2)
        m1 = t1.num * exact_div(D, t1.den)
        m2 = exact_div(D, dg1)
        m3 = t3.num * exact_div(D, t3.den)
        m4 = exact_div(D, dg2)
        cl = [pl * exact_div(D, d) for pl in self.p]
        return cl, m1, m2, m3, m4

    def split(self, poly: Polynomial) -> dict[tuple[int, int], object]:
        """Coefficients w.r.t. (i, j) as raw param-ring polynomials."""
        buckets: dict[tuple[int, int], dict] = {}
        ii, jj, keep = self.ii, self.jj, self._keep
        for e, c in poly.raw.terms():
            key = (int(e[ii]), int(e[jj]))
            sub = tuple(int(e[k]) for k in keep)
            buckets.setdefault(key, {})[sub] = c
        return {k: self._pctx.from_dict(v) for k, v in buckets.items()}

    def columns(self, g1, g2, deg1, deg2):
        cl, m1, m2, m3, m4 = self.multipliers(g1, g2)
        ring, i, j = self.ring, self.i, self.j
        I, J = ring.gen(i), ring.gen(j)
        Ip, Jp = I + 1, J + 1
        cols, labels = [], []
        for l, c in enumerate(cl):
            cols.append(self.split(c))
            labels.append(("a", l))
        pw = _Powers(I, J, Ip, Jp)
        for a, b in _monomials(deg1):
            mono = pw.get(a, b)
            shifted = pw.get_shifted_i(a, b)
            cols.append(self.split(-(shifted * m1 - mono * m2)))
            labels.append(("f1", a, b))
        for a, b in _monomials(deg2):
            mono = pw.get(a, b)
            shifted = pw.get_shifted_j(a, b)
            cols.append(self.split(-(shifted * m3 - mono * m4)))
            labels.append(("f2", a, b))
        return cols, labels


class _Powers:
    def __init__(self, I, J, Ip, Jp):
        self.I, self.J, self.Ip, self.Jp = I, J, Ip, Jp
        self._cache: dict = {}

    def _pow(self, base_name, base, k):
        key = (base_name, k)
        if key not in self._cache:
            self._cache[key] = base**k
        return self._cache[key]

    def get(self, a, b):
        return self._pow("I", self.I, a) * self._pow("J", self.J, b)

    def get_shifted_i(self, a, b):
        return self._pow("Ip", self.Ip, a) * self._pow("J", self.J, b)

    def get_shifted_j(self, a, b):
        return self._pow("I", self.I, a) * self._pow("Jp", self.Jp, b)


def _to_rows(cols, ncols, pctx):
    keys = set()
    for c in cols:
        keys.update(c)
    order = sorted(keys, key=lambda k: (-(k[0] + k[1]), -k[0]))
    zero = pctx.from_dict({})
    rows = []
    for key in order:
        rows.append([c.get(key, zero) for c in cols])
    return rows


def _sum_degree(p: Polynomial, sum_vars) -> int:
    return max(p.total_degree(sum_vars), 0)


def assemble_system(
    F: HyperTerm,
    r: int,
    g1: Polynomial,
    g2: Polynomial,
    deg1: int,
    deg2: int,
    qs: QuotientSet | None = None,
) -> LinearSystem:
    """Linear system whose nullspace parametrizes all ``(a_0..a_r, f1, f2)``.

    Unknowns are ordered ``a_0..a_r``, then the coefficients of ``f1``
    (monomials of total degree <= deg1), then those of ``f2``.
    """
    qs = qs or _quotients(F, r)
    asm = _Assembler(F, qs)
    cols, labels = asm.columns(g1.to_ring(F.ring), g2.to_ring(F.ring), deg1, deg2)
    rows = _to_rows(cols, len(cols), F.param_ring.ctx)
    return LinearSystem(F.ring, F.param_ring, rows, labels, r, qs.d, g1, g2, deg1, deg2)


def _quotients(F: HyperTerm, r: int) -> QuotientSet:
    return quotient_set(F, r)


# -- solving ------------------------------------------------------------------


@dataclass(frozen=True)
class _Structure:
    """Modular image of a system with the operator columns ordered last."""

    rank: int
    pivots: tuple[int, ...]
    free_a: tuple[int, ...]

    @property
    def has_telescoper(self) -> bool:
        return bool(self.free_a)


def _column_order(system: LinearSystem) -> list[int]:
    n_a, nc = system.n_a, len(system.labels)
    return list(range(n_a, nc)) + list(range(n_a))


def _probe(system: LinearSystem, rng: random.Random) -> _Structure:
    """Rank profile at a random specialization.

    With the operator columns last, an operator column is free exactly when
    some solution with a nonzero operator part exists (for this
    specialization, which generically agrees with the symbolic system).
    """
    order = _column_order(system)
    rows = [[row[c] for c in order] for row in system.rows]
    values = [flint.fmpq(rng.randrange(1 << 20, 1 << 40)) for _ in system.param_ring.names]
    mat = _modular_image_q(rows, len(order), values, _PRIME)
    pivots = _rref_pivots(mat)
    taken = set(pivots)
    first_a = len(order) - system.n_a
    free_a = tuple(order[c] for c in range(first_a, len(order)) if c not in taken)
    return _Structure(len(pivots), tuple(order[c] for c in pivots), free_a)


def _particular_solution(system: LinearSystem, structure: _Structure, seed: int):
    """One exact solution with a nonzero operator part, or None.

    All free unknowns but the last free operator coefficient are set to
    zero, which leaves a system with a one-dimensional nullspace; only the
    pivot columns and that coefficient enter the exact elimination.
    """
    if not structure.has_telescoper:
        return None
    keep = list(structure.pivots) + [structure.free_a[-1]]
    sub = [[row[c] for c in keep] for row in system.rows]
    try:
        if system.param_ring.nvars == 1:
            basis = [univariate_kernel_vector(sub, len(keep), system.param_ring, seed=seed)]
        else:
            basis = poly_nullspace(sub, len(keep), system.param_ring, seed=seed)
    except PolynomialError:
        return None
    zero = system.param_ring.ctx.from_dict({})
    for v in basis:
        full = [zero] * len(system.labels)
        for c, x in zip(keep, v):
            full[c] = x
        if any(not x.is_zero() for x in full[: system.n_a]):
            return full
    return None


def _rational_content(polys: Iterable[Polynomial]) -> Fraction:
    num, den = 0, 1
    for p in polys:
        for c in p.terms.values():
            num = math.gcd(num, c.numerator)
            den = math.lcm(den, c.denominator)
    return Fraction(num, den)


def normalize_certificate(F: HyperTerm, system: LinearSystem, vector: Sequence, trace=()) -> Certificate:
    """Build a certificate from a nullspace vector with polynomial entries.

    The vector is made primitive as a whole (as polynomials in the
    recurrence variable and parameters), then divided by the rational
    content of the operator coefficients and signed so that the top one
    has a positive leading coefficient. Common polynomial factors of the
    operator are kept, since removing them would make ``f1, f2`` rational.
    """
    pr, ring = system.param_ring, system.ring
    n_a = system.n_a
    if all(x.is_zero() for x in vector[:n_a]):
        raise ValueError("certificate vector has a zero operator part")
    nz = _row_primitive({k: x for k, x in enumerate(vector) if not x.is_zero()})
    top = max(k for k in nz if k < n_a)
    ops = [Polynomial(pr, nz[k]) if k in nz else pr.zero() for k in range(top + 1)]
    unit = _rational_content(ops)
    if ops[top].leading_coefficient() < 0:
        unit = -unit
    coeffs = tuple(x / unit for x in ops)

    ii, jj = ring.index(F.sum_vars[0]), ring.index(F.sum_vars[1])
    keep = [k for k in range(ring.nvars) if k not in (ii, jj)]
    parts: dict[str, dict] = {"f1": {}, "f2": {}}
    for k, x in nz.items():
        if k < n_a:
            continue
        kind, a, b = system.labels[k]
        for e, c in x.terms():
            full = [0] * ring.nvars
            for slot, ek in zip(keep, e):
                full[slot] = int(ek)
            full[ii] += a
            full[jj] += b
            parts[kind][tuple(full)] = c
    f1 = ring.from_terms(parts["f1"]) / unit
    f2 = ring.from_terms(parts["f2"]) / unit
    d = system.d.to_ring(ring)
    g1 = system.g1.to_ring(ring)
    g2 = system.g2.to_ring(ring)
    return Certificate(
        shift_var=F.rec_var,
        coeffs=coeffs,
        R1=RationalFunction(f1, d * g1),
        R2=RationalFunction(f2, d * g2),
        d=d,
        g1=g1,
        g2=g2,
        f1=f1,
        f2=f2,
        sum_vars=F.sum_vars,
        search_trace=tuple(trace),
    )


def _degrees(qs: QuotientSet, g1: Polynomial, g2: Polynomial, sum_vars, excess: int) -> tuple[int, int]:
    return (
        _sum_degree(qs.d * g1, sum_vars) + excess,
        _sum_degree(qs.d * g2, sum_vars) + excess,
    )


def _attempt(F, qs, r, g1, g2, excess, rng, seed):
    deg1, deg2 = _degrees(qs, g1, g2, F.sum_vars, excess)
    t0 = time.perf_counter()
    system = assemble_system(F, r, g1, g2, deg1, deg2, qs=qs)
    structure = _probe(system, rng)
    entry = {
        "order": r,
        "excess": excess,
        "g1": str(g1),
        "g2": str(g2),
        "deg_f1": deg1,
        "deg_f2": deg2,
        "shape": list(system.shape),
        "nullity": len(system.labels) - structure.rank,
        "telescoper": structure.has_telescoper,
    }
    vector = _particular_solution(system, structure, seed)
    if structure.has_telescoper:
        entry["solved"] = vector is not None
    entry["seconds"] = round(time.perf_counter() - t0, 3)
    return system, entry, vector


def solve_fixed(
    F: HyperTerm,
    r: int,
    g1: Polynomial,
    g2: Polynomial,
    excess: int = 1,
    seed: int = 0,
) -> Certificate | None:
    """One solve at fixed order, denominators and degree excess."""
    qs = _quotients(F, r)
    ring = F.ring
    system, entry, vector = _attempt(F, qs, r, g1.to_ring(ring), g2.to_ring(ring), excess, random.Random(seed), seed)
    if vector is None:
        return None
    return normalize_certificate(F, system, vector, [entry])


def _denominator_pairs(F: HyperTerm, opts: SolveOptions):
    if opts.denominators == "theorem":
        b = theorem_bound(F, opts.w2_variant)
        g1, g2, f1, f2 = b.G1, b.G2, b.factors1, b.factors2
    else:
        est = estden(F, opts.w2_variant)
        g1, g2, f1, f2 = est.g1, est.g2, est.factors1, est.factors2
    if not opts.reduce:
        return [(g1, g2)]
    return reduction_candidates(g1, g2, f1, f2, F.sum_vars, opts.one_sided)


def bizeil(F: HyperTerm, opts: SolveOptions | None = None) -> Certificate:
    """Find ``L, R1, R2`` by increasing the operator order.

    At each order the denominator candidates are tried in list order (the
    unreduced pair last). A candidate starts at the initial degree excess
    (numerator degree minus the degree of ``d*g``); while its system has
    only solutions with a zero operator part, the excess is raised up to
    the maximum. The first solution with a nonzero operator part wins.
    """
    opts = opts or SolveOptions()
    pairs = _denominator_pairs(F, opts)
    trace: list[dict] = []
    for r in range(opts.max_order + 1):
        qs = _quotients(F, r)
        for idx, (g1, g2) in enumerate(pairs):
            for excess in range(opts.initial_excess, opts.max_excess + 1):
                rng = random.Random(f"{opts.seed}:{r}:{idx}:{excess}")
                system, entry, vector = _attempt(F, qs, r, g1, g2, excess, rng, opts.seed)
                entry["candidate"] = idx
                trace.append(entry)
                if vector is not None:
                    log.info("certificate at order %d, candidate %d, excess %d", r, idx, excess)
                    return normalize_certificate(F, system, vector, trace)
                log.debug("no telescoper: %s", entry)
                if entry["nullity"] == 0:
                    break
    raise NoCertificateFound(
        f"no certificate found within order {opts.max_order} and degree excess {opts.max_excess}", trace
    )


# -- serialization -----------------------------------------------------------


def certificate_to_json(cert: Certificate) -> dict:
    return {
        "shift_var": cert.shift_var,
        "sum_vars": list(cert.sum_vars),
        "variables": list(cert.ring.names),
        "order": cert.order,
        "coeffs": [str(a) for a in cert.coeffs],
        "R1": {"num": str(cert.R1.num), "den": str(cert.R1.den)},
        "R2": {"num": str(cert.R2.num), "den": str(cert.R2.den)},
        "d": str(cert.d),
        "g1": str(cert.g1),
        "g2": str(cert.g2),
        "f1": str(cert.f1),
        "f2": str(cert.f2),
        "search_trace": list(cert.search_trace),
    }


def certificate_from_json(data: dict | str) -> Certificate:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        ring = Ring(tuple(data["variables"]))
        shift_var = data["shift_var"]
        sum_vars = tuple(data["sum_vars"])
        pr = Ring(tuple(v for v in ring.names if v not in sum_vars))
        coeffs = tuple(pr.parse(s) for s in data["coeffs"])
        P = ring.parse
        R1 = RationalFunction(P(data["R1"]["num"]), P(data["R1"]["den"]))
        R2 = RationalFunction(P(data["R2"]["num"]), P(data["R2"]["den"]))
        return Certificate(
            shift_var=shift_var,
            coeffs=coeffs,
            R1=R1,
            R2=R2,
            d=P(data.get("d", "1")),
            g1=P(data.get("g1", "1")),
            g2=P(data.get("g2", "1")),
            f1=P(data.get("f1", "0")),
            f2=P(data.get("f2", "0")),
            sum_vars=sum_vars,
            search_trace=tuple(data.get("search_trace", ())),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed certificate document: {exc}") from exc
