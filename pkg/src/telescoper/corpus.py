"""The seven bundled double-sum identities with their reference data.

Reference strings use the package's polynomial syntax. Operator
coefficients are compared after content normalization (see
:func:`normalize_operator`), denominators up to a constant factor.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

from .certify import (
    ClosedForm,
    SingleSum,
    identity_numeric_check,
    sum_annihilation_check,
    verify_certificate,
    verify_numeric,
)
from .denest import estden, reduction_candidates
from .hyperterm import HyperTerm
from .parsing import parse_expression, parse_polynomial, parse_term
from .polykernel import Polynomial, RationalFunction, Ring
from .telescope import Certificate, NoCertificateFound, SolveOptions, bizeil, primitive_operator

__all__ = [
    "CorpusExample",
    "EXAMPLES",
    "example",
    "normalize_operator",
    "operators_match",
    "ExampleResult",
    "run_example",
    "run_corpus",
    "pipeline_timings",
    "same_up_to_constant",
]


@dataclass(frozen=True)
class CorpusExample:
    key: int
    name: str
    source: str
    rec_var: str
    sum_vars: tuple[str, str]
    params: tuple[str, ...] = ()
    # bounds per summation variable, as polynomials in the other symbols
    support: tuple[tuple[str, str], tuple[str, str]] | None = None
    rhs: Mapping[str, str] | None = None
    operator: tuple[str, ...] | None = None
    order: int | None = None
    estden: tuple[str, str] | None = None
    theorem: tuple[str, str] | None = None
    reduced: tuple[str, str] | None = None
    d: str | None = None
    R1: tuple[str, str] | None = None
    R2: tuple[str, str] | None = None
    param_values: Mapping[str, int] = field(default_factory=dict)
    n_range: tuple[int, int] = (0, 8)
    homogeneous: bool = True
    slow: bool = False

    @property
    def term(self) -> HyperTerm:
        return parse_term(self.source, self.rec_var, self.sum_vars, self.params)

    @property
    def ring(self) -> Ring:
        return self.term.ring

    def poly(self, text: str) -> Polynomial:
        return parse_polynomial(text, self.ring)

    def rational(self, pair: tuple[str, str]) -> RationalFunction:
        return RationalFunction(self.poly(pair[0]), self.poly(pair[1]))

    def golden_operator(self) -> list[Polynomial] | None:
        if self.operator is None:
            return None
        pr = self.term.param_ring
        return [parse_polynomial(s, pr) for s in self.operator]

    def support_rule(self):
        if self.support is None:
            return None
        i, j = self.sum_vars
        bounds = [(self.poly(lo), self.poly(hi)) for lo, hi in self.support]

        def rule(point):
            out = {}
            for v, (lo, hi) in zip((i, j), bounds):
                out[v] = (int(lo.evaluate(point)), int(hi.evaluate(point)))
            return out

        return rule

    def rhs_spec(self):
        if self.rhs is None:
            return None
        names = (self.rec_var, *self.params)
        if self.rhs["kind"] == "closed":
            return ClosedForm(parse_expression(self.rhs["expr"], names))
        index = self.rhs["index"]
        expr = parse_expression(self.rhs["expr"], (*names, index))
        pr = Ring(names)
        return SingleSum(expr, index, parse_polynomial(self.rhs["lower"], pr), parse_polynomial(self.rhs["upper"], pr))


def _sum(expr: str, upper: str = "n", index: str = "k") -> dict:
    return {"kind": "sum", "expr": expr, "index": index, "lower": "0", "upper": upper}


EXAMPLES: tuple[CorpusExample, ...] = (
    CorpusExample(
        1,
        "Andrews-Paule",
        "binom(i+j,i)^2*binom(4*n-2*i-2*j,2*n-2*i)",
        "n",
        ("i", "j"),
        rhs={"kind": "closed", "expr": "(2*n+1)*binom(2*n,n)^2"},
        operator=("2*n+1",),
        order=0,
        estden=("(2*n-2*i+1)*(n-i+1)*(j+1)^2", "(2*n-2*i+1)*(n-i+1)*(i+1)^2"),
        theorem=(
            "(2*n-2*i+1)*(n-i+1)*(2*n-2*j+1)*(n-j+1)*(i+j)^2*(j+1)^2",
            "(2*n-2*i+1)*(n-i+1)*(2*n-2*j+1)*(n-j+1)*(i+j)^2*(i+1)^2",
        ),
        reduced=("(2*n-2*i+1)*(j+1)^2", "(2*n-2*i+1)*(n-i+1)"),
        d="1",
        R1=(
            "i^2*(6*n^2+5*n+1+6*j*n^2+j*n-j-i*n+2*i*n^2-2*i-4*j^2*n-2*j^2-3*i*j-4*i*j*n)",
            "(2*n-2*i+1)*(1+j)^2",
        ),
        R2=("-2*n^2+2*j*n^2+6*i*n^2+9*i*n+3*j*n-4*i*j*n-4*i^2*n-n+j-3*i*j+2*i-4*i^2", "2*n-2*i+1"),
        n_range=(0, 10),
        homogeneous=False,
    ),
    CorpusExample(
        2,
        "Carlitz (1968)",
        "binom(i+j,i)*binom(n-i,j)*binom(n-j,n-i-j)",
        "n",
        ("i", "j"),
        rhs=_sum("binom(2*k,k)"),
        operator=("4*n+6", "-(5*n+8)", "n+2"),
        order=2,
        estden=("(j+1)^2*(j-n)", "(i+1)^2*(i-n)"),
        reduced=("(j+1)^2", "i+1"),
        d="(-n+i-1+j)^2*(-n+i-2+j)^2",
        R1=(
            "-i^2*(-n+i-1)*(36-10*j*i^2*n-13*j^2*n*i+60*j^2+60*j*i-2*i^2-38*j^2*i-8*j*i^2+10*i^3"
            "+36*n^3-11*i*n^3-14*j*n^3-2*i^4-92*j*n^2+8*i^2*n-80*i*n+5*j^2*n^2+8*j^2*i^2+88*j*i*n"
            "+42*j^2*n-172*j*n+24*j*i*n^2+5*i^2*n^2+3*i^3*n-54*i*n^2+88*n^2+4*j^3*n-90*j+6*j^3"
            "-40*i+5*n^4+90*n)",
            "(-n+i-1+j)^2*(-n+i-2+j)^2*(j+1)^2",
        ),
        R2=(
            "(64-19*j*i^2*n-6*j^2*n*i+14*j^2+74*j*i+54*i^2-10*j^2*i-36*j*i^2+2*i^3+39*n^3"
            "-16*i*n^3-9*j*n^3-4*i^4+6*j*i^3-53*j*n^2+50*i^2*n-176*i*n+4*j^2*n^2+4*j^2*i^2+5*n^4"
            "+83*j*i*n+16*j^2*n-100*j*n+22*j*i*n^2+11*i^2*n^2+4*i^3*n-93*i*n^2+112*n^2-60*j"
            "-108*i+140*n)*(-n-1+j)",
            "(-n+i-2+j)^2*(-n+i-1+j)^2",
        ),
    ),
    CorpusExample(
        3,
        "Carlitz (1964)",
        "binom(i+j,i)*binom(m-i+j,j)*binom(n-j+i,i)*binom(m+n-i-j,m-i)",
        "n",
        ("i", "j"),
        ("m",),
        support=(("0", "m"), ("0", "n")),
        rhs=_sum("fact(m+n+1)/fact(m)/fact(n)*fact(2*k)/fact(2*k+1)*binom(m,k)*binom(n,k)"),
        operator=("2*(m+3+n)*(2+m+n)^2", "-(3*m+2*n*m+4*n^2+14+15*n)*(n+m+3)", "(2*n+5)*(n+2)^2"),
        order=2,
        reduced=("(n-j+i)*(1+j)", "m-i+j"),
        d="(-n+j-1)^2*(-n+j-2)^2",
        param_values={"m": 3},
    ),
    CorpusExample(
        4,
        "Apery-Schmidt-Strehl",
        "binom(n,j)*binom(n+j,j)*binom(j,i)^3",
        "n",
        ("i", "j"),
        rhs=_sum("binom(n,k)^2*binom(n+k,k)^2"),
        operator=("(n+1)^3", "-(3+2*n)*(17*n^2+51*n+39)", "(n+2)^3"),
        order=2,
        reduced=("(-j-1+i)^2", "i+1"),
        d="(n+2-j)*(n+1-j)",
        R1=(
            "-2*i^2*(3+2*n)*(-10+30*j^2-49*n^2-j^3-4*n^4-24*n^3-2*n^2*i^2+n^2*i-6*n*i^2+3*n*i"
            "+3*n*j*i+n^2*j*i+3*j^2*i^2-3*j^3*i+3*j*i-4*i^2-2*j^2*i-2*j*i^2+11*n^2*j^2+6*n^2*j"
            "+33*n*j^2+18*n*j-6*j^4+2*i+15*j-39*n)",
            "(n+2-j)*(n+1-j)*(-j-1+i)^2",
        ),
        R2=(
            "2*(-j+i)*(3+2*n)*(-8*n^2*i-4*n^2*i^2-4*n^2*j*i+4*n^2*j+4*n^2*j^2+12*n*j-12*n*j*i"
            "-24*n*i+12*n*j^2-12*n*i^2+12*j^2-4*j*i^2+j^3+6*j^2*i^2-3*j^4+8*j+5*j^2*i-8*i^2"
            "+3*j^3*i-16*i-16*j*i)",
            "(n+2-j)*(n+1-j)*(i+1)",
        ),
    ),
    CorpusExample(
        5,
        "Strehl",
        "binom(n,j)*binom(n+j,j)*binom(j,i)^2*binom(2*i,i)^2*binom(2*i,j-i)",
        "n",
        ("i", "j"),
        rhs=_sum("binom(n,k)^3*binom(n+k,k)^3"),
        order=6,
        reduced=("(j+1-i)^3", "(-3*i-1+j)*(i+1)^3"),
        d="(n+1-j)*(n+2-j)*(n+3-j)*(n+4-j)*(n+5-j)*(n+6-j)",
        n_range=(0, 6),
        slow=True,
    ),
    CorpusExample(
        6,
        "Graham-Knuth-Patashnik",
        "(-1)^(j+k)*binom(j+k,k+l)*binom(r,j)*binom(n,k)*binom(s+n-j-k,m-j)",
        "r",
        ("j", "k"),
        ("n", "s", "l", "m"),
        support=(("0", "r"), ("0", "n")),
        rhs={"kind": "closed", "expr": "(-1)^(l)*binom(n+r,n+l)*binom(s-r,m-n-l)"},
        operator=("(r+n+1)*(n+s+l-m-r)", "(r-l+1)*(r-s)"),
        order=1,
        reduced=("(k+1)*(k+l+1)", "1"),
        d="r-j+1",
        param_values={"n": 3, "s": 5, "l": 1, "m": 4},
    ),
    CorpusExample(
        7,
        "Petkovsek-Wilf-Zeilberger",
        "(-1)^(n+r+s)*binom(n,r)*binom(n,s)*binom(n+s,s)*binom(n+r,r)*binom(2*n-r-s,n)",
        "n",
        ("r", "s"),
        rhs=_sum("binom(n,k)^4"),
        operator=("4*(4*n+5)*(4*n+3)*(n+1)", "2*(2*n+3)*(3*n^2+9*n+7)", "-(n+2)^3"),
        order=2,
        reduced=("(n+r)*(n+1-r)*(s+1)", "(n+r)*(n+1-r)"),
        d="(n+1)*(n+2)*(n+1-r)*(n+2-r)*(n+1-s)*(n+2-s)*(n-r-s+1)*(n+2-r-s)",
    ),
)


def example(key: int | str) -> CorpusExample:
    for ex in EXAMPLES:
        if str(ex.key) == str(key) or ex.name.lower() == str(key).lower():
            return ex
    raise KeyError(f"no bundled example {key!r}")


# -- comparisons ---------------------------------------------------------------


def normalize_operator(coeffs) -> list[Polynomial]:
    """Divide by the joint gcd and rational content; top coefficient positive."""
    return list(primitive_operator(coeffs))


def operators_match(ours, golden) -> bool:
    if len(ours) != len(golden):
        return False
    ring = golden[0].ring
    return normalize_operator([c.to_ring(ring) for c in ours]) == normalize_operator(golden)


def same_up_to_constant(a: Polynomial, b: Polynomial) -> bool:
    a, b = a.to_ring(b.ring), b
    if a.is_zero() or b.is_zero():
        return a.is_zero() and b.is_zero()
    return a.unit_normal() == b.unit_normal()


# -- running -------------------------------------------------------------------


@dataclass
class ExampleResult:
    example: CorpusExample
    certificate: Certificate | None
    seconds: float
    checks: dict[str, bool | None] = field(default_factory=dict)
    error: str | None = None
    timings: dict[str, float | None] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None and all(v is not False for v in self.checks.values())

    def to_dict(self) -> dict:
        cert = self.certificate
        return {
            "key": self.example.key,
            "name": self.example.name,
            "ok": self.ok,
            "order": None if cert is None else cert.order,
            "operator": None if cert is None else [str(a) for a in cert.coeffs],
            "checks": self.checks,
            "seconds": round(self.seconds, 3),
            "timings": {k: None if v is None else round(v, 3) for k, v in self.timings.items()},
            "error": self.error,
        }


def run_example(
    ex: CorpusExample,
    opts: SolveOptions | None = None,
    *,
    trials: int = 20,
    seed: int = 0,
    sums: bool = True,
) -> ExampleResult:
    """Solve one example and compare it with the reference data."""
    opts = opts or SolveOptions(seed=seed)
    F = ex.term
    t0 = time.perf_counter()
    try:
        cert = bizeil(F, opts)
    except NoCertificateFound as exc:
        return ExampleResult(ex, None, time.perf_counter() - t0, error=str(exc))
    res = ExampleResult(ex, cert, time.perf_counter() - t0)
    checks = res.checks
    golden = ex.golden_operator()
    if golden is not None:
        checks["operator"] = operators_match(cert.coeffs, golden)
    if ex.order is not None:
        checks["order"] = cert.order == ex.order
    checks["symbolic"] = bool(verify_certificate(F, cert))
    num = verify_numeric(F, cert, trials, seed, params=ex.param_values or None)
    checks["numeric"] = bool(num) if num.conclusive else None
    if ex.reduced is not None:
        est = estden(F)
        pairs = reduction_candidates(est.g1, est.g2, est.factors1, est.factors2, F.sum_vars)
        want = tuple(ex.poly(s).unit_normal() for s in ex.reduced)
        checks["reduced_pair_listed"] = want in pairs
    if sums:
        support = ex.support_rule()
        rng = ex.n_range
        if ex.homogeneous:
            checks["annihilation"] = bool(
                sum_annihilation_check(F, cert, rng, support, ex.param_values or None)
            )
        rhs = ex.rhs_spec()
        if rhs is not None:
            checks["identity"] = bool(identity_numeric_check(F, rhs, rng, support, ex.param_values or None))
    return res


def pipeline_timings(ex: CorpusExample, seed: int = 0, budget: float | None = None) -> dict[str, float | None]:
    """Wall time of the reduced, unreduced EstDen and theorem-bound searches.

    A pipeline that finds no certificate within the default bounds is
    recorded as None.
    """
    F = ex.term
    out: dict[str, float | None] = {}
    for name, opts in (
        ("reduced", SolveOptions(seed=seed)),
        ("estden", SolveOptions(seed=seed, reduce=False)),
        ("theorem", SolveOptions(seed=seed, reduce=False, denominators="theorem")),
    ):
        t0 = time.perf_counter()
        try:
            bizeil(F, opts)
            out[name] = time.perf_counter() - t0
        except NoCertificateFound:
            out[name] = None
    return out


def run_corpus(
    include_slow: bool = False,
    *,
    seed: int = 0,
    trials: int = 20,
    timings: bool = True,
    keys=None,
) -> list[ExampleResult]:
    results = []
    for ex in EXAMPLES:
        if keys is not None and ex.key not in keys:
            continue
        if ex.slow and not include_slow:
            continue
        res = run_example(ex, SolveOptions(seed=seed), trials=trials, seed=seed)
        if timings and ex.key == 1:
            res.timings = pipeline_timings(ex, seed)
        results.append(res)
    return results
