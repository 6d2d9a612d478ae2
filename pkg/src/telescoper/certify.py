"""Independent checks of telescoping certificates.

``verify_certificate`` works in the field of rational functions and is
the authoritative test. The numeric checks evaluate the term itself at
integer points, so they share no code path with the solver beyond the
term representation and serve as a cross-check against symbolic bugs.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .hyperterm import EvaluationError, Expression, HyperTerm, eval_sum, eval_term, shift_quotient
from .polykernel import Polynomial, RationalFunction
from .telescope import Certificate

__all__ = [
    "CertificateError",
    "Verdict",
    "ClosedForm",
    "SingleSum",
    "verify_certificate",
    "verify_numeric",
    "sum_annihilation_check",
    "identity_numeric_check",
    "VerificationReport",
    "default_support",
    "certificate_residual",
    "full_report",
]

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


class CertificateError(ValueError):
    """The certificate is malformed for the given term."""


@dataclass
class Verdict:
    """Outcome of one check; truthy only when the check passed."""

    name: str
    status: str
    detail: str = ""
    residual: str | None = None
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.status == PASS

    @property
    def conclusive(self) -> bool:
        return self.status != INCONCLUSIVE

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status, "seconds": round(self.seconds, 4)}
        if self.detail:
            out["detail"] = self.detail
        if self.residual is not None:
            out["residual"] = self.residual
        if self.data:
            out["data"] = self.data
        return out


def _check_shape(F: HyperTerm, cert: Certificate) -> None:
    if not cert.coeffs:
        raise CertificateError("certificate has no operator coefficients")
    if all(a.is_zero() for a in cert.coeffs):
        raise CertificateError("all operator coefficients are zero")
    if cert.shift_var != F.rec_var:
        raise CertificateError(f"certificate shifts {cert.shift_var!r}, term recurs in {F.rec_var!r}")
    if tuple(cert.sum_vars) != tuple(F.sum_vars):
        raise CertificateError(f"summation variables {cert.sum_vars} differ from {F.sum_vars}")
    names = set(F.variables)
    for a in cert.coeffs:
        extra = set(a.free_symbols()) - names
        if extra:
            raise CertificateError(f"operator coefficient uses undeclared symbols {sorted(extra)}")
        if set(a.free_symbols()) & set(F.sum_vars):
            raise CertificateError("operator coefficients must not involve summation variables")
    for R in (cert.R1, cert.R2):
        extra = set(R.num.free_symbols()) | set(R.den.free_symbols())
        extra -= names
        if extra:
            raise CertificateError(f"certificate uses undeclared symbols {sorted(extra)}")


def _lift(R: RationalFunction, F: HyperTerm) -> RationalFunction:
    return R if R.ring is F.ring else R.to_ring(F.ring)


def certificate_residual(F: HyperTerm, cert: Certificate) -> RationalFunction:
    """``sum a_l q_l`` minus the telescoped right-hand side, divided by ``F``."""
    _check_shape(F, cert)
    ring = F.ring
    i, j = F.sum_vars
    lhs = RationalFunction(ring.zero())
    for l, a in enumerate(cert.coeffs):
        if a.is_zero():
            continue
        q = shift_quotient(F, F.rec_var, l)
        lhs = lhs + q * a.to_ring(ring)
    R1, R2 = _lift(cert.R1, F), _lift(cert.R2, F)
    rhs = R1.shift(i, 1) * shift_quotient(F, i, 1) - R1 + R2.shift(j, 1) * shift_quotient(F, j, 1) - R2
    return lhs - rhs


def verify_certificate(F: HyperTerm, cert: Certificate) -> Verdict:
    """Exact check of the telescoping relation as an identity of rational functions."""
    t0 = time.perf_counter()
    res = certificate_residual(F, cert)
    ok = res.is_zero()
    return Verdict(
        "symbolic",
        PASS if ok else FAIL,
        "" if ok else "residual is nonzero",
        None if ok else str(res),
        time.perf_counter() - t0,
    )


# -- numeric ------------------------------------------------------------------


def _sample_box(F: HyperTerm, cert: Certificate, width: int) -> tuple[int, int]:
    lo = cert.order + 1
    return lo, lo + width


def _point_value(F: HyperTerm, cert: Certificate, pt: dict) -> tuple[Fraction, Fraction] | None:
    """Both sides of the relation at ``pt``, or None where not admissible."""
    i, j = F.sum_vars
    n = F.rec_var
    try:
        f0 = eval_term(F, pt)
        if f0 == 0:
            return None
        lhs = Fraction(0)
        for l, a in enumerate(cert.coeffs):
            if a.is_zero():
                continue
            lhs += a.evaluate(pt) * eval_term(F, {**pt, n: pt[n] + l})
        pi = {**pt, i: pt[i] + 1}
        pj = {**pt, j: pt[j] + 1}
        vals = []
        for R, q in ((cert.R1, pi), (cert.R2, pj)):
            d0, d1 = R.den.evaluate(pt), R.den.evaluate(q)
            if d0 == 0 or d1 == 0:
                return None
            vals.append(R.num.evaluate(q) / d1 * eval_term(F, q) - R.num.evaluate(pt) / d0 * f0)
    except EvaluationError:
        return None
    return lhs, vals[0] + vals[1]


def verify_numeric(
    F: HyperTerm,
    cert: Certificate,
    trials: int = 20,
    seed: int = 0,
    *,
    width: int = 50,
    max_resample: int = 100,
    params: Mapping[str, int] | None = None,
) -> Verdict:
    """Check the relation multiplied by ``F`` at random integer points, exactly.

    The recurrence variable (and each parameter not fixed in ``params``)
    is drawn from ``[order + 1, order + 1 + width]``; the summation
    variables from ``[0, value of the recurrence variable]``. Points where
    ``F`` vanishes, an atom is undefined or a certificate denominator is
    zero are redrawn, up to ``max_resample`` times per point.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _check_shape(F, cert)
    t0 = time.perf_counter()
    rng = random.Random(seed)
    lo, hi = _sample_box(F, cert, width)
    params = dict(params or {})
    i, j = F.sum_vars
    n = F.rec_var
    checked = []
    for _ in range(trials):
        for _ in range(max_resample):
            pt = {p: params[p] if p in params else rng.randint(lo, hi) for p in F.params}
            pt[n] = rng.randint(lo, hi)
            pt[i] = rng.randint(0, pt[n])
            pt[j] = rng.randint(0, pt[n])
            sides = _point_value(F, cert, pt)
            if sides is not None:
                break
        else:
            return Verdict(
                "numeric",
                INCONCLUSIVE,
                f"no admissible point after {max_resample} draws",
                seconds=time.perf_counter() - t0,
                data={"checked": len(checked)},
            )
        lhs, rhs = sides
        if lhs != rhs:
            return Verdict(
                "numeric",
                FAIL,
                f"sides differ at {pt}",
                str(lhs - rhs),
                time.perf_counter() - t0,
                {"point": pt, "checked": len(checked)},
            )
        checked.append(pt)
    return Verdict("numeric", PASS, f"{trials} points", seconds=time.perf_counter() - t0, data={"checked": trials})


# -- sums -----------------------------------------------------------------------

Support = Callable[[Mapping[str, int]], Mapping[str, tuple[int, int]]]


def default_support(F: HyperTerm) -> Support:
    """Both summation variables over ``[0, value of the recurrence variable]``."""
    i, j = F.sum_vars

    def rule(point):
        top = point[F.rec_var]
        return {i: (0, top), j: (0, top)}

    return rule


def _sum_at(F: HyperTerm, support: Support, point: Mapping[str, int]) -> Fraction:
    return eval_sum(F, support(point), point)


def sum_annihilation_check(
    F: HyperTerm,
    cert: Certificate,
    n_range: tuple[int, int] = (0, 8),
    support: Support | None = None,
    params: Mapping[str, int] | None = None,
) -> Verdict:
    """Check ``sum_l a_l(n) S(n+l) = 0`` for the double sum ``S`` over ``n`` in ``n_range``."""
    _check_shape(F, cert)
    t0 = time.perf_counter()
    support = support or default_support(F)
    params = dict(params or {})
    missing = [p for p in F.params if p not in params]
    if missing:
        raise ValueError(f"values needed for parameters {missing}")
    lo, hi = n_range
    S = {}
    for m in range(lo, hi + cert.order + 1):
        pt = {**params, F.rec_var: m}
        S[m] = _sum_at(F, support, pt)
    bad = []
    for m in range(lo, hi + 1):
        pt = {**params, F.rec_var: m}
        total = sum(a.evaluate(pt) * S[m + l] for l, a in enumerate(cert.coeffs))
        if total != 0:
            bad.append((m, total))
    status = FAIL if bad else PASS
    detail = "" if not bad else f"nonzero at {F.rec_var}={bad[0][0]}"
    residual = None if not bad else str(bad[0][1])
    return Verdict(
        "annihilation",
        status,
        detail,
        residual,
        time.perf_counter() - t0,
        {"sums": {str(k): str(v) for k, v in S.items()}},
    )


@dataclass(frozen=True)
class ClosedForm:
    """A right-hand side evaluated directly in the recurrence variable and parameters."""

    expr: Expression

    def value(self, point: Mapping[str, int]) -> Fraction:
        return self.expr.value(point)


@dataclass(frozen=True)
class SingleSum:
    """``sum(expr, index = lower..upper)`` with bounds given as polynomials."""

    expr: Expression
    index: str
    lower: Polynomial
    upper: Polynomial

    def value(self, point: Mapping[str, int]) -> Fraction:
        lo, hi = self.lower.evaluate(point), self.upper.evaluate(point)
        if lo.denominator != 1 or hi.denominator != 1:
            raise EvaluationError("summation bounds must be integers")
        total = Fraction(0)
        pt = dict(point)
        for k in range(int(lo), int(hi) + 1):
            pt[self.index] = k
            total += self.expr.value(pt)
        return total


def identity_numeric_check(
    lhsF: HyperTerm,
    rhs: ClosedForm | SingleSum,
    n_range: tuple[int, int] = (0, 8),
    support: Support | None = None,
    params: Mapping[str, int] | None = None,
) -> Verdict:
    """Compare the double sum with ``rhs`` exactly for each ``n`` in ``n_range``."""
    t0 = time.perf_counter()
    support = support or default_support(lhsF)
    params = dict(params or {})
    rows = []
    bad = None
    for m in range(n_range[0], n_range[1] + 1):
        pt = {**params, lhsF.rec_var: m}
        left = _sum_at(lhsF, support, pt)
        right = rhs.value(pt)
        rows.append((m, str(left), str(right)))
        if left != right and bad is None:
            bad = (m, left - right)
    return Verdict(
        "identity",
        FAIL if bad else PASS,
        "" if bad is None else f"sides differ at {lhsF.rec_var}={bad[0]}",
        None if bad is None else str(bad[1]),
        time.perf_counter() - t0,
        {"values": rows},
    )


# -- report --------------------------------------------------------------------


@dataclass
class VerificationReport:
    title: str
    checks: list[Verdict] = field(default_factory=list)

    def add(self, v: Verdict) -> Verdict:
        self.checks.append(v)
        return v

    @property
    def ok(self) -> bool:
        return all(v.status != FAIL for v in self.checks) and any(v for v in self.checks)

    def to_dict(self) -> dict:
        return {"title": self.title, "ok": self.ok, "checks": [v.to_dict() for v in self.checks]}

    def render(self) -> str:
        lines = [f"== {self.title} =="]
        for v in self.checks:
            line = f"  {v.name:<13} {v.status.upper():<13} {v.seconds:8.3f}s"
            if v.detail:
                line += f"  {v.detail}"
            lines.append(line)
            if v.residual is not None:
                lines.append(f"    residual: {v.residual}")
        lines.append(f"  result: {'OK' if self.ok else 'FAILED'}")
        return "\n".join(lines)


def full_report(
    F: HyperTerm,
    cert: Certificate,
    *,
    trials: int = 20,
    seed: int = 0,
    params: Mapping[str, int] | None = None,
    title: str = "certificate",
) -> VerificationReport:
    rep = VerificationReport(title)
    rep.add(verify_certificate(F, cert))
    rep.add(verify_numeric(F, cert, trials, seed, params=params))
    return rep
