"""Command-line front end.

Usage::

    telescoper telescope --term "binom(i+j,i)^2*binom(4*n-2*i-2*j,2*n-2*i)" --emit cert.json
    telescoper verify --example 1 --cert cert.json
    telescoper corpus

Every command reads its problem from a JSON manifest, a bundled example
(``--example K``) or ``--term`` with role flags. Exit status is 0 on
success, 1 when a check fails or no certificate is found, 2 for invalid
input and 3 for I/O errors; failures also print one JSON object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .certify import (
    VerificationReport,
    identity_numeric_check,
    sum_annihilation_check,
    verify_certificate,
    verify_numeric,
)
from .corpus import EXAMPLES, CorpusExample, example, pipeline_timings, run_example
from .denest import estden, theorem_bound
from .hyperterm import HyperTerm, quotient_set
from .parsing import ParseError, parse_term
from .telescope import (
    NoCertificateFound,
    SolveOptions,
    bizeil,
    certificate_from_json,
    certificate_to_json,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class ProblemManifest:
    term: str
    rec_var: str = "n"
    sum_vars: tuple[str, str] = ("i", "j")
    params: tuple[str, ...] = ()
    rhs: dict | None = None
    options: dict = field(default_factory=dict)
    n_range: tuple[int, int] = (0, 8)
    param_values: dict = field(default_factory=dict)
    support: tuple[tuple[str, str], tuple[str, str]] | None = None

    def __post_init__(self):
        self.sum_vars = tuple(self.sum_vars)
        self.params = tuple(self.params)
        self.n_range = tuple(self.n_range)
        if len(self.sum_vars) != 2:
            raise InputError("exactly two summation variables are required")
        names = (self.rec_var, *self.params, *self.sum_vars)
        if len(set(names)) != len(names):
            raise InputError(f"symbol roles overlap: {list(names)}")
        if len(self.n_range) != 2 or self.n_range[0] > self.n_range[1]:
            raise InputError(f"bad n_range {list(self.n_range)}")
        if self.support is not None:
            self.support = tuple(tuple(b) for b in self.support)

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemManifest":
        if not isinstance(data, dict) or "term" not in data:
            raise InputError("manifest must be an object with a 'term' field")
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise InputError(f"unknown manifest fields {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_example(cls, ex: CorpusExample) -> "ProblemManifest":
        return cls(
            term=ex.source,
            rec_var=ex.rec_var,
            sum_vars=ex.sum_vars,
            params=ex.params,
            rhs=dict(ex.rhs) if ex.rhs else None,
            n_range=ex.n_range,
            param_values=dict(ex.param_values),
            support=ex.support,
        )

    def to_dict(self) -> dict:
        return {
            "term": self.term,
            "rec_var": self.rec_var,
            "sum_vars": list(self.sum_vars),
            "params": list(self.params),
            "rhs": self.rhs,
            "options": self.options,
            "n_range": list(self.n_range),
            "param_values": self.param_values,
            "support": None if self.support is None else [list(b) for b in self.support],
        }

    def hyperterm(self) -> HyperTerm:
        return parse_term(self.term, self.rec_var, self.sum_vars, self.params)

    def as_example(self) -> CorpusExample:
        return CorpusExample(
            0,
            "manifest",
            self.term,
            self.rec_var,
            self.sum_vars,
            self.params,
            support=self.support,
            rhs=self.rhs,
            param_values=self.param_values,
            n_range=self.n_range,
        )


# -- argument handling ---------------------------------------------------------


def _csv(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("problem")
    src.add_argument("manifest", nargs="?", help="JSON problem manifest")
    src.add_argument("--example", help="bundled example number")
    src.add_argument("--term", help="term expression")
    src.add_argument("--rec-var", help="recurrence variable (default n)")
    src.add_argument("--sum-vars", type=_csv, help="two summation variables, comma separated")
    src.add_argument("--params", type=_csv, help="parameters, comma separated")
    src.add_argument("--param-values", help="parameter values as JSON object, for numeric checks")
    solve = common.add_argument_group("solver")
    solve.add_argument("--max-order", type=int, help="highest operator order (default 6)")
    solve.add_argument("--no-reduce", action="store_true", help="use the unreduced denominators only")
    solve.add_argument("--theorem-bound", action="store_true", help="use the divisibility bounds as denominators")
    solve.add_argument("--w2-variant", choices=("algorithm", "theorem"), help="first gcd argument for w2")
    solve.add_argument("--seed", type=int, default=0)
    chk = common.add_argument_group("checks")
    chk.add_argument("--trials", type=int, default=20, help="points for the numeric check")
    chk.add_argument("--n-range", type=_range, help="LO:HI range for sum checks")
    chk.add_argument("--cert", help="certificate file (verify, sumcheck)")
    common.add_argument("--emit", help="write the main artifact to this path")
    common.add_argument("--json", action="store_true", help="print JSON instead of text")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="telescoper", description="Telescoping certificates for double sums.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("quotients", parents=[common], help="shift quotients and the common denominator d")
    sub.add_parser("estden", parents=[common], help="denominator estimates and divisibility bounds")
    sub.add_parser("telescope", parents=[common], help="find a certificate")
    sub.add_parser("verify", parents=[common], help="check a certificate file")
    sub.add_parser("sumcheck", parents=[common], help="annihilation and identity checks on sums")
    cp = sub.add_parser("corpus", parents=[common], help="run the bundled examples")
    cp.add_argument("--include-slow", action="store_true", help="also run examples marked slow")
    cp.add_argument("--only", type=_csv, help="comma-separated example numbers")
    cp.add_argument("--no-timings", action="store_true", help="skip the denominator pipeline timings")
    return p


def load_manifest(args) -> ProblemManifest:
    given = [x for x in (args.manifest, args.example, args.term) if x]
    if len(given) != 1:
        raise InputError("give exactly one of a manifest path, --example or --term")
    if args.manifest:
        try:
            text = Path(args.manifest).read_text()
        except OSError as exc:
            raise OSError(f"cannot read manifest {args.manifest}: {exc.strerror}") from exc
        try:
            man = ProblemManifest.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"manifest is not valid JSON: {exc}") from exc
    elif args.example:
        try:
            man = ProblemManifest.from_example(example(args.example))
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from exc
    else:
        man = ProblemManifest(args.term)
    if args.rec_var:
        man.rec_var = args.rec_var
    if args.sum_vars:
        man.sum_vars = args.sum_vars
    if args.params is not None:
        man.params = args.params
    if args.param_values:
        try:
            man.param_values = {k: int(v) for k, v in json.loads(args.param_values).items()}
        except (json.JSONDecodeError, AttributeError, ValueError) as exc:
            raise InputError(f"--param-values must be a JSON object of integers: {exc}") from exc
    if args.n_range:
        man.n_range = args.n_range
    man.__post_init__()
    return man


def solve_options(args, man: ProblemManifest) -> SolveOptions:
    opts = dict(man.options)
    if args.max_order is not None:
        opts["max_order"] = args.max_order
    if args.no_reduce:
        opts["reduce"] = False
    if args.theorem_bound:
        opts["denominators"] = "theorem"
    if args.w2_variant:
        opts["w2_variant"] = args.w2_variant
    opts.setdefault("seed", args.seed)
    try:
        return SolveOptions(**opts)
    except TypeError as exc:
        raise InputError(f"bad solver options: {exc}") from exc


# -- commands ------------------------------------------------------------------


def _emit(args, text: str) -> None:
    if args.emit:
        Path(args.emit).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_quotients(args, man: ProblemManifest) -> int:
    F = man.hyperterm()
    r = args.max_order if args.max_order is not None else 2
    qs = quotient_set(F, r)
    i, j = F.sum_vars
    out = {
        "r1": str(qs.r1),
        "s1": str(qs.s1),
        "r2": str(qs.r2),
        "s2": str(qs.s2),
        "q": [{"num": str(q.num), "den": str(q.den)} for q in qs.q],
        "d": str(qs.d),
    }
    if args.json:
        _emit(args, json.dumps(out, indent=2) + "\n")
    else:
        lines = [
            f"F({i}+1)/F = ({out['r1']}) / ({out['s1']})",
            f"F({j}+1)/F = ({out['r2']}) / ({out['s2']})",
        ]
        for l, q in enumerate(out["q"], 1):
            lines.append(f"F({F.rec_var}+{l})/F = ({q['num']}) / ({q['den']})")
        lines.append(f"d = {out['d']}")
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_estden(args, man: ProblemManifest) -> int:
    F = man.hyperterm()
    variant = args.w2_variant or "algorithm"
    est = estden(F, variant)
    bound = theorem_bound(F, variant)
    out = {
        "estden": {k: str(getattr(est, k)) for k in ("v", "u1", "u2", "w1", "w2", "g1", "g2")},
        "estden_factors": {
            "g1": [[str(p), m] for p, m in est.factors1],
            "g2": [[str(p), m] for p, m in est.factors2],
        },
        "theorem_bound": {k: str(getattr(bound, k)) for k in ("v1", "v2", "v4", "u1", "u2", "w1", "w2", "G1", "G2")},
    }
    if args.json:
        _emit(args, json.dumps(out, indent=2) + "\n")
    else:
        lines = ["EstDen:"]
        lines += [f"  {k} = {v}" for k, v in out["estden"].items()]
        lines.append("theorem bound:")
        lines += [f"  {k} = {v}" for k, v in out["theorem_bound"].items()]
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_telescope(args, man: ProblemManifest) -> int:
    F = man.hyperterm()
    opts = solve_options(args, man)
    try:
        cert = bizeil(F, opts)
    except NoCertificateFound as exc:
        _fail("no_certificate", str(exc), trace_length=len(exc.trace), trace=exc.trace)
        return EXIT_FAIL
    _emit(args, json.dumps(certificate_to_json(cert), indent=2) + "\n")
    if args.emit:
        print(f"order {cert.order}: {cert.operator_str()}")
        if cert.primitive_coeffs() != cert.coeffs:
            print(f"primitive: {cert.operator_str(primitive=True)}")
    return EXIT_OK


def _load_certificate(args):
    if not args.cert:
        raise InputError("--cert is required")
    try:
        text = Path(args.cert).read_text()
    except OSError as exc:
        raise OSError(f"cannot read certificate {args.cert}: {exc.strerror}") from exc
    try:
        return certificate_from_json(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"certificate is not valid JSON: {exc}") from exc


def _report_out(args, rep: VerificationReport) -> None:
    if args.json:
        _emit(args, json.dumps(rep.to_dict(), indent=2) + "\n")
    else:
        _emit(args, rep.render() + "\n")


def cmd_verify(args, man: ProblemManifest) -> int:
    F = man.hyperterm()
    cert = _load_certificate(args)
    rep = VerificationReport(args.cert)
    sym = rep.add(verify_certificate(F, cert))
    rep.add(verify_numeric(F, cert, args.trials, args.seed, params=man.param_values or None))
    _report_out(args, rep)
    if not rep.ok:
        _fail("verification_failed", "certificate rejected", residual=sym.residual)
        return EXIT_FAIL
    return EXIT_OK


def cmd_sumcheck(args, man: ProblemManifest) -> int:
    F = man.hyperterm()
    ex = man.as_example()
    support = ex.support_rule()
    params = man.param_values or None
    missing = [p for p in F.params if p not in man.param_values]
    if missing:
        raise InputError(f"--param-values needs values for {missing}")
    rep = VerificationReport("sums")
    if args.cert:
        cert = _load_certificate(args)
    else:
        try:
            cert = bizeil(F, solve_options(args, man))
        except NoCertificateFound as exc:
            cert = None
            _fail("no_certificate", str(exc))
    if cert is not None:
        rep.add(sum_annihilation_check(F, cert, man.n_range, support, params))
    rhs = ex.rhs_spec() if man.rhs else None
    if rhs is not None:
        rep.add(identity_numeric_check(F, rhs, man.n_range, support, params))
    if not rep.checks:
        raise InputError("nothing to check: no certificate and no rhs")
    _report_out(args, rep)
    if not rep.ok:
        bad = [v.to_dict() for v in rep.checks if v.status == "fail"]
        _fail("sumcheck_failed", "sum check failed", checks=bad)
        return EXIT_FAIL
    return EXIT_OK


def _timing_table(results, timings) -> str:
    head = f"{'#':>2}  {'example':<28}{'order':>6}{'seconds':>10}  checks"
    lines = [head, "-" * len(head)]
    for res, slow in results:
        ex = res.example
        order = "-" if res.certificate is None else str(res.certificate.order)
        bad = [k for k, v in res.checks.items() if v is False]
        status = "ok" if res.ok else "FAIL " + ",".join(bad or [res.error or "error"])
        lines.append(f"{ex.key:>2}  {ex.name:<28}{order:>6}{res.seconds:>10.2f}  {status}{' (slow)' if slow else ''}")
    if timings:
        lines.append("")
        lines.append("denominator pipelines, example 1 (seconds):")
        for k, v in timings.items():
            lines.append(f"  {k:<8} {'no certificate' if v is None else f'{v:.3f}'}")
    return "\n".join(lines)


def cmd_corpus(args) -> int:
    keys = None if not args.only else {int(k) for k in args.only}
    results = []
    for ex in EXAMPLES:
        if keys is not None and ex.key not in keys:
            continue
        if ex.slow and not args.include_slow:
            continue
        res = run_example(ex, SolveOptions(seed=args.seed), trials=args.trials, seed=args.seed)
        results.append((res, ex.slow))
        logging.getLogger(__name__).info("example %d done in %.2fs", ex.key, res.seconds)
    timings = {}
    warnings = []
    if not args.no_timings and (keys is None or 1 in keys):
        timings = pipeline_timings(example(1), args.seed)
        red, thm = timings.get("reduced"), timings.get("theorem")
        if red is None or thm is None:
            warnings.append("a denominator pipeline found no certificate on example 1")
        elif red > 10 * thm:
            warnings.append(f"reduced pipeline {red:.3f}s is more than 10x the theorem-bound pipeline {thm:.3f}s")
    passed = sum(1 for r, _ in results if r.ok)
    if args.json:
        doc = {
            "passed": passed,
            "total": len(results),
            "examples": [r.to_dict() for r, _ in results],
            "pipeline_timings": timings,
            "warnings": warnings,
        }
        _emit(args, json.dumps(doc, indent=2) + "\n")
    else:
        text = _timing_table(results, timings)
        text += f"\n\n{passed}/{len(results)} pass\n"
        for w in warnings:
            text += f"warning: {w}\n"
        _emit(args, text)
    if passed != len(results):
        _fail("corpus_failed", f"{len(results) - passed} example(s) failed")
        return EXIT_FAIL
    return EXIT_OK


def _fail(kind: str, message: str, **extra: Any) -> None:
    doc = {"status": "error", "kind": kind, "message": message, **extra}
    sys.stderr.write(json.dumps(doc, default=str) + "\n")


COMMANDS = {
    "quotients": cmd_quotients,
    "estden": cmd_estden,
    "telescope": cmd_telescope,
    "verify": cmd_verify,
    "sumcheck": cmd_sumcheck,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    t0 = time.perf_counter()
    try:
        if args.command == "corpus":
            return cmd_corpus(args)
        man = load_manifest(args)
        return COMMANDS[args.command](args, man)
    except ParseError as exc:
        _fail("parse_error", exc.message, line=exc.line, column=exc.column)
        return EXIT_INPUT
    except (InputError, ValueError) as exc:
        _fail("invalid_input", str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _fail("io_error", str(exc))
        return EXIT_IO
    finally:
        logging.getLogger(__name__).info("%s finished in %.2fs", args.command, time.perf_counter() - t0)


if __name__ == "__main__":
    sys.exit(main())
