import functools

from telescoper.corpus import example
from telescoper.telescope import SolveOptions, bizeil


@functools.lru_cache(maxsize=None)
def solved(key: int):
    """Term and default-search certificate of a corpus example, cached per session."""
    F = example(key).term
    return F, bizeil(F, SolveOptions())


def perturb(cert, rng):
    """Copy of ``cert`` with one coefficient of the operator or of a numerator moved by a nonzero rational."""
    from dataclasses import replace
    from fractions import Fraction

    from telescoper.polykernel import RationalFunction

    slots = [("a", l) for l, a in enumerate(cert.coeffs)] + [("f1", None), ("f2", None)]
    kind, l = slots[rng.randrange(len(slots))]
    delta = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 2, 5]))
    if kind == "a":
        a = cert.coeffs[l]
        mono = _pick_monomial(a, rng)
        coeffs = list(cert.coeffs)
        coeffs[l] = a + a.ring.from_terms({mono: delta})
        if all(c.is_zero() for c in coeffs):
            # an all-zero operator is malformed rather than wrong
            coeffs[l] = a + a.ring.from_terms({mono: 2 * delta})
        return replace(cert, coeffs=tuple(coeffs))
    f = getattr(cert, kind)
    g = cert.g1 if kind == "f1" else cert.g2
    f = f + f.ring.from_terms({_pick_monomial(f, rng): delta})
    R = RationalFunction(f, cert.d * g)
    return replace(cert, **{kind: f, "R1" if kind == "f1" else "R2": R})


def _pick_monomial(p, rng):
    terms = sorted(p.terms)
    if terms:
        return terms[rng.randrange(len(terms))]
    return (0,) * p.ring.nvars
