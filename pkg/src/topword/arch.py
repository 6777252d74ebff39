"""Symbolic elements of the quotient of reduced words by finite words.

An element is a list of factors, each a region of a base word (a letter,
an omega product or a rational shuffle) read forwards or inverted.  The
normal form applies three rewrites, each an identity in the quotient:

* finite factors are deleted,
* two neighbouring regions of one base with the same sign and only a
  finite gap between them are joined,
* a region followed by the inverse of a region of the same base cancels
  when their touching ends agree up to finitely many positions; the part
  where the two regions differ at the far end survives.

Equality is claimed only when the normal form of a * b^-1 is empty.
"""

from __future__ import annotations

from dataclasses import dataclass

from .orders import (
    FULL,
    Interval,
    complement_hi,
    complement_lo,
    format_interval,
    format_path,
    hi_cmp,
    lo_cmp,
)
from .words import (
    Inv,
    Lit,
    Word,
    cmp_of,
    flatten,
    flip_interval,
    is_finite,
    region_is_empty,
)


@dataclass(frozen=True)
class ArchFactor:
    base: Word
    region: Interval
    sign: int
    label: str = ""
    prefix: tuple = ()

    def inverse(self) -> "ArchFactor":
        return ArchFactor(self.base, self.region, -self.sign, self.label, self.prefix)

    def with_region(self, region: Interval, sign: int) -> "ArchFactor":
        return ArchFactor(self.base, region, sign, self.label, self.prefix)


@dataclass(frozen=True)
class ArchElement:
    factors: tuple = ()

    def is_identity(self) -> bool:
        return not self.factors

    def to_json(self):
        if not self.factors:
            return 1
        out = []
        for f in self.factors:
            name = f.label or "?"
            if f.prefix:
                name += "@" + format_path(f.prefix)
            out.append({"word": name, "interval": format_interval(f.region), "sign": f.sign})
        return out


IDENTITY = ArchElement()


@dataclass(frozen=True)
class Equal:
    pass


@dataclass(frozen=True)
class Unknown:
    reason: str = ""


def ref(word: Word, iv: Interval = FULL, sign: int = 1, label: str = "") -> ArchElement:
    """[[(word|iv)^sign]] in normal form."""
    if sign == 1:
        pieces = flatten(word, iv)
    else:
        pieces = flatten(Inv(word), flip_interval(iv))
    return normalize([ArchFactor(p.base, p.region, p.sign, label, p.prefix) for p in pieces])


def beth(word: Word, label: str = "") -> ArchElement:
    return ref(word, FULL, 1, label)


def _finite(f: ArchFactor) -> bool:
    return isinstance(f.base, Lit) or is_finite(f.base, f.region)


def _finite_between(w: Word, hi_cut, lo_cut) -> bool:
    """Is the part strictly after `hi_cut` and before `lo_cut` finite, with
    nothing overlapping (the second region starts at or after the first ends)?"""
    if hi_cut is None or lo_cut is None:
        return False
    start = complement_lo(hi_cut)
    if lo_cmp(cmp_of(w), start, lo_cut) > 0:
        return False
    return is_finite(w, Interval(start, complement_hi(lo_cut)))


def _ends_close(w: Word, a, b, high: bool) -> bool:
    """Do two cuts of the same side differ by finitely many positions?"""
    cmp = cmp_of(w)
    if high:
        c = hi_cmp(cmp, a, b)
        lower, higher = (a, b) if c <= 0 else (b, a)
        if higher is None and lower is None:
            return True
        if lower is None:
            return False
        return is_finite(w, Interval(complement_lo(lower), higher))
    c = lo_cmp(cmp, a, b)
    lower, higher = (a, b) if c <= 0 else (b, a)
    if lower is None and higher is None:
        return True
    if higher is None:
        return False
    return is_finite(w, Interval(lower, complement_hi(higher)))


def _combine(p: ArchFactor, q: ArchFactor):
    """Rewrite p*q into at most one factor, or None when no rule applies."""
    if p.base != q.base or isinstance(p.base, Lit):
        return None
    w = p.base
    if p.sign == q.sign:
        first, second = (p, q) if p.sign == 1 else (q, p)
        if _finite_between(w, first.region.hi, second.region.lo):
            return [p.with_region(Interval(first.region.lo, second.region.hi), p.sign)]
        return None
    cmp = cmp_of(w)
    if p.sign == 1:
        if not _ends_close(w, p.region.hi, q.region.hi, high=True):
            return None
        if lo_cmp(cmp, p.region.lo, q.region.lo) <= 0:
            rest = Interval(p.region.lo, None if q.region.lo is None else complement_hi(q.region.lo))
            return [p.with_region(rest, 1)] if q.region.lo is not None else []
        rest = Interval(q.region.lo, None if p.region.lo is None else complement_hi(p.region.lo))
        return [q.with_region(rest, -1)] if p.region.lo is not None else []
    if not _ends_close(w, p.region.lo, q.region.lo, high=False):
        return None
    if hi_cmp(cmp, p.region.hi, q.region.hi) >= 0:
        rest = Interval(None if q.region.hi is None else complement_lo(q.region.hi), p.region.hi)
        return [p.with_region(rest, -1)] if q.region.hi is not None else []
    rest = Interval(None if p.region.hi is None else complement_lo(p.region.hi), q.region.hi)
    return [q.with_region(rest, 1)] if p.region.hi is not None else []


def normalize(factors) -> ArchElement:
    stack: list = []
    for f in factors:
        if region_is_empty(f.base, f.region) or _finite(f):
            continue
        stack.append(f)
        while len(stack) >= 2:
            r = _combine(stack[-2], stack[-1])
            if r is None:
                break
            del stack[-2:]
            for g in r:
                if not region_is_empty(g.base, g.region) and not _finite(g):
                    stack.append(g)
    return ArchElement(tuple(stack))


def arch_mul(a: ArchElement, b: ArchElement) -> ArchElement:
    return normalize(list(a.factors) + list(b.factors))


def arch_inv(a: ArchElement) -> ArchElement:
    return ArchElement(tuple(f.inverse() for f in reversed(a.factors)))


def arch_prod(elems) -> ArchElement:
    out = []
    for e in elems:
        out.extend(e.factors)
    return normalize(out)


def arch_eq(a: ArchElement, b: ArchElement):
    """Equal when a * b^-1 rewrites to the identity, else Unknown."""
    if arch_mul(a, arch_inv(b)).is_identity():
        return Equal()
    return Unknown("no rewrite certificate")


def verdict_name(v) -> str:
    return "Equal" if isinstance(v, Equal) else "Unknown"


def phi0_eval(coll, word: Word, witness) -> ArchElement:
    """Send each infinite factor (W_x|I)^d of a decomposition to
    [[(U_x | hull of I under the coi of x)^d]] and multiply.

    `coll` is anything with an indexable ``triples`` list whose entries have
    ``right``, ``name`` and ``coi`` (with ``forward_hull``)."""
    out = []
    for f in witness.factors:
        if f.kind != "sub" or is_finite(word, f.interval):
            continue
        t = coll.triples[f.source]
        hull = t.coi.forward_hull(f.found.interval)
        out.extend(ref(t.right, hull, f.found.sign, t.name).factors)
    return normalize(out)
