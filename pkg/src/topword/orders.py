"""Finitely described countable orders, positions, intervals and close subsets.

Positions are paths (tuples of selectors).  An ``OCat`` contributes the
index of the part, a ``Fin`` its offset, ``Omega`` its index, ``OmegaRev``
its index counted from the top and ``QDense`` an exact ``Fraction``.

Intervals are pairs of cuts.  A cut names a path, and the path may be a
proper prefix of a position: ``AtOrAbove((1,))`` is everything from the
start of part 1 onward.  This makes suprema such as "the end of an omega
part" expressible without inventing points.

    >>> o = Omega()
    >>> varpropto_subset(o, ResidueClass(2, 0), Interval(AtOrAbove((3,)), AtOrBelow((7,))))
    Interval(lo=AtOrAbove(path=(4,)), hi=AtOrBelow(path=(6,)))
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional


class OrderError(ValueError):
    pass


# ---------------------------------------------------------------- orders

class OrderExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Fin(OrderExpr):
    k: int


@dataclass(frozen=True)
class Omega(OrderExpr):
    pass


@dataclass(frozen=True)
class OmegaRev(OrderExpr):
    pass


@dataclass(frozen=True)
class QDense(OrderExpr):
    pass


@dataclass(frozen=True)
class OCat(OrderExpr):
    parts: tuple


@dataclass(frozen=True)
class Rev(OrderExpr):
    inner: OrderExpr


def normalize(o: OrderExpr) -> OrderExpr:
    """Flatten nested concatenations and push reversal into the leaves."""
    if isinstance(o, Rev):
        return rev(normalize(o.inner))
    if isinstance(o, OCat):
        if not o.parts:
            raise OrderError("ocat needs at least one part")
        flat = []
        for p in o.parts:
            p = normalize(p)
            flat.extend(p.parts if isinstance(p, OCat) else [p])
        return flat[0] if len(flat) == 1 else OCat(tuple(flat))
    if isinstance(o, Fin) and o.k < 0:
        raise OrderError("negative finite order")
    return o


def rev(o: OrderExpr) -> OrderExpr:
    """The reversed order, already normalized (reversal never survives)."""
    if isinstance(o, (Fin, QDense)):
        return o
    if isinstance(o, Omega):
        return OmegaRev()
    if isinstance(o, OmegaRev):
        return Omega()
    if isinstance(o, OCat):
        return OCat(tuple(rev(p) for p in reversed(o.parts)))
    if isinstance(o, Rev):
        return normalize(o.inner)
    raise OrderError(f"unknown order {o!r}")


def rev_position(o: OrderExpr, p: tuple) -> tuple:
    """The position of `p` read inside ``rev(o)``."""
    o = normalize(o)
    if isinstance(o, OCat):
        i, rest = p[0], p[1:]
        return (len(o.parts) - 1 - i,) + rev_position(o.parts[i], rest)
    if not p:
        return p
    if isinstance(o, Fin):
        return (o.k - 1 - p[0],)
    if isinstance(o, QDense):
        return (-p[0],)
    return p


def is_finite_order(o: OrderExpr) -> bool:
    o = normalize(o)
    if isinstance(o, Fin):
        return True
    if isinstance(o, OCat):
        return all(is_finite_order(p) for p in o.parts)
    return False


# ---------------------------------------------------------------- positions

def pos_valid(o: OrderExpr, p: tuple, prefix_ok: bool = False) -> bool:
    o = normalize(o)
    if not p:
        return prefix_ok
    if isinstance(o, OCat):
        i = p[0]
        if not isinstance(i, int) or not 0 <= i < len(o.parts):
            return False
        if len(p) == 1:
            return prefix_ok
        return pos_valid(o.parts[i], p[1:], prefix_ok)
    if len(p) != 1:
        return False
    x = p[0]
    if isinstance(o, Fin):
        return isinstance(x, int) and 0 <= x < o.k
    if isinstance(o, (Omega, OmegaRev)):
        return isinstance(x, int) and not isinstance(x, bool) and x >= 0
    if isinstance(o, QDense):
        return isinstance(x, (int, Fraction)) and not isinstance(x, bool)
    return False


def pos_cmp(o: OrderExpr, p: tuple, q: tuple) -> int:
    """-1, 0 or 1.  Zero also when one path is a prefix of the other."""
    o = normalize(o)
    while p and q:
        if isinstance(o, OCat):
            if p[0] != q[0]:
                return -1 if p[0] < q[0] else 1
            o = o.parts[p[0]]
            p, q = p[1:], q[1:]
            continue
        a, b = p[0], q[0]
        if a == b:
            return 0
        if isinstance(o, OmegaRev):
            return 1 if a < b else -1
        return -1 if a < b else 1
    return 0


def is_prefix(a: tuple, b: tuple) -> bool:
    return len(a) <= len(b) and b[: len(a)] == a


# ---------------------------------------------------------------- cuts

@dataclass(frozen=True)
class AtOrAbove:
    path: tuple


@dataclass(frozen=True)
class Above:
    path: tuple


@dataclass(frozen=True)
class AtOrBelow:
    path: tuple


@dataclass(frozen=True)
class Below:
    path: tuple


@dataclass(frozen=True)
class Interval:
    """A convex set given by a low cut and a high cut; None is unbounded."""

    lo: Optional[object] = None
    hi: Optional[object] = None


FULL = Interval()
EMPTY = Interval(Above(()), Below(()))


def point_interval(p: tuple) -> Interval:
    return Interval(AtOrAbove(p), AtOrBelow(p))


Cmp = Callable[[tuple, tuple], int]


def sat_lo(cmp: Cmp, lo, p: tuple) -> bool:
    if lo is None:
        return True
    if is_prefix(lo.path, p):
        return isinstance(lo, AtOrAbove)
    return cmp(p, lo.path) > 0


def sat_hi(cmp: Cmp, hi, p: tuple) -> bool:
    if hi is None:
        return True
    if is_prefix(hi.path, p):
        return isinstance(hi, AtOrBelow)
    return cmp(p, hi.path) < 0


def contains(cmp: Cmp, iv: Interval, p: tuple) -> bool:
    return sat_lo(cmp, iv.lo, p) and sat_hi(cmp, iv.hi, p)


def restrict(cmp: Cmp, iv: Interval, pre: tuple) -> Optional[Interval]:
    """The part of `iv` inside the block at `pre`, with `pre` stripped.

    None means the intersection is empty as far as the cuts can tell.
    """
    lo = hi = None
    if iv.lo is not None:
        c = iv.lo.path
        if is_prefix(pre, c) and len(c) > len(pre):
            lo = type(iv.lo)(c[len(pre):])
        elif is_prefix(c, pre):
            if isinstance(iv.lo, Above):
                return None
        elif cmp(pre, c) < 0:
            return None
    if iv.hi is not None:
        c = iv.hi.path
        if is_prefix(pre, c) and len(c) > len(pre):
            hi = type(iv.hi)(c[len(pre):])
        elif is_prefix(c, pre):
            if isinstance(iv.hi, Below):
                return None
        elif cmp(pre, c) > 0:
            return None
    return Interval(lo, hi)


def prefix_interval(iv: Interval, pre: tuple) -> Interval:
    """Inverse of ``restrict``: lift an inner interval back under `pre`."""
    lo = AtOrAbove(pre) if iv.lo is None else type(iv.lo)(pre + iv.lo.path)
    hi = AtOrBelow(pre) if iv.hi is None else type(iv.hi)(pre + iv.hi.path)
    return Interval(lo, hi)


def lo_cmp(cmp: Cmp, a, b) -> int:
    """Compare two low cuts by the sets they admit (larger set = lower cut)."""
    if a is None or b is None:
        return (a is not None) - (b is not None)
    if a.path == b.path:
        return (isinstance(a, Above)) - (isinstance(b, Above))
    if is_prefix(a.path, b.path):
        return -1 if isinstance(a, AtOrAbove) else 1
    if is_prefix(b.path, a.path):
        return 1 if isinstance(b, AtOrAbove) else -1
    return cmp(a.path, b.path)


def hi_cmp(cmp: Cmp, a, b) -> int:
    if a is None or b is None:
        return (a is None) - (b is None)
    if a.path == b.path:
        return (isinstance(a, AtOrBelow)) - (isinstance(b, AtOrBelow))
    if is_prefix(a.path, b.path):
        return 1 if isinstance(a, AtOrBelow) else -1
    if is_prefix(b.path, a.path):
        return -1 if isinstance(b, AtOrBelow) else 1
    return cmp(a.path, b.path)


def intersect(cmp: Cmp, a: Interval, b: Interval) -> Interval:
    lo = a.lo if lo_cmp(cmp, a.lo, b.lo) >= 0 else b.lo
    hi = a.hi if hi_cmp(cmp, a.hi, b.hi) <= 0 else b.hi
    return Interval(lo, hi)


def complement_lo(hi) -> object:
    """The low cut of the part above a high cut."""
    return Above(hi.path) if isinstance(hi, AtOrBelow) else AtOrAbove(hi.path)


def complement_hi(lo) -> object:
    return Below(lo.path) if isinstance(lo, AtOrAbove) else AtOrBelow(lo.path)


# ---------------------------------------------------------------- leaves

def leaves(o: OrderExpr, pre: tuple = ()):
    """Yield (prefix, leaf order) in increasing order."""
    o = normalize(o)
    if isinstance(o, OCat):
        for i, p in enumerate(o.parts):
            yield from leaves(p, pre + (i,))
    else:
        yield pre, o


def _int_bounds(o, iv: Interval):
    """Index range [a, b] (b None = unbounded) of an Omega/Fin leaf interval.

    For OmegaRev the returned range is in index terms, with the roles of
    the cuts swapped (index grows downward)."""
    if isinstance(o, OmegaRev):
        # order-low cut bounds the index from above
        hi_idx = None
        if iv.lo is not None:
            n = iv.lo.path[0]
            hi_idx = n if isinstance(iv.lo, AtOrAbove) else n - 1
        lo_idx = 0
        if iv.hi is not None:
            n = iv.hi.path[0]
            lo_idx = n if isinstance(iv.hi, AtOrBelow) else n + 1
        return lo_idx, hi_idx
    a = 0
    if iv.lo is not None:
        n = iv.lo.path[0]
        a = n if isinstance(iv.lo, AtOrAbove) else n + 1
    b = o.k - 1 if isinstance(o, Fin) else None
    if iv.hi is not None:
        n = iv.hi.path[0]
        b2 = n if isinstance(iv.hi, AtOrBelow) else n - 1
        b = b2 if b is None else min(b, b2)
    return max(a, 0), b


def _leaf_count(o, iv: Interval) -> Optional[int]:
    """Number of points of a leaf in `iv`; None when infinite."""
    if isinstance(o, QDense):
        if iv.lo is None or iv.hi is None:
            return None
        a, b = iv.lo.path[0], iv.hi.path[0]
        if a < b:
            return None
        if a == b and isinstance(iv.lo, AtOrAbove) and isinstance(iv.hi, AtOrBelow):
            return 1
        return 0
    a, b = _int_bounds(o, iv)
    if b is None:
        return None
    return max(0, b - a + 1)


def interval_count(o: OrderExpr, iv: Interval) -> Optional[int]:
    """Cardinality of `iv`, None when infinite."""
    cmp = lambda p, q: pos_cmp(o, p, q)
    total = 0
    for pre, leaf in leaves(o):
        sub = restrict(cmp, iv, pre)
        if sub is None:
            continue
        c = _leaf_count(leaf, sub)
        if c is None:
            return None
        total += c
    return total


def interval_is_finite(o: OrderExpr, iv: Interval):
    """(True, n) for a finite interval of n points, else (False, None)."""
    c = interval_count(o, iv)
    return (c is not None, c)


def interval_is_empty(o: OrderExpr, iv: Interval) -> bool:
    return interval_count(o, iv) == 0


def interval_points(o: OrderExpr, iv: Interval) -> list:
    """All positions of a finite interval, in order."""
    out = []
    cmp = lambda p, q: pos_cmp(o, p, q)
    for pre, leaf in leaves(o):
        sub = restrict(cmp, iv, pre)
        if sub is None:
            continue
        c = _leaf_count(leaf, sub)
        if c is None:
            raise OrderError("interval is infinite")
        if not c:
            continue
        if isinstance(leaf, QDense):
            out.append(pre + (sub.lo.path[0],))
            continue
        a, b = _int_bounds(leaf, sub)
        idx = range(a, b + 1)
        if isinstance(leaf, OmegaRev):
            idx = reversed(idx)
        out.extend(pre + (n,) for n in idx)
    return out


# ---------------------------------------------------------------- close subsets

class CloseSubsetSpec:
    __slots__ = ()


@dataclass(frozen=True)
class All(CloseSubsetSpec):
    pass


@dataclass(frozen=True)
class CofiniteExcept(CloseSubsetSpec):
    points: tuple = ()


@dataclass(frozen=True)
class FiniteOnly(CloseSubsetSpec):
    """Exactly the listed points; close only inside finite orders."""

    points: tuple = ()


@dataclass(frozen=True)
class ResidueClass(CloseSubsetSpec):
    modulus: int
    residue: int

    def __post_init__(self):
        if self.modulus < 1 or not 0 <= self.residue < self.modulus:
            raise OrderError(f"bad residue class {self.residue} mod {self.modulus}")


@dataclass(frozen=True)
class PerPart(CloseSubsetSpec):
    specs: tuple


@dataclass(frozen=True)
class DenseRule(CloseSubsetSpec):
    """Rationals whose reduced denominator is a power of `base`; None = all."""

    base: Optional[int] = None

    def __post_init__(self):
        if self.base is not None and self.base < 2:
            raise OrderError("dense rule base must be >= 2")


def _b_adic(x: Fraction, base: int) -> bool:
    d = Fraction(x).denominator
    while d % base == 0:
        d //= base
    # only the prime factors of base may divide the denominator
    for f in _prime_factors(base):
        while d % f == 0:
            d //= f
    return d == 1


def _prime_factors(n: int):
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def _leaf_specs(o: OrderExpr, s: CloseSubsetSpec, pre: tuple = ()):
    """Yield (prefix, leaf, spec local to the leaf)."""
    o = normalize(o)
    if isinstance(o, OCat):
        if isinstance(s, PerPart):
            if len(s.specs) != len(o.parts):
                raise OrderError("per-part subset does not match the number of parts")
            for i, (p, sp) in enumerate(zip(o.parts, s.specs)):
                yield from _leaf_specs(p, sp, pre + (i,))
            return
        for i, p in enumerate(o.parts):
            if isinstance(s, (CofiniteExcept, FiniteOnly)):
                sp = type(s)(tuple(q[1:] for q in s.points if q and q[0] == i))
            else:
                sp = s
            yield from _leaf_specs(p, sp, pre + (i,))
        return
    if isinstance(s, PerPart):
        if len(s.specs) != 1:
            raise OrderError("per-part subset on a single part order")
        s = s.specs[0]
    if isinstance(s, (CofiniteExcept, FiniteOnly)):
        s = type(s)(tuple(tuple(q) if isinstance(q, tuple) else (q,) for q in s.points))
    if isinstance(s, ResidueClass) and isinstance(o, QDense):
        raise OrderError("residue classes apply to discrete parts only")
    if isinstance(s, DenseRule) and not isinstance(o, QDense):
        raise OrderError("dense rules apply to qdense parts only")
    yield pre, o, s


def leaf_member(leaf, s, p: tuple) -> bool:
    x = p[0]
    if isinstance(s, All):
        return True
    if isinstance(s, CofiniteExcept):
        return (x,) not in s.points
    if isinstance(s, FiniteOnly):
        return (x,) in s.points
    if isinstance(s, ResidueClass):
        return x % s.modulus == s.residue
    if isinstance(s, DenseRule):
        return s.base is None or _b_adic(x, s.base)
    raise OrderError(f"unknown subset rule {s!r}")


def subset_contains(o: OrderExpr, s: CloseSubsetSpec, p: tuple) -> bool:
    for pre, leaf, sp in _leaf_specs(o, s):
        if is_prefix(pre, p) and len(p) == len(pre) + 1:
            return leaf_member(leaf, sp, p[len(pre):])
    raise OrderError(f"position {p!r} not in order")


def is_close(o: OrderExpr, s: CloseSubsetSpec) -> bool:
    """Does the subset meet every infinite interval?  Decided per part."""
    for pre, leaf, sp in _leaf_specs(o, s):
        if isinstance(leaf, Fin):
            continue
        if isinstance(sp, FiniteOnly):
            return False
    return True


# leaf-level search for the extreme points of I cap S

def _omega_first(s, a: int, b: Optional[int]) -> Optional[int]:
    """Least n in [a, b] in the subset (Omega-like index space)."""
    if b is not None and a > b:
        return None
    if isinstance(s, All):
        return a
    if isinstance(s, ResidueClass):
        n = a + (s.residue - a) % s.modulus
    elif isinstance(s, CofiniteExcept):
        bad = {q[0] for q in s.points}
        n = a
        while n in bad:
            n += 1
    elif isinstance(s, FiniteOnly):
        cands = sorted(q[0] for q in s.points if q[0] >= a)
        n = cands[0] if cands else None
        if n is None:
            return None
    else:
        raise OrderError(f"unknown subset rule {s!r}")
    return n if b is None or n <= b else None


def _omega_last(s, a: int, b: int) -> Optional[int]:
    if a > b:
        return None
    if isinstance(s, All):
        return b
    if isinstance(s, ResidueClass):
        n = b - (b - s.residue) % s.modulus
    elif isinstance(s, CofiniteExcept):
        bad = {q[0] for q in s.points}
        n = b
        while n in bad and n >= a:
            n -= 1
    elif isinstance(s, FiniteOnly):
        cands = sorted(q[0] for q in s.points if q[0] <= b)
        if not cands:
            return None
        n = cands[-1]
    else:
        raise OrderError(f"unknown subset rule {s!r}")
    return n if n >= a else None


def _dense_nonempty(iv: Interval, s) -> bool:
    if iv.lo is None or iv.hi is None:
        return True
    a, b = iv.lo.path[0], iv.hi.path[0]
    if a < b:
        return True
    if a == b and isinstance(iv.lo, AtOrAbove) and isinstance(iv.hi, AtOrBelow):
        return leaf_member(None, s, (a,))
    return False


def _leaf_hull(leaf, s, iv: Interval):
    """Hull of iv cap S inside one leaf, in leaf coordinates (None cuts are
    the leaf's own ends), or None when the intersection is empty."""
    if isinstance(leaf, QDense):
        if not _dense_nonempty(iv, s):
            return None
        lo = hi = None
        if iv.lo is not None:
            r = iv.lo.path[0]
            lo = AtOrAbove((r,)) if isinstance(iv.lo, AtOrAbove) and leaf_member(leaf, s, (r,)) else Above((r,))
        if iv.hi is not None:
            r = iv.hi.path[0]
            hi = AtOrBelow((r,)) if isinstance(iv.hi, AtOrBelow) and leaf_member(leaf, s, (r,)) else Below((r,))
        return Interval(lo, hi)
    a, b = _int_bounds(leaf, iv)
    if isinstance(leaf, OmegaRev):
        # index range [a, b]; order-low end is the largest index
        first = _omega_first(s, a, b)
        if first is None:
            return None
        if b is None:
            lo = None
        else:
            lo = AtOrAbove((_omega_last(s, a, b),))
        return Interval(lo, AtOrBelow((first,)))
    first = _omega_first(s, a, b)
    if first is None:
        return None
    hi = None if b is None else AtOrBelow((_omega_last(s, a, b),))
    return Interval(AtOrAbove((first,)), hi)


def varpropto_subset(o: OrderExpr, s: CloseSubsetSpec, iv: Interval) -> Interval:
    """Smallest interval containing iv cap S; EMPTY when they are disjoint."""
    if not is_close(o, s):
        raise OrderError("subset is not close")
    cmp = lambda p, q: pos_cmp(o, p, q)
    hulls = []
    for pre, leaf, sp in _leaf_specs(o, s):
        sub = restrict(cmp, iv, pre)
        if sub is None:
            continue
        h = _leaf_hull(leaf, sp, sub)
        if h is not None:
            hulls.append(prefix_interval(h, pre))
    if not hulls:
        return EMPTY
    return Interval(hulls[0].lo, hulls[-1].hi)


def subset_points(o: OrderExpr, s: CloseSubsetSpec, iv: Interval) -> list:
    """Points of a finite interval that lie in the subset."""
    return [p for p in interval_points(o, iv) if subset_contains(o, s, p)]


# ---------------------------------------------------------------- canonical coi

@dataclass
class _Token:
    kind: str            # "F", "W" (omega), "R" (omega reversed), "D" (dense)
    pre: tuple = ()      # leaf prefix for W, R, D
    spec: object = None  # leaf rule for W, R, D
    points: tuple = ()   # finite points (F), head points (W) or tail points (R)


def _tokens(o: OrderExpr, s: CloseSubsetSpec) -> list:
    toks: list = []
    pending: list = []

    def flush():
        if pending:
            if toks and toks[-1].kind == "R":
                toks[-1].points = toks[-1].points + tuple(pending)
            else:
                toks.append(_Token("F", points=tuple(pending)))
            pending.clear()

    for pre, leaf, sp in _leaf_specs(o, s):
        if isinstance(leaf, Fin):
            pts = [pre + (t,) for t in range(leaf.k) if leaf_member(leaf, sp, (t,))]
            if toks and toks[-1].kind == "R" and not pending:
                toks[-1].points = toks[-1].points + tuple(pts)
            else:
                pending.extend(pts)
        elif isinstance(leaf, Omega):
            toks.append(_Token("W", pre, sp, tuple(pending)))
            pending.clear()
        elif isinstance(leaf, OmegaRev):
            flush()
            toks.append(_Token("R", pre, sp))
        else:
            flush()
            toks.append(_Token("D", pre, sp))
    flush()
    return toks


def _nth(s, k: int) -> int:
    """The k-th member (from 0) of an omega-indexed subset."""
    if isinstance(s, All):
        return k
    if isinstance(s, ResidueClass):
        return s.residue + k * s.modulus
    if isinstance(s, CofiniteExcept):
        bad = sorted(q[0] for q in s.points)
        n = k
        for x in bad:
            if x <= n:
                n += 1
        return n
    raise OrderError(f"rule {s!r} has finitely many points")


def _rank(s, n: int) -> int:
    """Number of subset members below n."""
    if isinstance(s, All):
        return n
    if isinstance(s, ResidueClass):
        return max(0, (n - s.residue + s.modulus - 1) // s.modulus)
    if isinstance(s, CofiniteExcept):
        return n - sum(1 for q in s.points if q[0] < n)
    raise OrderError(f"rule {s!r} has finitely many points")


def _signature(toks):
    return [(t.kind, len(t.points) if t.kind == "F" else None,
             t.spec if t.kind == "D" else None) for t in toks]


class OrderCoi:
    """The canonical order isomorphism between two close subsets.

    Tokens of the two picked subsets (finite runs, omega runs, reversed
    omega runs, dense runs) are matched in order and points are paired by
    rank.  Dense runs are paired by the identity on rationals, or by
    negation when `orient` is -1.
    """

    def __init__(self, src: OrderExpr, dst: OrderExpr, src_pick, dst_pick, orient: int = 1):
        self.src, self.dst = normalize(src), normalize(dst)
        self.src_pick, self.dst_pick = src_pick, dst_pick
        self.orient = orient
        for o, s in ((self.src, src_pick), (self.dst, dst_pick)):
            if not is_close(o, s):
                raise OrderError("coi pick is not close")
        self._st = _tokens(self.src, src_pick)
        self._dt = _tokens(self.dst, dst_pick)
        if not self._compatible():
            raise OrderError("picked subsets are not order isomorphic in the canonical way")

    def _compatible(self) -> bool:
        a, b = _signature(self._st), _signature(self._dt)
        if self.orient == -1:
            flip = {"F": "F", "W": "R", "R": "W", "D": "D"}
            b = [(flip[k], n, sp) for k, n, sp in reversed(b)]
        if len(a) != len(b):
            return False
        for (ka, na, sa), (kb, nb, sb) in zip(a, b):
            if ka != kb or na != nb:
                return False
            if ka == "D" and sa != sb:
                return False
        return True

    def inverse(self) -> "OrderCoi":
        return OrderCoi(self.dst, self.src, self.dst_pick, self.src_pick, self.orient)

    # ranks ----------------------------------------------------------
    def _dst_token(self, i):
        return self._dt[i] if self.orient == 1 else self._dt[len(self._dt) - 1 - i]

    def _token_of(self, toks, o, p):
        for i, t in enumerate(toks):
            if t.kind == "F":
                if p in t.points:
                    return i, t.points.index(p)
            elif t.kind == "W":
                if p in t.points:
                    return i, t.points.index(p)
                if is_prefix(t.pre, p):
                    return i, len(t.points) + _rank(t.spec, p[-1])
            elif t.kind == "R":
                if p in t.points:
                    return i, len(t.points) - 1 - t.points.index(p)
                if is_prefix(t.pre, p):
                    return i, len(t.points) + _rank(t.spec, p[-1])
            elif is_prefix(t.pre, p):
                return i, p[-1]
        raise OrderError(f"{p!r} is not a picked point")

    def _point(self, t, r):
        if t.kind == "F":
            return t.points[r]
        if t.kind == "W":
            return t.points[r] if r < len(t.points) else t.pre + (_nth(t.spec, r - len(t.points)),)
        if t.kind == "R":
            n = len(t.points)
            return t.points[n - 1 - r] if r < n else t.pre + (_nth(t.spec, r - n),)
        return t.pre + (r,)

    def __call__(self, p: tuple) -> tuple:
        if not subset_contains(self.src, self.src_pick, p):
            raise OrderError(f"{p!r} is not in the domain")
        i, r = self._token_of(self._st, self.src, p)
        t = self._dst_token(i)
        if t.kind == "F" and self.orient == -1:
            r = len(t.points) - 1 - r
        if t.kind == "D" and self.orient == -1:
            r = -r
        return self._point(t, r)

    # hull -----------------------------------------------------------
    def _rank_range(self, t, iv: Interval):
        """Ranks of the token's points inside iv as (r0, r1) with r1 None for
        unbounded, or None when there are none."""
        cmp = lambda a, b: pos_cmp(self.src, a, b)
        if t.kind == "F":
            idx = [k for k, p in enumerate(t.points) if contains(cmp, iv, p)]
            return (idx[0], idx[-1]) if idx else None
        if t.kind == "D":
            sub = restrict(cmp, iv, t.pre)
            if sub is None or not _dense_nonempty(sub, t.spec):
                return None
            return sub
        sub = restrict(cmp, iv, t.pre)
        leaf_ranks = None
        if sub is not None:
            leaf = Omega() if t.kind == "W" else OmegaRev()
            a, b = _int_bounds(leaf, sub)
            first = _omega_first(t.spec, a, b)
            if first is not None:
                hi_rank = None if b is None else _rank(t.spec, _omega_last(t.spec, a, b))
                leaf_ranks = (_rank(t.spec, first), hi_rank)
        n = len(t.points)
        head = [k for k, p in enumerate(t.points) if contains(cmp, iv, p)]
        if t.kind == "W":
            head_r = (head[0], head[-1]) if head else None
        else:
            head_r = (n - 1 - head[-1], n - 1 - head[0]) if head else None
        if leaf_ranks is not None:
            leaf_ranks = (leaf_ranks[0] + n, None if leaf_ranks[1] is None else leaf_ranks[1] + n)
        if head_r and leaf_ranks:
            return (head_r[0], leaf_ranks[1])
        return head_r or leaf_ranks

    def _image_hull(self, t, rr) -> Interval:
        """Hull in the target of the points of token t with ranks rr."""
        if t.kind == "D":
            sub = rr
            if self.orient == -1:
                lo = None if sub.hi is None else (AtOrAbove if isinstance(sub.hi, AtOrBelow) else Above)((-sub.hi.path[0],))
                hi = None if sub.lo is None else (AtOrBelow if isinstance(sub.lo, AtOrAbove) else Below)((-sub.lo.path[0],))
                sub = Interval(lo, hi)
            h = _leaf_hull(QDense(), t.spec, sub)
            return prefix_interval(h, t.pre)
        r0, r1 = rr
        if t.kind == "F":
            if self.orient == -1:
                n = len(t.points)
                r0, r1 = n - 1 - r1, n - 1 - r0
            return Interval(AtOrAbove(self._point(t, r0)), AtOrBelow(self._point(t, r1)))
        if t.kind == "W":
            lo = AtOrAbove(self._point(t, r0))
            hi = AtOrBelow(t.pre) if r1 is None else AtOrBelow(self._point(t, r1))
            return Interval(lo, hi)
        # reversed omega: rank grows downward
        hi = AtOrBelow(self._point(t, r0))
        lo = AtOrAbove(t.pre) if r1 is None else AtOrAbove(self._point(t, r1))
        return Interval(lo, hi)

    def forward_hull(self, iv: Interval) -> Interval:
        """varpropto(I, iota): hull of the image of I cap domain."""
        parts = []
        for i, t in enumerate(self._st):
            rr = self._rank_range(t, iv)
            if rr is None:
                continue
            parts.append(self._image_hull(self._dst_token(i), rr))
        if not parts:
            return EMPTY
        if self.orient == -1:
            parts.reverse()
        return Interval(parts[0].lo, parts[-1].hi)

    def backward_hull(self, iv: Interval) -> Interval:
        return self.inverse().forward_hull(iv)


def format_path(p: tuple) -> str:
    segs = []
    for x in p:
        if isinstance(x, Fraction):
            segs.append(f"[{x.numerator}/{x.denominator}]")
        else:
            segs.append(str(x))
    return "/".join(segs) if segs else "."


def parse_path(text: str) -> tuple:
    if text == ".":
        return ()
    out = []
    i = 0
    while i < len(text):
        if text[i] == "[":
            j = text.index("]", i)
            out.append(Fraction(text[i + 1:j]))
            i = j + 1
        else:
            j = text.find("/", i)
            j = len(text) if j < 0 else j
            out.append(int(text[i:j]))
            i = j
        if i < len(text):
            if text[i] != "/":
                raise OrderError(f"bad path {text!r}")
            i += 1
    return tuple(out)


def format_cut(c) -> str:
    if c is None:
        return "inf"
    sym = {AtOrAbove: ">=", Above: ">", AtOrBelow: "<=", Below: "<"}[type(c)]
    return sym + format_path(c.path)


def format_interval(iv: Interval) -> dict:
    lo = "-inf" if iv.lo is None else format_cut(iv.lo)
    hi = "+inf" if iv.hi is None else format_cut(iv.hi)
    return {"lo": lo, "hi": hi}
