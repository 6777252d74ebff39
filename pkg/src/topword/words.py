"""Word expressions over a group sequence and their finite projections.

A word is an expression tree.  Every node has a domain of positions
(paths) and a projection ``project(W, N)``: the finite list of letters of
degree at most N, in order.  Rule-defined nodes carry escape bounds so the
projection is always finite and exact.

    Lit(a)            one letter, path ()
    Cat(parts)        (i,) + path inside part i
    Inv(inner)        same paths as inner, order reversed, letters inverted
    Sub(inner, iv)    same paths as inner, restricted to the interval iv
    OmegaCat(rule)    (k,) + path inside term k, terms in order type omega
    QShuffle(rule)    (site,) + path inside the block at a rational site

    >>> from topword.groups import Registry
    >>> reg = Registry.of()
    >>> a, b = reg.letter(0, 1), reg.letter(1, 1)
    >>> [l.group for _, l in project(Cat((Lit(a), Lit(b), Lit(a))), 0)]
    [0, 0]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from .groups import Letter, Registry, g_in_subgroup
from .orders import (
    FULL,
    Above,
    AtOrAbove,
    AtOrBelow,
    Below,
    Interval,
    complement_hi,
    complement_lo,
    contains,
    format_path,
    hi_cmp,
    intersect,
    lo_cmp,
    prefix_interval,
    restrict,
)


class WordError(ValueError):
    pass


# ---------------------------------------------------------------- nodes

class Word:
    """Base for word nodes: structural equality with a cached hash."""

    def _fields(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and hash(self) == hash(other) and self._fields() == other._fields()

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + self._fields())
            object.__setattr__(self, "_h", h)
        return h


@dataclass(frozen=True, eq=False)
class Empty(Word):
    def _fields(self):
        return ()


@dataclass(frozen=True, eq=False)
class Lit(Word):
    letter: Letter

    def _fields(self):
        return (self.letter,)


@dataclass(frozen=True, eq=False)
class Cat(Word):
    parts: tuple

    def _fields(self):
        return self.parts


@dataclass(frozen=True, eq=False)
class Inv(Word):
    inner: Word

    def _fields(self):
        return (self.inner,)


@dataclass(frozen=True, eq=False)
class Sub(Word):
    inner: Word
    iv: Interval

    def _fields(self):
        return (self.inner, self.iv)


@dataclass(frozen=True)
class ExponentFn:
    """m -> overrides[m], else slope*m + offset (always >= 1)."""

    overrides: tuple = ()
    slope: int = 0
    offset: int = 1

    def __post_init__(self):
        if self.slope < 0 or self.offset < 1:
            raise WordError("exponent default must stay positive")
        for _, v in self.overrides:
            if v < 1:
                raise WordError("exponent overrides must be positive")

    def __call__(self, m: int) -> int:
        for k, v in self.overrides:
            if k == m:
                return v
        return self.slope * m + self.offset


@dataclass(frozen=True)
class PowerTail:
    """Term m is the letter base(a*m+b) ** exps(m), base the registry's
    canonical infinite-order element of that group."""

    reg: Registry
    a: int = 1
    b: int = 0
    exps: ExponentFn = field(default_factory=ExponentFn)

    def __post_init__(self):
        if self.a < 1 or self.b < 0:
            raise WordError("power tail index map must be increasing into naturals")

    def index(self, m: int) -> int:
        return self.a * m + self.b

    def term(self, m: int) -> Word:
        n = self.index(m)
        base = self.reg.infinite_letter(n)
        if base is None:
            raise WordError(f"group {n} has no infinite-order element")
        return Lit(base.power(self.exps(m)))

    def escape(self, N: int) -> int:
        """Least M with every term m >= M of degree > N."""
        if N < self.b:
            return 0
        return (N - self.b) // self.a + 1

    def lower(self) -> int:
        return self.b


@dataclass(frozen=True, eq=False)
class GenTail:
    """A tail given by a term function with a caller-certified escape bound."""

    name: str
    term_fn: Callable[[int], Word]
    escape_fn: Callable[[int], int]
    low: int = 0
    certificate: str = ""
    _memo: dict = field(default_factory=dict, repr=False)

    def term(self, m: int) -> Word:
        w = self._memo.get(m)
        if w is None:
            w = self._memo[m] = self.term_fn(m)
        return w

    def escape(self, N: int) -> int:
        return self.escape_fn(N)

    def lower(self) -> int:
        return self.low

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other


@dataclass(frozen=True)
class SeqRule:
    prefix: tuple = ()
    tail: object = None

    def term(self, k: int) -> Word:
        if k < len(self.prefix):
            return self.prefix[k]
        return self.tail.term(k - len(self.prefix))

    def escape(self, N: int) -> int:
        return len(self.prefix) + self.tail.escape(N)


@dataclass(frozen=True, eq=False)
class OmegaCat(Word):
    rule: SeqRule

    def _fields(self):
        return (self.rule,)


class FiberRule:
    """Which rational sites carry blocks of index m, with their signs."""

    def fibers(self, m: int) -> list:
        raise NotImplementedError

    def locate(self, site: Fraction):
        raise NotImplementedError

    def interior_nonempty(self, lo, hi, lo_open: bool, hi_open: bool) -> bool:
        raise NotImplementedError

    def sites_between(self, lo, hi) -> Optional[list]:
        """All sites in the closed range [lo, hi] if finitely many, else None."""
        raise NotImplementedError


@dataclass(frozen=True)
class DyadicFibers(FiberRule):
    """Index m (from `start`) sits at the sites odd / 2**(m - start + 1) in (0, 1).

    With ``alternate`` the sign is -1 at numerators congruent to 3 mod 4.
    """

    start: int = 0
    alternate: bool = False

    def _sign(self, num: int) -> int:
        return -1 if self.alternate and num % 4 == 3 else 1

    def fibers(self, m: int) -> list:
        if m < self.start:
            return []
        k = m - self.start + 1
        den = 1 << k
        return [(Fraction(num, den), self._sign(num)) for num in range(1, den, 2)]

    def locate(self, site):
        site = Fraction(site)
        if not 0 < site < 1:
            return None
        den = site.denominator
        if den & (den - 1):
            return None
        k = den.bit_length() - 1
        return self.start + k - 1, self._sign(site.numerator)

    def interior_nonempty(self, lo, hi, lo_open=True, hi_open=True):
        a = Fraction(0) if lo is None else max(Fraction(lo), Fraction(0))
        b = Fraction(1) if hi is None else min(Fraction(hi), Fraction(1))
        return a < b

    def sites_between(self, lo, hi):
        if self.interior_nonempty(lo, hi):
            return None
        out = [s for s in {lo, hi} if s is not None and self.locate(s) is not None]
        return sorted(out)


@dataclass(frozen=True)
class TableFibers(FiberRule):
    """Finitely many explicit sites: ((m, ((site, sign), ...)), ...)."""

    table: tuple = ()

    def __post_init__(self):
        seen = set()
        for _, fib in self.table:
            for s, sign in fib:
                if s in seen:
                    raise WordError(f"site {s} used twice")
                if sign not in (1, -1):
                    raise WordError("fiber signs are +1 or -1")
                seen.add(s)

    def fibers(self, m):
        for k, fib in self.table:
            if k == m:
                return list(fib)
        return []

    def locate(self, site):
        for m, fib in self.table:
            for s, sign in fib:
                if s == site:
                    return m, sign
        return None

    def all_sites(self):
        return sorted(s for _, fib in self.table for s, _ in fib)

    def interior_nonempty(self, lo, hi, lo_open=True, hi_open=True):
        return bool(self.sites_between(lo, hi))

    def sites_between(self, lo, hi):
        return [s for s in self.all_sites() if (lo is None or s >= lo) and (hi is None or s <= hi)]


@dataclass(frozen=True, eq=False)
class QRule:
    """Blocks indexed by m placed at the sites of a fiber rule.

    The block of index m is ``h**R core(m) h**R`` when a separator (h, R)
    is given for m, else ``core(m)``; sign -1 sites carry its inverse.
    """

    name: str
    core_fn: Callable[[int], Word]
    fibers: FiberRule
    sep_fn: Callable[[int], Optional[tuple]] = lambda m: None
    start: int = 0
    top: Optional[int] = None
    _memo: dict = field(default_factory=dict, repr=False)

    def core(self, m: int) -> Word:
        key = ("core", m)
        if key not in self._memo:
            self._memo[key] = self.core_fn(m)
        return self._memo[key]

    def sep(self, m: int) -> Optional[tuple]:
        return self.sep_fn(m)

    def block(self, m: int, sign: int = 1) -> Word:
        key = ("block", m, sign)
        w = self._memo.get(key)
        if w is None:
            s = self.sep(m)
            core = self.core(m)
            if s is None:
                w = core
            else:
                h, r = s
                hr = h.power(r)
                if hr is None:
                    raise WordError(f"separator of index {m} is trivial")
                w = Cat((Lit(hr), core, Lit(hr)))
            if sign == -1:
                w = Inv(w)
            self._memo[key] = w
        return w

    def site_block(self, site) -> Word:
        loc = self.fibers.locate(site)
        if loc is None:
            raise WordError(f"{site} is not a site")
        m, sign = loc
        if m < self.start or (self.top is not None and m > self.top):
            raise WordError(f"{site} is not a site")
        return self.block(m, sign)

    def is_site(self, site) -> bool:
        loc = self.fibers.locate(site)
        return loc is not None and loc[0] >= self.start and (self.top is None or loc[0] <= self.top)

    def indices(self, N: int):
        hi = N if self.top is None else min(N, self.top)
        return range(self.start, hi + 1)

    def __hash__(self):
        return id(self)

    def __eq__(self, other):
        return self is other


@dataclass(frozen=True, eq=False)
class QShuffle(Word):
    rule: QRule

    def _fields(self):
        return (self.rule,)


EMPTY_WORD = Empty()


# ---------------------------------------------------------------- constructors

def cat(*parts: Word) -> Word:
    """Concatenation, dropping empty parts and flattening nested Cat."""
    flat = []
    for p in parts:
        if isinstance(p, Empty):
            continue
        flat.extend(p.parts if isinstance(p, Cat) else [p])
    if not flat:
        return EMPTY_WORD
    return flat[0] if len(flat) == 1 else Cat(tuple(flat))


def inverse(w: Word) -> Word:
    if isinstance(w, Empty):
        return w
    if isinstance(w, Inv):
        return w.inner
    if isinstance(w, Lit):
        return Lit(w.letter.inv())
    return Inv(w)


def lit(letter: Letter) -> Lit:
    return Lit(letter)


def power_word(reg: Registry, a: int = 1, b: int = 0, exps: ExponentFn = ExponentFn(), prefix=()) -> OmegaCat:
    return OmegaCat(SeqRule(tuple(prefix), PowerTail(reg, a, b, exps)))


# ---------------------------------------------------------------- order

def word_cmp(w: Word, p: tuple, q: tuple) -> int:
    """Compare two paths of w; 0 when equal or one is a prefix of the other."""
    flip = 1
    while p and q:
        if isinstance(w, Inv):
            w, flip = w.inner, -flip
            continue
        if isinstance(w, Sub):
            w = w.inner
            continue
        a, b = p[0], q[0]
        if a != b:
            return (-1 if a < b else 1) * flip
        if isinstance(w, Cat):
            w = w.parts[a]
        elif isinstance(w, OmegaCat):
            w = w.rule.term(a)
        elif isinstance(w, QShuffle):
            if not w.rule.is_site(a):
                return 0
            w = w.rule.site_block(a)
        else:
            return 0
        p, q = p[1:], q[1:]
    return 0


def cmp_of(w: Word):
    return lambda p, q: word_cmp(w, p, q)


def flip_interval(iv: Interval) -> Interval:
    """The same set read in the reversed order."""
    lo = None if iv.hi is None else (AtOrAbove if isinstance(iv.hi, AtOrBelow) else Above)(iv.hi.path)
    hi = None if iv.lo is None else (AtOrBelow if isinstance(iv.lo, AtOrAbove) else Below)(iv.lo.path)
    return Interval(lo, hi)


def word_intersect(w: Word, a: Interval, b: Interval) -> Interval:
    return intersect(cmp_of(w), a, b)


# ---------------------------------------------------------------- projections

@lru_cache(maxsize=200000)
def project(w: Word, N: int) -> tuple:
    """p_N(w): tuple of (path, letter) for all letters of degree <= N."""
    if isinstance(w, Empty):
        return ()
    if isinstance(w, Lit):
        return (((), w.letter),) if w.letter.group <= N else ()
    if isinstance(w, Cat):
        out = []
        for i, part in enumerate(w.parts):
            out.extend(((i,) + p, l) for p, l in project(part, N))
        return tuple(out)
    if isinstance(w, Inv):
        return tuple((p, l.inv()) for p, l in reversed(project(w.inner, N)))
    if isinstance(w, Sub):
        cmp = cmp_of(w.inner)
        return tuple((p, l) for p, l in project(w.inner, N) if contains(cmp, w.iv, p))
    if isinstance(w, OmegaCat):
        out = []
        for k in range(w.rule.escape(N)):
            out.extend(((k,) + p, l) for p, l in project(w.rule.term(k), N))
        return tuple(out)
    if isinstance(w, QShuffle):
        rule = w.rule
        pieces = []
        for m in rule.indices(N):
            for site, sign in rule.fibers.fibers(m):
                pieces.append((site, project(rule.block(m, sign), N)))
        pieces.sort(key=lambda t: t[0])
        return tuple(((s,) + p, l) for s, proj in pieces for p, l in proj)
    raise WordError(f"unknown word node {w!r}")


def letters_of(fw) -> list:
    return [l for _, l in fw]


def free_reduce(fw) -> tuple:
    """Free-product normal form; merged letters keep the first position."""
    stack: list = []
    for p, l in fw:
        if stack and stack[-1][1].group == l.group:
            q, top = stack.pop()
            m = top.mul(l)
            if m is not None:
                stack.append((q, m))
        else:
            stack.append((p, l))
    return tuple(stack)


def equiv_depth(w: Word, v: Word, N: int) -> bool:
    a = letters_of(free_reduce(project(w, N)))
    b = letters_of(free_reduce(project(v, N)))
    return a == b


def tag(fw, t) -> tuple:
    return tuple(((t,) + p, l) for p, l in fw)


def fw_inverse(fw) -> tuple:
    return tuple((p, l.inv()) for p, l in reversed(fw))


def reduced_mul(w, v) -> tuple:
    """Product of two freely reduced finite words, by cancelling the longest
    matching end/start and merging at most one same-group pair."""
    w, v = tag(w, 0), tag(v, 1)
    k = 0
    while k < len(w) and k < len(v) and w[len(w) - 1 - k][1] == v[k][1].inv():
        k += 1
    left, right = list(w[: len(w) - k]), list(v[k:])
    if left and right and left[-1][1].group == right[0][1].group:
        p, a = left.pop()
        m = a.mul(right.pop(0)[1])
        left.append((p, m))
    return tuple(left + right)


def project_word(w: Word, N: int) -> Word:
    """p_N(w) as a finite word expression (positions renumbered)."""
    return cat(*(Lit(l) for _, l in project(w, N)))


def finite_word(letters) -> Word:
    return cat(*(Lit(l) for l in letters))


# ---------------------------------------------------------------- regions

def _term_range(iv: Interval):
    """Range of top-level selectors touched by iv for an OmegaCat:
    (k0, k1) with k1 None for unbounded, or None when empty."""
    k0 = 0
    if iv.lo is not None:
        p = iv.lo.path
        if not p:
            if isinstance(iv.lo, Above):
                return None
        else:
            k0 = p[0] + (1 if len(p) == 1 and isinstance(iv.lo, Above) else 0)
    k1 = None
    if iv.hi is not None:
        p = iv.hi.path
        if not p:
            if isinstance(iv.hi, Below):
                return None
        else:
            k1 = p[0] - (1 if len(p) == 1 and isinstance(iv.hi, Below) else 0)
    if k1 is not None and k1 < k0:
        return None
    return k0, k1


def _site_range(iv: Interval):
    """(lo, lo_open, hi, hi_open) rational bounds of a QShuffle interval."""
    lo = hi = None
    lo_open = hi_open = False
    if iv.lo is not None:
        p = iv.lo.path
        if p:
            lo = Fraction(p[0])
            lo_open = len(p) == 1 and isinstance(iv.lo, Above)
        elif isinstance(iv.lo, Above):
            return None
    if iv.hi is not None:
        p = iv.hi.path
        if p:
            hi = Fraction(p[0])
            hi_open = len(p) == 1 and isinstance(iv.hi, Below)
        elif isinstance(iv.hi, Below):
            return None
    if lo is not None and hi is not None and (lo > hi or (lo == hi and (lo_open or hi_open))):
        return None
    return lo, lo_open, hi, hi_open


def _q_sites(rule: QRule, iv: Interval):
    """Sites touched by iv: a finite sorted list, or None if infinitely many."""
    r = _site_range(iv)
    if r is None:
        return []
    lo, lo_open, hi, hi_open = r
    if isinstance(rule.fibers, TableFibers):
        sites = rule.fibers.sites_between(lo, hi)
    else:
        if rule.fibers.interior_nonempty(lo, hi):
            return None
        sites = rule.fibers.sites_between(lo, hi)
    out = []
    for s in sites:
        if not rule.is_site(s):
            continue
        if (lo_open and s == lo) or (hi_open and s == hi):
            continue
        out.append(s)
    return out


def region_letters(w: Word, iv: Interval = FULL) -> Optional[list]:
    """All (path, letter) of w inside iv when there are finitely many, else None."""
    if isinstance(w, Empty):
        return []
    if isinstance(w, Lit):
        return [((), w.letter)] if contains(cmp_of(w), iv, ()) else []
    if isinstance(w, Cat):
        out = []
        cmp = cmp_of(w)
        for i, part in enumerate(w.parts):
            sub = restrict(cmp, iv, (i,))
            if sub is None:
                continue
            r = region_letters(part, sub)
            if r is None:
                return None
            out.extend(((i,) + p, l) for p, l in r)
        return out
    if isinstance(w, Inv):
        r = region_letters(w.inner, flip_interval(iv))
        return None if r is None else [(p, l.inv()) for p, l in reversed(r)]
    if isinstance(w, Sub):
        return region_letters(w.inner, word_intersect(w.inner, w.iv, iv))
    if isinstance(w, OmegaCat):
        tr = _term_range(iv)
        if tr is None:
            return []
        k0, k1 = tr
        if k1 is None:
            # terms are nonempty, so only a finite prefix of a leading partial
            # term could make this finite; it never does
            return None
        out = []
        cmp = cmp_of(w)
        for k in range(k0, k1 + 1):
            sub = restrict(cmp, iv, (k,))
            if sub is None:
                continue
            r = region_letters(w.rule.term(k), sub)
            if r is None:
                return None
            out.extend(((k,) + p, l) for p, l in r)
        return out
    if isinstance(w, QShuffle):
        sites = _q_sites(w.rule, iv)
        if sites is None:
            return None
        out = []
        cmp = cmp_of(w)
        for s in sites:
            sub = restrict(cmp, iv, (s,))
            if sub is None:
                continue
            r = region_letters(w.rule.site_block(s), sub)
            if r is None:
                return None
            out.extend(((s,) + p, l) for p, l in r)
        return out
    raise WordError(f"unknown word node {w!r}")


def region_is_empty(w: Word, iv: Interval = FULL) -> bool:
    return _first(w, iv)[0] == "empty"


def is_finite(w: Word, iv: Interval = FULL) -> bool:
    return region_letters(w, iv) is not None


def _first(w: Word, iv: Interval):
    """("empty", None) | ("none", None) when there is no least letter |
    ("letter", (path, letter))."""
    if isinstance(w, Empty):
        return ("empty", None)
    if isinstance(w, Lit):
        return ("letter", ((), w.letter)) if contains(cmp_of(w), iv, ()) else ("empty", None)
    if isinstance(w, Cat):
        cmp = cmp_of(w)
        for i, part in enumerate(w.parts):
            sub = restrict(cmp, iv, (i,))
            if sub is None:
                continue
            kind, val = _first(part, sub)
            if kind == "letter":
                return kind, ((i,) + val[0], val[1])
            if kind == "none":
                return kind, None
        return ("empty", None)
    if isinstance(w, Inv):
        kind, val = _last(w.inner, flip_interval(iv))
        return (kind, None) if kind != "letter" else (kind, (val[0], val[1].inv()))
    if isinstance(w, Sub):
        return _first(w.inner, word_intersect(w.inner, w.iv, iv))
    if isinstance(w, OmegaCat):
        tr = _term_range(iv)
        if tr is None:
            return ("empty", None)
        k0, k1 = tr
        cmp = cmp_of(w)
        k = k0
        while k1 is None or k <= k1:
            sub = restrict(cmp, iv, (k,))
            if sub is not None:
                kind, val = _first(w.rule.term(k), sub)
                if kind == "letter":
                    return kind, ((k,) + val[0], val[1])
                if kind == "none":
                    return kind, None
            if k > k0 + 1 and k1 is None:
                # a full term is nonempty, so this cannot happen twice
                raise WordError("empty term in an omega concatenation")
            k += 1
        return ("empty", None)
    if isinstance(w, QShuffle):
        return _q_extreme(w, iv, first=True)
    raise WordError(f"unknown word node {w!r}")


def _last(w: Word, iv: Interval):
    if isinstance(w, Empty):
        return ("empty", None)
    if isinstance(w, Lit):
        return _first(w, iv)
    if isinstance(w, Cat):
        cmp = cmp_of(w)
        for i in reversed(range(len(w.parts))):
            sub = restrict(cmp, iv, (i,))
            if sub is None:
                continue
            kind, val = _last(w.parts[i], sub)
            if kind == "letter":
                return kind, ((i,) + val[0], val[1])
            if kind == "none":
                return kind, None
        return ("empty", None)
    if isinstance(w, Inv):
        kind, val = _first(w.inner, flip_interval(iv))
        return (kind, None) if kind != "letter" else (kind, (val[0], val[1].inv()))
    if isinstance(w, Sub):
        return _last(w.inner, word_intersect(w.inner, w.iv, iv))
    if isinstance(w, OmegaCat):
        tr = _term_range(iv)
        if tr is None:
            return ("empty", None)
        k0, k1 = tr
        if k1 is None:
            return ("none", None)
        cmp = cmp_of(w)
        for k in range(k1, k0 - 1, -1):
            sub = restrict(cmp, iv, (k,))
            if sub is None:
                continue
            kind, val = _last(w.rule.term(k), sub)
            if kind == "letter":
                return kind, ((k,) + val[0], val[1])
            if kind == "none":
                return kind, None
        return ("empty", None)
    if isinstance(w, QShuffle):
        return _q_extreme(w, iv, first=False)
    raise WordError(f"unknown word node {w!r}")


def _q_extreme(w: QShuffle, iv: Interval, first: bool):
    rule = w.rule
    cmp = cmp_of(w)
    r = _site_range(iv)
    if r is None:
        return ("empty", None)
    lo, lo_open, hi, hi_open = r
    end, end_open = (lo, lo_open) if first else (hi, hi_open)
    # the block sitting exactly at the near end, if the interval reaches into it
    if end is not None and not end_open and rule.is_site(end):
        sub = restrict(cmp, iv, (end,))
        if sub is not None:
            kind, val = (_first if first else _last)(rule.site_block(end), sub)
            if kind == "letter":
                return kind, ((end,) + val[0], val[1])
            if kind == "none":
                return kind, None
    sites = _q_sites(rule, iv)
    if sites is None:
        return ("none", None)
    sites = [s for s in sites if s != end]
    if not first:
        sites.reverse()
    for s in sites:
        sub = restrict(cmp, iv, (s,))
        if sub is None:
            continue
        kind, val = (_first if first else _last)(rule.site_block(s), sub)
        if kind == "letter":
            return kind, ((s,) + val[0], val[1])
        if kind == "none":
            return kind, None
    return ("empty", None)


def first_letter(w: Word, iv: Interval = FULL):
    """(path, letter) of the least position, or None (empty or no least)."""
    kind, val = _first(w, iv)
    return val if kind == "letter" else None


def last_letter(w: Word, iv: Interval = FULL):
    kind, val = _last(w, iv)
    return val if kind == "letter" else None


# ---------------------------------------------------------------- degree

def lower_degree(w: Word) -> float:
    """A lower bound for d(w) read off the structure."""
    if isinstance(w, Empty):
        return float("inf")
    if isinstance(w, Lit):
        return w.letter.group
    if isinstance(w, Cat):
        return min((lower_degree(p) for p in w.parts), default=float("inf"))
    if isinstance(w, (Inv, Sub)):
        return lower_degree(w.inner)
    if isinstance(w, OmegaCat):
        return min([lower_degree(p) for p in w.rule.prefix] + [w.rule.tail.lower()])
    if isinstance(w, QShuffle):
        return w.rule.start
    raise WordError(f"unknown word node {w!r}")


def d_word(w: Word, limit: int = 64) -> Optional[int]:
    """Least degree of a letter of w; None for the empty word.

    Probes projections from the structural lower bound upward; raises when
    nothing shows up to `limit` although the word is nonempty."""
    if region_is_empty(w):
        return None
    n = lower_degree(w)
    n = 0 if n == float("inf") else int(n)
    while n <= limit:
        if project(w, n):
            return n
        n += 1
    raise WordError(f"no letter of degree <= {limit} in a nonempty word")


def subword(w: Word, iv: Interval) -> Word:
    """w restricted to iv, simplified where the interval follows structure."""
    if iv == FULL:
        return w
    if isinstance(w, Cat):
        cmp = cmp_of(w)
        keep = []
        for i, part in enumerate(w.parts):
            sub = restrict(cmp, iv, (i,))
            if sub is None or region_is_empty(part, sub):
                continue
            keep.append(subword(part, sub))
        return cat(*keep)
    if isinstance(w, Inv):
        return inverse(subword(w.inner, flip_interval(iv)))
    if isinstance(w, Sub):
        return subword(w.inner, word_intersect(w.inner, w.iv, iv))
    if isinstance(w, Lit):
        return w if contains(cmp_of(w), iv, ()) else EMPTY_WORD
    if isinstance(w, Empty):
        return w
    if region_is_empty(w, iv):
        return EMPTY_WORD
    return Sub(w, iv)


# ---------------------------------------------------------------- flattening

@dataclass(frozen=True)
class Piece:
    """A region of a base word (Lit, OmegaCat or QShuffle) appearing in a
    larger word under `prefix`, read forwards (sign 1) or inverted (-1)."""

    prefix: tuple
    sign: int
    base: Word
    region: Interval


def flatten(w: Word, iv: Interval = FULL, expand: bool = True) -> list:
    """w restricted to iv as an ordered list of base pieces.

    With `expand`, omega regions covering finitely many terms and
    QShuffle regions inside one block are opened up, and partial end terms
    or end blocks of infinite regions are split off."""
    out: list = []
    _flatten(w, iv, (), 1, out, expand)
    return out


def _flatten(w, iv, pre, sign, out, expand):
    if isinstance(w, Empty):
        return
    if isinstance(w, Lit):
        if contains(cmp_of(w), iv, ()):
            out.append(Piece(pre, sign, w, FULL))
        return
    if isinstance(w, Cat):
        cmp = cmp_of(w)
        idx = range(len(w.parts)) if sign == 1 else reversed(range(len(w.parts)))
        for i in idx:
            sub = restrict(cmp, iv, (i,))
            if sub is not None:
                _flatten(w.parts[i], sub, pre + (i,), sign, out, expand)
        return
    if isinstance(w, Inv):
        _flatten(w.inner, flip_interval(iv), pre, -sign, out, expand)
        return
    if isinstance(w, Sub):
        _flatten(w.inner, word_intersect(w.inner, w.iv, iv), pre, sign, out, expand)
        return
    if isinstance(w, OmegaCat):
        _flatten_omega(w, iv, pre, sign, out, expand)
        return
    if isinstance(w, QShuffle):
        _flatten_q(w, iv, pre, sign, out, expand)
        return
    raise WordError(f"unknown word node {w!r}")


def _flatten_omega(w, iv, pre, sign, out, expand):
    tr = _term_range(iv)
    if tr is None:
        return
    k0, k1 = tr
    cmp = cmp_of(w)
    if not expand:
        if not region_is_empty(w, iv):
            out.append(Piece(pre, sign, w, iv))
        return
    if k1 is not None:
        terms = range(k0, k1 + 1)
        if sign == -1:
            terms = reversed(terms)
        for k in terms:
            sub = restrict(cmp, iv, (k,))
            if sub is not None:
                _flatten(w.rule.term(k), sub, pre + (k,), sign, out, expand)
        return
    # unbounded: split off a partial first term, keep the rest atomic
    lo = iv.lo
    head = None
    if lo is not None and len(lo.path) > 1:
        head = restrict(cmp, iv, (k0,))
        rest = Interval(Above((k0,)), None)
    else:
        rest = Interval(AtOrAbove((k0,)), None)
    pieces = []
    if head is not None:
        sub: list = []
        _flatten(w.rule.term(k0), head, pre + (k0,), sign, sub, expand)
        pieces.append(sub)
    pieces.append([Piece(pre, sign, w, _canon_omega(rest))])
    if sign == -1:
        pieces.reverse()
    for p in pieces:
        out.extend(p)


def _canon_omega(iv: Interval) -> Interval:
    lo = iv.lo
    if isinstance(lo, Above) and len(lo.path) == 1:
        lo = AtOrAbove((lo.path[0] + 1,))
    return Interval(lo, iv.hi)


def _flatten_q(w, iv, pre, sign, out, expand):
    rule = w.rule
    cmp = cmp_of(w)
    sites = _q_sites(rule, iv)
    if not expand:
        if not region_is_empty(w, iv):
            out.append(Piece(pre, sign, w, iv))
        return
    if sites is not None:
        seq = sites if sign == 1 else list(reversed(sites))
        for s in seq:
            sub = restrict(cmp, iv, (s,))
            if sub is not None:
                _flatten(rule.site_block(s), sub, pre + (s,), sign, out, expand)
        return
    r = _site_range(iv)
    lo, lo_open, hi, hi_open = r
    head: list = []
    tail: list = []
    mid_lo = None if lo is None else Above((lo,))
    mid_hi = None if hi is None else Below((hi,))
    if lo is not None and not lo_open and rule.is_site(lo):
        sub = restrict(cmp, iv, (lo,))
        if sub is not None:
            _flatten(rule.site_block(lo), sub, pre + (lo,), sign, head, expand)
    if hi is not None and not hi_open and rule.is_site(hi):
        sub = restrict(cmp, iv, (hi,))
        if sub is not None:
            _flatten(rule.site_block(hi), sub, pre + (hi,), sign, tail, expand)
    mid = [Piece(pre, sign, w, Interval(mid_lo, mid_hi))]
    groups = [head, mid, tail] if sign == 1 else [tail, mid, head]
    for g in groups:
        out.extend(g)


def piece_word(p: Piece) -> Word:
    w = p.base if p.region == FULL else Sub(p.base, p.region)
    return w if p.sign == 1 else Inv(w)


def piece_interval(p: Piece) -> Interval:
    """The piece's region as an interval of the ambient word."""
    r = p.region if p.sign == 1 else flip_interval(p.region)
    if isinstance(p.base, Lit):
        r = FULL
    return prefix_interval(r, p.prefix) if p.prefix else r


# ---------------------------------------------------------------- cuts in words

def cut_lo_equiv(w: Word, a, b) -> bool:
    """Do two low cuts admit the same positions of w?"""
    cmp = cmp_of(w)
    c = lo_cmp(cmp, a, b)
    lower, higher = (a, b) if c <= 0 else (b, a)
    if higher is None:
        return lower is None
    gap = Interval(lower, complement_hi(higher))
    return region_is_empty(w, gap)


def cut_hi_equiv(w: Word, a, b) -> bool:
    cmp = cmp_of(w)
    c = hi_cmp(cmp, a, b)
    lower, higher = (a, b) if c <= 0 else (b, a)
    if lower is None:
        return higher is None
    gap = Interval(complement_lo(lower), higher)
    return region_is_empty(w, gap)


def interval_equiv(w: Word, a: Interval, b: Interval) -> bool:
    ea, eb = region_is_empty(w, a), region_is_empty(w, b)
    if ea or eb:
        return ea and eb
    return cut_lo_equiv(w, a.lo, b.lo) and cut_hi_equiv(w, a.hi, b.hi)


def interval_within(w: Word, a: Interval, b: Interval) -> bool:
    """Is the region a contained in the region b?"""
    if region_is_empty(w, a):
        return True
    return interval_equiv(w, word_intersect(w, a, b), a)


def pieces_equal(a: list, b: list) -> bool:
    if len(a) != len(b):
        return False
    for p, q in zip(a, b):
        if p.base != q.base or p.sign != q.sign:
            return False
        if not interval_equiv(p.base, p.region, q.region):
            return False
    return True


def merge_pieces(pieces: list) -> list:
    """Join neighbouring pieces of the same base and sign that abut."""
    out: list = []
    for p in pieces:
        if out:
            q = out[-1]
            if q.base == p.base and q.sign == p.sign and not isinstance(p.base, Lit):
                m = _abut(q, p)
                if m is not None:
                    out[-1] = m
                    continue
        out.append(p)
    return out


def _abut(q: Piece, p: Piece) -> Optional[Piece]:
    """q then p (in ambient order) as a single piece when nothing lies between."""
    w = q.base
    first, second = (q, p) if q.sign == 1 else (p, q)
    if first.region.hi is None or second.region.lo is None:
        return None
    gap = Interval(complement_lo(first.region.hi), complement_hi(second.region.lo))
    if not region_is_empty(w, gap):
        return None
    return Piece(q.prefix if q.sign == 1 else p.prefix, q.sign, w, Interval(first.region.lo, second.region.hi))


def canonical_pieces(w: Word, iv: Interval = FULL) -> list:
    return merge_pieces(flatten(w, iv))


# ---------------------------------------------------------------- matching

@dataclass(frozen=True)
class Found:
    interval: Interval
    sign: int
    exact: bool
    depth: Optional[int] = None


@dataclass(frozen=True)
class NotFoundToDepth:
    depth: int


def syntactic_match(pattern: Word, host: Word, piv: Interval = FULL, hiv: Interval = FULL) -> Optional[Found]:
    """Find an interval I of host with host|I built from the very same base
    regions as pattern|piv (so the two are equal as words), either sign."""
    pp = canonical_pieces(pattern, piv)
    if not pp:
        return None
    k = len(pp)
    for sign in (1, -1):
        target = host if sign == 1 else Inv(host)
        tiv = hiv if sign == 1 else flip_interval(hiv)
        hp = canonical_pieces(target, tiv)
        for i in range(len(hp) - k + 1):
            window = hp[i:i + k]
            if not _aligned(pp, window):
                continue
            lo = piece_interval(Piece(window[0].prefix, window[0].sign, pp[0].base, pp[0].region)).lo
            hi = piece_interval(Piece(window[-1].prefix, window[-1].sign, pp[-1].base, pp[-1].region)).hi
            out = Interval(lo, hi)
            return Found(out if sign == 1 else flip_interval(out), sign, True)
    return None


def _amb_lo_same(p: Piece, h: Piece) -> bool:
    if p.sign == 1:
        return cut_lo_equiv(p.base, p.region.lo, h.region.lo)
    return cut_hi_equiv(p.base, p.region.hi, h.region.hi)


def _amb_hi_same(p: Piece, h: Piece) -> bool:
    if p.sign == 1:
        return cut_hi_equiv(p.base, p.region.hi, h.region.hi)
    return cut_lo_equiv(p.base, p.region.lo, h.region.lo)


def _aligned(pp: list, hp: list) -> bool:
    """Inner pieces equal, the first a final part and the last an initial
    part of the matching host piece."""
    k = len(pp)
    for j, (p, h) in enumerate(zip(pp, hp)):
        if p.base != h.base or p.sign != h.sign:
            return False
        if isinstance(p.base, Lit):
            continue
        if not interval_within(p.base, p.region, h.region):
            return False
        if j > 0 and not _amb_lo_same(p, h):
            return False
        if j < k - 1 and not _amb_hi_same(p, h):
            return False
    return True


def _run_positions(hay: tuple, needle: list) -> list:
    """Start indices where the letters of needle occur contiguously in hay."""
    k = len(needle)
    out = []
    if k == 0:
        return out
    letters = [l for _, l in hay]
    first = needle[0]
    for i in range(len(letters) - k + 1):
        if letters[i] == first and letters[i:i + k] == needle:
            out.append(i)
    return out


def find_finite(pattern_letters: list, host: Word) -> list:
    """Exact occurrences of a finite letter list as an interval of host:
    list of (interval, sign)."""
    if not pattern_letters:
        return []
    D = max(l.group for l in pattern_letters)
    out = []
    for sign in (1, -1):
        target = host if sign == 1 else Inv(host)
        hay = project(target, D)
        cmp = cmp_of(target)
        for i in _run_positions(hay, pattern_letters):
            run = hay[i:i + len(pattern_letters)]
            ok = True
            for (p, _), (q, _) in zip(run, run[1:]):
                if not region_is_empty(target, Interval(Above(p), Below(q))):
                    ok = False
                    break
            if ok:
                iv = Interval(AtOrAbove(run[0][0]), AtOrBelow(run[-1][0]))
                out.append((iv if sign == 1 else flip_interval(iv), sign))
        del cmp
    return out


def occurs_as_subword(pattern: Word, host: Word, depth: int, piv: Interval = FULL):
    """Search host for an interval I with host|I equal to pattern|piv (either
    orientation).  Exact when both sides line up syntactically or the
    pattern is finite; otherwise projections are compared at d(pattern)+depth."""
    hits = find_occurrences(pattern, host, depth, piv, first_only=True)
    return hits[0] if hits else NotFoundToDepth(depth)


def find_occurrences(pattern: Word, host: Word, depth: int, piv: Interval = FULL, first_only: bool = False) -> list:
    s = syntactic_match(pattern, host, piv)
    if s is not None and first_only:
        return [s]
    letters = region_letters(pattern, piv)
    if letters is not None:
        if not letters:
            return []
        found = [Found(iv, sign, True) for iv, sign in find_finite([l for _, l in letters], host)]
        return found[:1] if first_only else found
    pat = pattern if piv == FULL else Sub(pattern, piv)
    d = d_word(pat)
    D = d + depth
    # both end letters must be compared, or a run could start mid-pattern
    for end in (first_letter(pat), last_letter(pat)):
        if end is not None:
            D = max(D, end[1].group)
    needle = [l for _, l in project(pat, D)]
    out = [] if s is None else [s]
    for sign in (1, -1):
        target = host if sign == 1 else Inv(host)
        hay = project(target, D)
        for i in _run_positions(hay, needle):
            f = _refine_run(pattern, piv, host, hay, i, len(needle), sign)
            if f is None:
                iv = _extend_run(pat, target, hay, i, len(needle))
                f = Found(iv if sign == 1 else flip_interval(iv), sign, False, D)
            if s is not None and f.sign == s.sign and interval_equiv(host, f.interval, s.interval):
                continue
            out.append(f)
            if first_only:
                return out
    return out


def _refine_run(pattern: Word, piv: Interval, host: Word, hay, i: int, k: int, sign: int) -> Optional[Found]:
    """An exact match around a depth-bounded run, looked for inside the
    subtrees of host enclosing the run, innermost first."""
    a, b = hay[i][0], hay[i + k - 1][0]
    n = 0
    while n < min(len(a), len(b)) and a[n] == b[n]:
        n += 1
    cmp = cmp_of(host)
    for L in range(n, 0, -1):
        hiv = prefix_interval(FULL, a[:L])
        f = syntactic_match(pattern, host, piv, hiv)
        if f is not None and f.sign == sign and contains(cmp, f.interval, a):
            return f
    return None


def _extend_run(pat: Word, target: Word, hay, i: int, k: int) -> Interval:
    """Interval of target around a matched run, reaching into the
    neighbouring gaps exactly when the pattern has letters beyond its run."""
    D = max(l.group for _, l in hay[i:i + k])
    head, tail = first_letter(pat), last_letter(pat)
    lo = AtOrAbove(hay[i][0])
    hi = AtOrBelow(hay[i + k - 1][0])
    if head is None or head[1].group > D:
        lo = Above(hay[i - 1][0]) if i > 0 else None
    if tail is None or tail[1].group > D:
        hi = Below(hay[i + k][0]) if i + k < len(hay) else None
    return Interval(lo, hi)


# ---------------------------------------------------------------- embeddings

def enumerate_degree_embeddings(profile: list, target) -> list:
    """All starts s with d(target[s + j]) == profile[j] for every j.

    An embedding is fixed by where one point goes, so the rarest degree in
    the profile is anchored at each matching letter and checked."""
    k = len(profile)
    degs = [l.group for _, l in target]
    if k == 0 or k > len(degs):
        return []
    counts = {}
    for d in degs:
        counts[d] = counts.get(d, 0) + 1
    anchor = min(range(k), key=lambda j: (counts.get(profile[j], 0), j))
    starts = []
    for pos, d in enumerate(degs):
        if d != profile[anchor]:
            continue
        s = pos - anchor
        if s < 0 or s + k > len(degs):
            continue
        if all(degs[s + j] == profile[j] for j in range(k)):
            starts.append(s)
    return starts


# ---------------------------------------------------------------- fine membership

@dataclass(frozen=True)
class Factor:
    interval: Interval
    kind: str           # "sub" or "letter"
    source: Optional[int] = None
    found: Optional[Found] = None


@dataclass(frozen=True)
class MemberWitness:
    factors: tuple
    depth: int
    exact: bool


@dataclass(frozen=True)
class NoDecompositionToDepth:
    depth: int


def _atoms(w: Word, N: int) -> list:
    """Visible letters at depth N and the nonempty gaps between them."""
    vis = project(w, N)
    atoms = []
    prev = None
    for p, l in vis:
        gap = Interval(None if prev is None else Above(prev), Below(p))
        atoms.extend(_gap_atoms(w, gap))
        atoms.append(("letter", Interval(AtOrAbove(p), AtOrBelow(p)), l))
        prev = p
    atoms.extend(_gap_atoms(w, Interval(None if prev is None else Above(prev), None)))
    return atoms


def _gap_atoms(w: Word, gap: Interval) -> list:
    """A gap cut where its base pieces meet, so factors may end there."""
    if region_is_empty(w, gap):
        return []
    pieces = canonical_pieces(w, gap)
    if len(pieces) < 2:
        return [("gap", gap)]
    out = []
    for k, p in enumerate(pieces):
        iv = piece_interval(p)
        lo = gap.lo if k == 0 else iv.lo
        hi = gap.hi if k == len(pieces) - 1 else iv.hi
        if isinstance(p.base, Lit):
            l = p.base.letter if p.sign == 1 else p.base.letter.inv()
            out.append(("letter", Interval(lo, hi), l))
        else:
            out.append(("gap", Interval(lo, hi)))
    return out


def family_letters(family: list, n: int) -> list:
    out = []
    for v in family:
        out.extend(l.value for _, l in project(v, n) if l.group == n)
    return out


def fine_membership_bounded(w: Word, family: list, N: int, cap: int = 8):
    """Search a decomposition of w into at most `cap` factors, each a subword
    of a family word (or its inverse) or a single letter generated by family
    letters of its group.  Factor boundaries are limited to the letters and
    gaps visible at depth N."""
    atoms = _atoms(w, N)
    if not atoms:
        return MemberWitness((), N, True)
    t = len(atoms)
    memo = {}

    def factor(i, j):
        key = (i, j)
        if key in memo:
            return memo[key]
        iv = Interval(atoms[i][1].lo, atoms[j][1].hi)
        res = None
        for x, v in enumerate(family):
            f = occurs_as_subword(w, v, N, iv)
            if isinstance(f, Found):
                res = Factor(iv, "sub", x, f)
                break
        if res is None and i == j and atoms[i][0] == "letter":
            l = atoms[i][2]
            if g_in_subgroup(l.spec, l.value, family_letters(family, l.group)):
                res = Factor(iv, "letter")
        memo[key] = res
        return res

    # a factor containing a gap that is no subword on its own is no
    # subword either, so such a gap rules out every decomposition
    for i, a in enumerate(atoms):
        if a[0] == "gap" and factor(i, i) is None:
            return NoDecompositionToDepth(N)
    # best[i] = shortest decomposition of atoms[:i]
    best = {0: ()}
    for i in range(t):
        if i not in best or len(best[i]) >= cap:
            continue
        for j in range(i, t):
            f = factor(i, j)
            if f is None:
                break
            cand = best[i] + (f,)
            if j + 1 not in best or len(cand) < len(best[j + 1]):
                best[j + 1] = cand
    if t in best:
        fs = best[t]
        exact = all(f.kind == "letter" or f.found.exact for f in fs)
        return MemberWitness(fs, N, exact)
    return NoDecompositionToDepth(N)


# ---------------------------------------------------------------- formatting

def fw_json(fw) -> list:
    return [{"pos": format_path(p), "group": l.group, "value": l.text()} for p, l in fw]
