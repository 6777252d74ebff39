"""Close order isomorphisms between word domains, coherence audits and the
constructions that extend a collection of coi triples.

A coi maps a close subset of the positions of a left word onto a close
subset of the positions of a right word.  Everything downstream only needs
the hull operator (the smallest interval containing the image of an
interval), so every map here exposes ``forward_hull`` and ``backward_hull``
on word intervals and returns ``EMPTY`` when nothing is hit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .arch import Equal, arch_eq, ref, verdict_name
from .groups import Registry
from .orders import (
    EMPTY,
    FULL,
    Above,
    AtOrAbove,
    AtOrBelow,
    Below,
    Fin,
    Interval,
    OCat,
    Omega,
    OmegaRev,
    OrderCoi,
    OrderError,
    complement_hi,
    complement_lo,
    contains,
    format_interval,
    format_path,
    hi_cmp,
    intersect,
    lo_cmp,
    point_interval,
    prefix_interval,
    restrict,
)
from .words import (
    EMPTY_WORD,
    Cat,
    DyadicFibers,
    ExponentFn,
    Factor,
    GenTail,
    Inv,
    Lit,
    MemberWitness,
    OmegaCat,
    Piece,
    PowerTail,
    QRule,
    QShuffle,
    SeqRule,
    Sub,
    Word,
    _q_sites,
    _site_range,
    _term_range,
    canonical_pieces,
    cmp_of,
    d_word,
    enumerate_degree_embeddings,
    equiv_depth,
    find_occurrences,
    fine_membership_bounded,
    first_letter,
    flatten,
    flip_interval,
    interval_equiv,
    inverse,
    is_finite,
    last_letter,
    piece_interval,
    project,
    region_is_empty,
)


class CoiError(ValueError):
    pass


# ---------------------------------------------------------------- helpers

def is_void(w: Word, iv: Interval) -> bool:
    return iv == EMPTY or region_is_empty(w, iv)


def hull_union(w: Word, ivs) -> Interval:
    """Smallest interval of w containing every nonempty interval given."""
    ivs = [iv for iv in ivs if iv is not None and not is_void(w, iv)]
    if not ivs:
        return EMPTY
    cmp = cmp_of(w)
    lo, hi = ivs[0].lo, ivs[0].hi
    for iv in ivs[1:]:
        if lo_cmp(cmp, iv.lo, lo) < 0:
            lo = iv.lo
        if hi_cmp(cmp, iv.hi, hi) > 0:
            hi = iv.hi
    return Interval(lo, hi)


def first_position(w: Word) -> Optional[tuple]:
    f = first_letter(w)
    if f is not None:
        return f[0]
    for p, _ in project(w, 0):
        return p
    n = 1
    while n < 64:
        fw = project(w, n)
        if fw:
            return fw[0][0]
        n += 1
    return None


def fresh_letter(reg: Registry, n: int):
    """The canonical infinite-order letter of group n, else any letter."""
    h = reg.infinite_letter(n)
    if h is None:
        h = reg.some_letter(n)
    if h is None:
        raise CoiError(f"group {n} is trivial")
    return h


# ---------------------------------------------------------------- charts

def _letters_from(rule, k: int) -> bool:
    """Is every term of the omega rule from index k on a single letter?"""
    n = len(rule.prefix)
    if k < n:
        return False
    return isinstance(rule.tail, PowerTail) or isinstance(rule.tail.term(k - n), Lit)


def _letter_pieces(word: Word, iv: Interval) -> list:
    """flatten, with each infinite omega region split into a finite head
    (opened into letters) and a run of letter terms."""
    out = []
    for p in flatten(word, iv):
        if isinstance(p.base, Lit):
            out.append(p)
            continue
        tr = _term_range(p.region) if isinstance(p.base, OmegaCat) else None
        if tr is None or tr[1] is not None:
            raise CoiError("segment charts need letters and omega runs of letters")
        k = max(tr[0], len(p.base.rule.prefix))
        if not _letters_from(p.base.rule, k):
            raise CoiError("segment charts need letters and omega runs of letters")
        head = []
        if k > tr[0]:
            for q in flatten(p.base, Interval(p.region.lo, Below((k,)))):
                if not isinstance(q.base, Lit):
                    raise CoiError("segment charts need letters and omega runs of letters")
                head.append(Piece(p.prefix + q.prefix, p.sign * q.sign, q.base, q.region))
        run = Piece(p.prefix, p.sign, p.base, Interval(AtOrAbove((k,)), None))
        out.extend(head + [run] if p.sign == 1 else [run] + head[::-1])
    return out


class Chart:
    """An order expression describing the positions of ``word`` inside
    ``iv``: one Fin(1) leaf per letter and one omega leaf per infinite run
    of letter terms of an omega product (reversed when read inverted)."""

    def __init__(self, word: Word, iv: Interval = FULL):
        self.word, self.iv = word, iv
        self.pieces = []
        orders = []
        for p in _letter_pieces(word, iv):
            if isinstance(p.base, Lit):
                self.pieces.append((p, None))
                orders.append(Fin(1))
            else:
                self.pieces.append((p, _term_range(p.region)[0]))
                orders.append(Omega() if p.sign == 1 else OmegaRev())
        if not orders:
            raise CoiError("segment interval is empty")
        self.multi = len(orders) > 1
        self.order = OCat(tuple(orders)) if self.multi else orders[0]

    def _leaf(self, i: int) -> tuple:
        return (i,) if self.multi else ()

    def _word_path(self, i: int, n: int) -> tuple:
        p, k0 = self.pieces[i]
        return p.prefix if k0 is None else p.prefix + (k0 + n,)

    def _range(self, i: int, J: Interval):
        """Chart index range [a, b] (b None = unbounded) of J in leaf i."""
        p, k0 = self.pieces[i]
        cmp = cmp_of(self.word)
        if k0 is None:
            return (0, 0) if contains(cmp, J, p.prefix) else None
        r = restrict(cmp, J, p.prefix) if p.prefix else J
        if r is None:
            return None
        if p.sign == -1:
            r = flip_interval(r)
        r = intersect(cmp_of(p.base), r, p.region)
        tr = _term_range(r)
        if tr is None:
            return None
        a, b = tr
        a = max(a, k0)
        if b is not None and b < a:
            return None
        return a - k0, None if b is None else b - k0

    def to_chart(self, J: Interval) -> Optional[Interval]:
        hits = [(i, rr) for i in range(len(self.pieces)) if (rr := self._range(i, J)) is not None]
        if not hits:
            return None
        (i, (a, b)), (j, (a2, b2)) = hits[0], hits[-1]
        if self.pieces[i][0].sign == -1 and self.pieces[i][1] is not None:
            lo = AtOrAbove(self._leaf(i)) if b is None else AtOrAbove(self._leaf(i) + (b,))
        else:
            lo = AtOrAbove(self._leaf(i) + (a,))
        if self.pieces[j][0].sign == -1 and self.pieces[j][1] is not None:
            hi = AtOrBelow(self._leaf(j) + (a2,))
        else:
            hi = AtOrBelow(self._leaf(j)) if b2 is None else AtOrBelow(self._leaf(j) + (b2,))
        return Interval(lo, hi)

    def _split(self, path: tuple):
        if self.multi:
            return path[0], path[1:]
        return 0, path

    def from_chart(self, civ: Interval) -> Interval:
        lo = hi = None
        if civ.lo is None:
            lo = self.iv.lo
        else:
            i, rest = self._split(civ.lo.path)
            if rest:
                lo = type(civ.lo)(self._word_path(i, rest[0]))
            else:
                piv = piece_interval(self.pieces[i][0])
                lo = piv.lo if isinstance(civ.lo, AtOrAbove) else complement_lo(piv.hi)
        if civ.hi is None:
            hi = self.iv.hi
        else:
            i, rest = self._split(civ.hi.path)
            if rest:
                hi = type(civ.hi)(self._word_path(i, rest[0]))
            else:
                piv = piece_interval(self.pieces[i][0])
                hi = piv.hi if isinstance(civ.hi, AtOrBelow) else complement_hi(piv.lo)
        return Interval(lo, hi)


# ---------------------------------------------------------------- coi maps

class Coi:
    left: Word
    right: Word

    def forward_hull(self, iv: Interval) -> Interval:
        raise NotImplementedError

    def backward_hull(self, iv: Interval) -> Interval:
        raise NotImplementedError

    def inverse(self) -> "Coi":
        raise NotImplementedError

    def to_json(self):
        return {"kind": type(self).__name__}


@dataclass(frozen=True)
class Segment:
    src: Interval
    dst: Interval
    orient: int = 1
    src_pick: object = None
    dst_pick: object = None

    def flipped(self) -> "Segment":
        return Segment(self.dst, self.src, self.orient, self.dst_pick, self.src_pick)


@dataclass(frozen=True, eq=False)
class ChartCoi(Coi):
    """A finite list of segments, each the canonical order isomorphism
    between picked close subsets of a left interval and a right interval."""

    left: Word
    right: Word
    segments: tuple
    _maps: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        from .orders import All

        maps = []
        for s in self.segments:
            if s.orient not in (1, -1):
                raise CoiError("segment orientation is +1 or -1")
            sc, dc = Chart(self.left, s.src), Chart(self.right, s.dst)
            try:
                oc = OrderCoi(sc.order, dc.order, s.src_pick or All(), s.dst_pick or All(), s.orient)
            except OrderError as e:
                raise CoiError(str(e)) from None
            maps.append((s, sc, dc, oc))
        self._maps.extend(maps)
        self._check_layout()

    def _check_layout(self):
        for word, ivs in ((self.left, [s.src for s in self.segments]), (self.right, [s.dst for s in self.segments])):
            cmp = cmp_of(word)
            ordered = sorted(range(len(ivs)), key=_cut_key(cmp, [iv.lo for iv in ivs]))
            gaps = []
            prev = None
            for k in ordered:
                iv = ivs[k]
                if prev is None:
                    if iv.lo is not None:
                        gaps.append(Interval(None, complement_hi(iv.lo)))
                else:
                    if prev.hi is None or iv.lo is None or lo_cmp(cmp, complement_lo(prev.hi), iv.lo) > 0:
                        raise CoiError("segments overlap")
                    gaps.append(Interval(complement_lo(prev.hi), complement_hi(iv.lo)))
                prev = iv
            if prev is None:
                if not is_finite(word):
                    raise CoiError("an empty coi needs finite words")
                continue
            if prev.hi is not None:
                gaps.append(Interval(complement_lo(prev.hi), None))
            for g in gaps:
                if not is_void(word, g) and not is_finite(word, g):
                    raise CoiError("coi domain or image is not close")
        lefts = sorted(range(len(self.segments)), key=_cut_key(cmp_of(self.left), [s.src.lo for s in self.segments]))
        rights = sorted(range(len(self.segments)), key=_cut_key(cmp_of(self.right), [s.dst.lo for s in self.segments]))
        orients = {s.orient for s in self.segments}
        if len(orients) > 1:
            raise CoiError("segments mix orientations")
        if orients == {-1}:
            rights.reverse()
        if lefts != rights:
            raise CoiError("segment order differs between the two sides")

    def _hull(self, iv: Interval, forward: bool) -> Interval:
        out = []
        for s, sc, dc, oc in self._maps:
            a, b = (sc, dc) if forward else (dc, sc)
            src = s.src if forward else s.dst
            J = intersect(cmp_of(a.word), iv, src)
            civ = a.to_chart(J)
            if civ is None:
                continue
            h = oc.forward_hull(civ) if forward else oc.backward_hull(civ)
            if h == EMPTY:
                continue
            out.append(b.from_chart(h))
        return hull_union(self.right if forward else self.left, out)

    def forward_hull(self, iv):
        return self._hull(iv, True)

    def backward_hull(self, iv):
        return self._hull(iv, False)

    def inverse(self):
        return ChartCoi(self.right, self.left, tuple(s.flipped() for s in self.segments))

    def __eq__(self, other):
        return isinstance(other, ChartCoi) and (self.left, self.right, self.segments) == (other.left, other.right, other.segments)

    def __hash__(self):
        return hash((self.left, self.right, self.segments))

    def to_json(self):
        return {"kind": "segments", "segments": [
            {"src": format_interval(s.src), "dst": format_interval(s.dst), "orient": s.orient,
             "pick": [type(s.src_pick).__name__ if s.src_pick else "All", type(s.dst_pick).__name__ if s.dst_pick else "All"]}
            for s in self.segments]}


def _cut_key(cmp, cuts):
    import functools

    return functools.cmp_to_key(lambda i, j: lo_cmp(cmp, cuts[i], cuts[j]))


def identity_coi(w: Word) -> ChartCoi:
    return ChartCoi(w, w, (Segment(FULL, FULL),))


@dataclass(frozen=True)
class PointCoi(Coi):
    left: Word
    right: Word
    src: tuple
    dst: tuple

    def forward_hull(self, iv):
        return point_interval(self.dst) if contains(cmp_of(self.left), iv, self.src) else EMPTY

    def backward_hull(self, iv):
        return point_interval(self.src) if contains(cmp_of(self.right), iv, self.dst) else EMPTY

    def inverse(self):
        return PointCoi(self.right, self.left, self.dst, self.src)

    def to_json(self):
        return {"kind": "point", "src": format_path(self.src), "dst": format_path(self.dst)}


@dataclass(frozen=True)
class EmptyCoi(Coi):
    left: Word
    right: Word

    def forward_hull(self, iv):
        return EMPTY

    def backward_hull(self, iv):
        return EMPTY

    def inverse(self):
        return EmptyCoi(self.right, self.left)


# ---------------------------------------------------------------- morphs

@dataclass(frozen=True)
class IdMorph:
    def down(self, iv):
        return iv

    def up(self, iv):
        return iv


@dataclass(frozen=True)
class PrefixMorph:
    """`inner` sits in `outer` at path `pre`, read inverted when `flip`;
    `clip` limits the part of `inner` that actually appears."""

    outer: Word
    inner: Word
    pre: tuple
    flip: bool = False
    clip: Optional[Interval] = None

    def _clip(self, r):
        if self.clip is not None:
            r = intersect(cmp_of(self.inner), r, self.clip)
        return None if is_void(self.inner, r) else r

    def down(self, iv):
        r = restrict(cmp_of(self.outer), iv, self.pre) if self.pre else iv
        if r is None:
            return None
        if self.flip:
            r = flip_interval(r)
        return self._clip(r)

    def up(self, iv):
        r = self._clip(iv)
        if r is None:
            return None
        if self.flip:
            r = flip_interval(r)
        return prefix_interval(r, self.pre) if self.pre else r


def _transfer(iv, src_word, src_pieces, dst_word, dst_pieces):
    """Carry iv across two piece lists built from the same base regions."""
    out = []
    cmp = cmp_of(src_word)
    for p, q in zip(src_pieces, dst_pieces):
        r = restrict(cmp, iv, p.prefix) if p.prefix else iv
        if r is None:
            continue
        if isinstance(p.base, Lit):
            if not contains(cmp, iv, p.prefix):
                continue
            out.append(piece_interval(q))
            continue
        if p.sign == -1:
            r = flip_interval(r)
        r = intersect(cmp_of(p.base), r, p.region)
        if is_void(p.base, r):
            continue
        out.append(piece_interval(Piece(q.prefix, q.sign, q.base, r)))
    h = hull_union(dst_word, out)
    return None if h == EMPTY else h


@dataclass(frozen=True)
class PieceMorph:
    """Position correspondence behind a syntactic match: `outer` restricted
    to its pieces equals `target` (the inner word, inverted when `flip`)
    restricted to its pieces."""

    outer: Word
    outer_pieces: tuple
    inner: Word
    inner_pieces: tuple
    flip: bool

    def _target(self):
        return Inv(self.inner) if self.flip else self.inner

    def down(self, iv):
        h = _transfer(iv, self.outer, self.outer_pieces, self._target(), self.inner_pieces)
        if h is None:
            return None
        return flip_interval(h) if self.flip else h

    def up(self, iv):
        if self.flip:
            iv = flip_interval(iv)
        return _transfer(iv, self._target(), self.inner_pieces, self.outer, self.outer_pieces)


# ---------------------------------------------------------------- composites

@dataclass(frozen=True)
class Part:
    """An inner coi spliced into a larger one through two morphs."""

    lm: object
    inner: Coi
    rm: object

    def forward(self, iv):
        j = self.lm.down(iv)
        if j is None:
            return None
        h = self.inner.forward_hull(j)
        if is_void(self.inner.right, h):
            return None
        return self.rm.up(h)

    def backward(self, iv):
        j = self.rm.down(iv)
        if j is None:
            return None
        h = self.inner.backward_hull(j)
        if is_void(self.inner.left, h):
            return None
        return self.lm.up(h)

    def inverse(self):
        return Part(self.rm, self.inner.inverse(), self.lm)


@dataclass(frozen=True)
class CompositeCoi(Coi):
    left: Word
    right: Word
    parts: tuple

    def forward_hull(self, iv):
        return hull_union(self.right, [p.forward(iv) for p in self.parts])

    def backward_hull(self, iv):
        return hull_union(self.left, [p.backward(iv) for p in self.parts])

    def inverse(self):
        return CompositeCoi(self.right, self.left, tuple(p.inverse() for p in self.parts))

    def to_json(self):
        return {"kind": "composite", "parts": len(self.parts)}


SEARCH_LIMIT = 64


@dataclass(frozen=True, eq=False)
class TermCoi(Coi):
    """Union of per-term cois between two omega products: term m of the
    left word is carried by part(m) into term m of the right word."""

    left: Word
    right: Word
    part_fn: Callable[[int], Part]
    flipped: bool = False
    _memo: dict = field(default_factory=dict, repr=False)

    def part(self, m: int) -> Part:
        p = self._memo.get(m)
        if p is None:
            p = self.part_fn(m)
            if self.flipped:
                p = p.inverse()
            self._memo[m] = p
        return p

    def _hull(self, iv, forward):
        dst = self.right if forward else self.left
        tr = _term_range(iv)
        if tr is None:
            return EMPTY
        k0, k1 = tr
        run = lambda m: self.part(m).forward(iv) if forward else self.part(m).backward(iv)
        if k1 is not None:
            return hull_union(dst, [run(m) for m in range(k0, k1 + 1)])
        for m in range(k0, k0 + SEARCH_LIMIT):
            h = run(m)
            if h is not None and not is_void(dst, h):
                return Interval(h.lo, None)
        raise CoiError("no image found within the search limit")

    def forward_hull(self, iv):
        return self._hull(iv, True)

    def backward_hull(self, iv):
        return self._hull(iv, False)

    def inverse(self):
        return TermCoi(self.right, self.left, self.part_fn, not self.flipped)

    def __eq__(self, other):
        return isinstance(other, TermCoi) and self.part_fn is other.part_fn and self.flipped == other.flipped

    def __hash__(self):
        return hash((id(self.part_fn), self.flipped))

    def to_json(self):
        return {"kind": "omega-terms"}


@dataclass(frozen=True, eq=False)
class SiteCoi(Coi):
    """Union of per-block cois between two rational shuffles over the same
    sites: the block at s goes to the block at s."""

    left: Word
    right: Word
    part_fn: Callable[[Fraction], Part]
    flipped: bool = False
    _memo: dict = field(default_factory=dict, repr=False)

    def part(self, s) -> Part:
        p = self._memo.get(s)
        if p is None:
            p = self.part_fn(s)
            if self.flipped:
                p = p.inverse()
            self._memo[s] = p
        return p

    def _hull(self, iv, forward):
        src, dst = (self.left, self.right) if forward else (self.right, self.left)
        rule = src.rule
        run = lambda s: self.part(s).forward(iv) if forward else self.part(s).backward(iv)
        sites = _q_sites(rule, iv)
        if sites is not None:
            return hull_union(dst, [run(s) for s in sites])
        lo, lo_open, hi, hi_open = _site_range(iv)
        lo_cut = hi_cut = None
        if lo is not None:
            lo_cut = Above((lo,)) if lo_open else AtOrAbove((lo,))
            if not lo_open and rule.is_site(lo):
                h = run(lo)
                lo_cut = h.lo if h is not None else Above((lo,))
        if hi is not None:
            hi_cut = Below((hi,)) if hi_open else AtOrBelow((hi,))
            if not hi_open and rule.is_site(hi):
                h = run(hi)
                hi_cut = h.hi if h is not None else Below((hi,))
        return Interval(lo_cut, hi_cut)

    def forward_hull(self, iv):
        return self._hull(iv, True)

    def backward_hull(self, iv):
        return self._hull(iv, False)

    def inverse(self):
        return SiteCoi(self.right, self.left, self.part_fn, not self.flipped)

    def __eq__(self, other):
        return isinstance(other, SiteCoi) and self.part_fn is other.part_fn and self.flipped == other.flipped

    def __hash__(self):
        return hash((id(self.part_fn), self.flipped))

    def to_json(self):
        return {"kind": "rational-sites"}


# ---------------------------------------------------------------- triples

@dataclass(frozen=True)
class Triple:
    name: str
    left: Word
    right: Word
    coi: Coi
    info: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def to_json(self):
        return {"name": self.name, "coi": self.coi.to_json()}


@dataclass(frozen=True)
class Collection:
    triples: tuple = ()
    greg: Optional[Registry] = None
    kreg: Optional[Registry] = None

    def add(self, t: Triple) -> "Collection":
        if any(u.name == t.name for u in self.triples):
            raise CoiError(f"triple name {t.name!r} already used")
        return Collection(self.triples + (t,), self.greg, self.kreg)

    def get(self, name: str) -> Triple:
        for t in self.triples:
            if t.name == name:
                return t
        raise CoiError(f"no triple named {name!r}")

    def index(self, name: str) -> int:
        for i, t in enumerate(self.triples):
            if t.name == name:
                return i
        raise CoiError(f"no triple named {name!r}")

    def lefts(self) -> list:
        return [t.left for t in self.triples]

    def rights(self) -> list:
        return [t.right for t in self.triples]

    def inverted(self) -> "Collection":
        return Collection(tuple(coi_invert(t) for t in self.triples), self.kreg, self.greg)

    def fresh_name(self, stem: str) -> str:
        names = {t.name for t in self.triples}
        if stem not in names:
            return stem
        k = 1
        while f"{stem}{k}" in names:
            k += 1
        return f"{stem}{k}"


def varpropto_coi(t: Triple, iv: Interval, direction: str = "forward") -> Interval:
    if direction == "forward":
        return t.coi.forward_hull(iv)
    if direction == "backward":
        return t.coi.backward_hull(iv)
    raise CoiError(f"direction is forward or backward, not {direction!r}")


def _inv_name(name: str) -> str:
    return name[4:-1] if name.startswith("inv(") and name.endswith(")") else f"inv({name})"


def coi_invert(t: Triple) -> Triple:
    return Triple(_inv_name(t.name), t.right, t.left, t.coi.inverse(), t.info)


# ---------------------------------------------------------------- audit

@dataclass(frozen=True)
class Obligation:
    kind: str           # "left" or "right"
    x0: int
    x1: int
    i0: Interval
    i1: Interval
    sign: int
    lhs: object
    rhs: object
    exact: bool
    reflexive: bool = False

    def to_json(self, coll=None, verdict=None):
        name = (lambda i: coll.triples[i].name) if coll is not None else (lambda i: i)
        out = {"kind": self.kind, "x0": name(self.x0), "x1": name(self.x1),
               "i0": format_interval(self.i0), "i1": format_interval(self.i1),
               "sign": self.sign, "exact": self.exact, "reflexive": self.reflexive,
               "lhs": self.lhs.to_json(), "rhs": self.rhs.to_json()}
        if verdict is not None:
            out["verdict"] = verdict_name(verdict)
        return out


def _candidates(w: Word) -> list:
    """Pattern intervals tried for matches: the whole word and each of its
    infinite base pieces."""
    out = [FULL]
    for p in flatten(w):
        if isinstance(p.base, Lit) or is_finite(p.base, p.region):
            continue
        iv = piece_interval(p)
        if iv != FULL and iv not in out:
            out.append(iv)
    return out


def enumerate_obligations(coll: Collection, depth: int, budget: int = 32) -> list:
    out = []
    for kind in ("left", "right"):
        side = coll.lefts() if kind == "left" else coll.rights()
        other = coll.rights() if kind == "left" else coll.lefts()
        hull = (lambda t, iv: t.coi.forward_hull(iv)) if kind == "left" else (lambda t, iv: t.coi.backward_hull(iv))
        for x0, t0 in enumerate(coll.triples):
            w0 = side[x0]
            if is_finite(w0):
                continue
            out.append(Obligation(kind, x0, x0, FULL, FULL, 1, ref(other[x0], hull(t0, FULL), 1, t0.name),
                                  ref(other[x0], hull(t0, FULL), 1, t0.name), True, True))
            cands = _candidates(w0)
            for x1, t1 in enumerate(coll.triples):
                w1 = side[x1]
                if is_finite(w1):
                    continue
                for i0 in cands:
                    hits = find_occurrences(w0, w1, depth, i0)[:budget]
                    for f in hits:
                        if x0 == x1 and f.sign == 1 and interval_equiv(w1, f.interval, i0):
                            continue
                        lhs = ref(other[x0], hull(t0, i0), 1, t0.name)
                        rhs = ref(other[x1], hull(t1, f.interval), f.sign, t1.name)
                        out.append(Obligation(kind, x0, x1, i0, f.interval, f.sign, lhs, rhs, f.exact))
    return out


def discharge(ob: Obligation):
    return arch_eq(ob.lhs, ob.rhs)


@dataclass
class AuditReport:
    depth: int
    obligations: list
    verdicts: list

    @property
    def equal(self) -> int:
        return sum(isinstance(v, Equal) for v in self.verdicts)

    @property
    def unknown(self) -> int:
        return len(self.verdicts) - self.equal

    def unknowns(self) -> list:
        return [o for o, v in zip(self.obligations, self.verdicts) if not isinstance(v, Equal)]

    def to_json(self, coll=None):
        return {"depth": self.depth,
                "obligations": [o.to_json(coll, v) for o, v in zip(self.obligations, self.verdicts)],
                "equal": self.equal, "unknown": self.unknown}


def audit(coll: Collection, depth: int) -> AuditReport:
    obs = enumerate_obligations(coll, depth)
    return AuditReport(depth, obs, [discharge(o) for o in obs])


# ---------------------------------------------------------------- extension by representatives

def extend_representative(coll: Collection, W: Word, witness, name: Optional[str] = None) -> Triple:
    """A right word built from the images of the infinite factors of a
    decomposition of W over the collection's left words."""
    name = name or coll.fresh_name("rep")
    if not isinstance(witness, MemberWitness):
        raise CoiError("witness invalid: no decomposition")
    kreg = coll.kreg
    if region_is_empty(W):
        return Triple(name, W, EMPTY_WORD, EmptyCoi(W, EMPTY_WORD))
    blocks = []
    for f in witness.factors:
        if is_finite(W, f.interval):
            continue
        if f.kind != "sub" or f.found is None or f.source is None:
            raise CoiError("witness invalid: infinite factor is not a subword")
        if not f.found.exact:
            raise CoiError("infinite factor matched only up to depth; positions unknown")
        blocks.append(_rep_block(coll, W, f))
    if not blocks:
        h = fresh_letter(kreg, 0)
        U = Lit(h)
        return Triple(name, W, U, PointCoi(W, U, first_position(W), ()), {"letter": h.text()})
    items = []
    spots = []
    seps = []
    for j, (wp, hp, t, sign, hull) in enumerate(blocks):
        piece = Sub(t.right, hull) if hull != FULL else t.right
        if sign == -1:
            piece = Inv(piece)
        if items and not isinstance(items[-1], Lit):
            a, b = last_letter(items[-1]), first_letter(piece)
            if a is not None and b is not None and a[1].group == b[1].group:
                h = fresh_letter(kreg, a[1].group + 1)
                items.append(Lit(h))
                seps.append(h.text())
        spots.append(len(items))
        items.append(piece)
    U = items[0] if len(items) == 1 else Cat(tuple(items))
    parts = []
    for (wp, hp, t, sign, hull), idx in zip(blocks, spots):
        pre = () if len(items) == 1 else (idx,)
        lm = PieceMorph(W, tuple(wp), t.left, tuple(hp), sign == -1)
        rm = PrefixMorph(U, t.right, pre, sign == -1, hull)
        parts.append(Part(lm, t.coi, rm))
    return Triple(name, W, U, CompositeCoi(W, U, tuple(parts)), {"separators": seps})


def _rep_block(coll, W, f: Factor):
    t = coll.triples[f.source]
    sign = f.found.sign
    wp = canonical_pieces(W, f.interval)
    if sign == 1:
        hp = canonical_pieces(t.left, f.found.interval)
    else:
        hp = canonical_pieces(Inv(t.left), flip_interval(f.found.interval))
    if len(wp) != len(hp) or any(p.base != q.base or p.sign != q.sign for p, q in zip(wp, hp)):
        raise CoiError("witness invalid: factor does not line up with its source")
    hull = t.coi.forward_hull(f.found.interval)
    if is_void(t.right, hull):
        raise CoiError("factor has an empty image")
    return wp, hp, t, sign, hull


def raise_degree(coll: Collection, triple_name: str, N: int, name: Optional[str] = None) -> Triple:
    """Replace every maximal finite run of letters of degree <= N+2 in the
    right word by one letter of K_{N+1}; the coi keeps the points that
    survive."""
    t = coll.get(triple_name)
    name = name or coll.fresh_name(f"{triple_name}>{N}")
    h = fresh_letter(coll.kreg, N + 1)
    Uy = t.right
    if is_finite(Uy):
        U = Lit(h)
        src = first_position(t.left)
        coi = PointCoi(t.left, U, src, ()) if src is not None else EmptyCoi(t.left, U)
        return Triple(name, t.left, U, coi, {"letter": h.text()})
    vis = project(Uy, N + 2)
    if not vis:
        return Triple(name, t.left, Uy, t.coi, {"blocks": []})
    items, regions = [], []
    prev = None
    run_open = False
    for p, _ in vis:
        gap = Interval(None if prev is None else Above(prev), Below(p))
        if not region_is_empty(Uy, gap):
            regions.append((len(items), gap))
            items.append(Sub(Uy, gap))
            run_open = False
        if not run_open:
            items.append(Lit(h))
            run_open = True
        prev = p
    tail = Interval(Above(prev), None)
    if not region_is_empty(Uy, tail):
        regions.append((len(items), tail))
        items.append(Sub(Uy, tail))
    U = items[0] if len(items) == 1 else Cat(tuple(items))
    parts = tuple(Part(IdMorph(), t.coi, PrefixMorph(U, Uy, () if len(items) == 1 else (i,), False, r))
                  for i, r in regions)
    info = {"letter": h.text(), "blocks": [("low" if isinstance(x, Lit) else "high") for x in items]}
    return Triple(name, t.left, U, CompositeCoi(t.left, U, parts), info)


# ---------------------------------------------------------------- exponent avoidance

@dataclass(frozen=True)
class Avoidance:
    q: ExponentFn
    certificate: tuple      # (family index, sign, start, defeating label)
    depth: int


def avoid_exponents(family: list, lam: list, f0: Callable, anchors: list, f2: Callable, f3: Callable,
                    depth: int, budget: int = 100000) -> Avoidance:
    """Exponents q at the anchor labels such that no subword of a family
    word (or inverse) has the degree profile of `lam` and the letter
    f3(a) ** (f2(a) * q(a)) at every anchor a.

    Only positions of degree <= depth are compared; each embedding of the
    visible profile is defeated at the first anchor it meets."""
    visible = [x for x in lam if f0(x) <= depth]
    if not visible:
        return Avoidance(ExponentFn(), (), depth)
    profile = [f0(x) for x in visible]
    embs = []
    for xi, v in enumerate(family):
        for sign in (1, -1):
            fw = project(v if sign == 1 else Inv(v), depth)
            for s in enumerate_degree_embeddings(profile, fw):
                embs.append((xi, sign, s, fw))
                if len(embs) > budget:
                    raise CoiError("embedding enumeration exceeds the budget")
    pos = {x: i for i, x in enumerate(visible)}
    alive = list(range(len(embs)))
    q, cert = {}, []
    for a in anchors:
        if a not in pos or not alive:
            continue
        j = pos[a]
        base, sg = f3(a), f2(a)
        need = {embs[e][3][embs[e][2] + j][1] for e in alive}
        t = 1
        while base.power(sg * t) in need:
            t += 1
        q[a] = t
        for e in alive:
            if embs[e][3][embs[e][2] + j][1] != base.power(sg * t):
                cert.append((embs[e][0], embs[e][1], embs[e][2], a))
        alive = [e for e in alive if embs[e][3][embs[e][2] + j][1] == base.power(sg * t)]
    if alive:
        raise CoiError("some embedding avoids every anchor")
    return Avoidance(ExponentFn(tuple(sorted(q.items()))), tuple(cert), depth)


# ---------------------------------------------------------------- diagonal words

def cantor_pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def cantor_unpair(n: int) -> tuple:
    w = 0
    while (w + 1) * (w + 2) // 2 <= n:
        w += 1
    b = n - w * (w + 1) // 2
    return w - b, b


def z_of(n: int) -> int:
    """The part Z_m containing n, for the partition of the naturals into
    the infinite sets Z_m = {pair(m, b) : b >= 0}."""
    return cantor_unpair(n)[0]


def z_min(m: int) -> int:
    return m * (m + 1) // 2


def anchors_upto(limit: int) -> list:
    out, m = [], 0
    while z_min(m) <= limit:
        out.append(z_min(m))
        m += 1
    return out


@dataclass(frozen=True)
class Diagonal:
    word: Word
    exponents: dict
    certificate: tuple


def diagonal(family: list, depth: int, reg: Registry) -> Diagonal:
    """h_0^e_0 h_1^e_1 ... with e = 1 except at the anchors min Z_m, where
    the exponent avoids every letter of that degree visible in the family.

    Every window of depth+1 consecutive degrees up to 2*depth+1 holds an
    anchor, so no tail visible at depth `depth` occurs in the family."""
    over, cert = {}, []
    for a in anchors_upto(2 * depth + 2):
        h = reg.infinite_letter(a)
        if h is None:
            raise CoiError(f"group {a} has no element of infinite order")
        av = avoid_exponents(family, [a], lambda n: n, [a], lambda n: 1,
                             lambda n: reg.infinite_letter(n), a)
        e = av.q(a)
        if e != 1:
            over[a] = e
        cert.extend(av.certificate)
    word = OmegaCat(SeqRule((), PowerTail(reg, 1, 0, ExponentFn(tuple(sorted(over.items()))))))
    return Diagonal(word, over, tuple(cert))


def diagonal_word(family: list, depth: int, reg: Registry) -> Word:
    return diagonal(family, depth, reg).word


# ---------------------------------------------------------------- omega extension

def term_witness(coll: Collection, w: Word, depth: int):
    """Decomposition of one block over the left words; finite blocks need none."""
    if is_finite(w):
        return MemberWitness((Factor(FULL, "finite"),), depth, True)
    wit = fine_membership_bounded(w, coll.lefts(), depth)
    if not isinstance(wit, MemberWitness):
        raise CoiError("block has no decomposition over the collection")
    return wit


def _raised_block(coll: Collection, w: Word, wit, N: int, stem: str) -> Triple:
    rep = extend_representative(coll, w, wit, coll.fresh_name(stem))
    c2 = coll.add(rep)
    return raise_degree(c2, rep.name, N, stem + "'")


def extend_omega(coll: Collection, W: Word, depth: int, witness_fn=None, name: Optional[str] = None) -> Triple:
    """For W = W_0 W_1 ... build U = U'_0 k_0^r_0 U'_1 k_1^r_1 ... with
    d(U'_m) > m + 1 and the union of the block cois."""
    if not isinstance(W, OmegaCat):
        raise CoiError("omega extension needs an omega product")
    name = name or coll.fresh_name("omega")
    kreg = coll.kreg
    blocks: dict = {}
    rs: dict = {}
    log: list = []

    def block(m):
        b = blocks.get(m)
        if b is None:
            wm = W.rule.term(m)
            if region_is_empty(wm):
                raise CoiError(f"term {m} is empty")
            wit = witness_fn(m) if witness_fn else term_witness(coll, wm, depth)
            b = blocks[m] = _raised_block(coll, wm, wit, m + 1, f"{name}.{m}")
        return b

    def r(m):
        if m not in rs:
            k = kreg.infinite_letter(m)
            if k is None:
                raise CoiError(f"group {m} has no element of infinite order")
            e = 1
            cert = ()
            if z_min(z_of(m)) == m:
                fam = coll.rights() + [block(i).right for i in range(m)]
                av = avoid_exponents(fam, [m], lambda n: n, [m], lambda n: 1, kreg.infinite_letter, m)
                e, cert = av.q(m), av.certificate
            rs[m] = (k, e)
            log.append({"m": m, "separator": k.power(e).text(), "anchor": z_min(z_of(m)) == m,
                        "defeated": len(cert), "degree": d_word(block(m).right)})
        return rs[m]

    def term(m):
        k, e = r(m)
        return Cat((block(m).right, Lit(k.power(e))))

    tail = GenTail(f"{name}-terms", term, lambda N: N + 1, 0,
                   "reduced blocks of degree above m+1 separated by letters of degree m")
    U = OmegaCat(SeqRule((), tail))

    def part(m):
        b = block(m)
        return Part(PrefixMorph(W, b.left, (m,)), b.coi, PrefixMorph(U, b.right, (m, 0)))

    coi = TermCoi(W, U, part)
    info = {"blocks": blocks, "log": log, "exponent": r}
    return Triple(name, W, U, coi, info)


# ---------------------------------------------------------------- rational shuffle extension

def dyadic_intervals(level: int) -> list:
    """Open intervals of (0, 1) with dyadic ends, first appearing at `level`."""
    if level == 0:
        return [(Fraction(0), Fraction(1))]
    den = 1 << level
    pts = [Fraction(i, den) for i in range(den + 1)]
    return [(a, b) for i, a in enumerate(pts) for b in pts[i + 1:]
            if a.denominator == den or b.denominator == den]


class Schedule:
    """Fixed enumeration J_j of open dyadic intervals, the pairing bijection
    L = unpair, and the greedy assignment delta(k) = least unused block
    index with a site in J_{L_0(k)}."""

    def __init__(self, rule: QRule, budget: int = 20000):
        self.rule = rule
        self.budget = budget
        self._ivs: list = []
        self._level = 0
        self.delta: list = []       # delta[k] or None when J has no unused index
        self.where: dict = {}       # m -> (j, position within Z_j, k)
        self._zsize: dict = {}

    def interval(self, j: int):
        while len(self._ivs) <= j:
            self._ivs.extend(dyadic_intervals(self._level))
            self._level += 1
        return self._ivs[j]

    def _site_in(self, m: int, a, b):
        fib = self.rule.fibers
        if isinstance(fib, DyadicFibers):
            if m < fib.start:
                return None
            den = 1 << (m - fib.start + 1)
            lo = int(a * den) + 1
            hi = -int(-(b * den)) - 1
            num = lo if lo % 2 else lo + 1
            return Fraction(num, den) if num <= hi else None
        for s, _ in fib.fibers(m):
            if a < s < b:
                return s
        return None

    def _indices_in(self, a, b):
        top = self.rule.top
        m = self.rule.start
        while top is None or m <= top:
            if m not in self.where and self._site_in(m, a, b) is not None:
                yield m
            m += 1
            if m > self.rule.start + 2 * self._level + len(self.where) + 8:
                return

    def step(self):
        k = len(self.delta)
        if k >= self.budget:
            raise CoiError("schedule budget exhausted")
        j, _ = cantor_unpair(k)
        a, b = self.interval(j)
        m = next(self._indices_in(a, b), None)
        self.delta.append(m)
        if m is not None:
            pos = self._zsize.get(j, 0)
            self._zsize[j] = pos + 1
            self.where[m] = (j, pos, k)

    def locate(self, m: int) -> tuple:
        while m not in self.where:
            self.step()
        return self.where[m]

    def site_for(self, m: int):
        j, _, _ = self.locate(m)
        a, b = self.interval(j)
        return self._site_in(m, a, b)


def extend_qshuffle(coll: Collection, W: Word, depth: int, witness_fn=None, name: Optional[str] = None) -> Triple:
    """For a rational shuffle W with block W_m at the sites of index m,
    build U with block h_m^R(m) U'_m h_m^R(m) (inverted at sign -1 sites),
    d(U'_m) > m, and the union of the block cois."""
    if not isinstance(W, QShuffle):
        raise CoiError("rational extension needs a rational shuffle")
    rule = W.rule
    name = name or coll.fresh_name("qshuffle")
    kreg = coll.kreg
    for m0 in rule.indices(depth):
        for m1 in rule.indices(depth):
            if m0 < m1:
                a, b = rule.block(m0), rule.block(m1)
                if equiv_depth(a, b, depth) or equiv_depth(a, inverse(b), depth):
                    raise CoiError(f"duplicate blocks {m0} and {m1}")
    sched = Schedule(rule)
    blocks: dict = {}
    seps: dict = {}
    log: list = []

    def block(m):
        b = blocks.get(m)
        if b is None:
            wm = rule.block(m)
            if region_is_empty(wm):
                raise CoiError(f"block {m} is empty")
            wit = witness_fn(m) if witness_fn else term_witness(coll, wm, depth)
            b = blocks[m] = _raised_block(coll, wm, wit, m, f"{name}.{m}")
        return b

    def sep(m):
        if m not in seps:
            h = kreg.infinite_letter(m)
            if h is None:
                raise CoiError(f"group {m} has no element of infinite order")
            j, pos, k = sched.locate(m)
            fam = coll.rights() + [block(i).right for i in rule.indices(m - 1)]
            av = avoid_exponents(fam, [m], lambda n: n, [m], lambda n: 1, kreg.infinite_letter, m)
            seps[m] = (h, av.q(m))
            log.append({"m": m, "interval": j, "J": [str(x) for x in sched.interval(j)], "k": k,
                        "rank": pos, "site": str(sched.site_for(m)), "R": av.q(m),
                        "separator": h.power(av.q(m)).text(), "defeated": len(av.certificate)})
        return seps[m]

    urule = QRule(f"{name}-blocks", lambda m: block(m).right, rule.fibers, sep, rule.start, rule.top)
    U = QShuffle(urule)

    def part(s):
        m, sign = rule.fibers.locate(s)
        b = block(m)
        return Part(PrefixMorph(W, b.left, (s,), sign == -1), b.coi,
                    PrefixMorph(U, b.right, (s, 1), sign == -1))

    coi = SiteCoi(W, U, part)
    info = {"blocks": blocks, "log": log, "schedule": sched, "separator": sep}
    return Triple(name, W, U, coi, info)


def replay_schedule(triple: Triple, depth: int) -> list:
    """Force every block and separator of index <= depth and return the
    transcript rows in index order."""
    sep = triple.info.get("separator") or triple.info.get("exponent")
    rule = triple.right.rule
    if isinstance(triple.right, QShuffle):
        for m in rule.indices(depth):
            sep(m)
    else:
        for m in range(depth + 1):
            sep(m)
    return sorted(triple.info["log"], key=lambda row: row["m"])
