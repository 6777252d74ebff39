"""Reduction components and schemes on finite words, and reducedness verdicts.

Positions in this module are indices into a finite word (a sequence of
(path, letter) pairs).  A component is a same-group list of at least two
increasing indices; a scheme is a set of disjoint components such that
every index strictly inside a gap of a component is covered by another
component of the scheme lying inside that gap whose product is trivial.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .orders import Above, Below, Interval, format_path
from .words import (
    Cat,
    Empty,
    GenTail,
    Inv,
    OmegaCat,
    PowerTail,
    QShuffle,
    Sub,
    Word,
    d_word,
    first_letter,
    last_letter,
    project,
    region_is_empty,
    region_letters,
)


class SchemeError(ValueError):
    pass


@dataclass(frozen=True)
class Component:
    group: int
    positions: tuple


def pi(fw, comp: Component):
    """Product of the letters at the component's positions; None if trivial."""
    letters = [fw[i][1] for i in comp.positions]
    if any(l.group != comp.group for l in letters):
        raise SchemeError("component mixes groups")
    acc = letters[0]
    for l in letters[1:]:
        acc = l if acc is None else acc.mul(l)
    return acc


def _component_ok(fw, c: Component) -> bool:
    ps = c.positions
    if len(ps) < 2 or any(a >= b for a, b in zip(ps, ps[1:])):
        return False
    if ps[0] < 0 or ps[-1] >= len(fw):
        return False
    return all(fw[i][1].group == c.group for i in ps)


def validate_scheme(fw, scheme) -> bool:
    """Disjointness plus the gap condition, checked for every gap."""
    seen = set()
    for c in scheme:
        if not _component_ok(fw, c):
            return False
        if seen & set(c.positions):
            return False
        seen |= set(c.positions)
    owner = {i: c for c in scheme for i in c.positions}
    trivial = {c: pi(fw, c) is None for c in scheme}
    for c in scheme:
        for a, b in zip(c.positions, c.positions[1:]):
            for i in range(a + 1, b):
                c0 = owner.get(i)
                if c0 is None or not trivial[c0]:
                    return False
                if c0.positions[0] <= a or c0.positions[-1] >= b:
                    return False
    return True


def covers_trivially(fw, scheme) -> bool:
    covered = sorted(i for c in scheme for i in c.positions)
    return covered == list(range(len(fw))) and all(pi(fw, c) is None for c in scheme)


def find_trivializing_scheme(fw) -> Optional[frozenset]:
    """A scheme covering every position with trivial products, or None.

    Replays the stack-based free reduction: each stack entry collects the
    positions merged into it, and an entry that multiplies out to the
    identity becomes a component."""
    for _, l in fw:
        if l is None:
            raise SchemeError("identity letter in word")
    stack: list = []
    done = []
    for i, (_, l) in enumerate(fw):
        if stack and stack[-1][0].group == l.group:
            acc, ps = stack.pop()
            m = acc.mul(l)
            if m is None:
                done.append(Component(l.group, tuple(ps + [i])))
            else:
                stack.append((m, ps + [i]))
        else:
            stack.append((l, [i]))
    if stack:
        return None
    return frozenset(done)


def exhaustive_trivializing_scheme(fw, limit: int = 10) -> Optional[frozenset]:
    """Brute-force search over all partitions into same-group components."""
    n = len(fw)
    if n > limit:
        raise SchemeError(f"exhaustive search limited to length {limit}")
    if n == 0:
        return frozenset()
    blocks: list = []

    def rec(i):
        if i == n:
            if any(len(b) < 2 for b in blocks):
                return None
            scheme = frozenset(Component(fw[b[0]][1].group, tuple(b)) for b in blocks)
            if covers_trivially(fw, scheme) and validate_scheme(fw, scheme):
                return scheme
            return None
        g = fw[i][1].group
        # blocks that can no longer reach size 2 prune the branch
        if sum(1 for b in blocks if len(b) < 2) > n - i:
            return None
        for b in blocks:
            if fw[b[0]][1].group == g:
                b.append(i)
                r = rec(i + 1)
                if r is not None:
                    return r
                b.pop()
        blocks.append([i])
        r = rec(i + 1)
        if r is not None:
            return r
        blocks.pop()
        return None

    return rec(0)


def split_pairs(fw, scheme) -> frozenset:
    """Replace each component of even size whose letters pair off as
    inverses of their neighbours by two-element components; others stay."""
    out = set()
    for c in scheme:
        ps = c.positions
        if len(ps) % 2 == 0 and all(fw[ps[k]][1].inv() == fw[ps[len(ps) - 1 - k]][1] for k in range(len(ps) // 2)):
            for k in range(len(ps) // 2):
                out.add(Component(c.group, (ps[k], ps[len(ps) - 1 - k])))
        else:
            out.add(c)
    return frozenset(out)


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class CertifiedReduced:
    reason: str


@dataclass(frozen=True)
class NotReduced:
    witness: tuple      # adjacent (path, letter) pair of one group
    depth: int


@dataclass(frozen=True)
class UnknownToDepth:
    depth: int


def _adjacent_clash(w: Word, fw) -> Optional[tuple]:
    for (p, a), (q, b) in zip(fw, fw[1:]):
        if a.group == b.group and region_is_empty(w, Interval(Above(p), Below(q))):
            return ((p, a), (q, b))
    return None


def check_reduced_depth(w: Word, N: int):
    """Decide reducedness for finite words; certify structurally or look for
    a finite non-reduced window at depths 0..N for infinite ones.

    An innermost pair of consecutive positions of a component has an empty
    gap, so a finite non-reduced subword always shows two adjacent letters
    of one group."""
    letters = region_letters(w)
    if letters is not None:
        clash = _adjacent_clash(w, letters)
        if clash is not None:
            return NotReduced(clash, max(clash[0][1].group, clash[1][1].group))
        return CertifiedReduced("finite word, freely reduced")
    for n in range(N + 1):
        clash = _adjacent_clash(w, project(w, n))
        if clash is not None:
            return NotReduced(clash, n)
    reason = certify(w, N)
    return CertifiedReduced(reason) if reason else UnknownToDepth(N)


def certify(w: Word, N: int) -> Optional[str]:
    """A structural reason for w being reduced, or None."""
    letters = region_letters(w)
    if letters is not None:
        ok = all(a.group != b.group for (_, a), (_, b) in zip(letters, letters[1:]))
        return "finite word, freely reduced" if ok else None
    if isinstance(w, Sub):
        r = certify(w.inner, N)
        return r and "subword of a reduced word"
    if isinstance(w, Inv):
        r = certify(w.inner, N)
        return r and "inverse of a reduced word"
    if isinstance(w, Cat):
        return _certify_cat(list(w.parts), N)
    if isinstance(w, OmegaCat):
        return _certify_omega(w, N)
    if isinstance(w, QShuffle):
        return _certify_q(w, N)
    return None


def _certify_cat(parts: list, N: int) -> Optional[str]:
    """Reduced parts whose junction letters exist and differ in group."""
    parts = [p for p in parts if not isinstance(p, Empty) and not region_is_empty(p)]
    for p in parts:
        if certify(p, N) is None:
            return None
    for x, y in zip(parts, parts[1:]):
        a, b = last_letter(x), first_letter(y)
        if a is None or b is None or a[1].group == b[1].group:
            return None
    return "concatenation of reduced words with distinct junction groups"


def _certify_omega(w: OmegaCat, N: int) -> Optional[str]:
    """Every finite prefix of terms is reduced."""
    rule = w.rule
    tail = rule.tail
    if isinstance(tail, PowerTail):
        # the tail alone is a sequence of letters of strictly increasing degree
        head = list(rule.prefix) + [rule.term(len(rule.prefix))]
        if _certify_cat(head, N) is None:
            return None
        return "omega product of letters with strictly increasing degrees"
    if isinstance(tail, GenTail) and tail.certificate:
        # check the visible terms anyway; a clash here falsifies the certificate
        k = max(rule.escape(N), len(rule.prefix) + 2)
        if _certify_cat([rule.term(i) for i in range(k)], N) is None:
            return None
        return tail.certificate
    return None


def _certify_q(w: QShuffle, N: int) -> Optional[str]:
    """Blocks h**R core h**R with h of infinite order in G_m, core reduced of
    degree above m: any component would have to cancel a separator power
    against another separator of the same degree across higher letters."""
    rule = w.rule
    for m in rule.indices(N):
        s = rule.sep(m)
        if s is None:
            return None
        h, r = s
        if h.group != m or h.order() is not None or r < 1:
            return None
        core = rule.core(m)
        d = d_word(core)
        if d is None or d <= m:
            return None
        if certify(core, N) is None:
            return None
    return "separated blocks: separator of infinite order in the block's own degree, core of higher degree"


def scheme_json(fw, scheme) -> list:
    rows = [{"group": c.group, "positions": [format_path(fw[i][0]) for i in c.positions]} for c in scheme]
    return sorted(rows, key=lambda r: (r["positions"], r["group"]))
