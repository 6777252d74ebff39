"""Concrete groups G_n and their arithmetic.

Three kinds of group are representable: the integers, the cyclic groups
Z/k and binary free products of representable groups.  Elements are plain
hashable values:

    InfiniteCyclic     int exponent
    FiniteCyclic(k)    residue in [0, k)
    FreeProduct(A, B)  tuple of (side, element) pairs, side in {"L", "R"},
                       alternating sides, no identity entries

    >>> fp = FreeProduct(FiniteCyclic(2), FiniteCyclic(2))
    >>> g_mul(fp, (("L", 1),), (("R", 1),))
    (('L', 1), ('R', 1))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Any, Optional


class GroupError(ValueError):
    pass


class GroupSpec:
    __slots__ = ()


@dataclass(frozen=True)
class InfiniteCyclic(GroupSpec):
    def __str__(self):
        return "Z"


@dataclass(frozen=True)
class FiniteCyclic(GroupSpec):
    modulus: int

    def __post_init__(self):
        if not isinstance(self.modulus, int) or self.modulus < 2:
            raise GroupError(f"cyclic modulus must be >= 2, got {self.modulus!r}")

    def __str__(self):
        return f"Z/{self.modulus}"


@dataclass(frozen=True)
class FreeProduct(GroupSpec):
    left: GroupSpec
    right: GroupSpec

    def __post_init__(self):
        for s in (self.left, self.right):
            if not isinstance(s, GroupSpec):
                raise GroupError(f"free product factor is not a group: {s!r}")

    def __str__(self):
        return f"({self.left} * {self.right})"


SIDES = ("L", "R")


def _factor(spec: FreeProduct, side: str) -> GroupSpec:
    return spec.left if side == "L" else spec.right


def g_validate(spec: GroupSpec, a: Any) -> None:
    """Raise GroupError unless `a` is a valid normal-form element of `spec`."""
    if isinstance(spec, InfiniteCyclic):
        if not isinstance(a, int) or isinstance(a, bool):
            raise GroupError(f"expected integer exponent, got {a!r}")
    elif isinstance(spec, FiniteCyclic):
        if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < spec.modulus:
            raise GroupError(f"expected residue mod {spec.modulus}, got {a!r}")
    elif isinstance(spec, FreeProduct):
        if not isinstance(a, tuple):
            raise GroupError(f"expected free product word, got {a!r}")
        prev = None
        for entry in a:
            if not (isinstance(entry, tuple) and len(entry) == 2 and entry[0] in SIDES):
                raise GroupError(f"bad free product entry {entry!r}")
            side, x = entry
            if side == prev:
                raise GroupError(f"free product word does not alternate: {a!r}")
            sub = _factor(spec, side)
            g_validate(sub, x)
            if g_is_identity(sub, x):
                raise GroupError(f"identity entry in free product word: {a!r}")
            prev = side
    else:
        raise GroupError(f"unknown group spec {spec!r}")


def g_identity(spec: GroupSpec) -> Any:
    if isinstance(spec, FreeProduct):
        return ()
    return 0


def g_is_identity(spec: GroupSpec, a: Any) -> bool:
    if isinstance(spec, FreeProduct):
        return a == ()
    return a == 0


def g_mul(spec: GroupSpec, a: Any, b: Any) -> Any:
    if isinstance(spec, InfiniteCyclic):
        return a + b
    if isinstance(spec, FiniteCyclic):
        return (a + b) % spec.modulus
    if isinstance(spec, FreeProduct):
        out = list(a)
        for side, x in b:
            if out and out[-1][0] == side:
                y = g_mul(_factor(spec, side), out[-1][1], x)
                out.pop()
                if not g_is_identity(_factor(spec, side), y):
                    out.append((side, y))
            else:
                out.append((side, x))
        return tuple(out)
    raise GroupError(f"unknown group spec {spec!r}")


def g_inv(spec: GroupSpec, a: Any) -> Any:
    if isinstance(spec, InfiniteCyclic):
        return -a
    if isinstance(spec, FiniteCyclic):
        return (-a) % spec.modulus
    if isinstance(spec, FreeProduct):
        return tuple((side, g_inv(_factor(spec, side), x)) for side, x in reversed(a))
    raise GroupError(f"unknown group spec {spec!r}")


def g_pow(spec: GroupSpec, a: Any, e: int) -> Any:
    if isinstance(spec, InfiniteCyclic):
        return a * e
    if isinstance(spec, FiniteCyclic):
        return (a * e) % spec.modulus
    if e < 0:
        a, e = g_inv(spec, a), -e
    out = g_identity(spec)
    base = a
    while e:
        if e & 1:
            out = g_mul(spec, out, base)
        base = g_mul(spec, base, base)
        e >>= 1
    return out


def g_order(spec: GroupSpec, a: Any) -> Optional[int]:
    """Order of `a`, or None when it is infinite."""
    if isinstance(spec, InfiniteCyclic):
        return 1 if a == 0 else None
    if isinstance(spec, FiniteCyclic):
        return spec.modulus // gcd(spec.modulus, a)
    if isinstance(spec, FreeProduct):
        # conjugate until cyclically reduced; a cyclically reduced word of
        # length >= 2 has infinite order
        while len(a) >= 2 and a[0][0] == a[-1][0]:
            a = g_mul(spec, (a[-1],), a[:-1])
        if not a:
            return 1
        if len(a) == 1:
            side, x = a[0]
            return g_order(_factor(spec, side), x)
        return None
    raise GroupError(f"unknown group spec {spec!r}")


def g_has_involution(spec: GroupSpec) -> bool:
    if isinstance(spec, InfiniteCyclic):
        return False
    if isinstance(spec, FiniteCyclic):
        return spec.modulus % 2 == 0
    if isinstance(spec, FreeProduct):
        # torsion in a free product is conjugate into a factor
        return g_has_involution(spec.left) or g_has_involution(spec.right)
    raise GroupError(f"unknown group spec {spec!r}")


def g_some_nontrivial(spec: GroupSpec) -> Any:
    if isinstance(spec, FreeProduct):
        return (("L", g_some_nontrivial(spec.left)),)
    return 1


def g_infinite_order_element(spec: GroupSpec) -> Optional[Any]:
    if isinstance(spec, InfiniteCyclic):
        return 1
    if isinstance(spec, FiniteCyclic):
        return None
    if isinstance(spec, FreeProduct):
        # h h' with h, h' nontrivial in distinct factors
        return (("L", g_some_nontrivial(spec.left)), ("R", g_some_nontrivial(spec.right)))
    raise GroupError(f"unknown group spec {spec!r}")


def g_log(spec: GroupSpec, base: Any, target: Any) -> Optional[int]:
    """The exponent e with base**e == target, when `base` has infinite order."""
    if isinstance(spec, InfiniteCyclic):
        if base == 0 or target % base:
            return None
        return target // base
    if isinstance(spec, FiniteCyclic):
        return None
    if len(base) == 1:
        if len(target) != 1 or target[0][0] != base[0][0]:
            return None
        return g_log(_factor(spec, base[0][0]), base[0][1], target[0][1])
    # powers of a longer infinite-order element grow at least linearly in length
    bound = len(target) + 2
    for e in range(-bound, bound + 1):
        if g_pow(spec, base, e) == target:
            return e
    return None


def g_involution(spec: GroupSpec) -> Optional[Any]:
    if isinstance(spec, InfiniteCyclic):
        return None
    if isinstance(spec, FiniteCyclic):
        return spec.modulus // 2 if spec.modulus % 2 == 0 else None
    if isinstance(spec, FreeProduct):
        x = g_involution(spec.left)
        if x is not None:
            return (("L", x),)
        x = g_involution(spec.right)
        if x is not None:
            return (("R", x),)
        return None
    raise GroupError(f"unknown group spec {spec!r}")


def g_in_subgroup(spec: GroupSpec, target: Any, gens: list, max_len: int = 4) -> bool:
    """Is `target` a product of elements of `gens` and their inverses?

    Exact for the cyclic kinds; for free products a breadth-first search
    over products of at most `max_len` generators.
    """
    if g_is_identity(spec, target):
        return True
    if isinstance(spec, InfiniteCyclic):
        d = 0
        for x in gens:
            d = gcd(d, x)
        return d != 0 and target % d == 0
    if isinstance(spec, FiniteCyclic):
        d = spec.modulus
        for x in gens:
            d = gcd(d, x)
        return target % d == 0
    pool = set(gens) | {g_inv(spec, x) for x in gens}
    frontier = {g_identity(spec)}
    seen = set(frontier)
    for _ in range(max_len):
        nxt = set()
        for a in frontier:
            for x in pool:
                y = g_mul(spec, a, x)
                if y == target:
                    return True
                if y not in seen:
                    seen.add(y)
                    nxt.add(y)
        frontier = nxt
    return False


def g_format(spec: GroupSpec, a: Any) -> str:
    if isinstance(spec, FreeProduct):
        if not a:
            return "1"
        return "".join(f"({side},{g_format(_factor(spec, side), x)})" for side, x in a)
    return str(a)


@dataclass(frozen=True)
class Letter:
    """A non-identity element of G_group; carries its group so it can multiply."""

    group: int
    value: Any
    spec: GroupSpec = field(default_factory=InfiniteCyclic, repr=False)

    def __repr__(self):
        return f"Letter({self.group}, {self.value!r})"

    def inv(self) -> "Letter":
        return Letter(self.group, g_inv(self.spec, self.value), self.spec)

    def mul(self, other: "Letter") -> Optional["Letter"]:
        """Product with a same-group letter; None when it is the identity."""
        if other.group != self.group:
            raise GroupError("letters from different groups")
        v = g_mul(self.spec, self.value, other.value)
        return None if g_is_identity(self.spec, v) else Letter(self.group, v, self.spec)

    def power(self, e: int) -> Optional["Letter"]:
        v = g_pow(self.spec, self.value, e)
        return None if g_is_identity(self.spec, v) else Letter(self.group, v, self.spec)

    def log(self, other: "Letter") -> Optional[int]:
        """The e with self**e == other, when self has infinite order."""
        if other.group != self.group:
            return None
        return g_log(self.spec, self.value, other.value)

    def order(self) -> Optional[int]:
        return g_order(self.spec, self.value)

    def text(self) -> str:
        return g_format(self.spec, self.value)


@dataclass(frozen=True)
class Registry:
    """Group G_n for every n: a finite table plus one spec for the rest."""

    table: tuple = ()
    tail: GroupSpec = field(default_factory=InfiniteCyclic)

    def __post_init__(self):
        seen = set()
        for n, spec in self.table:
            if n in seen:
                raise GroupError(f"group index {n} registered twice")
            if not isinstance(spec, GroupSpec):
                raise GroupError(f"not a group spec: {spec!r}")
            seen.add(n)

    @classmethod
    def of(cls, mapping=None, tail=None):
        mapping = mapping or {}
        return cls(tuple(sorted(mapping.items())), tail if tail is not None else InfiniteCyclic())

    def spec(self, n: int) -> GroupSpec:
        for k, s in self.table:
            if k == n:
                return s
        return self.tail

    def max_listed(self) -> int:
        return max((n for n, _ in self.table), default=-1)

    def letter(self, n: int, value: Any) -> Letter:
        spec = self.spec(n)
        g_validate(spec, value)
        if g_is_identity(spec, value):
            raise GroupError(f"identity is not a letter (group {n})")
        return Letter(n, value, spec)

    def infinite_letter(self, n: int) -> Optional[Letter]:
        spec = self.spec(n)
        v = g_infinite_order_element(spec)
        return None if v is None else Letter(n, v, spec)

    def involution_letter(self, n: int) -> Optional[Letter]:
        spec = self.spec(n)
        v = g_involution(spec)
        return None if v is None else Letter(n, v, spec)

    def some_letter(self, n: int) -> Letter:
        spec = self.spec(n)
        return Letter(n, g_some_nontrivial(spec), spec)

    def has_involution_through(self, n: int) -> bool:
        """Does any G_k with k <= max(n, listed indices) have an involution?"""
        top = max(n, self.max_listed())
        return any(g_has_involution(self.spec(k)) for k in range(top + 1)) or g_has_involution(self.tail)

Z = InfiniteCyclic()
