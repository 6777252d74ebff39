"""Random word expressions and a closed-form projection oracle for them."""

from __future__ import annotations

from topword.groups import FiniteCyclic, Registry, Z
from topword.words import Cat, ExponentFn, Inv, Lit, OmegaCat, PowerTail, SeqRule

from oracles import spec_inv

REG = Registry.of({0: Z, 1: FiniteCyclic(3), 2: Z, 3: FiniteCyclic(4)}, Z)


def rand_letter(rng, reg=REG, top=5):
    g = rng.randint(0, top)
    spec = reg.spec(g)
    if isinstance(spec, FiniteCyclic):
        v = rng.randint(1, spec.modulus - 1)
    else:
        v = rng.choice([-2, -1, 1, 2])
    return reg.letter(g, v)


def rand_finite(rng, reg=REG, size=4):
    return Cat(tuple(Lit(rand_letter(rng, reg)) for _ in range(rng.randint(1, size))))


def rand_omega(rng, reg=REG):
    a, b = rng.randint(1, 2), rng.randint(0, 2)
    over = tuple((m, rng.randint(1, 3)) for m in sorted(rng.sample(range(6), rng.randint(0, 2))))
    exps = ExponentFn(over, rng.randint(0, 1), rng.randint(1, 2))
    pre = tuple(rand_finite(rng, reg, 2) for _ in range(rng.randint(0, 2)))
    # tails with an infinite-order base only
    while reg.infinite_letter(b) is None or any(reg.infinite_letter(a * m + b) is None for m in range(12)):
        b += 1
    return OmegaCat(SeqRule(pre, PowerTail(reg, a, b, exps)))


def rand_expr(rng, reg=REG, depth=3):
    r = rng.random()
    if depth == 0 or r < 0.25:
        return Lit(rand_letter(rng, reg))
    if r < 0.4:
        return rand_omega(rng, reg)
    if r < 0.55:
        return Inv(rand_expr(rng, reg, depth - 1))
    return Cat(tuple(rand_expr(rng, reg, depth - 1) for _ in range(rng.randint(2, 3))))


def explicit(w, N, reg=REG):
    """Letters of degree <= N as (group, value) pairs, straight from the
    definitions of each node."""
    if isinstance(w, Lit):
        return [(w.letter.group, w.letter.value)] if w.letter.group <= N else []
    if isinstance(w, Cat):
        return [x for p in w.parts for x in explicit(p, N, reg)]
    if isinstance(w, Inv):
        return [(g, spec_inv(reg.spec(g), v)) for g, v in reversed(explicit(w.inner, N, reg))]
    if isinstance(w, OmegaCat):
        out = [x for p in w.rule.prefix for x in explicit(p, N, reg)]
        tail = w.rule.tail
        m = 0
        while tail.a * m + tail.b <= N:
            out.append((tail.a * m + tail.b, tail.exps(m)))
            m += 1
        return out
    raise TypeError(w)
