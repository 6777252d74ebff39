"""Named example words, group relabelling transforms and a bounded
extension driver.

The involution word W is the rational shuffle with the letter g_m at every
site odd/2**(m+1) of (0, 1).  Its projection to depth N is the ruler word
of length 2**(N+1) - 1 whose i-th letter (1-based) is g_{N - v(i)}, v the
2-adic valuation.  W_k is the same shuffle started at degree k, so
W_k ~ W_{k+1} g_k W_{k+1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .coi import (
    Collection,
    Triple,
    audit,
    diagonal,
    extend_omega,
    extend_qshuffle,
    extend_representative,
    replay_schedule,
)
from .groups import FiniteCyclic, FreeProduct, Letter, Registry
from .words import (
    Cat,
    DyadicFibers,
    Empty,
    Factor,
    GenTail,
    Inv,
    Lit,
    MemberWitness,
    OmegaCat,
    PowerTail,
    QRule,
    QShuffle,
    SeqRule,
    Sub,
    Word,
    WordError,
    fine_membership_bounded,
    is_finite,
)
from .orders import FULL


class GalleryError(ValueError):
    pass


# ---------------------------------------------------------------- the involution word

@dataclass(frozen=True)
class NastyParams:
    reg: Registry = field(default_factory=lambda: Registry.of({}, FiniteCyclic(2)))
    depth: int = 8


@dataclass
class Nasty:
    word: Word
    params: NastyParams
    family: dict = field(default_factory=dict)
    _nonsym: Optional[Word] = None

    def W(self, k: int) -> Word:
        """The shuffle of g_k, g_{k+1}, ... ; W(0) is the word itself."""
        w = self.family.get(k)
        if w is None:
            w = self.family[k] = _ruler_shuffle(self.params.reg, k)
        return w

    def g(self, n: int) -> Letter:
        return _involution(self.params.reg, n)

    def nonsymmetric(self) -> Word:
        """g_0 W_3 g_2 W_5 g_4 W_7 ..."""
        if self._nonsym is None:
            tail = GenTail("g0W3g2W5", lambda m: Cat((Lit(self.g(2 * m)), self.W(2 * m + 3))),
                           lambda N: N // 2 + 1)
            self._nonsym = OmegaCat(SeqRule((), tail))
        return self._nonsym


def _involution(reg: Registry, n: int) -> Letter:
    g = reg.involution_letter(n)
    if g is None:
        raise GalleryError(f"group {n} has no involution")
    return g


def _ruler_shuffle(reg: Registry, k: int) -> QShuffle:
    return QShuffle(QRule(f"W{k}", lambda m: Lit(_involution(reg, m)), DyadicFibers(k), start=k))


def nastyword(params: NastyParams = NastyParams()) -> Nasty:
    for n in range(params.depth + 1):
        if params.reg.involution_letter(n) is None:
            raise GalleryError(f"group {n} has no involution")
    out = Nasty(None, params)
    out.word = out.W(0)
    return out


def ruler_degrees(N: int, k: int = 0) -> list:
    """Closed form: degrees of the letters of p_N(W_k)."""
    if N < k:
        return []
    n = N - k
    return [N - ((i & -i).bit_length() - 1) for i in range(1, 1 << (n + 1))]


def ruler_recursive(N: int, k: int = 0) -> list:
    """Degrees of p_N(W_k) from W_k = W_{k+1} g_k W_{k+1}."""
    if k > N:
        return []
    inner = ruler_recursive(N, k + 1)
    return inner + [k] + inner


# ---------------------------------------------------------------- relabelling

def _relabel(w: Word, letter_map, tail_map, q_map, memo: dict) -> Word:
    key = id(w)
    if key in memo:
        return memo[key][1]
    if isinstance(w, Empty):
        out = w
    elif isinstance(w, Lit):
        out = Lit(letter_map(w.letter))
    elif isinstance(w, Cat):
        out = Cat(tuple(_relabel(p, letter_map, tail_map, q_map, memo) for p in w.parts))
    elif isinstance(w, Inv):
        out = Inv(_relabel(w.inner, letter_map, tail_map, q_map, memo))
    elif isinstance(w, Sub):
        out = Sub(_relabel(w.inner, letter_map, tail_map, q_map, memo), w.iv)
    elif isinstance(w, OmegaCat):
        rule = w.rule
        pre = tuple(_relabel(p, letter_map, tail_map, q_map, memo) for p in rule.prefix)
        sub = lambda v: _relabel(v, letter_map, tail_map, q_map, {})
        out = OmegaCat(SeqRule(pre, tail_map(rule.tail, sub)))
    elif isinstance(w, QShuffle):
        out = QShuffle(q_map(w.rule, lambda v: _relabel(v, letter_map, tail_map, q_map, {})))
    else:
        raise WordError(f"unknown word node {w!r}")
    memo[key] = (w, out)
    return out


def _gen_tail(tail, sub, escape, certificate: str = "") -> GenTail:
    name = getattr(tail, "name", "power")
    return GenTail(f"{name}'", lambda m: sub(tail.term(m)), escape, 0, certificate)


def shift_registry(reg: Registry, k: int) -> Registry:
    if k < 0:
        raise GalleryError("shift must be non-negative")
    return Registry(tuple((n + k, s) for n, s in reg.table), reg.tail)


def shift_word(w: Word, k: int, reg: Registry) -> tuple:
    """Every letter of G_n moved to G_{n+k}; returns (word, registry)."""
    if k == 0:
        return w, reg
    new = shift_registry(reg, k)
    move = lambda l: new.letter(l.group + k, l.value)

    def tail_map(tail, sub):
        if isinstance(tail, PowerTail):
            return PowerTail(new, tail.a, tail.b + k, tail.exps)
        cert = getattr(tail, "certificate", "")
        return _gen_tail(tail, sub, lambda N: tail.escape(N - k) if N >= k else 0,
                         cert and "relabelled: " + cert)

    def q_map(rule, sub):
        def sep(m):
            s = rule.sep(m)
            return None if s is None else (move(s[0]), s[1])
        return QRule(f"{rule.name}+{k}", lambda m: sub(rule.core(m)), rule.fibers, sep, rule.start, rule.top)

    return _relabel(w, move, tail_map, q_map, {}), new


def _check_bijection(table: dict) -> int:
    keys, vals = set(table), set(table.values())
    if keys != vals:
        raise GalleryError("relabelling collides: the table is not a bijection of its support")
    if any(n < 0 for n in keys):
        raise GalleryError("group indices are natural numbers")
    return max(keys, default=-1)


def reindex_registry(reg: Registry, table: dict) -> Registry:
    _check_bijection(table)
    top = max(max(table, default=-1), reg.max_listed())
    return Registry(tuple((table.get(n, n), reg.spec(n)) for n in range(top + 1)), reg.tail)


def reindex_word(w: Word, table: dict, reg: Registry) -> tuple:
    """Letters of G_n moved to G_{f(n)}, f the finite-support bijection
    `table` (identity elsewhere); returns (word, registry)."""
    M = _check_bijection(table)
    new = reindex_registry(reg, table)
    move = lambda l: new.letter(table.get(l.group, l.group), l.value)

    def tail_map(tail, sub):
        cert = "relabelled letters of distinct degrees" if isinstance(tail, PowerTail) else ""
        return _gen_tail(tail, sub, lambda N: tail.escape(max(N, M)), cert)

    def q_map(rule, sub):
        if not table or all(k == v for k, v in table.items()):
            return rule
        raise GalleryError("relabelling a rational shuffle is supported only for shifts")

    return _relabel(w, move, tail_map, q_map, {}), new


def pair_registry(reg: Registry) -> Registry:
    top = reg.max_listed()
    table = tuple((n, FreeProduct(reg.spec(2 * n), reg.spec(2 * n + 1))) for n in range(top // 2 + 1)) if top >= 0 else ()
    return Registry(table, FreeProduct(reg.tail, reg.tail))


def pair_word(w: Word, reg: Registry) -> tuple:
    """Letters of G_{2n} and G_{2n+1} become letters of G_{2n} * G_{2n+1}
    in slot n; returns (word, registry)."""
    new = pair_registry(reg)
    move = lambda l: new.letter(l.group // 2, (("L" if l.group % 2 == 0 else "R", l.value),))

    def tail_map(tail, sub):
        return _gen_tail(tail, sub, lambda N: tail.escape(2 * N + 1))

    def q_map(rule, sub):
        raise GalleryError("pairing a rational shuffle is not supported")

    return _relabel(w, move, tail_map, q_map, {}), new


def unpair_word(w: Word, reg: Registry) -> Word:
    """Inverse of pair_word for words whose letters are single syllables;
    `reg` is the unpaired registry."""
    def move(l):
        if len(l.value) != 1:
            raise GalleryError(f"letter {l.text()} mixes both factors")
        side, v = l.value[0]
        return reg.letter(2 * l.group + (side == "R"), v)

    def tail_map(tail, sub):
        return _gen_tail(tail, sub, lambda N: tail.escape(N // 2))

    def q_map(rule, sub):
        raise GalleryError("pairing a rational shuffle is not supported")

    return _relabel(w, move, tail_map, q_map, {})


# ---------------------------------------------------------------- bounded driver

@dataclass
class Scenario:
    """Seed words or triples, then `steps` alternating extension steps.

    Step i extends on the left when i is even, on the right when odd.  The
    word for a step comes from `lefts` / `rights` in order, and is the
    diagonal word of the current family once the list runs out."""

    greg: Registry
    kreg: Registry
    seed: list = field(default_factory=list)
    steps: int = 0
    depth: int = 4
    audit_depth: Optional[int] = None
    lefts: list = field(default_factory=list)
    rights: list = field(default_factory=list)


@dataclass
class DriveResult:
    collection: Collection
    transcript: list
    reports: list


def _shape(w: Word) -> str:
    if is_finite(w):
        return "finite"
    if isinstance(w, OmegaCat):
        return "omega"
    if isinstance(w, QShuffle):
        return "qshuffle"
    return "other"


def _extend(coll: Collection, W: Word, depth: int, name: str):
    """One extension of coll by W: a representative when W decomposes over
    the left words, else by the shape of W."""
    if is_finite(W):
        wit = MemberWitness((Factor(FULL, "finite"),), depth, True)
        t = extend_representative(coll, W, wit, name)
        return t, "representative", {"factors": 1}
    wit = fine_membership_bounded(W, coll.lefts(), depth) if coll.triples else None
    if isinstance(wit, MemberWitness):
        t = extend_representative(coll, W, wit, name)
        return t, "representative", {"factors": len(wit.factors)}
    shape = _shape(W)
    if shape == "omega":
        t = extend_omega(coll, W, depth, name=name)
        return t, "omega", {"separators": replay_schedule(t, depth)}
    if shape == "qshuffle":
        t = extend_qshuffle(coll, W, depth, name=name)
        return t, "qshuffle", {"separators": replay_schedule(t, depth)}
    raise GalleryError(f"no extension applies to a word of shape {shape}")


def _flip(t: Triple, name: str) -> Triple:
    return Triple(name, t.right, t.left, t.coi.inverse(), t.info)


def drive_extension(sc: Scenario) -> DriveResult:
    coll = Collection((), sc.greg, sc.kreg)
    transcript, reports = [], []
    adepth = sc.depth if sc.audit_depth is None else sc.audit_depth
    for i, s in enumerate(sc.seed):
        if isinstance(s, Triple):
            coll = coll.add(s)
            transcript.append({"seed": i, "name": s.name, "method": "given"})
            continue
        t, method, choices = _extend(coll, s, sc.depth, coll.fresh_name(f"seed{i}"))
        coll = coll.add(t)
        transcript.append({"seed": i, "name": t.name, "method": method, "choices": choices})
    lefts, rights = list(sc.lefts), list(sc.rights)
    for step in range(sc.steps):
        side = "left" if step % 2 == 0 else "right"
        pending = lefts if side == "left" else rights
        work = coll if side == "left" else coll.inverted()
        row = {"step": step, "side": side}
        if pending:
            W = pending.pop(0)
            row["word"] = "scenario"
        else:
            reg = work.greg
            d = diagonal(work.lefts(), sc.depth, reg)
            W = d.word
            row["word"] = "diagonal"
            row["diagonal_exponents"] = {str(k): v for k, v in sorted(d.exponents.items())}
            row["diagonal_defeated"] = len(d.certificate)
        name = coll.fresh_name(f"step{step}")
        t, method, choices = _extend(work, W, sc.depth, name)
        if side == "right":
            t = _flip(t, name)
        coll = coll.add(t)
        rep = audit(coll, adepth)
        reports.append(rep)
        row.update({"name": name, "shape": _shape(W), "method": method, "choices": choices,
                    "audit": {"depth": adepth, "equal": rep.equal, "unknown": rep.unknown,
                              "obligations": len(rep.obligations)}})
        transcript.append(row)
    if lefts or rights:
        raise GalleryError(f"budget exhausted with {len(lefts) + len(rights)} scenario words left")
    return DriveResult(coll, transcript, reports)
