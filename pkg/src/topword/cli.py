"""Command line front end: an s-expression script language and JSON output.

A script is a sequence of top-level forms::

    (registry (0 Z) (1 (zmod 3)) (tail Z))
    (defgroup F (free Z (zmod 2)))
    (defword w (cat (lit 0 1) (lit 1 1)))
    (triple t (left w) (right w) (coi identity))
    (defcoll c t)
    (scenario (steps 2) (depth 4) (seed w))
    (assert-equiv w w 5)

Every command prints JSON with sorted keys.  Exit status is 0 on success,
1 when a verdict fails and 2 on any error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .coi import (
    ChartCoi,
    CoiError,
    Collection,
    Segment,
    Triple,
    audit,
    diagonal,
    identity_coi,
)
from .gallery import GalleryError, NastyParams, Scenario, drive_extension, nastyword, ruler_degrees
from .groups import FiniteCyclic, FreeProduct, GroupError, GroupSpec, InfiniteCyclic, Registry
from .orders import (
    Above,
    All,
    AtOrAbove,
    AtOrBelow,
    Below,
    CofiniteExcept,
    DenseRule,
    FiniteOnly,
    Interval,
    OrderError,
    PerPart,
    ResidueClass,
    format_path,
    parse_path,
)
from .schemes import (
    CertifiedReduced,
    NotReduced,
    SchemeError,
    check_reduced_depth,
    find_trivializing_scheme,
    scheme_json,
)
from .words import (
    EMPTY_WORD,
    Cat,
    DyadicFibers,
    ExponentFn,
    Inv,
    Lit,
    MemberWitness,
    OmegaCat,
    PowerTail,
    QRule,
    QShuffle,
    SeqRule,
    Sub,
    TableFibers,
    Word,
    WordError,
    enumerate_degree_embeddings,
    equiv_depth,
    fine_membership_bounded,
    free_reduce,
    fw_json,
    project,
    reduced_mul,
    tag,
)

DEFAULT_DEPTH = 6


class ScriptError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg, self.line, self.col = msg, line, col


# ---------------------------------------------------------------- reader

@dataclass(frozen=True)
class Atom:
    text: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


def read(text: str) -> list:
    """All top-level s-expressions of `text`; ';' starts a comment."""
    stack: list = [[]]
    opens: list = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
        elif c.isspace():
            i, col = i + 1, col + 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            stack.append([])
            opens.append((line, col))
            i, col = i + 1, col + 1
        elif c == ")":
            if not opens:
                raise ScriptError("unexpected ')'", line, col)
            items = stack.pop()
            l0, c0 = opens.pop()
            stack[-1].append(SList(tuple(items), l0, c0))
            i, col = i + 1, col + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            stack[-1].append(Atom(text[i:j], line, col))
            col += j - i
            i = j
    if opens:
        l0, c0 = opens[-1]
        raise ScriptError("unbalanced '(': missing ')'", l0, c0)
    return stack[0]


def show(x) -> str:
    if isinstance(x, Atom):
        return x.text
    return "(" + " ".join(show(y) for y in x.items) + ")"


def _err(node, msg: str) -> ScriptError:
    return ScriptError(msg, node.line, node.col)


def _head(node) -> Optional[str]:
    if isinstance(node, SList) and node.items and isinstance(node.items[0], Atom):
        return node.items[0].text
    return None


def _int(node) -> int:
    if isinstance(node, Atom):
        try:
            return int(node.text)
        except ValueError:
            pass
    raise _err(node, f"expected an integer, got {show(node)}")


def _sym(node) -> str:
    if isinstance(node, Atom) and not node.text.lstrip("-").isdigit():
        return node.text
    raise _err(node, f"expected a name, got {show(node)}")


def _arity(node: SList, lo: int, hi: Optional[int] = None):
    k = len(node.items) - 1
    if k < lo or (hi is not None and k > hi):
        want = str(lo) if hi == lo else f"{lo}..{'' if hi is None else hi}"
        raise _err(node, f"{_head(node)}: expected {want} arguments, got {k}")


# ---------------------------------------------------------------- evaluator

@dataclass
class Script:
    statements: list = field(default_factory=list)
    reg: Registry = field(default_factory=Registry.of)
    groups: dict = field(default_factory=dict)
    words: dict = field(default_factory=dict)
    triples: dict = field(default_factory=dict)
    colls: dict = field(default_factory=dict)
    scenario: Optional[Scenario] = None
    asserts: list = field(default_factory=list)
    _reg_set: bool = False

    def word(self, name: str) -> Word:
        if name not in self.words:
            raise ScriptError(f"undefined word {name!r}")
        return self.words[name]

    def collection(self, name: Optional[str] = None) -> Collection:
        if name and name not in self.colls:
            raise ScriptError(f"undefined collection {name!r}")
        names = self.colls[name] if name else list(self.triples)
        return Collection(tuple(self.triples[t] for t in names), self.reg, self.reg)


def parse(text: str) -> Script:
    sc = Script()
    for node in read(text):
        _statement(sc, node)
        sc.statements.append(node)
    return sc


def print_script(sc: Script) -> str:
    return "".join(show(s) + "\n" for s in sc.statements)


def _statement(sc: Script, node):
    h = _head(node)
    try:
        if h == "registry":
            if sc._reg_set:
                raise _err(node, "a script has a single registry")
            if sc.words or sc.triples:
                raise _err(node, "the registry must precede every word")
            sc.reg, sc._reg_set = _registry(sc, node), True
        elif h == "defgroup":
            _arity(node, 2, 2)
            sc.groups[_sym(node.items[1])] = _group(sc, node.items[2])
        elif h == "defword":
            _arity(node, 2, 2)
            sc.words[_fresh(sc, node.items[1])] = _word(sc, node.items[2])
        elif h in ("triple", "deftriple"):
            _triple(sc, node)
        elif h == "defcoll":
            _arity(node, 1)
            names = [_sym(x) for x in node.items[2:]]
            for x, nm in zip(node.items[2:], names):
                if nm not in sc.triples:
                    raise _err(x, f"undefined triple {nm!r}")
            sc.colls[_fresh(sc, node.items[1])] = names
        elif h == "scenario":
            if sc.scenario is not None:
                raise _err(node, "a script has a single scenario")
            sc.scenario = _scenario(sc, node)
        elif h == "assert-equiv":
            _arity(node, 3, 3)
            sc.asserts.append(("equiv", node, _word(sc, node.items[1]), _word(sc, node.items[2]), _int(node.items[3])))
        elif h == "assert-reduced":
            _arity(node, 2, 2)
            sc.asserts.append(("reduced", node, _word(sc, node.items[1]), _int(node.items[2])))
        elif h == "assert-not-fine":
            _arity(node, 3)
            fam = [_word(sc, x) for x in node.items[3:]]
            sc.asserts.append(("not-fine", node, _word(sc, node.items[1]), _int(node.items[2]), fam))
        else:
            raise _err(node, f"unknown form {show(node.items[0]) if isinstance(node, SList) and node.items else show(node)}")
    except ScriptError:
        raise
    except (GroupError, WordError, OrderError, CoiError, SchemeError, GalleryError) as e:
        raise _err(node, str(e)) from None


def _fresh(sc: Script, node) -> str:
    name = _sym(node)
    if name in sc.words or name in sc.triples or name in sc.colls:
        raise _err(node, f"name {name!r} already defined")
    return name


def _group(sc: Script, node) -> GroupSpec:
    if isinstance(node, Atom):
        if node.text == "Z":
            return InfiniteCyclic()
        if node.text in sc.groups:
            return sc.groups[node.text]
        raise _err(node, f"undefined group {node.text!r}")
    h = _head(node)
    if h == "zmod":
        _arity(node, 1, 1)
        return FiniteCyclic(_int(node.items[1]))
    if h == "free":
        _arity(node, 2, 2)
        return FreeProduct(_group(sc, node.items[1]), _group(sc, node.items[2]))
    if h == "group":
        _arity(node, 1, 1)
        return _group(sc, node.items[1])
    raise _err(node, f"unknown group form {show(node)}")


def _registry(sc: Script, node) -> Registry:
    table, tail = {}, None
    for x in node.items[1:]:
        if not isinstance(x, SList) or len(x.items) != 2:
            raise _err(x, "registry entries are (N <group>) or (tail <group>)")
        if isinstance(x.items[0], Atom) and x.items[0].text == "tail":
            tail = _group(sc, x.items[1])
        else:
            n = _int(x.items[0])
            if n in table:
                raise _err(x, f"group index {n} registered twice")
            table[n] = _group(sc, x.items[1])
    return Registry.of(table, tail)


def _elem(node):
    if isinstance(node, Atom):
        return _int(node)
    out = []
    for x in node.items:
        if not isinstance(x, SList) or len(x.items) != 2 or show(x.items[0]) not in ("L", "R"):
            raise _err(x, "free product elements are lists of (L e) / (R e)")
        out.append((x.items[0].text, _elem(x.items[1])))
    return tuple(out)


def _letter(sc: Script, node):
    if _head(node) != "lit":
        raise _err(node, f"expected a letter (lit N <elem>), got {show(node)}")
    _arity(node, 2, 2)
    return sc.reg.letter(_int(node.items[1]), _elem(node.items[2]))


def _cut(node, low: bool):
    if isinstance(node, Atom) and node.text in ("-inf", "+inf", "inf"):
        return None
    ops = {">=": AtOrAbove, ">": Above} if low else {"<=": AtOrBelow, "<": Below}
    h = _head(node)
    if h not in ops or len(node.items) != 2:
        raise _err(node, f"expected a {'low' if low else 'high'} cut, got {show(node)}")
    return ops[h](parse_path(show(node.items[1])))


def _interval(node) -> Interval:
    if isinstance(node, Atom) and node.text == "full":
        return Interval()
    if _head(node) != "iv":
        raise _err(node, f"expected an interval (iv <lo> <hi>), got {show(node)}")
    _arity(node, 2, 2)
    return Interval(_cut(node.items[1], True), _cut(node.items[2], False))


def _word(sc: Script, node) -> Word:
    if isinstance(node, Atom):
        if node.text in sc.words:
            return sc.words[node.text]
        raise _err(node, f"undefined word {node.text!r}")
    h = _head(node)
    args = node.items[1:]
    if h == "word":
        _arity(node, 1, 1)
        return _word(sc, args[0])
    if h == "empty":
        return EMPTY_WORD
    if h == "lit":
        return Lit(_letter(sc, node))
    if h == "cat":
        parts = tuple(_word(sc, x) for x in args)
        return Cat(parts) if parts else EMPTY_WORD
    if h == "inv":
        _arity(node, 1, 1)
        return Inv(_word(sc, args[0]))
    if h == "sub":
        _arity(node, 2, 2)
        return Sub(_word(sc, args[0]), _interval(args[1]))
    if h == "omega":
        return _omega(sc, node)
    if h == "qshuffle":
        return _qshuffle(sc, node)
    if h == "nastyword":
        _arity(node, 0, 1)
        k = _int(args[0]) if args else 0
        return nastyword(NastyParams(sc.reg, k)).W(k)
    if h == "nonsymmetric":
        return nastyword(NastyParams(sc.reg, 0)).nonsymmetric()
    raise _err(node, f"unknown word form {show(node.items[0]) if node.items else '()'}")


def _sections(node, allowed) -> dict:
    out: dict = {}
    for x in node.items[1:]:
        h = _head(x)
        if h not in allowed:
            raise _err(x, f"{_head(node)}: unexpected section {show(x)}")
        out.setdefault(h, []).append(x)
    return out


def _affine(node) -> tuple:
    if _head(node) != "affine":
        raise _err(node, f"expected (affine A B), got {show(node)}")
    _arity(node, 2, 2)
    return _int(node.items[1]), _int(node.items[2])


def _omega(sc: Script, node) -> Word:
    s = _sections(node, ("prefix", "tail"))
    prefix = tuple(_word(sc, x) for p in s.get("prefix", []) for x in p.items[1:])
    tails = s.get("tail", [])
    if len(tails) != 1:
        raise _err(node, "omega needs exactly one (tail ...)")
    t = tails[0]
    _arity(t, 1, 1)
    pw = t.items[1]
    if _head(pw) != "power":
        raise _err(pw, "the only tail form is (power (index affine A B) (exp ...))")
    ps = _sections(pw, ("index", "exp"))
    a, b = 1, 0
    if "index" in ps:
        ix = ps["index"][0]
        a, b = _affine(SList(ix.items[1:], ix.line, ix.col))
    exps = ExponentFn()
    if "exp" in ps:
        slope, offset, over = 0, 1, []
        for x in ps["exp"][0].items[1:]:
            if _head(x) == "default":
                slope, offset = _affine(SList(x.items[1:], x.line, x.col))
            elif _head(x) == "at":
                _arity(x, 2, 2)
                over.append((_int(x.items[1]), _int(x.items[2])))
            else:
                raise _err(x, f"exp: unexpected {show(x)}")
        exps = ExponentFn(tuple(over), slope, offset)
    return OmegaCat(SeqRule(prefix, PowerTail(sc.reg, a, b, exps)))


def _qshuffle(sc: Script, node) -> Word:
    s = _sections(node, ("block", "blocktail", "fiber", "fibers", "sep", "start", "top"))
    table = {}
    for x in s.get("block", []):
        _arity(x, 2, 2)
        table[_int(x.items[1])] = _word(sc, x.items[2])
    start = _int(s["start"][0].items[1]) if "start" in s else min(table, default=0)
    top = _int(s["top"][0].items[1]) if "top" in s else None
    tail = None
    if "blocktail" in s:
        tail = _blocktail(sc, s["blocktail"][0])
    elif table:
        top = max(table) if top is None else top
    if tail is None and not table:
        raise _err(node, "qshuffle needs blocks or a blocktail")

    def core(m, table=table, tail=tail):
        if m in table:
            return table[m]
        if tail is None:
            raise WordError(f"no block of index {m}")
        return tail(m)

    if "fibers" in s:
        f = s["fibers"][0]
        if len(f.items) < 2 or show(f.items[1]) != "dyadic":
            raise _err(f, "fibers form is (fibers dyadic [alternate])")
        fibers = DyadicFibers(start, len(f.items) > 2 and show(f.items[2]) == "alternate")
    else:
        rows = []
        for x in s.get("fiber", []):
            _arity(x, 2, 2)
            sites = []
            for y in x.items[2].items if isinstance(x.items[2], SList) else ():
                if not isinstance(y, SList) or len(y.items) != 2:
                    raise _err(y, "fiber sites are (P/Q sign)")
                sites.append((Fraction(show(y.items[0])), _int(y.items[1])))
            rows.append((_int(x.items[1]), tuple(sites)))
        if not rows:
            raise _err(node, "qshuffle needs (fiber ...) rows or (fibers dyadic)")
        fibers = TableFibers(tuple(rows))
    seps = {}
    for x in s.get("sep", []):
        _arity(x, 3, 3)
        seps[_int(x.items[1])] = (_letter(sc, x.items[2]), _int(x.items[3]))
    return QShuffle(QRule(f"q{node.line}:{node.col}", core, fibers, lambda m, seps=seps: seps.get(m), start, top))


def _blocktail(sc: Script, node):
    """(blocktail involution | generator | (suffixes w...))"""
    _arity(node, 1, 1)
    x = node.items[1]
    reg = sc.reg
    if isinstance(x, Atom) and x.text == "involution":
        def f(m):
            g = reg.involution_letter(m)
            if g is None:
                raise WordError(f"group {m} has no involution")
            return Lit(g)
        return f
    if isinstance(x, Atom) and x.text == "generator":
        def f(m):
            g = reg.infinite_letter(m)
            return Lit(g if g is not None else reg.some_letter(m))
        return f
    if _head(x) == "suffixes":
        ws = [_word(sc, y) for y in x.items[1:]]
        if not ws:
            raise _err(x, "suffixes needs at least one word")
        return lambda m: Sub(ws[m % len(ws)], Interval(AtOrAbove((m,)), None))
    raise _err(x, f"unknown blocktail {show(x)}")


def _pick(node):
    if isinstance(node, Atom) and node.text == "all":
        return All()
    h = _head(node)
    if h == "cofinite":
        return CofiniteExcept(tuple(parse_path(show(x)) for x in node.items[1:]))
    if h == "finite":
        return FiniteOnly(tuple(parse_path(show(x)) for x in node.items[1:]))
    if h == "residue":
        _arity(node, 2, 2)
        return ResidueClass(_int(node.items[1]), _int(node.items[2]))
    if h == "perpart":
        return PerPart(tuple(_pick(x) for x in node.items[1:]))
    if h == "dense":
        _arity(node, 0, 1)
        return DenseRule(_int(node.items[1]) if len(node.items) > 1 else None)
    raise _err(node, f"unknown subset form {show(node)}")


def _triple(sc: Script, node):
    _arity(node, 1)
    name = _sym(node.items[1])
    if name in sc.triples or name in sc.words or name in sc.colls:
        raise _err(node.items[1], f"name {name!r} already defined")
    s = _sections(SList(node.items[1:], node.line, node.col), ("left", "right", "coi"))
    for k in ("left", "right", "coi"):
        if len(s.get(k, [])) != 1:
            raise _err(node, f"triple needs exactly one ({k} ...)")
    left = _word(sc, s["left"][0].items[1])
    right = _word(sc, s["right"][0].items[1])
    c = s["coi"][0]
    if len(c.items) == 2 and show(c.items[1]) == "identity":
        if left != right:
            raise _err(c, "identity coi needs equal left and right words")
        coi = identity_coi(left)
    else:
        segs = []
        for x in c.items[1:]:
            if _head(x) != "seg":
                raise _err(x, f"coi: expected (seg ...), got {show(x)}")
            ss = _sections(x, ("src", "dst", "orient", "pick"))
            src = _interval(ss["src"][0].items[1]) if "src" in ss else Interval()
            dst = _interval(ss["dst"][0].items[1]) if "dst" in ss else Interval()
            orient = _int(ss["orient"][0].items[1]) if "orient" in ss else 1
            picks = (None, None)
            if "pick" in ss:
                p = ss["pick"][0]
                _arity(p, 2, 2)
                picks = (_pick(p.items[1]), _pick(p.items[2]))
            segs.append(Segment(src, dst, orient, *picks))
        coi = ChartCoi(left, right, tuple(segs))
    sc.triples[name] = Triple(name, left, right, coi)


def _scenario(sc: Script, node) -> Scenario:
    s = _sections(node, ("steps", "depth", "audit-depth", "seed", "left", "right"))
    one = lambda k, d: _int(s[k][0].items[1]) if k in s else d
    seed = []
    for x in (y for p in s.get("seed", []) for y in p.items[1:]):
        if isinstance(x, Atom) and x.text in sc.triples:
            seed.append(sc.triples[x.text])
        else:
            seed.append(_word(sc, x))
    return Scenario(sc.reg, sc.reg, seed, one("steps", 0), one("depth", 4),
                    _int(s["audit-depth"][0].items[1]) if "audit-depth" in s else None,
                    [_word(sc, x) for p in s.get("left", []) for x in p.items[1:]],
                    [_word(sc, x) for p in s.get("right", []) for x in p.items[1:]])


# ---------------------------------------------------------------- commands

class VerdictFailure(Exception):
    def __init__(self, payload):
        self.payload = payload


def _load(path: str) -> Script:
    if path == "-":
        return parse(sys.stdin.read())
    with open(path, encoding="utf-8") as f:
        return parse(f.read())


def _verdict_json(v, N: int) -> dict:
    if isinstance(v, CertifiedReduced):
        return {"verdict": "CertifiedReduced", "reason": v.reason, "depth": N}
    if isinstance(v, NotReduced):
        return {"verdict": "NotReduced", "depth": v.depth, "witness": fw_json(v.witness)}
    return {"verdict": "UnknownToDepth", "depth": v.depth}


def cmd_project(a):
    sc = _load(a.script)
    return fw_json(project(sc.word(a.word), a.N))


def cmd_reduce(a):
    sc = _load(a.script)
    return {"depth": a.N, "letters": fw_json(free_reduce(project(sc.word(a.word), a.N)))}


def cmd_eq(a):
    sc = _load(a.script)
    r = equiv_depth(sc.word(a.a), sc.word(a.b), a.N)
    out = {"equal_to_depth": a.N, "result": r}
    if not r:
        raise VerdictFailure(out)
    return out


def cmd_reduced(a):
    sc = _load(a.script)
    v = check_reduced_depth(sc.word(a.word), a.N)
    out = _verdict_json(v, a.N)
    if isinstance(v, NotReduced):
        raise VerdictFailure(out)
    return out


def cmd_scheme(a):
    sc = _load(a.script)
    w = sc.word(a.word)
    fw = project(w, a.N)
    s = find_trivializing_scheme(fw)
    if s is None:
        raise VerdictFailure({"depth": a.N, "scheme": None})
    return {"depth": a.N, "scheme": scheme_json(fw, s)}


def cmd_embeddings(a):
    sc = _load(a.script)
    profile = [int(x) for x in a.profile.split(",") if x.strip()]
    fw = project(sc.word(a.word), a.N)
    starts = enumerate_degree_embeddings(profile, fw)
    return {"depth": a.N, "profile": profile,
            "embeddings": [[format_path(fw[s + j][0]) for j in range(len(profile))] for s in starts]}


def cmd_fine(a):
    sc = _load(a.script)
    names = a.family.split(",") if a.family else [n for n in sc.words if n != a.word]
    fam = [sc.word(n) for n in names]
    r = fine_membership_bounded(sc.word(a.word), fam, a.N)
    if isinstance(r, MemberWitness):
        return {"depth": a.N, "result": "member", "exact": r.exact,
                "factors": [{"kind": f.kind, "source": None if f.source is None else names[f.source],
                             "sign": f.found.sign if f.found else 1} for f in r.factors]}
    raise VerdictFailure({"depth": a.N, "result": "no-decomposition", "family": names})


def cmd_audit(a):
    sc = _load(a.script)
    coll = sc.collection(a.coll)
    return audit(coll, a.N).to_json(coll)


def cmd_build(a):
    if a.generator == "nastyword":
        reg = _load(a.script).reg if a.script else Registry.of({}, FiniteCyclic(2))
        n = nastyword(NastyParams(reg, a.N))
        if a.emit:
            return "(registry (tail (zmod 2)))\n(defword W (nastyword 0))\n"
        proj = {str(k): fw_json(project(n.word, k)) for k in range(a.N + 1)}
        return {"generator": "nastyword", "depth": a.N, "projections": proj,
                "ruler": {str(k): ruler_degrees(k) for k in range(a.N + 1)}}
    if a.generator == "diagonal":
        if not a.script:
            raise ScriptError("build diagonal needs a family script")
        sc = _load(a.script)
        fam = list(sc.words.values())
        d = diagonal(fam, a.N, sc.reg)
        if a.emit:
            ats = " ".join(f"(at {k} {v})" for k, v in sorted(d.exponents.items()))
            return f"(defword diagonal (omega (tail (power (index affine 1 0) (exp (default affine 0 1) {ats})))))\n"
        return {"generator": "diagonal", "depth": a.N, "family": list(sc.words),
                "exponents": {str(k): v for k, v in sorted(d.exponents.items())},
                "defeated": len(d.certificate), "projection": fw_json(project(d.word, a.N))}
    raise ScriptError(f"unknown generator {a.generator!r}")


def cmd_drive(a):
    sc = _load(a.script)
    if sc.scenario is None:
        raise ScriptError("script has no (scenario ...)")
    scen = sc.scenario
    if a.budget is not None:
        scen.steps = a.budget
    if a.N_given:
        scen.depth = a.N
    r = drive_extension(scen)
    return "".join(json.dumps(row, sort_keys=True) + "\n" for row in r.transcript)


def cmd_check(a):
    sc = _load(a.script)
    rows, ok = [], True
    for kind, node, *args in sc.asserts:
        if kind == "equiv":
            good = equiv_depth(args[0], args[1], args[2])
        elif kind == "reduced":
            good = not isinstance(check_reduced_depth(args[0], args[1]), NotReduced)
        else:
            good = not isinstance(fine_membership_bounded(args[0], args[2], args[1]), MemberWitness)
        rows.append({"line": node.line, "form": show(node), "result": good})
        ok &= good
    out = {"asserts": rows, "passed": sum(r["result"] for r in rows), "failed": sum(not r["result"] for r in rows)}
    if not ok:
        raise VerdictFailure(out)
    return out


def cmd_sweep(a):
    """Random free-product words: the scheme finder against free reduction
    and reduced_mul against reduction of the concatenation."""
    rng = random.Random(a.seed)
    regs = [Registry.of({0: InfiniteCyclic(), 1: InfiniteCyclic()}),
            Registry.of({0: InfiniteCyclic(), 1: FiniteCyclic(3)}),
            Registry.of({0: FiniteCyclic(4), 1: FiniteCyclic(4)})]
    bad = 0
    for _ in range(a.budget or 1000):
        reg = rng.choice(regs)
        fw = tuple(((i,), reg.letter(g, _rand_elem(rng, reg.spec(g)))) for i, g in
                   enumerate(rng.choice((0, 1)) for _ in range(rng.randint(0, 10))))
        if (find_trivializing_scheme(fw) is not None) != (free_reduce(fw) == ()):
            bad += 1
        k = rng.randint(0, len(fw))
        x, y = free_reduce(fw[:k]), free_reduce(fw[k:])
        lhs = [l for _, l in reduced_mul(x, y)]
        rhs = [l for _, l in free_reduce(tag(x, 0) + tag(y, 1))]
        bad += lhs != rhs
    out = {"seed": a.seed, "cases": a.budget or 1000, "failures": bad}
    if bad:
        raise VerdictFailure(out)
    return out


def _rand_elem(rng, spec):
    if isinstance(spec, FiniteCyclic):
        return rng.randint(1, spec.modulus - 1)
    return rng.choice([-2, -1, 1, 2])


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topword", description="Infinite words over a sequence of groups.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-N", type=int, default=None, help=f"depth (default {DEFAULT_DEPTH})")
    common.add_argument("--json", action="store_true", help="JSON output (always on)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, *args):
        sp = sub.add_parser(name, parents=[common])
        for arg in args:
            if isinstance(arg, tuple):
                sp.add_argument(*arg[0], **arg[1])
            else:
                sp.add_argument(arg)
        sp.set_defaults(fn=fn)
        return sp

    add("project", cmd_project, "script", "word")
    add("reduce", cmd_reduce, "script", "word")
    add("eq", cmd_eq, "script", "a", "b")
    add("reduced", cmd_reduced, "script", "word")
    add("scheme", cmd_scheme, "script", "word")
    add("embeddings", cmd_embeddings, "script", "word", (("--profile",), {"required": True}))
    add("fine", cmd_fine, "script", "word", (("--family",), {"default": None}))
    add("audit", cmd_audit, "script", (("--coll",), {"default": None}))
    add("build", cmd_build, "generator", (("script",), {"nargs": "?"}), (("--emit",), {"action": "store_true"}))
    add("drive", cmd_drive, "script")
    add("check", cmd_check, "script")
    add("sweep", cmd_sweep)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    args.N_given = args.N is not None
    if args.N is None:
        args.N = DEFAULT_DEPTH
    try:
        out = args.fn(args)
        code = 0
    except VerdictFailure as v:
        out, code = v.payload, 1
    except ScriptError as e:
        where = getattr(args, "script", None) or "<script>"
        print(f"{where}:{e}", file=sys.stderr)
        return 2
    except (GroupError, WordError, OrderError, CoiError, SchemeError, GalleryError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if isinstance(out, str):
        sys.stdout.write(out)
    elif out is not None:
        print(json.dumps(out, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
