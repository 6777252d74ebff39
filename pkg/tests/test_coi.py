import random

import pytest

from topword.arch import Equal, beth, ref
from topword.coi import (
    Chart,
    ChartCoi,
    Collection,
    CoiError,
    Obligation,
    Segment,
    Triple,
    anchors_upto,
    audit,
    avoid_exponents,
    cantor_pair,
    cantor_unpair,
    coi_invert,
    diagonal,
    discharge,
    enumerate_obligations,
    extend_omega,
    extend_qshuffle,
    extend_representative,
    identity_coi,
    raise_degree,
    replay_schedule,
    z_min,
    z_of,
)
from topword.groups import Registry, Z
from topword.orders import FULL, AtOrAbove, AtOrBelow, Interval, ResidueClass, contains
from topword.schemes import CertifiedReduced, check_reduced_depth
from topword.words import (
    Cat,
    DyadicFibers,
    ExponentFn,
    GenTail,
    Inv,
    Lit,
    MemberWitness,
    OmegaCat,
    QRule,
    QShuffle,
    SeqRule,
    Sub,
    cmp_of,
    d_word,
    equiv_depth,
    fine_membership_bounded,
    finite_word,
    free_reduce,
    inverse,
    power_word,
    project,
)

import closeorders as co

REG = Registry.of({}, Z)
X = power_word(REG)
X2 = power_word(REG, exps=ExponentFn((), 0, 2))
Y = power_word(REG, exps=ExponentFn((), 0, 3))
Y2 = power_word(REG, exps=ExponentFn((), 0, 4))
N_CASES = 150


def chart(left, right, **kw):
    return ChartCoi(left, right, (Segment(FULL, FULL, kw.get("orient", 1), kw.get("sp"), kw.get("dp")),))


def base_coll():
    c = Collection((), REG, REG)
    c = c.add(Triple("x", X, Y, chart(X, Y)))
    return c.add(Triple("x2", X2, Y2, chart(X2, Y2)))


def segment(a, b):
    return Interval(AtOrAbove((a,)), AtOrBelow((b,)))


def members(w, iv, bound=40):
    cmp = cmp_of(w)
    return [n for n in range(bound) if contains(cmp, iv, (n,))]


# ---------------------------------------------------------------- hulls

def test_full_domain_full_hull():
    t = Triple("x", X, Y, chart(X, Y))
    assert members(Y, t.coi.forward_hull(FULL)) == list(range(40))


def test_finite_intervals_go_to_finite_hulls():
    coi = chart(X, Y, sp=ResidueClass(2, 1))
    for a in range(12):
        for b in range(a, 12):
            h = coi.forward_hull(segment(a, b))
            assert is_finite_iv(Y, h)


def is_finite_iv(w, iv):
    return len(members(w, iv, 200)) == len(members(w, iv, 100))


def test_hull_against_window_oracle():
    # picked odd positions of X go in order onto all positions of Y
    coi = chart(X, Y, sp=ResidueClass(2, 1))
    rng = random.Random(1)
    for _ in range(200):
        a = rng.randint(0, 15)
        b = rng.randint(a, 20)
        iv = segment(a, b)
        picked = [n for n in members(X, iv) if n % 2 == 1]
        imgs = [(n - 1) // 2 for n in picked]
        want = list(range(min(imgs), max(imgs) + 1)) if imgs else []
        assert members(Y, coi.forward_hull(iv)) == want


def test_chart_opens_omega_prefix():
    # a Cat among the prefix terms is one leaf per letter, not one term
    a, b = REG.letter(0, 1), REG.letter(1, 1)
    W = OmegaCat(SeqRule((Lit(a), finite_word([b, a.power(2)])), X.rule.tail))
    c = Chart(W)
    assert [q.prefix for q, _ in c.pieces] == [(0,), (1, 0), (1, 1), ()]
    assert [q.prefix for q, _ in Chart(Inv(W)).pieces] == [(), (1, 1), (1, 0), (0,)]
    t = identity_coi(W)
    cmp = cmp_of(W)
    pts = [p for p, _ in project(W, 8)]
    for p in pts[:6]:
        iv = Interval(AtOrAbove((0,)), AtOrBelow(p))
        h = t.forward_hull(iv)
        assert [q for q in pts if contains(cmp, h, q)] == [q for q in pts if contains(cmp, iv, q)]


def test_round_trip_is_subset_hull():
    coi = chart(X, Y, sp=ResidueClass(2, 0))
    for a in range(10):
        for b in range(a, 14):
            back = coi.backward_hull(coi.forward_hull(segment(a, b)))
            evens = [n for n in range(a, b + 1) if n % 2 == 0]
            want = list(range(evens[0], evens[-1] + 1)) if evens else []
            assert members(X, back) == want


@pytest.mark.parametrize("check", [co.check_coi_hull, co.check_almost_identified, co.check_finite_to_finite,
                                   co.check_coi_split], ids=lambda f: f.__name__)
def test_order_coi_properties(check):
    rng = random.Random(13)
    assert all(check(rng) for _ in range(N_CASES))


def test_invert():
    t = Triple("x", X, Y, chart(X, Y, sp=ResidueClass(3, 1)))
    tt = coi_invert(coi_invert(t))
    assert tt.name == "x" and tt.left is X and tt.right is Y
    inv = coi_invert(t)
    for a in range(8):
        iv = segment(a, a + 5)
        assert members(Y, tt.coi.forward_hull(iv)) == members(Y, t.coi.forward_hull(iv))
        assert members(X, inv.coi.forward_hull(iv)) == members(X, t.coi.backward_hull(iv))


def test_reversed_segment():
    coi = chart(X, Inv(Y), orient=-1)
    assert members(Inv(Y), coi.forward_hull(segment(0, 3))) == [0, 1, 2, 3]
    # inside the inverted word the interval runs from index 5 down to 2
    down = Interval(AtOrAbove((5,)), AtOrBelow((2,)))
    assert members(X, coi.backward_hull(down)) == [2, 3, 4, 5]


# ---------------------------------------------------------------- obligations

def test_identical_left_words_give_cross_obligation():
    c = Collection((), REG, REG).add(Triple("a", X, Y, chart(X, Y))).add(Triple("b", X, Y, chart(X, Y)))
    obs = enumerate_obligations(c, 4)
    assert any(o.x0 == 0 and o.x1 == 1 and o.i0 == FULL for o in obs)


def test_unrelated_words_only_reflexive():
    obs = enumerate_obligations(base_coll(), 6)
    assert obs and all(o.reflexive for o in obs)


def test_planted_shared_subword():
    f1 = finite_word([REG.letter(0, 5)])
    f2 = finite_word([REG.letter(1, 7)])
    A, B = Cat((f1, X)), Cat((f2, X))
    c = Collection((), REG, REG).add(Triple("a", A, A, identity_coi(A))).add(Triple("b", B, B, identity_coi(B)))
    obs = [o for o in enumerate_obligations(c, 4) if o.kind == "left" and o.x0 == 0 and o.x1 == 1]
    assert obs
    planted = [o for o in obs if members(B, o.i1, 1) == [] and o.exact]
    assert planted
    assert all(isinstance(discharge(o), Equal) for o in obs)


def test_discharge_examples():
    F = finite_word([REG.letter(0, 1)])
    fin = Obligation("left", 0, 0, FULL, FULL, 1, beth(F), beth(F), True)
    assert isinstance(discharge(fin), Equal)
    same = Obligation("left", 0, 0, FULL, FULL, 1, beth(Y), beth(Y), True)
    assert isinstance(discharge(same), Equal)
    prefix = Obligation("left", 0, 0, FULL, FULL, 1, beth(Y), ref(Y, Interval(AtOrAbove((1,)), None)), True)
    assert isinstance(discharge(prefix), Equal)


# ---------------------------------------------------------------- representatives

def _rep(coll, W, depth=4):
    wit = fine_membership_bounded(W, coll.lefts(), depth)
    assert isinstance(wit, MemberWitness)
    return extend_representative(coll, W, wit)


def test_representative_full_left_word():
    coll = base_coll()
    t = _rep(coll, X)
    assert all(equiv_depth(t.right, Y, N) for N in range(6))
    for a in range(6):
        iv = segment(a, a + 3)
        assert members(Y, t.coi.forward_hull(iv)) == members(Y, coll.get("x").coi.forward_hull(iv))


def test_representative_finite_word():
    coll = base_coll()
    W = finite_word([REG.letter(2, 1), REG.letter(0, 1)])
    t = _rep(coll, W)
    assert isinstance(t.right, Lit) and t.right.letter.group == 0
    assert contains(cmp_of(t.right), t.coi.forward_hull(FULL), ())


def test_representative_separator_on_clash():
    coll = base_coll()
    t = _rep(coll, Cat((Inv(X), X)))
    assert len(t.info["separators"]) == 1
    h = [p for p in t.right.parts if isinstance(p, Lit)]
    assert len(h) == 1 and h[0].letter.group == 1
    assert isinstance(check_reduced_depth(t.right, 6), CertifiedReduced)


# ---------------------------------------------------------------- raising the degree

def _self(W, name="w"):
    return Collection((), REG, REG).add(Triple(name, W, W, identity_coi(W)))


def test_raise_degree_already_high():
    W = power_word(REG, 1, 6)
    t = raise_degree(_self(W), "w", 2)
    assert t.right is W


def test_raise_degree_finite_right():
    F = finite_word([REG.letter(0, 1), REG.letter(1, 1)])
    c = Collection((), REG, REG).add(Triple("w", X, F, chart(X, X)))
    t = raise_degree(c, "w", 3)
    assert isinstance(t.right, Lit) and t.right.letter.group == 4


def test_raise_degree_block_segmentation():
    c5 = power_word(REG, 1, 5)
    c5b = power_word(REG, 1, 5, ExponentFn((), 0, 2))
    a0, a0b = REG.letter(0, 1), REG.letter(0, 3)
    W = Cat((Lit(a0), c5, Lit(a0b), c5b))
    t = raise_degree(_self(W), "w", 2)
    assert t.info["blocks"] == ["low", "high", "low", "high"]
    parts = t.right.parts
    assert isinstance(parts[0], Lit) and parts[0].letter.group == 3 and parts[2] == parts[0]
    assert all(equiv_depth(parts[1], c5, N) and equiv_depth(parts[3], c5b, N) for N in range(9))
    assert d_word(t.right) == 3
    assert audit(_self(W).add(t), 4).unknown == 0


# ---------------------------------------------------------------- avoidance

def test_avoid_empty_family():
    av = avoid_exponents([], [3], lambda n: n, [3], lambda n: 1, REG.infinite_letter, 5)
    assert av.q(3) == 1 and av.certificate == ()


def test_avoid_single_embedding():
    av = avoid_exponents([X], [3], lambda n: n, [3], lambda n: 1, REG.infinite_letter, 5)
    # found once in X and once in its inverse
    assert av.q(3) == 2 and sorted(c[1] for c in av.certificate) == [-1, 1]


def test_avoid_two_embeddings_listed():
    B = power_word(REG, exps=ExponentFn(((3, 2),), 0, 1))
    av = avoid_exponents([X, B], [3, 4], lambda n: n, [3, 4], lambda n: 1, REG.infinite_letter, 5)
    assert av.q(3) == 3
    assert sorted(c[0] for c in av.certificate) == [0, 1]


# ---------------------------------------------------------------- schedules and the diagonal word

def test_pairing_schedule():
    for n in range(500):
        assert cantor_pair(*cantor_unpair(n)) == n
    for m in range(20):
        assert z_of(z_min(m)) == m
        assert all(z_of(n) != m for n in range(z_min(m)))
    assert anchors_upto(10) == [0, 1, 3, 6, 10]


def test_diagonal_empty_family():
    d = diagonal([], 6, REG)
    assert d.exponents == {}
    assert [l.value for _, l in project(d.word, 6)] == [1] * 7


def test_diagonal_against_previous_output():
    first = diagonal([X], 6, REG).word
    second = diagonal([first], 6, REG)
    e1 = [l.value for _, l in project(first, 14)]
    e2 = [l.value for _, l in project(second.word, 14)]
    for m in range(7):
        assert any(e1[n] != e2[n] for n in range(m, 14))


def test_diagonal_prefixes_reduced():
    V = diagonal([X, X2], 6, REG).word
    fw = project(V, 14)
    for k in range(len(fw) + 1):
        assert free_reduce(fw[:k]) == fw[:k]
    assert isinstance(check_reduced_depth(V, 8), CertifiedReduced)


# ---------------------------------------------------------------- omega extension

def tails_of_x():
    term = lambda m: Sub(X, Interval(AtOrAbove((m,)), None))
    return OmegaCat(SeqRule((), GenTail("x-tails", term, lambda N: N + 1, 0)))


def test_extend_omega_blocks_and_separators():
    coll = base_coll()
    W = tails_of_x()
    t = extend_omega(coll, W, 4)
    rows = replay_schedule(t, 6)
    assert [r["m"] for r in rows] == list(range(7))
    for r in rows:
        assert r["degree"] > r["m"] + 1
    for m in range(7):
        k, e = t.info["exponent"](m)
        assert k.group == m
    # U'_m has degree > m+1, so depth 1 shows only the first two separators
    k0, e0 = t.info["exponent"](0)
    k1, e1 = t.info["exponent"](1)
    assert [l for _, l in project(t.right, 1)] == [k0.power(e0), k1.power(e1)]
    assert audit(coll.add(t), 3).unknown == 0


def test_extend_omega_needs_omega():
    with pytest.raises(CoiError):
        extend_omega(base_coll(), Cat((X, X2)), 3)


# ---------------------------------------------------------------- rational extension

def q_fixture():
    core = lambda m: Sub(X if m % 2 == 0 else X2, Interval(AtOrAbove((m,)), None))
    return QShuffle(QRule("Wq", core, DyadicFibers(0, True)))


def test_extend_qshuffle_template():
    coll = base_coll()
    W = q_fixture()
    t = extend_qshuffle(coll, W, 6)
    rule = t.right.rule
    for m in range(7):
        h, R = rule.sep(m)
        assert h.group == m and R >= 1
        blk = rule.block(m, 1)
        assert isinstance(blk, Cat) and blk.parts[0] == blk.parts[-1] == Lit(h.power(R))
        assert d_word(blk.parts[1]) > m
        assert d_word(blk) == m
        assert all(equiv_depth(rule.block(m, -1), inverse(blk), N) for N in range(m, m + 3))
    assert isinstance(check_reduced_depth(t.right, 6), CertifiedReduced)
    rep = audit(coll.add(t), 3)
    assert rep.unknown == 0


def test_extend_qshuffle_rejects_duplicates():
    core = lambda m: Sub(X, Interval(AtOrAbove((0,)), None))
    W = QShuffle(QRule("dup", core, DyadicFibers(0)))
    with pytest.raises(CoiError):
        extend_qshuffle(base_coll(), W, 3)


# ---------------------------------------------------------------- audit

def test_audit_empty():
    r = audit(Collection((), REG, REG), 4)
    assert r.obligations == [] and r.equal == r.unknown == 0


def test_audit_self_symmetric_word():
    W = Cat((X, Lit(REG.letter(0, 5)), X))
    r = audit(_self(W), 4)
    nonrefl = [o for o in r.obligations if not o.reflexive and o.kind == "left"]
    assert nonrefl and r.unknown == 0


def test_audit_chain_monotone():
    c1 = base_coll()
    L, R = Cat((X, X2)), Cat((Y, Y2))
    c2 = c1.add(Triple("z", L, R, chart(L, R)))
    key = lambda o: (o.kind, o.x0, o.x1, repr(o.i0), repr(o.i1), o.sign)
    k1 = {key(o) for o in audit(c1, 4).obligations}
    k2 = {key(o) for o in audit(c2, 4).obligations}
    assert k1 <= k2


def test_audit_report_json():
    c = base_coll()
    js = audit(c, 3).to_json(c)
    assert set(js) == {"depth", "obligations", "equal", "unknown"}
    assert js["obligations"][0]["x0"] == "x"
