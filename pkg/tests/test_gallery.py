import json

import pytest

from topword.coi import audit
from topword.gallery import (
    GalleryError,
    NastyParams,
    Scenario,
    drive_extension,
    nastyword,
    pair_word,
    reindex_word,
    ruler_degrees,
    ruler_recursive,
    shift_word,
    unpair_word,
)
from topword.groups import FiniteCyclic, Registry, Z
from topword.orders import AtOrAbove, Interval
from topword.words import (
    Cat,
    ExponentFn,
    GenTail,
    Lit,
    OmegaCat,
    SeqRule,
    Sub,
    equiv_depth,
    finite_word,
    free_reduce,
    power_word,
    project,
)

from oracles import ruler_text

# the displayed projections, verbatim
DISPLAYED = {
    0: "g0",
    1: "g1 g0 g1",
    2: "g2 g1 g2 g0 g2 g1 g2",
    3: "g3 g2 g3 g1 g3 g2 g3 g0 g3 g2 g3 g1 g3 g2 g3",
}

REG = Registry.of({}, Z)


def text(fw):
    return " ".join(f"g{l.group}" for _, l in fw)


# ---------------------------------------------------------------- the involution word

def test_displayed_projections():
    W = nastyword().word
    for N, want in DISPLAYED.items():
        assert text(project(W, N)) == want


def test_ruler_closed_form_and_recursion():
    W = nastyword().word
    for N in range(9):
        degs = [l.group for _, l in project(W, N)]
        assert len(degs) == 2 ** (N + 1) - 1
        assert degs == ruler_degrees(N) == ruler_recursive(N)
        assert text(project(W, N)) == ruler_text(N)


def test_reduced_and_self_inverse():
    W = nastyword().word
    for N in range(9):
        fw = project(W, N)
        for k in range(1, len(fw) + 1, 2):
            assert free_reduce(fw[:k]) == fw[:k]
        assert free_reduce(fw) != ()
        letters = [l for _, l in fw]
        assert letters == [l.inv() for l in reversed(letters)]


def test_split_at_central_letter():
    n = nastyword()
    for k in range(4):
        assert equiv_depth(n.W(k), Cat((n.W(k + 1), Lit(n.g(k)), n.W(k + 1))), 5)


def test_nonsymmetric_subword():
    n = nastyword()
    V = n.nonsymmetric()
    # g0 W3 g2 W5 ...: depth 2 shows g0 then g2
    assert text(project(V, 2)) == "g0 g2"
    assert text(project(V, 3)) == "g0 g3 g2"
    assert not equiv_depth(V, n.word, 3)


def test_needs_involutions():
    with pytest.raises(GalleryError):
        nastyword(NastyParams(Registry.of({}, Z), 3))
    with pytest.raises(GalleryError):
        nastyword(NastyParams(Registry.of({2: FiniteCyclic(3)}, FiniteCyclic(2)), 3))


# ---------------------------------------------------------------- relabelling

def test_shift_zero_is_identity():
    W = power_word(REG, 1, 0, ExponentFn((), 1, 1))
    V, reg = shift_word(W, 0, REG)
    for N in range(6):
        assert project(V, N) == project(W, N)


def test_shift_commutes_with_projection():
    n = nastyword()
    V, reg = shift_word(n.word, 2, n.params.reg)
    for N in range(2, 7):
        assert [l.group - 2 for _, l in project(V, N)] == [l.group for _, l in project(n.word, N - 2)]
    assert project(V, 1) == ()


def test_reindex_swap():
    a, b = REG.letter(0, 1), REG.letter(1, 1)
    V, reg = reindex_word(finite_word([a, b]), {0: 1, 1: 0}, REG)
    assert [(l.group, l.value) for _, l in project(V, 3)] == [(1, 1), (0, 1)]


def test_reindex_rejects_collision():
    with pytest.raises(GalleryError):
        reindex_word(finite_word([REG.letter(0, 1)]), {0: 1}, REG)


def test_pair_and_unpair():
    reg = Registry.of({0: Z, 1: FiniteCyclic(3), 2: Z, 3: FiniteCyclic(2)}, Z)
    ls = [reg.letter(0, 2), reg.letter(1, 1), reg.letter(3, 1), reg.letter(2, -1), reg.letter(0, 1)]
    W = Cat((finite_word(ls), power_word(reg, 2, 4)))
    P, preg = pair_word(W, reg)
    fw = project(P, 1)
    assert [l.group for _, l in fw] == [0, 0, 1, 1, 0]
    assert [l.value for _, l in fw][:3] == [(("L", 2),), (("R", 1),), (("R", 1),)]
    back = unpair_word(P, reg)
    for N in range(8):
        assert project(back, N) == project(W, N)


def test_pair_rejects_shuffle():
    n = nastyword()
    with pytest.raises(GalleryError):
        pair_word(n.word, n.params.reg)


# ---------------------------------------------------------------- the bounded driver

def test_budget_zero_keeps_seed():
    X = power_word(REG)
    r = drive_extension(Scenario(REG, REG, seed=[X], steps=0))
    assert len(r.collection.triples) == 1 and r.reports == []


def test_finite_seed_two_steps():
    F = finite_word([REG.letter(0, 1), REG.letter(1, 1)])
    r = drive_extension(Scenario(REG, REG, seed=[F], steps=2))
    assert len(r.collection.triples) == 3
    assert [row.get("side") for row in r.transcript[1:]] == ["left", "right"]
    assert all(rep.unknown == 0 for rep in r.reports)


def _tails(words):
    def term(m):
        return Sub(words[m % len(words)], Interval(AtOrAbove((m,)), None))
    return OmegaCat(SeqRule((), GenTail("tails", term, lambda N: N + 1, 0)))


def test_omega_scenario_over_three_words():
    fam = [power_word(REG, exps=ExponentFn((), 0, e)) for e in (1, 2, 3)]
    sc = Scenario(REG, REG, seed=fam, steps=1, depth=5, lefts=[_tails(fam)])
    r = drive_extension(sc)
    row = r.transcript[-1]
    assert row["method"] == "omega"
    seps = row["choices"]["separators"]
    assert [s["m"] for s in seps] == list(range(6))
    assert all(s["degree"] > s["m"] + 1 for s in seps)
    assert row["audit"]["unknown"] == 0


def test_scenario_words_left_over():
    with pytest.raises(GalleryError):
        drive_extension(Scenario(REG, REG, seed=[], steps=0, lefts=[power_word(REG)]))


def test_drive_deterministic():
    def run():
        F = finite_word([REG.letter(0, 1)])
        r = drive_extension(Scenario(REG, REG, seed=[F, power_word(REG)], steps=3))
        return json.dumps(r.transcript, sort_keys=True, default=str)
    assert run() == run()


def test_driven_collections_audit_clean_at_depth_6():
    F = finite_word([REG.letter(0, 1)])
    r = drive_extension(Scenario(REG, REG, seed=[F, power_word(REG)], steps=3))
    assert audit(r.collection, 6).unknown == 0
