import itertools
from fractions import Fraction

import pytest

import ellora.assertions as A
from ellora import syntax as sy
from ellora.hoare import SuiteConfig, VariantCert, falsify
from ellora.il import (
    Det,
    FollowsBin,
    FreshnessViolationError,
    ILAssn,
    ILJudgment,
    ILScript,
    Indep,
    embed_det,
    embed_il,
    embed_judgment,
    il_check,
    il_entails,
    il_step,
    norm_expr,
)
from ellora.interp import exec_dist
from ellora.parser import parse, parse_expr, parse_stmt
from ellora.subdist import SubDist, dirac

PROG = parse(
    "var x : int[0..6]\nvar y : int[0..6]\nvar c : int[0..6]\nvar b : bool\nskip"
)


def e(text):
    return parse_expr(text)


class TestEntailment:
    def test_anti_monotonicity(self):
        xi1 = ILAssn.of(Indep((e("x"), e("y"))))
        assert il_entails(PROG, xi1, ILAssn.of(Indep((e("x"),))))
        assert il_entails(PROG, xi1, ILAssn.of(Indep((e("y"),))))

    def test_singleton_always(self):
        assert il_entails(PROG, ILAssn.top(), ILAssn.of(Indep((e("x"),))))

    def test_binomial_sum_axiom(self):
        xi1 = ILAssn.of(
            FollowsBin(e("x"), e("1"), Fraction(1, 2)),
            FollowsBin(e("y"), e("2"), Fraction(1, 2)),
            Indep((e("x"), e("y"))),
        )
        assert il_entails(PROG, xi1, ILAssn.of(FollowsBin(e("x + y"), e("3"), Fraction(1, 2))))

    def test_sum_axiom_needs_matching_p(self):
        xi1 = ILAssn.of(
            FollowsBin(e("x"), e("1"), Fraction(1, 2)),
            FollowsBin(e("y"), e("2"), Fraction(1, 3)),
            Indep((e("x"), e("y"))),
        )
        assert not il_entails(PROG, xi1, ILAssn.of(FollowsBin(e("x + y"), e("3"), Fraction(1, 2))))

    def test_det_closure(self):
        xi1 = ILAssn.of(Det(e("x")), Det(e("y")))
        assert il_entails(PROG, xi1, ILAssn.of(Det(e("x + y"))))
        assert il_entails(PROG, xi1, ILAssn.of(Det(e("x * y + 1"))))
        assert not il_entails(PROG, xi1, ILAssn.of(Det(e("c"))))

    def test_det_self_indep(self):
        assert il_entails(PROG, ILAssn.of(Det(e("x"))), ILAssn.of(Indep((e("x"), e("x")))))
        assert il_entails(PROG, ILAssn.of(Indep((e("x"), e("x")))), ILAssn.of(Det(e("x"))))

    def test_bottom_entails_anything(self):
        assert il_entails(PROG, ILAssn.bot(), ILAssn.of(Det(e("c"))))

    def test_count_equivalence_by_enumeration(self):
        # j(j+1)/2 + (j+1) == (j+1)(j+2)/2 over the finite domain
        xi1 = ILAssn.of(FollowsBin(e("c"), e("y * (y + 1) div 2 + (y + 1)"), Fraction(1, 2)))
        goal = ILAssn.of(FollowsBin(e("c"), e("(y + 1) * (y + 2) div 2"), Fraction(1, 2)))
        assert il_entails(PROG, xi1, goal)


class TestSteps:
    def test_sample_step(self):
        xi = ILAssn.of(Indep((e("c"),)))
        out = il_step(PROG, parse_stmt("x ~ B(y, 1/2)", PROG), xi)
        assert il_entails(PROG, out, ILAssn.of(FollowsBin(e("x"), e("y"), Fraction(1, 2))))
        assert il_entails(PROG, out, ILAssn.of(Indep((e("c"), e("x")))))

    def test_sample_freshness_violation(self):
        with pytest.raises(FreshnessViolationError):
            il_step(PROG, parse_stmt("x ~ B(x, 1/2)", PROG), ILAssn.top())

    def test_assign_sum_step(self):
        xi = ILAssn.of(
            FollowsBin(e("x"), e("2"), Fraction(1, 2)),
            FollowsBin(e("c"), e("3"), Fraction(1, 2)),
            Indep((e("x"), e("c"))),
        )
        out = il_step(
            PROG,
            parse_stmt("c := c + x", PROG),
            xi,
            goal_pool=[FollowsBin(e("c"), e("5"), Fraction(1, 2))],
        )
        assert il_entails(PROG, out, ILAssn.of(FollowsBin(e("c"), e("5"), Fraction(1, 2))))

    def test_assign_constant_gives_det(self):
        out = il_step(PROG, parse_stmt("x := 0", PROG), ILAssn.top(), goal_pool=[Det(e("x"))])
        assert il_entails(PROG, out, ILAssn.of(Det(e("x"))))

    def test_counter_shift_preserves_det(self):
        xi = ILAssn.of(Det(e("y")))
        out = il_step(PROG, parse_stmt("y := y + 1", PROG), xi, goal_pool=[Det(e("y"))])
        assert il_entails(PROG, out, ILAssn.of(Det(e("y"))))


def binsum_program(n):
    return parse(
        f"""
var c : int[0..21]
var x : int[0..6]
c := 0
for j := 1 to {n} do {{
  x ~ B(j, 1/2)
  c := c + x
}}
"""
    )


class TestBinsum:
    @pytest.mark.parametrize("n,total", [(2, 3), (3, 6)])
    def test_unrolled_derivation(self, n, total):
        p = binsum_program(n)
        j = ILJudgment(
            ILAssn.top(), p.main, ILAssn.of(FollowsBin(e("c"), e(str(total)), Fraction(1, 2)))
        )
        rep = il_check(p, j)
        assert rep.ok, rep.reasons

    def test_exact_law_matches(self):
        p = binsum_program(3)
        out = exec_dist(p, p.main, dirac(p.initial_state())).dist
        law = out.bind(lambda m: dirac(m.get("c")))
        from math import comb

        assert law == SubDist({k: Fraction(comb(6, k), 64) for k in range(7)})

    def test_while_form_with_invariant(self):
        p = parse(
            """
var c : int[0..21]
var x : int[0..6]
var j : int[1..7]
c := 0
j := 1
while j <= 6 do {
  x ~ B(j, 1/2)
  c := c + x
  j := j + 1
}
"""
        )
        label = sy.stmt_loops(p.main)[0].label
        inv = ILAssn.of(
            FollowsBin(e("c"), e("(j - 1) * j div 2"), Fraction(1, 2)), Det(e("j"))
        )
        cert = VariantCert(A.SOp("max", (A.SOp("sub", (A.SLit(7), A.SProg("j"))), A.SLit(0))))
        script = ILScript({label: inv}, {label: cert})
        # the while rule concludes the invariant itself; the guard value at
        # exit is not part of this logic's assertions
        j = ILJudgment(ILAssn.top(), p.main, inv)
        rep = il_check(p, j, script)
        assert rep.ok, rep.reasons


class TestCondRule:
    def test_random_guard_rejected(self):
        p = parse(
            """
var b : bool
var x : bool
b ~ Ber(1/2)
if b then x ~ Ber(1/3) else x ~ Ber(2/3)
"""
        )
        j = ILJudgment(ILAssn.top(), p.main, ILAssn.of(Indep((parse_expr("x"),))))
        rep = il_check(p, j)
        assert not rep.ok
        assert any("deterministic" in r for r in rep.reasons)

    def test_det_guard_accepted(self):
        p = parse(
            """
var b : bool
var x : bool
b := false
if b then x ~ Ber(1/3) else x ~ Ber(1/3)
"""
        )
        j = ILJudgment(
            ILAssn.top(),
            p.main,
            ILAssn.of(FollowsBin(parse_expr("x"), parse_expr("1"), Fraction(1, 3))),
        )
        rep = il_check(p, j)
        assert rep.ok, rep.reasons


class TestEmbedding:
    def test_det_bool_translation(self):
        out = embed_det(PROG, e("b"))
        g = A.guard_assn(e("b"))
        assert out == A.POr(A.box(g), A.box(A.SNot(g)))

    def test_det_var_exists_translation(self):
        out = embed_det(PROG, e("x"))
        assert isinstance(out, A.PQuant) and out.kind == "exists"

    def test_top_translation(self):
        out = embed_il(PROG, ILAssn.top())
        assert out == A.PCmp(A.plit(0), "le", A.pr_(A.STrue()))

    def test_embedding_soundness_on_derived_judgments(self):
        p = binsum_program(2)
        j = ILJudgment(
            ILAssn.top(), p.main, ILAssn.of(FollowsBin(e("c"), e("3"), Fraction(1, 2)))
        )
        assert il_check(p, j).ok
        hj = embed_judgment(p, j)
        assert falsify(p, hj, cfg=SuiteConfig(max_dirac=16)) is None

    def test_axiom_validity_semantically(self):
        # each axiom instance holds under the embedding on small domains
        p = parse("var u : bool\nvar w : bool\nskip")
        base = p.initial_state()
        dists = []
        states = [
            base.set_many({"u": a, "w": b}) for a in (False, True) for b in (False, True)
        ]
        dists.append(SubDist({m: Fraction(1, 4) for m in states}))
        dists.append(dirac(states[0]))
        dists.append(SubDist({states[0]: Fraction(1, 2), states[3]: Fraction(1, 2)}))
        for mu in dists:
            # independence of singletons
            assert A.holds(embed_il(p, ILAssn.of(Indep((parse_expr("u"),)))), {}, mu) is A.TRUE
            # anti-monotonicity
            pair = embed_il(p, ILAssn.of(Indep((parse_expr("u"), parse_expr("w")))))
            single = embed_il(p, ILAssn.of(Indep((parse_expr("u"),))))
            assert A.v_imp(A.holds(pair, {}, mu), A.holds(single, {}, mu)) is not A.FALSE
            # det(u) iff indep{u, u}
            det_side = embed_il(p, ILAssn.of(Det(parse_expr("u"))))
            ind_side = embed_il(p, ILAssn.of(Indep((parse_expr("u"), parse_expr("u")))))
            assert A.holds(det_side, {}, mu) is A.holds(ind_side, {}, mu)

    def test_step_monotone(self):
        s = parse_stmt("c := c + x", PROG)
        xi1 = ILAssn.of(
            FollowsBin(e("x"), e("1"), Fraction(1, 2)),
            FollowsBin(e("c"), e("1"), Fraction(1, 2)),
            Indep((e("x"), e("c"))),
            Det(e("y")),
        )
        xi2 = ILAssn.of(Det(e("y")))
        assert il_entails(PROG, xi1, xi2)
        out1 = il_step(PROG, s, xi1, goal_pool=[Det(e("y"))])
        out2 = il_step(PROG, s, xi2, goal_pool=[Det(e("y"))])
        assert il_entails(PROG, out1, out2)
