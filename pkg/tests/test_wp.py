import itertools
import random
from fractions import Fraction

import pytest

import ellora.assertions as A
from ellora import syntax as sy
from ellora.assert_syntax import parse_passn, print_passn
from ellora.interp import exec_dist
from ellora.parser import parse, parse_expr, parse_stmt
from ellora.subdist import State, SubDist, dirac
from ellora.wp import NotLoopFreeError, is_loop_free, prem, verify_pc, wpre


PROG = parse("var x : int[0..2]\nvar y : int[0..2]\nvar b : bool\nskip")


def passn(text, prog=PROG):
    return parse_passn(text, prog)


def stmt(text, prog=PROG):
    return parse_stmt(text, prog)


def st(**kw):
    base = {"x": 0, "y": 0, "b": False}
    base.update(kw)
    return State(base)


class TestPrem:
    def test_assign(self):
        p = passn("E[x] = v").lhs
        out = prem(stmt("x := x + 1"), p, PROG)
        assert out == passn("E[x + 1] = v").lhs

    def test_abort_is_zero(self):
        p = passn("Pr[x = 0] = v").lhs
        assert prem(stmt("abort"), p, PROG) == A.plit(0)

    def test_skip(self):
        p = passn("E[x] = v").lhs
        assert prem(stmt("skip"), p, PROG) == p

    def test_conditional_guard_split(self):
        # on uniform x in {0,1}: E[y after (if x = 0 then y := 1 else y := 2)]
        # equals 1/2 + 1 = 3/2
        s = stmt("if x = 0 then y := 1 else y := 2")
        p = passn("E[y] = v").lhs
        out = prem(s, p, PROG)
        mu = SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 2)})
        assert A.eval_pexpr(out, {}, mu) == Fraction(3, 2)

    def test_homomorphic_through_ops(self):
        s = stmt("x := x + 1")
        p = passn("E[x] + E[y] <= v").lhs
        out = prem(s, p, PROG)
        assert out == passn("E[x + 1] + E[y] <= v").lhs

    def test_linearity_syntactic(self):
        s = stmt("x := x + 1")
        p1 = passn("E[x] = v").lhs
        p2 = passn("E[y] = v").lhs
        assert prem(s, A.POp("add", (p1, p2)), PROG) == A.POp(
            "add", (prem(s, p1, PROG), prem(s, p2, PROG))
        )


class TestWpre:
    def test_substitution_case(self):
        out = wpre(stmt("x := x + 1"), passn("E[x] <= 5"), PROG)
        assert out == passn("E[x + 1] <= 5")

    def test_skip_identity(self):
        eta = passn("Pr[x = 1] <= 1/2 /\\ L")
        assert wpre(stmt("skip"), eta, PROG) == eta

    def test_sample_clause(self):
        out = wpre(stmt("b ~ Ber(1/2)"), passn("Pr[b] = v"), PROG)
        lhs = out.lhs
        assert isinstance(lhs, A.PEx) and isinstance(lhs.body, A.SExpect)
        assert A.eval_pexpr(lhs, {}, dirac(st())) == Fraction(1, 2)

    def test_rejects_splits(self):
        eta = passn("L (+) L")
        with pytest.raises(A.UnsupportedSplitError):
            wpre(stmt("skip"), eta, PROG)

    def test_rejects_loops(self):
        with pytest.raises(NotLoopFreeError):
            wpre(stmt("while b do skip"), passn("L"), PROG)

    def test_quantifier_commutes(self):
        eta = passn("forall v in int[0..2]. Pr[x = v] <= 1/2")
        out = wpre(stmt("x := y"), eta, PROG)
        assert out == passn("forall v in int[0..2]. Pr[y = v] <= 1/2")


CALL_PROG = parse(
    """
var r : int[0..9]
var g : int[0..9]
proc bump(a : int[0..9]) {
  g := g + 1
  return a + g
}
r := call bump(2)
"""
)


class TestCalls:
    def test_loop_free_sees_through_calls(self):
        assert is_loop_free(CALL_PROG.main, CALL_PROG)

    def test_call_precondition(self):
        eta = parse_passn("E[r] <= 4", CALL_PROG)
        pre = wpre(CALL_PROG.main, eta, CALL_PROG)
        m = CALL_PROG.initial_state()
        out = exec_dist(CALL_PROG, CALL_PROG.main, dirac(m)).dist
        assert A.holds(pre, {}, dirac(m)) is A.holds(eta, {}, out)


class TestVerifyPC:
    def test_simple_cases(self):
        rep = verify_pc(stmt("x := x + 1"), passn("E[x] <= 5"), [dirac(st(x=1))], PROG)
        assert rep.ok() and rep.checked == 1

    def test_abort_case(self):
        rep = verify_pc(stmt("abort"), passn("Pr[true] = 0"), [dirac(st())], PROG)
        assert rep.ok()

    def test_randomized_oracle_equivalence(self):
        rng = random.Random(23)
        stmts = [
            "x := 0",
            "x := y; y := (x + 1) mod 3",
            "x ~ U[0 .. 2]",
            "b ~ Ber(1/3); if b then x := 1 else x := 2",
            "if x = y then b := true else b ~ Ber(1/2)",
            "abort",
            "if b then abort else x ~ U[0 .. 2]",
        ]
        etas = [
            "E[x] <= 1",
            "Pr[x = y] = 1/2",
            "L",
            "[] (x <= 2)",
            "Pr[b] <= Pr[x = 0]",
            "forall v in int[0..2]. Pr[x = v] <= 2/3",
        ]
        inputs = []
        for _ in range(6):
            pairs = []
            rem = 8
            for _ in range(3):
                q = rng.randint(1, max(rem, 1))
                rem -= q
                if rem < 0:
                    break
                pairs.append(
                    (st(x=rng.randint(0, 2), y=rng.randint(0, 2), b=rng.random() < 0.5), Fraction(q, 8))
                )
            inputs.append(SubDist.from_pairs(pairs))
        for s_text, e_text in itertools.product(stmts, etas):
            rep = verify_pc(stmt(s_text), passn(e_text), inputs, PROG)
            assert rep.ok(), (s_text, e_text, rep.divergences[0])
