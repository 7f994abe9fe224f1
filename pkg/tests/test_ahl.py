from fractions import Fraction

import pytest

import ellora.assertions as A
from ellora import syntax as sy
from ellora.ahl import (
    AHLJudgment,
    AhlAssgn,
    AhlConseq,
    AhlSample,
    AhlSeq,
    AhlSkip,
    AhlWhile,
    BetaTooSmallError,
    ahl_apply,
    ahl_check,
    ahl_falsify,
    embed_ahl,
    sample_required_beta,
)
from ellora.assert_syntax import parse_sassn
from ellora.hoare import CheckContext, SuiteConfig, VariantCert, falsify
from ellora.parser import parse, parse_stmt

PROG = parse("var x : bool\nvar y : bool\nvar n : int[0..3]\nskip")


def sassn(text, prog=PROG):
    return parse_sassn(text, prog)


def stmt(text, prog=PROG):
    return parse_stmt(text, prog)


def ctx_for(prog):
    return CheckContext(prog, SuiteConfig(), {}, ())


class TestRules:
    def test_seq_adds_budgets(self):
        s = stmt("x ~ Ber(1/10); y ~ Ber(1/10)")
        j = AHLJudgment(Fraction(1, 5), sassn("true"), s, sassn("x \\/ y"))
        node = AhlSeq(Fraction(1, 10), Fraction(1, 10), sassn("x"), None, None)
        obs, premises, _ = ahl_apply(node, j, PROG, ctx_for(PROG))
        assert premises[0].beta == Fraction(1, 10)
        assert all(ob.status in ("proved", "tested") for ob in obs)

    def test_seq_budget_too_small(self):
        s = stmt("x ~ Ber(1/10); y ~ Ber(1/10)")
        j = AHLJudgment(Fraction(1, 10), sassn("true"), s, sassn("x \\/ y"))
        node = AhlSeq(Fraction(1, 10), Fraction(1, 10), sassn("x"), None, None)
        with pytest.raises(BetaTooSmallError):
            ahl_apply(node, j, PROG, ctx_for(PROG))

    def test_while_multiplies(self):
        p = parse("var n : int[0..3]\nvar x : bool\nwhile n < 3 do { x ~ Ber(1/8); n := n + 1 }")
        loop = sy.stmt_loops(p.main)[0]
        cert = VariantCert(A.SOp("max", (A.SOp("sub", (A.SLit(3), A.SProg("n"))), A.SLit(0))))
        inv = parse_sassn("true", p)
        j = AHLJudgment(
            Fraction(3, 8), inv, p.main, A.SAnd(inv, A.SNot(A.guard_assn(loop.cond)))
        )
        node = AhlWhile(3, Fraction(1, 8), cert, None)
        obs, premises, _ = ahl_apply(node, j, p, ctx_for(p))
        assert premises[0].beta == Fraction(1, 8)

    def test_sample_exact_tail(self):
        s = stmt("x ~ Ber(1/10)")
        required = sample_required_beta(
            PROG, s, sassn("true"), sassn("not x"), [PROG.initial_state()]
        )
        assert required == Fraction(1, 10)
        j = AHLJudgment(Fraction(1, 10), sassn("true"), s, sassn("not x"))
        obs, _, _ = ahl_apply(AhlSample(), j, PROG, ctx_for(PROG))
        assert obs[0].status == "tested"

    def test_sample_beta_too_small(self):
        s = stmt("x ~ Ber(1/10)")
        j = AHLJudgment(Fraction(1, 20), sassn("true"), s, sassn("not x"))
        with pytest.raises(BetaTooSmallError) as e:
            ahl_apply(AhlSample(), j, PROG, ctx_for(PROG))
        assert e.value.required == Fraction(1, 10)

    def test_assgn_zero_budget(self):
        s = stmt("n := 0")
        j = AHLJudgment(Fraction(0), sassn("true"), s, sassn("n = 0"))
        obs, _, _ = ahl_apply(AhlAssgn(), j, PROG, ctx_for(PROG))
        assert all(ob.status == "tested" for ob in obs)


class TestCheckAndEmbed:
    def test_two_coin_union_bound(self):
        # two Ber(1/10) coins: the union bound proves both-false with
        # budget 1/5; exact failure probability is 19/100 <= 1/5
        s = stmt("x ~ Ber(1/10); y ~ Ber(1/10)")
        j = AHLJudgment(Fraction(1, 5), sassn("true"), s, sassn("not x /\\ not y"))
        script = AhlSeq(
            Fraction(1, 10),
            Fraction(1, 10),
            sassn("not x"),
            AhlSample(),
            AhlSample(),
        )
        rep = ahl_check(PROG, j, script)
        assert rep.verdict == "certified", [
            (ob.oid, ob.status, ob.detail) for ob in rep.obligations if ob.status != "tested"
        ]

    def test_union_bound_at_least_exact(self):
        s = stmt("x ~ Ber(1/10); y ~ Ber(1/10)")
        from ellora.interp import exec_dist
        from ellora.subdist import dirac

        out = exec_dist(PROG, s, dirac(PROG.initial_state())).dist
        exact_fail = out.pr(lambda m: m.get("x") or m.get("y"))
        assert exact_fail == Fraction(19, 100) <= Fraction(1, 5)

    def test_embedding_is_dclosed_and_valid(self):
        s = stmt("x ~ Ber(1/10)")
        j = AHLJudgment(Fraction(1, 10), sassn("true"), s, sassn("not x"))
        hj = embed_ahl(j)
        assert A.classify_closedness(hj.post).d_closed == "yes"
        assert falsify(PROG, hj) is None

    def test_embedding_beta_zero(self):
        s = stmt("n := 0")
        j = AHLJudgment(Fraction(0), sassn("true"), s, sassn("n = 0"))
        hj = embed_ahl(j)
        assert hj.post == A.PCmp(A.pr_(A.SNot(sassn("n = 0"))), "le", A.plit(0))
        assert falsify(PROG, hj) is None

    def test_falsify_finds_bad_budget(self):
        s = stmt("x ~ Ber(1/2)")
        j = AHLJudgment(Fraction(1, 10), sassn("true"), s, sassn("not x"))
        assert ahl_falsify(PROG, j) is not None

    def test_tested_premises_without_scripts(self):
        s = stmt("x ~ Ber(1/10); y ~ Ber(1/10)")
        j = AHLJudgment(Fraction(1, 5), sassn("true"), s, sassn("not x /\\ not y"))
        script = AhlSeq(Fraction(1, 10), Fraction(1, 10), sassn("not x"), None, None)
        rep = ahl_check(PROG, j, script)
        assert rep.verdict == "certified"
