import itertools
import random
from fractions import Fraction

import pytest

import ellora.assertions as A
from ellora import syntax as sy
from ellora.assert_syntax import parse_passn, parse_sassn, parse_sexpr, print_passn
from ellora.interp import exec_dist
from ellora.parser import parse, parse_expr
from ellora.subdist import State, SubDist, dirac, null
from ellora.values import BoolSort, IntRangeSort

from ellora.assertions import (
    FALSE,
    TRUE,
    UNKNOWN,
    EventWitness,
    PairWitness,
    classify_closedness,
    eval_pexpr,
    eval_sexpr,
    holds,
    samp_subst,
    subst_prog,
)


PROG = parse(
    """
var x : int[0..2]
var y : int[0..2]
var b : bool
skip
"""
)


def passn(text):
    return parse_passn(text, PROG)


def st(**kw):
    base = {"x": 0, "y": 0, "b": False}
    base.update(kw)
    return State(base)


def uniform_bit():
    return SubDist({st(x=0): Fraction(1, 2), st(x=1): Fraction(1, 2)})


class TestEvalSExpr:
    def test_indicator(self):
        se = parse_sexpr("ind(x = 0)", PROG)
        assert eval_sexpr(se, {}, st(x=0)) == 1
        assert eval_sexpr(se, {}, st(x=1)) == 0

    def test_logical_plus_program(self):
        se = parse_sexpr("x + v", PROG)
        assert eval_sexpr(se, {"v": 2}, st(x=1)) == 3

    def test_expectation_binder(self):
        se = parse_sexpr("E[v ~ Ber(1/2)](ind(v = true))", PROG)
        assert eval_sexpr(se, {}, st()) == Fraction(1, 2)

    def test_binder_sees_state(self):
        se = parse_sexpr("E[v ~ U[0 .. x]](v)", PROG)
        assert eval_sexpr(se, {}, st(x=2)) == 1  # mean of uniform over 0..2


class TestEvalPExpr:
    def test_expectation(self):
        mu = SubDist({st(x=1): Fraction(1, 2), st(x=2): Fraction(1, 2)})
        p = passn("E[x] = v").lhs
        assert eval_pexpr(p, {}, mu) == Fraction(3, 2)

    def test_null_dist(self):
        p = A.pr_(A.STrue())
        assert eval_pexpr(p, {}, null()) == 0

    def test_dirac_indicator(self):
        p = A.pr_(parse_sassn("x = 1", PROG))
        assert eval_pexpr(p, {}, dirac(st(x=1))) == 1


class TestHolds:
    def test_simple_probability(self):
        assert holds(passn("Pr[x = 1] = 1/2"), {}, uniform_bit()) is TRUE
        assert holds(passn("Pr[x = 1] = 1/3"), {}, uniform_bit()) is FALSE

    def test_quantifier_enumeration(self):
        eta = passn("forall v in int[1..2]. Pr[x = v] <= 1/2")
        mu = SubDist({st(x=1): Fraction(1, 2), st(x=2): Fraction(1, 2)})
        assert holds(eta, {}, mu) is TRUE
        expanded = A.PAnd(
            A.subst_logvar(eta.body, "v", 1), A.subst_logvar(eta.body, "v", 2)
        )
        assert holds(expanded, {}, mu) is TRUE

    def test_split_with_event_witness(self):
        eta = passn("[] (x = 0) (+) [] (not (x = 0)) witness (x = 0)")
        assert holds(eta, {}, uniform_bit()) is TRUE

    def test_split_without_witness_unknown(self):
        eta = passn("[] (x = 0) (+) [] (not (x = 0))")
        assert holds(eta, {}, uniform_bit()) is UNKNOWN

    def test_split_with_pair_witness(self):
        mu = uniform_bit()
        w = PairWitness(
            mu.restrict(lambda m: m.get("x") == 0), mu.restrict(lambda m: m.get("x") != 0)
        )
        eta = A.PSplit(passn("Pr[x = 0] = 1/2"), passn("Pr[x = 1] = 1/2"), w)
        assert holds(eta, {}, mu) is TRUE

    def test_bad_pair_witness_unknown(self):
        eta = A.PSplit(passn("true"), passn("true"), PairWitness(uniform_bit(), uniform_bit()))
        assert holds(eta, {}, uniform_bit()) is UNKNOWN

    def test_division_by_zero_unknown(self):
        eta = passn("E[x] / Pr[x = 5] <= 1")
        assert holds(eta, {}, uniform_bit()) is UNKNOWN

    def test_box(self):
        assert holds(passn("[] (x = 0)"), {}, dirac(st(x=0))) is TRUE
        assert holds(passn("[] (x = 0)"), {}, uniform_bit()) is FALSE
        assert holds(passn("[] (false)"), {}, null()) is TRUE

    def test_lossless_assn(self):
        assert holds(passn("L"), {}, uniform_bit()) is TRUE
        assert holds(passn("L"), {}, uniform_bit().scale(Fraction(1, 2))) is FALSE


class TestDerivedForms:
    def test_indep_product_law(self):
        mu = SubDist(
            {st(x=i, y=j): Fraction(1, 4) for i in range(2) for j in range(2)}
        )
        assert holds(passn("indep{x, y}"), {}, mu) is TRUE
        corr = SubDist({st(x=0, y=0): Fraction(1, 2), st(x=1, y=1): Fraction(1, 2)})
        assert holds(passn("indep{x, y}"), {}, corr) is FALSE

    def test_indep_matches_expansion(self):
        rng = random.Random(5)
        sorts = [IntRangeSort(0, 1), IntRangeSort(0, 1)]
        node = passn("indep{x, y}")
        expanded = A.indep_expanded(node.exprs, sorts)
        for _ in range(40):
            pairs = {}
            rem = 8
            for i in range(2):
                for j in range(2):
                    q = rng.randint(0, rem)
                    pairs[st(x=i, y=j)] = Fraction(q, 8)
                    rem -= q
            mu = SubDist(pairs)
            assert holds(node, {}, mu) is holds(expanded, {}, mu)

    def test_indep_self_iff_det(self):
        # on boolean x under full weight: indep{x, x} iff x is deterministic
        det = dirac(st(b=True))
        mixed = SubDist({st(b=True): Fraction(1, 2), st(b=False): Fraction(1, 2)})
        eta = passn("indep{b, b}")
        det_form = passn("[] (b) \\/ [] (not b)")
        for mu in (det, mixed):
            assert holds(eta, {}, mu) is holds(det_form, {}, mu)

    def test_follows(self):
        p = parse("var c : int[0..6]\nc ~ B(3, 1/2)")
        out = exec_dist(p, p.main, dirac(p.initial_state())).dist
        assert holds(parse_passn("c ~ B(3, 1/2)", p), {}, out) is TRUE
        assert holds(parse_passn("c ~ B(2, 1/2)", p), {}, out) is FALSE

    def test_charac(self):
        mu = uniform_bit()
        assert holds(A.charac(mu), {}, mu) is TRUE
        assert holds(A.charac(mu), {}, dirac(st())) is FALSE


class TestSubstitution:
    def test_subst_prog_example(self):
        eta = passn("E[x] <= 5")
        out = subst_prog(eta, "x", parse_expr("x + 1"))
        assert out == passn("E[x + 1] <= 5")

    def test_subst_not_free(self):
        eta = passn("Pr[y = 0] = 1")
        assert subst_prog(eta, "x", parse_expr("0")) == eta

    def test_subst_under_quantifier(self):
        eta = passn("forall v in int[0..2]. Pr[x = v] <= c")
        out = subst_prog(eta, "x", parse_expr("0"))
        assert out == passn("forall v in int[0..2]. Pr[0 = v] <= c")

    def test_substitution_soundness(self):
        # holds(subst(eta, x, e), mu) iff holds(eta, exec(x := e, mu))
        rng = random.Random(11)
        exprs = ["x + 1", "0", "y", "x * 2"]
        etas = ["E[x] <= 2", "Pr[x = 1] = 1/2", "[] (x <= y)", "Pr[x = y] <= 3/4"]
        prog = parse("var x : int[0..4]\nvar y : int[0..2]\nskip")
        for _ in range(120):
            e = parse_expr(rng.choice(exprs))
            eta = parse_passn(rng.choice(etas), prog)
            pairs = {}
            rem = 6
            for i in range(3):
                q = rng.randint(0, rem)
                m = State({"x": rng.randint(0, 2), "y": rng.randint(0, 2)})
                pairs[m] = pairs.get(m, Fraction(0)) + Fraction(q, 6)
                rem -= q
            mu = SubDist(pairs)
            stmt = sy.Assign("x", e)
            out = exec_dist(prog, stmt, mu).dist
            assert holds(subst_prog(eta, "x", e), {}, mu) is holds(eta, {}, out)

    def test_samp_subst_shape(self):
        eta = passn("Pr[x = 1]= v")
        g = sy.BernoulliD(sy.Lit(Fraction(1, 2)))
        out = samp_subst(eta, "x", g)
        lhs = out.lhs
        assert isinstance(lhs, A.PEx) and isinstance(lhs.body, A.SExpect)

    def test_samp_subst_constant_integrand(self):
        # substituting into Pr[b] with a fair coin gives weight/2 on any mu
        eta = passn("Pr[b] = v")
        g = sy.BernoulliD(sy.Lit(Fraction(1, 2)))
        out = samp_subst(eta, "b", g)
        for mu in (uniform_bit(), dirac(st()), uniform_bit().scale(Fraction(1, 3))):
            got = eval_pexpr(out.lhs, {}, mu)
            assert got == mu.weight() / 2

    def test_samp_subst_not_free(self):
        eta = passn("Pr[y = 1] = v")
        g = sy.BernoulliD(sy.Lit(Fraction(1, 2)))
        assert samp_subst(eta, "x", g) == eta

    def test_sampling_soundness(self):
        rng = random.Random(13)
        prog = parse("var x : int[0..3]\nvar y : int[0..3]\nskip")
        prog_bool = parse("var x : bool\nvar y : int[0..3]\nskip")
        int_gs = [
            sy.UniformRangeD(sy.Lit(0), sy.Lit(3)),
            sy.UniformRangeD(sy.Lit(0), sy.Var("y")),
            sy.BinomialD(sy.Lit(3), Fraction(1, 2)),
        ]
        int_etas = ["E[x] <= 2", "Pr[x = 1] <= 1/2", "Pr[x = y] = p"]
        bool_gs = [sy.BernoulliD(sy.Lit(Fraction(1, 3)))]
        bool_etas = ["Pr[x] <= 1/2", "Pr[x \\/ y = 1] = p"]
        for _ in range(120):
            if rng.random() < 0.5:
                pg, g = prog, rng.choice(int_gs)
                eta = parse_passn(rng.choice(int_etas), pg)
            else:
                pg, g = prog_bool, rng.choice(bool_gs)
                eta = parse_passn(rng.choice(bool_etas), pg)
            base = pg.initial_state()
            pairs = {}
            rem = 4
            for i in range(2):
                q = rng.randint(0, rem)
                m = base.set("y", rng.randint(0, 3))
                pairs[m] = pairs.get(m, Fraction(0)) + Fraction(q, 4)
                rem -= q
            mu = SubDist(pairs)
            stmt = sy.Sample("x", g)
            out = exec_dist(pg, stmt, mu).dist
            rho = {"p": Fraction(1, 4)}
            assert holds(samp_subst(eta, "x", g), rho, mu) is holds(eta, rho, out)

    def test_cond_restrict(self):
        pr_top = A.pr_(A.STrue())
        out = A.cond_restrict(pr_top, parse_expr("x = 0"))
        mu = uniform_bit()
        assert eval_pexpr(out, {}, mu) == Fraction(1, 2)
        ex = passn("E[x] = v").lhs
        mu2 = SubDist({st(x=1): Fraction(1, 2), State({"x": -1, "y": 0, "b": False}): Fraction(1, 2)})
        prog2 = parse("var x : int[-1..1]\nvar y : int[0..2]\nvar b : bool\nskip")
        restricted = A.cond_restrict(ex, parse_expr("x > 0"))
        assert eval_pexpr(restricted, {}, mu2) == Fraction(1, 2)
        with pytest.raises(A.NotExpectationFormError):
            A.cond_restrict(A.plit(1), parse_expr("x = 0"))

    def test_cond_restrict_false_event(self):
        out = A.cond_restrict(A.pr_(A.STrue()), parse_expr("false"))
        assert eval_pexpr(out, {}, uniform_bit()) == 0


class TestClosedness:
    def test_d_closed_probability_bound(self):
        c = classify_closedness(passn("Pr[x = 1] <= 1/4"))
        assert c.d_closed == "yes" and c.t_closed == "yes" and c.u_closed == "yes"

    def test_box_d_closed(self):
        c = classify_closedness(passn("[] (x = 0)"))
        assert c.d_closed == "yes"

    def test_indep_t_closed_not_d(self):
        c = classify_closedness(passn("indep{x, y}"))
        assert c.t_closed == "yes" and c.d_closed == "unknown"

    def test_strict_comparison_unknown(self):
        c = classify_closedness(passn("Pr[x = 1] < 1/2"))
        assert c.t_closed == "unknown" and c.u_closed == "unknown"

    def test_lossless_t_not_d(self):
        c = classify_closedness(passn("L"))
        assert c.t_closed == "yes" and c.d_closed == "unknown"

    def test_quantified_family_d_closed(self):
        eta = passn("forall k in int[0..4]. Pr[x = 1 /\\ y <= k] <= k * (k - 1) / 8")
        # division by the constant 8 blocks the syntactic rule; write it
        # multiplicatively instead
        eta2 = passn("forall k in int[0..4]. 8 * Pr[x = 1 /\\ y <= k] <= k * (k - 1)")
        assert classify_closedness(eta2).d_closed == "unknown"  # lhs not a bare E[...]
        eta3 = passn("forall k in int[0..4]. Pr[x = 1 /\\ y <= k] <= k * (k - 1) * q")
        assert classify_closedness(eta3).d_closed == "yes"

    def test_division_blocks_t(self):
        c = classify_closedness(passn("E[x] / E[y] <= 1"))
        assert c.t_closed == "unknown"

    def test_d_closed_downward_semantics(self):
        # spot-check the semantic contract on random restrictions/scalings
        rng = random.Random(17)
        etas = [passn("Pr[x = 1] <= 1/4"), passn("[] (x <= 1)"), passn("Pr[b] = 0")]
        for eta in etas:
            assert classify_closedness(eta).d_closed == "yes"
            for _ in range(60):
                pairs = {
                    st(x=rng.randint(0, 2), b=rng.choice([True, False])): Fraction(1, 8)
                    for _ in range(rng.randint(1, 5))
                }
                mu = SubDist(pairs)
                if holds(eta, {}, mu) is not TRUE:
                    continue
                smaller = mu.scale(Fraction(rng.randint(0, 4), 4)).restrict(
                    lambda m: rng.random() < 0.8
                )
                assert holds(eta, {}, smaller) is TRUE

    def test_t_closed_finite_surrogate(self):
        # a stabilizing sequence satisfying a t-closed assertion satisfies it
        # at the stable limit element
        eta = passn("Pr[x = 1] <= 1/2")
        seq = [
            SubDist({st(x=1): Fraction(k, 2 * k + 2)}) for k in range(1, 6)
        ] + [SubDist({st(x=1): Fraction(1, 2)})] * 3
        assert all(holds(eta, {}, mu) is TRUE for mu in seq)
        assert holds(eta, {}, seq[-1]) is TRUE


class TestRoundTrip:
    CASES = [
        "Pr[x = 1] = 1/2",
        "E[x + y] <= 5",
        "L",
        "[] (x = 0)",
        "[] (not (x = 0 /\\ b))",
        "Pr[x = 0] <= 1/4 /\\ Pr[y = 0] <= 1/4",
        "[] (x = 0) (+) [] (not (x = 0)) witness (x = 0)",
        "indep{x, y}",
        "x + y ~ B(3, 1/2)",
        "forall v in int[0..2]. Pr[x = v] <= 1/2",
        "exists v in int[0..2]. Pr[x = v] = 0 => L",
        "E[ind(x = 0) * ind(y = 0)] = Pr[x = 0] * Pr[y = 0]",
        "E[E[v ~ Ber(1/2)](ind(v = b))] = 1/2",
        "not (Pr[x = 1] < 1/2)",
        "min(Pr[b], 1/2) <= max(Pr[b], 1/3)",
        "E[x] - E[y] <= v / 2",
        "forall k in int[0..4]. Pr[b /\\ x <= k] <= k * (k - 1) * q",
        "E[(x = 0) ? y : 0] <= 2",
        "E[size(inter({1, 2}, {2}))] = 1",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_parse_print_parse(self, text):
        eta = passn(text)
        assert parse_passn(print_passn(eta), PROG) == eta

    def test_pr_notation_is_expectation_of_indicator(self):
        eta = passn("Pr[x = 1] = 1/2")
        assert eta.lhs == A.PEx(A.SInd(parse_sassn("x = 1", PROG)))
