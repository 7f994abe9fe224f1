from fractions import Fraction

import pytest

from ellora import syntax as sy
from ellora.interp import (
    AdvBinding,
    AdvRestrictionError,
    Budget,
    DomainEscapeError,
    NoAdvBindingError,
    check_lossless,
    detect_ct,
    eval_dexpr,
    eval_expr,
    exec_dist,
    exec_state,
    syntactically_lossless,
    validate_binding,
)
from ellora.parser import parse, parse_expr, parse_stmt
from ellora.subdist import State, SubDist, dirac, null


def prog(src):
    p = parse(src)
    assert sy.well_formed(p) == [], sy.well_formed(p)
    return p


def init(p, **overrides):
    m = p.initial_state()
    return m.set_many(overrides) if overrides else m


class TestEvalExpr:
    def test_arith(self):
        assert eval_expr(parse_expr("x + 1"), State({"x": 2})) == 3

    def test_conditional(self):
        m = State({"b": True, "x": 5})
        assert eval_expr(parse_expr("b ? x : x div 0"), m) == 5

    def test_xor(self):
        m = State({"x": True, "y": True})
        assert eval_expr(parse_expr("x xor y"), m) is False

    def test_div_by_zero(self):
        with pytest.raises(sy.DivByZeroError):
            eval_expr(parse_expr("1 / x"), State({"x": 0}))

    def test_sets_and_maps(self):
        from ellora.values import MapVal

        m = State({"s": frozenset({1, 2}), "h": MapVal.from_pairs([(0, 3)])})
        assert eval_expr(parse_expr("size(s)"), m) == 2
        assert eval_expr(parse_expr("1 in s"), m) is True
        assert eval_expr(parse_expr("codom(h)"), m) == frozenset({3})
        assert eval_expr(parse_expr("h[0]"), m) == 3


class TestEvalDExpr:
    def test_bernoulli(self):
        d = eval_dexpr(sy.BernoulliD(sy.Lit(Fraction(1, 3))), State({}))
        assert d == SubDist({True: Fraction(1, 3), False: Fraction(2, 3)})

    def test_binomial_pmf(self):
        d = eval_dexpr(sy.BinomialD(sy.Lit(2), Fraction(1, 2)), State({}))
        assert d == SubDist({0: Fraction(1, 4), 1: Fraction(1, 2), 2: Fraction(1, 4)})

    def test_uniform_range(self):
        d = eval_dexpr(sy.UniformRangeD(sy.Lit(1), sy.Lit(4)), State({}))
        assert d.weight() == 1 and all(q == Fraction(1, 4) for _, q in d.items())

    def test_bad_param(self):
        with pytest.raises(sy.BadParamError):
            eval_dexpr(sy.BernoulliD(sy.Lit(Fraction(3, 2))), State({}))

    def test_subunit_table(self):
        d = eval_dexpr(sy.TableD(((0, Fraction(1, 3)), (1, Fraction(1, 3)))), State({}))
        assert d.weight() == Fraction(2, 3)


class TestExec:
    def test_abort_is_null(self):
        p = prog("var x : int[0..1]\nabort")
        assert exec_state(p, p.main, init(p)).dist == null()

    def test_sample_bernoulli(self):
        p = prog("var x : bool\nx ~ Ber(1/2)")
        out = exec_state(p, p.main, init(p)).dist
        assert out == SubDist(
            {init(p).set("x", True): Fraction(1, 2), init(p).set("x", False): Fraction(1, 2)}
        )

    def test_counter_loop_fixpoint(self):
        p = prog("var x : int[0..2]\nwhile x < 2 do x := x + 1")
        res = exec_state(p, p.main, init(p))
        assert res.dist == dirac(init(p).set("x", 2))
        assert res.weight_gap == 0 and res.loops_truncated == ()

    def test_geometric_truncation(self):
        p = prog("var b : bool\nwhile b do b ~ Ber(1/2)")
        m = init(p, b=True)
        for budget in (4, 10):
            res = exec_state(p, p.main, m, budget=Budget(max_loop_unrollings=budget))
            assert res.dist.weight() == 1 - Fraction(1, 2**budget)
            assert res.weight_gap == Fraction(1, 2**budget)
            assert res.loops_truncated == ("w1",)

    def test_divergent_loop_detected_as_genuine(self):
        p = prog("var x : int[0..1]\nwhile x = 0 do skip")
        res = exec_state(p, p.main, init(p))
        assert res.dist == null()
        assert res.weight_gap == 0  # stall detected: loss is genuine, not truncation

    def test_lifted_exec_matches_per_state(self):
        p = prog("var x : int[0..3]\nif x < 2 then x := x + 1 else x ~ U[0 .. 3]")
        mu = SubDist({init(p, x=0): Fraction(1, 2), init(p, x=2): Fraction(1, 2)})
        lifted = exec_dist(p, p.main, mu).dist
        bound = mu.bind(lambda m: exec_state(p, p.main, m).dist)
        assert lifted == bound

    def test_conditional_split_law(self):
        p = prog("var x : int[0..3]\nif x < 2 then x := x + 1 else x := 0")
        mu = SubDist({init(p, x=i): Fraction(1, 4) for i in range(4)})
        guard = lambda m: m.get("x") < 2
        direct = exec_dist(p, p.main, mu).dist
        s = sy.seq_list(p.main)[0]
        split = exec_dist(p, s.then, mu.restrict(guard)).dist.add(
            exec_dist(p, s.orelse, mu.restrict(lambda m: not guard(m))).dist
        )
        assert direct == split

    def test_weight_monotone_and_linear(self):
        p = prog("var x : int[0..3]\nif x = 0 then abort else x ~ U[0 .. 3]")
        mu = SubDist({init(p, x=i): Fraction(1, 8) for i in range(4)})
        res = exec_dist(p, p.main, mu)
        assert res.dist.weight() <= mu.weight()
        half = mu.scale(Fraction(1, 2))
        assert exec_dist(p, p.main, half.add(half)).dist == exec_dist(
            p, p.main, half
        ).dist.add(exec_dist(p, p.main, half).dist)

    def test_domain_escape(self):
        p = prog("var x : int[0..2]\nx := x + 3")
        with pytest.raises(DomainEscapeError):
            exec_state(p, p.main, init(p))

    def test_frame_on_unmodified_vars(self):
        p = prog("var x : int[0..3]\nvar y : bool\nx ~ U[0 .. 3]")
        mu = SubDist({init(p, y=True): Fraction(1, 3), init(p, y=False): Fraction(2, 3)})
        out = exec_dist(p, p.main, mu).dist
        keep = [n for n, _ in p.all_vars() if n not in sy.modified_vars(p.main, p)]
        assert mu.project(keep) == out.project(keep)


class TestProcedures:
    SRC = """
var g : int[0..9]
var r : int[0..9]
proc double(a : int[0..9]) {
  var t : int[0..9]
  t := a + a
  g := g + 1
  return t
}
r := call double(3)
"""

    def test_call_semantics(self):
        p = prog(self.SRC)
        out = exec_state(p, p.main, init(p)).dist
        assert len(out) == 1
        m = out.support()[0]
        assert m.get("r") == 6 and m.get("g") == 1

    def test_locals_restored(self):
        p = prog(self.SRC)
        m0 = init(p, t=7, a=2)
        out = exec_state(p, p.main, m0).dist
        m = out.support()[0]
        assert m.get("t") == 7 and m.get("a") == 2

    def test_frame_lemma_with_call(self):
        p = prog(self.SRC)
        mv = sy.modified_vars(p.main, p)
        assert mv == {"r", "g"}
        mu = SubDist({init(p, t=1): Fraction(1, 2), init(p, t=5): Fraction(1, 2)})
        out = exec_dist(p, p.main, mu).dist
        keep = [n for n, _ in p.all_vars() if n not in mv]
        assert mu.project(keep) == out.project(keep)


ADV_SRC = """
var H : map[int[0..3] => int[0..3]]
var bad : bool
var b : bool
proc orcl(q : int[0..3]) {
  var a : int[0..3]
  if not (q in H) then {
    a ~ U[0 .. 3]
    bad := bad or (a in codom(H))
    H[q] := a
  }
  return H[q]
}
adv A(z : int[0..3]) oracles {orcl} {
  var y1 : int[0..3]
  var y2 : int[0..3]
  return y1 = y2
}
bad := false
b := call A(0)
"""


class TestAdversaries:
    def test_missing_binding_errors(self):
        p = prog(ADV_SRC)
        with pytest.raises(NoAdvBindingError):
            exec_state(p, p.main, init(p))

    def test_binding_runs(self):
        p = prog(ADV_SRC)
        binding = AdvBinding(
            parse_stmt("y1 := call orcl(0); y2 := call orcl(1)", p), call_bound=2, name="two_fresh"
        )
        validate_binding(p, "A", binding)
        out = exec_state(p, p.main, init(p), adv={"A": binding}).dist
        pr_bad = out.pr(lambda m: m.get("bad"))
        assert pr_bad == Fraction(1, 4)

    def test_call_bound_enforced(self):
        p = prog(ADV_SRC)
        binding = AdvBinding(
            parse_stmt("y1 := call orcl(0); y2 := call orcl(1); y1 := call orcl(2)", p),
            call_bound=2,
        )
        with pytest.raises(AdvRestrictionError):
            validate_binding(p, "A", binding)

    def test_scope_enforced(self):
        p = prog(ADV_SRC)
        binding = AdvBinding(parse_stmt("bad := false", p))
        with pytest.raises(AdvRestrictionError):
            validate_binding(p, "A", binding)

    def test_adv_locals_in_modified_vars(self):
        p = prog(ADV_SRC)
        mv = sy.modified_vars(p.main, p)
        assert {"b", "y1", "y2", "z", "H", "bad", "a", "q"} >= mv
        assert {"b", "y1", "y2", "H", "bad"} <= mv


class TestLoopDiagnostics:
    def test_detect_ct_counter(self):
        p = prog("var x : int[0..3]\nwhile x < 3 do x := x + 1")
        loop = sy.stmt_loops(p.main)[0]
        assert detect_ct(p, loop, [dirac(init(p))], 10) == 3

    def test_detect_ct_geometric_none(self):
        p = prog("var b : bool\nwhile b do b ~ Ber(1/2)")
        loop = sy.stmt_loops(p.main)[0]
        assert detect_ct(p, loop, [dirac(init(p, b=True))], 30) is None

    def test_detect_ct_false_guard(self):
        p = prog("var b : bool\nwhile b and not b do skip")
        loop = sy.stmt_loops(p.main)[0]
        assert detect_ct(p, loop, [dirac(init(p))], 5) == 0

    def test_lossless_abort(self):
        p = prog("var x : int[0..1]\nabort")
        rep = check_lossless(p, p.main, [dirac(init(p))])
        assert rep.verdict == "lossy"

    def test_lossless_sample(self):
        p = prog("var x : bool\nx ~ Ber(1/2)")
        rep = check_lossless(p, p.main, [dirac(init(p))])
        assert rep.verdict == "lossless"
        assert syntactically_lossless(p, p.main)

    def test_lossless_unknown_on_truncation(self):
        p = prog("var b : bool\nwhile b do b ~ Ber(1/2)")
        rep = check_lossless(p, p.main, [dirac(init(p, b=True))], budget=Budget(max_loop_unrollings=8))
        assert rep.verdict == "unknown"
        assert rep.gap == Fraction(1, 256)

    def test_monotone_lower_approximations(self):
        p = prog("var b : bool\nvar n : int[0..9]\nwhile b do { b ~ Ber(1/2) }")
        m = init(p, b=True)
        prev = None
        for k in range(1, 6):
            cur = exec_state(p, p.main, m, budget=Budget(max_loop_unrollings=k)).dist
            if prev is not None:
                assert prev.leq(cur)
            prev = cur
