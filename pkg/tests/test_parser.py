from fractions import Fraction

import pytest

from ellora import syntax as sy
from ellora.parser import PwSyntaxError, parse, parse_expr, parse_stmt, print_program
from ellora.values import ArraySort, BoolSort, IntRangeSort, MapSort, SetSort


COUPON_FRAGMENT = """
var cp : array[1..3] of int[0..1]
var cur : int[1..3]
var ct : int[0..99]
ct := 0
cur ~ U[1 .. 3]
while cp[cur] = 1 do {
  ct := ct + 1
  cur ~ U[1 .. 3]
}
"""


class TestExpr:
    def test_assign(self):
        p = parse("var x : int[0..5]\nx := 0")
        assert p.main == sy.Assign("x", sy.Lit(0))

    def test_precedence(self):
        e = parse_expr("1 + 2 * x")
        assert e == sy.Op("add", (sy.Lit(1), sy.Op("mul", (sy.Lit(2), sy.Var("x")))))

    def test_constant_folding(self):
        assert parse_expr("1/2") == sy.Lit(Fraction(1, 2))
        assert parse_expr("2 + 3 * 4") == sy.Lit(14)
        assert parse_expr("-1") == sy.Lit(-1)

    def test_comparison_and_bool(self):
        e = parse_expr("x = 0 or not (y < 2)")
        assert e.op == "or"

    def test_gt_swaps(self):
        assert parse_expr("x > y") == sy.Op("lt", (sy.Var("y"), sy.Var("x")))

    def test_conditional_choice(self):
        e = parse_expr("b ? 1 : 2")
        assert isinstance(e, sy.CondExpr)

    def test_set_and_tuple(self):
        assert parse_expr("{1, 2}") == sy.Lit(frozenset({1, 2}))
        assert parse_expr("(1, 2)") == sy.Lit((1, 2))
        e = parse_expr("x in {1, 2}")
        assert e.op == "mem"

    def test_xor(self):
        e = parse_expr("x xor y")
        assert e == sy.Op("xor", (sy.Var("x"), sy.Var("y")))


class TestStmt:
    def test_binsum_body(self):
        p = parse(
            "var x : int[0..9]\nvar c : int[0..9]\nvar j : int[0..9]\n"
            "x ~ B(j, 1/2); c := c + x"
        )
        assert p.main == sy.Seq(
            sy.Sample("x", sy.BinomialD(sy.Var("j"), Fraction(1, 2))),
            sy.Assign("c", sy.Op("add", (sy.Var("c"), sy.Var("x")))),
        )

    def test_coupon_guard(self):
        p = parse(COUPON_FRAGMENT)
        loop = sy.stmt_loops(p.main)[0]
        assert loop.cond == sy.Op("eq", (sy.Op("index", (sy.Var("cp"), sy.Var("cur"))), sy.Lit(1)))
        assert loop.label == "w1"

    def test_indexed_assign_sugar(self):
        p = parse("var a : array[0..2] of bool\na[1] := true")
        assert p.main == sy.Assign(
            "a", sy.Op("store", (sy.Var("a"), sy.Lit(1), sy.Lit(True)))
        )

    def test_for_desugars_with_literal_index(self):
        p = parse("var c : int[0..9]\nc := 0\nfor j := 1 to 3 do c := c + j")
        stmts = sy.seq_list(p.main)
        assert stmts[1:] == [
            sy.Assign("c", sy.Op("add", (sy.Var("c"), sy.Lit(1)))),
            sy.Assign("c", sy.Op("add", (sy.Var("c"), sy.Lit(2)))),
            sy.Assign("c", sy.Op("add", (sy.Var("c"), sy.Lit(3)))),
        ]

    def test_for_loop_copies_get_distinct_labels(self):
        p = parse(
            "var b : bool\nfor j := 1 to 2 do { while b do b ~ Ber(1/2) }"
        )
        labels = [w.label for w in sy.stmt_loops(p.main)]
        assert labels == ["w1", "w2"]

    def test_empty_for(self):
        p = parse("var c : int[0..9]\nfor j := 3 to 2 do c := c + 1")
        assert p.main == sy.Skip()

    def test_syntax_error_position(self):
        with pytest.raises(PwSyntaxError) as e:
            parse("var x : int[0..5]\nx := := 1")
        assert e.value.line == 2

    def test_proc_and_adv(self):
        p = parse(
            """
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
  return z = y1
}
bad := false
b := call A(0)
"""
        )
        assert p.procs[0].name == "orcl"
        assert p.advs[0].oracles == ("orcl",)
        assert isinstance(sy.seq_list(p.main)[1], sy.AdvCall)

    def test_sorts(self):
        p = parse(
            "var a : bool\nvar b : int[-2..2]\nvar c : array[1..2] of bool\n"
            "var d : map[bool => bool]\nvar e : set[int[0..1]]\nskip"
        )
        sorts = dict(p.globals)
        assert sorts["a"] == BoolSort()
        assert sorts["b"] == IntRangeSort(-2, 2)
        assert sorts["c"] == ArraySort(1, 2, BoolSort())
        assert sorts["d"] == MapSort(BoolSort(), BoolSort())
        assert sorts["e"] == SetSort(IntRangeSort(0, 1))


class TestRoundTrip:
    PROGRAMS = [
        COUPON_FRAGMENT,
        "var x : int[0..5]\nx := (1 + x) * 2 - x div 2",
        "var b : bool\nvar x : int[0..2]\nif b then x := 1 else { x := 2; b := false }",
        "var b : bool\nb ~ dist{true: 1/3, false: 1/3}",
        "var s : set[int[1..4]]\ns := union(s, {1})",
        "var t : tuple(int[0..1], int[0..1])\nvar x : int[0..1]\nx := fst(t)",
        "var x : int[0..5]\nvar b : bool\nx := b ? x + 1 : 0",
        "var x : int[-3..3]\nx := -1",
    ]

    @pytest.mark.parametrize("src", PROGRAMS)
    def test_parse_print_parse(self, src):
        ast = parse(src)
        assert parse(print_program(ast)) == ast

    def test_modified_vars_examples(self):
        p = parse("var x : int[0..5]\nvar y : bool\nx := 1\ny ~ Ber(1/2)")
        assert sy.modified_vars(p.main, p) == {"x", "y"}
        assert sy.modified_vars(sy.Skip(), p) == frozenset()
        p2 = parse("var x : int[0..5]\nvar b : bool\nif b then x := 0 else skip")
        assert sy.modified_vars(p2.main, p2) == {"x"}


class TestWellFormed:
    def test_sound_program_clean(self):
        p = parse(COUPON_FRAGMENT)
        assert sy.well_formed(p) == []

    def test_recursion_detected(self):
        p = parse(
            "var x : int[0..1]\n"
            "proc f(a : int[0..1]) { var r : int[0..1]\nr := call f(a)\nreturn r }\n"
            "x := call f(0)"
        )
        assert any(d.code == "Recursion" for d in sy.well_formed(p))

    def test_infinite_domain_flagged(self):
        p = parse("var x : int\nx := 0")
        assert any(d.code == "InfiniteDomain" for d in sy.well_formed(p))

    def test_uninit_local(self):
        p = parse(
            "var x : int[0..1]\n"
            "proc f(a : int[0..1]) { var r : int[0..1]\nvar s : int[0..1]\nr := s\nreturn r }\n"
            "x := call f(0)"
        )
        assert any(d.code == "UninitLocal" for d in sy.well_formed(p))

    def test_sort_error(self):
        p = parse("var x : int[0..1]\nvar b : bool\nx := b and true")
        assert any(d.code == "SortError" for d in sy.well_formed(p))

    def test_adv_body_scope(self):
        p = parse(
            """
var g : int[0..1]
var r : bool
proc noop(q : int[0..1]) { return q }
adv A(z : int[0..1]) oracles {noop} { var y : int[0..1]
  return y = 0 }
r := call A(0)
"""
        )
        body = parse_stmt("g := 1", p)
        diags = sy.check_adv_body(p, p.adv("A"), body)
        assert any(d.code == "AdvScope" for d in diags)
        ok_body = parse_stmt("y := call noop(z)", p)
        assert sy.check_adv_body(p, p.adv("A"), ok_body) == []

    def test_max_oracle_calls(self):
        p = parse(
            """
var r : bool
proc noop(q : int[0..1]) { return q }
adv A(z : int[0..1]) oracles {noop} { var y : int[0..1]
  return y = 0 }
r := call A(0)
"""
        )
        two = parse_stmt("y := call noop(0); y := call noop(1)", p)
        assert sy.max_oracle_calls(two) == 2
        branchy = parse_stmt("if z = 0 then y := call noop(0) else skip", p)
        assert sy.max_oracle_calls(branchy) == 1
