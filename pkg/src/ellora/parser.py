"""Concrete syntax for .pw programs: lexer, parser, printer.

The token stream is shared with the assertion language (assert_syntax).
Parsed expressions are constant-folded, and for-loops with static integer
bounds are expanded on the spot, so downstream passes only ever see the
kernel grammar.  parse(print_program(p)) returns an AST equal to p.
"""

from __future__ import annotations

from fractions import Fraction

from . import syntax as sy
from .values import (
    ArraySort,
    BoolSort,
    IntRangeSort,
    IntSort,
    MapSort,
    MapVal,
    SetSort,
    TupleSort,
)


class PwSyntaxError(Exception):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_PUNCT = [
    "(+)",
    ":=",
    "..",
    "=>",
    "<=",
    ">=",
    "!=",
    "/\\",
    "\\/",
    "[]",
    "(",
    ")",
    "[",
    "]",
    "{",
    "}",
    ";",
    ":",
    ",",
    "=",
    "<",
    ">",
    "?",
    "~",
    "+",
    "-",
    "*",
    "/",
    "%",
    ".",
    "@",
]


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind  # 'id' | 'int' | 'punct' | 'eof'
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind},{self.text!r}@{self.line}:{self.col})"


def tokenize(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("id", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise PwSyntaxError(f"unexpected character {c!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class TokenStream:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text) -> bool:
        t = self.peek()
        return (t.kind == "punct" or t.kind == "id") and t.text == text

    def at_kind(self, kind) -> bool:
        return self.peek().kind == kind

    def accept(self, text) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text) -> Token:
        if not self.at(text):
            t = self.peek()
            raise PwSyntaxError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def expect_id(self) -> Token:
        t = self.peek()
        if t.kind != "id":
            raise PwSyntaxError(f"expected identifier, found {t.text!r}", t.line, t.col)
        return self.next()

    def expect_int(self) -> int:
        neg = self.accept("-")
        t = self.peek()
        if t.kind != "int":
            raise PwSyntaxError(f"expected integer, found {t.text!r}", t.line, t.col)
        self.next()
        return -int(t.text) if neg else int(t.text)

    def error(self, msg):
        t = self.peek()
        raise PwSyntaxError(msg, t.line, t.col)


_KEYWORDS = {
    "skip", "abort", "if", "then", "else", "while", "do", "for", "to",
    "proc", "adv", "return", "var", "oracles", "call", "true", "false",
    "not", "and", "or", "xor", "in", "div", "mod", "of",
    "bool", "int", "array", "map", "set", "tuple", "emptymap",
}


class ProgramParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.proc_names: set = set()
        self.adv_names: set = set()

    # -- sorts ---------------------------------------------------------------

    def parse_sort(self):
        ts = self.ts
        if ts.accept("bool"):
            return BoolSort()
        if ts.accept("int"):
            if ts.accept("["):
                lo = ts.expect_int()
                ts.expect("..")
                hi = ts.expect_int()
                ts.expect("]")
                return IntRangeSort(lo, hi)
            return IntSort()
        if ts.accept("array"):
            ts.expect("[")
            lo = ts.expect_int()
            ts.expect("..")
            hi = ts.expect_int()
            ts.expect("]")
            ts.expect("of")
            return ArraySort(lo, hi, self.parse_sort())
        if ts.accept("map"):
            ts.expect("[")
            k = self.parse_sort()
            ts.expect("=>")
            v = self.parse_sort()
            ts.expect("]")
            return MapSort(k, v)
        if ts.accept("set"):
            ts.expect("[")
            elem = self.parse_sort()
            ts.expect("]")
            return SetSort(elem)
        if ts.accept("tuple"):
            ts.expect("(")
            elems = [self.parse_sort()]
            while ts.accept(","):
                elems.append(self.parse_sort())
            ts.expect(")")
            return TupleSort(tuple(elems))
        ts.error("expected a sort")

    # -- expressions -----------------------------------------------------------

    def parse_expr(self):
        return sy.fold_expr(self._cond())

    def _cond(self):
        c = self._or()
        if self.ts.accept("?"):
            t = self._cond()
            self.ts.expect(":")
            f = self._cond()
            return sy.CondExpr(c, t, f)
        return c

    def _or(self):
        e = self._and()
        while True:
            if self.ts.accept("or"):
                e = sy.Op("or", (e, self._and()))
            elif self.ts.accept("xor"):
                e = sy.Op("xor", (e, self._and()))
            else:
                return e

    def _and(self):
        e = self._not()
        while self.ts.accept("and"):
            e = sy.Op("and", (e, self._not()))
        return e

    def _not(self):
        if self.ts.accept("not"):
            return sy.Op("not", (self._not(),))
        return self._cmp()

    def _cmp(self):
        e = self._add()
        t = self.ts.peek()
        if t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self.ts.next()
            rhs = self._add()
            if t.text == "=":
                return sy.Op("eq", (e, rhs))
            if t.text == "!=":
                return sy.Op("ne", (e, rhs))
            if t.text == "<":
                return sy.Op("lt", (e, rhs))
            if t.text == "<=":
                return sy.Op("le", (e, rhs))
            if t.text == ">":
                return sy.Op("lt", (rhs, e))
            return sy.Op("le", (rhs, e))
        if self.ts.accept("in"):
            return sy.Op("mem", (e, self._add()))
        return e

    def _add(self):
        e = self._mul()
        while True:
            if self.ts.accept("+"):
                e = sy.Op("add", (e, self._mul()))
            elif self.ts.accept("-"):
                e = sy.Op("sub", (e, self._mul()))
            else:
                return e

    def _mul(self):
        e = self._unary()
        while True:
            if self.ts.accept("*"):
                e = sy.Op("mul", (e, self._unary()))
            elif self.ts.accept("/"):
                e = sy.Op("rdiv", (e, self._unary()))
            elif self.ts.accept("div"):
                e = sy.Op("idiv", (e, self._unary()))
            elif self.ts.accept("mod"):
                e = sy.Op("mod", (e, self._unary()))
            else:
                return e

    def _unary(self):
        if self.ts.accept("-"):
            return sy.Op("neg", (self._unary(),))
        return self._postfix()

    def _postfix(self):
        e = self._atom()
        while self.ts.at("["):
            self.ts.next()
            idx = self.parse_expr()
            self.ts.expect("]")
            e = sy.Op("index", (e, idx))
        return e

    def _atom(self):
        ts = self.ts
        t = ts.peek()
        if t.kind == "int":
            ts.next()
            return sy.Lit(int(t.text))
        if ts.accept("true"):
            return sy.Lit(True)
        if ts.accept("false"):
            return sy.Lit(False)
        if ts.accept("emptymap"):
            return sy.Lit(MapVal())
        if ts.at("("):
            ts.next()
            e = self.parse_expr()
            if ts.accept(","):
                parts = [e, self.parse_expr()]
                while ts.accept(","):
                    parts.append(self.parse_expr())
                ts.expect(")")
                return sy.Op("tup", tuple(parts))
            ts.expect(")")
            return e
        if ts.at("{"):
            ts.next()
            if ts.accept("}"):
                return sy.Lit(frozenset())
            parts = [self.parse_expr()]
            while ts.accept(","):
                parts.append(self.parse_expr())
            ts.expect("}")
            return sy.Op("setlit", tuple(parts))
        if t.kind == "id":
            ts.next()
            if ts.at("(") and t.text in sy.OPERATORS:
                ts.next()
                args = []
                if not ts.at(")"):
                    args.append(self.parse_expr())
                    while ts.accept(","):
                        args.append(self.parse_expr())
                ts.expect(")")
                return sy.Op(t.text, tuple(args))
            if t.text in _KEYWORDS:
                raise PwSyntaxError(f"keyword {t.text!r} used as expression", t.line, t.col)
            return sy.Var(t.text)
        ts.error("expected an expression")

    # -- distribution expressions ---------------------------------------------

    def parse_dexpr(self):
        ts = self.ts
        t = ts.peek()
        if t.kind == "id" and t.text == "Ber":
            ts.next()
            ts.expect("(")
            p = self.parse_expr()
            ts.expect(")")
            return sy.BernoulliD(p)
        if t.kind == "id" and t.text == "B":
            ts.next()
            ts.expect("(")
            n = self.parse_expr()
            ts.expect(",")
            p = self.parse_expr()
            ts.expect(")")
            if not isinstance(p, sy.Lit) or type(p.value) not in (int, Fraction):
                raise PwSyntaxError("binomial probability must be a constant rational", t.line, t.col)
            return sy.BinomialD(n, Fraction(p.value))
        if t.kind == "id" and t.text == "U":
            ts.next()
            if ts.accept("["):
                lo = self.parse_expr()
                ts.expect("..")
                hi = self.parse_expr()
                ts.expect("]")
                return sy.UniformRangeD(lo, hi)
            ts.expect("(")
            e = self.parse_expr()
            ts.expect(")")
            return sy.UniformSetD(e)
        if t.kind == "id" and t.text == "dist":
            ts.next()
            ts.expect("{")
            entries = []
            while not ts.at("}"):
                v = self.parse_expr()
                if not isinstance(v, sy.Lit):
                    raise PwSyntaxError("table entries must be literal values", t.line, t.col)
                ts.expect(":")
                q = self.parse_expr()
                if not isinstance(q, sy.Lit) or type(q.value) not in (int, Fraction):
                    raise PwSyntaxError("table masses must be constant rationals", t.line, t.col)
                entries.append((v.value, Fraction(q.value)))
                if not ts.accept(","):
                    break
            ts.expect("}")
            return sy.TableD(tuple(entries))
        ts.error("expected a distribution expression (Ber, B, U, dist)")

    # -- statements -------------------------------------------------------------
    # While nodes get a placeholder label here; parse_program relabels them
    # positionally afterwards so for-loop expansion cannot duplicate labels.

    def parse_block(self):
        ts = self.ts
        if ts.accept("{"):
            stmts = []
            while not ts.at("}"):
                stmts.append(self.parse_stmt())
                ts.accept(";")
            ts.expect("}")
            return sy.seq_of(stmts)
        return self.parse_stmt()

    def parse_stmt(self):
        ts = self.ts
        t = ts.peek()
        pos = (t.line, t.col)
        if ts.accept("skip"):
            return sy.Skip(pos=pos)
        if ts.accept("abort"):
            return sy.Abort(pos=pos)
        if ts.accept("if"):
            cond = self.parse_expr()
            ts.expect("then")
            then = self.parse_block()
            orelse = self.parse_block() if ts.accept("else") else sy.Skip()
            return sy.If(cond, then, orelse, pos=pos)
        if ts.accept("while"):
            cond = self.parse_expr()
            ts.expect("do")
            body = self.parse_block()
            return sy.While(cond, body, "", pos=pos)
        if ts.accept("for"):
            idx = ts.expect_id().text
            ts.expect(":=")
            lo_e = self.parse_expr()
            ts.expect("to")
            hi_e = self.parse_expr()
            if not (isinstance(lo_e, sy.Lit) and isinstance(hi_e, sy.Lit)):
                raise PwSyntaxError("for-loop bounds must be static integers", t.line, t.col)
            ts.expect("do")
            body = self.parse_block()
            copies = []
            for v in range(lo_e.value, hi_e.value + 1):
                try:
                    copies.append(sy.subst_stmt(body, idx, sy.Lit(v)))
                except ValueError as e:
                    raise PwSyntaxError(str(e), t.line, t.col) from None
            return sy.seq_of(copies) if copies else sy.Skip(pos=pos)
        if ts.at("{"):
            return self.parse_block()
        if t.kind == "id":
            name = ts.expect_id().text
            if ts.at("["):
                ts.next()
                idx = self.parse_expr()
                ts.expect("]")
                ts.expect(":=")
                val = self.parse_expr()
                return sy.Assign(name, sy.fold_expr(sy.Op("store", (sy.Var(name), idx, val))), pos=pos)
            if ts.accept(":="):
                if ts.accept("call"):
                    callee = ts.expect_id().text
                    ts.expect("(")
                    arg = self.parse_expr()
                    ts.expect(")")
                    if callee in self.adv_names:
                        return sy.AdvCall(name, callee, arg, pos=pos)
                    return sy.Call(name, callee, arg, pos=pos)
                return sy.Assign(name, self.parse_expr(), pos=pos)
            if ts.accept("~"):
                return sy.Sample(name, self.parse_dexpr(), pos=pos)
            ts.error(f"expected ':=' or '~' after {name!r}")
        ts.error("expected a statement")

    # -- declarations -----------------------------------------------------------

    def parse_var_decl(self):
        self.ts.expect("var")
        name = self.ts.expect_id().text
        self.ts.expect(":")
        sort = self.parse_sort()
        self.ts.accept(";")
        return (name, sort)

    def parse_proc(self):
        ts = self.ts
        ts.expect("proc")
        name = ts.expect_id().text
        ts.expect("(")
        arg = ts.expect_id().text
        ts.expect(":")
        arg_sort = self.parse_sort()
        ts.expect(")")
        ts.expect("{")
        locals_ = [(arg, arg_sort)]
        while ts.at("var"):
            locals_.append(self.parse_var_decl())
        stmts = []
        while not ts.at("return"):
            stmts.append(self.parse_stmt())
            ts.accept(";")
        ts.expect("return")
        ret = self.parse_expr()
        ts.accept(";")
        ts.expect("}")
        self.proc_names.add(name)
        return sy.Proc(name, arg, tuple(locals_), sy.seq_of(stmts), ret)

    def parse_adv(self):
        ts = self.ts
        ts.expect("adv")
        name = ts.expect_id().text
        ts.expect("(")
        arg = ts.expect_id().text
        ts.expect(":")
        arg_sort = self.parse_sort()
        ts.expect(")")
        ts.expect("oracles")
        ts.expect("{")
        oracles = []
        if not ts.at("}"):
            oracles.append(ts.expect_id().text)
            while ts.accept(","):
                oracles.append(ts.expect_id().text)
        ts.expect("}")
        ts.expect("{")
        locals_ = [(arg, arg_sort)]
        while ts.at("var"):
            locals_.append(self.parse_var_decl())
        ts.expect("return")
        ret = self.parse_expr()
        ts.accept(";")
        ts.expect("}")
        self.adv_names.add(name)
        return sy.AdvDecl(name, tuple(oracles), arg, tuple(locals_), ret)

    def parse_program(self):
        ts = self.ts
        globals_, procs, advs, stmts = [], [], [], []
        while ts.at("var"):
            globals_.append(self.parse_var_decl())
        while ts.at("proc") or ts.at("adv"):
            if ts.at("proc"):
                procs.append(self.parse_proc())
            else:
                advs.append(self.parse_adv())
        while not ts.at_kind("eof"):
            stmts.append(self.parse_stmt())
            ts.accept(";")
        prog = sy.Program(tuple(globals_), tuple(procs), tuple(advs), sy.seq_of(stmts))
        return _relabel_program(prog)


def _relabel_stmt(s, counter, prefix="w"):
    if isinstance(s, sy.While):
        counter[0] += 1
        label = f"{prefix}{counter[0]}"
        return sy.While(s.cond, _relabel_stmt(s.body, counter, prefix), label, pos=s.pos)
    if isinstance(s, sy.Seq):
        return sy.Seq(
            _relabel_stmt(s.first, counter, prefix),
            _relabel_stmt(s.second, counter, prefix),
            pos=s.pos,
        )
    if isinstance(s, sy.If):
        return sy.If(
            s.cond,
            _relabel_stmt(s.then, counter, prefix),
            _relabel_stmt(s.orelse, counter, prefix),
            pos=s.pos,
        )
    return s


def _relabel_program(p: sy.Program) -> sy.Program:
    counter = [0]
    procs = tuple(
        sy.Proc(pr.name, pr.arg, pr.locals, _relabel_stmt(pr.body, counter), pr.ret)
        for pr in p.procs
    )
    main = _relabel_stmt(p.main, counter)
    return sy.Program(p.globals, procs, p.advs, main)


def parse(text: str) -> sy.Program:
    return ProgramParser(TokenStream(tokenize(text))).parse_program()


def parse_stmt(text: str, program: sy.Program) -> sy.Stmt:
    """Parse a bare statement list in the context of a program's declarations."""
    pp = ProgramParser(TokenStream(tokenize(text)))
    pp.proc_names = {p.name for p in program.procs}
    pp.adv_names = {a.name for a in program.advs}
    stmts = []
    while not pp.ts.at_kind("eof"):
        stmts.append(pp.parse_stmt())
        pp.ts.accept(";")
    # binding-local labels use a "b" prefix so they stay clear of the program's
    return _relabel_stmt(sy.seq_of(stmts), [0], prefix="b")


def parse_expr(text: str) -> sy.Expr:
    pp = ProgramParser(TokenStream(tokenize(text)))
    e = pp.parse_expr()
    if not pp.ts.at_kind("eof"):
        pp.ts.error("trailing input after expression")
    return e


# ---------------------------------------------------------------------------
# Printing


_BINOP_SYNTAX = {
    "or": ("or", 2), "xor": ("xor", 2), "and": ("and", 3),
    "eq": ("=", 5), "ne": ("!=", 5), "lt": ("<", 5), "le": ("<=", 5), "mem": ("in", 5),
    "add": ("+", 6), "sub": ("-", 6),
    "mul": ("*", 7), "rdiv": ("/", 7), "idiv": ("div", 7), "mod": ("mod", 7),
}


def print_value(v) -> str:
    if type(v) is bool:
        return "true" if v else "false"
    if type(v) is int:
        return str(v)
    if type(v) is Fraction:
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if type(v) is frozenset:
        from .values import value_key

        if not v:
            return "{}"
        return "{" + ", ".join(print_value(x) for x in sorted(v, key=value_key)) + "}"
    if type(v) is tuple:
        return "(" + ", ".join(print_value(x) for x in v) + ")"
    if type(v) is MapVal and not v.items:
        return "emptymap"
    raise ValueError(f"value {v!r} has no literal syntax")


def print_expr(e, prec=0) -> str:
    if isinstance(e, sy.Var):
        return e.name
    if isinstance(e, sy.Lit):
        if type(e.value) is Fraction and e.value < 0:
            s = print_value(-e.value)
            return f"(-{s})" if prec >= 7 else f"-{s}"
        if type(e.value) is int and e.value < 0:
            return f"({e.value})" if prec >= 7 else str(e.value)
        return print_value(e.value)
    if isinstance(e, sy.CondExpr):
        s = f"{print_expr(e.cond, 1)} ? {print_expr(e.then, 1)} : {print_expr(e.orelse, 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, sy.Op):
        if e.op in _BINOP_SYNTAX and len(e.args) == 2:
            txt, level = _BINOP_SYNTAX[e.op]
            # comparisons don't chain: parenthesize both operands one level up
            lp = level + 1 if level == 5 else level
            s = f"{print_expr(e.args[0], lp)} {txt} {print_expr(e.args[1], level + 1)}"
            return f"({s})" if prec > level else s
        if e.op == "not":
            s = f"not {print_expr(e.args[0], 4)}"
            return f"({s})" if prec > 4 else s
        if e.op == "neg":
            s = f"-{print_expr(e.args[0], 8)}"
            return f"({s})" if prec > 7 else s
        if e.op == "index":
            return f"{print_expr(e.args[0], 9)}[{print_expr(e.args[1])}]"
        if e.op == "setlit":
            return "{" + ", ".join(print_expr(a) for a in e.args) + "}"
        if e.op == "tup":
            return "(" + ", ".join(print_expr(a) for a in e.args) + ")"
        return f"{e.op}(" + ", ".join(print_expr(a) for a in e.args) + ")"
    raise TypeError(f"not an expression: {e!r}")


def print_dexpr(g) -> str:
    if isinstance(g, sy.BernoulliD):
        return f"Ber({print_expr(g.p)})"
    if isinstance(g, sy.BinomialD):
        return f"B({print_expr(g.n)}, {print_value(g.p)})"
    if isinstance(g, sy.UniformRangeD):
        return f"U[{print_expr(g.lo)} .. {print_expr(g.hi)}]"
    if isinstance(g, sy.UniformSetD):
        return f"U({print_expr(g.set)})"
    if isinstance(g, sy.TableD):
        inner = ", ".join(f"{print_value(v)}: {print_value(q)}" for v, q in g.entries)
        return "dist{" + inner + "}"
    raise TypeError(f"not a distribution expression: {g!r}")


def _print_stmt(s, indent) -> list:
    pad = "  " * indent
    if isinstance(s, sy.Skip):
        return [pad + "skip"]
    if isinstance(s, sy.Abort):
        return [pad + "abort"]
    if isinstance(s, sy.Assign):
        e = s.expr
        if (
            isinstance(e, sy.Op)
            and e.op == "store"
            and isinstance(e.args[0], sy.Var)
            and e.args[0].name == s.var
        ):
            return [f"{pad}{s.var}[{print_expr(e.args[1])}] := {print_expr(e.args[2])}"]
        return [f"{pad}{s.var} := {print_expr(e)}"]
    if isinstance(s, sy.Sample):
        return [f"{pad}{s.var} ~ {print_dexpr(s.dist)}"]
    if isinstance(s, sy.Seq):
        return _print_stmt(s.first, indent) + _print_stmt(s.second, indent)
    if isinstance(s, sy.If):
        out = [f"{pad}if {print_expr(s.cond)} then {{"]
        out += _print_stmt(s.then, indent + 1)
        if isinstance(s.orelse, sy.Skip):
            out.append(pad + "}")
        else:
            out.append(pad + "} else {")
            out += _print_stmt(s.orelse, indent + 1)
            out.append(pad + "}")
        return out
    if isinstance(s, sy.While):
        out = [f"{pad}while {print_expr(s.cond)} do {{"]
        out += _print_stmt(s.body, indent + 1)
        out.append(pad + "}")
        return out
    if isinstance(s, sy.Call):
        return [f"{pad}{s.var} := call {s.proc}({print_expr(s.arg)})"]
    if isinstance(s, sy.AdvCall):
        return [f"{pad}{s.var} := call {s.adv}({print_expr(s.arg)})"]
    raise TypeError(f"not a statement: {s!r}")


def print_stmt(s, indent=0) -> str:
    return "\n".join(_print_stmt(s, indent))


def print_program(p: sy.Program) -> str:
    lines = []
    for n, s in p.globals:
        lines.append(f"var {n} : {s}")
    for pr in p.procs:
        arg_sort = dict(pr.locals)[pr.arg]
        lines.append(f"proc {pr.name}({pr.arg} : {arg_sort}) {{")
        for n, s in pr.locals:
            if n != pr.arg:
                lines.append(f"  var {n} : {s}")
        lines += _print_stmt(pr.body, 1)
        lines.append(f"  return {print_expr(pr.ret)}")
        lines.append("}")
    for a in p.advs:
        arg_sort = dict(a.locals)[a.arg]
        lines.append(f"adv {a.name}({a.arg} : {arg_sort}) oracles {{{', '.join(a.oracles)}}} {{")
        for n, s in a.locals:
            if n != a.arg:
                lines.append(f"  var {n} : {s}")
        lines.append(f"  return {print_expr(a.ret)}")
        lines.append("}")
    lines += _print_stmt(p.main, 0)
    return "\n".join(lines) + "\n"
