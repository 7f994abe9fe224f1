"""Concrete syntax for the assertion language.

Probabilistic assertions embed in .spec files and on the command line:
`Pr[phi]`, `E[se]`, `[] (phi)` for the every-support-point modality, `(+)`
for splits with an optional `witness (phi)`, `indep{e1, ...}`, `e ~ g` for
laws, `L` for full weight, and `forall v in <sort>.` quantifiers.  Names
resolve against the program: declared variables parse as program variables,
anything else as a logical variable.  The printer round-trips: parsing its
output reproduces the assertion tree.
"""

from __future__ import annotations

from fractions import Fraction

from . import assertions as A
from . import syntax as sy
from .parser import ProgramParser, PwSyntaxError, TokenStream, print_dexpr, print_value, tokenize


class AssertionParser:
    def __init__(self, ts: TokenStream, program: sy.Program | None):
        self.ts = ts
        self.program = program
        self.pp = ProgramParser(ts)
        if program is not None:
            self.pp.proc_names = {p.name for p in program.procs}
            self.pp.adv_names = {a.name for a in program.advs}

    def _is_prog_var(self, name) -> bool:
        return self.program is not None and self.program.has_var(name)

    def _try(self, fn):
        mark = self.ts.i
        try:
            return fn()
        except PwSyntaxError:
            self.ts.i = mark
            return None

    # -- probabilistic assertions -------------------------------------------

    def parse_passn(self):
        ts = self.ts
        if ts.at("forall") or ts.at("exists"):
            kind = ts.next().text
            var = ts.expect_id().text
            ts.expect("in")
            sort = self.pp.parse_sort()
            ts.expect(".")
            return A.PQuant(kind, var, sort, self.parse_passn())
        return self._pimp()

    def _pimp(self):
        lhs = self._psplit()
        if self.ts.accept("=>"):
            return A.PImp(lhs, self._pimp())
        return lhs

    def _psplit(self):
        # the split connective binds looser than /\ and \/, matching the
        # usual guard-split shape (a /\ [](e)) (+) (b /\ [](not e))
        e = self._por()
        if self.ts.accept("(+)"):
            rhs = self._por()
            witness = None
            if self.ts.accept("witness"):
                self.ts.expect("(")
                witness = A.EventWitness(self.parse_sassn())
                self.ts.expect(")")
            return A.PSplit(e, rhs, witness)
        return e

    def _por(self):
        e = self._pand()
        while self.ts.accept("\\/"):
            e = A.POr(e, self._pand())
        return e

    def _pand(self):
        e = self._patom()
        while self.ts.accept("/\\"):
            e = A.PAnd(e, self._patom())
        return e

    def _patom(self):
        ts = self.ts
        if ts.accept("not"):
            return A.PNot(self._patom())
        if ts.at("(") :
            inner = self._try(self._parens_passn)
            if inner is not None:
                return inner
            return self._pcmp_or_follows()
        if ts.accept("true"):
            return A.PTrue()
        if ts.accept("false"):
            return A.PFalse()
        if ts.at("L"):
            nxt = ts.peek(1)
            if not (
                nxt.kind == "punct"
                and nxt.text in ("=", "<", "<=", ">", ">=", "+", "-", "*", "/", "~", "[", "(")
            ):
                ts.next()
                return A.lossless_assn()
        if ts.accept("[]"):
            return A.box(self._satom())
        if ts.at("indep"):
            ts.next()
            ts.expect("{")
            exprs = [self.parse_sexpr()]
            while ts.accept(","):
                exprs.append(self.parse_sexpr())
            ts.expect("}")
            return A.PIndep(tuple(exprs))
        return self._pcmp_or_follows()

    def _parens_passn(self):
        ts = self.ts
        ts.expect("(")
        inner = self.parse_passn()
        ts.expect(")")
        t = ts.peek()
        if t.kind == "punct" and t.text in ("=", "<", "<=", ">", ">=", "~", "+", "-", "*", "/"):
            # the parenthesis actually opened an expression
            ts.error("expression context")
        return inner

    def _pcmp_or_follows(self):
        ts = self.ts

        def as_follows():
            se = self.parse_sexpr()
            ts.expect("~")
            g = self.pp.parse_dexpr()
            return A.PFollows(se, g)

        got = self._try(as_follows)
        if got is not None:
            return got
        lhs = self.parse_pexpr()
        t = ts.peek()
        if not (t.kind == "punct" and t.text in ("=", "<", "<=", ">", ">=")):
            ts.error("expected a comparison operator")
        ts.next()
        rhs = self.parse_pexpr()
        if t.text == "=":
            return A.PCmp(lhs, "eq", rhs)
        if t.text == "<":
            return A.PCmp(lhs, "lt", rhs)
        if t.text == "<=":
            return A.PCmp(lhs, "le", rhs)
        if t.text == ">":
            return A.PCmp(rhs, "lt", lhs)
        return A.PCmp(rhs, "le", lhs)

    # -- probabilistic expressions --------------------------------------------

    def parse_pexpr(self):
        return _fold_pexpr(self._padd())

    def _padd(self):
        e = self._pmul()
        while True:
            if self.ts.accept("+"):
                e = A.POp("add", (e, self._pmul()))
            elif self.ts.accept("-"):
                e = A.POp("sub", (e, self._pmul()))
            else:
                return e

    def _pmul(self):
        e = self._punary()
        while True:
            if self.ts.accept("*"):
                e = A.POp("mul", (e, self._punary()))
            elif self.ts.accept("/"):
                e = A.POp("rdiv", (e, self._punary()))
            else:
                return e

    def _punary(self):
        if self.ts.accept("-"):
            return A.POp("neg", (self._punary(),))
        return self._pprim()

    def _pprim(self):
        ts = self.ts
        t = ts.peek()
        if t.kind == "int":
            ts.next()
            return A.plit(int(t.text))
        if ts.at("("):
            ts.next()
            e = self.parse_pexpr()
            ts.expect(")")
            return e
        if t.kind == "id" and t.text == "E" and ts.peek(1).text == "[":
            ts.next()
            ts.expect("[")
            se = self.parse_sexpr()
            ts.expect("]")
            return A.PEx(se)
        if t.kind == "id" and t.text == "Pr" and ts.peek(1).text == "[":
            ts.next()
            ts.expect("[")
            phi = self.parse_sassn()
            ts.expect("]")
            return A.pr_(phi)
        if t.kind == "id" and t.text in ("min", "max", "pow") and ts.peek(1).text == "(":
            op = ts.next().text
            ts.expect("(")
            a = self.parse_pexpr()
            ts.expect(",")
            b = self.parse_pexpr()
            ts.expect(")")
            return A.POp(op, (a, b))
        if t.kind == "id":
            if self._is_prog_var(t.text):
                ts.error(
                    f"program variable {t.text!r} in a probabilistic expression; "
                    "wrap it as E[...] or Pr[...]"
                )
            ts.next()
            return A.PLog(t.text)
        ts.error("expected a probabilistic expression")

    # -- state assertions -------------------------------------------------------

    def parse_sassn(self):
        ts = self.ts
        if ts.at("forall") or ts.at("exists"):
            kind = ts.next().text
            var = ts.expect_id().text
            ts.expect("in")
            sort = self.pp.parse_sort()
            ts.expect(".")
            return A.SQuant(kind, var, sort, self.parse_sassn())
        return self._simp()

    def _simp(self):
        lhs = self._sor()
        if self.ts.accept("=>"):
            return A.SImp(lhs, self._simp())
        return lhs

    def _sor(self):
        e = self._sand()
        while self.ts.accept("\\/"):
            e = A.SOr(e, self._sand())
        return e

    def _sand(self):
        e = self._snot()
        while self.ts.accept("/\\"):
            e = A.SAnd(e, self._snot())
        return e

    def _snot(self):
        if self.ts.accept("not"):
            return A.SNot(self._snot())
        return self._satom()

    def _satom(self):
        ts = self.ts
        if ts.at("("):
            inner = self._try(self._parens_sassn)
            if inner is not None:
                return inner
        if ts.accept("true"):
            return A.STrue()
        if ts.accept("false"):
            return A.SFalse()
        return self._scmp()

    def _parens_sassn(self):
        ts = self.ts
        ts.expect("(")
        inner = self.parse_sassn()
        ts.expect(")")
        t = ts.peek()
        if t.kind == "punct" and t.text in ("=", "<", "<=", ">", ">=", "+", "-", "*", "/", "["):
            ts.error("expression context")
        return inner

    def _scmp(self):
        ts = self.ts
        lhs = self.parse_sexpr()
        t = ts.peek()
        if t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            ts.next()
            rhs = self.parse_sexpr()
            if t.text == "=":
                return A.SCmp(lhs, "eq", rhs)
            if t.text == "!=":
                return A.SNot(A.SCmp(lhs, "eq", rhs))
            if t.text == "<":
                return A.SCmp(lhs, "lt", rhs)
            if t.text == "<=":
                return A.SCmp(lhs, "le", rhs)
            if t.text == ">":
                return A.SCmp(rhs, "lt", lhs)
            return A.SCmp(rhs, "le", lhs)
        if ts.accept("in"):
            rhs = self.parse_sexpr()
            return A.SCmp(A.SOp("mem", (lhs, rhs)), "eq", A.SLit(True))
        # bare boolean expression: sugar for `= true`
        return A.SCmp(lhs, "eq", A.SLit(True))

    # -- state expressions ---------------------------------------------------------

    def parse_sexpr(self):
        return self._se_cond()

    def _se_cond(self):
        c = self._se_add()
        if self.ts.accept("?"):
            t = self._se_cond()
            self.ts.expect(":")
            f = self._se_cond()
            return A.SCondE(c, t, f)
        return c

    def _se_add(self):
        e = self._se_mul()
        while True:
            if self.ts.accept("+"):
                e = A.SOp("add", (e, self._se_mul()))
            elif self.ts.accept("-"):
                e = A.SOp("sub", (e, self._se_mul()))
            else:
                return e

    def _se_mul(self):
        e = self._se_unary()
        while True:
            if self.ts.accept("*"):
                e = A.SOp("mul", (e, self._se_unary()))
            elif self.ts.accept("/"):
                e = A.SOp("rdiv", (e, self._se_unary()))
            elif self.ts.accept("div"):
                e = A.SOp("idiv", (e, self._se_unary()))
            elif self.ts.accept("mod"):
                e = A.SOp("mod", (e, self._se_unary()))
            else:
                return e

    def _se_unary(self):
        if self.ts.accept("-"):
            return A.SOp("neg", (self._se_unary(),))
        return self._se_postfix()

    def _se_postfix(self):
        e = self._se_atom()
        while self.ts.at("["):
            self.ts.next()
            idx = self.parse_sexpr()
            self.ts.expect("]")
            e = A.SOp("index", (e, idx))
        return e

    def _se_atom(self):
        ts = self.ts
        t = ts.peek()
        if t.kind == "int":
            ts.next()
            return A.SLit(int(t.text))
        if ts.accept("true"):
            return A.SLit(True)
        if ts.accept("false"):
            return A.SLit(False)
        if ts.accept("emptymap"):
            from .values import MapVal

            return A.SLit(MapVal())
        if ts.at("("):
            ts.next()
            e = self.parse_sexpr()
            if ts.accept(","):
                parts = [e, self.parse_sexpr()]
                while ts.accept(","):
                    parts.append(self.parse_sexpr())
                ts.expect(")")
                return A.SOp("tup", tuple(parts))
            nxt = ts.peek()
            if nxt.kind == "punct" and nxt.text in ("=", "!=", "<", "<=", ">", ">="):
                # parenthesized boolean comparison as a state expression
                ts.next()
                rhs = self.parse_sexpr()
                ts.expect(")")
                if nxt.text == "=":
                    return A.SOp("eq", (e, rhs))
                if nxt.text == "!=":
                    return A.SOp("ne", (e, rhs))
                if nxt.text == "<":
                    return A.SOp("lt", (e, rhs))
                if nxt.text == "<=":
                    return A.SOp("le", (e, rhs))
                if nxt.text == ">":
                    return A.SOp("lt", (rhs, e))
                return A.SOp("le", (rhs, e))
            ts.expect(")")
            return e
        if ts.at("{"):
            ts.next()
            if ts.accept("}"):
                return A.SLit(frozenset())
            parts = [self.parse_sexpr()]
            while ts.accept(","):
                parts.append(self.parse_sexpr())
            ts.expect("}")
            return A.SOp("setlit", tuple(parts))
        if t.kind == "id" and t.text == "ind" and ts.peek(1).text == "(":
            ts.next()
            ts.expect("(")
            phi = self.parse_sassn()
            ts.expect(")")
            return A.SInd(phi)
        if t.kind == "id" and t.text == "E" and ts.peek(1).text == "[":
            ts.next()
            ts.expect("[")
            var = ts.expect_id().text
            ts.expect("~")
            g = self.pp.parse_dexpr()
            ts.expect("]")
            ts.expect("(")
            body = self.parse_sexpr()
            ts.expect(")")
            return A.SExpect(var, g, body)
        if t.kind == "id":
            ts.next()
            if ts.at("(") and t.text in sy.OPERATORS:
                ts.next()
                args = []
                if not ts.at(")"):
                    args.append(self.parse_sexpr())
                    while ts.accept(","):
                        args.append(self.parse_sexpr())
                ts.expect(")")
                return A.SOp(t.text, tuple(args))
            if self._is_prog_var(t.text):
                return A.SProg(t.text)
            return A.SLog(t.text)
        ts.error("expected a state expression")


def _fold_pexpr(p):
    if isinstance(p, A.POp):
        args = tuple(_fold_pexpr(a) for a in p.args)
        if all(isinstance(a, A.PLit) for a in args):
            try:
                return A.plit(sy.apply_op(p.op, [a.value for a in args]))
            except sy.EvalError:
                return A.POp(p.op, args)
        return A.POp(p.op, args)
    return p


def parse_passn(text: str, program: sy.Program | None = None) -> A.PAssn:
    ap = AssertionParser(TokenStream(tokenize(text)), program)
    out = ap.parse_passn()
    if not ap.ts.at_kind("eof"):
        ap.ts.error("trailing input after assertion")
    return out


def parse_sassn(text: str, program: sy.Program | None = None) -> A.SAssn:
    ap = AssertionParser(TokenStream(tokenize(text)), program)
    out = ap.parse_sassn()
    if not ap.ts.at_kind("eof"):
        ap.ts.error("trailing input after assertion")
    return out


def parse_sexpr(text: str, program: sy.Program | None = None) -> A.SExpr:
    ap = AssertionParser(TokenStream(tokenize(text)), program)
    out = ap.parse_sexpr()
    if not ap.ts.at_kind("eof"):
        ap.ts.error("trailing input after expression")
    return out


# ---------------------------------------------------------------------------
# Printing


_S_BIN = {
    "eq": "=", "lt": "<", "le": "<=", "mem": "in",
    "add": "+", "sub": "-", "mul": "*", "rdiv": "/", "idiv": "div", "mod": "mod",
}
_S_LEVEL = {"add": 6, "sub": 6, "mul": 7, "rdiv": 7, "idiv": 7, "mod": 7}


def print_sexpr(se, prec=0) -> str:
    if isinstance(se, (A.SProg, A.SLog)):
        return se.name
    if isinstance(se, A.SLit):
        if type(se.value) in (int, Fraction) and se.value < 0:
            return f"({print_value(se.value)})"
        return print_value(se.value)
    if isinstance(se, A.SInd):
        return f"ind({print_sassn(se.assn)})"
    if isinstance(se, A.SExpect):
        return f"E[{se.var} ~ {print_dexpr(se.dexpr)}]({print_sexpr(se.body)})"
    if isinstance(se, A.SCondE):
        s = f"{print_sexpr(se.cond, 1)} ? {print_sexpr(se.then, 1)} : {print_sexpr(se.orelse, 1)}"
        return f"({s})" if prec > 0 else s
    if isinstance(se, A.SOp):
        if se.op in _S_LEVEL and len(se.args) == 2:
            lv = _S_LEVEL[se.op]
            s = f"{print_sexpr(se.args[0], lv)} {_S_BIN[se.op]} {print_sexpr(se.args[1], lv + 1)}"
            return f"({s})" if prec > lv else s
        if se.op in ("eq", "lt", "le") and len(se.args) == 2:
            return f"({print_sexpr(se.args[0], 6)} {_S_BIN[se.op]} {print_sexpr(se.args[1], 6)})"
        if se.op == "ne" and len(se.args) == 2:
            return f"({print_sexpr(se.args[0], 6)} != {print_sexpr(se.args[1], 6)})"
        if se.op == "neg":
            return f"(-{print_sexpr(se.args[0], 8)})"
        if se.op == "index":
            return f"{print_sexpr(se.args[0], 9)}[{print_sexpr(se.args[1])}]"
        if se.op == "setlit":
            return "{" + ", ".join(print_sexpr(a) for a in se.args) + "}"
        if se.op == "tup":
            return "(" + ", ".join(print_sexpr(a) for a in se.args) + ")"
        return f"{se.op}(" + ", ".join(print_sexpr(a) for a in se.args) + ")"
    raise TypeError(f"not a state expression: {se!r}")


def print_sassn(phi, prec=0) -> str:
    if isinstance(phi, A.STrue):
        return "true"
    if isinstance(phi, A.SFalse):
        return "false"
    if isinstance(phi, A.SCmp):
        if phi.op == "eq" and phi.rhs == A.SLit(True) and not isinstance(phi.lhs, A.SLit):
            return print_sexpr(phi.lhs, 6)
        return f"{print_sexpr(phi.lhs, 6)} {_S_BIN[phi.op]} {print_sexpr(phi.rhs, 6)}"
    if isinstance(phi, A.SNot):
        return f"not ({print_sassn(phi.body)})"
    if isinstance(phi, A.SAnd):
        s = f"{print_sassn(phi.lhs, 3)} /\\ {print_sassn(phi.rhs, 4)}"
        return f"({s})" if prec > 3 else s
    if isinstance(phi, A.SOr):
        s = f"{print_sassn(phi.lhs, 2)} \\/ {print_sassn(phi.rhs, 3)}"
        return f"({s})" if prec > 2 else s
    if isinstance(phi, A.SImp):
        s = f"{print_sassn(phi.lhs, 2)} => {print_sassn(phi.rhs, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(phi, A.SQuant):
        s = f"{phi.kind} {phi.var} in {phi.sort}. {print_sassn(phi.body)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"not a state assertion: {phi!r}")


def print_pexpr(p, prec=0) -> str:
    if isinstance(p, A.PLog):
        return p.name
    if isinstance(p, A.PLit):
        if p.value < 0:
            return f"({print_value(p.value)})"
        return print_value(p.value)
    if isinstance(p, A.PEx):
        if isinstance(p.body, A.SInd):
            return f"Pr[{print_sassn(p.body.assn)}]"
        return f"E[{print_sexpr(p.body)}]"
    if isinstance(p, A.POp):
        if p.op in ("add", "sub") and len(p.args) == 2:
            s = f"{print_pexpr(p.args[0], 6)} {'+' if p.op == 'add' else '-'} {print_pexpr(p.args[1], 7)}"
            return f"({s})" if prec > 6 else s
        if p.op in ("mul", "rdiv") and len(p.args) == 2:
            s = f"{print_pexpr(p.args[0], 7)} {'*' if p.op == 'mul' else '/'} {print_pexpr(p.args[1], 8)}"
            return f"({s})" if prec > 7 else s
        if p.op == "neg":
            return f"(-{print_pexpr(p.args[0], 8)})"
        return f"{p.op}(" + ", ".join(print_pexpr(a) for a in p.args) + ")"
    raise TypeError(f"not a probabilistic expression: {p!r}")


def _box_body(eta):
    """The phi with [] (phi) meaning eta, if eta has that shape."""
    if (
        isinstance(eta, A.PCmp)
        and eta.op == "eq"
        and isinstance(eta.rhs, A.PLit)
        and eta.rhs.value == 0
        and isinstance(eta.lhs, A.PEx)
        and isinstance(eta.lhs.body, A.SInd)
        and isinstance(eta.lhs.body.assn, A.SNot)
    ):
        return eta.lhs.body.assn.body
    return None


def print_passn(eta, prec=0) -> str:
    if isinstance(eta, A.PTrue):
        return "true"
    if isinstance(eta, A.PFalse):
        return "false"
    if eta == A.lossless_assn():
        return "L"
    body = _box_body(eta)
    if body is not None:
        return f"[] ({print_sassn(body)})"
    if isinstance(eta, A.PCmp):
        return f"{print_pexpr(eta.lhs, 6)} {_S_BIN[eta.op]} {print_pexpr(eta.rhs, 6)}"
    if isinstance(eta, A.PNot):
        return f"not ({print_passn(eta.body)})"
    if isinstance(eta, A.PAnd):
        s = f"{print_passn(eta.lhs, 4)} /\\ {print_passn(eta.rhs, 5)}"
        return f"({s})" if prec > 4 else s
    if isinstance(eta, A.POr):
        s = f"{print_passn(eta.lhs, 3)} \\/ {print_passn(eta.rhs, 4)}"
        return f"({s})" if prec > 3 else s
    if isinstance(eta, A.PImp):
        s = f"{print_passn(eta.lhs, 2)} => {print_passn(eta.rhs, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(eta, A.PQuant):
        s = f"{eta.kind} {eta.var} in {eta.sort}. {print_passn(eta.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(eta, A.PSplit):
        s = f"{print_passn(eta.lhs, 3)} (+) {print_passn(eta.rhs, 3)}"
        if isinstance(eta.witness, A.EventWitness):
            s += f" witness ({print_sassn(eta.witness.assn)})"
        elif eta.witness is not None:
            s += " witness (...)"  # pair witnesses have no concrete syntax
        return f"({s})" if prec > 2 else s
    if isinstance(eta, A.PIndep):
        return "indep{" + ", ".join(print_sexpr(e) for e in eta.exprs) + "}"
    if isinstance(eta, A.PFollows):
        return f"{print_sexpr(eta.expr, 6)} ~ {print_dexpr(eta.dexpr)}"
    if isinstance(eta, A.PCharac):
        return f"charac(<{len(eta.dist)} states>)"
    raise TypeError(f"not a probabilistic assertion: {eta!r}")
