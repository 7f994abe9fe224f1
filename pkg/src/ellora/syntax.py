"""Abstract syntax for pWhile programs and static well-formedness analysis.

Statements cover the kernel grammar (skip, abort, assignment, sampling,
sequencing, conditionals, while loops, procedure and adversary calls);
bounded for-loops are desugared at parse time.  Expressions are built from
an extensible operator registry so corpus-specific operators (sets, maps,
bit tests) register here instead of growing the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .values import (
    ArrVal,
    ArraySort,
    BoolSort,
    IntRangeSort,
    IntSort,
    MapSort,
    MapVal,
    SetSort,
    Sort,
    TupleSort,
)


class EvalError(Exception):
    """Runtime evaluation failure inside expression or program semantics."""


class DivByZeroError(EvalError):
    pass


class DomainEscapeError(EvalError):
    """A computed value left the declared finite domain of its variable."""


class BadParamError(EvalError):
    """Distribution expression instantiated with out-of-range parameters."""


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Var:
    name: str


def values_identical(a, b) -> bool:
    """Equality that keeps bool apart from int (Python's True == 1)."""
    if type(a) is not type(b):
        return False
    return a == b


@dataclass(frozen=True, eq=False)
class Lit:
    value: object

    def __eq__(self, other):
        return isinstance(other, Lit) and values_identical(self.value, other.value)

    def __hash__(self):
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple


@dataclass(frozen=True)
class CondExpr:
    """Lazy conditional choice b ? e1 : e2 (only the taken branch evaluates)."""

    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


Expr = object  # Var | Lit | Op | CondExpr


def _as_int(v, what="operand"):
    if type(v) is bool or type(v) is not int:
        raise EvalError(f"{what} must be an integer, got {v!r}")
    return v


def _as_num(v):
    if type(v) is bool or type(v) not in (int, Fraction):
        raise EvalError(f"numeric operand expected, got {v!r}")
    return v


def _as_bool(v):
    if type(v) is not bool:
        raise EvalError(f"boolean operand expected, got {v!r}")
    return v


def _rdiv(a, b):
    a, b = _as_num(a), _as_num(b)
    if b == 0:
        raise DivByZeroError("division by zero")
    return Fraction(a) / Fraction(b)


def _idiv(a, b):
    a, b = _as_int(a), _as_int(b)
    if b == 0:
        raise DivByZeroError("integer division by zero")
    return a // b


def _mod(a, b):
    a, b = _as_int(a), _as_int(b)
    if b == 0:
        raise DivByZeroError("modulo by zero")
    return a % b


def _pow(a, b):
    a = _as_num(a)
    if type(b) is Fraction and b.denominator == 1:
        b = int(b)
    b = _as_int(b, "exponent")
    if b < 0:
        if a == 0:
            raise DivByZeroError("zero to a negative power")
        return Fraction(a) ** b
    return a ** b


def _index(c, i):
    if type(c) is ArrVal:
        try:
            return c.get(_as_int(i, "index"))
        except IndexError as e:
            raise DomainEscapeError(str(e)) from None
    if type(c) is MapVal:
        try:
            return c.get(i)
        except KeyError:
            raise DomainEscapeError(f"map lookup of absent key {i!r}") from None
    raise EvalError(f"cannot index into {c!r}")


def _store(c, i, v):
    if type(c) is ArrVal:
        try:
            return c.set(_as_int(i, "index"), v)
        except IndexError as e:
            raise DomainEscapeError(str(e)) from None
    if type(c) is MapVal:
        return c.set(i, v)
    raise EvalError(f"cannot store into {c!r}")


def _mem(k, c):
    if type(c) is MapVal:
        return c.has(k)
    if type(c) is frozenset:
        return k in c
    raise EvalError(f"membership test on {c!r}")


def _size(c):
    if type(c) in (MapVal, frozenset, ArrVal):
        return len(c)
    raise EvalError(f"size of {c!r}")


def _codom(c):
    if type(c) is MapVal:
        return frozenset(c.values())
    raise EvalError(f"codom of {c!r}")


def _dom(c):
    if type(c) is MapVal:
        return frozenset(c.keys())
    raise EvalError(f"dom of {c!r}")


def _setop(f):
    def g(a, b):
        if type(a) is frozenset and type(b) is frozenset:
            return f(a, b)
        raise EvalError("set operands expected")

    return g


# name -> (arity or None for variadic, evaluator)
OPERATORS = {
    "add": (2, lambda a, b: _as_num(a) + _as_num(b)),
    "sub": (2, lambda a, b: _as_num(a) - _as_num(b)),
    "mul": (2, lambda a, b: _as_num(a) * _as_num(b)),
    "rdiv": (2, _rdiv),
    "idiv": (2, _idiv),
    "mod": (2, _mod),
    "neg": (1, lambda a: -_as_num(a)),
    "min": (2, lambda a, b: min(_as_num(a), _as_num(b))),
    "max": (2, lambda a, b: max(_as_num(a), _as_num(b))),
    "pow": (2, _pow),
    "eq": (2, lambda a, b: a == b),
    "ne": (2, lambda a, b: a != b),
    "lt": (2, lambda a, b: _as_num(a) < _as_num(b)),
    "le": (2, lambda a, b: _as_num(a) <= _as_num(b)),
    "and": (2, lambda a, b: _as_bool(a) and _as_bool(b)),
    "or": (2, lambda a, b: _as_bool(a) or _as_bool(b)),
    "not": (1, lambda a: not _as_bool(a)),
    "xor": (2, lambda a, b: _as_bool(a) != _as_bool(b)),
    "index": (2, _index),
    "store": (3, _store),
    "mem": (2, _mem),
    "size": (1, _size),
    "codom": (1, _codom),
    "dom": (1, _dom),
    "union": (2, _setop(lambda a, b: a | b)),
    "inter": (2, _setop(lambda a, b: a & b)),
    "diff": (2, _setop(lambda a, b: a - b)),
    "setlit": (None, lambda *xs: frozenset(xs)),
    "tup": (None, lambda *xs: tuple(xs)),
    "fst": (1, lambda t: t[0]),
    "snd": (1, lambda t: t[1]),
    # testbit(n, k): k-th bit of n, 1-indexed from the least significant
    "testbit": (2, lambda n, k: bool(_as_int(n) >> (_as_int(k) - 1) & 1)),
}


def register_operator(name: str, arity, fn):
    """Extension point for new operators; never edit the parser for these."""
    if name in OPERATORS:
        raise ValueError(f"operator {name!r} already registered")
    OPERATORS[name] = (arity, fn)


def apply_op(op: str, args):
    if op not in OPERATORS:
        raise EvalError(f"unknown operator {op!r}")
    arity, fn = OPERATORS[op]
    if arity is not None and len(args) != arity:
        raise EvalError(f"operator {op!r} expects {arity} arguments, got {len(args)}")
    return fn(*args)


# ---------------------------------------------------------------------------
# Distribution expressions


@dataclass(frozen=True)
class BernoulliD:
    p: Expr


@dataclass(frozen=True)
class UniformRangeD:
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class UniformSetD:
    set: Expr


@dataclass(frozen=True)
class BinomialD:
    n: Expr
    p: Fraction


@dataclass(frozen=True)
class TableD:
    """Explicit finite table of (value, mass) entries; masses may sum below 1."""

    entries: tuple


DExpr = object  # BernoulliD | UniformRangeD | UniformSetD | BinomialD | TableD


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Skip:
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Abort:
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Sample:
    var: str
    dist: DExpr
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: "Stmt"
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Stmt"
    label: str = "loop"
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    var: str
    proc: str
    arg: Expr
    pos: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AdvCall:
    var: str
    adv: str
    arg: Expr
    pos: object = field(default=None, compare=False, repr=False)


Stmt = object


def seq_of(stmts) -> Stmt:
    """Right-nested Seq of a statement list; empty list is Skip."""
    stmts = list(stmts)
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def seq_list(s: Stmt) -> list:
    if isinstance(s, Seq):
        return seq_list(s.first) + seq_list(s.second)
    return [s]


# ---------------------------------------------------------------------------
# Procedures, adversaries, programs


@dataclass(frozen=True)
class Proc:
    name: str
    arg: str
    locals: tuple  # ((name, Sort), ...), including arg
    body: Stmt
    ret: Expr


@dataclass(frozen=True)
class AdvDecl:
    name: str
    oracles: tuple
    arg: str
    locals: tuple  # ((name, Sort), ...), including arg
    ret: Expr


@dataclass(frozen=True)
class Program:
    globals: tuple  # ((name, Sort), ...)
    procs: tuple  # (Proc, ...)
    advs: tuple  # (AdvDecl, ...)
    main: Stmt

    def proc(self, name) -> Proc:
        for p in self.procs:
            if p.name == name:
                return p
        raise KeyError(f"no procedure {name!r}")

    def adv(self, name) -> AdvDecl:
        for a in self.advs:
            if a.name == name:
                return a
        raise KeyError(f"no adversary {name!r}")

    def all_vars(self) -> tuple:
        """All declared variables (globals then every local), with sorts."""
        out = list(self.globals)
        for p in self.procs:
            out.extend(p.locals)
        for a in self.advs:
            out.extend(a.locals)
        return tuple(out)

    def var_sort(self, name) -> Sort:
        for n, s in self.all_vars():
            if n == name:
                return s
        raise KeyError(f"undeclared variable {name!r}")

    def has_var(self, name) -> bool:
        return any(n == name for n, _ in self.all_vars())

    def global_names(self) -> frozenset:
        return frozenset(n for n, _ in self.globals)

    def initial_state(self):
        from .subdist import State

        return State({n: s.default() for n, s in self.all_vars()})


# ---------------------------------------------------------------------------
# Syntactic traversals


def free_vars_expr(e) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, Op):
        out = frozenset()
        for a in e.args:
            out |= free_vars_expr(a)
        return out
    if isinstance(e, CondExpr):
        return free_vars_expr(e.cond) | free_vars_expr(e.then) | free_vars_expr(e.orelse)
    raise TypeError(f"not an expression: {e!r}")


def free_vars_dexpr(g) -> frozenset:
    if isinstance(g, BernoulliD):
        return free_vars_expr(g.p)
    if isinstance(g, UniformRangeD):
        return free_vars_expr(g.lo) | free_vars_expr(g.hi)
    if isinstance(g, UniformSetD):
        return free_vars_expr(g.set)
    if isinstance(g, BinomialD):
        return free_vars_expr(g.n)
    if isinstance(g, TableD):
        return frozenset()
    raise TypeError(f"not a distribution expression: {g!r}")


def subst_expr(e, name: str, repl) -> Expr:
    if isinstance(e, Var):
        return repl if e.name == name else e
    if isinstance(e, Lit):
        return e
    if isinstance(e, Op):
        return Op(e.op, tuple(subst_expr(a, name, repl) for a in e.args))
    if isinstance(e, CondExpr):
        return CondExpr(
            subst_expr(e.cond, name, repl),
            subst_expr(e.then, name, repl),
            subst_expr(e.orelse, name, repl),
        )
    raise TypeError(f"not an expression: {e!r}")


def subst_dexpr(g, name: str, repl) -> DExpr:
    if isinstance(g, BernoulliD):
        return BernoulliD(subst_expr(g.p, name, repl))
    if isinstance(g, UniformRangeD):
        return UniformRangeD(subst_expr(g.lo, name, repl), subst_expr(g.hi, name, repl))
    if isinstance(g, UniformSetD):
        return UniformSetD(subst_expr(g.set, name, repl))
    if isinstance(g, BinomialD):
        return BinomialD(subst_expr(g.n, name, repl), g.p)
    if isinstance(g, TableD):
        return g
    raise TypeError(f"not a distribution expression: {g!r}")


def subst_stmt(s, name: str, repl) -> Stmt:
    """Substitute an expression for a variable inside a statement (used by
    for-loop desugaring; the target variable must not be assigned in s)."""
    if isinstance(s, (Skip, Abort)):
        return s
    if isinstance(s, Assign):
        if s.var == name:
            raise ValueError(f"cannot substitute assigned variable {name!r}")
        return Assign(s.var, subst_expr(s.expr, name, repl), pos=s.pos)
    if isinstance(s, Sample):
        if s.var == name:
            raise ValueError(f"cannot substitute assigned variable {name!r}")
        return Sample(s.var, subst_dexpr(s.dist, name, repl), pos=s.pos)
    if isinstance(s, Seq):
        return Seq(subst_stmt(s.first, name, repl), subst_stmt(s.second, name, repl), pos=s.pos)
    if isinstance(s, If):
        return If(
            subst_expr(s.cond, name, repl),
            subst_stmt(s.then, name, repl),
            subst_stmt(s.orelse, name, repl),
            pos=s.pos,
        )
    if isinstance(s, While):
        return While(subst_expr(s.cond, name, repl), subst_stmt(s.body, name, repl), s.label, pos=s.pos)
    if isinstance(s, Call):
        if s.var == name:
            raise ValueError(f"cannot substitute assigned variable {name!r}")
        return Call(s.var, s.proc, subst_expr(s.arg, name, repl), pos=s.pos)
    if isinstance(s, AdvCall):
        if s.var == name:
            raise ValueError(f"cannot substitute assigned variable {name!r}")
        return AdvCall(s.var, s.adv, subst_expr(s.arg, name, repl), pos=s.pos)
    raise TypeError(f"not a statement: {s!r}")


def fold_expr(e) -> Expr:
    """Constant folding; total operators over literals reduce to literals."""
    if isinstance(e, (Var, Lit)):
        return e
    if isinstance(e, Op):
        args = tuple(fold_expr(a) for a in e.args)
        if all(isinstance(a, Lit) for a in args):
            try:
                return Lit(apply_op(e.op, [a.value for a in args]))
            except EvalError:
                return Op(e.op, args)
        return Op(e.op, args)
    if isinstance(e, CondExpr):
        c = fold_expr(e.cond)
        if isinstance(c, Lit) and type(c.value) is bool:
            return fold_expr(e.then) if c.value else fold_expr(e.orelse)
        return CondExpr(c, fold_expr(e.then), fold_expr(e.orelse))
    raise TypeError(f"not an expression: {e!r}")


def stmt_loops(s) -> list:
    """All While nodes in syntactic order."""
    if isinstance(s, While):
        return [s] + stmt_loops(s.body)
    if isinstance(s, Seq):
        return stmt_loops(s.first) + stmt_loops(s.second)
    if isinstance(s, If):
        return stmt_loops(s.then) + stmt_loops(s.orelse)
    return []


def _direct_writes(s) -> frozenset:
    if isinstance(s, (Assign, Sample)):
        return frozenset([s.var])
    if isinstance(s, Seq):
        return _direct_writes(s.first) | _direct_writes(s.second)
    if isinstance(s, If):
        return _direct_writes(s.then) | _direct_writes(s.orelse)
    if isinstance(s, While):
        return _direct_writes(s.body)
    return frozenset()


def modified_vars(s, program: Program) -> frozenset:
    """Variables a statement may modify.

    Assignments and samplings contribute their targets.  A procedure call
    contributes its return variable and the globals written by the callee
    (transitively); callee locals are excluded because calls restore them.
    An adversary call contributes its return variable, every adversary
    local, and the globals written by any of its oracles.
    """
    if isinstance(s, (Skip, Abort)):
        return frozenset()
    if isinstance(s, (Assign, Sample)):
        return frozenset([s.var])
    if isinstance(s, Seq):
        return modified_vars(s.first, program) | modified_vars(s.second, program)
    if isinstance(s, If):
        return modified_vars(s.then, program) | modified_vars(s.orelse, program)
    if isinstance(s, While):
        return modified_vars(s.body, program)
    if isinstance(s, Call):
        p = program.proc(s.proc)
        locals_ = frozenset(n for n, _ in p.locals)
        inner = modified_vars(p.body, program)
        return frozenset([s.var]) | (inner - locals_)
    if isinstance(s, AdvCall):
        a = program.adv(s.adv)
        out = frozenset([s.var]) | frozenset(n for n, _ in a.locals)
        for oname in a.oracles:
            p = program.proc(oname)
            locals_ = frozenset(n for n, _ in p.locals)
            out |= modified_vars(p.body, program) - locals_
        return out
    raise TypeError(f"not a statement: {s!r}")


# ---------------------------------------------------------------------------
# Well-formedness


@dataclass(frozen=True)
class Diagnostic:
    code: str  # SortError | Recursion | UninitLocal | AdvScope | InfiniteDomain | DupLabel
    message: str
    pos: object = None

    def __str__(self):
        loc = f" at {self.pos[0]}:{self.pos[1]}" if self.pos else ""
        return f"{self.code}{loc}: {self.message}"


_NUMERIC = "num"
_ANY = "any"


def _kind_of_sort(s: Sort):
    if isinstance(s, BoolSort):
        return "bool"
    if isinstance(s, (IntRangeSort, IntSort)):
        return _NUMERIC
    if isinstance(s, ArraySort):
        return ("array", _kind_of_sort(s.elem))
    if isinstance(s, MapSort):
        return ("map", _kind_of_sort(s.key), _kind_of_sort(s.val))
    if isinstance(s, SetSort):
        return ("set", _kind_of_sort(s.elem))
    if isinstance(s, TupleSort):
        return ("tuple",) + tuple(_kind_of_sort(x) for x in s.elems)
    return _ANY


def _kind_of_value(v):
    if type(v) is bool:
        return "bool"
    if type(v) in (int, Fraction):
        return _NUMERIC
    if type(v) is ArrVal:
        return ("array", _kind_of_value(v.items[0]) if v.items else _ANY)
    if type(v) is MapVal:
        if v.items:
            k, x = v.items[0]
            return ("map", _kind_of_value(k), _kind_of_value(x))
        return ("map", _ANY, _ANY)
    if type(v) is frozenset:
        for x in v:
            return ("set", _kind_of_value(x))
        return ("set", _ANY)
    if type(v) is tuple:
        return ("tuple",) + tuple(_kind_of_value(x) for x in v)
    return _ANY


def _kinds_compatible(a, b) -> bool:
    if a == _ANY or b == _ANY:
        return True
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_kinds_compatible(x, y) for x, y in zip(a, b))
    return a == b


_OP_KINDS = {
    # op -> (arg kinds, result kind); _ANY entries are checked dynamically
    "add": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "sub": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "mul": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "rdiv": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "idiv": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "mod": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "neg": ((_NUMERIC,), _NUMERIC),
    "min": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "max": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "pow": ((_NUMERIC, _NUMERIC), _NUMERIC),
    "eq": ((_ANY, _ANY), "bool"),
    "ne": ((_ANY, _ANY), "bool"),
    "lt": ((_NUMERIC, _NUMERIC), "bool"),
    "le": ((_NUMERIC, _NUMERIC), "bool"),
    "and": (("bool", "bool"), "bool"),
    "or": (("bool", "bool"), "bool"),
    "not": (("bool",), "bool"),
    "xor": (("bool", "bool"), "bool"),
    "testbit": ((_NUMERIC, _NUMERIC), "bool"),
}


def _expr_kind(e, env, diags, pos):
    """Best-effort kind inference; records SortError diagnostics."""
    if isinstance(e, Var):
        if e.name not in env:
            diags.append(Diagnostic("SortError", f"undeclared variable {e.name!r}", pos))
            return _ANY
        return _kind_of_sort(env[e.name])
    if isinstance(e, Lit):
        return _kind_of_value(e.value)
    if isinstance(e, CondExpr):
        ck = _expr_kind(e.cond, env, diags, pos)
        if not _kinds_compatible(ck, "bool"):
            diags.append(Diagnostic("SortError", "conditional guard must be boolean", pos))
        tk = _expr_kind(e.then, env, diags, pos)
        fk = _expr_kind(e.orelse, env, diags, pos)
        if not _kinds_compatible(tk, fk):
            diags.append(Diagnostic("SortError", "conditional branches disagree in sort", pos))
        return tk if tk != _ANY else fk
    if isinstance(e, Op):
        kinds = [_expr_kind(a, env, diags, pos) for a in e.args]
        if e.op in _OP_KINDS:
            want, res = _OP_KINDS[e.op]
            if len(kinds) != len(want):
                diags.append(Diagnostic("SortError", f"operator {e.op!r} arity", pos))
            else:
                for k, w in zip(kinds, want):
                    if not _kinds_compatible(k, w):
                        diags.append(
                            Diagnostic("SortError", f"operator {e.op!r} applied to wrong sort", pos)
                        )
            return res
        if e.op == "index":
            k = kinds[0] if kinds else _ANY
            if isinstance(k, tuple) and k and k[0] == "array":
                return k[1]
            if isinstance(k, tuple) and k and k[0] == "map":
                return k[2]
            if k != _ANY:
                diags.append(Diagnostic("SortError", "indexing a non-array/map", pos))
            return _ANY
        if e.op == "store":
            return kinds[0] if kinds else _ANY
        if e.op == "mem":
            return "bool"
        if e.op == "size":
            return _NUMERIC
        if e.op in ("codom", "dom"):
            k = kinds[0] if kinds else _ANY
            if isinstance(k, tuple) and k and k[0] == "map":
                return ("set", k[2] if e.op == "codom" else k[1])
            return ("set", _ANY)
        if e.op in ("union", "inter", "diff"):
            return kinds[0] if kinds and kinds[0] != _ANY else (kinds[1] if len(kinds) > 1 else _ANY)
        if e.op == "setlit":
            return ("set", kinds[0] if kinds else _ANY)
        if e.op == "tup":
            return ("tuple",) + tuple(kinds)
        if e.op == "fst":
            k = kinds[0] if kinds else _ANY
            return k[1] if isinstance(k, tuple) and len(k) > 1 and k[0] == "tuple" else _ANY
        if e.op == "snd":
            k = kinds[0] if kinds else _ANY
            return k[2] if isinstance(k, tuple) and len(k) > 2 and k[0] == "tuple" else _ANY
        if e.op not in OPERATORS:
            diags.append(Diagnostic("SortError", f"unknown operator {e.op!r}", pos))
        return _ANY
    diags.append(Diagnostic("SortError", f"not an expression: {e!r}", pos))
    return _ANY


def _check_bool(e, env, diags, pos, what):
    k = _expr_kind(e, env, diags, pos)
    if not _kinds_compatible(k, "bool"):
        diags.append(Diagnostic("SortError", f"{what} must be boolean", pos))


def _dexpr_kind(g, env, diags, pos):
    if isinstance(g, BernoulliD):
        return "bool"
    if isinstance(g, (UniformRangeD, BinomialD)):
        return _NUMERIC
    if isinstance(g, UniformSetD):
        k = _expr_kind(g.set, env, diags, pos)
        return k[1] if isinstance(k, tuple) and k and k[0] == "set" else _ANY
    if isinstance(g, TableD):
        return _kind_of_value(g.entries[0][0]) if g.entries else _ANY
    return _ANY


def _dexpr_exprs(g):
    if isinstance(g, BernoulliD):
        return [g.p]
    if isinstance(g, UniformRangeD):
        return [g.lo, g.hi]
    if isinstance(g, UniformSetD):
        return [g.set]
    if isinstance(g, BinomialD):
        return [g.n]
    if isinstance(g, TableD):
        return []
    raise TypeError(f"not a distribution expression: {g!r}")


def _check_stmt(s, env, program, diags, writable, reader):
    """reader(varset, pos) is called with variables read, for init analysis."""
    if isinstance(s, (Skip, Abort)):
        return
    if isinstance(s, Assign):
        reader(free_vars_expr(s.expr), s.pos)
        k = _expr_kind(s.expr, env, diags, s.pos)
        _target(s, env, diags, writable)
        if s.var in env and not _kinds_compatible(k, _kind_of_sort(env[s.var])):
            diags.append(
                Diagnostic("SortError", f"assignment to {s.var!r} has incompatible sort", s.pos)
            )
        return
    if isinstance(s, Sample):
        for e in _dexpr_exprs(s.dist):
            reader(free_vars_expr(e), s.pos)
            _expr_kind(e, env, diags, s.pos)
        if isinstance(s.dist, TableD):
            total = sum((Fraction(q) for _, q in s.dist.entries), Fraction(0))
            if total > 1:
                diags.append(Diagnostic("SortError", "table masses sum above 1", s.pos))
        _target(s, env, diags, writable)
        k = _dexpr_kind(s.dist, env, diags, s.pos)
        if s.var in env and not _kinds_compatible(k, _kind_of_sort(env[s.var])):
            diags.append(
                Diagnostic("SortError", f"sampling into {s.var!r} has incompatible sort", s.pos)
            )
        return
    if isinstance(s, Seq):
        _check_stmt(s.first, env, program, diags, writable, reader)
        _check_stmt(s.second, env, program, diags, writable, reader)
        return
    if isinstance(s, If):
        reader(free_vars_expr(s.cond), s.pos)
        _check_bool(s.cond, env, diags, s.pos, "if guard")
        _check_stmt(s.then, env, program, diags, writable, reader)
        _check_stmt(s.orelse, env, program, diags, writable, reader)
        return
    if isinstance(s, While):
        reader(free_vars_expr(s.cond), s.pos)
        _check_bool(s.cond, env, diags, s.pos, "while guard")
        _check_stmt(s.body, env, program, diags, writable, reader)
        return
    if isinstance(s, Call):
        reader(free_vars_expr(s.arg), s.pos)
        _expr_kind(s.arg, env, diags, s.pos)
        _target(s, env, diags, writable)
        try:
            program.proc(s.proc)
        except KeyError:
            diags.append(Diagnostic("SortError", f"call to undeclared procedure {s.proc!r}", s.pos))
        return
    if isinstance(s, AdvCall):
        reader(free_vars_expr(s.arg), s.pos)
        _expr_kind(s.arg, env, diags, s.pos)
        _target(s, env, diags, writable)
        try:
            program.adv(s.adv)
        except KeyError:
            diags.append(Diagnostic("SortError", f"call to undeclared adversary {s.adv!r}", s.pos))
        return
    diags.append(Diagnostic("SortError", f"not a statement: {s!r}", None))


def _target(s, env, diags, writable):
    if s.var not in env:
        diags.append(Diagnostic("SortError", f"assignment to undeclared variable {s.var!r}", s.pos))
    elif writable is not None and s.var not in writable:
        diags.append(Diagnostic("AdvScope", f"write to out-of-scope variable {s.var!r}", s.pos))


def _call_graph(program) -> dict:
    graph = {}
    for p in program.procs:
        callees = set()

        def walk(s):
            if isinstance(s, Call):
                callees.add(s.proc)
            elif isinstance(s, Seq):
                walk(s.first), walk(s.second)
            elif isinstance(s, If):
                walk(s.then), walk(s.orelse)
            elif isinstance(s, While):
                walk(s.body)

        walk(p.body)
        graph[p.name] = callees
    return graph


def _find_cycle(graph) -> list:
    state = {}

    def visit(n, path):
        state[n] = "active"
        for m in sorted(graph.get(n, ())):
            if m not in graph:
                continue
            if state.get(m) == "active":
                return path + [m]
            if m not in state:
                got = visit(m, path + [m])
                if got:
                    return got
        state[n] = "done"
        return None

    for n in sorted(graph):
        if n not in state:
            got = visit(n, [n])
            if got:
                return got
    return None


def _init_analysis(body, arg, locals_, diags, where):
    """Locals must be written before read; the arg counts as written."""
    local_names = frozenset(n for n, _ in locals_)

    def walk(s, assigned: frozenset) -> frozenset:
        if isinstance(s, (Skip, Abort)):
            return assigned
        if isinstance(s, (Assign, Sample, Call, AdvCall)):
            if isinstance(s, Assign):
                reads = free_vars_expr(s.expr)
            elif isinstance(s, Sample):
                reads = frozenset().union(*(free_vars_expr(e) for e in _dexpr_exprs(s.dist)), frozenset())
            else:
                reads = free_vars_expr(s.arg)
            bad = (reads & local_names) - assigned
            for b in sorted(bad):
                diags.append(Diagnostic("UninitLocal", f"{where}: local {b!r} read before write", s.pos))
            return assigned | frozenset([s.var])
        if isinstance(s, Seq):
            return walk(s.second, walk(s.first, assigned))
        if isinstance(s, If):
            bad = (free_vars_expr(s.cond) & local_names) - assigned
            for b in sorted(bad):
                diags.append(Diagnostic("UninitLocal", f"{where}: local {b!r} read before write", s.pos))
            return walk(s.then, assigned) & walk(s.orelse, assigned)
        if isinstance(s, While):
            bad = (free_vars_expr(s.cond) & local_names) - assigned
            for b in sorted(bad):
                diags.append(Diagnostic("UninitLocal", f"{where}: local {b!r} read before write", s.pos))
            walk(s.body, assigned)
            return assigned
        return assigned

    final = walk(body, frozenset([arg]) if arg else frozenset())
    return final


def well_formed(program: Program) -> list:
    """All static diagnostics; an empty list means the program is sound to run."""
    diags: list = []
    env = {}
    seen = set()
    for n, s in program.all_vars():
        if n in seen:
            diags.append(Diagnostic("SortError", f"duplicate variable declaration {n!r}"))
        seen.add(n)
        env[n] = s
        if not s.is_finite():
            diags.append(Diagnostic("InfiniteDomain", f"variable {n!r} has infinite domain {s}"))

    labels = [w.label for w in stmt_loops(program.main)]
    for p in program.procs:
        labels += [w.label for w in stmt_loops(p.body)]
    dup = {l for l in labels if labels.count(l) > 1}
    for l in sorted(dup):
        diags.append(Diagnostic("DupLabel", f"duplicate loop label {l!r}"))

    cycle = _find_cycle(_call_graph(program))
    if cycle:
        diags.append(Diagnostic("Recursion", "recursive procedure calls: " + " -> ".join(cycle)))

    _check_stmt(program.main, env, program, diags, None, lambda r, p: None)
    for p in program.procs:
        if not any(n == p.arg for n, _ in p.locals):
            diags.append(Diagnostic("SortError", f"proc {p.name!r}: arg {p.arg!r} not among locals"))
        _check_stmt(p.body, env, program, diags, None, lambda r, pos: None)
        assigned = _init_analysis(p.body, p.arg, p.locals, diags, f"proc {p.name}")
        ret_reads = free_vars_expr(p.ret) & frozenset(n for n, _ in p.locals)
        for b in sorted(ret_reads - assigned):
            diags.append(Diagnostic("UninitLocal", f"proc {p.name!r}: return reads unset local {b!r}"))
        _expr_kind(p.ret, env, diags, None)
    for a in program.advs:
        if not any(n == a.arg for n, _ in a.locals):
            diags.append(Diagnostic("SortError", f"adv {a.name!r}: arg {a.arg!r} not among locals"))
        for o in a.oracles:
            try:
                program.proc(o)
            except KeyError:
                diags.append(Diagnostic("SortError", f"adv {a.name!r}: unknown oracle {o!r}"))
        bad = free_vars_expr(a.ret) - frozenset(n for n, _ in a.locals)
        for b in sorted(bad):
            diags.append(Diagnostic("AdvScope", f"adv {a.name!r}: return reads non-local {b!r}"))
    return diags


def check_adv_body(program: Program, decl: AdvDecl, body: Stmt) -> list:
    """Validate a concrete adversary body against its declaration: it may
    touch only the adversary's locals and call only the declared oracles."""
    diags: list = []
    local_names = frozenset(n for n, _ in decl.locals)
    env = dict(program.all_vars())

    def reader(reads, pos):
        for b in sorted(reads - local_names):
            diags.append(Diagnostic("AdvScope", f"adversary body reads non-local {b!r}", pos))

    def walk(s):
        if isinstance(s, AdvCall):
            diags.append(Diagnostic("AdvScope", "adversary body may not call adversaries", s.pos))
        if isinstance(s, Call) and s.proc not in decl.oracles:
            diags.append(Diagnostic("AdvScope", f"call to undeclared oracle {s.proc!r}", s.pos))
        if isinstance(s, Seq):
            walk(s.first), walk(s.second)
        elif isinstance(s, If):
            walk(s.then), walk(s.orelse)
        elif isinstance(s, While):
            walk(s.body)

    _check_stmt(body, env, program, diags, local_names, reader)
    walk(body)
    return diags


def max_oracle_calls(s) -> object:
    """Static upper bound on oracle calls executed by a statement; None = unbounded."""
    if isinstance(s, Call):
        return 1
    if isinstance(s, Seq):
        a, b = max_oracle_calls(s.first), max_oracle_calls(s.second)
        return None if a is None or b is None else a + b
    if isinstance(s, If):
        a, b = max_oracle_calls(s.then), max_oracle_calls(s.orelse)
        return None if a is None or b is None else max(a, b)
    if isinstance(s, While):
        inner = max_oracle_calls(s.body)
        return 0 if inner == 0 else None
    return 0
