"""Two-level assertion language: syntax, exact semantics, substitution
operators, derived forms, and closedness classification.

State expressions and state assertions speak about one memory; probabilistic
expressions and assertions speak about a sub-distribution over memories via
exact expectations.  Evaluation is three-valued: `(+)`-splits without a
witness and divisions by zero yield the sound verdict UNKNOWN rather than a
crash or a false.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import syntax as sy
from .interp import eval_dexpr, eval_expr
from .subdist import State, SubDist
from .syntax import DivByZeroError, EvalError


class UndefinedError(EvalError):
    """Assertion evaluation hit a partial operation (division by zero)."""


class UnsupportedSplitError(Exception):
    """An operation has no defined action on (+)-split assertions."""


class UnsupportedFormError(Exception):
    """An operation has no defined action on this derived form."""


class NotExpectationFormError(Exception):
    pass


# ---------------------------------------------------------------------------
# Verdicts (Kleene three-valued logic)


class Verdict:
    __slots__ = ("name",)
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __bool__(self):
        raise TypeError("use is_true()/is_false() on verdicts, not truthiness")


TRUE = Verdict("TRUE")
FALSE = Verdict("FALSE")
UNKNOWN = Verdict("UNKNOWN")


def verdict_of(b: bool) -> Verdict:
    return TRUE if b else FALSE


def v_not(a):
    if a is TRUE:
        return FALSE
    if a is FALSE:
        return TRUE
    return UNKNOWN


def v_and(a, b):
    if a is FALSE or b is FALSE:
        return FALSE
    if a is TRUE and b is TRUE:
        return TRUE
    return UNKNOWN


def v_or(a, b):
    if a is TRUE or b is TRUE:
        return TRUE
    if a is FALSE and b is FALSE:
        return FALSE
    return UNKNOWN


def v_imp(a, b):
    return v_or(v_not(a), b)


# ---------------------------------------------------------------------------
# Syntax


@dataclass(frozen=True)
class SProg:
    name: str


@dataclass(frozen=True)
class SLog:
    name: str


@dataclass(frozen=True, eq=False)
class SLit:
    value: object

    def __eq__(self, other):
        return isinstance(other, SLit) and sy.values_identical(self.value, other.value)

    def __hash__(self):
        return hash((type(self.value).__name__, self.value))


@dataclass(frozen=True)
class SInd:
    """Indicator of a state assertion: 1 when it holds, else 0."""

    assn: "SAssn"


@dataclass(frozen=True)
class SExpect:
    """Expectation of `body` with `var` drawn from distribution expression
    `dexpr`, evaluated pointwise in the current memory."""

    var: str
    dexpr: object
    body: "SExpr"


@dataclass(frozen=True)
class SOp:
    op: str
    args: tuple


@dataclass(frozen=True)
class SCondE:
    cond: "SExpr"
    then: "SExpr"
    orelse: "SExpr"


SExpr = object


@dataclass(frozen=True)
class STrue:
    pass


@dataclass(frozen=True)
class SFalse:
    pass


@dataclass(frozen=True)
class SCmp:
    lhs: SExpr
    op: str  # eq | lt | le
    rhs: SExpr


@dataclass(frozen=True)
class SNot:
    body: "SAssn"


@dataclass(frozen=True)
class SAnd:
    lhs: "SAssn"
    rhs: "SAssn"


@dataclass(frozen=True)
class SOr:
    lhs: "SAssn"
    rhs: "SAssn"


@dataclass(frozen=True)
class SImp:
    lhs: "SAssn"
    rhs: "SAssn"


@dataclass(frozen=True)
class SQuant:
    kind: str  # forall | exists
    var: str
    sort: object
    body: "SAssn"


SAssn = object


@dataclass(frozen=True)
class PLog:
    name: str


@dataclass(frozen=True)
class PLit:
    value: Fraction


def plit(q) -> PLit:
    return PLit(Fraction(q))


@dataclass(frozen=True)
class POp:
    op: str  # add | sub | mul | rdiv | min | max | pow | neg
    args: tuple


@dataclass(frozen=True)
class PEx:
    """Expectation of a state expression over the ambient sub-distribution."""

    body: SExpr


PExpr = object


@dataclass(frozen=True)
class PTrue:
    pass


@dataclass(frozen=True)
class PFalse:
    pass


@dataclass(frozen=True)
class PCmp:
    lhs: PExpr
    op: str  # eq | lt | le
    rhs: PExpr


@dataclass(frozen=True)
class EventWitness:
    assn: SAssn


@dataclass(frozen=True)
class PairWitness:
    left: SubDist
    right: SubDist


@dataclass(frozen=True)
class PSplit:
    lhs: "PAssn"
    rhs: "PAssn"
    witness: object = None  # EventWitness | PairWitness | None


@dataclass(frozen=True)
class PNot:
    body: "PAssn"


@dataclass(frozen=True)
class PAnd:
    lhs: "PAssn"
    rhs: "PAssn"


@dataclass(frozen=True)
class POr:
    lhs: "PAssn"
    rhs: "PAssn"


@dataclass(frozen=True)
class PImp:
    lhs: "PAssn"
    rhs: "PAssn"


@dataclass(frozen=True)
class PQuant:
    kind: str
    var: str
    sort: object
    body: "PAssn"


@dataclass(frozen=True)
class PIndep:
    """Joint law factorizes into the product of marginals (with a total-weight
    correction for sub-distributions)."""

    exprs: tuple


@dataclass(frozen=True)
class PFollows:
    """The state expression's law equals the distribution expression's law."""

    expr: SExpr
    dexpr: object


@dataclass(frozen=True)
class PCharac:
    """Test utility: the ambient sub-distribution equals this one exactly."""

    dist: SubDist


PAssn = object


def p_and_all(assns) -> PAssn:
    assns = list(assns)
    if not assns:
        return PTrue()
    out = assns[0]
    for a in assns[1:]:
        out = PAnd(out, a)
    return out


# ---------------------------------------------------------------------------
# Derived forms


def embed_expr(e) -> SExpr:
    """Program expression as a state expression."""
    if isinstance(e, sy.Var):
        return SProg(e.name)
    if isinstance(e, sy.Lit):
        return SLit(e.value)
    if isinstance(e, sy.Op):
        return SOp(e.op, tuple(embed_expr(a) for a in e.args))
    if isinstance(e, sy.CondExpr):
        return SCondE(embed_expr(e.cond), embed_expr(e.then), embed_expr(e.orelse))
    raise TypeError(f"not an expression: {e!r}")


def pr_(phi: SAssn) -> PExpr:
    return PEx(SInd(phi))


def box(phi: SAssn) -> PAssn:
    """Holds on every support point: probability of the negation is zero."""
    return PCmp(pr_(SNot(phi)), "eq", plit(0))


def lossless_assn() -> PAssn:
    return PCmp(pr_(STrue()), "eq", plit(1))


def guard_assn(e) -> SAssn:
    """Boolean program expression as a state assertion, in the natural form
    the assertion parser produces (comparisons and connectives lifted)."""
    if isinstance(e, sy.Lit) and e.value is True:
        return STrue()
    if isinstance(e, sy.Lit) and e.value is False:
        return SFalse()
    if isinstance(e, sy.Op) and len(e.args) == 2 and e.op in ("eq", "lt", "le"):
        return SCmp(embed_expr(e.args[0]), e.op, embed_expr(e.args[1]))
    if isinstance(e, sy.Op) and len(e.args) == 2 and e.op == "ne":
        return SNot(SCmp(embed_expr(e.args[0]), "eq", embed_expr(e.args[1])))
    if isinstance(e, sy.Op) and len(e.args) == 1 and e.op == "not":
        return SNot(guard_assn(e.args[0]))
    if isinstance(e, sy.Op) and len(e.args) == 2 and e.op == "and":
        return SAnd(guard_assn(e.args[0]), guard_assn(e.args[1]))
    if isinstance(e, sy.Op) and len(e.args) == 2 and e.op == "or":
        return SOr(guard_assn(e.args[0]), guard_assn(e.args[1]))
    return SCmp(embed_expr(e), "eq", SLit(True))


def indep(exprs) -> PAssn:
    return PIndep(tuple(exprs))


def follows(expr: SExpr, dexpr) -> PAssn:
    return PFollows(expr, dexpr)


def charac(dist: SubDist) -> PAssn:
    return PCharac(dist)


def indep_expanded(exprs, sorts) -> PAssn:
    """Core-syntax expansion of indep over explicit finite sorts (the node
    form evaluates over observed values instead and needs no sorts)."""
    exprs = tuple(exprs)
    n = len(exprs)
    names = [f"v{i+1}" for i in range(n)]
    joint = None
    prod = None
    for name, se in zip(names, exprs):
        c = SCmp(se, "eq", SLog(name))
        joint = c if joint is None else SAnd(joint, c)
        term = pr_(c)
        prod = term if prod is None else POp("mul", (prod, term))
    lhs = POp("mul", (POp("pow", (pr_(STrue()), plit(n - 1))), pr_(joint)))
    body = PCmp(lhs, "eq", prod)
    for name, sort in reversed(list(zip(names, sorts))):
        body = PQuant("forall", name, sort, body)
    return body


def follows_expanded(expr: SExpr, dexpr, sort) -> PAssn:
    w, v = "w0", "v0"
    inner = PEx(SExpect(v, dexpr, SInd(SCmp(SLog(v), "eq", SLog(w)))))
    return PQuant("forall", w, sort, PCmp(pr_(SCmp(expr, "eq", SLog(w))), "eq", inner))


# ---------------------------------------------------------------------------
# Free variables


def _union(sets):
    out = frozenset()
    for s in sets:
        out |= s
    return out


def free_prog_vars(node) -> frozenset:
    if isinstance(node, SProg):
        return frozenset([node.name])
    if isinstance(node, (SLog, SLit, STrue, SFalse, PLog, PLit, PTrue, PFalse, PCharac)):
        return frozenset()
    if isinstance(node, SInd):
        return free_prog_vars(node.assn)
    if isinstance(node, SExpect):
        return sy.free_vars_dexpr(node.dexpr) | free_prog_vars(node.body)
    if isinstance(node, (SOp, POp)):
        return _union(free_prog_vars(a) for a in node.args)
    if isinstance(node, SCondE):
        return free_prog_vars(node.cond) | free_prog_vars(node.then) | free_prog_vars(node.orelse)
    if isinstance(node, (SCmp, PCmp)):
        return free_prog_vars(node.lhs) | free_prog_vars(node.rhs)
    if isinstance(node, (SNot, PNot)):
        return free_prog_vars(node.body)
    if isinstance(node, (SAnd, SOr, SImp, PAnd, POr, PImp)):
        return free_prog_vars(node.lhs) | free_prog_vars(node.rhs)
    if isinstance(node, (SQuant, PQuant)):
        return free_prog_vars(node.body)
    if isinstance(node, PSplit):
        w = free_prog_vars(node.witness.assn) if isinstance(node.witness, EventWitness) else frozenset()
        return free_prog_vars(node.lhs) | free_prog_vars(node.rhs) | w
    if isinstance(node, PEx):
        return free_prog_vars(node.body)
    if isinstance(node, PIndep):
        return _union(free_prog_vars(e) for e in node.exprs)
    if isinstance(node, PFollows):
        return free_prog_vars(node.expr) | sy.free_vars_dexpr(node.dexpr)
    raise TypeError(f"not an assertion node: {node!r}")


def free_log_vars(node) -> frozenset:
    """Free logical variables.  Note distribution expressions may refer to
    logical variables through plain Var references."""
    if isinstance(node, SLog):
        return frozenset([node.name])
    if isinstance(node, PLog):
        return frozenset([node.name])
    if isinstance(node, (SProg, SLit, STrue, SFalse, PLit, PTrue, PFalse, PCharac)):
        return frozenset()
    if isinstance(node, SInd):
        return free_log_vars(node.assn)
    if isinstance(node, SExpect):
        inner = free_log_vars(node.body) - frozenset([node.var])
        return inner | sy.free_vars_dexpr(node.dexpr)
    if isinstance(node, (SOp, POp)):
        return _union(free_log_vars(a) for a in node.args)
    if isinstance(node, SCondE):
        return free_log_vars(node.cond) | free_log_vars(node.then) | free_log_vars(node.orelse)
    if isinstance(node, (SCmp, PCmp)):
        return free_log_vars(node.lhs) | free_log_vars(node.rhs)
    if isinstance(node, (SNot, PNot)):
        return free_log_vars(node.body)
    if isinstance(node, (SAnd, SOr, SImp, PAnd, POr, PImp)):
        return free_log_vars(node.lhs) | free_log_vars(node.rhs)
    if isinstance(node, (SQuant, PQuant)):
        return free_log_vars(node.body) - frozenset([node.var])
    if isinstance(node, PSplit):
        w = free_log_vars(node.witness.assn) if isinstance(node.witness, EventWitness) else frozenset()
        return free_log_vars(node.lhs) | free_log_vars(node.rhs) | w
    if isinstance(node, PEx):
        return free_log_vars(node.body)
    if isinstance(node, PIndep):
        return _union(free_log_vars(e) for e in node.exprs)
    if isinstance(node, PFollows):
        return free_log_vars(node.expr) | sy.free_vars_dexpr(node.dexpr)
    raise TypeError(f"not an assertion node: {node!r}")


def _all_names(node, used: set):
    """Every string anywhere in a node tree; a safe overapproximation of the
    names that a fresh variable must avoid."""
    if node is None or isinstance(node, (int, Fraction, bool)):
        return
    if isinstance(node, str):
        used.add(node)
        return
    if isinstance(node, tuple):
        for x in node:
            _all_names(x, used)
        return
    for f in getattr(node, "__dataclass_fields__", {}):
        _all_names(getattr(node, f), used)


def fresh_logvar(*nodes) -> str:
    used: set = set()
    for n in nodes:
        _all_names(n, used)
    i = 1
    while f"t{i}" in used:
        i += 1
    return f"t{i}"


# ---------------------------------------------------------------------------
# Evaluation


def _as_number(v, what="expression"):
    if type(v) is bool or type(v) not in (int, Fraction):
        raise EvalError(f"{what} must be numeric, got {v!r}")
    return Fraction(v)


def eval_sexpr(se, rho: dict, m: State):
    if isinstance(se, SProg):
        return m.get(se.name)
    if isinstance(se, SLog):
        if se.name not in rho:
            raise EvalError(f"unbound logical variable {se.name!r}")
        return rho[se.name]
    if isinstance(se, SLit):
        return se.value
    if isinstance(se, SInd):
        return 1 if eval_sassn(se.assn, rho, m) else 0
    if isinstance(se, SExpect):
        d = eval_dexpr(se.dexpr, m, rho)
        total = Fraction(0)
        for w, q in d.items():
            rho2 = dict(rho)
            rho2[se.var] = w
            total += q * _as_number(eval_sexpr(se.body, rho2, m), "expectation body")
        return total
    if isinstance(se, SOp):
        try:
            return sy.apply_op(se.op, [eval_sexpr(a, rho, m) for a in se.args])
        except DivByZeroError as e:
            raise UndefinedError(str(e)) from None
    if isinstance(se, SCondE):
        c = eval_sexpr(se.cond, rho, m)
        if type(c) is not bool:
            raise EvalError("conditional guard must be boolean")
        return eval_sexpr(se.then if c else se.orelse, rho, m)
    raise TypeError(f"not a state expression: {se!r}")


def eval_sassn(phi, rho: dict, m: State) -> bool:
    if isinstance(phi, STrue):
        return True
    if isinstance(phi, SFalse):
        return False
    if isinstance(phi, SCmp):
        a = eval_sexpr(phi.lhs, rho, m)
        b = eval_sexpr(phi.rhs, rho, m)
        if phi.op == "eq":
            if type(a) is bool or type(b) is bool:
                # keep bool and int apart despite Python's True == 1
                return type(a) is type(b) and a == b
            return a == b
        return bool(sy.apply_op("lt" if phi.op == "lt" else "le", [a, b]))
    if isinstance(phi, SNot):
        return not eval_sassn(phi.body, rho, m)
    if isinstance(phi, SAnd):
        return eval_sassn(phi.lhs, rho, m) and eval_sassn(phi.rhs, rho, m)
    if isinstance(phi, SOr):
        return eval_sassn(phi.lhs, rho, m) or eval_sassn(phi.rhs, rho, m)
    if isinstance(phi, SImp):
        return (not eval_sassn(phi.lhs, rho, m)) or eval_sassn(phi.rhs, rho, m)
    if isinstance(phi, SQuant):
        if not phi.sort.is_finite():
            raise EvalError(f"cannot enumerate quantifier over {phi.sort}")
        vals = phi.sort.values()
        if phi.kind == "forall":
            return all(eval_sassn(phi.body, {**rho, phi.var: v}, m) for v in vals)
        return any(eval_sassn(phi.body, {**rho, phi.var: v}, m) for v in vals)
    raise TypeError(f"not a state assertion: {phi!r}")


def eval_pexpr(p, rho: dict, mu: SubDist) -> Fraction:
    if isinstance(p, PLog):
        if p.name not in rho:
            raise EvalError(f"unbound logical variable {p.name!r}")
        return _as_number(rho[p.name], "logical variable")
    if isinstance(p, PLit):
        return Fraction(p.value)
    if isinstance(p, PEx):
        total = Fraction(0)
        for m, q in mu.items():
            total += q * _as_number(eval_sexpr(p.body, rho, m), "expectation body")
        return total
    if isinstance(p, POp):
        args = [eval_pexpr(a, rho, mu) for a in p.args]
        try:
            return Fraction(sy.apply_op(p.op, args))
        except DivByZeroError as e:
            raise UndefinedError(str(e)) from None
    raise TypeError(f"not a probabilistic expression: {p!r}")


def holds(eta, rho: dict, mu: SubDist, witnesses: dict | None = None, path: str = "r") -> Verdict:
    """Three-valued truth of a probabilistic assertion in a sub-distribution.

    `witnesses` may map a split node's path ("r.0.1" style) to an
    EventWitness or PairWitness; witnesses embedded in nodes take precedence.
    """
    if isinstance(eta, PTrue):
        return TRUE
    if isinstance(eta, PFalse):
        return FALSE
    if isinstance(eta, PCmp):
        try:
            a = eval_pexpr(eta.lhs, rho, mu)
            b = eval_pexpr(eta.rhs, rho, mu)
        except UndefinedError:
            return UNKNOWN
        if eta.op == "eq":
            return verdict_of(a == b)
        if eta.op == "lt":
            return verdict_of(a < b)
        return verdict_of(a <= b)
    if isinstance(eta, PNot):
        return v_not(holds(eta.body, rho, mu, witnesses, path + ".0"))
    if isinstance(eta, PAnd):
        return v_and(
            holds(eta.lhs, rho, mu, witnesses, path + ".0"),
            holds(eta.rhs, rho, mu, witnesses, path + ".1"),
        )
    if isinstance(eta, POr):
        return v_or(
            holds(eta.lhs, rho, mu, witnesses, path + ".0"),
            holds(eta.rhs, rho, mu, witnesses, path + ".1"),
        )
    if isinstance(eta, PImp):
        return v_imp(
            holds(eta.lhs, rho, mu, witnesses, path + ".0"),
            holds(eta.rhs, rho, mu, witnesses, path + ".1"),
        )
    if isinstance(eta, PQuant):
        if not eta.sort.is_finite():
            raise EvalError(f"cannot enumerate quantifier over {eta.sort}")
        out = TRUE if eta.kind == "forall" else FALSE
        for v in eta.sort.values():
            got = holds(eta.body, {**rho, eta.var: v}, mu, witnesses, path + ".0")
            out = v_and(out, got) if eta.kind == "forall" else v_or(out, got)
        return out
    if isinstance(eta, PSplit):
        witness = eta.witness
        if witness is None and witnesses:
            witness = witnesses.get(path)
        if witness is None:
            return UNKNOWN
        if isinstance(witness, EventWitness):
            try:
                mu1 = mu.restrict(lambda m: eval_sassn(witness.assn, rho, m))
                mu2 = mu.restrict(lambda m: not eval_sassn(witness.assn, rho, m))
            except UndefinedError:
                return UNKNOWN
        else:
            mu1, mu2 = witness.left, witness.right
            try:
                if mu1.add(mu2) != mu:
                    return UNKNOWN
            except Exception:
                return UNKNOWN
        left = holds(eta.lhs, rho, mu1, witnesses, path + ".0")
        right = holds(eta.rhs, rho, mu2, witnesses, path + ".1")
        # the witness shows one decomposition; its failure refutes nothing
        return TRUE if (left is TRUE and right is TRUE) else UNKNOWN
    if isinstance(eta, PIndep):
        return _holds_indep(eta, rho, mu)
    if isinstance(eta, PFollows):
        return _holds_follows(eta, rho, mu)
    if isinstance(eta, PCharac):
        return verdict_of(mu == eta.dist)
    raise TypeError(f"not a probabilistic assertion: {eta!r}")


def _holds_indep(eta: PIndep, rho, mu) -> Verdict:
    import itertools

    from .values import value_key

    n = len(eta.exprs)
    if n == 0:
        return TRUE
    try:
        rows = []
        for m, q in mu.items():
            rows.append((tuple(eval_sexpr(se, rho, m) for se in eta.exprs), q))
    except UndefinedError:
        return UNKNOWN
    weight = mu.weight()
    value_sets = [sorted({r[0][i] for r in rows}, key=value_key) for i in range(n)]
    marginals = []
    for i in range(n):
        marginals.append({v: sum((q for vs, q in rows if vs[i] == v), Fraction(0)) for v in value_sets[i]})
    for combo in itertools.product(*value_sets):
        joint = sum((q for vs, q in rows if vs == combo), Fraction(0))
        lhs = weight ** (n - 1) * joint
        rhs = Fraction(1)
        for i, v in enumerate(combo):
            rhs *= marginals[i][v]
        if lhs != rhs:
            return FALSE
    return TRUE


def _holds_follows(eta: PFollows, rho, mu) -> Verdict:
    from .values import value_key

    try:
        witness_vals = set()
        law = {}  # value -> expected mass, aggregated over mu
        for m, q in mu.items():
            witness_vals.add(eval_sexpr(eta.expr, rho, m))
            d = eval_dexpr(eta.dexpr, m, rho)
            for w, r in d.items():
                witness_vals.add(w)
                law[w] = law.get(w, Fraction(0)) + q * r
        for w in sorted(witness_vals, key=value_key):
            actual = sum(
                (q for m, q in mu.items() if eval_sexpr(eta.expr, rho, m) == w),
                Fraction(0),
            )
            if actual != law.get(w, Fraction(0)):
                return FALSE
    except UndefinedError:
        return UNKNOWN
    return TRUE


# ---------------------------------------------------------------------------
# Substitution operators


def _to_expr(se):
    """State expression as a program expression, when representable.
    Logical variables map to plain Var nodes (resolved via the valuation)."""
    if isinstance(se, SProg) or isinstance(se, SLog):
        return sy.Var(se.name)
    if isinstance(se, SLit):
        return sy.Lit(se.value)
    if isinstance(se, SOp):
        return sy.Op(se.op, tuple(_to_expr(a) for a in se.args))
    if isinstance(se, SCondE):
        return sy.CondExpr(_to_expr(se.cond), _to_expr(se.then), _to_expr(se.orelse))
    raise UnsupportedFormError(f"cannot embed {se!r} into a program expression")


def subst_prog_se(se, x: str, repl: SExpr) -> SExpr:
    if isinstance(se, SProg):
        return repl if se.name == x else se
    if isinstance(se, (SLog, SLit)):
        return se
    if isinstance(se, SInd):
        return SInd(subst_prog_sassn(se.assn, x, repl))
    if isinstance(se, SExpect):
        if isinstance(repl, SLog) and repl.name == se.var:
            raise EvalError(f"substitution capture of {repl.name!r}; pick a fresh name")
        g = se.dexpr
        if x in sy.free_vars_dexpr(g):
            g = sy.subst_dexpr(g, x, _to_expr(repl))
        return SExpect(se.var, g, subst_prog_se(se.body, x, repl))
    if isinstance(se, SOp):
        return SOp(se.op, tuple(subst_prog_se(a, x, repl) for a in se.args))
    if isinstance(se, SCondE):
        return SCondE(
            subst_prog_se(se.cond, x, repl),
            subst_prog_se(se.then, x, repl),
            subst_prog_se(se.orelse, x, repl),
        )
    raise TypeError(f"not a state expression: {se!r}")


def subst_prog_sassn(phi, x: str, repl: SExpr) -> SAssn:
    if isinstance(phi, (STrue, SFalse)):
        return phi
    if isinstance(phi, SCmp):
        return SCmp(subst_prog_se(phi.lhs, x, repl), phi.op, subst_prog_se(phi.rhs, x, repl))
    if isinstance(phi, SNot):
        return SNot(subst_prog_sassn(phi.body, x, repl))
    if isinstance(phi, (SAnd, SOr, SImp)):
        return type(phi)(subst_prog_sassn(phi.lhs, x, repl), subst_prog_sassn(phi.rhs, x, repl))
    if isinstance(phi, SQuant):
        if isinstance(repl, SLog) and repl.name == phi.var:
            raise EvalError(f"substitution capture of {repl.name!r}; pick a fresh name")
        return SQuant(phi.kind, phi.var, phi.sort, subst_prog_sassn(phi.body, x, repl))
    raise TypeError(f"not a state assertion: {phi!r}")


def subst_prog_pexpr(p, x: str, repl: SExpr) -> PExpr:
    if isinstance(p, (PLog, PLit)):
        return p
    if isinstance(p, PEx):
        return PEx(subst_prog_se(p.body, x, repl))
    if isinstance(p, POp):
        return POp(p.op, tuple(subst_prog_pexpr(a, x, repl) for a in p.args))
    raise TypeError(f"not a probabilistic expression: {p!r}")


def subst_prog(eta, x: str, repl) -> PAssn:
    """Capture-avoiding substitution of a program variable by an expression
    (a program Expr or a state expression) throughout an assertion."""
    if isinstance(repl, (sy.Var, sy.Lit, sy.Op, sy.CondExpr)):
        repl = embed_expr(repl)
    if isinstance(eta, (PTrue, PFalse, PCharac)):
        return eta
    if isinstance(eta, PCmp):
        return PCmp(subst_prog_pexpr(eta.lhs, x, repl), eta.op, subst_prog_pexpr(eta.rhs, x, repl))
    if isinstance(eta, PNot):
        return PNot(subst_prog(eta.body, x, repl))
    if isinstance(eta, (PAnd, POr, PImp)):
        return type(eta)(subst_prog(eta.lhs, x, repl), subst_prog(eta.rhs, x, repl))
    if isinstance(eta, PQuant):
        if isinstance(repl, SLog) and repl.name == eta.var:
            raise EvalError(f"substitution capture of {repl.name!r}; pick a fresh name")
        return PQuant(eta.kind, eta.var, eta.sort, subst_prog(eta.body, x, repl))
    if isinstance(eta, PSplit):
        w = eta.witness
        if isinstance(w, EventWitness):
            w = EventWitness(subst_prog_sassn(w.assn, x, repl))
        return PSplit(subst_prog(eta.lhs, x, repl), subst_prog(eta.rhs, x, repl), w)
    if isinstance(eta, PIndep):
        return PIndep(tuple(subst_prog_se(se, x, repl) for se in eta.exprs))
    if isinstance(eta, PFollows):
        g = eta.dexpr
        if x in sy.free_vars_dexpr(g):
            g = sy.subst_dexpr(g, x, _to_expr(repl))
        return PFollows(subst_prog_se(eta.expr, x, repl), g)
    raise TypeError(f"not a probabilistic assertion: {eta!r}")


def dexpr_full_weight(g) -> bool:
    if isinstance(g, sy.TableD):
        return sum((Fraction(q) for _, q in g.entries), Fraction(0)) == 1
    return isinstance(g, (sy.BernoulliD, sy.UniformRangeD, sy.UniformSetD, sy.BinomialD))


def samp_subst(eta, x: str, g) -> PAssn:
    """Sampling substitution: rewrites each expectation so that it averages
    over a fresh integration variable drawn from g in place of x."""
    fresh = fresh_logvar(eta, g)

    def on_pexpr(p):
        if isinstance(p, (PLog, PLit)):
            return p
        if isinstance(p, PEx):
            return PEx(SExpect(fresh, g, subst_prog_se(p.body, x, SLog(fresh))))
        if isinstance(p, POp):
            return POp(p.op, tuple(on_pexpr(a) for a in p.args))
        raise TypeError(f"not a probabilistic expression: {p!r}")

    def on_passn(h):
        if x not in free_prog_vars(h) and dexpr_full_weight(g):
            return h
        if isinstance(h, (PTrue, PFalse)):
            return h
        if isinstance(h, PCmp):
            return PCmp(on_pexpr(h.lhs), h.op, on_pexpr(h.rhs))
        if isinstance(h, PNot):
            return PNot(on_passn(h.body))
        if isinstance(h, (PAnd, POr, PImp)):
            return type(h)(on_passn(h.lhs), on_passn(h.rhs))
        if isinstance(h, PQuant):
            return PQuant(h.kind, h.var, h.sort, on_passn(h.body))
        if isinstance(h, PSplit):
            raise UnsupportedSplitError("sampling substitution through (+) is undefined")
        if isinstance(h, (PIndep, PFollows, PCharac)):
            raise UnsupportedFormError(
                f"sampling substitution through {type(h).__name__} is undefined; "
                "expand it to core syntax first"
            )
        raise TypeError(f"not a probabilistic assertion: {h!r}")

    return on_passn(eta)


def cond_restrict(p, event) -> PExpr:
    """Restrict an expectation to the part of the distribution satisfying an
    event: floor operator mapping E[se] to E[se * 1_event]."""
    if isinstance(event, (sy.Var, sy.Lit, sy.Op, sy.CondExpr)):
        event = guard_assn(event)
    if not isinstance(p, PEx):
        raise NotExpectationFormError(f"{p!r} is not of the form E[...]")
    return PEx(SOp("mul", (p.body, SInd(event))))


def subst_logvar(eta, name: str, value) -> PAssn:
    """Instantiate a logical variable with a literal value."""

    def on_se(se):
        if isinstance(se, SLog):
            return SLit(value) if se.name == name else se
        if isinstance(se, (SProg, SLit)):
            return se
        if isinstance(se, SInd):
            return SInd(on_sa(se.assn))
        if isinstance(se, SExpect):
            g = _subst_dexpr_log(se.dexpr, name, value)
            body = se.body if se.var == name else on_se(se.body)
            return SExpect(se.var, g, body)
        if isinstance(se, SOp):
            return SOp(se.op, tuple(on_se(a) for a in se.args))
        if isinstance(se, SCondE):
            return SCondE(on_se(se.cond), on_se(se.then), on_se(se.orelse))
        raise TypeError(f"not a state expression: {se!r}")

    def on_sa(phi):
        if isinstance(phi, (STrue, SFalse)):
            return phi
        if isinstance(phi, SCmp):
            return SCmp(on_se(phi.lhs), phi.op, on_se(phi.rhs))
        if isinstance(phi, SNot):
            return SNot(on_sa(phi.body))
        if isinstance(phi, (SAnd, SOr, SImp)):
            return type(phi)(on_sa(phi.lhs), on_sa(phi.rhs))
        if isinstance(phi, SQuant):
            return SQuant(phi.kind, phi.var, phi.sort, phi.body if phi.var == name else on_sa(phi.body))
        raise TypeError(f"not a state assertion: {phi!r}")

    def on_pe(p):
        if isinstance(p, PLog):
            return plit(value) if p.name == name else p
        if isinstance(p, PLit):
            return p
        if isinstance(p, PEx):
            return PEx(on_se(p.body))
        if isinstance(p, POp):
            return POp(p.op, tuple(on_pe(a) for a in p.args))
        raise TypeError(f"not a probabilistic expression: {p!r}")

    def on_pa(h):
        if isinstance(h, (PTrue, PFalse, PCharac)):
            return h
        if isinstance(h, PCmp):
            return PCmp(on_pe(h.lhs), h.op, on_pe(h.rhs))
        if isinstance(h, PNot):
            return PNot(on_pa(h.body))
        if isinstance(h, (PAnd, POr, PImp)):
            return type(h)(on_pa(h.lhs), on_pa(h.rhs))
        if isinstance(h, PQuant):
            return PQuant(h.kind, h.var, h.sort, h.body if h.var == name else on_pa(h.body))
        if isinstance(h, PSplit):
            w = h.witness
            if isinstance(w, EventWitness):
                w = EventWitness(on_sa(w.assn))
            return PSplit(on_pa(h.lhs), on_pa(h.rhs), w)
        if isinstance(h, PIndep):
            return PIndep(tuple(on_se(se) for se in h.exprs))
        if isinstance(h, PFollows):
            return PFollows(on_se(h.expr), _subst_dexpr_log(h.dexpr, name, value))
        raise TypeError(f"not a probabilistic assertion: {h!r}")

    return on_pa(eta)


def _subst_dexpr_log(g, name, value):
    if name in sy.free_vars_dexpr(g):
        return sy.subst_dexpr(g, name, sy.Lit(value))
    return g


# ---------------------------------------------------------------------------
# Closedness classification (syntactic sufficient conditions, never
# unsoundly "yes")

YES = "yes"
UNKNOWN_CLOSED = "unknown"


@dataclass(frozen=True)
class ClosednessClass:
    u_closed: str
    t_closed: str
    d_closed: str


def _se_division_free(se) -> bool:
    if isinstance(se, (SProg, SLog, SLit)):
        return True
    if isinstance(se, SInd):
        return _sa_division_free(se.assn)
    if isinstance(se, SExpect):
        return _se_division_free(se.body)
    if isinstance(se, SOp):
        if se.op in ("rdiv", "idiv", "mod"):
            return False
        if se.op == "pow":
            exp = se.args[1]
            if not (isinstance(exp, SLit) and type(exp.value) is int and exp.value >= 0):
                return False
        return all(_se_division_free(a) for a in se.args)
    if isinstance(se, SCondE):
        return all(_se_division_free(x) for x in (se.cond, se.then, se.orelse))
    return False


def _sa_division_free(phi) -> bool:
    if isinstance(phi, (STrue, SFalse)):
        return True
    if isinstance(phi, SCmp):
        return _se_division_free(phi.lhs) and _se_division_free(phi.rhs)
    if isinstance(phi, SNot):
        return _sa_division_free(phi.body)
    if isinstance(phi, (SAnd, SOr, SImp)):
        return _sa_division_free(phi.lhs) and _sa_division_free(phi.rhs)
    if isinstance(phi, SQuant):
        return _sa_division_free(phi.body)
    return False


def _pe_continuous(p) -> bool:
    """Division-free probabilistic expression: continuous and bounded in the
    distribution, given finite domains."""
    if isinstance(p, (PLog, PLit)):
        return True
    if isinstance(p, PEx):
        return _se_division_free(p.body)
    if isinstance(p, POp):
        if p.op in ("rdiv", "idiv", "mod"):
            return False
        if p.op == "pow":
            exp = p.args[1]
            if not (isinstance(exp, PLit) and exp.value.denominator == 1 and exp.value >= 0):
                return False
        return all(_pe_continuous(a) for a in p.args)
    return False


def _pe_dist_free(p) -> bool:
    """No expectation over the ambient distribution occurs."""
    if isinstance(p, (PLog, PLit)):
        return True
    if isinstance(p, PEx):
        return False
    if isinstance(p, POp):
        return all(_pe_dist_free(a) for a in p.args)
    return False


def _se_nonneg(se) -> bool:
    if isinstance(se, SInd):
        return True
    if isinstance(se, SLit):
        return type(se.value) in (int, Fraction) and se.value >= 0
    if isinstance(se, SOp):
        if se.op in ("add", "mul"):
            return all(_se_nonneg(a) for a in se.args)
        if se.op == "max":
            return any(_se_nonneg(a) for a in se.args)
        if se.op == "min":
            return all(_se_nonneg(a) for a in se.args)
        if se.op == "pow":
            return _se_nonneg(se.args[0])
        if se.op == "size":
            return True
        return False
    if isinstance(se, SCondE):
        return _se_nonneg(se.then) and _se_nonneg(se.orelse)
    return False


def _t_yes(eta) -> bool:
    if isinstance(eta, (PTrue, PFalse, PCharac)):
        return True
    if isinstance(eta, PCmp):
        return eta.op in ("eq", "le") and _pe_continuous(eta.lhs) and _pe_continuous(eta.rhs)
    if isinstance(eta, (PAnd, POr)):
        return _t_yes(eta.lhs) and _t_yes(eta.rhs)
    if isinstance(eta, PQuant):
        return _t_yes(eta.body)
    if isinstance(eta, (PIndep, PFollows)):
        return True
    return False


def _d_yes(eta) -> bool:
    if isinstance(eta, (PTrue, PFalse)):
        return True
    if isinstance(eta, PCmp):
        # E[nonneg] <= (distribution-free bound), or E[nonneg] = 0
        if not (isinstance(eta.lhs, PEx) and _se_nonneg(eta.lhs.body) and _pe_continuous(eta.lhs)):
            return False
        if eta.op == "le":
            return _pe_dist_free(eta.rhs) and _pe_continuous(eta.rhs)
        if eta.op == "eq":
            return isinstance(eta.rhs, PLit) and eta.rhs.value == 0
        return False
    if isinstance(eta, (PAnd, POr)):
        return _d_yes(eta.lhs) and _d_yes(eta.rhs)
    if isinstance(eta, PQuant):
        return _d_yes(eta.body)
    return False


def classify_closedness(eta) -> ClosednessClass:
    t = YES if _t_yes(eta) else UNKNOWN_CLOSED
    d = YES if (t == YES and _d_yes(eta)) else UNKNOWN_CLOSED
    u = t  # every t-closed family is u-closed; no weaker syntactic rule used
    return ClosednessClass(u_closed=u, t_closed=t, d_closed=d)
