"""Lightweight law-and-independence logic: deterministic expressions,
independence sets, and binomial laws, with a bounded-saturation entailment
check, a forward derivation engine, and an embedding into the full
assertion language.

The fragment covers programs with deterministic control flow that sample
only from Bernoulli and binomial distributions.  Expression equality is
decided semantically by exhaustive enumeration over the declared finite
domains of the free variables, so polynomial identities in loop counters
(the usual invariant shapes) come out equal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import assertions as A
from . import syntax as sy
from .parser import print_expr


class ILUnsupportedError(Exception):
    """Statement or assertion outside the fragment this logic handles."""


class FreshnessViolationError(Exception):
    """Sampling target occurs in the parameters or tracked expressions."""


# ---------------------------------------------------------------------------
# Assertions


@dataclass(frozen=True)
class Det:
    expr: object


@dataclass(frozen=True)
class Indep:
    """Independence of a multiset of expressions (duplicates meaningful:
    indep of an expression with itself says it is deterministic)."""

    exprs: tuple


@dataclass(frozen=True)
class FollowsBin:
    expr: object
    count: object  # expression
    p: Fraction


@dataclass(frozen=True)
class ILAssn:
    atoms: frozenset
    bottom: bool = False

    @staticmethod
    def top() -> "ILAssn":
        return ILAssn(frozenset())

    @staticmethod
    def bot() -> "ILAssn":
        return ILAssn(frozenset(), bottom=True)

    @staticmethod
    def of(*atoms) -> "ILAssn":
        return ILAssn(frozenset(canon_atom(a) for a in atoms))

    def conj(self, other: "ILAssn") -> "ILAssn":
        return ILAssn(self.atoms | other.atoms, self.bottom or other.bottom)


def _expr_key(e) -> str:
    return print_expr(e)


def norm_expr(e):
    """Constant-fold and sort commutative operands; the canonical form used
    for atom bookkeeping inside this logic."""
    e = sy.fold_expr(e)
    if isinstance(e, sy.Op):
        args = tuple(norm_expr(a) for a in e.args)
        if e.op in ("add", "mul") and len(args) == 2:
            flat = []
            for a in args:
                if isinstance(a, sy.Op) and a.op == e.op:
                    flat.extend(a.args)
                else:
                    flat.append(a)
            flat.sort(key=_expr_key)
            out = flat[0]
            for a in flat[1:]:
                out = sy.Op(e.op, (out, a))
            return sy.fold_expr(out)
        return sy.Op(e.op, args)
    if isinstance(e, sy.CondExpr):
        return sy.CondExpr(norm_expr(e.cond), norm_expr(e.then), norm_expr(e.orelse))
    return e


def canon_atom(a):
    if isinstance(a, Det):
        return Det(norm_expr(a.expr))
    if isinstance(a, Indep):
        return Indep(tuple(sorted((norm_expr(e) for e in a.exprs), key=_expr_key)))
    if isinstance(a, FollowsBin):
        return FollowsBin(norm_expr(a.expr), norm_expr(a.count), Fraction(a.p))
    raise TypeError(f"not an IL atom: {a!r}")


# ---------------------------------------------------------------------------
# Semantic expression equivalence over finite domains


class _Equivalence:
    def __init__(self, program: sy.Program, cap: int = 1024):
        self.program = program
        self.cap = cap
        self.cache: dict = {}

    def equal(self, e1, e2) -> bool:
        if e1 == e2:
            return True
        key = (_expr_key(e1), _expr_key(e2))
        if key in self.cache:
            return self.cache[key]
        got = self._decide(e1, e2)
        self.cache[key] = got
        self.cache[(key[1], key[0])] = got
        return got

    def _decide(self, e1, e2) -> bool:
        free = sorted(sy.free_vars_expr(e1) | sy.free_vars_expr(e2))
        sorts = []
        for n in free:
            try:
                s = self.program.var_sort(n)
            except KeyError:
                return False
            if not s.is_finite():
                return False
            sorts.append(list(s.values()))
        total = 1
        for vals in sorts:
            total *= len(vals)
            if total > self.cap:
                return False
        from .subdist import State

        for combo in itertools.product(*sorts) if sorts else [()]:
            m = State(dict(zip(free, combo)))
            try:
                v1 = _eval(e1, m)
                v2 = _eval(e2, m)
            except sy.EvalError:
                return False
            if not sy.values_identical(v1, v2):
                return False
        return True


def _eval(e, m):
    from .interp import eval_expr

    return eval_expr(e, m)


# ---------------------------------------------------------------------------
# Entailment by bounded saturation


class ILEngine:
    def __init__(self, program: sy.Program, depth: int = 3, atom_cap: int = 200):
        self.program = program
        self.depth = depth
        self.atom_cap = atom_cap
        self.equiv = _Equivalence(program)

    # -- queries over an atom set ------------------------------------------

    def _dets(self, atoms) -> list:
        out = [a.expr for a in atoms if isinstance(a, Det)]
        for a in atoms:
            if isinstance(a, Indep) and len(a.exprs) == 2 and a.exprs[0] == a.exprs[1]:
                out.append(a.exprs[0])
        return out

    def det_derivable(self, atoms, e, _depth=0) -> bool:
        e = norm_expr(e)
        if isinstance(e, sy.Lit):
            return True
        if _depth > 12:
            return False
        for d in self._dets(atoms):
            if self.equiv.equal(d, e):
                return True
        if isinstance(e, sy.Op):
            return all(self.det_derivable(atoms, a, _depth + 1) for a in e.args)
        if isinstance(e, sy.CondExpr):
            return all(
                self.det_derivable(atoms, a, _depth + 1) for a in (e.cond, e.then, e.orelse)
            )
        return False

    def indep_derivable(self, atoms, exprs) -> bool:
        want = [norm_expr(e) for e in exprs]
        if len(want) == 1:
            return True  # singletons are always independent
        if len(want) == 2 and self.equiv.equal(want[0], want[1]):
            return self.det_derivable(atoms, want[0])
        for a in atoms:
            if isinstance(a, Indep) and self._multiset_within(want, list(a.exprs)):
                return True
        return False

    def _multiset_within(self, want, have) -> bool:
        remaining = list(have)
        for w in want:
            for i, h in enumerate(remaining):
                if self.equiv.equal(w, h):
                    del remaining[i]
                    break
            else:
                return False
        return True

    def follows_derivable(self, atoms, goal: FollowsBin) -> bool:
        goal = canon_atom(goal)
        for a in atoms:
            if (
                isinstance(a, FollowsBin)
                and a.p == goal.p
                and self.equiv.equal(a.expr, goal.expr)
                and self.equiv.equal(a.count, goal.count)
            ):
                return True
        # a deterministically-zero expression follows B(0, p) for any p
        if isinstance(goal.count, sy.Lit) and goal.count.value == 0:
            zero = sy.Lit(0)
            if self.det_derivable(atoms, goal.expr) and self.equiv.equal(goal.expr, zero):
                return True
        return False

    # -- saturation ------------------------------------------------------------

    def saturate(self, xi: ILAssn, pool=()) -> frozenset:
        """Close an atom set under the axioms, to bounded depth: binomial
        sums over independent summands, determinism of operator images, and
        the det/self-independence equivalence."""
        atoms = set(canon_atom(a) for a in xi.atoms)
        pool_exprs = set()
        for a in list(atoms) + [canon_atom(p) for p in pool]:
            pool_exprs.update(_atom_exprs(a))
        for _ in range(self.depth):
            if len(atoms) > self.atom_cap:
                break
            new = set()
            fbs = [a for a in atoms if isinstance(a, FollowsBin)]
            for a, b in itertools.combinations(fbs, 2):
                if a.p != b.p:
                    continue
                if self.indep_derivable(atoms, [a.expr, b.expr]):
                    cand = canon_atom(
                        FollowsBin(
                            sy.Op("add", (a.expr, b.expr)),
                            sy.Op("add", (a.count, b.count)),
                            a.p,
                        )
                    )
                    new.add(cand)
            for e in list(pool_exprs):
                if self.det_derivable(atoms, e):
                    new.add(canon_atom(Det(e)))
                    new.add(canon_atom(Indep((e, e))))
            for a in atoms:
                if isinstance(a, Indep) and len(a.exprs) == 2 and a.exprs[0] == a.exprs[1]:
                    new.add(canon_atom(Det(a.exprs[0])))
            if new <= atoms:
                break
            atoms |= new
        return frozenset(atoms)

    def entails(self, xi1: ILAssn, xi2: ILAssn) -> bool:
        if xi1.bottom:
            return True
        if xi2.bottom:
            return False
        atoms = self.saturate(xi1, pool=xi2.atoms)
        for goal in xi2.atoms:
            goal = canon_atom(goal)
            if isinstance(goal, Det):
                if not self.det_derivable(atoms, goal.expr):
                    return False
            elif isinstance(goal, Indep):
                if not self.indep_derivable(atoms, goal.exprs):
                    return False
            elif isinstance(goal, FollowsBin):
                if not self.follows_derivable(atoms, goal):
                    return False
            else:
                return False
        return True


def _atom_exprs(a) -> list:
    if isinstance(a, Det):
        return [a.expr]
    if isinstance(a, Indep):
        return list(a.exprs)
    if isinstance(a, FollowsBin):
        return [a.expr, a.count]
    return []


def il_entails(program: sy.Program, xi1: ILAssn, xi2: ILAssn, depth: int = 3) -> bool:
    return ILEngine(program, depth).entails(xi1, xi2)


# ---------------------------------------------------------------------------
# Forward steps


def _occurs(e, x: str) -> bool:
    return x in sy.free_vars_expr(e)


def _atom_mentions(a, x: str) -> bool:
    return any(_occurs(e, x) for e in _atom_exprs(a))


def _atom_subst(a, x: str, e):
    if isinstance(a, Det):
        return canon_atom(Det(sy.subst_expr(a.expr, x, e)))
    if isinstance(a, Indep):
        return canon_atom(Indep(tuple(sy.subst_expr(z, x, e) for z in a.exprs)))
    if isinstance(a, FollowsBin):
        return canon_atom(FollowsBin(sy.subst_expr(a.expr, x, e), sy.subst_expr(a.count, x, e), a.p))
    raise TypeError(f"not an IL atom: {a!r}")


def _replace_expr(e, old, new):
    if e == old:
        return new
    if isinstance(e, sy.Op):
        return sy.Op(e.op, tuple(_replace_expr(a, old, new) for a in e.args))
    if isinstance(e, sy.CondExpr):
        return sy.CondExpr(
            _replace_expr(e.cond, old, new),
            _replace_expr(e.then, old, new),
            _replace_expr(e.orelse, old, new),
        )
    return e


def _unsubst_variants(a, e, x: str) -> list:
    """Atom rewrites replacing the assigned expression by the target
    variable, per expression field (the entailment filter keeps only the
    sound ones)."""
    target = sy.Var(x)
    out = []
    if isinstance(a, Det):
        out.append(Det(_replace_expr(a.expr, e, target)))
    elif isinstance(a, Indep):
        n = len(a.exprs)
        for mask in range(1, min(2**n, 64)):
            out.append(
                Indep(
                    tuple(
                        _replace_expr(z, e, target) if mask >> i & 1 else z
                        for i, z in enumerate(a.exprs)
                    )
                )
            )
    elif isinstance(a, FollowsBin):
        out.append(FollowsBin(_replace_expr(a.expr, e, target), a.count, a.p))
        out.append(FollowsBin(_replace_expr(a.expr, e, target), _replace_expr(a.count, e, target), a.p))
    return [canon_atom(c) for c in out]


def _inverse_variants(a, x: str, e) -> list:
    """For shift assignments x := x +/- c the old value is recoverable; the
    substituted-back candidates cover counter updates."""
    inv = None
    if isinstance(e, sy.Op) and e.op == "add" and len(e.args) == 2:
        l, r = e.args
        if l == sy.Var(x) and not _occurs(r, x):
            inv = sy.Op("sub", (sy.Var(x), r))
        elif r == sy.Var(x) and not _occurs(l, x):
            inv = sy.Op("sub", (sy.Var(x), l))
    if isinstance(e, sy.Op) and e.op == "sub" and len(e.args) == 2:
        l, r = e.args
        if l == sy.Var(x) and not _occurs(r, x):
            inv = sy.Op("add", (sy.Var(x), r))
    if inv is None:
        return []
    return [_atom_subst(a, x, inv)]


def il_step(program: sy.Program, s, xi: ILAssn, goal_pool=()) -> ILAssn:
    """Forward postcondition over one atomic statement.

    Assignment candidates are harvested from the saturated precondition
    (un-substituted, inverse-substituted, or untouched) plus the goal pool,
    and kept only when substituting the assignment back yields a consequence
    of the precondition; sampling follows the per-rule shape with its
    freshness side condition."""
    eng = ILEngine(program)
    if xi.bottom:
        return xi
    if isinstance(s, sy.Skip):
        return xi
    if isinstance(s, sy.Seq):
        return il_step(program, s.second, il_step(program, s.first, xi, goal_pool), goal_pool)
    if isinstance(s, sy.Assign):
        e = norm_expr(s.expr)
        saturated = eng.saturate(xi, pool=goal_pool)
        candidates: list = [canon_atom(Det(sy.Var(s.var)))]
        probs = {
            a.p
            for a in set(saturated) | {canon_atom(g) for g in goal_pool}
            if isinstance(a, FollowsBin)
        }
        for p in sorted(probs):
            # a deterministically-zero target follows B(0, p) for any p
            candidates.append(canon_atom(FollowsBin(sy.Var(s.var), sy.Lit(0), p)))
        for a in saturated:
            if not _atom_mentions(a, s.var):
                candidates.append(a)
            candidates.extend(_unsubst_variants(a, e, s.var))
            candidates.extend(_inverse_variants(a, s.var, e))
        candidates.extend(canon_atom(g) for g in goal_pool)
        kept = []
        seen = set()
        for a in candidates:
            if a in seen:
                continue
            seen.add(a)
            back = _atom_subst(a, s.var, s.expr)
            if _check_atom(eng, saturated, back):
                kept.append(a)
        return ILAssn(frozenset(kept))
    if isinstance(s, sy.Sample):
        return _il_sample(eng, s, xi, goal_pool)
    raise ILUnsupportedError(f"no forward step for {type(s).__name__}")


def _check_atom(eng: ILEngine, atoms, goal) -> bool:
    if isinstance(goal, Det):
        return eng.det_derivable(atoms, goal.expr)
    if isinstance(goal, Indep):
        return eng.indep_derivable(atoms, goal.exprs)
    if isinstance(goal, FollowsBin):
        return eng.follows_derivable(atoms, goal)
    return False


def _il_sample(eng: ILEngine, s: sy.Sample, xi: ILAssn, goal_pool) -> ILAssn:
    g = s.dist
    if isinstance(g, sy.BernoulliD):
        if not isinstance(g.p, sy.Lit):
            raise ILUnsupportedError("Bernoulli probability must be a constant here")
        count, p = sy.Lit(1), Fraction(g.p.value)
    elif isinstance(g, sy.BinomialD):
        count, p = g.n, g.p
    else:
        raise ILUnsupportedError("this logic handles Bernoulli and binomial sampling only")
    if _occurs(count, s.var):
        raise FreshnessViolationError(
            f"sampled variable {s.var!r} occurs in the distribution parameter"
        )
    saturated = eng.saturate(xi, pool=goal_pool)
    kept = [a for a in saturated if not _atom_mentions(a, s.var)]
    new_atoms = set(kept)
    x = sy.Var(s.var)
    new_atoms.add(canon_atom(FollowsBin(x, count, p)))
    for a in kept:
        if isinstance(a, Indep):
            new_atoms.add(canon_atom(Indep(a.exprs + (x,))))
    for a in kept:
        if isinstance(a, (Det, FollowsBin)):
            # track pairwise independence with the fresh sample
            new_atoms.add(canon_atom(Indep((a.expr, x))))
    return ILAssn(frozenset(new_atoms))


# ---------------------------------------------------------------------------
# Judgments and checking


@dataclass(frozen=True)
class ILJudgment:
    pre: ILAssn
    stmt: sy.Stmt
    post: ILAssn


@dataclass
class ILScript:
    invariants: dict  # loop label -> ILAssn
    variants: dict  # loop label -> hoare.VariantCert


@dataclass
class ILReport:
    ok: bool
    reasons: list
    obligations: list  # termination side-condition obligations

    def verdict(self) -> str:
        return "certified" if self.ok else "failed"


def _det_guard(program, eng, xi, cond) -> bool:
    return eng.det_derivable(eng.saturate(xi), cond)


def il_check(program: sy.Program, j: ILJudgment, script: ILScript | None = None, ctx=None) -> ILReport:
    """Check a judgment by a forward derivation; loops need invariants and
    certain-termination certificates from the script."""
    from . import hoare

    script = script or ILScript({}, {})
    if ctx is None:
        ctx = hoare.CheckContext(program, hoare.SuiteConfig(), {}, ())
    eng = ILEngine(program)
    reasons: list = []
    obligations: list = []
    goal_pool = list(j.post.atoms)
    for inv in script.invariants.values():
        goal_pool.extend(inv.atoms)

    def chk(xi: ILAssn, s) -> ILAssn:
        if isinstance(s, (sy.Skip, sy.Assign, sy.Sample)):
            return il_step(program, s, xi, goal_pool)
        if isinstance(s, sy.Seq):
            return chk(chk(xi, s.first), s.second)
        if isinstance(s, sy.If):
            if not _det_guard(program, eng, xi, s.cond):
                reasons.append(f"conditional guard {print_expr(s.cond)} is not derivably deterministic")
                return ILAssn.top()
            p1 = chk(xi, s.then)
            p2 = chk(xi, s.orelse)
            merged = []
            for a in set(p1.atoms) | set(p2.atoms) | {canon_atom(g) for g in goal_pool}:
                if _check_atom(eng, eng.saturate(p1), a) and _check_atom(
                    eng, eng.saturate(p2), a
                ):
                    merged.append(a)
            return ILAssn(frozenset(merged))
        if isinstance(s, sy.While):
            inv = script.invariants.get(s.label)
            if inv is None:
                reasons.append(f"loop {s.label} has no invariant")
                return ILAssn.top()
            if not eng.entails(xi, inv):
                reasons.append(f"loop {s.label}: invariant not established on entry")
            if not _det_guard(program, eng, inv, s.cond):
                reasons.append(f"loop {s.label}: guard is not derivably deterministic")
            body_post = chk(inv, s.body)
            if not eng.entails(body_post, inv):
                reasons.append(f"loop {s.label}: invariant not preserved by the body")
            cert = script.variants.get(s.label)
            if cert is None:
                reasons.append(f"loop {s.label} has no termination certificate")
            else:
                obs = hoare.check_cterm(program, s, cert, embed_il(program, inv), ctx)
                hoare.discharge_all(obs, ctx)
                for ob in obs:
                    ob.oid = f"{s.label}.{ob.oid}"
                obligations.extend(obs)
                bad = [ob for ob in obs if ob.status == "failed"]
                for ob in bad:
                    reasons.append(f"loop {s.label}: termination obligation {ob.oid} failed")
            return inv
        raise ILUnsupportedError(f"statement outside the fragment: {type(s).__name__}")

    try:
        final = chk(j.pre, j.stmt)
    except (ILUnsupportedError, FreshnessViolationError) as e:
        return ILReport(False, [str(e)], obligations)
    if not eng.entails(final, j.post):
        reasons.append("derived postcondition does not entail the stated one")
    return ILReport(not reasons, reasons, obligations)


# ---------------------------------------------------------------------------
# Embedding into the full assertion language


def _expr_is_bool(program, e) -> bool:
    from .values import BoolSort

    if isinstance(e, sy.Var):
        return isinstance(program.var_sort(e.name), BoolSort)
    if isinstance(e, sy.Lit):
        return type(e.value) is bool
    if isinstance(e, sy.Op):
        return e.op in ("eq", "ne", "lt", "le", "and", "or", "not", "xor", "mem", "testbit")
    if isinstance(e, sy.CondExpr):
        return _expr_is_bool(program, e.then)
    return False


def embed_det(program: sy.Program, e) -> A.PAssn:
    if _expr_is_bool(program, e):
        g = A.guard_assn(e)
        return A.POr(A.box(g), A.box(A.SNot(g)))
    if isinstance(e, sy.Var):
        sort = program.var_sort(e.name)
        if sort.is_finite():
            v = A.fresh_logvar(A.embed_expr(e))
            return A.PQuant(
                "exists", v, sort, A.box(A.SCmp(A.embed_expr(e), "eq", A.SLog(v)))
            )
    # numeric expressions: zero variance exactly characterizes a point law
    se = A.embed_expr(e)
    lhs = A.POp("mul", (A.pr_(A.STrue()), A.PEx(A.SOp("mul", (se, se)))))
    rhs = A.POp("mul", (A.PEx(se), A.PEx(se)))
    return A.PCmp(lhs, "eq", rhs)


def embed_il(program: sy.Program, xi: ILAssn) -> A.PAssn:
    if xi.bottom:
        return A.PFalse()
    if not xi.atoms:
        return A.PCmp(A.plit(0), "le", A.pr_(A.STrue()))
    parts = []
    for a in sorted(xi.atoms, key=lambda a: (type(a).__name__, repr(a))):
        if isinstance(a, Det):
            parts.append(embed_det(program, a.expr))
        elif isinstance(a, Indep):
            parts.append(A.PIndep(tuple(A.embed_expr(e) for e in a.exprs)))
        elif isinstance(a, FollowsBin):
            parts.append(A.PFollows(A.embed_expr(a.expr), sy.BinomialD(a.count, a.p)))
        else:
            raise TypeError(f"not an IL atom: {a!r}")
    return A.p_and_all(parts)


def embed_judgment(program: sy.Program, j: ILJudgment):
    from .hoare import Judgment

    return Judgment(embed_il(program, j.pre), j.stmt, embed_il(program, j.post))
