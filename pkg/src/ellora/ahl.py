"""Union-bound logic: judgments bound the probability that a deterministic
postcondition fails, composing failure budgets additively.

Judgments hold per initial memory: from any state satisfying the (first
order, deterministic) precondition, the mass of post-violating outcomes is
at most beta.  Sampling uses an exact finite-support tail rule: the required
budget is the largest violating mass over precondition states, computed by
enumeration.  Certified judgments embed into the main logic as
{[] pre} s {Pr[not post] <= beta}, a downward-closed shape.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import assertions as A
from . import hoare
from . import syntax as sy
from .assert_syntax import print_sassn
from .interp import eval_dexpr, eval_expr, exec_dist
from .subdist import State, SubDist


class BetaTooSmallError(Exception):
    def __init__(self, required: Fraction, given: Fraction, where: str):
        super().__init__(
            f"{where}: failure budget {given} is below the exact requirement {required}"
        )
        self.required = required
        self.given = given


@dataclass(frozen=True)
class AHLJudgment:
    beta: Fraction
    pre: A.SAssn
    stmt: sy.Stmt
    post: A.SAssn

    def __post_init__(self):
        if not 0 <= Fraction(self.beta) <= 1:
            raise ValueError("failure budget must lie in [0, 1]")


# script nodes


@dataclass(frozen=True)
class AhlSkip:
    pass


@dataclass(frozen=True)
class AhlAbort:
    pass


@dataclass(frozen=True)
class AhlAssgn:
    pass


@dataclass(frozen=True)
class AhlSample:
    pass


@dataclass(frozen=True)
class AhlSeq:
    beta1: Fraction
    beta2: Fraction
    mid: A.SAssn
    left: object
    right: object


@dataclass(frozen=True)
class AhlWhile:
    k: int
    body_beta: Fraction
    variant: hoare.VariantCert
    child: object


@dataclass(frozen=True)
class AhlConseq:
    beta: Fraction
    pre: A.SAssn
    post: A.SAssn
    child: object


# ---------------------------------------------------------------------------
# State-level helpers


def _grid_states(ctx: hoare.CheckContext) -> list:
    seen = []
    have = set()
    for mu in ctx.suite:
        for m in mu.support():
            if m not in have:
                have.add(m)
                seen.append(m)
    return seen


def _sassn_holds(phi, m, rho=None) -> object:
    try:
        return A.eval_sassn(phi, rho or {}, m)
    except sy.EvalError:
        return None


@dataclass(frozen=True)
class SImplicationOb:
    lhs: A.SAssn
    rhs: A.SAssn


@dataclass(frozen=True)
class BudgetOb:
    required: Fraction
    given: Fraction
    note: str


@dataclass(frozen=True)
class AhlTripleOb:
    judgment: AHLJudgment


def _describe(payload) -> str:
    if isinstance(payload, SImplicationOb):
        return f"{print_sassn(payload.lhs)}  =>  {print_sassn(payload.rhs)}"
    if isinstance(payload, BudgetOb):
        return f"{payload.note}: requires {payload.required}, given {payload.given}"
    if isinstance(payload, AhlTripleOb):
        j = payload.judgment
        return f"|-{j.beta} {{{print_sassn(j.pre)}}} ... {{{print_sassn(j.post)}}}"
    return repr(payload)


def sample_required_beta(program, s: sy.Sample, pre, post, states) -> Fraction:
    """Exact largest mass of post-violating samples over precondition
    states; the minimal sound budget for this sampling step."""
    worst = Fraction(0)
    for m in states:
        if _sassn_holds(pre, m) is not True:
            continue
        try:
            d = eval_dexpr(s.dist, m)
        except sy.EvalError:
            continue
        bad = Fraction(0)
        for v, q in d.items():
            try:
                m2 = m.set(s.var, v)
                ok = A.eval_sassn(post, {}, m2)
            except sy.EvalError:
                ok = False
            if not ok:
                bad += q
        worst = max(worst, bad)
    return worst


# ---------------------------------------------------------------------------
# Rule application and checking


def ahl_apply(node, j: AHLJudgment, program: sy.Program, ctx: hoare.CheckContext):
    """Premises and obligations of one union-bound rule application."""
    s = j.stmt
    if isinstance(node, AhlSkip):
        if not isinstance(s, sy.Skip):
            raise hoare.RuleShapeMismatchError("Skip rule on a non-skip statement")
        return [_imp_ob("skip.imp", j.pre, j.post, ctx)], [], []
    if isinstance(node, AhlAbort):
        if not isinstance(s, sy.Abort):
            raise hoare.RuleShapeMismatchError("Abort rule on a non-abort statement")
        return [], [], []
    if isinstance(node, AhlAssgn):
        if not isinstance(s, sy.Assign):
            raise hoare.RuleShapeMismatchError("Assgn rule on a non-assignment")
        want = A.subst_prog_sassn(j.post, s.var, A.embed_expr(s.expr))
        return [_imp_ob("assgn.imp", j.pre, want, ctx)], [], []
    if isinstance(node, AhlSample):
        if not isinstance(s, sy.Sample):
            raise hoare.RuleShapeMismatchError("Sample rule on a non-sampling statement")
        required = sample_required_beta(program, s, j.pre, j.post, _grid_states(ctx))
        if required > j.beta:
            raise BetaTooSmallError(required, j.beta, "sampling rule")
        ob = hoare.Obligation(
            "sample.tail", "side", BudgetOb(required, j.beta, "exact violating tail mass")
        )
        hoare.replace_status(ob, "tested", f"max tail mass {required} over the state grid")
        return [ob], [], []
    if isinstance(node, AhlSeq):
        if not isinstance(s, sy.Seq):
            raise hoare.RuleShapeMismatchError("Seq rule on a non-sequence")
        total = Fraction(node.beta1) + Fraction(node.beta2)
        if total > j.beta:
            raise BetaTooSmallError(total, j.beta, "sequencing rule")
        ob = hoare.Obligation("seq.budget", "side", BudgetOb(total, j.beta, "summed budgets"))
        hoare.replace_status(ob, "proved", "budgets sum within the stated bound")
        return (
            [ob],
            [
                AHLJudgment(node.beta1, j.pre, s.first, node.mid),
                AHLJudgment(node.beta2, node.mid, s.second, j.post),
            ],
            [node.left, node.right],
        )
    if isinstance(node, AhlWhile):
        if not isinstance(s, sy.While):
            raise hoare.RuleShapeMismatchError("While rule on a non-loop")
        want_post = A.SAnd(j.pre, A.SNot(A.guard_assn(s.cond)))
        if j.post != want_post:
            raise hoare.RuleShapeMismatchError(
                "the union-bound loop rule concludes invariant /\\ not guard"
            )
        total = node.k * Fraction(node.body_beta)
        if total > j.beta:
            raise BetaTooSmallError(total, j.beta, "loop rule")
        obs = [hoare.Obligation("while.budget", "side", BudgetOb(total, j.beta, "k * body budget"))]
        hoare.replace_status(obs[0], "proved", f"{node.k} iterations at {node.body_beta}")
        for ob in hoare.check_cterm(program, s, node.variant, A.box(j.pre), ctx):
            obs.append(hoare.Obligation(f"while.{ob.oid}", ob.kind, ob.payload))
        return obs, [AHLJudgment(node.body_beta, j.pre, s.body, j.pre)], [node.child]
    if isinstance(node, AhlConseq):
        if Fraction(node.beta) > j.beta:
            raise BetaTooSmallError(node.beta, j.beta, "weakening rule")
        obs = [
            _imp_ob("conseq.pre", j.pre, node.pre, ctx),
            _imp_ob("conseq.post", node.post, j.post, ctx),
        ]
        return obs, [AHLJudgment(node.beta, node.pre, s, node.post)], [node.child]
    raise hoare.RuleShapeMismatchError(f"unknown union-bound rule {node!r}")


def _imp_ob(oid, lhs, rhs, ctx) -> hoare.Obligation:
    ob = hoare.Obligation(oid, "implication", SImplicationOb(lhs, rhs))
    checked = 0
    for m in _grid_states(ctx):
        a = _sassn_holds(lhs, m)
        if a is None or a is False:
            continue
        b = _sassn_holds(rhs, m)
        checked += 1
        if b is not True:
            return hoare.replace_status(ob, "failed", "state implication refuted", m)
    return hoare.replace_status(ob, "tested", f"{checked} states checked")


def _test_ahl_triple(ob, p: AhlTripleOb, ctx) -> hoare.Obligation:
    j = p.judgment
    passed = unknown = 0
    for m in _grid_states(ctx):
        if _sassn_holds(j.pre, m) is not True:
            continue
        try:
            res = exec_dist(ctx.program, j.stmt, SubDist.dirac(m), {}, ctx.cfg.budget)
        except sy.EvalError:
            unknown += 1
            continue
        bad = res.dist.pr(lambda m2: _sassn_holds(j.post, m2) is not True)
        if bad > j.beta:
            # violating mass in a lower approximation only ever grows
            return hoare.replace_status(ob, "failed", f"violation mass {bad}", m)
        if bad + res.weight_gap <= j.beta:
            passed += 1
        else:
            unknown += 1
    if passed == 0 and unknown > 0:
        return hoare.replace_status(ob, "unknown", "only inconclusive checks")
    return hoare.replace_status(ob, "tested", f"{passed} states within budget, {unknown} inconclusive")


def ahl_check(
    program: sy.Program,
    judgment: AHLJudgment,
    script,
    cfg: hoare.SuiteConfig | None = None,
) -> hoare.VerificationReport:
    ctx = hoare.CheckContext(program, cfg or hoare.SuiteConfig(), {}, ())
    collected: list = []

    def walk(j: AHLJudgment, node, path: str):
        if node is None:
            ob = hoare.Obligation(path, "triple", AhlTripleOb(j))
            _test_ahl_triple(ob, ob.payload, ctx)
            collected.append(ob)
            return
        try:
            obs, premises, children = ahl_apply(node, j, program, ctx)
        except (hoare.RuleShapeMismatchError, BetaTooSmallError) as e:
            collected.append(
                hoare.Obligation(
                    path + ".shape", "side", hoare.ShapeOb(str(e)), status="failed", detail=str(e)
                )
            )
            return
        for ob in obs:
            ob.oid = f"{path}.{ob.oid}"
            if ob.status == "pending":
                hoare.discharge(ob, ctx)
            collected.append(ob)
        for i, (prem, child) in enumerate(zip(premises, children)):
            walk(prem, child, f"{path}.{i}")

    walk(judgment, script, "root")
    return hoare.aggregate_report(collected, ctx.cfg.allow_tested)


def ahl_falsify(program, judgment: AHLJudgment, cfg=None):
    """Per-memory counterexample search: a precondition state whose exact
    run puts more than beta mass on post-violations."""
    ctx = hoare.CheckContext(program, cfg or hoare.SuiteConfig(), {}, ())
    for m in _grid_states(ctx):
        if _sassn_holds(judgment.pre, m) is not True:
            continue
        try:
            res = exec_dist(program, judgment.stmt, SubDist.dirac(m), {}, ctx.cfg.budget)
        except sy.EvalError:
            continue
        bad = res.dist.pr(lambda m2: _sassn_holds(judgment.post, m2) is not True)
        if bad > judgment.beta:
            return m
    return None


def embed_ahl(j: AHLJudgment) -> hoare.Judgment:
    """Union-bound judgments as ordinary triples: surely-pre in, a bounded
    violation probability out."""
    post = A.PCmp(A.pr_(A.SNot(j.post)), "le", A.plit(j.beta))
    return hoare.Judgment(A.box(j.pre), j.stmt, post)
