"""Judgments, proof scripts, rule application, side-condition certificates,
obligation discharge, and the semantic falsifier.

A proof script is a tree whose shape mirrors the statement structure.  Rule
application turns each node into premises (checked recursively when a child
script is supplied, or tested semantically otherwise) plus side obligations.
Obligations are discharged either by syntax (closedness classifier,
separation checks) or by exact enumeration over a deterministic input suite;
the two kinds stay distinct in the report.  The falsifier implements the
validity definition directly: it searches inputs, valuations and adversary
interpretations for a state distribution that satisfies the precondition
while the exact output refutes the postcondition.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import assertions as A
from . import syntax as sy
from .assert_syntax import print_passn
from .interp import Budget, check_lossless, detect_ct, exec_dist, syntactically_lossless
from .subdist import State, SubDist
from .values import Sort


class RuleShapeMismatchError(Exception):
    pass


# ---------------------------------------------------------------------------
# Judgments and scripts


@dataclass(frozen=True)
class Judgment:
    pre: A.PAssn
    stmt: sy.Stmt
    post: A.PAssn


@dataclass(frozen=True)
class VariantCert:
    """Integer-valued loop variant.  For certain termination no bounds are
    needed; for almost-sure termination the variant is bounded by K and must
    decrease with probability at least eps each guarded iteration."""

    expr: A.SExpr
    bound: int | None = None  # K
    eps: Fraction | None = None

    def __post_init__(self):
        if self.bound is not None and self.bound < 0:
            raise ValueError("variant bound K must be nonnegative")
        if self.eps is not None and not (0 < self.eps <= 1):
            raise ValueError("decrease probability must be in (0, 1]")


@dataclass(frozen=True)
class RuleSkip:
    pass


@dataclass(frozen=True)
class RuleAbort:
    pass


@dataclass(frozen=True)
class RuleAssgn:
    pass


@dataclass(frozen=True)
class RuleSample:
    pass


@dataclass(frozen=True)
class RulePC:
    """Precondition-calculus leaf.  When the stated precondition is not
    syntactically the computed one, the gap is emitted as an implication
    obligation (a fused consequence step)."""


@dataclass(frozen=True)
class RuleConseq:
    pre: A.PAssn
    post: A.PAssn
    child: object


@dataclass(frozen=True)
class RuleExists:
    var: str
    sort: Sort
    child: object


@dataclass(frozen=True)
class RuleSeq:
    mid: A.PAssn
    left: object
    right: object


@dataclass(frozen=True)
class RuleCond:
    left: object
    right: object


@dataclass(frozen=True)
class RuleSplit:
    left: object
    right: object


@dataclass(frozen=True)
class RuleFrame:
    lossless: str = "tested"  # syntactic | tested | axiom


@dataclass(frozen=True)
class RuleCall:
    child: object


@dataclass(frozen=True)
class RuleWhile:
    kind: str  # ct | ast | d | general
    family: A.PAssn
    index_var: str | None = None
    variant: VariantCert | None = None
    bound: int | None = None  # unrolling bound for ct; instantiation budget otherwise
    aux_family: A.PAssn | None = None  # general rule only


@dataclass(frozen=True)
class RuleAdv:
    family: A.PAssn
    index_var: str | None = None
    args: tuple = ()  # oracle argument expressions to instantiate
    bound: int | None = None  # declared bound on oracle calls per adversary call


ProofScript = object


# ---------------------------------------------------------------------------
# Obligations


@dataclass(frozen=True)
class ImplicationOb:
    lhs: A.PAssn
    rhs: A.PAssn


@dataclass(frozen=True)
class TripleOb:
    judgment: Judgment


@dataclass(frozen=True)
class ClosednessOb:
    assn: A.PAssn
    need: str  # u | t | d


@dataclass(frozen=True)
class SeparationOb:
    assn: A.PAssn
    varset: frozenset


@dataclass(frozen=True)
class LosslessOb:
    stmt: sy.Stmt
    evidence: str  # syntactic | tested | axiom


@dataclass(frozen=True)
class CTEvidenceOb:
    loop: sy.While
    bound: int


@dataclass(frozen=True)
class WeightOneOb:
    loop: sy.While
    pre: A.PAssn


@dataclass(frozen=True)
class CallBoundOb:
    adv: str
    bound: int


@dataclass(frozen=True)
class ShapeOb:
    reason: str


@dataclass
class Obligation:
    oid: str
    kind: str  # implication | triple | side
    payload: object
    status: str = "pending"  # proved | tested | failed | unknown
    detail: str = ""
    witness: object = None

    def describe(self) -> str:
        p = self.payload
        if isinstance(p, ImplicationOb):
            return f"{print_passn(p.lhs)}  =>  {print_passn(p.rhs)}"
        if isinstance(p, TripleOb):
            return f"{{{print_passn(p.judgment.pre)}}} ... {{{print_passn(p.judgment.post)}}}"
        if isinstance(p, ClosednessOb):
            return f"{p.need}-closed: {print_passn(p.assn)}"
        if isinstance(p, SeparationOb):
            return f"separation from {sorted(p.varset)}"
        if isinstance(p, LosslessOb):
            return f"lossless ({p.evidence})"
        if isinstance(p, CTEvidenceOb):
            return f"certain termination of {p.loop.label} within {p.bound}"
        if isinstance(p, WeightOneOb):
            return f"loop {p.loop.label} terminates with probability 1 from the invariant"
        if isinstance(p, CallBoundOb):
            return f"adversary {p.adv} makes at most {p.bound} oracle calls"
        if isinstance(p, ShapeOb):
            return p.reason
        return repr(p)


@dataclass(frozen=True)
class Counterexample:
    input: SubDist
    rho: dict
    binding: str
    output: SubDist
    pre_verdict: object
    post_verdict: object


@dataclass
class VerificationReport:
    verdict: str  # certified | failed | unknown
    obligations: list

    def to_json(self) -> dict:
        obs = []
        for ob in self.obligations:
            entry = {
                "id": ob.oid,
                "kind": ob.kind,
                "status": ob.status,
                "goal": ob.describe(),
            }
            if ob.detail:
                entry["detail"] = ob.detail
            if ob.witness is not None:
                from .subdist import dist_to_json

                if isinstance(ob.witness, Counterexample):
                    entry["witness"] = {
                        "input": dist_to_json(ob.witness.input),
                        "rho": {k: repr(v) for k, v in sorted(ob.witness.rho.items())},
                        "binding": ob.witness.binding,
                    }
                else:
                    entry["witness"] = repr(ob.witness)
            obs.append(entry)
        return {"verdict": self.verdict, "obligations": obs}


# ---------------------------------------------------------------------------
# Deterministic input suites


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    max_dirac: int = 48
    n_random_states: int = 12
    n_mixtures: int = 8
    mixture_size: int = 4
    denom_bound: int = 16
    budget: Budget = field(default_factory=Budget)
    logvar_cap: int = 128
    allow_tested: bool = False
    workers: int = 1


def sample_value(sort: Sort, rng: random.Random):
    from . import values as V

    if isinstance(sort, V.BoolSort):
        return rng.random() < 0.5
    if isinstance(sort, V.IntRangeSort):
        return rng.randint(sort.lo, sort.hi)
    if isinstance(sort, V.ArraySort):
        return V.ArrVal(sort.lo, tuple(sample_value(sort.elem, rng) for _ in range(sort.length())))
    if isinstance(sort, V.MapSort):
        pairs = []
        for k in sort.key.values():
            if rng.random() < 0.5:
                pairs.append((k, sample_value(sort.val, rng)))
        return V.MapVal.from_pairs(pairs)
    if isinstance(sort, V.SetSort):
        return frozenset(e for e in sort.elem.values() if rng.random() < 0.5)
    if isinstance(sort, V.TupleSort):
        return tuple(sample_value(s, rng) for s in sort.elems)
    raise TypeError(f"cannot sample from {sort}")


def dirac_grid(program: sy.Program, cfg: SuiteConfig) -> list:
    """Deterministic selection of initial states: the full declared-domain
    grid when small, otherwise a prefix plus seeded random states."""
    names = [n for n, _ in program.all_vars()]
    sorts = [s for _, s in program.all_vars()]
    total = 1
    for s in sorts:
        n = s.size()
        total = None if n is None else total * n
        if total is None or total > 10**9:
            total = None
            break
    states = []
    if total is not None and total <= cfg.max_dirac:
        for combo in itertools.product(*(list(s.values()) for s in sorts)):
            states.append(State(dict(zip(names, combo))))
    else:
        gen = itertools.product(*(list(s.values()) for s in sorts))
        for combo in itertools.islice(gen, cfg.max_dirac // 2):
            states.append(State(dict(zip(names, combo))))
        rng = random.Random(cfg.seed)
        seen = set(states)
        for _ in range(cfg.n_random_states * 4):
            if len(states) >= cfg.max_dirac:
                break
            m = State({n: sample_value(s, rng) for n, s in program.all_vars()})
            if m not in seen:
                seen.add(m)
                states.append(m)
    return states


def input_suite(program: sy.Program, cfg: SuiteConfig) -> list:
    """Dirac states over the declared domains (capped), canonical mixtures,
    and seeded rational mixtures with bounded denominators."""
    states = dirac_grid(program, cfg)
    suite = [SubDist.dirac(m) for m in states]
    if len(states) > 1:
        q = Fraction(1, len(states))
        mixes = [SubDist({m: q for m in states})]
        for i in range(0, min(len(states) - 1, 6), 2):
            mixes.append(SubDist({states[i]: Fraction(1, 2), states[i + 1]: Fraction(1, 2)}))
        suite.extend(mixes)
        # scaled copies matter: sub-unit weights exercise thresholds that
        # full distributions cannot reach
        for mix in mixes[:4]:
            suite.append(mix.scale(Fraction(1, 2)))
            suite.append(mix.scale(Fraction(1, 4)))
    rng = random.Random(cfg.seed + 1)
    for _ in range(cfg.n_mixtures):
        k = rng.randint(2, max(2, min(cfg.mixture_size, len(states))))
        chosen = rng.sample(states, k)
        weights = []
        rem = Fraction(1)
        for i, m in enumerate(chosen):
            den = rng.randint(2, cfg.denom_bound)
            num = rng.randint(1, den)
            q = min(Fraction(num, den), rem)
            weights.append((m, q))
            rem -= q
            if rem == 0:
                break
        mix = SubDist.from_pairs(weights)
        if not mix.is_null():
            suite.append(mix)
    return suite


def valuation_grid(logvars, cfg: SuiteConfig) -> list:
    """All valuations of the declared logical variables, capped."""
    logvars = list(logvars)
    if not logvars:
        return [{}]
    names = [n for n, _ in logvars]
    value_lists = [list(s.values()) for _, s in logvars]
    total = 1
    for vl in value_lists:
        total *= len(vl)
    rhos = []
    if total <= cfg.logvar_cap:
        for combo in itertools.product(*value_lists):
            rhos.append(dict(zip(names, combo)))
    else:
        rng = random.Random(cfg.seed + 2)
        for _ in range(cfg.logvar_cap):
            rhos.append({n: rng.choice(vl) for n, vl in zip(names, value_lists)})
    return rhos


# ---------------------------------------------------------------------------
# Discharge context


@dataclass
class CheckContext:
    program: sy.Program
    cfg: SuiteConfig
    adv_suite: dict  # advname -> list[AdvBinding]
    logvars: tuple = ()  # ((name, Sort), ...) declared in the spec file

    def __post_init__(self):
        self.suite = input_suite(self.program, self.cfg)
        self.rhos = valuation_grid(self.logvars, self.cfg)

    def binding_combos(self, stmt) -> list:
        """Cartesian product of bindings for the adversaries the statement
        may call; [{}] when no adversary is reachable."""
        advs = sorted(_adv_names(stmt, self.program))
        if not advs:
            return [{}]
        pools = []
        for a in advs:
            pool = self.adv_suite.get(a)
            if not pool:
                return []
            pools.append([(a, b) for b in pool])
        return [dict(combo) for combo in itertools.product(*pools)]


def _adv_names(s, program) -> frozenset:
    if isinstance(s, sy.AdvCall):
        return frozenset([s.adv])
    if isinstance(s, sy.Seq):
        return _adv_names(s.first, program) | _adv_names(s.second, program)
    if isinstance(s, sy.If):
        return _adv_names(s.then, program) | _adv_names(s.orelse, program)
    if isinstance(s, sy.While):
        return _adv_names(s.body, program)
    return frozenset()


# ---------------------------------------------------------------------------
# Obligation discharge


def _box_events(eta) -> list:
    """State-assertion conjuncts phi with [](phi) appearing conjunctively."""
    from .assert_syntax import _box_body

    body = _box_body(eta)
    if body is not None:
        return [body]
    if isinstance(eta, A.PAnd):
        return _box_events(eta.lhs) + _box_events(eta.rhs)
    return []


def _wants_full_weight(eta) -> bool:
    if eta == A.lossless_assn():
        return True
    if isinstance(eta, A.PAnd):
        return _wants_full_weight(eta.lhs) or _wants_full_weight(eta.rhs)
    return False


def _shaped_inputs(pre, suite, rho) -> list:
    """Extra inputs conditioned toward a triple's precondition: restrict to
    its box events, and renormalize exactly when the pre demands full weight."""
    events = _box_events(pre)
    if not events:
        return []
    out = []
    for mu in suite:
        nu = mu
        for phi in events:
            try:
                nu = nu.restrict(lambda m: A.eval_sassn(phi, rho, m))
            except sy.EvalError:
                nu = SubDist.null()
        if nu.is_null() or nu == mu:
            continue
        if _wants_full_weight(pre) and nu.weight() not in (0, 1):
            nu = nu.scale(1 / nu.weight())
        out.append(nu)
    return out


def discharge(ob: Obligation, ctx: CheckContext) -> Obligation:
    p = ob.payload
    if isinstance(p, ImplicationOb):
        return _discharge_implication(ob, p, ctx)
    if isinstance(p, TripleOb):
        return _discharge_triple(ob, p, ctx)
    if isinstance(p, ClosednessOb):
        c = A.classify_closedness(p.assn)
        got = {"u": c.u_closed, "t": c.t_closed, "d": c.d_closed}[p.need]
        if got == "yes":
            return replace_status(ob, "proved", "by the syntactic classifier")
        return replace_status(ob, "unknown", "not syntactically closed")
    if isinstance(p, SeparationOb):
        overlap = A.free_prog_vars(p.assn) & p.varset
        if overlap:
            return replace_status(ob, "failed", f"assertion reads {sorted(overlap)}")
        return replace_status(ob, "proved", "free variables disjoint")
    if isinstance(p, LosslessOb):
        return _discharge_lossless(ob, p, ctx)
    if isinstance(p, CTEvidenceOb):
        inputs = [mu for mu in ctx.suite if len(mu) <= 8][: max(8, len(ctx.suite) // 2)]
        got = detect_ct(ctx.program, p.loop, inputs, p.bound, budget=ctx.cfg.budget)
        if got is None:
            return replace_status(ob, "failed", f"no stabilization within {p.bound} unrollings")
        return replace_status(ob, "tested", f"stabilizes after {got} unrollings on the suite")
    if isinstance(p, WeightOneOb):
        return _discharge_weight_one(ob, p, ctx)
    if isinstance(p, CallBoundOb):
        pool = ctx.adv_suite.get(p.adv, [])
        if not pool:
            return replace_status(ob, "unknown", "no adversary bindings supplied")
        for b in pool:
            got = sy.max_oracle_calls(b.body)
            if got is None or got > p.bound:
                return replace_status(
                    ob, "failed", f"binding {b.name or '?'} exceeds call bound {p.bound}"
                )
        return replace_status(ob, "proved", f"all {len(pool)} bindings statically within bound")
    if isinstance(p, ShapeOb):
        return replace_status(ob, "failed", p.reason)
    raise TypeError(f"unknown obligation payload: {p!r}")


def replace_status(ob: Obligation, status, detail="", witness=None) -> Obligation:
    ob.status = status
    ob.detail = detail
    ob.witness = witness
    return ob


def _discharge_implication(ob, p: ImplicationOb, ctx) -> Obligation:
    passed = unknown = 0
    for rho in ctx.rhos:
        for mu in ctx.suite:
            a = A.holds(p.lhs, rho, mu)
            b = A.holds(p.rhs, rho, mu)
            v = A.v_imp(a, b)
            if v is A.FALSE:
                return replace_status(
                    ob,
                    "failed",
                    "implication refuted",
                    Counterexample(mu, rho, "", mu, a, b),
                )
            if v is A.TRUE:
                passed += 1
            else:
                unknown += 1
    if passed == 0 and unknown > 0:
        return replace_status(ob, "unknown", f"all {unknown} checks inconclusive")
    return replace_status(ob, "tested", f"{passed} checks passed, {unknown} inconclusive")


def _refutable(post, verdict, exact) -> bool:
    if verdict is not A.FALSE:
        return False
    if exact:
        return True
    return A.classify_closedness(post).d_closed == "yes"


def _discharge_triple(ob, p: TripleOb, ctx) -> Obligation:
    j = p.judgment
    combos = ctx.binding_combos(j.stmt)
    if not combos:
        return replace_status(ob, "unknown", "no adversary bindings supplied")
    passed = unknown = vacuous = 0
    for rho in ctx.rhos:
        inputs = ctx.suite + _shaped_inputs(j.pre, ctx.suite, rho)
        for mu in inputs:
            pre_v = A.holds(j.pre, rho, mu)
            if pre_v is A.FALSE:
                vacuous += 1
                continue
            if pre_v is A.UNKNOWN:
                unknown += 1
                continue
            for combo in combos:
                try:
                    res = exec_dist(ctx.program, j.stmt, mu, combo, ctx.cfg.budget)
                except sy.EvalError:
                    # unreachable-garbage suite state drove execution into a
                    # runtime error; inconclusive for this input
                    unknown += 1
                    continue
                v = A.holds(j.post, rho, res.dist)
                exact = res.weight_gap == 0
                if _refutable(j.post, v, exact):
                    name = ",".join(b.name or "?" for b in combo.values())
                    return replace_status(
                        ob,
                        "failed",
                        "postcondition refuted",
                        Counterexample(mu, rho, name, res.dist, pre_v, v),
                    )
                if v is A.TRUE and exact:
                    passed += 1
                else:
                    unknown += 1
    if passed == 0 and unknown > 0:
        return replace_status(ob, "unknown", f"all checks inconclusive ({vacuous} vacuous)")
    return replace_status(
        ob, "tested", f"{passed} checks passed, {unknown} inconclusive, {vacuous} vacuous"
    )


def _discharge_lossless(ob, p: LosslessOb, ctx) -> Obligation:
    if p.evidence == "axiom":
        return replace_status(ob, "proved", "user axiom")
    if p.evidence == "syntactic":
        if syntactically_lossless(ctx.program, p.stmt):
            return replace_status(ob, "proved", "no abort, full samplings, no loops")
        return replace_status(ob, "unknown", "syntactic losslessness check inconclusive")
    combos = ctx.binding_combos(p.stmt)
    if not combos:
        return replace_status(ob, "unknown", "no adversary bindings supplied")
    worst = "lossless"
    for combo in combos:
        rep = check_lossless(ctx.program, p.stmt, ctx.suite, combo, ctx.cfg.budget)
        if rep.verdict == "lossy":
            return replace_status(ob, "failed", "weight lost", rep.witness)
        if rep.verdict == "unknown":
            worst = "unknown"
    if worst == "unknown":
        return replace_status(ob, "unknown", "truncated runs prevent a conclusive check")
    return replace_status(ob, "tested", f"weight preserved on {len(ctx.suite)} inputs")


def _discharge_weight_one(ob, p: WeightOneOb, ctx) -> Obligation:
    passed = unknown = 0
    for rho in ctx.rhos:
        inputs = ctx.suite + _shaped_inputs(p.pre, ctx.suite, rho)
        for mu in inputs:
            if A.holds(p.pre, rho, mu) is not A.TRUE:
                continue
            try:
                res = exec_dist(ctx.program, p.loop, mu, {}, ctx.cfg.budget)
            except sy.EvalError:
                unknown += 1
                continue
            if res.dist.weight() + res.weight_gap < mu.weight():
                return replace_status(ob, "failed", "loop loses weight", mu)
            if res.weight_gap == 0 and res.dist.weight() == mu.weight():
                passed += 1
            else:
                unknown += 1
    if passed == 0 and unknown > 0:
        return replace_status(ob, "unknown", "only truncated evidence available")
    return replace_status(ob, "tested", f"{passed} exact checks, {unknown} truncated")


def discharge_all(obligations, ctx: CheckContext) -> list:
    if ctx.cfg.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=ctx.cfg.workers) as ex:
            return list(ex.map(lambda ob: discharge(ob, ctx), obligations))
    return [discharge(ob, ctx) for ob in obligations]


# ---------------------------------------------------------------------------
# Termination certificates


def _variant_cmp(expr, op, rhs_lit) -> A.SAssn:
    return A.SCmp(expr, op, A.SLit(rhs_lit))


def _collect_variant_range(program, loop, cert, ctx) -> list:
    ks = set()
    for mu in ctx.suite:
        for m in mu.support():
            try:
                if not A.eval_sassn(A.guard_assn(loop.cond), {}, m):
                    continue
                v = A.eval_sexpr(cert.expr, {}, m)
            except sy.EvalError:
                continue
            if type(v) is int and v > 0:
                ks.add(v)
    return sorted(ks)


def check_cterm(program, loop: sy.While, cert: VariantCert, eta0, ctx, inv=None) -> list:
    """Obligations for a strictly decreasing, bounded integer variant; their
    success licenses the certain-termination loop rule with bound max(k).

    The per-k triple requires the variant to stay nonnegative, which the
    exit condition needs to be meaningful.  An invariant context `inv` may
    strengthen the triple preconditions; it is sound there because the loop
    rule separately establishes that the invariant is preserved."""
    obs = []
    ks = _collect_variant_range(program, loop, cert, ctx)
    guard = A.guard_assn(loop.cond)
    for i, k in enumerate(ks):
        pre = A.PAnd(
            A.lossless_assn(),
            A.box(A.SAnd(_variant_cmp(cert.expr, "eq", k), guard)),
        )
        if inv is not None:
            pre = A.PAnd(inv, pre)
        post = A.PAnd(
            A.lossless_assn(),
            A.box(
                A.SAnd(
                    _variant_cmp(cert.expr, "le", k - 1),
                    A.SCmp(A.SLit(0), "le", cert.expr),
                )
            ),
        )
        obs.append(Obligation(f"ct.k{k}", "triple", TripleOb(Judgment(pre, loop.body, post))))
    kmax = ks[-1] if ks else 0
    exit_cond = A.box(
        A.SAnd(
            A.SImp(_variant_cmp(cert.expr, "eq", 0), A.SNot(guard)),
            A.SAnd(
                A.SCmp(A.SLit(0), "le", cert.expr),
                _variant_cmp(cert.expr, "le", kmax),
            ),
        )
    )
    obs.append(Obligation("ct.entry", "implication", ImplicationOb(eta0, exit_cond)))
    return obs


def cterm_bound(program, loop, cert, ctx) -> int:
    ks = _collect_variant_range(program, loop, cert, ctx)
    return ks[-1] if ks else 0


def check_asterm(program, loop: sy.While, cert: VariantCert, eta0, ctx, inv=None) -> list:
    """Obligations for a bounded probabilistic variant that decreases with
    probability at least eps each guarded iteration.  As with the certain
    case, `inv` may condition the triples on the loop invariant."""
    if cert.bound is None or cert.eps is None:
        raise RuleShapeMismatchError("almost-sure termination certificates need K and eps")
    obs = []
    K, eps = cert.bound, cert.eps
    guard = A.guard_assn(loop.cond)
    in_range = A.SAnd(
        A.SCmp(A.SLit(0), "le", cert.expr), _variant_cmp(cert.expr, "le", K)
    )
    for k in range(1, K + 1):
        pre = A.PAnd(
            A.lossless_assn(),
            A.box(A.SAnd(_variant_cmp(cert.expr, "eq", k), guard)),
        )
        if inv is not None:
            pre = A.PAnd(inv, pre)
        post = A.PAnd(
            A.PAnd(A.lossless_assn(), A.box(in_range)),
            A.PCmp(A.plit(eps), "le", A.pr_(_variant_cmp(cert.expr, "le", k - 1))),
        )
        obs.append(Obligation(f"ast.k{k}", "triple", TripleOb(Judgment(pre, loop.body, post))))
    entry = A.box(A.SAnd(in_range, A.SImp(_variant_cmp(cert.expr, "eq", 0), A.SNot(guard))))
    obs.append(Obligation("ast.entry", "implication", ImplicationOb(eta0, entry)))
    return obs


# ---------------------------------------------------------------------------
# Rule application


def _fam_at(family, index_var, n):
    if index_var is None:
        return family
    return A.subst_logvar(family, index_var, n)


def _fam_uniform(family, index_var) -> bool:
    return index_var is None or index_var not in A.free_log_vars(family)


def _guarded(loop: sy.While) -> sy.Stmt:
    return sy.If(loop.cond, loop.body, sy.Skip())


def _guarded_abort(loop: sy.While) -> sy.Stmt:
    return sy.If(loop.cond, sy.Abort(), sy.Skip())


def apply_rule(node, j: Judgment, program: sy.Program, ctx=None):
    """Premises and side obligations of one rule application.

    Returns (obligations, premises, child_scripts); premises line up with
    child_scripts (a None script means the premise must be tested).
    Raises RuleShapeMismatchError when the judgment does not fit the rule.
    """
    s = j.stmt
    if isinstance(node, RuleSkip):
        if not isinstance(s, sy.Skip):
            raise RuleShapeMismatchError("Skip rule on a non-skip statement")
        if j.pre != j.post:
            raise RuleShapeMismatchError("Skip rule needs pre = post")
        return [], [], []
    if isinstance(node, RuleAbort):
        if not isinstance(s, sy.Abort):
            raise RuleShapeMismatchError("Abort rule on a non-abort statement")
        if j.post != A.box(A.SFalse()):
            raise RuleShapeMismatchError("Abort rule concludes [] (false)")
        return [], [], []
    if isinstance(node, RuleAssgn):
        if not isinstance(s, sy.Assign):
            raise RuleShapeMismatchError("Assgn rule on a non-assignment")
        want = A.subst_prog(j.post, s.var, s.expr)
        if j.pre != want:
            raise RuleShapeMismatchError(
                f"Assgn rule needs pre = post[{s.var} := e], i.e. {print_passn(want)}"
            )
        return [], [], []
    if isinstance(node, RuleSample):
        if not isinstance(s, sy.Sample):
            raise RuleShapeMismatchError("Sample rule on a non-sampling statement")
        want = A.samp_subst(j.post, s.var, s.dist)
        if j.pre != want:
            raise RuleShapeMismatchError(
                f"Sample rule needs pre = S(post), i.e. {print_passn(want)}"
            )
        return [], [], []
    if isinstance(node, RulePC):
        from .wp import wpre

        want = wpre(s, j.post, program)
        if j.pre == want:
            return [], [], []
        return [Obligation("pc", "implication", ImplicationOb(j.pre, want))], [], []
    if isinstance(node, RuleConseq):
        obs = [
            Obligation("conseq.pre", "implication", ImplicationOb(j.pre, node.pre)),
            Obligation("conseq.post", "implication", ImplicationOb(node.post, j.post)),
        ]
        return obs, [Judgment(node.pre, s, node.post)], [node.child]
    if isinstance(node, RuleExists):
        if not (
            isinstance(j.pre, A.PQuant)
            and j.pre.kind == "exists"
            and j.pre.var == node.var
            and j.pre.sort == node.sort
        ):
            raise RuleShapeMismatchError("Exists rule needs an existential precondition")
        return [], [Judgment(j.pre.body, s, j.post)], [node.child]
    if isinstance(node, RuleSeq):
        if not isinstance(s, sy.Seq):
            raise RuleShapeMismatchError("Seq rule on a non-sequence")
        return (
            [],
            [Judgment(j.pre, s.first, node.mid), Judgment(node.mid, s.second, j.post)],
            [node.left, node.right],
        )
    if isinstance(node, RuleCond):
        if not isinstance(s, sy.If):
            raise RuleShapeMismatchError("Cond rule on a non-conditional")
        if not (isinstance(j.pre, A.PSplit) and isinstance(j.post, A.PSplit)):
            raise RuleShapeMismatchError("Cond rule needs (+) pre- and post-conditions")
        g = A.guard_assn(s.cond)
        want_l = A.PAnd(_strip_guard(j.pre.lhs, g), A.box(g))
        want_r = A.PAnd(_strip_guard(j.pre.rhs, A.SNot(g)), A.box(A.SNot(g)))
        if j.pre.lhs != want_l or j.pre.rhs != want_r:
            raise RuleShapeMismatchError(
                "Cond rule needs pre = (a /\\ [](e)) (+) (b /\\ [](not e))"
            )
        return (
            [],
            [
                Judgment(j.pre.lhs, s.then, j.post.lhs),
                Judgment(j.pre.rhs, s.orelse, j.post.rhs),
            ],
            [node.left, node.right],
        )
    if isinstance(node, RuleSplit):
        if not (isinstance(j.pre, A.PSplit) and isinstance(j.post, A.PSplit)):
            raise RuleShapeMismatchError("Split rule needs (+) pre- and post-conditions")
        return (
            [],
            [Judgment(j.pre.lhs, s, j.post.lhs), Judgment(j.pre.rhs, s, j.post.rhs)],
            [node.left, node.right],
        )
    if isinstance(node, RuleFrame):
        if j.pre != j.post:
            raise RuleShapeMismatchError("Frame rule needs pre = post")
        obs = [
            Obligation(
                "frame.sep", "side", SeparationOb(j.pre, sy.modified_vars(s, program))
            ),
            Obligation("frame.lossless", "side", LosslessOb(s, node.lossless)),
        ]
        return obs, [], []
    if isinstance(node, RuleCall):
        if not isinstance(s, sy.Call):
            raise RuleShapeMismatchError("Call rule on a non-call statement")
        p = program.proc(s.proc)
        inner = sy.Seq(sy.Assign(p.arg, s.arg), p.body)
        post = A.subst_prog(j.post, s.var, p.ret)
        return [], [Judgment(j.pre, inner, post)], [node.child]
    if isinstance(node, RuleWhile):
        return _apply_while(node, j, program, ctx)
    if isinstance(node, RuleAdv):
        return _apply_adv(node, j, program, ctx)
    raise RuleShapeMismatchError(f"unknown rule node {node!r}")


def _strip_guard(eta, g):
    """a from (a /\\ [](g)); shape helper for the Cond rule."""
    if isinstance(eta, A.PAnd) and eta.rhs == A.box(g):
        return eta.lhs
    raise RuleShapeMismatchError("expected a conjunct of the form ... /\\ [](guard)")


def _apply_while(node: RuleWhile, j: Judgment, program, ctx):
    s = j.stmt
    if not isinstance(s, sy.While):
        raise RuleShapeMismatchError("While rules apply to while loops only")
    fam, idx = node.family, node.index_var
    uniform = _fam_uniform(fam, idx)
    obs = []
    premises = []

    if node.kind == "ct":
        if node.variant is None and node.bound is None:
            raise RuleShapeMismatchError("While-CT needs a variant certificate or a bound")
        if node.variant is not None:
            bound = node.bound if node.bound is not None else cterm_bound(program, s, node.variant, ctx)
            for ob in check_cterm(program, s, node.variant, _fam_at(fam, idx, 0), ctx):
                obs.append(Obligation(f"while.{ob.oid}", ob.kind, ob.payload))
        else:
            bound = node.bound
            obs.append(Obligation("while.ct", "side", CTEvidenceOb(s, bound)))
        n_range = range(0, bound)
        post_inst = _fam_at(fam, idx, bound)
    elif node.kind in ("ast", "d", "general"):
        budget = node.bound if node.bound is not None else 6
        n_range = range(0, budget)
        if not uniform:
            obs.append(
                Obligation(
                    "while.limit",
                    "side",
                    ShapeOb("index-dependent family has no checkable limit instance"),
                )
            )
            post_inst = fam
        else:
            post_inst = fam
        if node.kind == "ast":
            obs.append(Obligation("while.tclosed", "side", ClosednessOb(fam, "t")))
            if node.variant is not None:
                inv = _fam_at(fam, idx, 0) if uniform else None
                for ob in check_asterm(program, s, node.variant, _fam_at(fam, idx, 0), ctx, inv=inv):
                    obs.append(Obligation(f"while.{ob.oid}", ob.kind, ob.payload))
            else:
                obs.append(Obligation("while.weight1", "side", WeightOneOb(s, _fam_at(fam, idx, 0))))
        elif node.kind == "d":
            obs.append(Obligation("while.dclosed", "side", ClosednessOb(fam, "d")))
        else:
            aux = node.aux_family
            if aux is None:
                raise RuleShapeMismatchError("the general While rule needs an auxiliary family")
            obs.append(Obligation("while.uclosed", "side", ClosednessOb(aux, "u")))
            guarded_abort = _guarded_abort(s)
            for n in n_range:
                premises.append(
                    Judgment(_fam_at(fam, idx, n), guarded_abort, _fam_at(aux, idx, n))
                )
            post_inst = aux
    else:
        raise RuleShapeMismatchError(f"unknown while-rule kind {node.kind!r}")

    want_post = A.PAnd(post_inst, A.box(A.SNot(A.guard_assn(s.cond))))
    if j.post != want_post:
        raise RuleShapeMismatchError(
            f"While-{node.kind} concludes {print_passn(want_post)}"
        )
    if j.pre != _fam_at(fam, idx, 0):
        raise RuleShapeMismatchError("While rules need pre = family at index 0")

    guarded = _guarded(s)
    if uniform:
        premises.append(Judgment(fam, guarded, fam))
    else:
        for n in n_range:
            premises.append(Judgment(_fam_at(fam, idx, n), guarded, _fam_at(fam, idx, n + 1)))
    return obs, premises, [None] * len(premises)


def _apply_adv(node: RuleAdv, j: Judgment, program, ctx):
    s = j.stmt
    if not isinstance(s, sy.AdvCall):
        raise RuleShapeMismatchError("the adversary rule applies to adversary calls")
    decl = program.adv(s.adv)
    fam, idx = node.family, node.index_var
    uniform = _fam_uniform(fam, idx)
    writable = frozenset(n for n, _ in decl.locals) | frozenset([s.var])
    obs = [
        Obligation("adv.sep", "side", SeparationOb(fam, writable)),
        Obligation("adv.dclosed", "side", ClosednessOb(fam, "d")),
    ]
    if node.bound is not None:
        obs.append(Obligation("adv.callbound", "side", CallBoundOb(s.adv, node.bound)))
        post_inst = _fam_at(fam, idx, node.bound)
        n_range = range(0, node.bound)
    else:
        if not uniform:
            obs.append(
                Obligation(
                    "adv.limit",
                    "side",
                    ShapeOb("index-dependent family needs a call bound"),
                )
            )
        post_inst = fam
        n_range = range(0, 4)
    if j.pre != _fam_at(fam, idx, 0):
        raise RuleShapeMismatchError("adversary rule needs pre = family at index 0")
    if j.post != post_inst:
        raise RuleShapeMismatchError("adversary rule post does not match the family instance")

    target = next((n for n, _ in decl.locals if n != decl.arg), decl.arg)
    premises = []
    for oname in decl.oracles:
        for arg in node.args:
            call = sy.Call(target, oname, arg)
            if uniform:
                premises.append(Judgment(fam, call, fam))
            else:
                for n in n_range:
                    premises.append(
                        Judgment(_fam_at(fam, idx, n), call, _fam_at(fam, idx, n + 1))
                    )
    return obs, premises, [None] * len(premises)


# ---------------------------------------------------------------------------
# Script checking and falsification


def check_script(
    program: sy.Program,
    judgment: Judgment,
    script,
    ctx: CheckContext | None = None,
    cfg: SuiteConfig | None = None,
    adv_suite: dict | None = None,
    logvars=(),
) -> VerificationReport:
    """Walk a proof script, discharging every obligation; the report verdict
    is `certified` only if nothing failed and (unless allow_tested is set)
    nothing stayed unknown."""
    if ctx is None:
        ctx = CheckContext(program, cfg or SuiteConfig(), adv_suite or {}, tuple(logvars))
    collected: list = []

    def walk(j: Judgment, node, path: str):
        if node is None:
            collected.append(Obligation(path, "triple", TripleOb(j)))
            return
        try:
            obs, premises, children = apply_rule(node, j, program, ctx)
        except RuleShapeMismatchError as e:
            collected.append(
                Obligation(path + ".shape", "side", ShapeOb(str(e)), status="failed", detail=str(e))
            )
            return
        except (A.UnsupportedSplitError, A.UnsupportedFormError) as e:
            collected.append(
                Obligation(path + ".shape", "side", ShapeOb(str(e)), status="failed", detail=str(e))
            )
            return
        for ob in obs:
            ob.oid = f"{path}.{ob.oid}"
            collected.append(ob)
        for i, (prem_j, child) in enumerate(zip(premises, children)):
            walk(prem_j, child, f"{path}.{i}")

    walk(judgment, script, "root")
    pending = [ob for ob in collected if ob.status == "pending"]
    discharge_all(pending, ctx)
    return aggregate_report(collected, ctx.cfg.allow_tested)


def aggregate_report(obligations, allow_tested: bool) -> VerificationReport:
    verdict = "certified"
    for ob in obligations:
        if ob.status == "failed":
            verdict = "failed"
            break
    else:
        if any(ob.status == "unknown" for ob in obligations) and not allow_tested:
            verdict = "unknown"
    return VerificationReport(verdict, list(obligations))


def falsify(
    program: sy.Program,
    judgment: Judgment,
    adv_suite: dict | None = None,
    cfg: SuiteConfig | None = None,
    logvars=(),
):
    """Search for a counterexample to a judgment's validity: an input
    satisfying the pre whose exact output refutes the post, under some
    adversary interpretation.  Truncated outputs may only refute
    downward-closed postconditions."""
    ctx = CheckContext(program, cfg or SuiteConfig(), adv_suite or {}, tuple(logvars))
    combos = ctx.binding_combos(judgment.stmt)
    for rho in ctx.rhos:
        for mu in ctx.suite:
            pre_v = A.holds(judgment.pre, rho, mu)
            if pre_v is not A.TRUE:
                continue
            for combo in combos:
                try:
                    res = exec_dist(ctx.program, judgment.stmt, mu, combo, ctx.cfg.budget)
                except sy.EvalError:
                    continue
                v = A.holds(judgment.post, rho, res.dist)
                if _refutable(judgment.post, v, res.weight_gap == 0):
                    name = ",".join(b.name or "?" for b in combo.values())
                    return Counterexample(mu, rho, name, res.dist, pre_v, v)
    return None
