"""Exact denotational semantics for pWhile programs.

Execution transforms an input sub-distribution over states into an exact
output sub-distribution.  While loops are evaluated as lower approximations:
mass exits the loop as the guard goes false, and iteration stops at a
fixpoint (exact result) or at the unrolling budget (truncated result).  The
weight a run loses is split into truncation loss, tracked in `weight_gap`,
and genuine loss (abort statements, sub-unit sampling tables, loops whose
active part stalls), which simply leaves the output weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from . import syntax as sy
from .subdist import State, SubDist
from .syntax import (
    BadParamError,
    DivByZeroError,
    DomainEscapeError,
    EvalError,
)


class NoAdvBindingError(EvalError):
    """Adversary call reached without a concrete body bound for it."""


class BudgetStatesExceededError(EvalError):
    pass


class AdvRestrictionError(EvalError):
    """A bound adversary body violates its declared flags or scope."""


@dataclass(frozen=True)
class Budget:
    max_loop_unrollings: int = 64
    max_states: int = 500_000

    def __post_init__(self):
        if self.max_loop_unrollings <= 0 or self.max_states <= 0:
            raise ValueError("budget fields must be positive")


@dataclass(frozen=True)
class ExecResult:
    dist: SubDist
    weight_gap: Fraction  # mass lost to budget truncation only
    loops_truncated: tuple = ()

    def exact(self) -> bool:
        return self.weight_gap == 0


@dataclass
class AdvBinding:
    """Concrete interpretation of one adversary, with optional restrictions."""

    body: sy.Stmt
    lossless: bool = False
    call_bound: int | None = None
    name: str = ""


def validate_binding(program: sy.Program, adv_name: str, binding: AdvBinding):
    decl = program.adv(adv_name)
    diags = sy.check_adv_body(program, decl, binding.body)
    if diags:
        raise AdvRestrictionError(
            f"binding for {adv_name!r}: " + "; ".join(str(d) for d in diags)
        )
    if binding.call_bound is not None:
        bound = sy.max_oracle_calls(binding.body)
        if bound is None or bound > binding.call_bound:
            raise AdvRestrictionError(
                f"binding for {adv_name!r} may make {bound or 'unboundedly many'} oracle "
                f"calls, above its declared bound {binding.call_bound}"
            )


# ---------------------------------------------------------------------------
# Expressions


def eval_expr(e, m: State, rho: dict | None = None):
    """Evaluate an expression in a state; `rho` supplies logical variables
    when expressions are evaluated inside assertions."""
    if isinstance(e, sy.Var):
        if m.has(e.name):
            return m.get(e.name)
        if rho is not None and e.name in rho:
            return rho[e.name]
        raise EvalError(f"unbound variable {e.name!r}")
    if isinstance(e, sy.Lit):
        return e.value
    if isinstance(e, sy.Op):
        return sy.apply_op(e.op, [eval_expr(a, m, rho) for a in e.args])
    if isinstance(e, sy.CondExpr):
        c = eval_expr(e.cond, m, rho)
        if type(c) is not bool:
            raise EvalError("conditional guard must be boolean")
        return eval_expr(e.then if c else e.orelse, m, rho)
    raise TypeError(f"not an expression: {e!r}")


def eval_dexpr(g, m: State, rho: dict | None = None) -> SubDist:
    """Exact value distribution of a distribution expression in a state."""
    if isinstance(g, sy.BernoulliD):
        p = Fraction(eval_expr(g.p, m, rho))
        if not 0 <= p <= 1:
            raise BadParamError(f"Bernoulli parameter {p} outside [0,1]")
        return SubDist({True: p, False: 1 - p})
    if isinstance(g, sy.UniformRangeD):
        lo = eval_expr(g.lo, m, rho)
        hi = eval_expr(g.hi, m, rho)
        if type(lo) is not int or type(hi) is not int or lo > hi:
            raise BadParamError(f"bad uniform range [{lo}..{hi}]")
        q = Fraction(1, hi - lo + 1)
        return SubDist({v: q for v in range(lo, hi + 1)})
    if isinstance(g, sy.UniformSetD):
        s = eval_expr(g.set, m, rho)
        if type(s) is not frozenset or not s:
            raise BadParamError("uniform choice needs a nonempty set")
        q = Fraction(1, len(s))
        return SubDist({v: q for v in s})
    if isinstance(g, sy.BinomialD):
        n = eval_expr(g.n, m, rho)
        if type(n) is not int or n < 0:
            raise BadParamError(f"binomial count {n!r} must be a nonnegative integer")
        p = g.p
        if not 0 <= p <= 1:
            raise BadParamError(f"binomial probability {p} outside [0,1]")
        return SubDist({k: comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)})
    if isinstance(g, sy.TableD):
        total = sum((Fraction(q) for _, q in g.entries), Fraction(0))
        if total > 1:
            raise BadParamError(f"table masses sum to {total} > 1")
        return SubDist.from_pairs(g.entries)
    raise TypeError(f"not a distribution expression: {g!r}")


# ---------------------------------------------------------------------------
# Statements


class _Exec:
    def __init__(self, program: sy.Program, adv: dict | None, budget: Budget):
        self.program = program
        self.adv = adv or {}
        self.budget = budget
        self.gap = Fraction(0)
        self.truncated: list = []

    def _check_size(self, d: SubDist):
        if len(d) > self.budget.max_states:
            raise BudgetStatesExceededError(
                f"support size {len(d)} exceeds budget {self.budget.max_states}"
            )

    def _assign_value(self, m: State, var: str, value) -> State:
        sort = self.program.var_sort(var)
        if not sort.contains(value):
            raise DomainEscapeError(
                f"value {value!r} escapes the declared domain {sort} of {var!r}"
            )
        return m.set(var, value)

    def run(self, s, mu: SubDist) -> SubDist:
        if mu.is_null():
            return mu
        if isinstance(s, sy.Skip):
            return mu
        if isinstance(s, sy.Abort):
            return SubDist.null()
        if isinstance(s, sy.Assign):
            out = mu.map(lambda m: self._assign_value(m, s.var, eval_expr(s.expr, m)))
            self._check_size(out)
            return out
        if isinstance(s, sy.Sample):
            out = mu.bind(
                lambda m: eval_dexpr(s.dist, m).map(
                    lambda v: self._assign_value(m, s.var, v)
                )
            )
            self._check_size(out)
            return out
        if isinstance(s, sy.Seq):
            return self.run(s.second, self.run(s.first, mu))
        if isinstance(s, sy.If):
            t = mu.restrict(lambda m: eval_expr(s.cond, m) is True)
            f = mu.restrict(lambda m: eval_expr(s.cond, m) is False)
            return self.run(s.then, t).add(self.run(s.orelse, f))
        if isinstance(s, sy.While):
            return self._run_while(s, mu)
        if isinstance(s, sy.Call):
            return mu.bind(lambda m: self._run_call(s, m))
        if isinstance(s, sy.AdvCall):
            return self._run_adv(s, mu)
        raise TypeError(f"not a statement: {s!r}")

    def _run_while(self, s: sy.While, mu: SubDist) -> SubDist:
        def guard(m):
            v = eval_expr(s.cond, m)
            if type(v) is not bool:
                raise EvalError("while guard must be boolean")
            return v

        done = mu.restrict(lambda m: not guard(m))
        active = mu.restrict(guard)
        for _ in range(self.budget.max_loop_unrollings):
            if active.is_null():
                return done
            stepped = self.run(s.body, active)
            exited = stepped.restrict(lambda m: not guard(m))
            next_active = stepped.restrict(guard)
            done = done.add(exited)
            self._check_size(done)
            if next_active == active:
                # the active part is a fixpoint of the guarded body: no mass
                # can ever exit, so the result is exact and the residual
                # weight is genuine divergence, not truncation
                return done
            active = next_active
        if not active.is_null():
            self.gap += active.weight()
            if s.label not in self.truncated:
                self.truncated.append(s.label)
        return done

    def _run_call(self, s: sy.Call, m: State) -> SubDist:
        p = self.program.proc(s.proc)
        saved = {n: m.get(n) for n, _ in p.locals}
        entry = self._assign_value(m, p.arg, eval_expr(s.arg, m))
        out = self.run(p.body, SubDist.dirac(entry))

        def finish(m2: State) -> State:
            ret = eval_expr(p.ret, m2)
            m3 = self._assign_value(m2, s.var, ret)
            return m3.set_many(saved)

        return out.map(finish)

    def _run_adv(self, s: sy.AdvCall, mu: SubDist) -> SubDist:
        decl = self.program.adv(s.adv)
        if s.adv not in self.adv:
            raise NoAdvBindingError(f"no binding supplied for adversary {s.adv!r}")
        binding = self.adv[s.adv]
        gap_before = self.gap

        def per_state(m: State) -> SubDist:
            entry = self._assign_value(m, decl.arg, eval_expr(s.arg, m))
            out = self.run(binding.body, SubDist.dirac(entry))
            return out.map(
                lambda m2: self._assign_value(m2, s.var, eval_expr(decl.ret, m2))
            )

        result = mu.bind(per_state)
        if binding.lossless and self.gap == gap_before and result.weight() < mu.weight():
            raise AdvRestrictionError(
                f"adversary {s.adv!r} flagged lossless but lost weight "
                f"{mu.weight() - result.weight()}"
            )
        return result


def exec_dist(
    program: sy.Program,
    s,
    mu: SubDist,
    adv: dict | None = None,
    budget: Budget = Budget(),
) -> ExecResult:
    """Lifted execution from an input sub-distribution over states."""
    ex = _Exec(program, adv, budget)
    out = ex.run(s, mu)
    return ExecResult(out, ex.gap, tuple(ex.truncated))


def exec_state(
    program: sy.Program,
    s,
    m: State,
    adv: dict | None = None,
    budget: Budget = Budget(),
) -> ExecResult:
    """Execution from a single initial state."""
    return exec_dist(program, s, SubDist.dirac(m), adv, budget)


def exec_main(program, mu, adv=None, budget=Budget()) -> ExecResult:
    return exec_dist(program, program.main, mu, adv, budget)


# ---------------------------------------------------------------------------
# Loop diagnostics


def detect_ct(
    program: sy.Program,
    loop: sy.While,
    inputs,
    k_max: int,
    adv: dict | None = None,
    budget: Budget = Budget(),
):
    """Smallest k (at most k_max) such that, on every test input, k guarded
    unrollings leave no guard-true mass.  Evidence of certain termination,
    not a proof, unless a variant certificate also holds."""

    best = 0
    for mu in inputs:
        ex = _Exec(program, adv, budget)
        try:
            active = mu.restrict(lambda m: eval_expr(loop.cond, m) is True)
            k = 0
            while not active.is_null():
                if k >= k_max:
                    return None
                stepped = ex.run(loop.body, active)
                active = stepped.restrict(lambda m: eval_expr(loop.cond, m) is True)
                k += 1
        except EvalError:
            continue
        best = max(best, k)
    return best


@dataclass(frozen=True)
class LosslessReport:
    verdict: str  # "lossless" | "lossy" | "unknown"
    witness: object = None  # input distribution for lossy verdicts
    gap: Fraction = Fraction(0)
    evidence: tuple = ()  # (input weight, output weight) pairs checked


def check_lossless(
    program: sy.Program,
    s,
    inputs,
    adv: dict | None = None,
    budget: Budget = Budget(),
) -> LosslessReport:
    """Compare output and input weights on each test input.

    Weight strictly lost with no truncation anywhere is conclusive lossiness;
    preserved weight on all inputs is (only) supporting evidence.
    """
    evidence = []
    max_gap = Fraction(0)
    unknown = False
    for mu in inputs:
        try:
            res = exec_dist(program, s, mu, adv, budget)
        except NoAdvBindingError:
            raise
        except EvalError:
            # inputs that drive execution into runtime errors are skipped
            continue
        evidence.append((mu.weight(), res.dist.weight()))
        if res.weight_gap == 0:
            if res.dist.weight() < mu.weight():
                return LosslessReport("lossy", witness=mu, evidence=tuple(evidence))
        else:
            max_gap = max(max_gap, res.weight_gap)
            if res.dist.weight() + res.weight_gap < mu.weight():
                # even crediting all truncated mass the weight cannot recover
                return LosslessReport("lossy", witness=mu, gap=res.weight_gap, evidence=tuple(evidence))
            unknown = True
    if unknown:
        return LosslessReport("unknown", gap=max_gap, evidence=tuple(evidence))
    return LosslessReport("lossless", evidence=tuple(evidence))


def syntactically_lossless(program: sy.Program, s) -> bool:
    """Sound quick check: no abort, no loops, full-weight samplings only,
    and all calls (incl. adversary bodies, which are unknown) excluded."""
    if isinstance(s, (sy.Skip, sy.Assign)):
        return True
    if isinstance(s, sy.Abort):
        return False
    if isinstance(s, sy.Sample):
        if isinstance(s.dist, sy.TableD):
            return sum((Fraction(q) for _, q in s.dist.entries), Fraction(0)) == 1
        return True
    if isinstance(s, sy.Seq):
        return syntactically_lossless(program, s.first) and syntactically_lossless(program, s.second)
    if isinstance(s, sy.If):
        return syntactically_lossless(program, s.then) and syntactically_lossless(program, s.orelse)
    if isinstance(s, sy.While):
        return False
    if isinstance(s, sy.Call):
        return syntactically_lossless(program, program.proc(s.proc).body)
    return False
