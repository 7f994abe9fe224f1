"""Mechanical precondition calculus for loop-free statements.

`prem` rewrites a probabilistic expression so that its value before running
the statement equals the original's value after; `wpre` applies that to every
expectation inside an assertion.  Procedure calls are inlined first (their
bodies must be loop-free too).  Split assertions are rejected rather than
guessed, and derived forms must be expanded before use.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import assertions as A
from . import syntax as sy
from .assertions import UnsupportedFormError, UnsupportedSplitError
from .interp import exec_dist


class NotLoopFreeError(Exception):
    pass


def is_loop_free(s, program: sy.Program) -> bool:
    """No while loops and no adversary calls anywhere, including the bodies
    of procedures the statement calls."""
    if isinstance(s, (sy.Skip, sy.Abort, sy.Assign, sy.Sample)):
        return True
    if isinstance(s, sy.Seq):
        return is_loop_free(s.first, program) and is_loop_free(s.second, program)
    if isinstance(s, sy.If):
        return is_loop_free(s.then, program) and is_loop_free(s.orelse, program)
    if isinstance(s, sy.While):
        return False
    if isinstance(s, sy.Call):
        return is_loop_free(program.proc(s.proc).body, program)
    if isinstance(s, sy.AdvCall):
        return False
    raise TypeError(f"not a statement: {s!r}")


def inline_calls(s, program: sy.Program):
    """Replace procedure calls by arg-assign; body; return-assign.

    Note the interpreter restores callee locals after a call while this
    expansion leaves them assigned; preconditions computed through calls are
    therefore meaningful only for assertions that do not mention callee
    locals (their natural use)."""
    if isinstance(s, (sy.Skip, sy.Abort, sy.Assign, sy.Sample)):
        return s
    if isinstance(s, sy.Seq):
        return sy.Seq(inline_calls(s.first, program), inline_calls(s.second, program))
    if isinstance(s, sy.If):
        return sy.If(s.cond, inline_calls(s.then, program), inline_calls(s.orelse, program))
    if isinstance(s, sy.Call):
        p = program.proc(s.proc)
        return sy.seq_of(
            [
                sy.Assign(p.arg, s.arg),
                inline_calls(p.body, program),
                sy.Assign(s.var, p.ret),
            ]
        )
    raise NotLoopFreeError(f"statement is not loop-free: {s!r}")


def _restrict_term(term, phi: A.SAssn):
    """Push the event restriction through sums of expectations and zeros
    (the only shapes the calculus produces for expectation pre-terms)."""
    if isinstance(term, A.PLit) and term.value == 0:
        return term
    if isinstance(term, A.PEx):
        return A.cond_restrict(term, phi)
    if isinstance(term, A.POp) and term.op == "add":
        return A.POp("add", tuple(_restrict_term(a, phi) for a in term.args))
    raise UnsupportedFormError(f"cannot restrict pre-term {term!r}")


def _prem_ex(s, pex: A.PEx, program: sy.Program):
    if isinstance(s, sy.Skip):
        return pex
    if isinstance(s, sy.Abort):
        return A.plit(0)
    if isinstance(s, sy.Seq):
        return _prem_term(s.first, _prem_term(s.second, pex, program), program)
    if isinstance(s, sy.Assign):
        return A.PEx(A.subst_prog_se(pex.body, s.var, A.embed_expr(s.expr)))
    if isinstance(s, sy.Sample):
        fresh = A.fresh_logvar(pex, s.dist)
        return A.PEx(A.SExpect(fresh, s.dist, A.subst_prog_se(pex.body, s.var, A.SLog(fresh))))
    if isinstance(s, sy.If):
        then_t = _prem_term(s.then, pex, program)
        else_t = _prem_term(s.orelse, pex, program)
        g = A.guard_assn(s.cond)
        return A.POp("add", (_restrict_term(then_t, g), _restrict_term(else_t, A.SNot(g))))
    if isinstance(s, sy.Call):
        return _prem_term(inline_calls(s, program), pex, program)
    raise NotLoopFreeError(f"statement is not loop-free: {s!r}")


def _prem_term(s, term, program):
    """prem on the sums-of-expectations grammar that Ex pre-terms live in."""
    if isinstance(term, A.PEx):
        return _prem_ex(s, term, program)
    if isinstance(term, A.PLit):
        return term
    if isinstance(term, A.POp) and term.op == "add":
        return A.POp("add", tuple(_prem_term(s, a, program) for a in term.args))
    raise UnsupportedFormError(f"unexpected pre-term {term!r}")


def prem(s, p, program: sy.Program):
    """Pre-term of a probabilistic expression: same value before s as p has
    after s.  Homomorphic on operators; structural on expectations."""
    if isinstance(p, (A.PLog, A.PLit)):
        return p
    if isinstance(p, A.POp):
        return A.POp(p.op, tuple(prem(s, a, program) for a in p.args))
    if isinstance(p, A.PEx):
        return _prem_ex(s, p, program)
    raise TypeError(f"not a probabilistic expression: {p!r}")


def wpre(s, eta, program: sy.Program):
    """Precondition of a loop-free statement for a split-free assertion."""
    if not is_loop_free(s, program):
        raise NotLoopFreeError("wpre is defined for loop-free statements only")
    return _wpre(s, eta, program)


def _wpre(s, eta, program):
    if isinstance(eta, (A.PTrue, A.PFalse)):
        return eta
    if isinstance(eta, A.PCmp):
        return A.PCmp(prem(s, eta.lhs, program), eta.op, prem(s, eta.rhs, program))
    if isinstance(eta, A.PNot):
        return A.PNot(_wpre(s, eta.body, program))
    if isinstance(eta, (A.PAnd, A.POr, A.PImp)):
        return type(eta)(_wpre(s, eta.lhs, program), _wpre(s, eta.rhs, program))
    if isinstance(eta, A.PQuant):
        return A.PQuant(eta.kind, eta.var, eta.sort, _wpre(s, eta.body, program))
    if isinstance(eta, A.PSplit):
        raise UnsupportedSplitError("the precondition calculus does not act on (+)")
    if isinstance(eta, (A.PIndep, A.PFollows, A.PCharac)):
        raise UnsupportedFormError(
            f"wpre is undefined on {type(eta).__name__}; expand to core syntax first"
        )
    raise TypeError(f"not a probabilistic assertion: {eta!r}")


@dataclass(frozen=True)
class PCDivergence:
    input: object
    rho: dict
    pre_verdict: object
    post_verdict: object


@dataclass(frozen=True)
class PCReport:
    checked: int
    divergences: tuple

    def ok(self) -> bool:
        return not self.divergences


def verify_pc(s, eta, inputs, program: sy.Program, rhos=({},)) -> PCReport:
    """Differential check of the calculus against execution: on every test
    input, evaluating wpre(s, eta) before s must agree with evaluating eta
    after s."""
    pre = wpre(s, eta, program)
    checked = 0
    divergences = []
    for mu in inputs:
        out = exec_dist(program, s, mu).dist
        for rho in rhos:
            a = A.holds(pre, rho, mu)
            b = A.holds(eta, rho, out)
            checked += 1
            if a is not b:
                divergences.append(PCDivergence(mu, dict(rho), a, b))
    return PCReport(checked, tuple(divergences))
