"""Parsers for the proof, law, union-bound, and adversary-binding files.

A .spec file declares logical variables and named judgments with indented
proof-rule trees; .il files carry law-logic judgments with per-loop
invariants and variant certificates; .ahl files mirror .spec with failure
budgets; .adv files supply named concrete adversary bodies with optional
restriction flags.  Indented tree lines give the rule name; `@key value`
lines directly beneath supply that rule's parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import ahl as ahl_mod
from . import assertions as A
from . import hoare
from . import il as il_mod
from . import syntax as sy
from .assert_syntax import AssertionParser
from .interp import AdvBinding
from .parser import ProgramParser, PwSyntaxError, TokenStream, tokenize


class SpecFormatError(Exception):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class SpecJudgment:
    name: str
    judgment: hoare.Judgment
    script: object = None


@dataclass
class SpecFile:
    logvars: tuple
    judgments: list


@dataclass
class ILFileJudgment:
    name: str
    judgment: il_mod.ILJudgment
    script: il_mod.ILScript


@dataclass
class AHLFileJudgment:
    name: str
    judgment: ahl_mod.AHLJudgment
    script: object = None


# ---------------------------------------------------------------------------
# Line/indentation handling


@dataclass
class Line:
    indent: int
    text: str
    number: int


def _lines(text: str) -> list:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("//", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip())
        out.append(Line(indent, stripped.strip(), i))
    return out


@dataclass
class Node:
    head: str
    text: str
    args: list  # (key, value-text, line) triples
    children: list
    line: int


def _parse_tree(lines, i, indent) -> tuple:
    """Children of a block starting at position i with parent indent."""
    nodes = []
    while i < len(lines) and lines[i].indent > indent:
        ln = lines[i]
        if ln.text.startswith("@"):
            raise SpecFormatError(f"parameter line {ln.text!r} without a rule", ln.number)
        head = ln.text.split()[0]
        node = Node(head, ln.text, [], [], ln.number)
        i += 1
        while i < len(lines) and lines[i].indent > ln.indent and lines[i].text.startswith("@"):
            key, _, value = lines[i].text[1:].partition(" ")
            node.args.append((key, value.strip(), lines[i].number))
            i += 1
        node.children, i = _parse_tree(lines, i, ln.indent)
        nodes.append(node)
    return nodes, i


# ---------------------------------------------------------------------------
# Shared value parsers


def _passn(text, program, line):
    from .assert_syntax import parse_passn

    try:
        return parse_passn(text, program)
    except PwSyntaxError as e:
        raise SpecFormatError(f"bad assertion {text!r}: {e}", line) from None


def _sassn(text, program, line):
    from .assert_syntax import parse_sassn

    try:
        return parse_sassn(text, program)
    except PwSyntaxError as e:
        raise SpecFormatError(f"bad state assertion {text!r}: {e}", line) from None


def _sexpr(text, program, line):
    from .assert_syntax import parse_sexpr

    try:
        return parse_sexpr(text, program)
    except PwSyntaxError as e:
        raise SpecFormatError(f"bad state expression {text!r}: {e}", line) from None


def _sort(text, line):
    try:
        pp = ProgramParser(TokenStream(tokenize(text)))
        out = pp.parse_sort()
        if not pp.ts.at_kind("eof"):
            pp.ts.error("trailing input")
        return out
    except PwSyntaxError as e:
        raise SpecFormatError(f"bad sort {text!r}: {e}", line) from None


def _rat(text, line) -> Fraction:
    try:
        from .values import parse_rat

        return parse_rat(text)
    except Exception:
        raise SpecFormatError(f"bad rational {text!r}", line) from None


def _expr_list(text, program, line) -> tuple:
    pp = ProgramParser(TokenStream(tokenize(text)))
    pp.proc_names = {p.name for p in program.procs}
    pp.adv_names = {a.name for a in program.advs}
    out = []
    try:
        out.append(pp.parse_expr())
        while pp.ts.accept(","):
            out.append(pp.parse_expr())
        if not pp.ts.at_kind("eof"):
            pp.ts.error("trailing input")
    except PwSyntaxError as e:
        raise SpecFormatError(f"bad expression list {text!r}: {e}", line) from None
    return tuple(out)


def _args_dict(node: Node) -> dict:
    d = {}
    for key, value, line in node.args:
        d.setdefault(key, []).append((value, line))
    return d


def _one(args, key, node, required=False):
    got = args.get(key)
    if not got:
        if required:
            raise SpecFormatError(f"rule {node.head!r} needs @{key}", node.line)
        return None, node.line
    if len(got) > 1:
        raise SpecFormatError(f"rule {node.head!r} has repeated @{key}", node.line)
    return got[0]


# ---------------------------------------------------------------------------
# .spec proof trees


def _build_script(node: Node, program) -> object:
    args = _args_dict(node)
    kids = [_build_script(c, program) for c in node.children]

    def kid(i):
        return kids[i] if i < len(kids) else None

    def need_children(n):
        if len(kids) not in (0, n):
            raise SpecFormatError(
                f"rule {node.head!r} takes {n} child proofs or none", node.line
            )

    h = node.head
    if h == "skip":
        return hoare.RuleSkip()
    if h == "abort":
        return hoare.RuleAbort()
    if h == "assgn":
        return hoare.RuleAssgn()
    if h == "sample":
        return hoare.RuleSample()
    if h == "pc":
        return hoare.RulePC()
    if h == "conseq":
        pre, ln = _one(args, "pre", node, required=True)
        post, ln2 = _one(args, "post", node, required=True)
        need_children(1)
        return hoare.RuleConseq(_passn(pre, program, ln), _passn(post, program, ln2), kid(0))
    if h == "exists":
        var, _ = _one(args, "var", node, required=True)
        sort, ln = _one(args, "sort", node, required=True)
        need_children(1)
        return hoare.RuleExists(var, _sort(sort, ln), kid(0))
    if h == "seq":
        mid, ln = _one(args, "mid", node, required=True)
        need_children(2)
        return hoare.RuleSeq(_passn(mid, program, ln), kid(0), kid(1))
    if h == "seqs":
        mids = [_passn(v, program, ln) for v, ln in args.get("mid", [])]
        if len(kids) != len(mids) + 1:
            raise SpecFormatError(
                f"seqs needs one more child proof than @mid lines "
                f"(got {len(kids)} children, {len(mids)} mids)",
                node.line,
            )
        out = kids[-1]
        for mid, child in zip(reversed(mids), reversed(kids[:-1])):
            out = hoare.RuleSeq(mid, child, out)
        return out
    if h == "cond":
        need_children(2)
        return hoare.RuleCond(kid(0), kid(1))
    if h == "split":
        need_children(2)
        return hoare.RuleSplit(kid(0), kid(1))
    if h == "frame":
        ev, _ = _one(args, "lossless", node)
        return hoare.RuleFrame(lossless=ev or "tested")
    if h == "call":
        need_children(1)
        return hoare.RuleCall(kid(0))
    if h in ("while_ct", "while_ast", "while_d", "while_general"):
        fam, ln = _one(args, "family", node, required=True)
        index, _ = _one(args, "index", node)
        variant = None
        vtext, vln = _one(args, "variant", node)
        if vtext is not None:
            ktext, _ = _one(args, "k", node)
            etext, eln = _one(args, "eps", node)
            variant = hoare.VariantCert(
                _sexpr(vtext, program, vln),
                int(ktext) if ktext else None,
                _rat(etext, eln) if etext else None,
            )
        btext, _ = _one(args, "bound", node)
        aux, aln = _one(args, "aux", node)
        return hoare.RuleWhile(
            kind=h.split("_", 1)[1],
            family=_passn(fam, program, ln),
            index_var=index,
            variant=variant,
            bound=int(btext) if btext else None,
            aux_family=_passn(aux, program, aln) if aux else None,
        )
    if h == "adv":
        fam, ln = _one(args, "family", node, required=True)
        index, _ = _one(args, "index", node)
        argtext, aln = _one(args, "args", node)
        btext, _ = _one(args, "bound", node)
        return hoare.RuleAdv(
            family=_passn(fam, program, ln),
            index_var=index,
            args=_expr_list(argtext, program, aln) if argtext else (),
            bound=int(btext) if btext else None,
        )
    raise SpecFormatError(f"unknown proof rule {h!r}", node.line)


def parse_spec(text: str, program: sy.Program) -> SpecFile:
    lines = _lines(text)
    logvars = []
    judgments = []
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.text.startswith("logvar "):
            rest = ln.text[len("logvar ") :]
            name, _, sort_text = rest.partition(":")
            logvars.append((name.strip(), _sort(sort_text.strip(), ln.number)))
            i += 1
            continue
        if ln.text.startswith("judgment "):
            name = ln.text[len("judgment ") :].rstrip(":").strip()
            block, i = _parse_tree(lines, i + 1, ln.indent)
            script = None
            pre_node = [n for n in block if n.head == "pre"]
            post_node = [n for n in block if n.head == "post"]
            proof_node = [n for n in block if n.head.startswith("proof")]
            if not pre_node or not post_node:
                raise SpecFormatError(f"judgment {name!r} needs pre and post", ln.number)
            pre = _passn(pre_node[0].text.partition("=")[2].strip(), program, pre_node[0].line)
            post = _passn(post_node[0].text.partition("=")[2].strip(), program, post_node[0].line)
            if proof_node and proof_node[0].children:
                if len(proof_node[0].children) != 1:
                    raise SpecFormatError("proof blocks hold a single rule tree", ln.number)
                script = _build_script(proof_node[0].children[0], program)
            judgments.append(
                SpecJudgment(name, hoare.Judgment(pre, program.main, post), script)
            )
            continue
        raise SpecFormatError(f"unexpected line {ln.text!r}", ln.number)
    return SpecFile(tuple(logvars), judgments)


# ---------------------------------------------------------------------------
# .il files


def _ilassn(text, program, line) -> il_mod.ILAssn:
    ap = AssertionParser(TokenStream(tokenize(text)), program)
    pp = ap.pp
    ts = ap.ts
    atoms = []
    bottom = False

    def atom():
        nonlocal bottom
        if ts.accept("top"):
            return None
        if ts.accept("bot"):
            bottom = True
            return None
        t = ts.peek()
        if t.kind == "id" and t.text == "det" and ts.peek(1).text == "(":
            ts.next(), ts.expect("(")
            e = pp.parse_expr()
            ts.expect(")")
            return il_mod.Det(e)
        if t.kind == "id" and t.text == "indep":
            ts.next(), ts.expect("{")
            exprs = [pp.parse_expr()]
            while ts.accept(","):
                exprs.append(pp.parse_expr())
            ts.expect("}")
            return il_mod.Indep(tuple(exprs))
        e = pp.parse_expr()
        ts.expect("~")
        d = pp.parse_dexpr()
        if isinstance(d, sy.BinomialD):
            return il_mod.FollowsBin(e, d.n, d.p)
        if isinstance(d, sy.BernoulliD) and isinstance(d.p, sy.Lit):
            return il_mod.FollowsBin(e, sy.Lit(1), Fraction(d.p.value))
        raise SpecFormatError("laws in this logic are binomial (or Bernoulli)", line)

    try:
        got = atom()
        if got is not None:
            atoms.append(got)
        while ts.accept("/\\"):
            got = atom()
            if got is not None:
                atoms.append(got)
        if not ts.at_kind("eof"):
            ts.error("trailing input")
    except PwSyntaxError as e:
        raise SpecFormatError(f"bad law assertion {text!r}: {e}", line) from None
    out = il_mod.ILAssn.of(*atoms)
    return il_mod.ILAssn(out.atoms, bottom)


def parse_il(text: str, program: sy.Program) -> list:
    lines = _lines(text)
    invariants: dict = {}
    variants: dict = {}
    judgments = []
    i = 0
    while i < len(lines):
        ln = lines[i]
        if ln.text.startswith("invariant "):
            rest = ln.text[len("invariant ") :]
            label, _, val = rest.partition("=")
            invariants[label.strip()] = _ilassn(val.strip(), program, ln.number)
            i += 1
            continue
        if ln.text.startswith("variant "):
            rest = ln.text[len("variant ") :]
            label, _, val = rest.partition("=")
            variants[label.strip()] = hoare.VariantCert(_sexpr(val.strip(), program, ln.number))
            i += 1
            continue
        if ln.text.startswith("judgment "):
            name = ln.text[len("judgment ") :].rstrip(":").strip()
            block, i = _parse_tree(lines, i + 1, ln.indent)
            pre_node = [n for n in block if n.head.startswith("pre")]
            post_node = [n for n in block if n.head.startswith("post")]
            if not pre_node or not post_node:
                raise SpecFormatError(f"judgment {name!r} needs pre and post", ln.number)
            pre = _ilassn(pre_node[0].text.partition("=")[2].strip(), program, pre_node[0].line)
            post = _ilassn(post_node[0].text.partition("=")[2].strip(), program, post_node[0].line)
            judgments.append(
                ILFileJudgment(
                    name,
                    il_mod.ILJudgment(pre, program.main, post),
                    il_mod.ILScript(dict(invariants), dict(variants)),
                )
            )
            continue
        raise SpecFormatError(f"unexpected line {ln.text!r}", ln.number)
    return judgments


# ---------------------------------------------------------------------------
# .ahl files


def _build_ahl_script(node: Node, program) -> object:
    args = _args_dict(node)
    kids = [_build_ahl_script(c, program) for c in node.children]

    def kid(i):
        return kids[i] if i < len(kids) else None

    h = node.head
    if h == "ahl_skip":
        return ahl_mod.AhlSkip()
    if h == "ahl_abort":
        return ahl_mod.AhlAbort()
    if h == "ahl_assgn":
        return ahl_mod.AhlAssgn()
    if h == "ahl_sample":
        return ahl_mod.AhlSample()
    if h == "ahl_seq":
        b1, l1 = _one(args, "beta1", node, required=True)
        b2, l2 = _one(args, "beta2", node, required=True)
        mid, lm = _one(args, "mid", node, required=True)
        return ahl_mod.AhlSeq(_rat(b1, l1), _rat(b2, l2), _sassn(mid, program, lm), kid(0), kid(1))
    if h == "ahl_seqs":
        betas = [_rat(v, ln) for v, ln in args.get("beta", [])]
        mids = [_sassn(v, program, ln) for v, ln in args.get("mid", [])]
        if not (len(betas) == len(mids) + 1 == len(kids)):
            raise SpecFormatError(
                "ahl_seqs needs one @beta per child and one fewer @mid", node.line
            )
        out = kids[-1]
        tail_beta = betas[-1]
        for b, mid, child in zip(reversed(betas[:-1]), reversed(mids), reversed(kids[:-1])):
            out = ahl_mod.AhlSeq(b, tail_beta, mid, child, out)
            tail_beta = b + tail_beta
        return out
    if h == "ahl_while":
        k, _ = _one(args, "k", node, required=True)
        bb, lb = _one(args, "beta", node, required=True)
        vtext, vln = _one(args, "variant", node, required=True)
        return ahl_mod.AhlWhile(
            int(k), _rat(bb, lb), hoare.VariantCert(_sexpr(vtext, program, vln)), kid(0)
        )
    if h == "ahl_conseq":
        b, lb = _one(args, "beta", node, required=True)
        pre, lp = _one(args, "pre", node, required=True)
        post, lq = _one(args, "post", node, required=True)
        return ahl_mod.AhlConseq(
            _rat(b, lb), _sassn(pre, program, lp), _sassn(post, program, lq), kid(0)
        )
    raise SpecFormatError(f"unknown union-bound rule {h!r}", node.line)


def parse_ahl(text: str, program: sy.Program) -> list:
    lines = _lines(text)
    judgments = []
    i = 0
    while i < len(lines):
        ln = lines[i]
        if not ln.text.startswith("judgment "):
            raise SpecFormatError(f"unexpected line {ln.text!r}", ln.number)
        name = ln.text[len("judgment ") :].rstrip(":").strip()
        block, i = _parse_tree(lines, i + 1, ln.indent)
        fields = {n.text.split("=")[0].strip(): n for n in block if "=" in n.text}
        if not {"beta", "pre", "post"} <= set(fields):
            raise SpecFormatError(f"judgment {name!r} needs beta, pre, post", ln.number)
        beta = _rat(fields["beta"].text.partition("=")[2].strip(), fields["beta"].line)
        pre = _sassn(fields["pre"].text.partition("=")[2].strip(), program, fields["pre"].line)
        post = _sassn(fields["post"].text.partition("=")[2].strip(), program, fields["post"].line)
        proof_node = [n for n in block if n.head.startswith("proof")]
        script = None
        if proof_node and proof_node[0].children:
            script = _build_ahl_script(proof_node[0].children[0], program)
        judgments.append(
            AHLFileJudgment(name, ahl_mod.AHLJudgment(beta, pre, program.main, post), script)
        )
    return judgments


# ---------------------------------------------------------------------------
# .adv binding files


def parse_bindings(text: str, program: sy.Program) -> dict:
    """Named adversary bodies: `binding NAME for ADV [lossless] [calls N] {...}`.
    Returns advname -> list of validated AdvBinding."""
    from .interp import validate_binding
    from .parser import _relabel_stmt

    ts = TokenStream(tokenize(text))
    pp = ProgramParser(ts)
    pp.proc_names = {p.name for p in program.procs}
    pp.adv_names = {a.name for a in program.advs}
    out: dict = {}
    fresh = [0]
    while not ts.at_kind("eof"):
        t = ts.peek()
        if not ts.accept("binding"):
            raise SpecFormatError(f"expected 'binding', found {t.text!r}", t.line)
        name = ts.expect_id().text
        ts.expect("for")
        adv = ts.expect_id().text
        lossless = False
        call_bound = None
        while True:
            if ts.accept("lossless"):
                lossless = True
            elif ts.accept("calls"):
                call_bound = ts.expect_int()
            else:
                break
        ts.expect("{")
        stmts = []
        while not ts.at("}"):
            stmts.append(pp.parse_stmt())
            ts.accept(";")
        ts.expect("}")
        body = _relabel_stmt(sy.seq_of(stmts), fresh, prefix=f"b_{name}_")
        binding = AdvBinding(body, lossless=lossless, call_bound=call_bound, name=name)
        validate_binding(program, adv, binding)
        out.setdefault(adv, []).append(binding)
    return out
