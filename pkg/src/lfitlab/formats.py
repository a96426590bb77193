"""Text formats: Boolean networks (``.bnet``), rule programs and transition tables.

``.bnet`` lines read ``target, factor`` where the factor uses ``&``, ``|``,
``!``, parentheses and the constants ``0``/``1``.  Each factor is expanded to
disjunctive normal form and every conjunct becomes one rule.

Program text has one statement per rule, ``head :- lit, ..., not lit.``, and
facts as ``head.``.  A ``% vars: a, b, c`` comment fixes the variable order;
otherwise variables are ordered by first appearance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from lfitlab.logic import (
    Body,
    HerbrandBase,
    LogicError,
    LogicProgram,
    Rule,
    TransitionSet,
    drop_subsumed,
)

DNF_CAP = 4096
_NAME = r"[A-Za-z_][A-Za-z0-9_]*"


class ParseError(LogicError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


class DnfTooLarge(ParseError):
    pass


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


# Boolean expressions ---------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Expr"


@dataclass(frozen=True)
class And:
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Expr", ...]


Expr = Var | Const | Not | And | Or

_EXPR_TOKENS = re.compile(rf"\s*(?:(?P<name>{_NAME})|(?P<const>[01])(?![A-Za-z0-9_])|(?P<op>[&|!()]))")


def _lex_expr(text: str, line: int, col0: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _EXPR_TOKENS.match(text, pos)
        if not m:
            bad = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + bad]!r}", line, col0 + pos + bad + 1)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), line, col0 + m.start(kind) + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, col0 + len(text.rstrip()) + 1))
    return toks


class _ExprParser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, what: str) -> ParseError:
        tok = self.peek()
        found = "end of expression" if tok.kind == "end" else repr(tok.text)
        return ParseError(f"expected {what}, found {found}", tok.line, tok.col)

    def parse(self) -> Expr:
        e = self.disjunction()
        if self.peek().kind != "end":
            raise self.fail("operator or end of expression")
        return e

    def disjunction(self) -> Expr:
        args = [self.conjunction()]
        while self.peek().text == "|":
            self.take()
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conjunction(self) -> Expr:
        args = [self.unary()]
        while self.peek().text == "&":
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return Not(self.unary())
        if tok.text == "(":
            self.take()
            e = self.disjunction()
            if self.peek().text != ")":
                raise self.fail("')'")
            self.take()
            return e
        if tok.kind == "name":
            self.take()
            return Var(tok.text)
        if tok.kind == "const":
            self.take()
            return Const(tok.text == "1")
        raise self.fail("variable, constant, '!' or '('")


def parse_expr(text: str, line: int = 1, col0: int = 0) -> Expr:
    return _ExprParser(_lex_expr(text, line, col0)).parse()


def evaluate_expr(expr: Expr, env: dict[str, bool]) -> bool:
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Not):
        return not evaluate_expr(expr.arg, env)
    if isinstance(expr, And):
        return all(evaluate_expr(a, env) for a in expr.args)
    return any(evaluate_expr(a, env) for a in expr.args)


def expr_variables(expr: Expr) -> Iterator[str]:
    if isinstance(expr, Var):
        yield expr.name
    elif isinstance(expr, Not):
        yield from expr_variables(expr.arg)
    elif isinstance(expr, (And, Or)):
        for a in expr.args:
            yield from expr_variables(a)


def to_dnf(expr: Expr, index: dict[str, int], negate: bool = False, cap: int = DNF_CAP) -> list[Body]:
    """Conjuncts of ``expr`` (or of its negation) with contradictions removed."""
    if isinstance(expr, Const):
        return [Body()] if expr.value != negate else []
    if isinstance(expr, Var):
        bit = 1 << index[expr.name]
        return [Body(0, bit) if negate else Body(bit, 0)]
    if isinstance(expr, Not):
        return to_dnf(expr.arg, index, not negate, cap)
    conjunctive = isinstance(expr, And) != negate
    parts = [to_dnf(a, index, negate, cap) for a in expr.args]
    if not conjunctive:
        out = [b for p in parts for b in p]
    else:
        out = [Body()]
        for p in parts:
            nxt = set()
            for a in out:
                for b in p:
                    pos, neg = a.pos | b.pos, a.neg | b.neg
                    if not pos & neg:
                        nxt.add(Body(pos, neg))
            out = sorted(nxt)
            if len(out) > cap:
                raise DnfTooLarge(f"DNF expansion exceeds {cap} conjuncts")
    out = sorted(set(out))
    if len(out) > cap:
        raise DnfTooLarge(f"DNF expansion exceeds {cap} conjuncts")
    return out


# .bnet -----------------------------------------------------------------------

def read_bnet(text: str) -> tuple[HerbrandBase, dict[str, Expr]]:
    """Parse ``.bnet`` text into its base and one factor expression per target."""
    entries: list[tuple[str, str, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "," not in line:
            raise ParseError("expected 'target, factor'", lineno, len(line.rstrip()) + 1)
        target, factor = line.split(",", 1)
        name = target.strip()
        if (name, factor.strip()) == ("targets", "factors"):
            continue
        if not re.fullmatch(_NAME, name):
            raise ParseError(f"invalid target name {name!r}", lineno, len(target) - len(target.lstrip()) + 1)
        entries.append((name, factor, lineno, len(target) + 1))
    if not entries:
        raise ParseError("empty network: no 'target, factor' lines")
    names = [e[0] for e in entries]
    dup = {x for x in names if names.count(x) > 1}
    if dup:
        raise ParseError(f"target(s) defined twice: {sorted(dup)}")
    base = HerbrandBase(tuple(names))
    factors = {}
    for name, factor, lineno, col0 in entries:
        expr = parse_expr(factor, lineno, col0)
        for var in expr_variables(expr):
            if var not in base.names:
                raise ParseError(f"unknown variable {var!r} in factor of {name!r}", lineno)
        factors[name] = expr
    return base, factors


def parse_bnet(text: str, cap: int = DNF_CAP) -> LogicProgram:
    base, factors = read_bnet(text)
    index = {x: i for i, x in enumerate(base.names)}
    rules = set()
    for name, expr in factors.items():
        head = index[name]
        rules.update(Rule(head, b) for b in to_dnf(expr, index, cap=cap))
    return LogicProgram(base, drop_subsumed(rules))


def _body_expr(body: Body, base: HerbrandBase, conj: str, neg: str) -> str:
    if not body.mask:
        return "1"
    return conj.join(("" if p else neg) + base.names[i] for i, p in body.literals())


def emit_bnet(program: LogicProgram) -> str:
    lines = ["targets, factors"]
    for v, name in enumerate(program.base.names):
        bodies = [r.body for r in program.sorted_rules() if r.head == v]
        factor = " | ".join(_body_expr(b, program.base, " & ", "!") for b in bodies) or "0"
        lines.append(f"{name}, {factor}")
    return "\n".join(lines) + "\n"


# program text ----------------------------------------------------------------

_VARS = re.compile(r"%\s*vars\s*:(.*)")


def _lex_program(text: str) -> tuple[list[_Tok], list[str] | None]:
    toks: list[_Tok] = []
    declared = None
    line, line_start, pos = 1, 0, 0
    ident = re.compile(_NAME)
    while pos < len(text):
        ch = text[pos]
        col = pos - line_start + 1
        if ch == "\n":
            line, line_start = line + 1, pos + 1
            pos += 1
        elif ch in " \t\r":
            pos += 1
        elif ch == "%":
            end = text.find("\n", pos)
            end = len(text) if end < 0 else end
            m = _VARS.fullmatch(text[pos:end].rstrip())
            if m:
                declared = [x for x in re.split(r"[\s,]+", m.group(1).strip()) if x]
            pos = end
        elif text.startswith(":-", pos):
            toks.append(_Tok("neck", ":-", line, col))
            pos += 2
        elif ch in ".,":
            toks.append(_Tok(ch, ch, line, col))
            pos += 1
        else:
            m = ident.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {ch!r}", line, col)
            word = m.group()
            toks.append(_Tok("not" if word == "not" else "name", word, line, col))
            pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks, declared


def parse_program(text: str, base: HerbrandBase | None = None) -> LogicProgram:
    toks, declared = _lex_program(text)
    i = 0

    def fail(what: str) -> ParseError:
        t = toks[i]
        found = "end of input" if t.kind == "end" else repr(t.text)
        return ParseError(f"expected {what}, found {found}", t.line, t.col)

    raw: list[tuple[str, list[tuple[str, bool]], _Tok]] = []
    while toks[i].kind != "end":
        if toks[i].kind != "name":
            raise fail("rule head")
        head = toks[i]
        i += 1
        lits: list[tuple[str, bool]] = []
        if toks[i].kind == "neck":
            i += 1
            while True:
                positive = True
                if toks[i].kind == "not":
                    positive = False
                    i += 1
                if toks[i].kind != "name":
                    raise fail("body literal")
                lits.append((toks[i].text, positive))
                i += 1
                if toks[i].kind == ",":
                    i += 1
                    continue
                break
        if toks[i].kind != ".":
            raise fail("'.'" if lits else "':-' or '.'")
        i += 1
        raw.append((head.text, lits, head))

    if base is None:
        if declared is not None:
            base = HerbrandBase(tuple(declared))
        else:
            order: dict[str, None] = {}
            for h, lits, _ in raw:
                order.setdefault(h)
                for name, _p in lits:
                    order.setdefault(name)
            base = HerbrandBase(tuple(order))
    index = {x: k for k, x in enumerate(base.names)}
    rules = set()
    for h, lits, tok in raw:
        try:
            pos = neg = 0
            for name, positive in lits:
                bit = 1 << index[name]
                if positive:
                    pos |= bit
                else:
                    neg |= bit
            rules.add(Rule(index[h], Body(pos, neg)))
        except KeyError as e:
            raise ParseError(f"unknown variable {e.args[0]!r}", tok.line, tok.col) from None
        except LogicError as e:
            raise ParseError(str(e), tok.line, tok.col) from None
    return LogicProgram(base, frozenset(rules))


def emit_program(program: LogicProgram, header: bool = False) -> str:
    base = program.base
    lines = [f"% vars: {', '.join(base.names)}"] if header else []
    for r in program.sorted_rules():
        head = base.names[r.head]
        if not r.body.mask:
            lines.append(f"{head}.")
        else:
            body = ", ".join(("" if p else "not ") + base.names[i] for i, p in r.body.literals())
            lines.append(f"{head} :- {body}.")
    return "".join(line + "\n" for line in lines)


# transition tables -------------------------------------------------------------

def _bits(state: int, n: int) -> str:
    return "".join("1" if state >> i & 1 else "0" for i in range(n))


def emit_transitions(transitions: TransitionSet) -> str:
    """One ``source successor`` pair per line; character ``i`` is variable ``i``."""
    n = transitions.n
    lines = [f"% vars: {', '.join(transitions.base.names)}"]
    lines += [f"{_bits(s, n)} {_bits(transitions[s], n)}" for s in sorted(transitions)]
    return "\n".join(lines) + "\n"


def parse_transitions(text: str) -> TransitionSet:
    base = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        m = _VARS.fullmatch(line)
        if m:
            base = HerbrandBase(tuple(x for x in re.split(r"[\s,]+", m.group(1).strip()) if x))
            continue
        if line.startswith("%"):
            continue
        if base is None:
            raise ParseError("missing '% vars:' header before transitions", lineno, 1)
        parts = line.split()
        if len(parts) != 2 or any(len(p) != base.n or set(p) - {"0", "1"} for p in parts):
            raise ParseError(f"expected two {base.n}-character bit strings", lineno, 1)
        src, dst = (sum(1 << i for i, c in enumerate(p) if c == "1") for p in parts)
        pairs.append((src, dst))
    if base is None:
        raise ParseError("empty transition table")
    try:
        return TransitionSet(base, pairs)
    except LogicError as e:
        raise ParseError(str(e)) from None
