"""Recursive-descent parser for the ASCII formula grammar.

    formula  ::= imp ('<->' formula)?
    imp      ::= or ('->' imp)?
    or       ::= and ('|' and)*
    and      ::= unary ('&' unary)*
    unary    ::= '!' unary | QUANT var+ unary | '(' QUANT var ')' unary | primary
    primary  ::= '(' formula ')' | 'true' | 'false' | 'atom(' term ')'
               | 'card{' var ':' formula '}' '=' NAT | DP<i>(term) | HP<i>(term)
               | R(term, ...) | term ('=' | '!=' | 'in') term

QUANT is ``forall``, ``exists`` or ``Qt``.
"""
from __future__ import annotations

import re

from .formula import (
    DIALECTS,
    And,
    App,
    Card,
    Const,
    CountQ,
    Dyn,
    Eq,
    Exists,
    Forall,
    Iff,
    Implies,
    In,
    IsAtom,
    Not,
    Or,
    Rel,
    Truth,
    Var,
)
from .structure import Vocabulary


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        super().__init__(f"{message} at position {pos}" + (f" in {text!r}" if text else ""))
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(<->|->|!=|[()&|!{}:,=])|(\d+)|([A-Za-z_][A-Za-z0-9_]*))")
_QUANTS = {"forall": Forall, "exists": Exists, "Qt": CountQ}
_DYN = re.compile(r"([DH])P(\d+)")


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos, text)
        start = m.start(m.lastindex)
        kind = ("sym", "num", "id")[m.lastindex - 1]
        out.append((kind, m.group(m.lastindex), start))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, vocab: Vocabulary, dialect: str):
        if dialect not in DIALECTS:
            raise ValueError(f"unknown dialect {dialect!r}")
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.preds = vocab.predicate_arity
        self.funs = vocab.function_arity
        self.consts = set(vocab.constants)
        self.dialect = dialect

    # token helpers
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str, k: int = 0) -> bool:
        kind, v, _ = self.peek(k)
        return kind in ("sym", "id") and v == value

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, pos = self.take()
        if v != value or kind not in ("sym", "id"):
            raise self.error(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def error(self, msg: str, pos: int | None = None):
        return FormulaSyntaxError(msg, self.peek()[2] if pos is None else pos, self.text)

    def var(self) -> str:
        kind, v, pos = self.take()
        if kind != "id" or v in _QUANTS or v in ("in", "card", "atom", "true", "false"):
            raise self.error(f"expected a variable, found {v!r}", pos)
        if v in self.preds or v in self.funs or v in self.consts or _DYN.fullmatch(v):
            raise self.error(f"{v!r} is a vocabulary symbol, not a variable", pos)
        return v

    # grammar
    def parse(self):
        f = self.formula()
        kind, v, pos = self.peek()
        if kind != "eof":
            raise self.error(f"unexpected token {v!r}", pos)
        return f

    def formula(self):
        left = self.imp()
        if self.at("<->"):
            self.take()
            return Iff(left, self.formula())
        return left

    def imp(self):
        left = self.disj()
        if self.at("->"):
            self.take()
            return Implies(left, self.imp())
        return left

    def disj(self):
        f = self.conj()
        while self.at("|"):
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.at("&"):
            self.take()
            f = And(f, self.unary())
        return f

    def _quant(self, kw: str, pos: int, names: list[str], body):
        if kw == "Qt" and self.dialect != "card_T":
            raise self.error(f"counting quantifier not allowed in dialect {self.dialect}", pos)
        node = _QUANTS[kw]
        for name in reversed(names):
            body = node(name, body)
        return body

    def unary(self):
        kind, v, pos = self.peek()
        if self.at("!"):
            self.take()
            return Not(self.unary())
        if kind == "id" and v in _QUANTS:
            self.take()
            names = [self.var()]
            while self._another_bound_var():
                names.append(self.var())
            return self._quant(v, pos, names, self.unary())
        if self.at("(") and self.peek(1)[0] == "id" and self.peek(1)[1] in _QUANTS:
            # prefix form: (exists y)(...)
            j = 2
            while self.peek(j)[0] == "id":
                j += 1
            if self.at(")", j):
                self.take()
                kw = self.take()[1]
                names = [self.var() for _ in range(j - 2)]
                self.expect(")")
                return self._quant(kw, pos, names, self.unary())
        return self.primary()

    def _another_bound_var(self) -> bool:
        kind, v, _ = self.peek()
        if kind != "id" or v in _QUANTS or v in ("in", "card", "atom", "true", "false"):
            return False
        if v in self.preds or v in self.funs or v in self.consts or _DYN.fullmatch(v):
            return False
        nxt = self.peek(1)
        return (nxt[0] == "id" and nxt[1] != "in") or (nxt[0] == "sym" and nxt[1] in ("(", "!"))

    def primary(self):
        kind, v, pos = self.peek()
        if self.at("("):
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        if kind == "id" and v in ("true", "false"):
            self.take()
            return Truth(v == "true")
        if kind == "id" and v == "atom" and self.at("(", 1):
            self.take()
            self.expect("(")
            t = self.term()
            self.expect(")")
            return IsAtom(t)
        if kind == "id" and v == "card":
            if self.dialect == "fo":
                raise self.error("cardinality atom not allowed in dialect fo", pos)
            self.take()
            self.expect("{")
            x = self.var()
            self.expect(":")
            body = self.formula()
            self.expect("}")
            self.expect("=")
            k, n, npos = self.take()
            if k != "num":
                raise self.error("cardinality atom needs a literal natural", npos)
            return Card(x, body, int(n))
        if kind == "id":
            m = _DYN.fullmatch(v)
            if m:
                self.take()
                self.expect("(")
                t = self.term()
                self.expect(")")
                return Dyn(int(m.group(2)), t, m.group(1) == "H")
            if v in self.preds:
                self.take()
                args = self.args()
                if len(args) != self.preds[v]:
                    raise self.error(f"predicate {v} has arity {self.preds[v]}, got {len(args)}", pos)
                return Rel(v, tuple(args))
        left = self.term()
        kind, op, opos = self.peek()
        if op == "=":
            self.take()
            return Eq(left, self.term())
        if op == "!=":
            self.take()
            return Not(Eq(left, self.term()))
        if op == "in" and kind == "id":
            self.take()
            return In(left, self.term())
        raise self.error(f"expected '=', '!=' or 'in' after term, found {op or 'end of input'!r}", opos)

    def args(self):
        self.expect("(")
        out = [self.term()]
        while self.at(","):
            self.take()
            out.append(self.term())
        self.expect(")")
        return out

    def term(self):
        kind, v, pos = self.peek()
        if kind != "id":
            raise self.error(f"expected a term, found {v or 'end of input'!r}", pos)
        if v in self.funs:
            self.take()
            args = self.args()
            if len(args) != self.funs[v]:
                raise self.error(f"function {v} has arity {self.funs[v]}, got {len(args)}", pos)
            return App(v, tuple(args))
        if v in self.consts:
            self.take()
            return Const(v)
        if v in self.preds:
            raise self.error(f"predicate {v!r} used as a term", pos)
        return Var(self.var())


def parse_formula(text: str, vocab: Vocabulary, dialect: str = "fo"):
    return _Parser(text, vocab, dialect).parse()
