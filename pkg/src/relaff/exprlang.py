"""Parser and jet evaluator for the chart expression language.

Chart data (metric components, cubic-form components, scalar fields, conformal
factors) is written in a small arithmetic language and evaluated directly into
jets, so every expression automatically carries as many derivatives as the
caller asks for.

Grammar (EBNF):

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;              (* right associative *)
    atom    = NUMBER
            | IDENT
            | IDENT "(" expr { "," expr } ")"
            | "(" expr ")" ;
    NUMBER  = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
    IDENT   = letter { letter | digit | "_" } ;

Known functions: ln, exp, sqrt, sin, cos, tan, abs, pow(a, b).  Any other
identifier is a variable resolved against the evaluation environment.

Exponentiation "a ^ b" with b a literal integer (possibly negated) compiles to
repeated multiplication, so negative bases are fine; any other exponent
requires a positive base and evaluates as exp(b * ln a).  "abs" freezes the
sign of its argument at the base point and refuses a zero argument, keeping
evaluation smooth on each connected component of its domain.

All reported positions are byte offsets into the source string.  Evaluation
failures raise ExprDomainError carrying the offset and text of the offending
subexpression plus a per-point boolean mask saying which batch points broke.
"""

from __future__ import annotations

import numpy as np

from . import jets
from .jets import Jet, JetDomainError

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "ExprDomainError",
    "Expression",
    "parse",
]


class ExprError(ValueError):
    """Base class for expression-language failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ExprDomainError(ExprError):
    """A subexpression left its domain at one or more batch points."""

    def __init__(self, message, offset, fragment, mask):
        bad = int(np.count_nonzero(mask)) if mask is not None else 0
        super().__init__(
            f"{message} in '{fragment}' (at byte {offset}, {bad} point(s) affected)"
        )
        self.offset = offset
        self.fragment = fragment
        self.mask = mask


# ---------------------------------------------------------------------------
# lexer


_T_NUM = "num"
_T_IDENT = "ident"
_T_OP = "op"
_T_LP = "("
_T_RP = ")"
_T_COMMA = ","
_T_END = "end"


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self):
        return f"_Token({self.kind!r}, {self.text!r}, {self.pos})"


def _tokenize(src):
    tokens = []
    pos = 0  # byte offset; the language is ASCII so chars == bytes,
    # but we advance by encoded length anyway to keep offsets honest
    i = 0
    while i < len(src):
        ch = src[i]
        blen = len(ch.encode("utf-8"))
        if ch in " \t\r\n":
            i += 1
            pos += blen
            continue
        if ch.isdigit() or (ch == "." and i + 1 < len(src) and src[i + 1].isdigit()):
            start_i, start_pos = i, pos
            while i < len(src) and (src[i].isdigit() or src[i] == "."):
                i += 1
            if i < len(src) and src[i] in "eE":
                j = i + 1
                if j < len(src) and src[j] in "+-":
                    j += 1
                if j < len(src) and src[j].isdigit():
                    i = j
                    while i < len(src) and src[i].isdigit():
                        i += 1
            text = src[start_i:i]
            if text.count(".") > 1:
                raise ExprSyntaxError(f"malformed number '{text}'", start_pos)
            tokens.append(_Token(_T_NUM, text, start_pos))
            pos += len(text.encode("utf-8"))
            continue
        if ch.isalpha() or ch == "_":
            start_i, start_pos = i, pos
            while i < len(src) and (src[i].isalnum() or src[i] == "_"):
                i += 1
            text = src[start_i:i]
            tokens.append(_Token(_T_IDENT, text, start_pos))
            pos += len(text.encode("utf-8"))
            continue
        if ch in "+-*/^":
            tokens.append(_Token(_T_OP, ch, pos))
        elif ch == "(":
            tokens.append(_Token(_T_LP, ch, pos))
        elif ch == ")":
            tokens.append(_Token(_T_RP, ch, pos))
        elif ch == ",":
            tokens.append(_Token(_T_COMMA, ch, pos))
        else:
            raise ExprSyntaxError(f"unexpected character {ch!r}", pos)
        i += 1
        pos += blen
    tokens.append(_Token(_T_END, "", pos))
    return tokens


# ---------------------------------------------------------------------------
# AST


class _Node:
    """Base AST node.  start/end are byte offsets into the source."""

    __slots__ = ("start", "end")

    def __init__(self, start, end):
        self.start = start
        self.end = end


class _Num(_Node):
    __slots__ = ("value",)

    def __init__(self, value, start, end):
        super().__init__(start, end)
        self.value = value


class _Var(_Node):
    __slots__ = ("name",)

    def __init__(self, name, start, end):
        super().__init__(start, end)
        self.name = name


class _Neg(_Node):
    __slots__ = ("arg",)

    def __init__(self, arg, start, end):
        super().__init__(start, end)
        self.arg = arg


class _BinOp(_Node):
    __slots__ = ("op", "left", "right")

    def __init__(self, op, left, right, start, end):
        super().__init__(start, end)
        self.op = op
        self.left = left
        self.right = right


class _Call(_Node):
    __slots__ = ("fn", "args")

    def __init__(self, fn, args, start, end):
        super().__init__(start, end)
        self.fn = fn
        self.args = args


_FUNCTIONS = {
    "ln": 1,
    "exp": 1,
    "sqrt": 1,
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "abs": 1,
    "pow": 2,
}


class _Parser:
    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind, what):
        t = self.next()
        if t.kind != kind:
            raise ExprSyntaxError(f"expected {what}, found {t.text!r}" if t.text else f"expected {what}, found end of input", t.pos)
        return t

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t.kind != _T_END:
            raise ExprSyntaxError(f"unexpected trailing input {t.text!r}", t.pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            t = self.peek()
            if t.kind == _T_OP and t.text in "+-":
                self.next()
                rhs = self.term()
                node = _BinOp(t.text, node, rhs, node.start, rhs.end)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            t = self.peek()
            if t.kind == _T_OP and t.text in "*/":
                self.next()
                rhs = self.unary()
                node = _BinOp(t.text, node, rhs, node.start, rhs.end)
            else:
                return node

    def unary(self):
        t = self.peek()
        if t.kind == _T_OP and t.text == "-":
            self.next()
            arg = self.unary()
            return _Neg(arg, t.pos, arg.end)
        return self.power()

    def power(self):
        base = self.atom()
        t = self.peek()
        if t.kind == _T_OP and t.text == "^":
            self.next()
            expo = self.unary()  # right associative, binds tighter than unary minus on the left
            return _BinOp("^", base, expo, base.start, expo.end)
        return base

    def atom(self):
        t = self.next()
        if t.kind == _T_NUM:
            try:
                v = float(t.text)
            except ValueError:
                raise ExprSyntaxError(f"malformed number '{t.text}'", t.pos) from None
            return _Num(v, t.pos, t.pos + len(t.text.encode("utf-8")))
        if t.kind == _T_IDENT:
            if self.peek().kind == _T_LP:
                if t.text not in _FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function '{t.text}'", t.pos)
                self.next()
                args = [self.expr()]
                while self.peek().kind == _T_COMMA:
                    self.next()
                    args.append(self.expr())
                rp = self.expect(_T_RP, "')'")
                if len(args) != _FUNCTIONS[t.text]:
                    raise ExprSyntaxError(
                        f"function '{t.text}' takes {_FUNCTIONS[t.text]} argument(s), got {len(args)}",
                        t.pos,
                    )
                return _Call(t.text, args, t.pos, rp.pos + 1)
            return _Var(t.text, t.pos, t.pos + len(t.text.encode("utf-8")))
        if t.kind == _T_LP:
            node = self.expr()
            rp = self.expect(_T_RP, "')'")
            node.start = t.pos  # widen the span to include the parentheses
            node.end = rp.pos + 1
            return node
        if t.kind == _T_END:
            raise ExprSyntaxError("unexpected end of input", t.pos)
        raise ExprSyntaxError(f"unexpected token {t.text!r}", t.pos)


# ---------------------------------------------------------------------------
# evaluation


def _literal_int(node):
    """Return the integer value if node is an integer literal (possibly negated)."""
    neg = False
    while isinstance(node, _Neg):
        neg = not neg
        node = node.arg
    if isinstance(node, _Num) and float(node.value) == int(node.value):
        v = int(node.value)
        return -v if neg else v
    return None


class Expression:
    """A parsed expression, evaluable over jet environments."""

    def __init__(self, source, root):
        self.source = source
        self._root = root

    def variables(self):
        """Set of free variable names."""
        out = set()

        def walk(node):
            if isinstance(node, _Var):
                out.add(node.name)
            elif isinstance(node, _Neg):
                walk(node.arg)
            elif isinstance(node, _BinOp):
                walk(node.left)
                walk(node.right)
            elif isinstance(node, _Call):
                for a in node.args:
                    walk(a)

        walk(self._root)
        return out

    def __call__(self, env):
        """Evaluate to a Jet.  env maps variable names to Jets (same n, k, batch)."""
        proto = next(iter(env.values()))
        return self._eval(self._root, env, proto)

    def _fragment(self, node):
        # offsets are byte offsets; slice on the encoded form
        raw = self.source.encode("utf-8")
        return raw[node.start:node.end].decode("utf-8")

    def _domain(self, node, exc):
        raise ExprDomainError(str(exc.args[0] if exc.args else exc), node.start,
                              self._fragment(node), exc.mask) from None

    def _eval(self, node, env, proto):
        if isinstance(node, _Num):
            return Jet.constant(node.value, proto.n, proto.k, proto.batch)
        if isinstance(node, _Var):
            try:
                return env[node.name]
            except KeyError:
                raise ExprDomainError(
                    f"unknown variable '{node.name}'", node.start,
                    self._fragment(node), None) from None
        if isinstance(node, _Neg):
            return -self._eval(node.arg, env, proto)
        if isinstance(node, _BinOp):
            if node.op == "^":
                base = self._eval(node.left, env, proto)
                p = _literal_int(node.right)
                try:
                    if p is not None:
                        return jets.jpow(base, p)
                    expo = self._eval(node.right, env, proto)
                    return jets.jpow(base, expo)
                except JetDomainError as exc:
                    self._domain(node, exc)
            left = self._eval(node.left, env, proto)
            right = self._eval(node.right, env, proto)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            try:
                return left / right
            except JetDomainError as exc:
                self._domain(node, exc)
        if isinstance(node, _Call):
            args = [self._eval(a, env, proto) for a in node.args]
            try:
                if node.fn == "ln":
                    return jets.jlog(args[0])
                if node.fn == "exp":
                    return jets.jexp(args[0])
                if node.fn == "sqrt":
                    return jets.jsqrt(args[0])
                if node.fn == "sin":
                    return jets.jsin(args[0])
                if node.fn == "cos":
                    return jets.jcos(args[0])
                if node.fn == "tan":
                    return jets.jtan(args[0])
                if node.fn == "abs":
                    return jets.jabs(args[0])
                if node.fn == "pow":
                    p = _literal_int(node.args[1])
                    if p is not None:
                        return jets.jpow(args[0], p)
                    return jets.jpow(args[0], args[1])
            except JetDomainError as exc:
                self._domain(node, exc)
        raise AssertionError(f"unhandled node {node!r}")  # pragma: no cover


def parse(source):
    """Parse source text into an Expression.  Raises ExprSyntaxError."""
    return Expression(source, _Parser(source).parse())
