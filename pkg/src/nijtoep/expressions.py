"""A small DSL for scalar functions of named variables.

Grammar (EBNF)::

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = "-" , unary | power ;
    power    = atom , { "^" , integer } ;
    atom     = number | "pi" | name | call | "(" , expr , ")" ;
    call     = function , "(" , expr , ")" ;
    function = "exp" | "log" | "sin" | "cos" | "sqrt" ;
    name     = ( letter | "_" ) , { letter | digit | "_" } ;
    integer  = digit , { digit } ;
    number   = ( digit , { digit } , [ "." , { digit } ] | "." , digit , { digit } ) ,
               [ ("e" | "E") , [ "+" | "-" ] , digit , { digit } ] ;

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``.  Exponents
are non-negative integer literals, so ``x^2^3`` is ``(x^2)^3``.

Parsed trees evaluate over any ring that supports ``+ - * /`` and the
elementary functions of :mod:`nijtoep.series`: floats, numpy arrays,
truncated series, and the AST nodes themselves (which builds an expression).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import series as _ring
from .errors import ExpressionSyntaxError, UnknownFunction, UnknownVariable

__all__ = [
    "Node",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Expression",
    "parse",
    "evaluate",
    "FUNCTIONS",
]

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")


class Node:
    """Base class of expression trees.

    Nodes double as a symbolic ring: arithmetic on nodes builds new nodes, with
    folding of numeric constants and of trivial ``0`` / ``1`` operands.
    """

    __array_ufunc__ = None

    def __add__(self, other):
        return _add(self, _lift(other))

    def __radd__(self, other):
        return _add(_lift(other), self)

    def __sub__(self, other):
        return _sub(self, _lift(other))

    def __rsub__(self, other):
        return _sub(_lift(other), self)

    def __mul__(self, other):
        return _mul(self, _lift(other))

    def __rmul__(self, other):
        return _mul(_lift(other), self)

    def __truediv__(self, other):
        return _div(self, _lift(other))

    def __rtruediv__(self, other):
        return _div(_lift(other), self)

    def __neg__(self):
        if isinstance(self, Num):
            return Num(-self.value)
        if isinstance(self, Neg):
            return self.operand
        return Neg(self)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        if k == 0:
            return Num(1.0)
        if k == 1:
            return self
        if isinstance(self, Num):
            return Num(self.value ** k)
        return Pow(self, k)

    def _elementary(self, name):
        if isinstance(self, Num):
            return Num(float(_ring._numeric_elementary(name, self.value)))
        return Call(name, self)


@dataclass(frozen=True, eq=True)
class Num(Node):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Node):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True, eq=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True, eq=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True, eq=True)
class Call(Node):
    func: str
    arg: Node


def as_node(x):
    """Wrap a number as a constant node; nodes pass through."""
    if isinstance(x, Node):
        return x
    return Num(float(x))


_lift = as_node


def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def _add(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return -b
    return BinOp("-", a, b)


def _mul(a, b):
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_num(b) and _is_num(a) and b.value != 0.0:
        return Num(a.value / b.value)
    if _is_num(b, 1.0):
        return a
    if _is_num(a, 0.0) and not _is_num(b, 0.0):
        return Num(0.0)
    return BinOp("/", a, b)


# tokenizer / parser ------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", text, _byte_offset(text, bad))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.variables = tuple(variables)
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExpressionSyntaxError(message, self.text, _byte_offset(self.text, tok[2]))

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] not in ("op",):
            raise self.error(f"expected {value!r}" + (" but reached end" if tok[0] == "end" else f", got {tok[1]!r}"), tok)
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "number" or not tok[1].isdigit():
                raise self.error("exponent must be a non-negative integer literal", tok)
            node = Pow(node, int(tok[1]))
        return node

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "number":
            return Num(float(value))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if value not in FUNCTIONS:
                    raise UnknownFunction(f"unknown function {value!r} in {self.text!r}")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in self.variables:
                return Var(value)
            if value == "pi":
                return Num(math.pi)
            if value in FUNCTIONS:
                raise self.error(f"function {value!r} needs an argument", tok)
            raise UnknownVariable(
                f"unknown variable {value!r} in {self.text!r}; declared: {', '.join(self.variables) or 'none'}"
            )
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise self.error("unexpected end of expression", tok)
        raise self.error(f"unexpected {value!r}", tok)


# printing --------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(v):
    if v == math.pi:
        return "pi"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(node, parent=0):
    """Render a tree back to DSL text (reparses to an equal tree)."""
    if isinstance(node, Num):
        s = _fmt_num(node.value)
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Pow):
        return f"{to_text(node.base, 4)}^{node.exponent}"
    if isinstance(node, Neg):
        s = "-" + to_text(node.operand, 3)
        return f"({s})" if parent > 1 else s
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        # right operand of - and / needs parentheses at equal precedence
        s = f"{to_text(node.left, prec)} {node.op} {to_text(node.right, prec + 1)}"
        return f"({s})" if parent > prec else s
    raise TypeError(f"not an expression node: {node!r}")


# evaluation ------------------------------------------------------------------


def _eval(node, binding):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return binding[node.name]
    if isinstance(node, BinOp):
        a = _eval(node.left, binding)
        b = _eval(node.right, binding)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return _ring.divide(a, b)
    if isinstance(node, Neg):
        return -_eval(node.operand, binding)
    if isinstance(node, Pow):
        return _ring.powi(_eval(node.base, binding), node.exponent)
    if isinstance(node, Call):
        return getattr(_ring, node.func)(_eval(node.arg, binding))
    raise TypeError(f"not an expression node: {node!r}")


def _free_variables(node, acc):
    if isinstance(node, Var):
        acc.add(node.name)
    elif isinstance(node, (BinOp,)):
        _free_variables(node.left, acc)
        _free_variables(node.right, acc)
    elif isinstance(node, Neg):
        _free_variables(node.operand, acc)
    elif isinstance(node, Pow):
        _free_variables(node.base, acc)
    elif isinstance(node, Call):
        _free_variables(node.arg, acc)
    return acc


def _rename(node, mapping):
    if isinstance(node, Var):
        return Var(mapping.get(node.name, node.name))
    if isinstance(node, BinOp):
        return BinOp(node.op, _rename(node.left, mapping), _rename(node.right, mapping))
    if isinstance(node, Neg):
        return Neg(_rename(node.operand, mapping))
    if isinstance(node, Pow):
        return Pow(_rename(node.base, mapping), node.exponent)
    if isinstance(node, Call):
        return Call(node.func, _rename(node.arg, mapping))
    return node


class Expression:
    """A parsed scalar function together with its ordered variable names."""

    __slots__ = ("ast", "variables", "source")

    def __init__(self, ast, variables, source=None):
        variables = tuple(variables)
        unknown = _free_variables(ast, set()) - set(variables)
        if unknown:
            raise UnknownVariable(f"variables {sorted(unknown)} are not declared in {variables}")
        self.ast = ast
        self.variables = variables
        self.source = source

    @property
    def arity(self):
        return len(self.variables)

    def __repr__(self):
        return f"Expression({str(self)!r}, variables={list(self.variables)})"

    def __str__(self):
        return to_text(self.ast)

    def __eq__(self, other):
        return isinstance(other, Expression) and self.ast == other.ast and self.variables == other.variables

    def __hash__(self):
        return hash((self.ast, self.variables))

    def __call__(self, *args):
        if len(args) != self.arity:
            raise TypeError(f"expected {self.arity} arguments, got {len(args)}")
        return _eval(self.ast, dict(zip(self.variables, args)))

    def eval(self, binding):
        missing = [v for v in self.variables if v not in binding]
        if missing:
            raise UnknownVariable(f"no value bound for {missing}")
        return _eval(self.ast, binding)

    def renamed(self, mapping, variables):
        """Same function with variables renamed through ``mapping``."""
        return Expression(_rename(self.ast, mapping), variables)

    def is_constant(self):
        return not _free_variables(self.ast, set())


def parse(text, variables):
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", text if isinstance(text, str) else "", 0)
    return Expression(_Parser(text, variables).parse(), variables, source=text)


def evaluate(e, binding):
    return e.eval(binding)


def as_expression(value, variables):
    """Accept an :class:`Expression`, DSL text, or a number."""
    if isinstance(value, Expression):
        if set(value.variables) - set(variables):
            raise UnknownVariable(f"expression uses {value.variables}, expected a subset of {tuple(variables)}")
        return Expression(value.ast, variables)
    if isinstance(value, (int, float)):
        return Expression(Num(float(value)), variables)
    return parse(value, variables)
