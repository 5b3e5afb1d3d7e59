"""Tiny arithmetic expression grammar for problem-description files.

Problems are data, so function-valued config fields are restricted to a small
language: numbers, named variables, + - * / ^, parentheses, unary minus, the
functions sin/cos/exp/sqrt/abs/log, and the constants pi and e.  Compiled
expressions evaluate on scalars and numpy arrays alike.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "log": np.log,
}
_CONSTANTS = {"pi": math.pi, "e": math.e}

_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _NUMBER.match(text, pos)
        if m:
            tokens.append(("num", float(m.group(0))))
            pos = m.end()
            continue
        m = re.match(r"[A-Za-z_][A-Za-z_0-9]*", text[pos:])
        if m:
            tokens.append(("name", m.group(0)))
            pos += m.end()
            continue
        if text.startswith("**", pos):
            tokens.append(("op", "^"))
            pos += 2
            continue
        ch = text[pos]
        if ch in "+-*/^()":
            tokens.append(("op", ch))
            pos += 1
            continue
        raise ConfigError(f"bad character {ch!r} in expression {text!r}", parse=True)
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset):
        self.text = text
        self.vars = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ConfigError(f"expected {op!r} in expression {self.text!r}", parse=True)

    def parse(self) -> Callable:
        fn = self.add()
        if self.peek()[0] != "end":
            raise ConfigError(f"trailing input in expression {self.text!r}", parse=True)
        return fn

    def add(self):
        left = self.mul()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            right = self.mul()
            if op == "+":
                left = (lambda a, b: lambda env: a(env) + b(env))(left, right)
            else:
                left = (lambda a, b: lambda env: a(env) - b(env))(left, right)
        return left

    def mul(self):
        left = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            right = self.unary()
            if op == "*":
                left = (lambda a, b: lambda env: a(env) * b(env))(left, right)
            else:
                left = (lambda a, b: lambda env: a(env) / b(env))(left, right)
        return left

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return (lambda a: lambda env: -a(env))(inner)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exponent = self.unary()  # right-associative; binds tighter than unary minus on the left
            return (lambda a, b: lambda env: a(env) ** b(env))(base, exponent)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return (lambda v: lambda env: v)(val)
        if kind == "name":
            if self.peek() == ("op", "("):
                fn = _FUNCTIONS.get(val)
                if fn is None:
                    raise ConfigError(f"unknown function {val!r} in {self.text!r}", parse=True)
                self.take()
                arg = self.add()
                self.expect_op(")")
                return (lambda f, a: lambda env: f(a(env)))(fn, arg)
            if val in _CONSTANTS:
                return (lambda v: lambda env: v)(_CONSTANTS[val])
            if val not in self.vars:
                raise ConfigError(
                    f"unknown variable {val!r} in {self.text!r}; expected one of {sorted(self.vars)}",
                    parse=True)
            return (lambda name: lambda env: env[name])(val)
        if kind == "op" and val == "(":
            inner = self.add()
            self.expect_op(")")
            return inner
        raise ConfigError(f"unexpected token in expression {self.text!r}", parse=True)


@dataclass(frozen=True)
class Expression:
    source: str
    variables: tuple
    _fn: Callable = field(repr=False)

    def __call__(self, **env):
        # infinities are legitimate here (singular envelope rates); consumers
        # that need finite values check for themselves
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._fn(env)


def parse_expression(text, variables: Sequence[str]) -> Expression:
    """Compile an expression over the named variables; numbers pass through."""
    if isinstance(text, (int, float)):
        value = float(text)
        return Expression(source=repr(text), variables=tuple(variables),
                          _fn=(lambda env, v=value: v))
    if not isinstance(text, str):
        raise ConfigError(f"expected an expression string or number, got {text!r}", parse=True)
    fn = _Parser(text, frozenset(variables)).parse()
    return Expression(source=text, variables=tuple(variables), _fn=fn)


def compile_vector(entries, variables: Sequence[str]) -> Callable:
    """Entry-wise expressions -> function env -> 1-d array."""
    if not isinstance(entries, (list, tuple)) or not entries:
        raise ConfigError("expected a nonempty list of component expressions", parse=True)
    parts = [parse_expression(e, variables) for e in entries]

    def fn(**env):
        return np.array([float(p(**env)) for p in parts])
    return fn


def compile_matrix(rows, variables: Sequence[str]) -> Callable:
    """Row-wise expression lists -> function env -> 2-d array."""
    if not isinstance(rows, (list, tuple)) or not rows or not all(isinstance(r, (list, tuple)) for r in rows):
        raise ConfigError("expected a list of rows of entry expressions", parse=True)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError("matrix rows must have equal length", parse=True)
    parts = [[parse_expression(e, variables) for e in row] for row in rows]

    def fn(**env):
        return np.array([[float(p(**env)) for p in row] for row in parts])
    return fn
