"""Model formulas: a small Wilkinson-Rogers dialect and design matrices.

Supported syntax::

    response ~ a + b            main effects
    response ~ a:b              interaction (product of column expansions)
    response ~ a * b            crossing, expands to a + b + a:b
    response ~ a * (b + c)      crossing distributes over a parenthesised sum
    response ~ I(a^2)           elementwise integer power of a numeric column
    response ~ 1                intercept only

``:`` binds tighter than ``*``, which binds tighter than ``+``. An intercept
is always present; ``-`` (term removal) is not supported.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    DataError,
    FormulaSyntaxError,
    SchemaError,
    UnsupportedFeatureError,
)
from .tabular import Dataset


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Power:
    name: str
    exponent: int

    def __str__(self):
        return f"I({self.name}^{self.exponent})"


@dataclass(frozen=True)
class Interaction:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Cross:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sum:
    terms: tuple


@dataclass(frozen=True)
class Group:
    inner: "Node"


@dataclass(frozen=True)
class One:
    """Explicit intercept, ``y ~ 1``."""


Node = Union[Var, Power, Interaction, Cross, Sum, Group, One]
Atom = Union[Var, Power]


@dataclass(frozen=True)
class FormulaAst:
    response: str
    rhs: Node
    text: str

    def __str__(self):
        return self.text

    def variables(self):
        """Names of the columns the right-hand side refers to, in order."""
        seen = []
        for term in expand_terms(self.rhs):
            for atom in term:
                if atom.name not in seen:
                    seen.append(atom.name)
        return seen

    def terms(self):
        return expand_terms(self.rhs)


_TOKEN = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<int>\d+(?:\.\d*)?)|(?P<op>[~+*:()^\-./%|]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value:
            got = repr(val) if kind != "end" else "end of formula"
            raise FormulaSyntaxError(f"expected {value!r}, got {got}", pos)

    def formula(self):
        kind, val, pos = self.next()
        if kind != "ident":
            raise FormulaSyntaxError("formula must start with a response name", pos)
        response = val
        self.expect("~")
        rhs = self.sum()
        kind, val, pos = self.peek()
        if kind == "op" and val in "^/%|":
            raise UnsupportedFeatureError(f"operator {val!r} is not supported (offset {pos})")
        if kind != "end":
            raise FormulaSyntaxError(f"unexpected {val!r}", pos)
        return FormulaAst(response, rhs, self.text.strip())

    def sum(self):
        terms = [self.cross()]
        while self.peek()[1] in ("+", "-"):
            _, op, pos = self.next()
            if op == "-":
                raise UnsupportedFeatureError(
                    f"term removal with '-' is not supported (offset {pos})"
                )
            terms.append(self.cross())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def cross(self):
        node = self.interaction()
        while self.peek()[1] == "*":
            self.next()
            node = Cross(node, self.interaction())
        return node

    def interaction(self):
        node = self.factor()
        while self.peek()[1] == ":":
            self.next()
            node = Interaction(node, self.factor())
        return node

    def factor(self):
        kind, val, pos = self.next()
        if kind == "ident":
            if val == "I" and self.peek()[1] == "(":
                return self.power()
            if self.peek()[1] == "(":
                raise UnsupportedFeatureError(f"function {val}() is not supported (offset {pos})")
            return Var(val)
        if val == "(":
            inner = self.sum()
            self.expect(")")
            return Group(inner)
        if kind == "int":
            if val == "1":
                return One()
            raise UnsupportedFeatureError(f"numeric term {val!r} is not supported (offset {pos})")
        if kind == "op" and val in ".^/%|":
            raise UnsupportedFeatureError(f"operator {val!r} is not supported (offset {pos})")
        got = repr(val) if kind != "end" else "end of formula"
        raise FormulaSyntaxError(f"expected a term, got {got}", pos)

    def power(self):
        self.expect("(")
        kind, name, pos = self.next()
        if kind != "ident":
            raise FormulaSyntaxError("expected a variable name inside I()", pos)
        self.expect("^")
        kind, val, pos = self.next()
        if kind != "int" or not val.isdigit() or int(val) < 1:
            raise FormulaSyntaxError("power exponent must be a positive integer", pos)
        self.expect(")")
        k = int(val)
        return Var(name) if k == 1 else Power(name, k)


def parse(text: str) -> FormulaAst:
    """Parse ``text`` into a :class:`FormulaAst`.

    Raises :class:`FormulaSyntaxError` (with offset) on malformed input and
    :class:`UnsupportedFeatureError` on constructs outside the dialect.
    """
    ast = _Parser(text).formula()
    if any(a.name == ast.response for t in expand_terms(ast.rhs) for a in t):
        raise FormulaSyntaxError(f"response {ast.response!r} appears on the right-hand side", 0)
    return ast


def _merge(a, b):
    out = list(a)
    for atom in b:
        if atom not in out:
            out.append(atom)
    return tuple(out)


def _expand(node):
    if isinstance(node, (Var, Power)):
        return [(node,)]
    if isinstance(node, One):
        return []
    if isinstance(node, Group):
        return _expand(node.inner)
    if isinstance(node, Sum):
        out = []
        for t in node.terms:
            out.extend(_expand(t))
        return out
    left, right = _expand(node.left), _expand(node.right)
    products = [_merge(a, b) for a in left for b in right]
    if isinstance(node, Interaction):
        return products
    return left + right + products


def expand_terms(node):
    """Expanded term list; each term is a tuple of atoms.

    Duplicates are removed and terms are stably sorted by order, so main
    effects precede two-way interactions, which precede three-way ones.
    """
    unique = []
    seen = set()
    for term in _expand(node):
        key = frozenset(term)
        if key not in seen:
            seen.add(key)
            unique.append(term)
    return sorted(unique, key=len)


def _atom_columns(atom, ds, levels):
    col = ds[atom.name]
    if isinstance(atom, Power):
        if not col.is_numeric:
            raise UnsupportedFeatureError(f"I({atom.name}^{atom.exponent}): {atom.name!r} is categorical")
        return [str(atom)], [col.values**atom.exponent]
    if col.is_numeric:
        return [atom.name], [np.asarray(col.values, dtype=float)]
    names, arrays = [], []
    for lev in levels[1:]:
        names.append(f"{atom.name}[{lev}]")
        arrays.append((col.values == lev).astype(float))
    return names, arrays


@dataclass(frozen=True)
class DesignBuilder:
    """A formula bound to the schema of the data it was first built on."""

    ast: FormulaAst
    terms: tuple
    schema: dict

    def check(self, ds: Dataset):
        for name, (kind, levels) in self.schema.items():
            if name not in ds:
                raise SchemaError(f"column {name!r} missing from data")
            col = ds[name]
            if col.kind != kind:
                raise SchemaError(f"column {name!r} is {col.kind}, design expects {kind}")
            if kind == "categorical":
                unseen = set(np.unique(col.values).tolist()) - set(levels)
                if unseen:
                    raise SchemaError(f"column {name!r} has unseen levels {sorted(unseen)}")

    def build(self, ds: Dataset):
        self.check(ds)
        names = ["(Intercept)"]
        arrays = [np.ones(ds.n_rows)]
        for term in self.terms:
            parts = [_atom_columns(atom, ds, self.schema[atom.name][1]) for atom in term]
            # first atom varies fastest
            for combo in itertools.product(*[list(zip(*p)) for p in reversed(parts)]):
                combo = combo[::-1]
                names.append(":".join(c[0] for c in combo))
                prod = np.ones(ds.n_rows)
                for _, arr in combo:
                    prod = prod * arr
                arrays.append(prod)
        return np.column_stack(arrays), names


@dataclass(frozen=True)
class DesignMatrix:
    """An n-by-p design matrix with column labels and the builder that made it."""

    matrix: np.ndarray
    column_names: tuple
    builder: DesignBuilder

    @property
    def shape(self):
        return self.matrix.shape

    def index(self, name):
        return self.column_names.index(name)


def build_design(ast: FormulaAst, ds: Dataset) -> DesignMatrix:
    """Expand ``ast`` against ``ds`` into a :class:`DesignMatrix`.

    Categorical columns with L levels contribute L-1 indicator columns (first
    sorted level is the reference). Interactions are products of the
    expansions of their atoms.
    """
    schema = {}
    for name in ast.variables():
        if name not in ds:
            raise SchemaError(f"formula variable {name!r} not found in data")
        col = ds[name]
        schema[name] = (col.kind, col.levels)
    builder = DesignBuilder(ast, tuple(ast.terms()), schema)
    matrix, names = builder.build(ds)
    if len(set(names)) != len(names):
        raise DataError(f"duplicate design column names in {names}")
    matrix.setflags(write=False)
    return DesignMatrix(matrix, tuple(names), builder)


def rebuild(design: DesignMatrix, new_ds: Dataset) -> np.ndarray:
    """Apply the expansion of ``design`` to ``new_ds``."""
    matrix, _ = design.builder.build(new_ds)
    return matrix


def response_vector(ast: FormulaAst, ds: Dataset) -> np.ndarray:
    col = ds[ast.response]
    if not col.is_numeric:
        raise DataError(f"response {ast.response!r} must be numeric")
    return np.asarray(col.values, dtype=float)


def drop_variable(ast: FormulaAst, name: str) -> FormulaAst:
    """Formula without every term that involves ``name``.

    ``y ~ x * (a + b)`` with ``name="x"`` gives ``y ~ a + b``; dropping all
    terms leaves ``y ~ 1``.
    """
    kept = [":".join(str(a) for a in term) for term in ast.terms()
            if all(a.name != name for a in term)]
    return parse(f"{ast.response} ~ {' + '.join(kept) if kept else '1'}")
