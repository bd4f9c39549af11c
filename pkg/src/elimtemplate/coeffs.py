"""Symbolic coefficient expressions and straight-line coefficient programs.

Problem equations are polynomials in the unknowns whose coefficients are
:class:`Expr` nodes over the known inputs.  Nodes are hash-consed: building
the same operation on the same operands twice returns the same object, so
shared subexpressions are shared by construction and compiling the DAG into a
:class:`CoeffProgram` computes each one exactly once.
"""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .zp_field import FieldSpec, zp_inv

_ids = itertools.count()
_interned: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()

COMMUTATIVE = ("add", "mul")


class Expr:
    """Immutable, interned expression node.

    ``op`` is one of ``sym``, ``const``, ``add``, ``sub``, ``mul``, ``neg``,
    ``div``.  Construct leaves with :func:`sym` and :func:`const` and combine
    them with the arithmetic operators.
    """

    __slots__ = ("op", "args", "uid", "__weakref__")

    def __new__(cls, op: str, args: tuple):
        if op in COMMUTATIVE and args[0].uid > args[1].uid:
            args = (args[1], args[0])
        if op in ("sym", "const"):
            key = (op, args)
        else:
            key = (op,) + tuple(a.uid for a in args)
        node = _interned.get(key)
        if node is None:
            node = object.__new__(cls)
            node.op = op
            node.args = args
            node.uid = next(_ids)
            _interned[key] = node
        return node

    @property
    def is_zero(self) -> bool:
        return self.op == "const" and self.args[0] == 0

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self):
        return self.args[0]

    @property
    def name(self) -> str:
        return self.args[0]

    def __add__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else add(self, o)

    def __radd__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else add(o, self)

    def __sub__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else sub(self, o)

    def __rsub__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else sub(o, self)

    def __mul__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else mul(self, o)

    def __rmul__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else mul(o, self)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else div(self, o)

    def __rtruediv__(self, other):
        o = _coerce(other)
        return NotImplemented if o is NotImplemented else div(o, self)

    def __pow__(self, e: int):
        out = const(1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Expr):
            return self is other
        if isinstance(other, int):
            return self.op == "const" and self.args[0] == other
        return NotImplemented

    def __hash__(self):
        return self.uid

    def __repr__(self):
        if self.op == "sym":
            return self.args[0]
        if self.op == "const":
            return str(self.args[0])
        if self.op == "neg":
            return f"-({self.args[0]!r})"
        sym_op = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[self.op]
        return f"({self.args[0]!r} {sym_op} {self.args[1]!r})"


def _coerce(v):
    """Expr for ints and Expr; NotImplemented for anything else (e.g. polynomials)."""
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return const(int(v))
    return NotImplemented


def as_expr(v) -> Expr:
    e = _coerce(v)
    if e is NotImplemented:
        raise TypeError(f"symbolic coefficients accept only ints and Expr, got {type(v).__name__}")
    return e


def sym(name: str) -> Expr:
    return Expr("sym", (name,))


def const(v: int) -> Expr:
    return Expr("const", (int(v),))


ZERO = const(0)
ONE = const(1)


def add(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value + b.value)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    if a.op == "neg":
        return sub(b, a.args[0])
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a is b:
        return ZERO
    if a.op == "const" and b.op == "const":
        return const(a.value - b.value)
    if b.is_zero:
        return a
    if a.is_zero:
        return neg(b)
    if b.op == "neg":
        return add(a, b.args[0])
    if a.op == "neg":
        return neg(add(a.args[0], b))
    return Expr("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return const(a.value * b.value)
    if a.op == "const":
        a, b = b, a
    if b.op == "const":
        v = b.value
        if v == 0:
            return ZERO
        if v == 1:
            return a
        if v == -1:
            return neg(a)
        if v < 0:
            return neg(Expr("mul", (a, const(-v))))
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    if a.op == "neg":
        return neg(mul(a.args[0], b))
    if b.op == "neg":
        return neg(mul(a, b.args[0]))
    return Expr("mul", (a, b))


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    if a.op == "sub":
        return Expr("sub", (a.args[1], a.args[0]))
    return Expr("neg", (a,))


def div(a: Expr, b: Expr) -> Expr:
    if b.is_zero:
        raise ZeroDivisionError("symbolic division by constant zero")
    if b.op == "const" and b.value == 1:
        return a
    if a.is_zero:
        return ZERO
    return Expr("div", (a, b))


def symbols(prefix: str, shape: tuple = ()):
    """Array of symbols named ``prefix_i_j...`` (a bare symbol for shape ``()``)."""
    if shape == ():
        return sym(prefix)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = sym(prefix + "".join(f"_{i}" for i in idx))
    return out


def scalar_names(prefix: str, shape: tuple) -> list[str]:
    if shape == ():
        return [prefix]
    return [prefix + "".join(f"_{i}" for i in idx) for idx in np.ndindex(*shape)]


# -- straight-line programs ---------------------------------------------------


@dataclass
class CoeffProgram:
    """Straight-line program computing template coefficients from input scalars.

    ``instructions[k]`` defines slot ``k`` and is one of ``("in", name)``,
    ``("const", v)``, ``("add"|"sub"|"mul"|"div", i, j)`` or ``("neg", i)``
    with operand slots ``i, j < k``.  ``outputs[n]`` is the slot holding the
    coefficient of monomial ``output_monomials[n]`` in equation
    ``output_equations[n]``.
    """

    instructions: list
    outputs: list
    output_equations: list
    output_monomials: list
    inputs: list = field(default_factory=list)
    abbreviations: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, ins in enumerate(self.instructions):
            if ins[0] in ("in", "const"):
                continue
            if any(not (0 <= a < k) for a in ins[1:]):
                raise ValueError(f"instruction {k} references a later slot: {ins}")

    def __len__(self):
        return len(self.instructions)

    def evaluate(self, bindings: Mapping[str, object], field: FieldSpec | None = None) -> list:
        """Run the program; values are residues when ``field`` is given, else floats."""
        slots = self.evaluate_slots(bindings, field)
        return [slots[k] for k in self.outputs]

    def evaluate_slots(self, bindings: Mapping[str, object], field: FieldSpec | None = None) -> list:
        vals: list = [None] * len(self.instructions)
        if field is None:
            for k, ins in enumerate(self.instructions):
                op = ins[0]
                if op == "mul":
                    vals[k] = vals[ins[1]] * vals[ins[2]]
                elif op == "add":
                    vals[k] = vals[ins[1]] + vals[ins[2]]
                elif op == "sub":
                    vals[k] = vals[ins[1]] - vals[ins[2]]
                elif op == "neg":
                    vals[k] = -vals[ins[1]]
                elif op == "in":
                    vals[k] = _lookup(bindings, ins[1])
                elif op == "const":
                    vals[k] = float(ins[1])
                else:
                    vals[k] = vals[ins[1]] / vals[ins[2]]
            return vals
        p = field.p
        for k, ins in enumerate(self.instructions):
            op = ins[0]
            if op == "mul":
                vals[k] = vals[ins[1]] * vals[ins[2]] % p
            elif op == "add":
                vals[k] = (vals[ins[1]] + vals[ins[2]]) % p
            elif op == "sub":
                vals[k] = (vals[ins[1]] - vals[ins[2]]) % p
            elif op == "neg":
                vals[k] = -vals[ins[1]] % p
            elif op == "in":
                vals[k] = int(_lookup(bindings, ins[1])) % p
            elif op == "const":
                vals[k] = ins[1] % p
            else:
                vals[k] = vals[ins[1]] * zp_inv(vals[ins[2]], field) % p
        return vals

    def to_json(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "abbreviations": dict(self.abbreviations),
            "instructions": [list(ins) for ins in self.instructions],
            "outputs": [[e, list(m), s] for e, m, s in
                        zip(self.output_equations, self.output_monomials, self.outputs)],
        }

    @classmethod
    def from_json(cls, d: dict) -> "CoeffProgram":
        ins = [tuple(i) for i in d["instructions"]]
        outs = d["outputs"]
        return cls(instructions=ins,
                   outputs=[int(o[2]) for o in outs],
                   output_equations=[int(o[0]) for o in outs],
                   output_monomials=[tuple(int(e) for e in o[1]) for o in outs],
                   inputs=list(d["inputs"]),
                   abbreviations=dict(d.get("abbreviations", {})))


def _lookup(bindings: Mapping[str, object], name: str):
    try:
        return bindings[name]
    except KeyError:
        raise KeyError(f"missing binding for input {name!r}") from None


def build_coeff_program(equations: Sequence, abbreviations: Mapping[str, Expr] | None = None,
                        monomial_key=None) -> CoeffProgram:
    """Compile symbolic equations into a CSE'd straight-line program.

    ``equations`` are polynomials with :class:`Expr` coefficients.
    Abbreviation symbols are compiled from their defining expressions, once,
    before any coefficient that uses them.
    """
    abbreviations = dict(abbreviations or {})
    slot_of: dict[int, int] = {}
    instructions: list = []
    inputs: list[str] = []
    abbr_slots: dict[str, int] = {}

    def emit(root: Expr) -> int:
        # iterative post-order DFS; chains of additions can be deep
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if node.uid in slot_of:
                continue
            if node.op == "sym" and node.name in abbreviations:
                target = abbreviations[node.name]
                if expanded:
                    slot_of[node.uid] = slot_of[target.uid]
                    abbr_slots[node.name] = slot_of[target.uid]
                else:
                    stack.append((node, True))
                    stack.append((target, False))
                continue
            if node.op in ("sym", "const"):
                slot_of[node.uid] = len(instructions)
                if node.op == "sym":
                    instructions.append(("in", node.name))
                    inputs.append(node.name)
                else:
                    instructions.append(("const", node.value))
                continue
            if expanded:
                slot_of[node.uid] = len(instructions)
                instructions.append((node.op,) + tuple(slot_of[a.uid] for a in node.args))
            else:
                stack.append((node, True))
                for a in reversed(node.args):
                    if a.uid not in slot_of:
                        stack.append((a, False))
        return slot_of[root.uid]

    # abbreviations first, in declaration order
    for name in abbreviations:
        emit(sym(name))

    outputs, out_eqs, out_monos = [], [], []
    for i, eq in enumerate(equations):
        terms = sorted(eq.terms.items(), key=(lambda t: monomial_key(t[0])) if monomial_key else
                       (lambda t: t[0]), reverse=True)
        for m, c in terms:
            c = as_expr(c)
            outputs.append(emit(c))
            out_eqs.append(i)
            out_monos.append(tuple(m))
    return CoeffProgram(instructions, outputs, out_eqs, out_monos, inputs, abbr_slots)
