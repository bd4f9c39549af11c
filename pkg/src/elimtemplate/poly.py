"""Monomials, monomial orders and sparse multivariate polynomials.

A monomial is a tuple of non-negative exponents.  A :class:`Polynomial` maps
monomials to nonzero coefficients.  Coefficients are either residues mod p
(``field`` is a :class:`~elimtemplate.zp_field.FieldSpec`) or any object
supporting ``+ - *`` -- floats, complex numbers or symbolic
:class:`~elimtemplate.coeffs.Expr` nodes (``field is None``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .zp_field import FieldSpec, zp_inv

Monomial = tuple  # tuple[int, ...]

MAX_EXPONENT = 0xFFFF


def one(nvars: int) -> Monomial:
    return (0,) * nvars


def var(k: int, nvars: int) -> Monomial:
    return tuple(1 if i == k else 0 for i in range(nvars))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if len(a) != len(b):
        raise ValueError(f"monomial arity mismatch: {len(a)} vs {len(b)}")
    out = tuple(x + y for x, y in zip(a, b))
    if out and max(out) > MAX_EXPONENT:
        raise OverflowError("exponent exceeds 16-bit range")
    return out


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    """``a / b``; caller guarantees ``b | a``."""
    return tuple(x - y for x, y in zip(a, b))


def divides(b: Monomial, a: Monomial) -> bool:
    return all(y <= x for x, y in zip(a, b))


def mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def degree(m: Monomial) -> int:
    return sum(m)


def format_monomial(m: Monomial, names: Sequence[str] | None = None) -> str:
    names = names or [f"x{i}" for i in range(len(m))]
    parts = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
    return "*".join(parts) or "1"


@dataclass(frozen=True)
class MonomialOrder:
    """grevlex / grlex / lex, with ``perm`` listing variables from most to least significant."""

    kind: str = "grevlex"
    perm: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("grevlex", "grlex", "lex"):
            raise ValueError(f"unknown monomial order {self.kind!r}")

    def key(self, m: Monomial):
        if self.perm is not None:
            m = tuple(m[i] for i in self.perm)
        if self.kind == "grevlex":
            return (sum(m), tuple(-e for e in reversed(m)))
        if self.kind == "grlex":
            return (sum(m), m)
        return m

    def compare(self, a: Monomial, b: Monomial) -> int:
        if len(a) != len(b):
            raise ValueError(f"monomial arity mismatch: {len(a)} vs {len(b)}")
        ka, kb = self.key(a), self.key(b)
        return (ka > kb) - (ka < kb)

    def sort(self, monos: Iterable[Monomial], descending: bool = True) -> list[Monomial]:
        return sorted(monos, key=self.key, reverse=descending)


GREVLEX = MonomialOrder("grevlex")


def compare(a: Monomial, b: Monomial, order: MonomialOrder = GREVLEX) -> int:
    """-1, 0 or 1 as ``a`` is smaller, equal or larger than ``b``."""
    return order.compare(a, b)


def _is_zero(c, fld) -> bool:
    if fld is not None:
        return c == 0
    z = getattr(c, "is_zero", None)
    if z is not None:
        return z
    return c == 0


class Polynomial:
    """Sparse polynomial ``{monomial: coefficient}`` without stored zeros."""

    __slots__ = ("terms", "nvars", "field")

    def __init__(self, terms: Mapping[Monomial, object] | None = None, nvars: int = 0,
                 field: FieldSpec | None = None):
        self.nvars = nvars
        self.field = field
        out = {}
        for m, c in (terms or {}).items():
            m = tuple(int(e) for e in m)
            if len(m) != nvars:
                raise ValueError(f"monomial {m} does not have {nvars} variables")
            if field is not None:
                c = int(c) % field.p
            if not _is_zero(c, field):
                out[m] = c
        self.terms = out

    @classmethod
    def _raw(cls, terms: dict, nvars: int, fld) -> "Polynomial":
        out = cls.__new__(cls)
        out.terms = terms
        out.nvars = nvars
        out.field = fld
        return out

    @classmethod
    def constant(cls, c, nvars: int, field: FieldSpec | None = None) -> "Polynomial":
        return cls({one(nvars): c}, nvars, field)

    @classmethod
    def variable(cls, k: int, nvars: int, field: FieldSpec | None = None, coef=1) -> "Polynomial":
        return cls({var(k, nvars): coef}, nvars, field)

    @classmethod
    def zero(cls, nvars: int, field: FieldSpec | None = None) -> "Polynomial":
        return cls._raw({}, nvars, field)

    # -- inspection -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def monomials(self) -> set:
        return set(self.terms)

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def leading_monomial(self, order: MonomialOrder = GREVLEX) -> Monomial:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms, key=order.key)

    def leading_coefficient(self, order: MonomialOrder = GREVLEX):
        return self.terms[self.leading_monomial(order)]

    def coefficient(self, m: Monomial):
        return self.terms.get(tuple(m), 0)

    def sorted_terms(self, order: MonomialOrder = GREVLEX) -> list:
        return sorted(self.terms.items(), key=lambda t: order.key(t[0]), reverse=True)

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if other.nvars != self.nvars:
            raise ValueError(f"arity mismatch: {self.nvars} vs {other.nvars}")
        if (self.field is None) != (other.field is None) or (
                self.field is not None and self.field.p != other.field.p):
            raise ValueError("mixing polynomials over different coefficient fields")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(other, self.nvars, self.field)

    def _combine(self, other: "Polynomial", sign: int) -> "Polynomial":
        fld = self.field
        out = dict(self.terms)
        if fld is not None:
            p = fld.p
            for m, c in other.terms.items():
                v = (out.get(m, 0) + sign * c) % p
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        else:
            for m, c in other.terms.items():
                if m in out:
                    v = out[m] + c if sign > 0 else out[m] - c
                else:
                    v = c if sign > 0 else -c
                if _is_zero(v, None):
                    out.pop(m, None)
                else:
                    out[m] = v
        return Polynomial._raw(out, self.nvars, fld)

    def __add__(self, other):
        return self._combine(self._lift(other), 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(self._lift(other), -1)

    def __rsub__(self, other):
        return self._lift(other)._combine(self, -1)

    def __neg__(self):
        if self.field is not None:
            p = self.field.p
            return Polynomial._raw({m: p - c for m, c in self.terms.items()}, self.nvars, self.field)
        return Polynomial._raw({m: -c for m, c in self.terms.items()}, self.nvars, self.field)

    def scale(self, c) -> "Polynomial":
        fld = self.field
        if fld is not None:
            c = int(c) % fld.p
            if c == 0:
                return Polynomial.zero(self.nvars, fld)
            return Polynomial._raw({m: v * c % fld.p for m, v in self.terms.items()}, self.nvars, fld)
        out = {}
        for m, v in self.terms.items():
            w = v * c
            if not _is_zero(w, None):
                out[m] = w
        return Polynomial._raw(out, self.nvars, fld)

    def mul_by_monomial(self, mono: Monomial, c=None) -> "Polynomial":
        shifted = Polynomial._raw({mono_mul(m, mono): v for m, v in self.terms.items()},
                                  self.nvars, self.field)
        return shifted if c is None else shifted.scale(c)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        fld = self.field
        out: dict = {}
        if fld is not None:
            p = fld.p
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    m = mono_mul(m1, m2)
                    out[m] = (out.get(m, 0) + c1 * c2) % p
            out = {m: c for m, c in out.items() if c}
        else:
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    m = mono_mul(m1, m2)
                    out[m] = out[m] + c1 * c2 if m in out else c1 * c2
            out = {m: c for m, c in out.items() if not _is_zero(c, None)}
        return Polynomial._raw(out, self.nvars, fld)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, e: int):
        out = Polynomial.constant(1, self.nvars, self.field)
        for _ in range(e):
            out = out * self
        return out

    def monic(self, order: MonomialOrder = GREVLEX) -> "Polynomial":
        if self.field is None:
            return self.scale(1.0 / self.leading_coefficient(order))
        return self.scale(zp_inv(self.leading_coefficient(order), self.field))

    def map_coefficients(self, fn: Callable, field: FieldSpec | None = None) -> "Polynomial":
        return Polynomial({m: fn(c) for m, c in self.terms.items()}, self.nvars, field)

    def evaluate(self, point: Sequence):
        """Substitute ``point`` for the variables and fold in the coefficient field."""
        if len(point) != self.nvars:
            raise ValueError(f"need {self.nvars} values, got {len(point)}")
        if self.field is not None:
            p = self.field.p
            pt = [int(v) % p for v in point]
            total = 0
            for m, c in self.terms.items():
                t = c
                for v, e in zip(pt, m):
                    if e:
                        t = t * pow(v, e, p) % p
                total += t
            return total % p
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in zip(point, m):
                if e:
                    t = t * v ** e
            total = total + t
        return total

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self.terms == other.terms
        if not self.terms:
            return other == 0
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def format(self, names: Sequence[str] | None = None, order: MonomialOrder = GREVLEX) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{format_monomial(m, names)}" for m, c in self.sorted_terms(order))

    def __repr__(self):
        return f"Polynomial({self.format()})"


def variables(nvars: int, field: FieldSpec | None = None) -> list[Polynomial]:
    return [Polynomial.variable(k, nvars, field) for k in range(nvars)]


def monomials_up_to_degree(nvars: int, deg: int) -> list[Monomial]:
    """All monomials of total degree ``<= deg``."""
    out = []

    def rec(prefix, left, k):
        if k == nvars - 1:
            for e in range(left + 1):
                out.append(prefix + (e,))
            return
        for e in range(left + 1):
            rec(prefix + (e,), left - e, k + 1)

    if nvars == 0:
        return [()]
    rec((), deg, 0)
    return out
