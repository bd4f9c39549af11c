"""Exact arithmetic and dense linear algebra over a prime field Z_p.

Scalars are plain Python ints holding canonical residues in ``[0, p)``;
:class:`FieldElem` is a thin operator-overloading wrapper for code that
prefers infix notation.  Matrices are :class:`ZpMatrix`, backed by numpy
``int64`` arrays when ``p < 2**31`` (so a single product fits) and by object
arrays otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_PRIME = 30011
MAX_UNIT_REJECTIONS = 1000

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class NotInvertibleError(ZeroDivisionError):
    """Raised when inverting zero in Z_p."""


class SamplingError(RuntimeError):
    """Raised when rejection sampling exceeds its retry bound."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3e24."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    p: int = DEFAULT_PRIME

    def __post_init__(self):
        if self.p < 3:
            raise ValueError(f"modulus must be an odd prime >= 3, got {self.p}")
        if self.p >= 1 << 32:
            raise ValueError("modulus too large: p**2 must fit in 64 bits")
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")

    def __call__(self, value: int) -> "FieldElem":
        return FieldElem(value, self)

    @property
    def dtype(self):
        return np.int64 if self.p < (1 << 31) else object


@dataclass(frozen=True)
class FieldElem:
    """A residue together with its field; supports ``+ - * /`` and ``**``."""

    value: int
    spec: FieldSpec

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % self.spec.p)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElem):
            if other.spec.p != self.spec.p:
                raise ValueError("mixing residues of different moduli")
            return other.value
        return int(other) % self.spec.p

    def __add__(self, other):
        return FieldElem(self.value + self._coerce(other), self.spec)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElem(self.value - self._coerce(other), self.spec)

    def __rsub__(self, other):
        return FieldElem(self._coerce(other) - self.value, self.spec)

    def __mul__(self, other):
        return FieldElem(self.value * self._coerce(other), self.spec)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElem(-self.value, self.spec)

    def inv(self) -> "FieldElem":
        return FieldElem(zp_inv(self.value, self.spec), self.spec)

    def __truediv__(self, other):
        return self * zp_inv(self._coerce(other), self.spec)

    def __rtruediv__(self, other):
        return FieldElem(self._coerce(other), self.spec) * self.inv()

    def __pow__(self, e: int):
        if e < 0:
            return FieldElem(pow(zp_inv(self.value, self.spec), -e, self.spec.p), self.spec)
        return FieldElem(pow(self.value, e, self.spec.p), self.spec)

    def __eq__(self, other):
        if isinstance(other, FieldElem):
            return self.spec.p == other.spec.p and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.spec.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.spec.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.spec.p})"


def _p(spec) -> int:
    return spec.p if isinstance(spec, FieldSpec) else int(spec)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a*x + b*y == g == gcd(a, b)``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def zp_inv(z: int, spec: FieldSpec) -> int:
    p = _p(spec)
    z = int(z) % p
    if z == 0:
        raise NotInvertibleError(f"0 is not invertible mod {p}")
    g, x, _ = egcd(z, p)
    assert g == 1
    return x % p


def zp_euler_is_residue(z: int, spec: FieldSpec) -> bool:
    p = _p(spec)
    z = int(z) % p
    return z == 0 or pow(z, (p - 1) // 2, p) == 1


def zp_sqrt(z: int, spec: FieldSpec) -> tuple[int, ...]:
    """Square roots of ``z`` mod p: ``()``, ``(0,)`` or ``(r, p - r)`` with r < p - r."""
    p = _p(spec)
    z = int(z) % p
    if z == 0:
        return (0,)
    if not zp_euler_is_residue(z, p):
        return ()
    if p % 4 == 3:
        r = pow(z, (p + 1) // 4, p)
    else:
        r = _tonelli_shanks(z, p)
    return tuple(sorted((r, p - r)))


def _tonelli_shanks(z: int, p: int) -> int:
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    nonres = 2
    while pow(nonres, (p - 1) // 2, p) != p - 1:
        nonres += 1
    m = s
    c = pow(nonres, q, p)
    t = pow(z, q, p)
    r = pow(z, (q + 1) // 2, p)
    while t != 1:
        # least i with t^(2^i) == 1
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m = i
        c = b * b % p
        t = t * c % p
        r = r * b % p
    return r


class ZpMatrix:
    """Dense matrix of canonical residues mod p."""

    __slots__ = ("data", "spec")

    def __init__(self, data, spec: FieldSpec):
        self.spec = spec
        arr = np.array(data, dtype=object)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ValueError("ZpMatrix needs 2-d data")
        arr = np.vectorize(lambda v: int(v) % spec.p, otypes=[object])(arr) if arr.size else arr
        self.data = arr.astype(spec.dtype)

    @classmethod
    def _wrap(cls, arr: np.ndarray, spec: FieldSpec) -> "ZpMatrix":
        out = cls.__new__(cls)
        out.spec = spec
        out.data = arr
        return out

    @classmethod
    def zeros(cls, rows: int, cols: int, spec: FieldSpec) -> "ZpMatrix":
        return cls._wrap(np.zeros((rows, cols), dtype=spec.dtype), spec)

    @classmethod
    def identity(cls, n: int, spec: FieldSpec) -> "ZpMatrix":
        return cls._wrap(np.eye(n, dtype=spec.dtype), spec)

    @classmethod
    def random(cls, rows: int, cols: int, spec: FieldSpec, rng: np.random.Generator) -> "ZpMatrix":
        return cls(rng.integers(0, spec.p, size=(rows, cols)).tolist(), spec)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def T(self) -> "ZpMatrix":
        return ZpMatrix._wrap(self.data.T.copy(), self.spec)

    def __getitem__(self, idx):
        return self.data[idx]

    def tolist(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.data]

    def __eq__(self, other):
        if not isinstance(other, ZpMatrix):
            return NotImplemented
        return self.spec.p == other.spec.p and self.shape == other.shape and bool(
            np.all(self.data == other.data))

    def __add__(self, other: "ZpMatrix") -> "ZpMatrix":
        return ZpMatrix._wrap((self.data + other.data) % self.spec.p, self.spec)

    def __sub__(self, other: "ZpMatrix") -> "ZpMatrix":
        return ZpMatrix._wrap((self.data - other.data) % self.spec.p, self.spec)

    def scale(self, c: int) -> "ZpMatrix":
        return ZpMatrix._wrap(self.data * (int(c) % self.spec.p) % self.spec.p, self.spec)

    def __matmul__(self, other: "ZpMatrix") -> "ZpMatrix":
        p = self.spec.p
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        if self.data.dtype != object and (p - 1) ** 2 * max(self.cols, 1) < (1 << 63):
            return ZpMatrix._wrap(self.data @ other.data % p, self.spec)
        out = self.data.astype(object) @ other.data.astype(object) % p
        return ZpMatrix._wrap(out.astype(self.spec.dtype), self.spec)

    def matvec(self, v: Sequence[int]) -> list[int]:
        col = ZpMatrix([[int(x)] for x in v], self.spec) if len(v) else ZpMatrix.zeros(0, 1, self.spec)
        return [int(x) for x in (self @ col).data[:, 0]]

    def det(self) -> int:
        """Determinant by Gaussian elimination."""
        n, m = self.shape
        if n != m:
            raise ValueError("determinant of a non-square matrix")
        p = self.spec.p
        a = [[int(v) for v in row] for row in self.data]
        det = 1
        for c in range(n):
            piv = next((r for r in range(c, n) if a[r][c]), None)
            if piv is None:
                return 0
            if piv != c:
                a[c], a[piv] = a[piv], a[c]
                det = -det
            det = det * a[c][c] % p
            inv = zp_inv(a[c][c], p)
            for r in range(c + 1, n):
                f = a[r][c] * inv % p
                if f:
                    a[r] = [(x - f * y) % p for x, y in zip(a[r], a[c])]
        return det % p

    def __repr__(self):
        return f"ZpMatrix({self.tolist()}, p={self.spec.p})"


def zp_rref(m: ZpMatrix, spec: FieldSpec | None = None) -> tuple[ZpMatrix, list[int]]:
    """Reduced row-echelon form and the list of pivot columns."""
    spec = spec or m.spec
    p = spec.p
    a = m.data.copy()
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] * zp_inv(int(a[r, c]), p) % p
        col = a[:, c].copy()
        col[r] = 0
        mask = np.nonzero(col)[0]
        if mask.size:
            a[mask] = (a[mask] - np.outer(col[mask], a[r])) % p
        pivots.append(c)
        r += 1
    return ZpMatrix._wrap(a, spec), pivots


def zp_rank(m: ZpMatrix) -> int:
    return len(zp_rref(m)[1])


def zp_nullspace(m: ZpMatrix, spec: FieldSpec | None = None) -> ZpMatrix:
    """Basis of the right nullspace, one vector per column."""
    spec = spec or m.spec
    p = spec.p
    red, pivots = zp_rref(m, spec)
    cols = m.cols
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((cols, len(free)), dtype=spec.dtype)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, pc in enumerate(pivots):
            basis[pc, k] = (-int(red.data[i, f])) % p
    return ZpMatrix._wrap(basis, spec)


def zp_rand_unit(n: int, spec: FieldSpec, rng: np.random.Generator) -> list[int]:
    """Random vector with squared norm 1 in Z_p, by rejection on the norm."""
    if n < 1:
        raise ValueError("unit vector needs n >= 1")
    p = spec.p
    for _ in range(MAX_UNIT_REJECTIONS):
        z = [int(v) for v in rng.integers(0, p, size=n)]
        norm2 = sum(v * v for v in z) % p
        if norm2 == 0 or not zp_euler_is_residue(norm2, spec):
            continue
        root = zp_sqrt(norm2, spec)[0]
        s = zp_inv(root, spec)
        return [v * s % p for v in z]
    raise SamplingError(f"no unit vector after {MAX_UNIT_REJECTIONS} rejections (n={n}, p={p})")


def zp_skew(u: Sequence[int], spec: FieldSpec) -> ZpMatrix:
    u1, u2, u3 = (int(v) for v in u)
    return ZpMatrix([[0, -u3, u2], [u3, 0, -u1], [-u2, u1, 0]], spec)


def zp_quat_to_rotation(q: Sequence[int], spec: FieldSpec) -> ZpMatrix:
    """Rotation ``2(u u^T - s [u]_x) + (s^2 - |u|^2) I`` from a unit quaternion ``(s, u)``."""
    p = spec.p
    s, *u = (int(v) % p for v in q)
    if len(u) != 3:
        raise ValueError("quaternion must have 4 components")
    if (s * s + sum(v * v for v in u)) % p != 1:
        raise ValueError("quaternion is not normalized in Z_p")
    uut = ZpMatrix([[a * b for b in u] for a in u], spec)
    rot = (uut - zp_skew(u, spec).scale(s)).scale(2)
    return rot + ZpMatrix.identity(3, spec).scale(s * s - sum(v * v for v in u))


def as_residues(values: Iterable, spec: FieldSpec) -> list[int]:
    return [int(v) % spec.p for v in values]


def zp_solve(a: ZpMatrix, b: Sequence[int]) -> list[int] | None:
    """One solution of ``a x = b`` (free variables set to 0), or None if inconsistent."""
    spec = a.spec
    aug = ZpMatrix._wrap(np.concatenate(
        [a.data, np.array([[int(v) % spec.p] for v in b], dtype=spec.dtype)], axis=1), spec)
    red, pivots = zp_rref(aug)
    if a.cols in pivots:
        return None
    x = [0] * a.cols
    for i, pc in enumerate(pivots):
        x[pc] = int(red.data[i, -1])
    return x
