"""Buchberger's algorithm over Z_p with cofactor tracking.

Every basis element ``g_k`` carries a cofactor vector ``H[k]`` with
``g_k = sum_j H[k][j] * f_j`` over the *original* input equations.  Composing
these with the quotients of a normal-form computation expresses
``r - nf(r)`` as a combination of the inputs, which is what the template
generator needs to pick monomial multipliers.

Internally polynomials are plain ``{monomial: residue}`` dicts; the public
surface converts to and from :class:`~elimtemplate.poly.Polynomial`.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Sequence

from .poly import (GREVLEX, Monomial, MonomialOrder, Polynomial, divides, mono_div,
                   mono_lcm, mono_mul)
from .zp_field import FieldSpec, ZpMatrix, zp_inv

log = logging.getLogger(__name__)


class NotZeroDimensionalError(ValueError):
    """The ideal has infinitely many solutions (some variable has no pure-power leading term)."""


# -- dict-polynomial helpers ----------------------------------------------------


def _axpy(acc: dict, c: int, t: Monomial, g: dict, p: int) -> None:
    """``acc += c * t * g`` in place."""
    for m, v in g.items():
        mm = tuple(a + b for a, b in zip(m, t))
        w = (acc.get(mm, 0) + c * v) % p
        if w:
            acc[mm] = w
        else:
            acc.pop(mm, None)


def _pmul(a: dict, b: dict, p: int) -> dict:
    out: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = (out.get(m, 0) + c1 * c2) % p
    return {m: c for m, c in out.items() if c}


def _padd(acc: dict, b: dict, c: int, p: int) -> None:
    """``acc += c * b`` in place."""
    for m, v in b.items():
        w = (acc.get(m, 0) + c * v) % p
        if w:
            acc[m] = w
        else:
            acc.pop(m, None)


def _vec_combine(terms: list, n: int, p: int) -> list:
    """``sum_k q_k * vec_k`` for ``terms = [(q_k, vec_k), ...]`` (q a dict, vec a list of dicts)."""
    out = [dict() for _ in range(n)]
    for q, vec in terms:
        if not q:
            continue
        for j in range(n):
            if vec[j]:
                _padd(out[j], _pmul(q, vec[j], p), 1, p)
    return out


class _KeyCache(dict):
    def __init__(self, order: MonomialOrder):
        super().__init__()
        self.order = order

    def __missing__(self, m):
        k = self.order.key(m)
        self[m] = k
        return k


def _reduce(f: dict, lms: list, polys: list, key: _KeyCache, p: int, active=None,
            full: bool = True):
    """Divide ``f`` by monic ``polys`` with leading monomials ``lms``.

    Returns ``(remainder, quotients)`` with ``quotients[k]`` a dict polynomial;
    ``f = sum_k quotients[k] * polys[k] + remainder``.
    """
    f = dict(f)
    rem: dict = {}
    quot: dict = {}
    idx = range(len(polys)) if active is None else active
    while f:
        m = max(f, key=key.__getitem__)
        c = f[m]
        for k in idx:
            lm = lms[k]
            if all(a >= b for a, b in zip(m, lm)):
                t = tuple(a - b for a, b in zip(m, lm))
                _axpy(f, p - c, t, polys[k], p)
                q = quot.setdefault(k, {})
                w = (q.get(t, 0) + c) % p
                if w:
                    q[t] = w
                else:
                    q.pop(t, None)
                break
        else:
            if not full:
                rem.update(f)
                break
            rem[m] = c
            del f[m]
    return rem, quot


# -- public types ----------------------------------------------------------------


@dataclass
class TrackedBasis:
    """Reduced Gröbner basis with cofactors over the original inputs."""

    gens: list            # list[Polynomial]
    cofactors: list       # cofactors[k][j]: Polynomial, gens[k] = sum_j cofactors[k][j] * inputs[j]
    inputs: list          # the original F
    order: MonomialOrder
    field: FieldSpec
    syzygies: list = field(default_factory=list)   # list of cofactor vectors s with sum_j s_j f_j = 0

    @property
    def nvars(self) -> int:
        return self.inputs[0].nvars

    @property
    def leading_monomials(self) -> list:
        return [g.leading_monomial(self.order) for g in self.gens]


def _to_dict(f: Polynomial, spec: FieldSpec) -> dict:
    if f.field is None or f.field.p != spec.p:
        raise ValueError("Gröbner computations need polynomials over the same Z_p")
    return dict(f.terms)


def _vec_to_polys(vec: list, nvars: int, spec: FieldSpec) -> list:
    return [Polynomial._raw(dict(h), nvars, spec) for h in vec]


def buchberger(F: Sequence[Polynomial], order: MonomialOrder = GREVLEX,
               track_syzygies: bool = False) -> TrackedBasis:
    """Reduced Gröbner basis of ``F`` with exact cofactors.

    Pairs are processed smallest-lcm first; the product criterion and the chain
    criterion prune pairs.  With ``track_syzygies`` every S-pair that reduces to
    zero contributes its cofactor vector as a syzygy of ``F``.
    """
    F = list(F)
    if not F:
        raise ValueError("buchberger needs at least one polynomial")
    if any(f.is_zero() for f in F):
        raise ValueError("input polynomials must be nonzero")
    spec = F[0].field
    if spec is None:
        raise ValueError("buchberger runs over Z_p only")
    p = spec.p
    n = len(F)
    nvars = F[0].nvars
    key = _KeyCache(order)

    polys: list[dict] = []
    lms: list = []
    cofs: list[list] = []
    syz: list[list] = []

    def lead(f):
        return max(f, key=key.__getitem__)

    def add_elem(f: dict, cof: list) -> int:
        lm = lead(f)
        s = zp_inv(f[lm], p)
        polys.append({m: c * s % p for m, c in f.items()})
        cofs.append([{m: c * s % p for m, c in h.items()} for h in cof])
        lms.append(lm)
        return len(polys) - 1

    for j, f in enumerate(F):
        e = [dict() for _ in range(n)]
        e[j] = {tuple([0] * nvars): 1}
        add_elem(_to_dict(f, spec), e)

    pending: set = set()
    heap: list = []

    def push(i, j):
        lcm = mono_lcm(lms[i], lms[j])
        pending.add((i, j))
        heapq.heappush(heap, (key[lcm], i, j))

    for j in range(len(polys)):
        for i in range(j):
            push(i, j)

    def chain_skip(i, j, lcm) -> bool:
        for k in range(len(polys)):
            if k in (i, j) or not divides(lms[k], lcm):
                continue
            if (min(i, k), max(i, k)) not in pending and (min(j, k), max(j, k)) not in pending:
                return True
        return False

    while heap:
        _, i, j = heapq.heappop(heap)
        pending.discard((i, j))
        lm_i, lm_j = lms[i], lms[j]
        lcm = mono_lcm(lm_i, lm_j)
        if all(a == 0 or b == 0 for a, b in zip(lm_i, lm_j)):
            continue  # product criterion: the pair's syzygy is a Koszul syzygy
        if chain_skip(i, j, lcm):
            continue
        ti, tj = mono_div(lcm, lm_i), mono_div(lcm, lm_j)
        s: dict = {}
        _axpy(s, 1, ti, polys[i], p)
        _axpy(s, p - 1, tj, polys[j], p)
        rem, quot = _reduce(s, lms, polys, key, p)
        if not rem and not track_syzygies:
            continue
        combo = [({ti: 1}, cofs[i]), ({tj: p - 1}, cofs[j])]
        combo += [({m: (p - c) % p for m, c in q.items()}, cofs[k]) for k, q in quot.items()]
        cof = _vec_combine(combo, n, p)
        if not rem:
            if any(cof):
                syz.append(cof)
            continue
        k = add_elem(rem, cof)
        for i2 in range(k):
            push(i2, k)

    # minimal basis: drop elements whose leading monomial another element divides
    keep = []
    for k in range(len(polys)):
        if any(divides(lms[o], lms[k]) and (lms[o] != lms[k] or o < k)
               for o in range(len(polys)) if o != k):
            continue
        keep.append(k)
    keep.sort(key=lambda k: key[lms[k]], reverse=True)

    # interreduce tails
    gens, gcofs = [], []
    mlms = [lms[k] for k in keep]
    mpolys = [polys[k] for k in keep]
    for a, k in enumerate(keep):
        others = [b for b in range(len(keep)) if b != a]
        tail = dict(polys[k])
        lc = tail.pop(lms[k])
        rem, quot = _reduce(tail, mlms, mpolys, key, p, active=others)
        rem[lms[k]] = lc
        combo = [({tuple([0] * nvars): 1}, cofs[k])]
        combo += [({m: (p - c) % p for m, c in q.items()}, cofs[keep[b]]) for b, q in quot.items()]
        gens.append(rem)
        gcofs.append(_vec_combine(combo, n, p) if quot else [dict(h) for h in cofs[k]])
    # tails were reduced against unreduced siblings; leading terms are untouched
    # so the reduced basis is unique regardless of that order.

    if track_syzygies:
        # each input reduces to zero against the final basis
        for j, f in enumerate(F):
            rem, quot = _reduce(_to_dict(f, spec), mlms, gens, key, p)
            assert not rem
            e = [dict() for _ in range(n)]
            e[j] = {tuple([0] * nvars): 1}
            combo = [({tuple([0] * nvars): 1}, e)]
            combo += [({m: (p - c) % p for m, c in q.items()}, gcofs[b]) for b, q in quot.items()]
            s = _vec_combine(combo, n, p)
            if any(s):
                syz.append(s)

    return TrackedBasis(
        gens=[Polynomial._raw(g, nvars, spec) for g in gens],
        cofactors=[_vec_to_polys(h, nvars, spec) for h in gcofs],
        inputs=F, order=order, field=spec,
        syzygies=[_vec_to_polys(s, nvars, spec) for s in syz])


def normal_form(q: Polynomial, basis: TrackedBasis) -> tuple[Polynomial, list]:
    """Remainder of ``q`` modulo the basis and the quotient per basis element."""
    spec = basis.field
    key = _KeyCache(basis.order)
    lms = basis.leading_monomials
    polys = [g.terms for g in basis.gens]
    rem, quot = _reduce(_to_dict(q, spec), lms, polys, key, spec.p)
    nv = q.nvars
    return (Polynomial._raw(rem, nv, spec),
            [Polynomial._raw(quot.get(k, {}), nv, spec) for k in range(len(polys))])


def _check_zero_dimensional(basis: TrackedBasis, names: Sequence[str] | None = None) -> list[int]:
    nv = basis.nvars
    bounds = []
    for v in range(nv):
        pure = [lm[v] for lm in basis.leading_monomials
                if lm[v] > 0 and all(e == 0 for u, e in enumerate(lm) if u != v)]
        if not pure:
            label = names[v] if names else f"x{v}"
            raise NotZeroDimensionalError(
                f"ideal is not zero-dimensional: no leading term is a pure power of {label}")
        bounds.append(min(pure))
    return bounds


def normal_set(basis: TrackedBasis, names: Sequence[str] | None = None) -> list:
    """Standard monomials, sorted descending in the basis order."""
    if any(not any(lm) for lm in basis.leading_monomials):
        return []                       # unit ideal
    bounds = _check_zero_dimensional(basis, names)
    lms = basis.leading_monomials
    out = []
    # breadth-first over the staircase
    frontier = [tuple([0] * basis.nvars)]
    seen = set(frontier)
    while frontier:
        nxt = []
        for m in frontier:
            if any(divides(lm, m) for lm in lms):
                continue
            out.append(m)
            for v in range(basis.nvars):
                mm = m[:v] + (m[v] + 1,) + m[v + 1:]
                if mm[v] < bounds[v] and mm not in seen:
                    seen.add(mm)
                    nxt.append(mm)
        frontier = nxt
    return basis.order.sort(out)


def quotient_dimension(basis: TrackedBasis) -> int:
    return len(normal_set(basis))


def action_matrix_zp(basis: TrackedBasis, B: Sequence[Monomial], alpha: Monomial) -> ZpMatrix:
    """Row i holds the normal-set coordinates of nf(alpha * b_i)."""
    spec = basis.field
    pos = {m: k for k, m in enumerate(B)}
    rows = []
    for b in B:
        m = mono_mul(alpha, b)
        if m in pos:
            row = [0] * len(B)
            row[pos[m]] = 1
        else:
            rem, _ = normal_form(Polynomial._raw({m: 1}, basis.nvars, spec), basis)
            row = [0] * len(B)
            for mm, c in rem.terms.items():
                if mm not in pos:
                    raise ValueError(f"normal form leaves the normal set at {mm}")
                row[pos[mm]] = c
        rows.append(row)
    return ZpMatrix(rows, spec)


def lift(q: Polynomial, basis: TrackedBasis) -> tuple[Polynomial, list]:
    """Write ``q - nf(q)`` over the original inputs: returns ``(nf(q), h)``."""
    spec = basis.field
    rem, quot = normal_form(q, basis)
    n = len(basis.inputs)
    combo = [(qk.terms, [h.terms for h in basis.cofactors[k]]) for k, qk in enumerate(quot) if qk]
    h = _vec_combine(combo, n, spec.p)
    return rem, _vec_to_polys(h, q.nvars, spec)


def multiplier_sets(F: Sequence[Polynomial], basis: TrackedBasis, B: Sequence[Monomial],
                    alpha: Monomial, syzygies: "SyzygyBasis | None" = None):
    """Monomial multipliers per input equation needed to reduce every ``alpha * b_i``.

    Returns ``(sets, reducibles)`` where ``sets[j]`` is the set of monomials
    ``m`` such that ``m * f_j`` appears in some cofactor combination.
    """
    Bset = set(B)
    sets: dict[int, set] = {j: set() for j in range(len(F))}
    reducibles = []
    for b in B:
        r = mono_mul(alpha, b)
        if r in Bset:
            continue
        reducibles.append(r)
        _, h = lift(Polynomial._raw({r: 1}, basis.nvars, basis.field), basis)
        if syzygies is not None:
            h = syzygy_reduce(h, syzygies)
        for j, hj in enumerate(h):
            sets[j].update(hj.terms)
    return sets, reducibles


# -- syzygies --------------------------------------------------------------------


@dataclass
class SyzygyBasis:
    """Syzygies of ``F`` and a (degree-truncated) Gröbner basis of their module.

    The module order compares ``(deg m + deg f_j, order(m), -j)``: a
    term-over-position order shifted by the input degrees, so reduction never
    raises ``deg(m * f_j)``.
    """

    generators: list      # list of cofactor vectors (list[Polynomial])
    gb: list              # reduced module elements as {(j, m): c} dicts, monic
    input_degrees: list
    order: MonomialOrder
    field: FieldSpec
    max_degree: int


def _module_key(order: MonomialOrder, degs: list):
    cache: dict = {}

    def key(t):
        k = cache.get(t)
        if k is None:
            j, m = t
            k = (sum(m) + degs[j], order.key(m), -j)
            cache[t] = k
        return k
    return key


def _vec_to_module(vec: Sequence[Polynomial]) -> dict:
    return {(j, m): c for j, h in enumerate(vec) for m, c in h.terms.items()}


def _module_reduce(f: dict, gb: list, key, p: int) -> dict:
    f = dict(f)
    rem: dict = {}
    lts = [max(g, key=key) for g in gb]
    while f:
        t = max(f, key=key)
        c = f[t]
        j, m = t
        for g, (gj, gm) in zip(gb, lts):
            if gj == j and all(a >= b for a, b in zip(m, gm)):
                s = tuple(a - b for a, b in zip(m, gm))
                for (pj, pm), v in g.items():
                    tt = (pj, tuple(a + b for a, b in zip(pm, s)))
                    w = (f.get(tt, 0) - c * v) % p
                    if w:
                        f[tt] = w
                    else:
                        f.pop(tt, None)
                break
        else:
            rem[t] = c
            del f[t]
    return rem


def syzygy_basis(F: Sequence[Polynomial], basis: TrackedBasis, max_degree: int | None = None
                 ) -> SyzygyBasis:
    """Syzygy generators (Schreyer S-pair syzygies, input reductions, Koszul pairs)
    and a module Gröbner basis truncated at shifted degree ``max_degree``."""
    F = list(F)
    spec = basis.field
    p = spec.p
    nvars = F[0].nvars
    degs = [f.total_degree() for f in F]
    gens = list(basis.syzygies)
    if not gens and len(F) > 1:
        gens = list(buchberger(F, basis.order, track_syzygies=True).syzygies)
    for a in range(len(F)):
        for b in range(a + 1, len(F)):
            koszul = [Polynomial.zero(nvars, spec) for _ in F]
            koszul[a] = F[b]
            koszul[b] = -F[a]
            gens.append(koszul)
    if max_degree is None:
        max_degree = max(degs) * 2
    key = _module_key(basis.order, degs)

    def shifted_deg(t):
        return sum(t[1]) + degs[t[0]]

    def monic(g):
        lt = max(g, key=key)
        s = zp_inv(g[lt], p)
        return {t: c * s % p for t, c in g.items()}

    elems = []
    for s in gens:
        g = _vec_to_module(s)
        if g and shifted_deg(max(g, key=key)) <= max_degree:
            elems.append(monic(g))
    gb: list = []
    for g in sorted(elems, key=lambda g: key(max(g, key=key))):
        r = _module_reduce(g, gb, key, p)
        if r:
            gb.append(monic(r))
    # module Buchberger, truncated by shifted degree
    pairs = [(a, b) for b in range(len(gb)) for a in range(b)]
    while pairs:
        a, b = pairs.pop()
        ta, tb = max(gb[a], key=key), max(gb[b], key=key)
        if ta[0] != tb[0]:
            continue
        lcm = mono_lcm(ta[1], tb[1])
        if sum(lcm) + degs[ta[0]] > max_degree:
            continue
        sa, sb = mono_div(lcm, ta[1]), mono_div(lcm, tb[1])
        s: dict = {}
        for (j, m), v in gb[a].items():
            t = (j, mono_mul(m, sa))
            s[t] = (s.get(t, 0) + v) % p
        for (j, m), v in gb[b].items():
            t = (j, mono_mul(m, sb))
            s[t] = (s.get(t, 0) - v) % p
        s = {t: c for t, c in s.items() if c}
        r = _module_reduce(s, gb, key, p)
        if r:
            gb.append(monic(r))
            k = len(gb) - 1
            pairs.extend((i, k) for i in range(k))
    return SyzygyBasis(generators=gens, gb=gb, input_degrees=degs, order=basis.order,
                       field=spec, max_degree=max_degree)


def syzygy_reduce(h: Sequence[Polynomial], syz: SyzygyBasis) -> list:
    """Reduce a cofactor vector modulo the syzygy module.

    The result has the same ``sum_j h_j f_j``; it is kept only if its support
    is smaller and its total degree no larger, otherwise ``h`` is returned
    unchanged.
    """
    h = list(h)
    if not syz.gb:
        return h
    spec = syz.field
    nvars = h[0].nvars
    key = _module_key(syz.order, syz.input_degrees)
    r = _module_reduce(_vec_to_module(h), syz.gb, key, spec.p)
    out = [dict() for _ in h]
    for (j, m), c in r.items():
        out[j][m] = c
    reduced = [Polynomial._raw(d, nvars, spec) for d in out]

    def deg(vec):
        return max((x.total_degree() for x in vec if not x.is_zero()), default=0)
    if sum(len(x) for x in reduced) < sum(len(x) for x in h) and deg(reduced) <= deg(h):
        return reduced
    return h


def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder = GREVLEX) -> Polynomial:
    lf, lg = f.leading_monomial(order), g.leading_monomial(order)
    lcm = mono_lcm(lf, lg)
    a = f.mul_by_monomial(mono_div(lcm, lf)).monic(order)
    b = g.mul_by_monomial(mono_div(lcm, lg)).monic(order)
    return a - b
