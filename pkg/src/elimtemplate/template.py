"""Offline template generation.

:func:`generate_template` samples several Z_p instances of a problem,
computes a Gröbner basis of each, takes the union of their normal sets and
monomial multiplier sets, and lays out the elimination template: rows are
monomial multiples ``m * f_i`` of the input equations, columns are monomials
partitioned into excessive, reducible and basis groups.  The template is
validated on a fresh held-out Z_p instance before it is returned.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .coeffs import CoeffProgram, build_coeff_program  # noqa: F401  (re-export)
from .groebner import (NotZeroDimensionalError, action_matrix_zp, buchberger, lift,
                       normal_set, syzygy_basis, syzygy_reduce)
from .poly import Monomial, MonomialOrder, Polynomial, mono_mul, var
from .problems import ProblemSpec, instantiate_program
from .zp_field import DEFAULT_PRIME, FieldSpec, ZpMatrix, zp_inv, zp_rref

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMAT_NAME = "elimination-template"


class TemplateError(RuntimeError):
    """Template generation failed."""


class UnstableDimensionError(TemplateError):
    """No majority quotient dimension across the Z_p trials."""


class ValidationError(TemplateError):
    """The template failed on the held-out Z_p instance."""


class TemplateFormatError(ValueError):
    """A serialized template could not be parsed."""


@dataclass
class GeneratorOptions:
    p: int = DEFAULT_PRIME
    trials: int = 5
    seed: int = 0
    alpha: Monomial | str | None = None      # monomial, variable name, or None for the first unknown
    syzygy_reduction: bool = False
    triangular_reduction: bool = False
    detect_symmetry: bool = True
    order: str = "grevlex"


@dataclass(frozen=True)
class SymmetryDescriptor:
    """Sign flip of ``variables`` mapping every equation to +-itself.

    ``residues[i]`` is the parity of the flipped-variable degree shared by all
    monomials of equation i.
    """

    variables: tuple
    fold: int = 2
    residues: tuple = ()

    def apply(self, values: Sequence) -> list:
        return [-v if k in self.variables else v for k, v in enumerate(values)]

    def to_json(self) -> dict:
        return {"variables": list(self.variables), "fold": self.fold, "residues": list(self.residues)}

    @classmethod
    def from_json(cls, d: dict) -> "SymmetryDescriptor":
        return cls(tuple(d["variables"]), int(d["fold"]), tuple(d["residues"]))


@dataclass(frozen=True)
class TriangularPlan:
    """Rows and excessive columns (template indices) forming an upper-triangular leading block."""

    rows: tuple
    cols: tuple

    @property
    def size(self) -> int:
        return len(self.rows)


@dataclass
class SolverTemplate:
    problem: str
    unknowns: list
    known: dict                 # argument name -> shape
    num_equations: int
    alpha: Monomial
    basis: list
    excessive: list
    reducible: list
    rows: list                  # (multiplier monomial, equation index)
    program: CoeffProgram
    solution_count: int
    order: str = "grevlex"
    symmetry: SymmetryDescriptor | None = None
    reduction: TriangularPlan | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self) -> list:
        return list(self.excessive) + list(self.reducible) + list(self.basis)

    @property
    def nvars(self) -> int:
        return len(self.unknowns)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.columns)

    @property
    def monomial_order(self) -> MonomialOrder:
        return MonomialOrder(self.order)

    def layout(self):
        """Index arrays ``(row, col, output)`` placing program outputs in the template."""
        cached = getattr(self, "_layout", None)
        if cached is not None:
            return cached
        col_of = {m: k for k, m in enumerate(self.columns)}
        by_eq: dict[int, list] = {}
        for k, (e, m) in enumerate(zip(self.program.output_equations, self.program.output_monomials)):
            by_eq.setdefault(e, []).append((k, m))
        ri, ci, oi = [], [], []
        for r, (mult, e) in enumerate(self.rows):
            for k, m in by_eq.get(e, []):
                ri.append(r)
                ci.append(col_of[mono_mul(mult, m)])
                oi.append(k)
        out = (np.array(ri, dtype=np.intp), np.array(ci, dtype=np.intp), np.array(oi, dtype=np.intp))
        object.__setattr__(self, "_layout", out)
        return out

    def structure(self) -> np.ndarray:
        """Boolean sparsity pattern of the template."""
        ri, ci, _ = self.layout()
        s = np.zeros(self.shape, dtype=bool)
        s[ri, ci] = True
        return s

    def flatten_inputs(self, inputs) -> dict:
        from .coeffs import scalar_names

        flat = {}
        for name, shape in self.known.items():
            if name not in inputs:
                raise KeyError(f"missing binding for known argument {name!r}")
            arr = np.asarray(inputs[name], dtype=object)
            if arr.shape != tuple(shape):
                raise ValueError(f"argument {name!r} has shape {arr.shape}, expected {tuple(shape)}")
            flat.update(zip(scalar_names(name, tuple(shape)), arr.reshape(-1)))
        return flat

    def equations(self, flat_inputs, field: FieldSpec | None = None) -> list:
        return instantiate_program(self.program, self.num_equations, self.nvars, flat_inputs, field)

    def extraction_plan(self) -> list:
        """How each unknown is read from a basis vector ``b(x)``.

        ``("basis", i)`` -- the unknown is basis monomial i; ``("ratio", [(num, den), ...])``
        -- ratios of basis entries differing by that variable; ``("eig",)`` -- the
        unknown is the action monomial itself.
        """
        pos = {m: k for k, m in enumerate(self.basis)}
        plan = []
        for k in range(self.nvars):
            v = var(k, self.nvars)
            if v in pos:
                plan.append(("basis", pos[v]))
                continue
            pairs = [(pos[mono_mul(v, b)], pos[b]) for b in self.basis if mono_mul(v, b) in pos]
            if pairs:
                plan.append(("ratio", pairs))
            elif tuple(self.alpha) == v:
                plan.append(("eig",))
            else:
                raise TemplateError(f"cannot recover unknown {self.unknowns[k]} from the basis")
        return plan

    def __eq__(self, other):
        if not isinstance(other, SolverTemplate):
            return NotImplemented
        return to_json(self) == to_json(other)


# -- symmetry -----------------------------------------------------------------------


def detect_symmetries(equations: Sequence[Polynomial], all_flips: bool = False):
    """Variable-aligned sign symmetries.

    Searches every non-trivial sign pattern over the unknowns (smallest flip
    sets first) for which all monomials of each equation share the parity of
    their flipped-variable degree.  Returns the first hit as a
    :class:`SymmetryDescriptor`, or all of them when ``all_flips``.
    """
    nv = equations[0].nvars
    found = []
    subsets = [s for s in product((0, 1), repeat=nv) if any(s)]
    subsets.sort(key=lambda s: (sum(s), [-x for x in s]))
    for mask in subsets:
        flip = tuple(k for k in range(nv) if mask[k])
        residues = []
        for f in equations:
            parities = {sum(m[k] for k in flip) % 2 for m in f.terms}
            if len(parities) > 1:
                break
            residues.append(parities.pop() if parities else 0)
        else:
            found.append(SymmetryDescriptor(flip, 2, tuple(residues)))
            if not all_flips:
                return found[0]
    return found if all_flips else None


# -- template assembly over Z_p ----------------------------------------------------------


def _resolve_alpha(alpha, unknowns: list, nvars: int) -> Monomial:
    if alpha is None:
        return var(0, nvars)
    if isinstance(alpha, str):
        if alpha not in unknowns:
            raise ValueError(f"unknown action variable {alpha!r}")
        return var(unknowns.index(alpha), nvars)
    alpha = tuple(int(e) for e in alpha)
    if len(alpha) != nvars:
        raise ValueError("action monomial has the wrong number of variables")
    return alpha


def _random_flat_inputs(names: Sequence[str], spec: FieldSpec, rng) -> dict:
    return {n: int(v) for n, v in zip(names, rng.integers(1, spec.p, size=len(names)))}


def assemble_zp(t: SolverTemplate, flat_inputs: dict, spec: FieldSpec) -> ZpMatrix:
    vals = t.program.evaluate(flat_inputs, spec)
    ri, ci, oi = t.layout()
    C = np.zeros(t.shape, dtype=spec.dtype)
    C[ri, ci] = np.array(vals, dtype=object)[oi].astype(spec.dtype) if len(oi) else 0
    return ZpMatrix._wrap(C, spec)


def _zp_schur(C: np.ndarray, plan: TriangularPlan, p: int) -> np.ndarray:
    """Exact ``X - W U^-1 V`` for the plan's row/column split."""
    rows = list(plan.rows)
    cols = list(plan.cols)
    other_r = [r for r in range(C.shape[0]) if r not in set(rows)]
    other_c = [c for c in range(C.shape[1]) if c not in set(cols)]
    U = C[np.ix_(rows, cols)].astype(object)
    V = C[np.ix_(rows, other_c)].astype(object)
    W = C[np.ix_(other_r, cols)].astype(object)
    X = C[np.ix_(other_r, other_c)].astype(object)
    k = len(rows)
    # back substitution: Y = U^-1 V
    Y = np.zeros_like(V)
    for a in range(k - 1, -1, -1):
        acc = V[a].copy()
        for b in range(a + 1, k):
            if U[a, b]:
                acc = acc - U[a, b] * Y[b]
        Y[a] = acc * zp_inv(int(U[a, a]), p) % p
    return ((X - W.dot(Y)) % p).astype(C.dtype) if k else X.astype(C.dtype)


def zp_action_matrix(t: SolverTemplate, flat_inputs: dict, spec: FieldSpec) -> ZpMatrix:
    """Action matrix from the template on a Z_p instance (exact elimination)."""
    p = spec.p
    C = assemble_zp(t, flat_inputs, spec).data
    n_e = len(t.excessive)
    if t.reduction is not None and t.reduction.size:
        C = _zp_schur(C, t.reduction, p)
        n_e -= t.reduction.size
    n_r = len(t.reducible)
    red, pivots = zp_rref(ZpMatrix._wrap(C, spec))
    pivot_row = {c: i for i, c in enumerate(pivots)}
    mprime = {}
    for k, r in enumerate(t.reducible):
        c = n_e + k
        if c not in pivot_row:
            raise ValidationError(f"reducible monomial {r} has no pivot in the Z_p template")
        row = red.data[pivot_row[c]]
        if np.any(row[:n_e + n_r][np.arange(n_e + n_r) != c]):
            raise ValidationError(f"row for reducible {r} is not of the form [0 I -M']")
        mprime[r] = [(-int(v)) % p for v in row[n_e + n_r:]]
    return _assemble_action(t, mprime, lambda: 1, spec)


def _assemble_action(t: SolverTemplate, mprime: dict, unit, spec=None):
    pos = {m: k for k, m in enumerate(t.basis)}
    rows = []
    for b in t.basis:
        m = mono_mul(t.alpha, b)
        if m in pos:
            row = [0] * len(t.basis)
            row[pos[m]] = unit()
        else:
            row = list(mprime[m])
        rows.append(row)
    return ZpMatrix(rows, spec) if spec is not None else rows


def validate_template(t: SolverTemplate, problem: ProblemSpec, spec: FieldSpec, rng) -> dict:
    """Check the template on a fresh Z_p instance.

    The template action matrix must equal the Gröbner-basis action matrix of
    the same instance and, when the sampler knows the ground truth, satisfy
    ``M b(x*) = alpha(x*) b(x*)`` exactly.
    """
    inputs, gt = problem.rand_arg_zp(spec, rng)
    flat = problem.flatten_inputs(inputs)
    M = zp_action_matrix(t, flat, spec)
    F = problem.instantiate(inputs, spec)
    G = buchberger(F, problem.order)
    B_inst = normal_set(G, problem.unknown_names)
    report = {"gb_match": None, "ground_truth": None}
    if B_inst == list(t.basis):
        M_gb = action_matrix_zp(G, t.basis, t.alpha)
        if M_gb != M:
            raise ValidationError("template action matrix differs from the Gröbner-basis one")
        report["gb_match"] = True
    if gt and all(k in gt for k in problem.unknown):
        x = [int(v) % spec.p for v in problem.flatten_unknowns(gt)]
        b = [Polynomial({m: 1}, t.nvars, spec).evaluate(x) for m in t.basis]
        a = Polynomial({tuple(t.alpha): 1}, t.nvars, spec).evaluate(x)
        Mb = M.matvec(b)
        if any((u - a * v) % spec.p for u, v in zip(Mb, b)):
            raise ValidationError("M b(x*) != alpha(x*) b(x*) on the held-out instance")
        report["ground_truth"] = True
    if report["gb_match"] is None and report["ground_truth"] is None:
        raise ValidationError("held-out instance could not be checked (no ground truth, basis mismatch)")
    return report


# -- generation -----------------------------------------------------------------------------


def _support(eqs: Sequence[Polynomial]) -> list:
    return [set(f.terms) for f in eqs]


def generate_template(problem: ProblemSpec, options: GeneratorOptions | None = None
                      ) -> SolverTemplate:
    opts = options or GeneratorOptions()
    spec = FieldSpec(opts.p)
    order = MonomialOrder(opts.order)
    if order != problem.order:
        problem.order = order
    rng = np.random.default_rng(opts.seed)
    names = problem.unknown_names
    nv = problem.nvars
    alpha = _resolve_alpha(opts.alpha, names, nv)
    sym_eqs, _ = problem.symbolic
    supports = _support(sym_eqs)

    trials = []
    for trial in range(opts.trials):
        inputs, gt = problem.rand_arg_zp(spec, rng)
        F = problem.instantiate(inputs, spec)
        if any(f.is_zero() for f in F):
            trials.append((None, None, None, None))
            continue
        G = buchberger(F, order)
        try:
            B = normal_set(G, names)
        except NotZeroDimensionalError as exc:
            log.info("trial %d: %s", trial, exc)
            trials.append((None, None, None, None))
            continue
        trials.append((len(B), B, G, F))
    dims = Counter(d for d, *_ in trials if d is not None)
    if not dims:
        raise NotZeroDimensionalError(f"{problem.name}: no trial produced a zero-dimensional ideal")
    dim, votes = dims.most_common(1)[0]
    if votes * 2 <= opts.trials:
        raise UnstableDimensionError(
            f"{problem.name}: quotient dimensions {dict(dims)} have no majority in {opts.trials} trials")
    if dim == 0:
        raise TemplateError(f"{problem.name}: the equations have no solutions (unit ideal)")
    kept = [tr for tr in trials if tr[0] == dim]
    log.info("%s: quotient dimension %d in %d/%d trials", problem.name, dim, votes, opts.trials)

    basis = set()
    for _, B, _, _ in kept:
        basis.update(B)
    basis = order.sort(basis)
    bset = set(basis)
    reducible = order.sort({mono_mul(alpha, b) for b in basis} - bset)

    multipliers: list[set] = [set() for _ in sym_eqs]
    for _, B, G, F in kept:
        lifts = []
        for r in reducible:
            _, h = lift(Polynomial({r: 1}, nv, spec), G)
            lifts.append(h)
        if opts.syzygy_reduction:
            cap = max((hj.total_degree() + F[j].total_degree()
                       for h in lifts for j, hj in enumerate(h) if hj), default=0)
            syz = syzygy_basis(F, buchberger(F, order, track_syzygies=True), max_degree=cap)
            lifts = [syzygy_reduce(h, syz) for h in lifts]
        for h in lifts:
            for j, hj in enumerate(h):
                multipliers[j].update(hj.terms)

    rows = [(m, j) for j in range(len(sym_eqs)) for m in order.sort(multipliers[j])]
    cols = set(bset)
    for m, j in rows:
        cols.update(mono_mul(m, mu) for mu in supports[j])
    missing = [r for r in reducible if r not in cols]
    if missing:
        raise ValidationError(f"reducible monomials {missing} do not appear in the template")
    excessive = order.sort(cols - bset - set(reducible))

    t = SolverTemplate(
        problem=problem.name, unknowns=list(names), known={k: list(v) for k, v in problem.known.items()},
        num_equations=len(sym_eqs), alpha=alpha, basis=basis, excessive=excessive,
        reducible=reducible, rows=rows, program=problem.program, solution_count=dim,
        order=order.kind,
        metadata={"prime": spec.p, "seed": opts.seed, "trials": opts.trials,
                  "dimension_votes": votes, "syzygy_reduction": opts.syzygy_reduction,
                  "triangular_reduction": opts.triangular_reduction})
    t.extraction_plan()
    t.metadata["validation"] = validate_template(t, problem, spec, rng)

    if opts.detect_symmetry:
        t.symmetry = detect_symmetries(sym_eqs)
    if opts.triangular_reduction:
        t = reduce_triangular(t, spec, rng)
        t.metadata["validation_reduced"] = validate_template(t, problem, spec, rng)
    return t


def reduce_triangular(t: SolverTemplate, spec: FieldSpec | None = None, rng=None) -> SolverTemplate:
    """Greedy upper-triangular leading block over the excessive columns.

    Repeatedly picks the unused excessive column hit by the fewest still-eligible
    rows (a row stays eligible while it is zero in every chosen column), and pairs
    it with the sparsest eligible row whose entry there is structurally nonzero
    and nonzero on a random Z_p probe.  Rows hit by a chosen column leave the
    eligible pool, which keeps the block upper triangular.
    """
    spec = spec or FieldSpec(t.metadata.get("prime", DEFAULT_PRIME))
    rng = rng if rng is not None else np.random.default_rng(t.metadata.get("seed", 0))
    S = t.structure()
    probe = assemble_zp(t, _random_flat_inputs(t.program.inputs, spec, rng), spec).data
    n_e = len(t.excessive)
    row_nnz = S.sum(axis=1)
    eligible = set(range(len(t.rows)))
    avail = list(range(n_e))
    chosen_r, chosen_c = [], []
    while avail and eligible:
        best = None
        el = np.array(sorted(eligible))
        for c in avail:
            hits = el[S[el, c]]
            cands = [r for r in hits if probe[r, c] != 0]
            if not cands:
                continue
            score = (len(hits), c)
            if best is None or score < best[0]:
                r = min(cands, key=lambda r: (row_nnz[r], r))
                best = (score, r, c, hits)
        if best is None:
            break
        _, r, c, hits = best
        chosen_r.append(int(r))
        chosen_c.append(int(c))
        eligible -= set(int(h) for h in hits)
        avail.remove(c)
    out = dataclasses.replace(t)
    out.reduction = TriangularPlan(tuple(chosen_r), tuple(chosen_c)) if chosen_r else None
    out.metadata = dict(t.metadata, triangular_block=len(chosen_r))
    return out


# -- serialization -----------------------------------------------------------------------


def to_json(t: SolverTemplate) -> dict:
    return {
        "format": FORMAT_NAME,
        "schema_version": SCHEMA_VERSION,
        "problem": t.problem,
        "unknowns": list(t.unknowns),
        "known": {k: list(v) for k, v in t.known.items()},
        "num_equations": t.num_equations,
        "order": t.order,
        "alpha": list(t.alpha),
        "solution_count": t.solution_count,
        "basis": [list(m) for m in t.basis],
        "excessive": [list(m) for m in t.excessive],
        "reducible": [list(m) for m in t.reducible],
        "rows": [[list(m), j] for m, j in t.rows],
        "symmetry": t.symmetry.to_json() if t.symmetry else None,
        "reduction": ({"rows": list(t.reduction.rows), "cols": list(t.reduction.cols)}
                      if t.reduction else None),
        "metadata": t.metadata,
        "program": t.program.to_json(),
    }


def serialize(t: SolverTemplate) -> bytes:
    return (json.dumps(to_json(t), indent=1, sort_keys=False) + "\n").encode("utf-8")


def _monos(v) -> list:
    return [tuple(int(e) for e in m) for m in v]


def deserialize(data: bytes | str) -> SolverTemplate:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TemplateFormatError(f"template is not UTF-8 (byte offset {exc.start})") from None
    try:
        d = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TemplateFormatError(
            f"corrupt template: {exc.msg} at line {exc.lineno} column {exc.colno} (offset {exc.pos})"
        ) from None
    if not isinstance(d, dict) or d.get("format") != FORMAT_NAME:
        raise TemplateFormatError("not an elimination-template file")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise TemplateFormatError(
            f"unsupported schema version {d.get('schema_version')!r} (expected {SCHEMA_VERSION})")
    try:
        red = d.get("reduction")
        return SolverTemplate(
            problem=d["problem"], unknowns=list(d["unknowns"]),
            known={k: list(v) for k, v in d["known"].items()},
            num_equations=int(d["num_equations"]), alpha=tuple(d["alpha"]),
            basis=_monos(d["basis"]), excessive=_monos(d["excessive"]),
            reducible=_monos(d["reducible"]),
            rows=[(tuple(int(e) for e in m), int(j)) for m, j in d["rows"]],
            program=CoeffProgram.from_json(d["program"]),
            solution_count=int(d["solution_count"]), order=d.get("order", "grevlex"),
            symmetry=SymmetryDescriptor.from_json(d["symmetry"]) if d.get("symmetry") else None,
            reduction=TriangularPlan(tuple(red["rows"]), tuple(red["cols"])) if red else None,
            metadata=dict(d.get("metadata", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise TemplateFormatError(f"malformed template field: {exc}") from None


def save(t: SolverTemplate, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(t))


def load(path) -> SolverTemplate:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
