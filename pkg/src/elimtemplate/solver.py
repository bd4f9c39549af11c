"""Online solver: template assembly, elimination and action-matrix eigenproblem.

Everything here runs in floating point on a single real instance.  Given a
:class:`~elimtemplate.template.SolverTemplate` and bindings for the known
arguments, :func:`solve` builds the coefficient matrix, eliminates it to the
action matrix and reads the solutions off its eigenvectors (``method="eigen"``)
or off the real roots of its characteristic polynomial
(``method="charpoly"``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .poly import Polynomial, mono_mul
from .template import SolverTemplate

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
REAL_TOL = 1e-6
MIN_UNIT_ENTRY = 1e-12
BISECT_WIDTH = 1e-12


class NumericFailure(ArithmeticError):
    """The online solver could not finish."""


class DegenerateInstanceError(NumericFailure):
    """A reducible column has no usable pivot on this instance."""


@dataclass
class Solution:
    values: np.ndarray          # complex, one entry per unknown
    eigenvalue: complex
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def is_real(self) -> bool:
        v = self.values
        return bool(np.all(np.abs(v.imag) <= REAL_TOL * (1.0 + np.abs(v.real))))

    @property
    def real(self) -> np.ndarray:
        return self.values.real.copy()

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0


@dataclass
class SolutionSet:
    unknowns: list
    solutions: list
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def real_solutions(self) -> list:
        return [s for s in self.solutions if s.is_real]

    def as_arrays(self, real_only: bool = False) -> np.ndarray:
        sols = self.real_solutions() if real_only else self.solutions
        if real_only:
            return np.array([s.real for s in sols]).reshape(len(sols), len(self.unknowns))
        return np.array([s.values for s in sols]).reshape(len(sols), len(self.unknowns))


# -- assembly and elimination ------------------------------------------------------------


def assemble(t: SolverTemplate, inputs: dict, flat: bool = False) -> np.ndarray:
    """Dense float template matrix for one instance (``inputs`` keyed by argument name)."""
    flat_inputs = inputs if flat else t.flatten_inputs(inputs)
    try:
        vals = np.asarray(t.program.evaluate({k: float(v) for k, v in flat_inputs.items()}),
                          dtype=float)
    except ZeroDivisionError as exc:
        raise NumericFailure(f"coefficient evaluation divided by zero: {exc}") from None
    if not np.all(np.isfinite(vals)):
        raise NumericFailure("non-finite coefficient in template assembly")
    ri, ci, oi = t.layout()
    C = np.zeros(t.shape)
    C[ri, ci] = vals[oi]
    return C


def _triangular_schur(C: np.ndarray, t: SolverTemplate):
    plan = t.reduction
    rows, cols = list(plan.rows), list(plan.cols)
    rset, cset = set(rows), set(cols)
    other_r = [r for r in range(C.shape[0]) if r not in rset]
    other_c = [c for c in range(C.shape[1]) if c not in cset]
    U = C[np.ix_(rows, cols)]
    d = np.abs(np.diag(U))
    if np.any(d <= PIVOT_TOL * max(np.max(np.abs(U)), 1e-300)):
        raise DegenerateInstanceError("zero on the diagonal of the triangular block")
    Y = scipy.linalg.solve_triangular(U, C[np.ix_(rows, other_c)], lower=False)
    return C[np.ix_(other_r, other_c)] - C[np.ix_(other_r, cols)] @ Y


def eliminate(C: np.ndarray, t: SolverTemplate) -> np.ndarray:
    """Reduce the template to ``M'`` (one row per reducible monomial).

    Gauss-Jordan with partial pivoting over the excessive and reducible
    columns.  A column whose best remaining entry is below ``PIVOT_TOL`` times
    its original scale is treated as dependent; that is fine for excessive
    columns and fatal for reducible ones.
    """
    n_e = len(t.excessive)
    if t.reduction is not None and t.reduction.size:
        C = _triangular_schur(C, t)
        n_e -= t.reduction.size
    A = np.array(C, dtype=float, copy=True)
    n_r = len(t.reducible)
    nrows = A.shape[0]
    scale = np.max(np.abs(A), axis=0)
    glob = float(np.max(scale)) if scale.size else 0.0
    if glob == 0.0:
        raise DegenerateInstanceError("template matrix is zero")
    r = 0
    pivot_row = {}
    for c in range(n_e + n_r):
        if r >= nrows:
            break
        col = np.abs(A[r:, c])
        i = int(np.argmax(col)) + r
        if col[i - r] <= PIVOT_TOL * max(scale[c], 1e-300) or col[i - r] <= 1e-14 * glob:
            continue
        if i != r:
            A[[r, i]] = A[[i, r]]
        A[r] /= A[r, c]
        f = A[:, c].copy()
        f[r] = 0.0
        nz = np.nonzero(f)[0]
        if nz.size:
            A[nz] -= np.outer(f[nz], A[r])
        pivot_row[c] = r
        r += 1
    missing = [t.reducible[k] for k in range(n_r) if n_e + k not in pivot_row]
    if missing:
        raise DegenerateInstanceError(f"no pivot for reducible monomial(s) {missing}")
    rows = [pivot_row[n_e + k] for k in range(n_r)]
    return -A[rows, n_e + n_r:]


def action_matrix(mprime: np.ndarray, t: SolverTemplate) -> np.ndarray:
    pos = {m: k for k, m in enumerate(t.basis)}
    red = {m: k for k, m in enumerate(t.reducible)}
    n = len(t.basis)
    M = np.zeros((n, n))
    for i, b in enumerate(t.basis):
        m = mono_mul(t.alpha, b)
        if m in pos:
            M[i, pos[m]] = 1.0
        else:
            M[i] = mprime[red[m]]
    return M


# -- eigenvalue routes -------------------------------------------------------------------------


def eigen_solve(M: np.ndarray):
    """Eigenvalues and right eigenvectors (columns) of the action matrix."""
    if not np.all(np.isfinite(M)):
        raise NumericFailure("action matrix has non-finite entries")
    try:
        w, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"eigendecomposition failed: {exc}") from None
    return w, V


def charpoly_danilevsky(M: np.ndarray) -> np.ndarray:
    """Characteristic polynomial (monic, descending powers) by Danilevsky's method.

    Rows are brought to companion form from the bottom up with a similarity
    transform per row.  The pivot for row k is the largest entry in its first k
    columns, swapped into place.  If that row has vanished there the matrix is
    block upper triangular and the two blocks are handled separately.
    """
    A = np.array(M, dtype=float, copy=True)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("charpoly needs a square matrix")
    tol = 1e-14 * max(np.max(np.abs(A)) if A.size else 0.0, 1e-300)
    poly = np.array([1.0])
    end = n
    while end > 0:
        k = end - 1
        while k > 0:
            j = int(np.argmax(np.abs(A[k, :k])))
            if abs(A[k, j]) <= tol:
                break
            if j != k - 1:
                A[[j, k - 1]] = A[[k - 1, j]]
                A[:, [j, k - 1]] = A[:, [k - 1, j]]
            row = A[k, :end].copy()
            piv = row[k - 1]
            # A <- A S with S = I except row k-1 = -row/piv (diag 1/piv)
            A[:end, k - 1] /= piv
            others = [c for c in range(end) if c != k - 1]
            A[:end, others] -= np.outer(A[:end, k - 1], row[others])
            # A <- S^-1 A, S^-1 = I except row k-1 = row
            A[k - 1, :] = row @ A[:end, :]
            k -= 1
        # rows k..end-1 now form a companion block
        top = A[k, k:end]
        poly = np.convolve(poly, np.concatenate(([1.0], -top)))
        end = k
    return poly


def _trim(p: np.ndarray, rel: float = 1e-13) -> np.ndarray:
    """Drop leading coefficients that are negligible relative to the largest one."""
    p = np.asarray(p, dtype=float)
    s = np.max(np.abs(p)) if p.size else 0.0
    nz = np.nonzero(np.abs(p) > rel * s)[0] if s > 0 else []
    return p[nz[0]:] if len(nz) else np.zeros(1)


def sturm_chain(p: np.ndarray) -> list:
    """Sturm sequence of ``p``; each member is rescaled by a positive factor."""
    p0 = _trim(p)
    seq = [p0 / np.max(np.abs(p0))]
    if len(p0) < 2:
        return seq
    p1 = _trim(np.polyder(p0))
    seq.append(p1 / np.max(np.abs(p1)))
    while len(seq[-1]) > 1:
        _, rem = np.polydiv(seq[-2], seq[-1])
        # remainders at roundoff level (relative to the dividend) mean the chain has hit the gcd
        rem = -np.where(np.abs(rem) > 1e-10 * np.max(np.abs(seq[-2])), rem, 0.0)
        rem = _trim(rem, 0.0)
        if not np.any(rem):
            break
        seq.append(rem / np.max(np.abs(rem)))
    return seq


def _variations(chain: list, x: float) -> int:
    signs = [np.sign(np.polyval(q, x)) for q in chain]
    signs = [s for s in signs if s != 0]
    return int(sum(1 for a, b in zip(signs, signs[1:]) if a != b))


def cauchy_bound(p: np.ndarray) -> float:
    p = _trim(p)
    return 1.0 + float(np.max(np.abs(p[1:] / p[0]))) if len(p) > 1 else 1.0


def _newton(p: np.ndarray, x: float, steps: int = 3) -> float:
    dp = np.polyder(p)
    for _ in range(steps):
        d = np.polyval(dp, x)
        if d == 0:
            break
        step = np.polyval(p, x) / d
        if not np.isfinite(step):
            break
        x -= step
    return x


def sturm_real_roots(p: np.ndarray) -> np.ndarray:
    """Distinct real roots: Sturm isolation in the Cauchy bound, bisection, Newton polish."""
    p = _trim(p)
    if len(p) < 2:
        return np.zeros(0)
    chain = sturm_chain(p)
    bound = cauchy_bound(p)
    roots = []
    stack = [(-bound, bound, _variations(chain, -bound), _variations(chain, bound))]
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count <= 0:
            continue
        width_tol = BISECT_WIDTH * max(1.0, abs(a), abs(b))
        if count == 1 or b - a <= width_tol:
            roots.append(_refine(p, a, b))
            continue
        mid = 0.5 * (a + b)
        if np.polyval(p, mid) == 0.0:
            mid += 0.25 * (b - a) * 1e-3
        vm = _variations(chain, mid)
        stack.append((mid, b, vm, vb))
        stack.append((a, mid, va, vm))
    out = np.array(sorted(roots))
    return out


def _refine(p: np.ndarray, a: float, b: float) -> float:
    fa, fb = np.polyval(p, a), np.polyval(p, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) != np.sign(fb):
        while b - a > BISECT_WIDTH * max(1.0, abs(a), abs(b)):
            m = 0.5 * (a + b)
            fm = np.polyval(p, m)
            if fm == 0.0:
                return m
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        x = 0.5 * (a + b)
    else:
        x = 0.5 * (a + b)
    y = _newton(p, x)
    lo, hi = min(a, b), max(a, b)
    pad = hi - lo
    return y if lo - pad <= y <= hi + pad else x


def inverse_iteration(M: np.ndarray, lam: float, steps: int = 2) -> np.ndarray:
    n = M.shape[0]
    shift = lam + 1e-10 * max(1.0, abs(lam))
    A = M - shift * np.eye(n)
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise NumericFailure(f"inverse iteration failed: {exc}") from None
    v = np.ones(n) / np.sqrt(n)
    for _ in range(steps):
        v = scipy.linalg.lu_solve(lu, v)
        nv = np.linalg.norm(v)
        if not np.isfinite(nv) or nv == 0:
            raise NumericFailure("inverse iteration diverged")
        v /= nv
    return v


# -- solution extraction --------------------------------------------------------------------------


def _read_unknowns(v: np.ndarray, lam, plan: list) -> np.ndarray:
    x = np.empty(len(plan), dtype=complex)
    for k, step in enumerate(plan):
        if step[0] == "basis":
            x[k] = v[step[1]]
        elif step[0] == "ratio":
            num, den = max(step[1], key=lambda nd: abs(v[nd[1]]))
            x[k] = v[num] / v[den]
        else:
            x[k] = lam
    return x


def residuals(equations: list, x: np.ndarray) -> np.ndarray:
    """``|f_i(x)|`` for each equation."""
    out = []
    for f in equations:
        val = 0j
        for m, c in f.terms.items():
            val += c * np.prod([x[i] ** e for i, e in enumerate(m) if e])
        out.append(abs(val))
    return np.array(out)


def extract_solutions(eigvals, eigvecs, t: SolverTemplate, equations: list | None = None
                      ) -> SolutionSet:
    plan = t.extraction_plan()
    one_idx = t.basis.index(tuple([0] * t.nvars)) if tuple([0] * t.nvars) in t.basis else None
    sols, warns = [], []
    for i in range(len(eigvals)):
        v = np.asarray(eigvecs[:, i], dtype=complex)
        lam = complex(eigvals[i])
        if one_idx is not None:
            u = v[one_idx]
            if abs(u) < MIN_UNIT_ENTRY * max(np.linalg.norm(v), 1e-300):
                warns.append(f"eigenvector {i} skipped: monomial 1 entry vanishes")
                continue
            v = v / u
        x = _read_unknowns(v, lam, plan)
        if not np.all(np.isfinite(x)):
            warns.append(f"eigenvector {i} skipped: non-finite unknowns")
            continue
        res = residuals(equations, x) if equations is not None else np.zeros(0)
        sols.append(Solution(x, lam, res))
    return SolutionSet(list(t.unknowns), sols, warns)


def _canonical(x: np.ndarray, variables) -> bool:
    for k in variables:
        if abs(x[k]) > 1e-9 * (1 + np.max(np.abs(x))):
            re = x[k].real if abs(x[k].real) > 1e-12 * abs(x[k]) else x[k].imag
            return re > 0
    return True


def _apply_symmetry(ss: SolutionSet, t: SolverTemplate, expand: bool, equations) -> SolutionSet:
    sym = t.symmetry
    reps = [s for s in ss.solutions if _canonical(s.values, sym.variables)]
    if not expand:
        return SolutionSet(ss.unknowns, reps, ss.warnings)
    out = []
    for s in reps:
        out.append(s)
        y = np.array(sym.apply(list(s.values)), dtype=complex)
        if np.allclose(y, s.values, rtol=0, atol=1e-12 * (1 + np.max(np.abs(y)))):
            continue
        res = residuals(equations, y) if equations is not None else np.zeros(0)
        lam = -s.eigenvalue if _alpha_odd(t) else s.eigenvalue
        out.append(Solution(y, lam, res))
    return SolutionSet(ss.unknowns, out, ss.warnings)


def _alpha_odd(t: SolverTemplate) -> bool:
    return sum(t.alpha[k] for k in t.symmetry.variables) % 2 == 1


def solve(t: SolverTemplate, inputs: dict, method: str = "eigen", expand_symmetry: bool = False,
          flat: bool = False) -> SolutionSet:
    """Solve one real instance.

    With a detected sign symmetry only one solution per orbit is returned
    unless ``expand_symmetry`` is set.  The ``charpoly`` method returns real
    solutions only.
    """
    flat_inputs = inputs if flat else t.flatten_inputs(inputs)
    C = assemble(t, flat_inputs, flat=True)
    mprime = eliminate(C, t)
    M = action_matrix(mprime, t)
    equations = t.equations({k: float(v) for k, v in flat_inputs.items()})
    if method == "eigen":
        w, V = eigen_solve(M)
    elif method == "charpoly":
        if not np.all(np.isfinite(M)):
            raise NumericFailure("action matrix has non-finite entries")
        roots = sturm_real_roots(charpoly_danilevsky(M))
        w = roots.astype(complex)
        V = np.column_stack([inverse_iteration(M, r) for r in roots]) if len(roots) else \
            np.zeros((M.shape[0], 0))
    else:
        raise ValueError(f"unknown method {method!r}")
    ss = extract_solutions(w, V, t, equations)
    if method == "charpoly":
        ss.solutions = [s for s in ss.solutions if s.is_real]
    if t.symmetry is not None:
        ss = _apply_symmetry(ss, t, expand_symmetry, equations)
    return ss


def real_solutions(t: SolverTemplate, inputs: dict, **kw) -> list:
    """Real solutions as dicts keyed by unknown argument name."""
    ss = solve(t, inputs, **kw)
    return [dict(zip(t.unknowns, s.real)) for s in ss.real_solutions()]


def polynomial_at(f: Polynomial, x) -> complex:
    return f.evaluate(list(x))
