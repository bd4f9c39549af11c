"""Problem definitions: arguments, symbolic equations and instance samplers.

A problem subclasses :class:`ProblemSpec`, declares the shapes of its known
and unknown arguments, and implements

* :meth:`~ProblemSpec.gen_eqs_sym` -- equations as polynomials in the unknowns
  with symbolic coefficients over the knowns, plus named abbreviations;
* :meth:`~ProblemSpec.rand_arg_zp` -- a random instance over Z_p;
* :meth:`~ProblemSpec.rand_arg_rl` -- a random instance over the reals.

Samplers return ``(inputs, ground_truth)`` dicts keyed by argument name; the
ground truth may be empty when the sampler cannot know it.
"""

from __future__ import annotations

from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .coeffs import CoeffProgram, build_coeff_program, scalar_names, symbols
from .poly import GREVLEX, MonomialOrder, Polynomial
from .zp_field import (FieldSpec, SamplingError, ZpMatrix, zp_inv, zp_nullspace,
                       zp_quat_to_rotation, zp_rand_unit, zp_solve)

MAX_RESAMPLES = 1000


class ProblemSpec:
    name: str = "problem"
    known: dict[str, tuple] = {}
    unknown: dict[str, tuple] = {}
    order: MonomialOrder = GREVLEX

    # -- the four hooks -------------------------------------------------

    def gen_arg_subs(self) -> tuple[dict, dict]:
        """Symbols for the knowns and polynomial variables for the unknowns."""
        in_subs = {name: symbols(name, shape) for name, shape in self.known.items()}
        nv = self.nvars
        out_subs = {}
        k = 0
        for name, shape in self.unknown.items():
            size = int(np.prod(shape)) if shape else 1
            vs = [Polynomial.variable(k + i, nv, coef=1) for i in range(size)]
            k += size
            out_subs[name] = vs[0] if shape == () else np.array(vs, dtype=object).reshape(shape)
        return in_subs, out_subs

    def gen_eqs_sym(self) -> tuple[list, dict]:
        raise NotImplementedError

    def rand_arg_zp(self, spec: FieldSpec, rng: np.random.Generator) -> tuple[dict, dict]:
        raise NotImplementedError

    def rand_arg_rl(self, rng: np.random.Generator) -> tuple[dict, dict]:
        raise NotImplementedError

    # -- derived --------------------------------------------------------

    @cached_property
    def unknown_names(self) -> list[str]:
        return [n for name, shape in self.unknown.items() for n in scalar_names(name, shape)]

    @cached_property
    def known_names(self) -> list[str]:
        return [n for name, shape in self.known.items() for n in scalar_names(name, shape)]

    @property
    def nvars(self) -> int:
        return len(self.unknown_names)

    @cached_property
    def symbolic(self) -> tuple[list, dict]:
        eqs, abbr = self.gen_eqs_sym()
        return [_as_expr_poly(e, self.nvars) for e in eqs], dict(abbr)

    @cached_property
    def program(self) -> CoeffProgram:
        eqs, abbr = self.symbolic
        return build_coeff_program(eqs, abbr, monomial_key=self.order.key)

    @property
    def num_equations(self) -> int:
        return len(self.symbolic[0])

    def flatten_inputs(self, inputs: Mapping[str, object]) -> dict:
        flat = {}
        for name, shape in self.known.items():
            if name not in inputs:
                raise KeyError(f"missing binding for known argument {name!r}")
            arr = np.asarray(inputs[name], dtype=object)
            if arr.shape != tuple(shape):
                raise ValueError(f"argument {name!r} has shape {arr.shape}, expected {tuple(shape)}")
            for n, v in zip(scalar_names(name, shape), arr.reshape(-1)):
                flat[n] = v
        return flat

    def flatten_unknowns(self, out: Mapping[str, object]) -> list:
        vals = []
        for name, shape in self.unknown.items():
            vals.extend(np.asarray(out[name], dtype=object).reshape(-1).tolist())
        return vals

    def unflatten_unknowns(self, values: Sequence) -> dict:
        out, k = {}, 0
        for name, shape in self.unknown.items():
            size = int(np.prod(shape)) if shape else 1
            chunk = list(values[k:k + size])
            k += size
            out[name] = chunk[0] if shape == () else np.array(chunk).reshape(shape)
        return out

    def instantiate(self, inputs: Mapping[str, object], field: FieldSpec | None = None) -> list:
        return instantiate_program(self.program, self.num_equations, self.nvars,
                                   self.flatten_inputs(inputs), field)

    def ground_truth_error(self, inputs: Mapping[str, object], values: Sequence, gt: Mapping) -> float:
        """Distance of a solution (flat unknown values) from the sampled ground truth."""
        x = np.asarray(values, dtype=complex)
        g = np.asarray(self.flatten_unknowns(gt), dtype=float)
        return float(np.linalg.norm(x - g) / max(1.0, np.linalg.norm(g)))

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _as_expr_poly(e, nvars: int) -> Polynomial:
    if isinstance(e, Polynomial):
        return e
    return Polynomial.constant(e, nvars)


def instantiate_program(program: CoeffProgram, num_equations: int, nvars: int,
                        flat_inputs: Mapping[str, object], field: FieldSpec | None = None
                        ) -> list[Polynomial]:
    """Evaluate a coefficient program and assemble the concrete equations."""
    vals = program.evaluate(flat_inputs, field)
    terms = [dict() for _ in range(num_equations)]
    for e, m, v in zip(program.output_equations, program.output_monomials, vals):
        terms[e][m] = v
    return [Polynomial(t, nvars, field) for t in terms]


def instantiate(problem: ProblemSpec, inputs: Mapping[str, object],
                field: FieldSpec | None = None) -> list[Polynomial]:
    return problem.instantiate(inputs, field)


# -- linear-algebra helpers over object arrays of polynomials --------------------


def det2(m) -> object:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def det3(m) -> object:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def matmul(a, b):
    a = np.asarray(a, dtype=object)
    b = np.asarray(b, dtype=object)
    out = np.empty((a.shape[0], b.shape[1]), dtype=object)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = a[i, 0] * b[0, j]
            for k in range(1, a.shape[1]):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def skew(u):
    return np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]], dtype=object)


def cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]], dtype=object)


def rodrigues(s, u):
    """``2(u u^T - s [u]_x) + (s^2 - |u|^2) I`` for any coefficient type."""
    uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2]
    out = np.empty((3, 3), dtype=object)
    sk = skew(u)
    for i in range(3):
        for j in range(3):
            v = 2 * (u[i] * u[j] - s * sk[i][j]) if (i != j) else 2 * u[i] * u[j]
            if i == j:
                v = v + (s * s - uu)
            out[i, j] = v
    return out


def quat_to_rotation(q) -> np.ndarray:
    s, u = q[0], np.asarray(q[1:], dtype=float)
    return (2 * (np.outer(u, u) - s * np.array(skew(u), dtype=float))
            + (s * s - u @ u) * np.eye(3))


def _random_unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


# -- toy problems ----------------------------------------------------------------


class ToyUnivariate(ProblemSpec):
    """``x^2 - a``: two solutions ``x = +-sqrt(a)``."""

    name = "toy_univariate"
    known = {"a": ()}
    unknown = {"x": ()}

    def gen_eqs_sym(self):
        in_, out = self.gen_arg_subs()
        x = out["x"]
        return [x * x - in_["a"]], {}

    def rand_arg_zp(self, spec, rng):
        x = int(rng.integers(1, spec.p))
        return {"a": x * x % spec.p}, {"x": x}

    def rand_arg_rl(self, rng):
        x = float(rng.uniform(0.5, 2.0)) * float(rng.choice([-1, 1]))
        return {"a": x * x}, {"x": x}


class ToyConics(ProblemSpec):
    """Two generic conics in (x, y): four solutions by Bezout."""

    name = "toy_conics"
    known = {"a": (6,), "b": (6,)}
    unknown = {"x": (), "y": ()}

    def gen_eqs_sym(self):
        in_, out = self.gen_arg_subs()
        x, y = out["x"], out["y"]
        mons = [x * x, x * y, y * y, x, y]

        def conic(c):
            acc = c[5] + 0 * x
            for ci, m in zip(c[:5], mons):
                acc = acc + m * ci
            return acc
        return [conic(in_["a"]), conic(in_["b"])], {}

    def _complete(self, c, x, y, mod=None):
        vals = [x * x, x * y, y * y, x, y]
        s = sum(ci * v for ci, v in zip(c, vals))
        return (-s) % mod if mod else -s

    def rand_arg_zp(self, spec, rng):
        p = spec.p
        x, y = (int(v) for v in rng.integers(0, p, size=2))
        a = [int(v) for v in rng.integers(0, p, size=5)]
        b = [int(v) for v in rng.integers(0, p, size=5)]
        a.append(self._complete(a, x, y, p))
        b.append(self._complete(b, x, y, p))
        return {"a": a, "b": b}, {"x": x, "y": y}

    def rand_arg_rl(self, rng):
        x, y = rng.uniform(-1, 1, size=2)
        a = list(rng.uniform(-1, 1, size=5))
        b = list(rng.uniform(-1, 1, size=5))
        a.append(self._complete(a, x, y))
        b.append(self._complete(b, x, y))
        return {"a": np.array(a), "b": np.array(b)}, {"x": float(x), "y": float(y)}


class ToyEven(ProblemSpec):
    """``x^2 + y^2 - a, x^2 y - b``: even in x, six solutions in three sign pairs."""

    name = "toy_even"
    known = {"a": (), "b": ()}
    unknown = {"x": (), "y": ()}

    def gen_eqs_sym(self):
        in_, out = self.gen_arg_subs()
        x, y = out["x"], out["y"]
        return [x * x + y * y - in_["a"], x * x * y - in_["b"]], {}

    def rand_arg_zp(self, spec, rng):
        p = spec.p
        x, y = (int(v) for v in rng.integers(1, p, size=2))
        return {"a": (x * x + y * y) % p, "b": x * x * y % p}, {"x": x, "y": y}

    def rand_arg_rl(self, rng):
        x, y = rng.uniform(0.5, 1.5, size=2) * rng.choice([-1, 1], size=2)
        return {"a": x * x + y * y, "b": x * x * y}, {"x": float(x), "y": float(y)}


# -- five-point relative pose ------------------------------------------------------


class RelPose5pt(ProblemSpec):
    """Essential matrix from five correspondences.

    ``E = x NE[0] + y NE[1] + z NE[2] + NE[3]`` with ``NE`` a basis of the
    nullspace of the epipolar constraints; equations are ``det E = 0`` and the
    nine entries of ``2 E E^T E - tr(E E^T) E = 0``.
    """

    name = "relpose_5pt"
    known = {"NE": (4, 3, 3)}
    unknown = {"x": (), "y": (), "z": ()}

    def __init__(self, sampler: str = "generative"):
        if sampler not in ("generative", "simple"):
            raise ValueError(f"unknown sampler {sampler!r}")
        self.sampler = sampler
        if sampler == "simple":
            self.name = "relpose_5pt_simple"

    def gen_eqs_sym(self):
        in_, out = self.gen_arg_subs()
        NE = in_["NE"]
        w = [out["x"], out["y"], out["z"]]
        E = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                E[i, j] = w[0] * NE[0, i, j] + w[1] * NE[1, i, j] + w[2] * NE[2, i, j] + NE[3, i, j]
        EEt = matmul(E, E.T)
        tr = EEt[0, 0] + EEt[1, 1] + EEt[2, 2]
        EEtE = matmul(EEt, E)
        eqs = [det3(E)]
        for i in range(3):
            for j in range(3):
                eqs.append(2 * EEtE[i, j] - tr * E[i, j])
        return eqs, {}

    @staticmethod
    def epipolar_rows(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Rows ``kron(x2_i, x1_i)`` so that ``rows @ vec(E) = x2^T E x1`` (row-major vec)."""
        return np.stack([np.kron(b, a) for a, b in zip(x1, x2)])

    def rand_arg_zp(self, spec, rng):
        if self.sampler == "simple":
            return {"NE": rng.integers(1, spec.p, size=(4, 3, 3)).tolist()}, {}
        p = spec.p
        for _ in range(MAX_RESAMPLES):
            q = zp_rand_unit(4, spec, rng)
            R = zp_quat_to_rotation(q, spec).tolist()
            t = zp_rand_unit(3, spec, rng)
            rows = []
            ok = True
            for _pt in range(5):
                X = [int(v) for v in rng.integers(0, p, size=3)]
                Y = [(sum(R[i][k] * X[k] for k in range(3)) + t[i]) % p for i in range(3)]
                if X[2] == 0 or Y[2] == 0:
                    ok = False
                    break
                x1 = [v * zp_inv(X[2], spec) % p for v in X]
                x2 = [v * zp_inv(Y[2], spec) % p for v in Y]
                rows.append([a * b % p for a in x2 for b in x1])
            if not ok:
                continue
            N = zp_nullspace(ZpMatrix(rows, spec))
            if N.cols != 4:
                continue
            tx = [[0, -t[2], t[1]], [t[2], 0, -t[0]], [-t[1], t[0], 0]]
            E = [[sum(tx[i][k] * R[k][j] for k in range(3)) % p for j in range(3)] for i in range(3)]
            c = zp_solve(N, [v for row in E for v in row])
            if c is None or c[3] == 0:
                continue
            s = zp_inv(c[3], spec)
            NE = [[[int(N.data[3 * i + j, k]) for j in range(3)] for i in range(3)] for k in range(4)]
            return {"NE": NE}, {"x": c[0] * s % p, "y": c[1] * s % p, "z": c[2] * s % p,
                                "E": E}
        raise SamplingError("could not draw a non-degenerate five-point instance")

    def rand_arg_rl(self, rng):
        for _ in range(MAX_RESAMPLES):
            R = quat_to_rotation(_random_unit(rng, 4))
            t = _random_unit(rng, 3)
            X = np.column_stack([rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5), rng.uniform(2, 4, 5)])
            Y = X @ R.T + t
            if np.any(Y[:, 2] < 0.5):
                continue
            x1 = X / X[:, 2:]
            x2 = Y / Y[:, 2:]
            A = self.epipolar_rows(x1, x2)
            _, sv, vt = np.linalg.svd(A)
            if sv[4] < 1e-6 * sv[0]:
                continue
            N = vt[5:].T                      # 9 x 4
            E = np.array(skew(t), dtype=float) @ R
            c, *_ = np.linalg.lstsq(N, E.reshape(-1), rcond=None)
            if abs(c[3]) < 1e-8 * np.linalg.norm(c):
                continue
            NE = np.stack([N[:, k].reshape(3, 3) for k in range(4)])
            return ({"NE": NE},
                    {"x": c[0] / c[3], "y": c[1] / c[3], "z": c[2] / c[3], "E": E,
                     "x1": x1, "x2": x2})
        raise SamplingError("could not draw a non-degenerate five-point instance")

    def ground_truth_error(self, inputs, values, gt) -> float:
        if "E" not in gt:
            return super().ground_truth_error(inputs, values, gt)
        w = np.asarray(values)
        if np.max(np.abs(w.imag)) > 1e-6 * (1 + np.max(np.abs(w.real))):
            return float("inf")
        return self.essential_error(self.essential(np.asarray(inputs["NE"], float), w.real),
                                    np.asarray(gt["E"], float))

    @staticmethod
    def essential(NE, w) -> np.ndarray:
        NE = np.asarray(NE)
        return w[0] * NE[0] + w[1] * NE[1] + w[2] * NE[2] + NE[3]

    @staticmethod
    def essential_error(E: np.ndarray, E_gt: np.ndarray) -> float:
        """``min_{+-} || E/|E| -+ E_gt/|E_gt| ||_F``."""
        a = E / np.linalg.norm(E)
        b = E_gt / np.linalg.norm(E_gt)
        return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


# -- four-point relative pose with known rotation angle ------------------------------


class RelPose4ptRotationAngle(ProblemSpec):
    """Relative pose from four correspondences when the rotation angle is known.

    The rotation is ``R(s, u)`` with ``s`` known; for each cyclic triplet
    ``(i, j, k)`` the 2x2 matrix of epipolar quantities built from
    ``p_ij = q_i x q_j`` must be singular, and ``u^T u + s^2 = 1``.
    """

    name = "relpose_4pt_rotation_angle"
    N = 4
    known = {"q": (3, 4), "qq": (3, 4), "s": ()}
    unknown = {"u": (3,)}

    def _Fijk(self, i, j, k, q, qq, R):
        pij = symbols(f"p_{i}{j}", (3,))
        pik = symbols(f"p_{i}{k}", (3,))
        ppij = symbols(f"pp_{i}{j}", (3,))
        ppik = symbols(f"pp_{i}{k}", (3,))

        def bil(a, b):          # a^T R b
            acc = None
            for r in range(3):
                for c in range(3):
                    term = R[r, c] * (a[r] * b[c])
                    acc = term if acc is None else acc + term
            return acc

        F = [[bil(qq[:, j], pij), bil(ppij, q[:, j])],
             [bil(qq[:, k], pik), bil(ppik, q[:, k])]]
        abbr = {}
        for name_vec, val in ((pij, cross(q[:, i], q[:, j])), (pik, cross(q[:, i], q[:, k])),
                              (ppij, cross(qq[:, i], qq[:, j])), (ppik, cross(qq[:, i], qq[:, k]))):
            for s_, v in zip(name_vec, val):
                abbr[s_.name] = v
        return F, abbr

    def gen_eqs_sym(self):
        in_, out = self.gen_arg_subs()
        u, s = out["u"], in_["s"]
        R = rodrigues(s, u)
        eqs, abbr = [], {}
        for i in range(self.N):
            j = (i + 1) % self.N
            k = (i + 2) % self.N
            F, sub = self._Fijk(i, j, k, in_["q"], in_["qq"], R)
            eqs.append(det2(F))
            abbr.update(sub)
        eqs.append(u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + s * s - 1)
        return eqs, abbr

    def rand_arg_zp(self, spec, rng):
        p = spec.p
        quat = zp_rand_unit(4, spec, rng)
        R = zp_quat_to_rotation(quat, spec).tolist()
        t = zp_rand_unit(3, spec, rng)
        Q = [[int(v) for v in row] for row in rng.integers(1, p, size=(3, self.N))]
        QQ = [[(sum(R[i][k] * Q[k][c] for k in range(3)) + t[i]) % p for c in range(self.N)]
              for i in range(3)]
        return {"q": Q, "qq": QQ, "s": quat[0]}, {"u": quat[1:]}

    def rand_arg_rl(self, rng):
        quat = rng.random(4)
        quat /= np.linalg.norm(quat)
        R = quat_to_rotation(quat)
        t = rng.random(3)
        t /= np.linalg.norm(t)
        Q = rng.random((3, self.N))
        QQ = R @ Q + t[:, None]
        return {"q": Q, "qq": QQ, "s": float(quat[0])}, {"u": quat[1:].copy()}


REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "toy_univariate": ToyUnivariate,
    "toy_conics": ToyConics,
    "toy_even": ToyEven,
    "relpose_5pt": RelPose5pt,
    "relpose_5pt_simple": lambda: RelPose5pt("simple"),
    "relpose_4pt_rotation_angle": RelPose4ptRotationAngle,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(sorted(REGISTRY))}") from None


def toy_univariate() -> ProblemSpec:
    return ToyUnivariate()


def toy_conics() -> ProblemSpec:
    return ToyConics()


def relpose_5pt(sampler: str = "generative") -> ProblemSpec:
    return RelPose5pt(sampler)


def relpose_4pt_rotation_angle() -> ProblemSpec:
    return RelPose4ptRotationAngle()
