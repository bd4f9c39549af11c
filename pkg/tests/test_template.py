import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elimtemplate.groebner import NotZeroDimensionalError
from elimtemplate.poly import Polynomial
from elimtemplate.problems import ProblemSpec, get_problem
from elimtemplate.solver import solve
from elimtemplate.template import (SCHEMA_VERSION, GeneratorOptions, TemplateFormatError,
                                   UnstableDimensionError, ValidationError, deserialize,
                                   detect_symmetries, generate_template, reduce_triangular,
                                   serialize, validate_template, zp_action_matrix)
from elimtemplate.zp_field import FieldSpec

F = FieldSpec(30011)


class CubicDrift(ProblemSpec):
    """``a x^3 + b x^2 + x - 1`` with a sampler whose degree changes between trials."""

    name = "cubic_drift"
    known = {"a": (), "b": ()}
    unknown = {"x": ()}
    schedule = [(0, 0), (0, 1), (1, 0), (0, 0), (0, 1)]

    def __init__(self):
        self.calls = 0

    def gen_eqs_sym(self):
        i, o = self.gen_arg_subs()
        x = o["x"]
        return [x * x * x * i["a"] + x * x * i["b"] + x - 1], {}

    def rand_arg_zp(self, spec, rng):
        a, b = self.schedule[self.calls % len(self.schedule)]
        self.calls += 1
        return {"a": a, "b": b}, {}


class Underdetermined(ProblemSpec):
    name = "underdetermined"
    known = {"a": ()}
    unknown = {"x": (), "y": ()}

    def gen_eqs_sym(self):
        i, o = self.gen_arg_subs()
        return [o["x"] * o["y"] - i["a"]], {}

    def rand_arg_zp(self, spec, rng):
        return {"a": int(rng.integers(1, spec.p))}, {}


def test_univariate_layout(toy_template):
    t = toy_template
    assert t.rows == [((0,), 0)]
    assert t.columns == [(2,), (1,), (0,)]
    assert t.excessive == [] and t.reducible == [(2,)] and t.basis == [(1,), (0,)]
    assert t.solution_count == 2
    assert t.metadata["validation"] == {"gb_match": True, "ground_truth": True}


def test_five_point_template(five_pt_template):
    t = five_pt_template
    assert len(t.basis) == 10
    assert t.solution_count == 10
    assert t.metadata["validation"]["ground_truth"]
    assert set(t.columns) == set(t.excessive) | set(t.reducible) | set(t.basis)
    assert len(t.columns) == len(set(t.columns))
    assert [p[0] for p in t.extraction_plan()] == ["basis"] * 3


def test_template_invariants(four_pt_template):
    t = four_pt_template
    cols = set(t.columns)
    for r in t.reducible:
        assert r not in t.basis
        assert any(tuple(a + b for a, b in zip(t.alpha, bb)) == r for bb in t.basis)
    # every monomial of every row lands in a column
    ri, ci, _ = t.layout()
    assert ci.max() < len(cols)
    assert len(t.basis) == t.solution_count == 20


def test_unstable_dimension():
    with pytest.raises(UnstableDimensionError, match="majority"):
        generate_template(CubicDrift(), GeneratorOptions(trials=5))


def test_not_zero_dimensional():
    with pytest.raises(NotZeroDimensionalError):
        generate_template(Underdetermined())


def test_bad_alpha():
    with pytest.raises(ValueError):
        generate_template(get_problem("toy_univariate"), GeneratorOptions(alpha="w"))


def test_alpha_choice():
    t = generate_template(get_problem("toy_conics"), GeneratorOptions(alpha="y", seed=1))
    assert t.alpha == (0, 1)
    prob = get_problem("toy_conics")
    inputs, gt = prob.rand_arg_rl(np.random.default_rng(0))
    ss = solve(t, inputs)
    assert min(prob.ground_truth_error(inputs, s.values, gt) for s in ss) < 1e-9


def test_union_monotone():
    prob = get_problem("relpose_4pt_rotation_angle")
    small = generate_template(prob, GeneratorOptions(trials=1, seed=9))
    big = generate_template(get_problem("relpose_4pt_rotation_angle"),
                            GeneratorOptions(trials=3, seed=9))
    assert set(small.basis) <= set(big.basis)
    assert set(small.rows) <= set(big.rows)


def test_validation_catches_missing_rows(four_pt_template):
    t = dataclasses.replace(four_pt_template,
                            rows=[r for r in four_pt_template.rows if r[1] != 0])
    with pytest.raises(ValidationError):
        validate_template(t, get_problem("relpose_4pt_rotation_angle"), F,
                          np.random.default_rng(0))


def test_zp_action_matrix_eigen_relation(five_pt_template):
    prob = get_problem("relpose_5pt")
    t = five_pt_template
    inputs, gt = prob.rand_arg_zp(F, np.random.default_rng(77))
    M = zp_action_matrix(t, prob.flatten_inputs(inputs), F)
    x = [gt["x"], gt["y"], gt["z"]]
    b = [Polynomial({m: 1}, 3, F).evaluate(x) for m in t.basis]
    assert M.matvec(b) == [gt["x"] * v % F.p for v in b]


# -- symmetries --------------------------------------------------------------------------------


def _polys(nv, *dicts):
    return [Polynomial(d, nv) for d in dicts]


def test_symmetry_univariate():
    s = detect_symmetries(_polys(1, {(2,): 1, (0,): -4}))
    assert s.variables == (0,) and s.fold == 2 and s.residues == (0,)


def test_symmetry_none():
    assert detect_symmetries(_polys(2, {(1, 0): 1, (0, 1): 1, (0, 0): -1})) is None


def test_symmetry_joint_flip():
    eqs = _polys(2, {(2, 0): 1, (1, 1): 1, (0, 0): -1}, {(0, 2): 1, (0, 0): -2})
    assert detect_symmetries(eqs).variables == (0, 1)
    assert [d.variables for d in detect_symmetries(eqs, all_flips=True)] == [(0, 1)]


def test_symmetry_odd_residue():
    s = detect_symmetries(_polys(2, {(1, 1): 1, (1, 0): 3}, {(0, 2): 1, (0, 0): -1}))
    assert s.variables == (0,) and s.residues == (1, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symmetry_soundness(seed):
    rng = np.random.default_rng(seed)
    prob = get_problem("toy_even")
    s = detect_symmetries(prob.symbolic[0])
    inputs, _ = prob.rand_arg_zp(F, rng)
    eqs = prob.instantiate(inputs, F)
    x = [int(v) for v in rng.integers(0, F.p, size=2)]
    fx = [v % F.p for v in s.apply(x)]
    for f, r in zip(eqs, s.residues):
        sign = -1 if r else 1
        assert f.evaluate(fx) == sign * f.evaluate(x) % F.p


# -- triangular reduction -----------------------------------------------------------------------


def _check_upper_triangular(t):
    S = t.structure()
    rows, cols = t.reduction.rows, t.reduction.cols
    U = S[np.ix_(rows, cols)]
    assert np.all(np.diag(U))
    assert not np.any(np.tril(U, -1))
    assert all(c < len(t.excessive) for c in cols)


def test_triangular_no_excessive_is_noop(toy_template):
    assert reduce_triangular(toy_template).reduction is None


def test_triangular_block_structure(conics_template, four_pt_template):
    for t in (conics_template, four_pt_template):
        r = reduce_triangular(t, F, np.random.default_rng(0))
        assert r.reduction is not None and r.reduction.size > 0
        _check_upper_triangular(r)
        # the original template is untouched
        assert t.reduction is None
    assert reduce_triangular(four_pt_template, F, np.random.default_rng(0)).reduction.size >= 10


def test_triangular_validates():
    t = generate_template(get_problem("relpose_4pt_rotation_angle"),
                          GeneratorOptions(seed=5, triangular_reduction=True))
    assert t.metadata["validation_reduced"]["gb_match"]


# -- serialization -------------------------------------------------------------------------------


def test_round_trip(five_pt_template, even_template):
    for t in (five_pt_template, even_template):
        again = deserialize(serialize(t))
        assert again == t
        assert serialize(again) == serialize(t)
        assert again.symmetry == t.symmetry


def test_serialization_deterministic():
    a = serialize(generate_template(get_problem("toy_conics"), GeneratorOptions(seed=3)))
    b = serialize(generate_template(get_problem("toy_conics"), GeneratorOptions(seed=3)))
    assert a == b
    assert b"timestamp" not in a


def test_truncated_payload_reports_offset(five_pt_template):
    data = serialize(five_pt_template)
    with pytest.raises(TemplateFormatError, match=r"offset \d+"):
        deserialize(data[: len(data) // 2])


def test_version_and_format_checks(toy_template):
    import json
    d = json.loads(serialize(toy_template))
    d["schema_version"] = SCHEMA_VERSION + 1
    with pytest.raises(TemplateFormatError, match="schema version"):
        deserialize(json.dumps(d))
    with pytest.raises(TemplateFormatError, match="not an elimination-template"):
        deserialize(b"[1, 2]")
    with pytest.raises(TemplateFormatError, match="UTF-8"):
        deserialize(b"\xff\xfe")


def test_file_template_solves_identically(tmp_path, five_pt_template):
    from elimtemplate.template import load, save
    path = tmp_path / "t.gaps.json"
    save(five_pt_template, path)
    t2 = load(path)
    prob = get_problem("relpose_5pt")
    inputs, _ = prob.rand_arg_rl(np.random.default_rng(4))
    a = solve(five_pt_template, inputs).as_arrays()
    b = solve(t2, inputs).as_arrays()
    assert np.array_equal(a, b)
