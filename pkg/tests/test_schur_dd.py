from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.coefficients import CoefficientContext
from utils.complex_vs import SampleSet, draw_training_samples, residual_norm
from utils.frequency import ParameterPoint
from utils.mesh_fem import assemble, build_mesh, build_partition, extract_blocks
from utils.problems import OperatorTermSpec, get_problem
from utils.reference_solvers import direct_frequency_solve
from utils.schur_dd import (AffineSchur, approximate_X, approximate_Y, assemble_affine_S, assemble_interface_direct,
                            build_affine_F, build_affine_S, interior_system, schur_direct, solve_dd_direct)


def _setup(problem_id, n=8):
    problem = get_problem(problem_id)
    mesh = build_mesh(n, n)
    op, rhs = assemble(problem, mesh)
    part = build_partition(mesh)
    return problem, op, rhs, part, [extract_blocks(op, rhs, part, j) for j in (1, 2)]


@pytest.mark.parametrize("problem_id", ["heat", "rd1", "rd2"])
def test_interface_path_reproduces_monolithic_solve(problem_id):
    problem, op, rhs, part, blocks = _setup(problem_id)
    rng = np.random.default_rng(4)
    for _ in range(5):
        xi = tuple(lo + (hi - lo) * rng.uniform() for lo, hi in problem.parameter_box)
        mu = ParameterPoint(rng.uniform(0.0, 20.0), xi)
        dd = solve_dd_direct(blocks[0], blocks[1], part, mu, problem)
        mono = direct_frequency_solve(op, rhs, mu, problem)
        assert np.linalg.norm(dd - mono) <= 1e-9 * np.linalg.norm(mono)


def test_local_schur_shapes(small_heat):
    problem, _, _, _, part, blocks = small_heat
    S, F = schur_direct(blocks[0], ParameterPoint(2.0, (1.5, 1.5)), problem)
    assert S.shape == (part.n_interface, part.n_interface)
    assert F.shape == (part.n_interface,)


def test_affine_schur_matches_direct_at_training_points(small_heat):
    problem, _, _, _, _, blocks = small_heat
    ctx = CoefficientContext(problem)
    samples = draw_training_samples(problem.parameter_box, 20.0, 3, 9)
    S, lowranks = build_affine_S(blocks, samples, 1e-13, 10, ctx)
    F, _ = build_affine_F(blocks, samples, 1e-13, 10, ctx)
    for mu in samples.points:
        S_direct, F_direct = assemble_interface_direct(blocks, mu, problem)
        assert np.linalg.norm(S.evaluate(mu, ctx) - S_direct) <= 1e-7 * np.linalg.norm(S_direct)
        assert np.linalg.norm(F.evaluate(mu, ctx) - F_direct) <= 1e-7 * np.linalg.norm(F_direct)


def test_affine_term_counts(small_heat):
    problem, _, _, _, _, blocks = small_heat
    ctx = CoefficientContext(problem)
    samples = draw_training_samples(problem.parameter_box, 20.0, 6, 2)
    S, xs = build_affine_S(blocks, samples, 1e-13, [2, 3], ctx)
    F, ys = build_affine_F(blocks, samples, 1e-13, 2, ctx)
    n_s = [lr.N for lr in xs]
    n_f = [lr.N for lr in ys]
    assert n_s[0] <= 2 and n_s[1] <= 3
    # one stiffness term per subdomain for heat
    assert S.m_S == 2 + 2 * sum(n_s)
    assert len(S.imag_terms) == S.m_S
    assert F.m_F == 4 + 2 * sum(n_f)
    assert len(F.imag_terms) == F.m_F


def test_affine_stack_payload(small_heat):
    problem, _, _, _, _, blocks = small_heat
    ctx = CoefficientContext(problem)
    samples = draw_training_samples(problem.parameter_box, 20.0, 4, 5)
    S, _ = build_affine_S(blocks, samples, 1e-10, 2, ctx)
    meta, arrays = S.to_payload("S__")
    back = AffineSchur.from_payload(meta, arrays, "S__")
    mu = ParameterPoint(6.0, (1.2, 1.8))
    assert back.m_S == S.m_S
    assert_allclose(back.evaluate(mu, ctx), S.evaluate(mu, ctx))


def test_affine_schur_rejects_load_approximations(small_heat):
    problem, _, _, _, _, blocks = small_heat
    ctx = CoefficientContext(problem)
    samples = draw_training_samples(problem.parameter_box, 20.0, 3, 5)
    y = approximate_Y(blocks[0], samples, 1e-10, 1, ctx)
    with pytest.raises(ValueError):
        assemble_affine_S([y], blocks[:1])
    with pytest.raises(ValueError):
        interior_system(blocks[0], "Z")


def test_parameter_independent_x_needs_one_term(heat):
    constant = [OperatorTermSpec(t.tag, t.kind, t.subdomain, lambda xi: 1.0) for t in heat.operator_terms]
    problem = replace(heat, operator_terms=constant)
    mesh = build_mesh(6, 6)
    op, rhs = assemble(problem, mesh)
    blocks = extract_blocks(op, rhs, build_partition(mesh), 1)
    # fixed omega, so only the unused xi varies
    samples = SampleSet(tuple(ParameterPoint(4.0, (x, 1.5)) for x in (1.0, 1.3, 1.6, 1.9)), 0)
    lowrank = approximate_X(blocks, samples, 1e-10, 5, CoefficientContext(problem))
    assert lowrank.N == 1
    assert lowrank.solution.converged


def test_load_representation_holds_its_tolerance_off_the_training_set(small_heat):
    problem, _, _, _, _, blocks = small_heat
    ctx = CoefficientContext(problem)
    eps = 1e-6
    samples = draw_training_samples(problem.parameter_box, 20.0, 24, 7)
    lowrank = approximate_Y(blocks[0], samples, eps, 12, ctx)
    assert lowrank.solution.converged
    system = interior_system(blocks[0], "Y")
    rng = np.random.default_rng(13)
    for _ in range(5):
        mu = ParameterPoint(rng.uniform(0.0, 20.0), tuple(rng.uniform(1.0, 2.0, size=2)))
        assert residual_norm(system, mu, ctx, lowrank.solution) <= 10 * eps * lowrank.solution.scale
