import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from utils.coefficients import GAMMA, CoefficientContext, OpCounter, Tag
from utils.complex_vs import (AffineComplexSystem, SampleSet, SeparatedSolution, draw_training_samples, factorize,
                              full_dimension_coefficients, global_vs_rom, vs_greedy, zeta_pair)
from utils.errors import SingularSystemError
from utils.frequency import ParameterPoint
from utils.reference_solvers import direct_frequency_solve


class ToyProblem:
    """Coefficients k1 = 1 + xi1, k2 = xi2, f1 = 1, f2 = xi1, g1 = omega * xi2."""

    def coefficient(self, name, mu):
        x1, x2 = mu.xi
        return {"k1": 1.0 + x1, "k2": x2, "gamma": mu.omega, "f1": 1.0, "f2": x1,
                "g1": mu.omega * x2, "zero": 0.0}[name]


def _spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def toy_system(n=8, rhs_cols=None, zero_rhs=False, seed=0):
    rng = np.random.default_rng(seed)
    shape = (n,) if rhs_cols is None else (n, rhs_cols)
    tag = "zero" if zero_rhs else None
    return AffineComplexSystem(
        real_terms=((Tag("k1"), _spd(rng, n)), (Tag("k2"), _spd(rng, n))),
        imag_terms=((GAMMA, _spd(rng, n) / n),),
        rhs_real=((Tag(tag or "f1"), rng.normal(size=shape)), (Tag(tag or "f2"), rng.normal(size=shape))),
        rhs_imag=((Tag(tag or "g1"), rng.normal(size=shape)),),
        n=n, rhs_shape=shape, name="toy",
    )


def toy_samples(count=8, seed=11):
    return draw_training_samples([(1.0, 2.0), (1.0, 2.0)], 10.0, count, seed)


@pytest.fixture
def ctx():
    return CoefficientContext(ToyProblem())


def test_zeta_pair_solves_the_two_by_two_system():
    p_rr, p_ii, q_ri, q_ir, s_re, s_im = 2.0, 3.0, 0.5, 0.7, 1.1, -0.4
    zr, zi, degenerate = zeta_pair(p_rr, p_ii, q_ri, q_ir, s_re, s_im)
    assert not degenerate
    assert_allclose(p_rr * zr - q_ri * zi, s_re)
    assert_allclose(q_ir * zr + p_ii * zi, s_im)


def test_zeta_pair_degenerate_and_inactive_parts():
    assert zeta_pair(1.0, 1.0, 1.0, -1.0, 1.0, 1.0) == (0.0, 0.0, True)
    assert zeta_pair(4.0, 0.0, 0.0, 0.0, 2.0, 9.0, active_im=False) == (0.5, 0.0, False)
    assert zeta_pair(0.0, 4.0, 0.0, 0.0, 9.0, 2.0, active_re=False) == (0.0, 0.5, False)


def test_greedy_interpolates_chosen_samples(ctx):
    system = toy_system()
    sol = vs_greedy(system, toy_samples(), 1e-12, 5, ctx)
    assert 1 <= sol.N <= 5
    assert len(sol.history) == sol.N
    for step in sol.history:
        assert step["residual_after"] <= 1e-8 * sol.scale
    for mu in sol.samples:
        assert_allclose(sol.evaluate(mu, ctx), system.solve(mu, ctx), rtol=1e-7, atol=1e-10)


def test_greedy_stops_at_n_max_without_convergence(ctx):
    sol = vs_greedy(toy_system(), toy_samples(), 1e-14, 2, ctx)
    assert sol.N == 2
    assert not sol.converged


def test_greedy_exhausting_samples_is_converged(ctx):
    sol = vs_greedy(toy_system(), toy_samples(count=3), 1e-14, 10, ctx)
    assert sol.N <= 3
    assert sol.converged


def _zeta_mismatch(sol, system, mu, ctx):
    zr, zi, _ = sol.coefficients(mu, ctx)
    fr, fi = full_dimension_coefficients(system, sol.modes_re, sol.modes_im, sol.active, mu, ctx)
    return np.linalg.norm(np.concatenate([zr - fr, zi - fi])) / np.linalg.norm(np.concatenate([fr, fi]))


def test_reduced_coefficients_match_full_dimension_recursion(ctx):
    system = toy_system()
    sol = vs_greedy(system, toy_samples(), 1e-12, 4, ctx)
    held_out = [ParameterPoint(0.0, (1.2, 1.9)), ParameterPoint(7.5, (1.6, 1.1))]
    for mu in held_out + list(sol.samples):
        assert _zeta_mismatch(sol, system, mu, ctx) <= 1e-12


def test_retained_modes_have_unit_norm(ctx):
    sol = vs_greedy(toy_system(), toy_samples(), 1e-12, 4, ctx)
    for k in range(sol.N):
        if sol.active[k, 0]:
            assert np.linalg.norm(sol.modes_re[k]) == pytest.approx(1.0, rel=1e-14)
        if sol.active[k, 1]:
            assert np.linalg.norm(sol.modes_im[k]) == pytest.approx(1.0, rel=1e-14)


def test_matrix_valued_unknown(ctx):
    system = toy_system(n=6, rhs_cols=3)
    sol = vs_greedy(system, toy_samples(), 1e-12, 4, ctx)
    assert sol.shape == (6, 3)
    mu = sol.samples[-1]
    assert_allclose(sol.evaluate(mu, ctx), system.solve(mu, ctx), rtol=1e-7, atol=1e-10)


def test_truncation_equals_shorter_run(ctx):
    system = toy_system()
    long = vs_greedy(system, toy_samples(), 1e-14, 5, ctx)
    short = vs_greedy(system, toy_samples(), 1e-14, 2, ctx)
    cut = long.truncated(2)
    assert cut.N == 2
    for a, b in zip(cut.modes_re + cut.modes_im, short.modes_re + short.modes_im):
        assert_allclose(a, b)
    mu = ParameterPoint(4.0, (1.4, 1.4))
    assert_allclose(cut.coefficients(mu, ctx)[0], short.coefficients(mu, ctx)[0], rtol=1e-12)


def test_zero_rhs_gives_empty_representation(ctx):
    sol = vs_greedy(toy_system(zero_rhs=True), toy_samples(), 1e-8, 5, ctx)
    assert sol.N == 0
    assert sol.converged
    assert_allclose(sol.evaluate(ParameterPoint(1.0, (1.5, 1.5)), ctx), 0.0)


def test_bad_tolerance_or_cap(ctx):
    with pytest.raises(ValueError):
        vs_greedy(toy_system(), toy_samples(), 0.0, 3, ctx)
    with pytest.raises(ValueError):
        vs_greedy(toy_system(), toy_samples(), 1e-6, 0, ctx)


def test_payload_keeps_online_behaviour(ctx):
    sol = vs_greedy(toy_system(), toy_samples(), 1e-12, 3, ctx, key="T")
    meta, arrays = sol.to_payload("T__")
    back = SeparatedSolution.from_payload(meta, arrays, "T__")
    mu = ParameterPoint(2.5, (1.1, 1.8))
    assert back.key == "T" and back.N == sol.N
    assert_allclose(back.evaluate(mu, ctx), sol.evaluate(mu, ctx))


def test_counter_depends_only_on_term_counts():
    ctx = CoefficientContext(ToyProblem(), counter=OpCounter())
    small = vs_greedy(toy_system(n=6), toy_samples(), 1e-14, 3, CoefficientContext(ToyProblem()))
    big = vs_greedy(toy_system(n=20), toy_samples(), 1e-14, 3, CoefficientContext(ToyProblem()))
    assert small.N == big.N
    mu = ParameterPoint(3.0, (1.5, 1.5))
    small.coefficients(mu, ctx)
    ops_small, widest_small = ctx.counter.scalar_ops, ctx.counter.widest
    ctx.counter.reset()
    big.coefficients(mu, ctx)
    assert ops_small > 0
    assert ctx.counter.scalar_ops == ops_small
    assert ctx.counter.widest == widest_small == 2 * big.N


def test_counter_charges_each_contraction():
    counter = OpCounter()
    out = counter.contract(np.ones(3), np.ones((3, 4, 5)))
    assert out.shape == (4, 5)
    assert counter.scalar_ops == 2 * 3 * 20
    assert counter.widest == 5
    counter.contract(np.zeros(0), np.zeros(0))
    assert counter.scalar_ops == 120


def test_zeta_cache_holds_one_parameter_point():
    counter = OpCounter()
    ctx = CoefficientContext(ToyProblem(), counter=counter)
    sol = vs_greedy(toy_system(), toy_samples(), 1e-12, 3, CoefficientContext(ToyProblem()), key="T")
    ctx.register(sol)
    first = ParameterPoint(1.0, (1.2, 1.3))
    zr, _ = ctx.zetas("T", first)
    ops = counter.scalar_ops
    again, _ = ctx.zetas("T", first)
    assert again is zr
    assert counter.cache_hits == 1 and counter.scalar_ops == ops
    for omega in np.linspace(0.0, 10.0, 50):
        ctx.zetas("T", ParameterPoint(omega, (1.5, 1.5)))
        assert ctx.cache_size == 1
    ctx.zetas("T", first)
    assert counter.cache_hits == 1


def test_factorize_reports_singular_matrices():
    with pytest.raises(SingularSystemError):
        factorize(np.zeros((3, 3)))
    with pytest.raises(SingularSystemError):
        factorize(sp.csc_matrix((3, 3)))


def test_samples_are_seeded_and_inside_the_box():
    a = draw_training_samples([(1.0, 2.0)] * 4, 15.0, 10, 2024)
    b = draw_training_samples([(1.0, 2.0)] * 4, 15.0, 10, 2024)
    assert a.points == b.points
    assert all(p.within([(1.0, 2.0)] * 4, 15.0) for p in a.points)
    with pytest.raises(ValueError):
        SampleSet((), 0)
    p = ParameterPoint(1.0, (1.0,))
    with pytest.raises(ValueError):
        SampleSet((p, p), 0)


def test_global_vs_interpolates_monolithic_solves(small_heat):
    problem, _, op, rhs, _, _ = small_heat
    ctx = CoefficientContext(problem)
    samples = draw_training_samples(problem.parameter_box, 20.0, 5, 1)
    sol = global_vs_rom(op, rhs, samples, 1e-12, 5, ctx)
    for mu in sol.samples:
        assert_allclose(sol.evaluate(mu, ctx), direct_frequency_solve(op, rhs, mu, problem), rtol=1e-7, atol=1e-12)
