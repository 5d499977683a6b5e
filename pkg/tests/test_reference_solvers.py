import csv

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from numpy.testing import assert_allclose

from utils.errors import SingularSystemError
from utils.frequency import ParameterPoint, inverse_transform, lgl_grid
from utils.mesh_fem import assemble, build_mesh
from utils.problems import get_problem, zero_source
from utils.reference_solvers import (Trajectory, direct_frequency_solve, export_trajectory_csv, fem_be_solve,
                                     heat_exact_trajectory, mass_norm, relative_l2_time_error, time_grid)


def test_time_grid():
    assert_allclose(time_grid(1.0, 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        time_grid(1.0, 0.3)
    with pytest.raises(ValueError):
        time_grid(1.0, 0.0)


def test_zero_source_gives_zero_trajectory(heat):
    problem = zero_source(heat)
    mesh = build_mesh(4, 4)
    op, rhs = assemble(problem, mesh)
    traj = fem_be_solve(problem, op, rhs, 0.1, (1.5, 1.5))
    assert traj.values.shape == (11, op.n)
    assert_allclose(traj.values, 0.0)
    assert_allclose(traj.tau, 0.1)


def test_backward_euler_tracks_analytical_heat_solution(heat):
    mesh = build_mesh(16, 16)
    op, rhs = assemble(heat, mesh)
    traj = fem_be_solve(heat, op, rhs, 0.01, (1.3, 1.8))
    exact = heat_exact_trajectory(mesh, traj.times)
    assert relative_l2_time_error(traj.values, exact, traj.times, op.mass) < 0.05


def test_relative_error_definition():
    M = np.eye(3)
    times = np.linspace(0.0, 1.0, 5)
    ref = np.outer(times, [1.0, 2.0, 2.0])
    assert relative_l2_time_error(ref, ref, times, M) == 0.0
    assert_allclose(relative_l2_time_error(1.1 * ref, ref, times, M), 0.1)
    with pytest.raises(ValueError):
        relative_l2_time_error(ref, np.zeros_like(ref), times, M)
    with pytest.raises(ValueError):
        relative_l2_time_error(ref[:, :2], ref, times, M)
    assert_allclose(mass_norm(M, np.array([1.0, 2.0, 2.0])), 3.0)


def test_direct_frequency_solve_satisfies_the_system(small_heat):
    problem, _, op, rhs, _, _ = small_heat
    mu = ParameterPoint(12.0, (1.1, 1.9))
    u = direct_frequency_solve(op, rhs, mu, problem)
    f = rhs.vector(mu, problem, op.n)
    assert np.linalg.norm(op.matrix(mu, problem) @ u - f) <= 1e-10 * np.linalg.norm(f)


def test_direct_frequency_solve_is_conjugate_symmetric_in_omega(small_heat):
    problem, _, op, rhs, _, _ = small_heat
    xi = (1.4, 1.2)
    plus = direct_frequency_solve(op, rhs, ParameterPoint(5.5, xi), problem)
    minus = direct_frequency_solve(op, rhs, ParameterPoint(-5.5, xi), problem)
    assert_allclose(minus, np.conj(plus), rtol=1e-9, atol=1e-12 * np.abs(plus).max())


def test_backward_euler_energy_is_bounded_by_the_load(heat):
    mesh = build_mesh(8, 8)
    op, rhs = assemble(heat, mesh)
    xi = (1.2, 1.7)
    traj = fem_be_solve(heat, op, rhs, 0.05, xi)
    M = op.mass.tocsc()
    bound = 0.0
    for m in range(1, len(traj.times)):
        f = rhs.time_vector(heat, xi, traj.times[m])
        bound += traj.tau * np.sqrt(f @ spla.spsolve(M, f))
        assert mass_norm(M, traj.values[m]) <= bound * (1 + 1e-10)
    assert np.all(np.isfinite(traj.values))


def test_singular_frequency_system_is_reported(heat):
    # omega = 0 with a vanishing diffusion coefficient
    mesh = build_mesh(4, 4)
    op, rhs = assemble(heat, mesh)
    with pytest.raises(SingularSystemError):
        direct_frequency_solve(op, rhs, ParameterPoint(0.0, (0.0, 0.0)), heat)


def test_export_trajectory_probes(tmp_path):
    traj = Trajectory(np.array([0.0, 0.5, 1.0]), np.arange(12, dtype=float).reshape(3, 4), (1.0,))
    path = export_trajectory_csv(traj, tmp_path / "t.csv", probes=[1, 3])
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "u1", "u3"]
    assert len(rows) == 4
    assert float(rows[2][2]) == 7.0


@pytest.mark.slow
def test_fourier_round_trip_against_backward_euler(heat):
    mesh = build_mesh(20, 20)
    op, rhs = assemble(heat, mesh)
    xi = (1.5, 1.5)
    grid = lgl_grid(20, 20.0)
    hats = np.array([direct_frequency_solve(op, rhs, ParameterPoint(w, xi), heat) for w in grid.nodes])
    traj = fem_be_solve(heat, op, rhs, 1e-3, xi)
    fourier = inverse_transform(hats, grid, traj.times)
    assert relative_l2_time_error(fourier, traj.values, traj.times, op.mass) < 2e-2
