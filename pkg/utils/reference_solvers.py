# utils/reference_solvers.py
"""Ground truth: monolithic frequency solve, FEM + backward Euler, analytical heat solution."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from utils.complex_vs import factorize, solve_refined
from utils.errors import SingularSystemError
from utils.frequency import ParameterPoint, forward_time_transform
from utils.mesh_fem import AffineOperator, AffineRhs, Mesh2D, interpolate
from utils.problems import analytical_heat  # noqa: F401  (re-exported)

logger = logging.getLogger(__name__)


def direct_frequency_solve(op: AffineOperator, rhs: AffineRhs, mu: ParameterPoint, problem) -> np.ndarray:
    """Sparse complex LU of sum alpha_j A_j + i omega M at mu."""
    return solve_refined(op.matrix(mu, problem), rhs.vector(mu, problem, op.n), mu=mu, label="direct frequency")


@dataclass
class Trajectory:
    times: np.ndarray   # (n_steps + 1,)
    values: np.ndarray  # (n_steps + 1, n_free)
    xi: tuple

    @property
    def tau(self) -> float:
        return float(self.times[1] - self.times[0])


def time_grid(T: float, tau: float) -> np.ndarray:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    steps = int(round(T / tau))
    if steps < 1 or abs(steps * tau - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of tau={tau}")
    return np.linspace(0.0, T, steps + 1)


def fem_be_solve(problem, op: AffineOperator, rhs: AffineRhs, tau: float, xi: Sequence[float]) -> Trajectory:
    """(M/tau + A(xi)) u^m = M u^{m-1}/tau + f(t_m), u^0 = 0."""
    times = time_grid(problem.final_time, tau)
    xi = tuple(float(v) for v in xi)
    A = op.real_part(ParameterPoint(0.0, xi), problem)
    K = (op.mass / tau + A).tocsc()
    solve = factorize(K)
    values = np.zeros((len(times), op.n))
    u = values[0]
    worst = 0.0
    for m in range(1, len(times)):
        b = op.mass @ u / tau + rhs.time_vector(problem, xi, times[m])
        u = solve(b)
        scale = np.linalg.norm(b)
        if scale > 0:
            worst = max(worst, np.linalg.norm(b - K @ u) / scale)
        values[m] = u
    if worst > 1e-10:
        logger.warning("backward Euler: step residual up to %.2e for xi=%s", worst, xi)
    if not np.all(np.isfinite(values)):
        raise SingularSystemError("backward Euler produced non-finite values", mu=xi)
    return Trajectory(times, values, xi)


def heat_exact_transform(mesh: Mesh2D, omega: float, T: float = 1.0) -> np.ndarray:
    """Fourier transform in time of the analytical heat solution, on the free dofs."""
    g_hat = forward_time_transform(lambda t: t / (t * t + 1.0) / math.pi, omega, T)
    return g_hat * interpolate(mesh, lambda x1, x2: np.sin(np.pi * x1) * np.sin(np.pi * x2))


def heat_exact_trajectory(mesh: Mesh2D, times: np.ndarray) -> np.ndarray:
    free = mesh.free_vertices
    return np.array([analytical_heat(mesh.vertices[free], t) for t in times])


def mass_norm(M, v: np.ndarray) -> float:
    v = np.asarray(v)
    return float(math.sqrt(max(np.real(np.vdot(v, M @ v)), 0.0)))


def mass_norms_squared(M, fields: np.ndarray) -> np.ndarray:
    """||u(t_m)||_M^2 for every row of `fields`."""
    fields = np.asarray(fields)
    return np.einsum("ti,ti->t", fields, (M @ fields.T).T)


def relative_l2_time_error(approx: np.ndarray, reference: np.ndarray, times: np.ndarray, M) -> float:
    """||u_N - u||_{L2(0,T;V_h)} / ||u||_{L2(0,T;V_h)}, trapezoid in time."""
    approx = np.asarray(approx)
    reference = np.asarray(reference)
    if approx.shape != reference.shape:
        raise ValueError(f"shape mismatch {approx.shape} vs {reference.shape}")
    num = trapezoid(mass_norms_squared(M, approx - reference), times)
    den = trapezoid(mass_norms_squared(M, reference), times)
    if den <= 0:
        raise ValueError("reference solution has zero norm")
    return float(math.sqrt(num / den))


def export_trajectory_csv(trajectory: Trajectory, path, probes: Optional[Sequence[int]] = None) -> Path:
    """Write t plus the selected dof values (all dofs if probes is None)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(range(trajectory.values.shape[1])) if probes is None else [int(p) for p in probes]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"u{c}" for c in cols])
        for t, row in zip(trajectory.times, trajectory.values):
            w.writerow([f"{t:.10g}"] + [f"{row[c]:.12e}" for c in cols])
    return path
