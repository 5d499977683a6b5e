import os
import sys

import pytest

# Ensure repo root is on sys.path
APP_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, APP_ROOT)

from utils.config import RunConfig  # noqa: E402
from utils.mesh_fem import assemble, build_mesh, build_partition, extract_blocks  # noqa: E402
from utils.problems import get_problem  # noqa: E402


@pytest.fixture
def heat():
    return get_problem("heat")


@pytest.fixture
def small_heat(heat):
    """heat on an 8x8 mesh: (problem, mesh, op, rhs, partition, [blocks1, blocks2])."""
    mesh = build_mesh(8, 8)
    op, rhs = assemble(heat, mesh)
    part = build_partition(mesh)
    blocks = [extract_blocks(op, rhs, part, j) for j in (1, 2)]
    return heat, mesh, op, rhs, part, blocks


@pytest.fixture
def tiny_config(tmp_path):
    """A run that finishes in seconds."""
    return RunConfig(
        problem="heat", nx=6, ny=6, tau=0.05, omega_max=8.0, n_omega=6, n_train=6, seed=3,
        eps_x=1e-10, eps_f=1e-10, eps_interface=1e-10, eps_subdomain=1e-10,
        n_s=(2, 2), n_f=(2, 2), n_gamma=2, n_i=(2, 2),
        m_samples=2, eval_seed=5, time_levels=(0.5,), sweep_max=2, n_validation=2,
        output_dir=str(tmp_path / "runs"),
    ).validate()
