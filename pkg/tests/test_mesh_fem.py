import numpy as np
import pytest
from numpy.testing import assert_allclose

from utils.frequency import ParameterPoint
from utils.mesh_fem import (assemble, assemble_load, assemble_mass, assemble_stiffness, build_mesh,
                            build_partition, extract_blocks, interpolate, to_vertex_field)
from utils.problems import get_problem


def test_build_mesh_rejects_tiny_grid():
    with pytest.raises(ValueError):
        build_mesh(1, 4)


def test_mesh_counts_and_orientation():
    mesh = build_mesh(4, 6)
    assert mesh.n_vertices == 5 * 7
    assert len(mesh.triangles) == 2 * 4 * 6
    assert mesh.n_free == 3 * 5
    assert np.all(mesh.signed_areas() > 0)
    assert_allclose(mesh.signed_areas().sum(), 1.0)


def test_cell_diagonals_alternate():
    mesh = build_mesh(2, 2)
    # cell (0, 0) is cut from vertex 0 to 4, its neighbour (1, 0) from 2 to 4
    first, second = set(mesh.triangles[0]), set(mesh.triangles[1])
    assert first & second == {0, 4}
    first, second = set(mesh.triangles[2]), set(mesh.triangles[3])
    assert first & second == {2, 4}
    assert np.all(mesh.signed_areas() > 0)


def test_mass_row_sums_are_lumped_nodal_areas():
    mesh = build_mesh(6, 4)
    areas = mesh.signed_areas()
    lumped = np.bincount(mesh.triangles.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=mesh.n_vertices)
    assert_allclose(np.asarray(assemble_mass(mesh).sum(axis=1)).ravel(), lumped, rtol=1e-12)


def test_stiffness_kills_constants_and_mass_integrates_one():
    mesh = build_mesh(6, 6)
    K = assemble_stiffness(mesh)
    M = assemble_mass(mesh)
    ones = np.ones(mesh.n_vertices)
    assert_allclose(K @ ones, 0.0, atol=1e-12)
    assert_allclose(ones @ (M @ ones), 1.0)
    assert_allclose(ones @ (assemble_mass(mesh, 1) @ ones), 0.5)
    assert_allclose(abs(K - K.T).max(), 0.0, atol=1e-14)


def test_load_of_constant_profile():
    mesh = build_mesh(4, 4)
    load = assemble_load(mesh, lambda x1, x2: np.ones_like(x1))
    assert_allclose(load.sum(), 1.0)
    assert_allclose(assemble_load(mesh, lambda x1, x2: np.ones_like(x1), 2).sum(), 0.5)


def test_assemble_needs_even_nx(heat):
    with pytest.raises(ValueError):
        assemble(heat, build_mesh(7, 8))


def test_affine_operator_matches_pointwise_assembly(small_heat):
    problem, mesh, op, rhs, part, blocks = small_heat
    mu = ParameterPoint(3.0, (1.3, 1.7))
    free = mesh.free_vertices
    K1 = assemble_stiffness(mesh, 1)[free][:, free]
    K2 = assemble_stiffness(mesh, 2)[free][:, free]
    M = assemble_mass(mesh)[free][:, free]
    expected = 1.3 * K1 + 2 * 1.7 * K2 + 3j * M
    assert_allclose(op.matrix(mu, problem).toarray(), expected.toarray(), atol=1e-12)
    assert op.m_a == 2
    assert rhs.m_b == 4


def test_partition_sizes(small_heat):
    _, mesh, _, _, part, _ = small_heat
    assert part.n_interface == 7
    assert len(part.interior(1)) == 21
    assert len(part.interior(2)) == 21
    x1 = mesh.vertices[mesh.free_vertices, 0]
    assert_allclose(x1[part.interface_dofs], 0.5)
    assert np.all(x1[part.interior(1)] < 0.5)
    with pytest.raises(IndexError):
        part.interior(3)


def test_partition_scatter_reassembles(small_heat):
    _, _, op, _, part, _ = small_heat
    v = np.arange(op.n, dtype=float)
    pieces = [v[part.interior(1)], v[part.interior(2)]]
    assert_allclose(part.scatter(v[part.interface_dofs], pieces), v)


def test_blocks_reproduce_global_operator(small_heat):
    problem, _, op, rhs, part, blocks = small_heat
    mu = ParameterPoint(5.0, (1.9, 1.1))
    A = op.matrix(mu, problem).toarray()
    f = rhs.vector(mu, problem, op.n)
    G = part.interface_dofs
    for b in blocks:
        I = b.interior_dofs
        assert_allclose(b.interior_matrix(mu, problem).toarray(), A[np.ix_(I, I)], atol=1e-12)
        assert_allclose(b.coupling(mu, problem, "ig"), A[np.ix_(I, G)], atol=1e-12)
        assert_allclose(b.interior_load(mu, problem), f[I], atol=1e-12)
    A_gg = sum(b.interface_matrix(mu, problem) for b in blocks)
    assert_allclose(A_gg, A[np.ix_(G, G)], atol=1e-12)
    assert_allclose(sum(b.interface_load(mu, problem) for b in blocks), f[G], atol=1e-12)


def test_extract_blocks_bad_index(small_heat):
    _, _, op, rhs, part, _ = small_heat
    with pytest.raises(IndexError):
        extract_blocks(op, rhs, part, 0)


def test_rd2_has_one_term_per_subdomain():
    problem = get_problem("rd2")
    mesh = build_mesh(4, 4)
    op, rhs = assemble(problem, mesh)
    part = build_partition(mesh)
    b1, b2 = (extract_blocks(op, rhs, part, j) for j in (1, 2))
    assert (b1.m_a, b2.m_a) == (1, 1)
    assert (b1.m_b, b2.m_b) == (1, 1)


def test_vertex_field_has_zero_boundary():
    mesh = build_mesh(4, 4)
    u = interpolate(mesh, lambda x1, x2: 1.0 + x1 * 0.0)
    full = to_vertex_field(mesh, u)
    assert_allclose(full[mesh.boundary_flags], 0.0)
    assert_allclose(full[mesh.free_vertices], 1.0)
