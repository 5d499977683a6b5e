# utils/mesh_fem.py
"""P1 finite elements on a structured triangulation of the unit square.

Produces the mu-independent pieces of the affine decomposition

    (sum_j alpha_j(mu) A_j + i gamma(mu) M) u_hat = sum_j (beta_j^Re F_j + i beta_j^Im F_j)

with Dirichlet vertices removed, plus the two-subdomain partition and the
block views used by the Schur complement code.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from utils.coefficients import Coefficient, Tag
from utils.frequency import ParameterPoint

logger = logging.getLogger(__name__)

_COORD_TOL = 1e-12


# ----------------- Mesh -----------------

@dataclass(frozen=True)
class Mesh2D:
    nx: int
    ny: int
    vertices: np.ndarray        # (n_vertices, 2)
    triangles: np.ndarray       # (n_triangles, 3), counter-clockwise
    boundary_flags: np.ndarray  # (n_vertices,) bool

    @property
    def h(self) -> float:
        return 1.0 / max(self.nx, self.ny)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def free_vertices(self) -> np.ndarray:
        """Vertex index of each free dof, in free-dof order."""
        return np.flatnonzero(~self.boundary_flags)

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(~self.boundary_flags))

    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def subdomain_of_triangles(self, interface_coordinate: float = 0.5) -> np.ndarray:
        """1 for triangles left of the interface line, 2 for the rest."""
        return np.where(self.centroids()[:, 0] < interface_coordinate, 1, 2)


def build_mesh(nx: int, ny: int) -> Mesh2D:
    """Criss-cross grid of [0,1]^2: two triangles per cell, the cut diagonal
    alternating in a checkerboard (rising where i + j is even)."""
    if nx < 2 or ny < 2:
        raise ValueError(f"mesh needs nx, ny >= 2, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row j <-> x2 = ys[j]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    rising = ((i + j) % 2 == 0).ravel()[:, None]
    first = np.where(rising, np.column_stack([v00, v10, v11]), np.column_stack([v00, v10, v01]))
    second = np.where(rising, np.column_stack([v00, v11, v01]), np.column_stack([v10, v11, v01]))
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = first
    triangles[1::2] = second

    x, y = vertices[:, 0], vertices[:, 1]
    boundary = (x < _COORD_TOL) | (x > 1 - _COORD_TOL) | (y < _COORD_TOL) | (y > 1 - _COORD_TOL)
    return Mesh2D(nx, ny, vertices, triangles, boundary)


# ----------------- Element matrices -----------------

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def _gradients(mesh: Mesh2D, tri: np.ndarray):
    p = mesh.vertices[mesh.triangles[tri]]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    # barycentric gradients: rows are grad(lambda_0..2)
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    g0 = -g1 - g2
    return np.stack([g0, g1, g2], axis=1), 0.5 * det


def _scatter(mesh: Mesh2D, tri: np.ndarray, local: np.ndarray) -> sp.csr_matrix:
    idx = mesh.triangles[tri]
    rows = np.repeat(idx, 3, axis=1).ravel()
    cols = np.tile(idx, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _triangle_mask(mesh: Mesh2D, subdomain: Optional[int]) -> np.ndarray:
    if subdomain is None:
        return np.arange(len(mesh.triangles))
    return np.flatnonzero(mesh.subdomain_of_triangles() == subdomain)


def assemble_stiffness(mesh: Mesh2D, subdomain: Optional[int] = None) -> sp.csr_matrix:
    """int grad(u).grad(v) over the triangles of `subdomain` (all if None),
    on the full vertex space."""
    tri = _triangle_mask(mesh, subdomain)
    grads, area = _gradients(mesh, tri)
    local = area[:, None, None] * np.einsum("tad,tbd->tab", grads, grads)
    return _scatter(mesh, tri, local)


def assemble_mass(mesh: Mesh2D, subdomain: Optional[int] = None) -> sp.csr_matrix:
    tri = _triangle_mask(mesh, subdomain)
    area = mesh.signed_areas()[tri]
    local = area[:, None, None] * _MASS_REF[None, :, :]
    return _scatter(mesh, tri, local)


def assemble_load(mesh: Mesh2D, space_profile, subdomain: Optional[int] = None) -> np.ndarray:
    """int h(x) psi_k dx by the edge-midpoint rule (exact for quadratics)."""
    tri = _triangle_mask(mesh, subdomain)
    idx = mesh.triangles[tri]
    p = mesh.vertices[idx]
    area = mesh.signed_areas()[tri]
    load = np.zeros(mesh.n_vertices)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        mid = 0.5 * (p[:, a] + p[:, b])
        contrib = area / 3.0 * 0.5 * np.asarray(space_profile(mid[:, 0], mid[:, 1]), dtype=float)
        np.add.at(load, idx[:, a], contrib)
        np.add.at(load, idx[:, b], contrib)
    return load


# ----------------- Affine structures -----------------

@dataclass(frozen=True)
class OperatorTerm:
    tag: str
    kind: str
    subdomain: int
    matrix: sp.csr_matrix

    @property
    def coefficient(self) -> Coefficient:
        return Tag(self.tag)


@dataclass(frozen=True)
class AffineOperator:
    terms: Tuple[OperatorTerm, ...]
    mass: sp.csr_matrix
    mass_parts: Tuple[sp.csr_matrix, sp.csr_matrix]

    @property
    def m_a(self) -> int:
        return len(self.terms)

    @property
    def n(self) -> int:
        return self.mass.shape[0]

    def real_part(self, mu: ParameterPoint, problem) -> sp.csr_matrix:
        out = sp.csr_matrix(self.mass.shape)
        for term in self.terms:
            out = out + problem.coefficient(term.tag, mu) * term.matrix
        return out

    def matrix(self, mu: ParameterPoint, problem) -> sp.csc_matrix:
        """sum_j alpha_j(mu) A_j + i gamma(mu) M."""
        gamma = problem.coefficient("gamma", mu)
        return (self.real_part(mu, problem) + 1j * gamma * self.mass).tocsc()


@dataclass(frozen=True)
class RhsTerm:
    source: str
    subdomain: int
    vector: np.ndarray

    @property
    def real_tag(self) -> str:
        return f"{self.source}:re"

    @property
    def imag_tag(self) -> str:
        return f"{self.source}:im"


@dataclass(frozen=True)
class AffineRhs:
    terms: Tuple[RhsTerm, ...]

    @property
    def m_b(self) -> int:
        return len(self.terms)

    @property
    def real_terms(self) -> List[Tuple[str, np.ndarray]]:
        return [(t.real_tag, t.vector) for t in self.terms]

    @property
    def imag_terms(self) -> List[Tuple[str, np.ndarray]]:
        return [(t.imag_tag, t.vector) for t in self.terms]

    def vector(self, mu: ParameterPoint, problem, n: Optional[int] = None) -> np.ndarray:
        if not self.terms:
            return np.zeros(n or 0, dtype=complex)
        out = np.zeros(len(self.terms[0].vector), dtype=complex)
        for t in self.terms:
            out += (problem.coefficient(t.real_tag, mu) + 1j * problem.coefficient(t.imag_tag, mu)) * t.vector
        return out

    def time_vector(self, problem, xi: Sequence[float], t: float) -> np.ndarray:
        """Load vector f(t; xi) for the time-stepping reference."""
        out = np.zeros(len(self.terms[0].vector)) if self.terms else np.zeros(0)
        for term in self.terms:
            out += problem.source_at(term.source, xi, t) * term.vector
        return out


def assemble(problem, mesh: Mesh2D) -> Tuple[AffineOperator, AffineRhs]:
    if mesh.nx % 2:
        raise ValueError(f"nx must be even so that x1 = 0.5 is a mesh line, got nx={mesh.nx}")
    free = mesh.free_vertices

    def restrict(matrix):
        return matrix[free][:, free].tocsr()

    stiffness = {}
    mass = {}
    terms = []
    for spec in problem.operator_terms:
        if not problem.has_tag(spec.tag):
            raise KeyError(f"unknown coefficient tag {spec.tag!r}")
        if spec.subdomain not in (1, 2):
            raise ValueError(f"operator term {spec.tag!r} has subdomain {spec.subdomain}")
        if spec.kind == "stiffness":
            if spec.subdomain not in stiffness:
                stiffness[spec.subdomain] = restrict(assemble_stiffness(mesh, spec.subdomain))
            matrix = stiffness[spec.subdomain]
        elif spec.kind == "mass":
            if spec.subdomain not in mass:
                mass[spec.subdomain] = restrict(assemble_mass(mesh, spec.subdomain))
            matrix = mass[spec.subdomain]
        else:
            raise ValueError(f"unknown operator kind {spec.kind!r}")
        terms.append(OperatorTerm(spec.tag, spec.kind, spec.subdomain, matrix))

    mass_parts = tuple(mass[j] if j in mass else restrict(assemble_mass(mesh, j)) for j in (1, 2))
    op = AffineOperator(tuple(terms), (mass_parts[0] + mass_parts[1]).tocsr(), mass_parts)

    rhs_terms = []
    for src in problem.source_terms:
        for suffix in (":re", ":im"):
            if not problem.has_tag(src.tag + suffix):
                raise KeyError(f"unknown coefficient tag {src.tag + suffix!r}")
        if src.subdomain not in (1, 2):
            raise ValueError(f"source term {src.tag!r} has subdomain {src.subdomain}")
        vector = assemble_load(mesh, src.space_profile, src.subdomain)[free]
        rhs_terms.append(RhsTerm(src.tag, src.subdomain, vector))
    rhs = AffineRhs(tuple(rhs_terms))
    logger.info("assembled %s on %dx%d mesh: n_free=%d m_a=%d m_b=%d",
                problem.id, mesh.nx, mesh.ny, mesh.n_free, op.m_a, rhs.m_b)
    return op, rhs


# ----------------- Partition & blocks -----------------

@dataclass(frozen=True)
class DomainPartition:
    interface_coordinate: float
    interior_dofs: Tuple[np.ndarray, np.ndarray]
    interface_dofs: np.ndarray
    restriction_maps: Tuple[np.ndarray, np.ndarray]
    n_free: int

    @property
    def n_interface(self) -> int:
        return len(self.interface_dofs)

    def interior(self, j: int) -> np.ndarray:
        _check_subdomain(j)
        return self.interior_dofs[j - 1]

    def restriction(self, j: int) -> np.ndarray:
        _check_subdomain(j)
        return self.restriction_maps[j - 1]

    def scatter(self, interface_values: np.ndarray, interior_values: Sequence[np.ndarray]) -> np.ndarray:
        """Place interface and interior pieces into one free-dof vector."""
        out = np.zeros(self.n_free, dtype=np.result_type(interface_values, *interior_values))
        out[self.interface_dofs] = interface_values
        for j in (1, 2):
            out[self.interior(j)] = interior_values[j - 1]
        return out


def _check_subdomain(j: int) -> None:
    if j not in (1, 2):
        raise IndexError(f"subdomain index must be 1 or 2, got {j}")


def build_partition(mesh: Mesh2D, interface_coordinate: float = 0.5) -> DomainPartition:
    """Free dofs split into I1 (x1 < c), Gamma (x1 = c) and I2 (x1 > c)."""
    x1 = mesh.vertices[mesh.free_vertices, 0]
    on_line = np.abs(x1 - interface_coordinate) < _COORD_TOL
    if not on_line.any():
        raise ValueError(f"interface x1={interface_coordinate} is not a mesh line")
    gamma = np.flatnonzero(on_line)
    i1 = np.flatnonzero(~on_line & (x1 < interface_coordinate))
    i2 = np.flatnonzero(~on_line & (x1 > interface_coordinate))
    # both subdomains see the whole interface line
    r = np.arange(len(gamma))
    return DomainPartition(float(interface_coordinate), (i1, i2), gamma, (r, r.copy()), mesh.n_free)


@dataclass(frozen=True)
class SubdomainBlocks:
    """Block views of the subdomain-j terms, in (I_j, Gamma) ordering."""

    j: int
    interior_dofs: np.ndarray
    interface_dofs: np.ndarray
    restriction: np.ndarray
    tags: Tuple[str, ...]
    a_ii: Tuple[sp.csr_matrix, ...]
    a_ig: Tuple[sp.csr_matrix, ...]
    a_gi: Tuple[sp.csr_matrix, ...]
    a_gg: Tuple[sp.csr_matrix, ...]
    m_ii: sp.csr_matrix
    m_ig: sp.csr_matrix
    m_gi: sp.csr_matrix
    m_gg: sp.csr_matrix
    sources: Tuple[str, ...]
    f_i: Tuple[np.ndarray, ...]
    f_g: Tuple[np.ndarray, ...]

    @property
    def m_a(self) -> int:
        return len(self.tags)

    @property
    def m_b(self) -> int:
        return len(self.sources)

    @property
    def n_interior(self) -> int:
        return len(self.interior_dofs)

    @property
    def n_interface(self) -> int:
        return len(self.interface_dofs)

    def _combine(self, mu, problem, parts):
        out = None
        for tag, mat in zip(self.tags, parts):
            term = problem.coefficient(tag, mu) * mat
            out = term if out is None else out + term
        return out

    def interior_matrix(self, mu: ParameterPoint, problem) -> sp.csc_matrix:
        gamma = problem.coefficient("gamma", mu)
        real = self._combine(mu, problem, self.a_ii)
        real = sp.csr_matrix(self.m_ii.shape) if real is None else real
        return (real + 1j * gamma * self.m_ii).tocsc()

    def coupling(self, mu: ParameterPoint, problem, which: str = "ig") -> np.ndarray:
        """A_IGamma(mu) or A_GammaI(mu) as a dense complex matrix."""
        parts, m = (self.a_ig, self.m_ig) if which == "ig" else (self.a_gi, self.m_gi)
        gamma = problem.coefficient("gamma", mu)
        real = self._combine(mu, problem, parts)
        real = np.zeros(m.shape) if real is None else real.toarray()
        return real + 1j * gamma * m.toarray()

    def interface_matrix(self, mu: ParameterPoint, problem) -> np.ndarray:
        gamma = problem.coefficient("gamma", mu)
        real = self._combine(mu, problem, self.a_gg)
        real = np.zeros(self.m_gg.shape) if real is None else real.toarray()
        return real + 1j * gamma * self.m_gg.toarray()

    def _load(self, mu, problem, parts, n):
        out = np.zeros(n, dtype=complex)
        for src, vec in zip(self.sources, parts):
            out += (problem.coefficient(src + ":re", mu) + 1j * problem.coefficient(src + ":im", mu)) * vec
        return out

    def interior_load(self, mu: ParameterPoint, problem) -> np.ndarray:
        return self._load(mu, problem, self.f_i, self.n_interior)

    def interface_load(self, mu: ParameterPoint, problem) -> np.ndarray:
        return self._load(mu, problem, self.f_g, self.n_interface)


def extract_blocks(op: AffineOperator, rhs: AffineRhs, part: DomainPartition, j: int) -> SubdomainBlocks:
    _check_subdomain(j)
    if op.n != part.n_free:
        raise ValueError(f"partition covers {part.n_free} dofs, operator has {op.n}")
    I = part.interior(j)
    G = part.interface_dofs

    def blocks(matrix):
        m = matrix.tocsr()
        return m[I][:, I].tocsr(), m[I][:, G].tocsr(), m[G][:, I].tocsr(), m[G][:, G].tocsr()

    own = [t for t in op.terms if t.subdomain == j]
    split = [blocks(t.matrix) for t in own]
    m_ii, m_ig, m_gi, m_gg = blocks(op.mass_parts[j - 1])
    loads = [t for t in rhs.terms if t.subdomain == j]
    return SubdomainBlocks(
        j=j,
        interior_dofs=I,
        interface_dofs=G,
        restriction=part.restriction(j),
        tags=tuple(t.tag for t in own),
        a_ii=tuple(s[0] for s in split),
        a_ig=tuple(s[1] for s in split),
        a_gi=tuple(s[2] for s in split),
        a_gg=tuple(s[3] for s in split),
        m_ii=m_ii, m_ig=m_ig, m_gi=m_gi, m_gg=m_gg,
        sources=tuple(t.source for t in loads),
        f_i=tuple(t.vector[I] for t in loads),
        f_g=tuple(t.vector[G] for t in loads),
    )


def interpolate(mesh: Mesh2D, fn) -> np.ndarray:
    """Nodal interpolant of fn(x1, x2) on the free dofs."""
    free = mesh.free_vertices
    return np.asarray(fn(mesh.vertices[free, 0], mesh.vertices[free, 1]), dtype=float)


def to_vertex_field(mesh: Mesh2D, free_values: np.ndarray) -> np.ndarray:
    """Free-dof vector -> full vertex vector with zero Dirichlet values."""
    out = np.zeros(mesh.n_vertices, dtype=np.asarray(free_values).dtype)
    out[mesh.free_vertices] = free_values
    return out
