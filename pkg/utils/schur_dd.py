# utils/schur_dd.py
"""Two-subdomain Schur complement for the complex frequency-domain system.

Direct path (exact up to the linear solver):

    S_j(mu) = A_GG^j - A_GI^j A_II^j^-1 A_IG^j,   F_j(mu) = f_G^j - A_GI^j A_II^j^-1 f_I^j
    S = sum_j R_j^T S_j R_j,  F = sum_j R_j^T F_j

Affine path: X^j(mu) = A_II^-1 A_IG and Y^j(mu) = A_II^-1 f_I are replaced by
separated representations, and S(mu), F(mu) are expanded into stacks of
(coefficient expression, dense n_G x n_G matrix / n_G vector) terms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from utils.coefficients import GAMMA, ZERO, Coefficient, CoefficientContext, Tag, Zeta, coefficient_from_dict, product
from utils.complex_vs import (AffineComplexSystem, SampleSet, SeparatedSolution, factorize, vs_greedy)
from utils.frequency import ParameterPoint
from utils.mesh_fem import DomainPartition, SubdomainBlocks

logger = logging.getLogger(__name__)


# ----------------- Direct path -----------------

def schur_direct(blocks: SubdomainBlocks, mu: ParameterPoint, problem) -> Tuple[np.ndarray, np.ndarray]:
    """Local (S_j(mu), F_j(mu)) by one factorization of A_II(mu)."""
    solve = factorize(blocks.interior_matrix(mu, problem), mu=mu)
    a_gi = blocks.coupling(mu, problem, "gi")
    X = solve(blocks.coupling(mu, problem, "ig"))
    Y = solve(blocks.interior_load(mu, problem))
    S = blocks.interface_matrix(mu, problem) - a_gi @ X
    F = blocks.interface_load(mu, problem) - a_gi @ Y
    return S, F


def assemble_interface_direct(blocks_list: Sequence[SubdomainBlocks], mu: ParameterPoint,
                              problem) -> Tuple[np.ndarray, np.ndarray]:
    n_gamma = blocks_list[0].n_interface
    S = np.zeros((n_gamma, n_gamma), dtype=complex)
    F = np.zeros(n_gamma, dtype=complex)
    for blocks in blocks_list:
        S_j, F_j = schur_direct(blocks, mu, problem)
        R = blocks.restriction
        S[np.ix_(R, R)] += S_j
        F[R] += F_j
    return S, F


def recover_interior(blocks: SubdomainBlocks, mu: ParameterPoint, problem, u_gamma: np.ndarray) -> np.ndarray:
    """u_I^j = A_II^-1 (f_I - A_IG R_j u_G)."""
    solve = factorize(blocks.interior_matrix(mu, problem), mu=mu)
    rhs = blocks.interior_load(mu, problem) - blocks.coupling(mu, problem, "ig") @ u_gamma[blocks.restriction]
    return solve(rhs)


def solve_dd_direct(blocks_1: SubdomainBlocks, blocks_2: SubdomainBlocks, part: DomainPartition,
                    mu: ParameterPoint, problem) -> np.ndarray:
    """Interface solve followed by interior recovery, scattered to free dofs."""
    S, F = assemble_interface_direct([blocks_1, blocks_2], mu, problem)
    u_gamma = factorize(S, mu=mu)(F)
    interiors = [recover_interior(b, mu, problem, u_gamma) for b in (blocks_1, blocks_2)]
    return part.scatter(u_gamma, interiors)


# ----------------- Low-rank X / Y -----------------

@dataclass
class LowRankX:
    """Separated X^j(mu) (kind "X") or Y^j(mu) (kind "Y") of one subdomain."""

    j: int
    kind: str
    solution: SeparatedSolution

    @property
    def key(self) -> str:
        return self.solution.key

    @property
    def N(self) -> int:
        return self.solution.N

    def phi(self, k: int, part: str) -> Coefficient:
        return Zeta(self.key, k, part)

    def evaluate(self, mu: ParameterPoint, ctx: CoefficientContext) -> np.ndarray:
        return self.solution.evaluate(mu, ctx)

    def truncated(self, n_terms: int) -> "LowRankX":
        return LowRankX(self.j, self.kind, self.solution.truncated(n_terms))


def interior_system(blocks: SubdomainBlocks, kind: str) -> AffineComplexSystem:
    """A_II(mu) X = A_IG(mu)  (kind "X")  or  A_II(mu) Y = f_I(mu)  (kind "Y")."""
    real_terms = tuple((Tag(t), a) for t, a in zip(blocks.tags, blocks.a_ii))
    imag_terms = ((GAMMA, blocks.m_ii),)
    if kind == "X":
        rhs_real = tuple((Tag(t), a.toarray()) for t, a in zip(blocks.tags, blocks.a_ig))
        rhs_imag = ((GAMMA, blocks.m_ig.toarray()),)
        shape = (blocks.n_interior, blocks.n_interface)
    elif kind == "Y":
        rhs_real = tuple((Tag(f"{s}:re"), f) for s, f in zip(blocks.sources, blocks.f_i))
        rhs_imag = tuple((Tag(f"{s}:im"), f) for s, f in zip(blocks.sources, blocks.f_i))
        shape = (blocks.n_interior,)
    else:
        raise ValueError(f"kind must be 'X' or 'Y', got {kind!r}")
    return AffineComplexSystem(real_terms, imag_terms, rhs_real, rhs_imag,
                               n=blocks.n_interior, rhs_shape=shape, name=f"{kind}{blocks.j}")


def approximate_X(blocks: SubdomainBlocks, samples: SampleSet, epsilon: float, n_max: int,
                  ctx: CoefficientContext) -> LowRankX:
    """Matrix-valued VS for A_II(mu) X = A_IG(mu) (Frobenius-norm greedy over all columns)."""
    solution = vs_greedy(interior_system(blocks, "X"), samples, epsilon, n_max, ctx, key=f"X{blocks.j}")
    ctx.register(solution)
    return LowRankX(blocks.j, "X", solution)


def approximate_Y(blocks: SubdomainBlocks, samples: SampleSet, epsilon: float, n_max: int,
                  ctx: CoefficientContext) -> LowRankX:
    solution = vs_greedy(interior_system(blocks, "Y"), samples, epsilon, n_max, ctx, key=f"Y{blocks.j}")
    ctx.register(solution)
    return LowRankX(blocks.j, "Y", solution)


# ----------------- Affine stacks -----------------

@dataclass
class _AffineStack:
    real_terms: List[Tuple[Coefficient, np.ndarray]]
    imag_terms: List[Tuple[Coefficient, np.ndarray]]
    n_gamma: int

    @property
    def m(self) -> int:
        return len(self.real_terms)

    def evaluate(self, mu: ParameterPoint, ctx: CoefficientContext) -> np.ndarray:
        out = None
        for terms, unit in ((self.real_terms, 1.0), (self.imag_terms, 1j)):
            values = ctx.values([c for c, _ in terms], mu)
            for (_, mat), v in zip(terms, values):
                if v != 0.0:
                    out = unit * v * mat if out is None else out + unit * v * mat
        if out is None:
            shape = np.shape(self.real_terms[0][1]) if self.real_terms else (self.n_gamma,)
            out = np.zeros(shape, dtype=complex)
        return np.asarray(out, dtype=complex)

    def to_payload(self, prefix: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        meta = {
            "n_gamma": self.n_gamma,
            "real_coefs": [c.to_dict() for c, _ in self.real_terms],
            "imag_coefs": [c.to_dict() for c, _ in self.imag_terms],
        }
        arrays = {
            f"{prefix}real": np.array([m for _, m in self.real_terms]),
            f"{prefix}imag": np.array([m for _, m in self.imag_terms]),
        }
        return meta, arrays

    @classmethod
    def from_payload(cls, meta, arrays, prefix: str):
        real = [(coefficient_from_dict(c), m) for c, m in zip(meta["real_coefs"], arrays[f"{prefix}real"])]
        imag = [(coefficient_from_dict(c), m) for c, m in zip(meta["imag_coefs"], arrays[f"{prefix}imag"])]
        return cls(real, imag, int(meta["n_gamma"]))


class AffineSchur(_AffineStack):
    """S(mu) = sum eta_n^re Xs_n^re + i sum eta_n^im Xs_n^im, imaginary list padded to m_S."""

    @property
    def m_S(self) -> int:
        return self.m


class AffineLoad(_AffineStack):
    """F(mu) = sum rho_n^re F_n^re + i sum rho_n^im F_n^im."""

    @property
    def m_F(self) -> int:
        return self.m


def _scatter_matrix(local: np.ndarray, R: np.ndarray, n_gamma: int) -> np.ndarray:
    out = np.zeros((n_gamma, n_gamma))
    out[np.ix_(R, R)] = local
    return out


def _scatter_vector(local: np.ndarray, R: np.ndarray, n_gamma: int) -> np.ndarray:
    out = np.zeros(n_gamma)
    out[R] = local
    return out


def _coupling_terms(lowrank: LowRankX, blocks: SubdomainBlocks, scatter, n_gamma: int):
    """Real and imaginary terms of -A_GI(mu) Z(mu), Z = sum phi^re Z^re + i phi^im Z^im.

    real: sum_k sum_n (alpha_n phi_k^re)(-A_GI^n Z_k^re) + sum_k (gamma phi_k^im)(+M_GI Z_k^im)
    imag: sum_k sum_n (alpha_n phi_k^im)(-A_GI^n Z_k^im) + sum_k (gamma phi_k^re)(-M_GI Z_k^re)
    """
    R = blocks.restriction
    sol = lowrank.solution
    real, imag = [], []
    for k in range(sol.N):
        z_re, z_im = sol.modes_re[k], sol.modes_im[k]
        for tag, a_gi in zip(blocks.tags, blocks.a_gi):
            real.append((product(Tag(tag), lowrank.phi(k, "re")), scatter(-(a_gi @ z_re), R, n_gamma)))
            imag.append((product(Tag(tag), lowrank.phi(k, "im")), scatter(-(a_gi @ z_im), R, n_gamma)))
        real.append((product(GAMMA, lowrank.phi(k, "im")), scatter(blocks.m_gi @ z_im, R, n_gamma)))
        imag.append((product(GAMMA, lowrank.phi(k, "re")), scatter(-(blocks.m_gi @ z_re), R, n_gamma)))
    return real, imag


def assemble_affine_S(lowranks: Sequence[LowRankX], blocks_list: Sequence[SubdomainBlocks]) -> AffineSchur:
    """Stack the A_GG terms and the X-induced product terms of every subdomain.

    Real count m_S = sum_j m_aj + (m_aj + 1) N_Sj; the imaginary list has
    sum_j 1 + (m_aj + 1) N_Sj terms and is padded with zeros to m_S.
    """
    n_gamma = blocks_list[0].n_interface
    real: List[Tuple[Coefficient, np.ndarray]] = []
    imag: List[Tuple[Coefficient, np.ndarray]] = []
    for lowrank, blocks in zip(lowranks, blocks_list):
        if lowrank.kind != "X" or lowrank.j != blocks.j:
            raise ValueError(f"expected X of subdomain {blocks.j}, got {lowrank.kind}{lowrank.j}")
        R = blocks.restriction
        for tag, a_gg in zip(blocks.tags, blocks.a_gg):
            real.append((Tag(tag), _scatter_matrix(a_gg.toarray(), R, n_gamma)))
        imag.append((GAMMA, _scatter_matrix(blocks.m_gg.toarray(), R, n_gamma)))
        r, i = _coupling_terms(lowrank, blocks, _scatter_matrix, n_gamma)
        real.extend(r)
        imag.extend(i)
    zero = np.zeros((n_gamma, n_gamma))
    imag.extend((ZERO, zero) for _ in range(len(real) - len(imag)))
    logger.info("affine S: m_S=%d (N_S=%s)", len(real), [lr.N for lr in lowranks])
    return AffineSchur(real, imag, n_gamma)


def assemble_affine_F(lowranks: Sequence[LowRankX], blocks_list: Sequence[SubdomainBlocks]) -> AffineLoad:
    """m_F = sum_j m_bj + (m_aj + 1) N_Fj terms in each of the real and imaginary lists."""
    n_gamma = blocks_list[0].n_interface
    real: List[Tuple[Coefficient, np.ndarray]] = []
    imag: List[Tuple[Coefficient, np.ndarray]] = []
    for lowrank, blocks in zip(lowranks, blocks_list):
        if lowrank.kind != "Y" or lowrank.j != blocks.j:
            raise ValueError(f"expected Y of subdomain {blocks.j}, got {lowrank.kind}{lowrank.j}")
        R = blocks.restriction
        for src, f_g in zip(blocks.sources, blocks.f_g):
            real.append((Tag(f"{src}:re"), _scatter_vector(f_g, R, n_gamma)))
            imag.append((Tag(f"{src}:im"), _scatter_vector(f_g, R, n_gamma)))
        r, i = _coupling_terms(lowrank, blocks, _scatter_vector, n_gamma)
        real.extend(r)
        imag.extend(i)
    logger.info("affine F: m_F=%d (N_F=%s)", len(real), [lr.N for lr in lowranks])
    return AffineLoad(real, imag, n_gamma)


def build_affine_S(blocks_list: Sequence[SubdomainBlocks], samples: SampleSet, epsilon: float, n_max,
                   ctx: CoefficientContext) -> Tuple[AffineSchur, List[LowRankX]]:
    caps = _caps(n_max, len(blocks_list))
    lowranks = [approximate_X(b, samples, epsilon, cap, ctx) for b, cap in zip(blocks_list, caps)]
    return assemble_affine_S(lowranks, blocks_list), lowranks


def build_affine_F(blocks_list: Sequence[SubdomainBlocks], samples: SampleSet, epsilon: float, n_max,
                   ctx: CoefficientContext) -> Tuple[AffineLoad, List[LowRankX]]:
    caps = _caps(n_max, len(blocks_list))
    lowranks = [approximate_Y(b, samples, epsilon, cap, ctx) for b, cap in zip(blocks_list, caps)]
    return assemble_affine_F(lowranks, blocks_list), lowranks


def _caps(n_max, count: int) -> List[int]:
    if isinstance(n_max, (list, tuple)):
        if len(n_max) != count:
            raise ValueError(f"expected {count} term caps, got {n_max}")
        return [int(v) for v in n_max]
    return [int(n_max)] * count
