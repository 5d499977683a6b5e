# utils/subdomain_rom.py
"""Reduced models of the interior solutions, driven by the interface ROM.

For subdomain j the interior problem is

    A_II(mu) u_I = f_I(mu) - A_IG(mu) R_j u_G(mu)

and u_G(mu) is replaced by its separated form sum_k (zeta_k^re c_k^re + i zeta_k^im c_k^im),
so every interface mode contributes ordinary affine rhs terms whose
coefficients are products of alpha / gamma with the interface zetas.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.coefficients import GAMMA, CoefficientContext, Tag, Zeta, product
from utils.complex_vs import AffineComplexSystem, SampleSet, SeparatedSolution, vs_greedy
from utils.frequency import ParameterPoint
from utils.interface_rom import InterfaceRom, evaluate_interface
from utils.mesh_fem import DomainPartition, Mesh2D, SubdomainBlocks, to_vertex_field

logger = logging.getLogger(__name__)


@dataclass
class SubdomainRom:
    j: int
    separated: SeparatedSolution

    @property
    def N(self) -> int:
        return self.separated.N

    @property
    def key(self) -> str:
        return self.separated.key

    def truncated(self, n_terms: int) -> "SubdomainRom":
        return SubdomainRom(self.j, self.separated.truncated(n_terms))


def subdomain_system(blocks: SubdomainBlocks, interface_rom: InterfaceRom) -> AffineComplexSystem:
    G = interface_rom.separated
    R = blocks.restriction
    rhs_real = [(Tag(f"{s}:re"), f) for s, f in zip(blocks.sources, blocks.f_i)]
    rhs_imag = [(Tag(f"{s}:im"), f) for s, f in zip(blocks.sources, blocks.f_i)]
    for k in range(G.N):
        c_re = G.modes_re[k][R]
        c_im = G.modes_im[k][R]
        z_re, z_im = Zeta(G.key, k, "re"), Zeta(G.key, k, "im")
        for tag, a_ig in zip(blocks.tags, blocks.a_ig):
            rhs_real.append((product(Tag(tag), z_re), -(a_ig @ c_re)))
            rhs_imag.append((product(Tag(tag), z_im), -(a_ig @ c_im)))
        rhs_real.append((product(GAMMA, z_im), blocks.m_ig @ c_im))
        rhs_imag.append((product(GAMMA, z_re), -(blocks.m_ig @ c_re)))
    return AffineComplexSystem(
        real_terms=tuple((Tag(t), a) for t, a in zip(blocks.tags, blocks.a_ii)),
        imag_terms=((GAMMA, blocks.m_ii),),
        rhs_real=tuple(rhs_real),
        rhs_imag=tuple(rhs_imag),
        n=blocks.n_interior,
        rhs_shape=(blocks.n_interior,),
        name=f"interior{blocks.j}",
    )


def build_subdomain_rom(j: int, blocks: SubdomainBlocks, interface_rom: InterfaceRom, samples: SampleSet,
                        epsilon: float, n_max: int, ctx: CoefficientContext) -> SubdomainRom:
    if blocks.j != j:
        raise ValueError(f"blocks belong to subdomain {blocks.j}, not {j}")
    system = subdomain_system(blocks, interface_rom)
    separated = vs_greedy(system, samples, epsilon, n_max, ctx, key=f"I{j}")
    ctx.register(separated)
    logger.info("subdomain %d ROM: N_I=%d over %d interior dofs (m_b=%d)",
                j, separated.N, blocks.n_interior, len(system.rhs_real))
    return SubdomainRom(j, separated)


def _check_partition(interface_rom: InterfaceRom, subdomain_roms: Sequence[SubdomainRom],
                     part: DomainPartition) -> None:
    if interface_rom.n_gamma != part.n_interface:
        raise ValueError(f"interface ROM has {interface_rom.n_gamma} dofs, partition {part.n_interface}")
    for rom in subdomain_roms:
        if rom.separated.shape[0] != len(part.interior(rom.j)):
            raise ValueError(f"subdomain {rom.j} ROM has {rom.separated.shape[0]} dofs, "
                             f"partition {len(part.interior(rom.j))}")


def full_field_coefficients(interface_rom: InterfaceRom, subdomain_roms: Sequence[SubdomainRom],
                            mu: ParameterPoint, ctx: CoefficientContext) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """All zetas of the online model at mu; no n-length work."""
    out = {interface_rom.separated.key: ctx.zetas(interface_rom.separated.key, mu)}
    for rom in subdomain_roms:
        out[rom.key] = ctx.zetas(rom.key, mu)
    return out


def evaluate_full_field(interface_rom: InterfaceRom, subdomain_roms: Sequence[SubdomainRom],
                        part: DomainPartition, mu: ParameterPoint, ctx: CoefficientContext,
                        mesh: Optional[Mesh2D] = None) -> np.ndarray:
    """u_N(mu) on the free dofs, or on all vertices (zero Dirichlet values) when `mesh` is given."""
    _check_partition(interface_rom, subdomain_roms, part)
    u_gamma = evaluate_interface(interface_rom, mu, ctx)
    interiors: List[np.ndarray] = [None, None]
    for rom in subdomain_roms:
        interiors[rom.j - 1] = rom.separated.evaluate(mu, ctx)
    for j in (1, 2):
        if interiors[j - 1] is None:
            raise ValueError(f"no ROM for subdomain {j}")
    field = part.scatter(u_gamma, interiors)
    return to_vertex_field(mesh, field) if mesh is not None else field
