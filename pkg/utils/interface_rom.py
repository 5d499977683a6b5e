# utils/interface_rom.py
"""Reduced model of the interface problem S(mu) u_G = F(mu)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from utils.coefficients import Const, CoefficientContext
from utils.complex_vs import AffineComplexSystem, SampleSet, SeparatedSolution, vs_greedy
from utils.frequency import ParameterPoint
from utils.schur_dd import AffineLoad, AffineSchur

logger = logging.getLogger(__name__)

INTERFACE_KEY = "G"


@dataclass
class InterfaceRom:
    separated: SeparatedSolution
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.separated.N

    @property
    def n_gamma(self) -> int:
        return self.separated.shape[0]

    def truncated(self, n_terms: int) -> "InterfaceRom":
        return InterfaceRom(self.separated.truncated(n_terms), dict(self.provenance))


def _live(terms):
    # padding terms carry Const(0) and contribute nothing
    return tuple((c, m) for c, m in terms if not (isinstance(c, Const) and c.value == 0.0))


def interface_system(S: AffineSchur, F: AffineLoad) -> AffineComplexSystem:
    return AffineComplexSystem(
        real_terms=_live(S.real_terms),
        imag_terms=_live(S.imag_terms),
        rhs_real=_live(F.real_terms),
        rhs_imag=_live(F.imag_terms),
        n=S.n_gamma,
        rhs_shape=(S.n_gamma,),
        name="interface",
    )


def build_interface_rom(S: AffineSchur, F: AffineLoad, samples: SampleSet, epsilon: float, n_max: int,
                        ctx: CoefficientContext) -> InterfaceRom:
    """VS on the n_G-dimensional affine system; snapshots use the affine S(mu_k)."""
    if S.n_gamma != F.n_gamma:
        raise ValueError(f"S has {S.n_gamma} interface dofs, F has {F.n_gamma}")
    separated = vs_greedy(interface_system(S, F), samples, epsilon, n_max, ctx, key=INTERFACE_KEY)
    ctx.register(separated)
    rom = InterfaceRom(separated, {"m_S": S.m_S, "m_F": F.m_F})
    logger.info("interface ROM: N_G=%d over n_G=%d (m_S=%d, m_F=%d)", rom.N, S.n_gamma, S.m_S, F.m_F)
    return rom


def interface_coefficients(rom: InterfaceRom, mu: ParameterPoint,
                           ctx: CoefficientContext) -> Tuple[np.ndarray, np.ndarray]:
    """zeta_G^re(mu), zeta_G^im(mu) without touching n_G-length data."""
    if ctx.solutions.get(rom.separated.key) is rom.separated:
        return ctx.zetas(rom.separated.key, mu)
    zr, zi, _ = rom.separated.coefficients(mu, ctx)
    return zr, zi


def evaluate_interface(rom: InterfaceRom, mu: ParameterPoint, ctx: CoefficientContext) -> np.ndarray:
    zr, zi = interface_coefficients(rom, mu, ctx)
    return rom.separated.expand(zr, zi, ctx.counter)
