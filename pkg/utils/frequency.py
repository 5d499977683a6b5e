# utils/frequency.py
"""Frequency grid, forward transform of time profiles and Fourier inversion.

Time is replaced by the frequency omega through

    u_hat(omega) = int_0^T u(t) exp(-i omega t) dt          (u zero outside [0, T])
    u(t)         = (1/pi) Re sum_j u_hat(omega_j) exp(i omega_j t) w_j

where (omega_j, w_j) are the Legendre-Gauss-Lobatto points and weights mapped
to [0, omega_max].  Real signals satisfy u_hat(-omega) = conj(u_hat(omega)),
which is why only the positive half-line is sampled.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from utils.errors import QuadratureError

logger = logging.getLogger(__name__)

# composite Gauss-Legendre panel rule for the forward transform
_PANEL_POINTS = 8
_PANEL_NODES, _PANEL_WEIGHTS = leggauss(_PANEL_POINTS)
_TRANSFORM_RTOL = 1e-10
_MAX_PANELS = 1 << 16


@dataclass(frozen=True)
class ParameterPoint:
    """mu = (omega, xi): one frequency plus the physical parameter vector."""

    omega: float
    xi: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))

    def within(self, box: Sequence[Tuple[float, float]], omega_max: float) -> bool:
        if not 0.0 <= self.omega <= omega_max:
            return False
        if len(box) != len(self.xi):
            return False
        return all(lo <= v <= hi for v, (lo, hi) in zip(self.xi, box))

    def to_dict(self):
        return {"omega": self.omega, "xi": list(self.xi)}

    @classmethod
    def from_dict(cls, data):
        return cls(data["omega"], tuple(data["xi"]))


@dataclass(frozen=True)
class FrequencyGrid:
    omega_max: float
    n_omega: int
    nodes: np.ndarray
    weights: np.ndarray


def _lgl_reference(n_points: int, max_iter: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    # Newton iteration on (1-x^2) P'_n(x), Chebyshev-Gauss-Lobatto start
    n = n_points - 1
    x = -np.cos(np.pi * np.arange(n_points) / n)
    p = np.zeros((n_points, n_points))
    for _ in range(max_iter):
        x_old = x.copy()
        p[:, 0] = 1.0
        p[:, 1] = x
        for k in range(2, n + 1):
            p[:, k] = ((2 * k - 1) * x * p[:, k - 1] - (k - 1) * p[:, k - 2]) / k
        x = x_old - (x * p[:, n] - p[:, n - 1]) / (n_points * p[:, n])
        if np.max(np.abs(x - x_old)) < 1e-14:
            break
    else:
        raise QuadratureError(f"LGL node iteration did not converge for n_omega={n_points}")
    # final Legendre values at the converged nodes
    p[:, 0] = 1.0
    p[:, 1] = x
    for k in range(2, n + 1):
        p[:, k] = ((2 * k - 1) * x * p[:, k - 1] - (k - 1) * p[:, k - 2]) / k
    w = 2.0 / (n * n_points * p[:, n] ** 2)
    x[0], x[-1] = -1.0, 1.0
    return x, w


def lgl_grid(n_omega: int, omega_max: float) -> FrequencyGrid:
    """LGL points and weights on [0, omega_max]."""
    if n_omega < 2:
        raise ValueError(f"n_omega must be >= 2, got {n_omega}")
    if not omega_max > 0:
        raise ValueError(f"omega_max must be positive, got {omega_max}")
    x, w = _lgl_reference(int(n_omega))
    half = 0.5 * float(omega_max)
    nodes = half * (x + 1.0)
    nodes[0], nodes[-1] = 0.0, float(omega_max)
    return FrequencyGrid(float(omega_max), int(n_omega), nodes, half * w)


def _panel_sum(profile: Callable[[np.ndarray], np.ndarray], omega: float, T: float, panels: int) -> complex:
    edges = np.linspace(0.0, T, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * _PANEL_NODES[None, :]).ravel()
    w = (half[:, None] * _PANEL_WEIGHTS[None, :]).ravel()
    values = np.asarray(profile(t), dtype=float) * np.exp(-1j * omega * t)
    return complex(np.dot(w, values))


def forward_time_transform(profile: Callable[[np.ndarray], np.ndarray], omega: float, T: float) -> complex:
    """int_0^T profile(t) exp(-i omega t) dt by composite Gauss-Legendre
    with panel doubling until two successive levels agree to 1e-10."""
    omega = float(omega)
    panels = max(4, int(math.ceil(abs(omega) * T / math.pi)))
    value = _panel_sum(profile, omega, T, panels)
    while panels < _MAX_PANELS:
        panels *= 2
        refined = _panel_sum(profile, omega, T, panels)
        if abs(refined - value) <= _TRANSFORM_RTOL * max(abs(refined), np.finfo(float).tiny):
            return refined
        value = refined
    logger.warning("forward transform not settled at omega=%g after %d panels", omega, panels)
    return value


def inverse_transform(hat_values: np.ndarray, grid: FrequencyGrid,
                      t: Union[float, Sequence[float], np.ndarray]) -> np.ndarray:
    """(1/pi) Re sum_j hat_values[j] exp(i omega_j t) w_j.

    `hat_values` has shape (n_omega, n).  A scalar t returns shape (n,);
    an array of times returns (len(t), n).
    """
    hat_values = np.asarray(hat_values)
    if hat_values.shape[0] != grid.n_omega:
        raise ValueError(f"expected {grid.n_omega} frequency values, got {hat_values.shape[0]}")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    kernel = np.exp(1j * np.outer(times, grid.nodes)) * grid.weights[None, :]
    fields = (kernel @ hat_values.reshape(grid.n_omega, -1)).real / np.pi
    fields = fields.reshape((len(times),) + hat_values.shape[1:])
    return fields[0] if np.ndim(t) == 0 else fields


def tail_ratio(hat_values: np.ndarray) -> float:
    """|u_hat(omega_max)| / max_j |u_hat(omega_j)|: cutoff adequacy diagnostic."""
    norms = np.linalg.norm(np.asarray(hat_values).reshape(len(hat_values), -1), axis=1)
    peak = norms.max() if norms.size else 0.0
    return float(norms[-1] / peak) if peak > 0 else 0.0
