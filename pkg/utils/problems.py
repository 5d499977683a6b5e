# utils/problems.py
"""Problem definitions: coefficients, sources and parameter boxes.

All problems live on D = [0,1]^2 split at x1 = 0.5 into D1 (left) and D2
(right), with homogeneous Dirichlet data and zero initial state.  The
diffusion/reaction coefficients are constant per subdomain, so every operator
term is (scalar function of xi) x (stiffness or mass on one subdomain).
Sources are sums of separable terms factor(xi) * g(t) * h(x) on one subdomain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.frequency import ParameterPoint, forward_time_transform

ScalarOfXi = Callable[[Sequence[float]], float]
TimeProfile = Callable[[np.ndarray], np.ndarray]
SpaceProfile = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OperatorTermSpec:
    tag: str
    kind: str          # "stiffness" | "mass"
    subdomain: int     # 1 | 2
    alpha: ScalarOfXi


@dataclass(frozen=True)
class SourceTermSpec:
    tag: str
    subdomain: int
    factor: ScalarOfXi
    time_profile: TimeProfile
    space_profile: SpaceProfile


@dataclass
class ProblemDefinition:
    id: str
    parameter_box: List[Tuple[float, float]]
    operator_terms: List[OperatorTermSpec]
    source_terms: List[SourceTermSpec]
    final_time: float = 1.0
    analytical: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    _transforms: Dict[Tuple[str, float], complex] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        tags = [t.tag for t in self.operator_terms] + [s.tag for s in self.source_terms]
        if len(tags) != len(set(tags)) or "gamma" in tags:
            raise ValueError(f"coefficient tags of problem {self.id!r} must be unique: {tags}")
        self._alpha = {t.tag: t for t in self.operator_terms}
        self._sources = {s.tag: s for s in self.source_terms}

    @property
    def n_params(self) -> int:
        return len(self.parameter_box)

    def source(self, tag: str) -> SourceTermSpec:
        return self._sources[tag]

    def has_tag(self, name: str) -> bool:
        try:
            self._resolve(name)
        except KeyError:
            return False
        return True

    def _resolve(self, name: str):
        if name == "gamma":
            return ("gamma", None)
        if name in self._alpha:
            return ("alpha", self._alpha[name])
        base, _, part = name.partition(":")
        if part in ("re", "im") and base in self._sources:
            return (part, self._sources[base])
        raise KeyError(f"unknown coefficient tag {name!r} for problem {self.id!r}")

    def time_transform(self, tag: str, omega: float) -> complex:
        key = (tag, float(omega))
        value = self._transforms.get(key)
        if value is None:
            value = forward_time_transform(self._sources[tag].time_profile, omega, self.final_time)
            self._transforms[key] = value
        return value

    def coefficient(self, name: str, mu: ParameterPoint) -> float:
        """Evaluate alpha_j(mu), gamma(mu) = omega or beta_j^{re/im}(mu)."""
        kind, spec = self._resolve(name)
        if kind == "gamma":
            return mu.omega
        if kind == "alpha":
            return float(spec.alpha(mu.xi))
        value = spec.factor(mu.xi) * self.time_transform(spec.tag, mu.omega)
        return float(value.real if kind == "re" else value.imag)

    def source_at(self, tag: str, xi: Sequence[float], t) -> float:
        spec = self._sources[tag]
        return float(spec.factor(xi) * spec.time_profile(np.asarray(t, dtype=float)))


# --- preset problems -------------------------------------------------------

def _sinsin(x1, x2):
    return np.sin(np.pi * x1) * np.sin(np.pi * x2)


def _exp_square(x1, x2):
    return np.exp(5.0 * (x1 + x2) ** 2)


def analytical_heat(x: np.ndarray, t: float) -> np.ndarray:
    """u(x, t) = (1/pi) t/(t^2+1) sin(pi x1) sin(pi x2)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    value = (1.0 / math.pi) * t / (t * t + 1.0) * _sinsin(x[:, 0], x[:, 1])
    return value


def heat_problem() -> ProblemDefinition:
    # c = xi1 on D1, 2 xi2 on D2; f from the manufactured solution above
    g_dt = lambda t: (1.0 / math.pi) * (1.0 - t ** 2) / (1.0 + t ** 2) ** 2
    g_diff = lambda t: 2.0 * math.pi * t / (1.0 + t ** 2)
    one = lambda xi: 1.0
    return ProblemDefinition(
        id="heat",
        parameter_box=[(1.0, 2.0), (1.0, 2.0)],
        operator_terms=[
            OperatorTermSpec("a1", "stiffness", 1, lambda xi: xi[0]),
            OperatorTermSpec("a2", "stiffness", 2, lambda xi: 2.0 * xi[1]),
        ],
        source_terms=[
            SourceTermSpec("b1", 1, one, g_dt, _sinsin),
            SourceTermSpec("b2", 2, one, g_dt, _sinsin),
            SourceTermSpec("b3", 1, lambda xi: xi[0], g_diff, _sinsin),
            SourceTermSpec("b4", 2, lambda xi: 2.0 * xi[1], g_diff, _sinsin),
        ],
        final_time=1.0,
        analytical=analytical_heat,
    )


def rd1_problem() -> ProblemDefinition:
    g = lambda t: np.exp(-t ** 2)
    one = lambda xi: 1.0
    return ProblemDefinition(
        id="rd1",
        parameter_box=[(1.0, 2.0)] * 4,
        operator_terms=[
            OperatorTermSpec("a1", "stiffness", 1, lambda xi: 100.0 * xi[0]),
            OperatorTermSpec("a2", "stiffness", 2, lambda xi: 10.0 * xi[1]),
            OperatorTermSpec("a3", "mass", 1, lambda xi: xi[2]),
            OperatorTermSpec("a4", "mass", 2, lambda xi: 0.1 * xi[3]),
        ],
        source_terms=[
            SourceTermSpec("b1", 1, one, g, _exp_square),
            SourceTermSpec("b2", 2, one, g, _exp_square),
        ],
        final_time=1.0,
    )


def rd2_problem() -> ProblemDefinition:
    # c1 = 0 on D1 and c2 = 0 on D2: one term per subdomain
    g = lambda t: (1.0 - t ** 2) / (1.0 + t ** 2) ** 2
    one = lambda xi: 1.0
    return ProblemDefinition(
        id="rd2",
        parameter_box=[(3.0, 4.0), (3.0, 4.0)],
        operator_terms=[
            OperatorTermSpec("a1", "mass", 1, lambda xi: 100.0 * xi[1]),
            OperatorTermSpec("a2", "stiffness", 2, lambda xi: 10.0 * xi[0]),
        ],
        source_terms=[
            SourceTermSpec("b1", 1, one, g, _exp_square),
            SourceTermSpec("b2", 2, one, g, _exp_square),
        ],
        final_time=1.0,
    )


PROBLEMS: Dict[str, Callable[[], ProblemDefinition]] = {
    "heat": heat_problem,
    "rd1": rd1_problem,
    "rd2": rd2_problem,
}


def get_problem(problem_id: str) -> ProblemDefinition:
    try:
        return PROBLEMS[problem_id]()
    except KeyError:
        raise KeyError(f"unknown problem {problem_id!r}; choose one of {sorted(PROBLEMS)}") from None


def zero_source(problem: ProblemDefinition) -> ProblemDefinition:
    """Same operator with f = 0 (pipeline sanity checks)."""
    zero = lambda t: 0.0 * np.asarray(t, dtype=float)
    return ProblemDefinition(
        id="custom",
        parameter_box=list(problem.parameter_box),
        operator_terms=list(problem.operator_terms),
        source_terms=[SourceTermSpec(s.tag, s.subdomain, s.factor, zero, s.space_profile)
                      for s in problem.source_terms],
        final_time=problem.final_time,
    )
