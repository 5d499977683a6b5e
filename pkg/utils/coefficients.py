# utils/coefficients.py
"""Parameter-dependent scalar coefficients of the affine expansions.

Every affine term in the toolkit pairs a mu-independent matrix (or vector)
with a coefficient from this module.  Coefficients are small expression trees
rather than closures so that they can be written into the offline artifact
and rebuilt later:

    Tag("a1")               evaluator of the problem definition (alpha, gamma, beta)
    Zeta("X1", 2, "re")     coefficient of a trained separated solution
    Product((...), scale)   products of the above, with a constant factor
    Const(0.0)              padding terms

They are evaluated against a `CoefficientContext`, which knows the problem
definition and every separated solution registered so far, and caches the
zeta coefficients per parameter point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class OpCounter:
    """Counts online work: scalar flops of coefficient evaluation and
    length-n vector operations.

    `widest` is the longest array axis seen by `contract`; for coefficient
    evaluation it must not depend on the mesh.
    """

    scalar_ops: int = 0
    vector_ops: int = 0
    cache_hits: int = 0
    widest: int = 0

    def contract(self, a, b) -> np.ndarray:
        """``tensordot(a, b, axes=1)``, charged 2 flops per multiply-add."""
        a = np.asarray(a)
        b = np.asarray(b)
        out = np.tensordot(a, b, axes=1)
        self.scalar_ops += 2 * int(np.size(out)) * int(a.shape[-1])
        self.widest = max(self.widest, *a.shape, *b.shape)
        return out

    def reset(self) -> None:
        self.scalar_ops = 0
        self.vector_ops = 0
        self.cache_hits = 0
        self.widest = 0


class Coefficient:
    kind = "abstract"

    def __call__(self, mu, ctx: "CoefficientContext") -> float:
        raise NotImplementedError

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Tag(Coefficient):
    name: str
    kind = "tag"

    def __call__(self, mu, ctx):
        return ctx.tag(self.name, mu)

    def to_dict(self):
        return {"kind": self.kind, "name": self.name}


@dataclass(frozen=True)
class Zeta(Coefficient):
    solution: str
    index: int
    part: str  # "re" | "im"
    kind = "zeta"

    def __post_init__(self):
        if self.part not in ("re", "im"):
            raise ValueError(f"zeta part must be 're' or 'im', got {self.part!r}")

    def __call__(self, mu, ctx):
        zeta_re, zeta_im = ctx.zetas(self.solution, mu)
        return float(zeta_re[self.index] if self.part == "re" else zeta_im[self.index])

    def to_dict(self):
        return {"kind": self.kind, "solution": self.solution, "index": self.index, "part": self.part}


@dataclass(frozen=True)
class Const(Coefficient):
    value: float
    kind = "const"

    def __call__(self, mu, ctx):
        return self.value

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class Product(Coefficient):
    factors: Tuple[Coefficient, ...]
    scale: float = 1.0
    kind = "product"

    def __call__(self, mu, ctx):
        value = self.scale
        for factor in self.factors:
            value *= factor(mu, ctx)
        if ctx.counter is not None:
            ctx.counter.scalar_ops += len(self.factors)
        return value

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale, "factors": [f.to_dict() for f in self.factors]}


ZERO = Const(0.0)
GAMMA = Tag("gamma")


def product(*factors: Coefficient, scale: float = 1.0) -> Coefficient:
    """Build a flattened product; constants are folded into the scale."""
    flat: List[Coefficient] = []
    for f in factors:
        if isinstance(f, Product):
            scale *= f.scale
            flat.extend(f.factors)
        elif isinstance(f, Const):
            scale *= f.value
        else:
            flat.append(f)
    if scale == 0.0:
        return ZERO
    if not flat:
        return Const(scale)
    if len(flat) == 1 and scale == 1.0:
        return flat[0]
    return Product(tuple(flat), scale)


def coefficient_from_dict(data: Dict[str, Any]) -> Coefficient:
    kind = data.get("kind")
    if kind == "tag":
        return Tag(data["name"])
    if kind == "zeta":
        return Zeta(data["solution"], int(data["index"]), data["part"])
    if kind == "const":
        return Const(float(data["value"]))
    if kind == "product":
        return Product(tuple(coefficient_from_dict(f) for f in data["factors"]), float(data["scale"]))
    raise ValueError(f"unknown coefficient kind: {kind!r}")


class CoefficientContext:
    """Evaluation environment for coefficients.

    `problem` resolves tags (it must expose ``coefficient(name, mu)``);
    `solutions` maps registry keys ("X1", "G", "I2", ...) to separated
    solutions exposing ``coefficients(mu, ctx)``.  Zeta values are cached
    for the most recent parameter point only.
    """

    def __init__(self, problem, solutions: Optional[Dict[str, Any]] = None,
                 counter: Optional[OpCounter] = None):
        self.problem = problem
        self.solutions: Dict[str, Any] = dict(solutions or {})
        self.counter = counter
        self._cache_mu: Any = None
        self._zeta_cache: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}

    def register(self, solution) -> None:
        self.solutions[solution.key] = solution
        self._zeta_cache.pop(solution.key, None)

    def clear_cache(self) -> None:
        self._zeta_cache.clear()
        self._cache_mu = None

    @property
    def cache_size(self) -> int:
        return len(self._zeta_cache)

    def tag(self, name: str, mu) -> float:
        if self.counter is not None:
            self.counter.scalar_ops += 1
        return self.problem.coefficient(name, mu)

    def contract(self, a, b) -> np.ndarray:
        if self.counter is not None:
            return self.counter.contract(a, b)
        return np.tensordot(np.asarray(a), np.asarray(b), axes=1)

    def zetas(self, key: str, mu) -> Tuple[np.ndarray, np.ndarray]:
        if mu != self._cache_mu:
            self._zeta_cache.clear()
            self._cache_mu = mu
        cached = self._zeta_cache.get(key)
        if cached is not None:
            if self.counter is not None:
                self.counter.cache_hits += 1
            return cached
        try:
            solution = self.solutions[key]
        except KeyError:
            raise KeyError(f"separated solution {key!r} is not registered") from None
        zeta_re, zeta_im, _ = solution.coefficients(mu, self)
        self._zeta_cache[key] = (zeta_re, zeta_im)
        return zeta_re, zeta_im

    def values(self, coefficients: Sequence[Coefficient], mu) -> np.ndarray:
        return np.array([c(mu, self) for c in coefficients], dtype=float)

    def derived(self, solutions: Iterable[Any]) -> "CoefficientContext":
        """Copy of this context with some solutions replaced (truncation sweeps)."""
        ctx = CoefficientContext(self.problem, self.solutions, self.counter)
        for s in solutions:
            ctx.register(s)
        return ctx
