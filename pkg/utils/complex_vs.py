# utils/complex_vs.py
"""Greedy variable separation for affine complex-valued linear systems.

The system is

    (P(mu) + i Q(mu)) u(mu) = f_re(mu) + i f_im(mu),
    P = sum_j a_j(mu) K_j,  Q = sum_j b_j(mu) L_j,
    f_re = sum_j c_j(mu) F_j,  f_im = sum_j d_j(mu) G_j,

and the greedy builds u_N(mu) = sum_k (zeta_k^re(mu) c_k^re + i zeta_k^im(mu) c_k^im).
The unknown may be a vector (n,) or a matrix (n, m); matrices use the
Frobenius inner product throughout.

Online, the zetas are computed from the reduced data alone:

    gram_re[j] = V^T K_j V,   gram_im[j] = V^T L_j V,   proj = V^T F
    V = [c_1^re, c_1^im, c_2^re, c_2^im, ...]
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.sparse.linalg import splu

from utils.coefficients import GAMMA, Coefficient, CoefficientContext, Tag, coefficient_from_dict
from utils.errors import SingularSystemError
from utils.frequency import ParameterPoint

logger = logging.getLogger(__name__)

SOLVE_RTOL = 1e-10
DEGENERATE_RTOL = 1e-14
ZETA_PAIR_FLOPS = 12

Term = Tuple[Coefficient, Any]


# ----------------- Linear algebra helpers -----------------

def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.vdot(a, b))


def _norm(a) -> float:
    return float(np.linalg.norm(np.ravel(a)))


def factorize(matrix, mu: Any = None) -> Callable[[np.ndarray], np.ndarray]:
    """LU of a sparse (splu) or dense (lu_factor) square matrix, real or complex.

    Returns a solve callable; raises SingularSystemError on a singular matrix.
    """
    if sp.issparse(matrix):
        try:
            lu = splu(sp.csc_matrix(matrix))
        except RuntimeError as exc:
            raise SingularSystemError(f"sparse factorization failed: {exc}", mu=mu) from exc
        solve = lu.solve
    else:
        dense = np.asarray(matrix)
        with warnings.catch_warnings():
            warnings.simplefilter("error", LinAlgWarning)
            try:
                factors = lu_factor(dense, check_finite=True)
            except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
                raise SingularSystemError(f"dense factorization failed: {exc}", mu=mu,
                                          condition=_condition(dense)) from exc
        solve = lambda rhs: lu_solve(factors, rhs)

    def guarded(rhs):
        x = solve(rhs)
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("solution is not finite", mu=mu,
                                      condition=None if sp.issparse(matrix) else _condition(np.asarray(matrix)))
        return x

    return guarded


def _condition(dense: np.ndarray) -> Optional[float]:
    try:
        return float(np.linalg.cond(dense))
    except np.linalg.LinAlgError:
        return float("inf")


def solve_refined(matrix, rhs: np.ndarray, mu: Any = None, label: str = "solve") -> np.ndarray:
    """Direct solve plus one step of iterative refinement; warns above SOLVE_RTOL."""
    solve = factorize(matrix, mu)
    x = solve(rhs)
    residual = rhs - matrix @ x
    x = x + solve(residual)
    scale = _norm(rhs)
    if scale > 0:
        rel = _norm(rhs - matrix @ x) / scale
        if rel > SOLVE_RTOL:
            logger.warning("%s: relative residual %.2e above %.0e at mu=%s", label, rel, SOLVE_RTOL, mu)
    return x


# ----------------- Affine systems -----------------

@dataclass(frozen=True)
class AffineComplexSystem:
    real_terms: Tuple[Term, ...]
    imag_terms: Tuple[Term, ...]
    rhs_real: Tuple[Term, ...]
    rhs_imag: Tuple[Term, ...]
    n: int
    rhs_shape: Tuple[int, ...]
    name: str = "system"

    def __post_init__(self):
        for _, m in self.real_terms + self.imag_terms:
            if m.shape != (self.n, self.n):
                raise ValueError(f"{self.name}: operator term of shape {m.shape}, expected {(self.n, self.n)}")
        for _, f in self.rhs_real + self.rhs_imag:
            if np.shape(f) != self.rhs_shape:
                raise ValueError(f"{self.name}: rhs term of shape {np.shape(f)}, expected {self.rhs_shape}")

    @property
    def is_sparse(self) -> bool:
        mats = [m for _, m in self.real_terms + self.imag_terms]
        return bool(mats) and all(sp.issparse(m) for m in mats)

    def _combine(self, terms, values):
        if self.is_sparse:
            out = sp.csr_matrix((self.n, self.n))
        else:
            out = np.zeros((self.n, self.n))
        for (_, m), v in zip(terms, values):
            if v != 0.0:
                out = out + v * (m.toarray() if sp.issparse(m) and not self.is_sparse else m)
        return out

    def operator_parts(self, mu: ParameterPoint, ctx: CoefficientContext):
        """(P(mu), Q(mu))."""
        a = ctx.values([c for c, _ in self.real_terms], mu)
        b = ctx.values([c for c, _ in self.imag_terms], mu)
        return self._combine(self.real_terms, a), self._combine(self.imag_terms, b)

    def rhs(self, mu: ParameterPoint, ctx: CoefficientContext) -> Tuple[np.ndarray, np.ndarray]:
        fr = np.zeros(self.rhs_shape)
        fi = np.zeros(self.rhs_shape)
        for (c, f), v in zip(self.rhs_real, ctx.values([c for c, _ in self.rhs_real], mu)):
            fr += v * np.asarray(f)
        for (c, f), v in zip(self.rhs_imag, ctx.values([c for c, _ in self.rhs_imag], mu)):
            fi += v * np.asarray(f)
        return fr, fi

    def apply(self, mu: ParameterPoint, ctx: CoefficientContext, ur: np.ndarray, ui: np.ndarray):
        P, Q = self.operator_parts(mu, ctx)
        return P @ ur - Q @ ui, Q @ ur + P @ ui

    def complex_matrix(self, mu: ParameterPoint, ctx: CoefficientContext):
        P, Q = self.operator_parts(mu, ctx)
        return (P + 1j * Q).tocsc() if sp.issparse(P) else P + 1j * Q

    def solve(self, mu: ParameterPoint, ctx: CoefficientContext) -> np.ndarray:
        """Direct complex solve (the oracle for u(mu))."""
        fr, fi = self.rhs(mu, ctx)
        return solve_refined(self.complex_matrix(mu, ctx), fr + 1j * fi, mu=mu, label=self.name)


def affine_system_from_operator(op, rhs, name: str = "global") -> AffineComplexSystem:
    """Monolithic system sum alpha_j A_j + i gamma M = sum beta F from mesh_fem output."""
    return AffineComplexSystem(
        real_terms=tuple((Tag(t.tag), t.matrix) for t in op.terms),
        imag_terms=((GAMMA, op.mass),),
        rhs_real=tuple((Tag(tag), v) for tag, v in rhs.real_terms),
        rhs_imag=tuple((Tag(tag), v) for tag, v in rhs.imag_terms),
        n=op.n,
        rhs_shape=(op.n,),
        name=name,
    )


# ----------------- Samples -----------------

@dataclass(frozen=True)
class SampleSet:
    points: Tuple[ParameterPoint, ...]
    rng_seed: int

    def __post_init__(self):
        if not self.points:
            raise ValueError("sample set must not be empty")
        if len(set(self.points)) != len(self.points):
            raise ValueError("sample set contains duplicate points")

    def __len__(self) -> int:
        return len(self.points)


def draw_training_samples(box: Sequence[Tuple[float, float]], omega_max: float, count: int,
                          seed: int) -> SampleSet:
    """xi uniform in the box, omega uniform in [0, omega_max]."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    points = []
    for _ in range(int(count)):
        omega = rng.uniform(0.0, omega_max)
        xi = lo + (hi - lo) * rng.uniform(size=len(box))
        points.append(ParameterPoint(omega, tuple(xi)))
    return SampleSet(tuple(points), int(seed))


# ----------------- Separated solutions -----------------

@dataclass
class SeparatedSolution:
    key: str
    shape: Tuple[int, ...]
    modes_re: List[np.ndarray]
    modes_im: List[np.ndarray]
    samples: List[ParameterPoint]
    real_coefs: List[Coefficient]
    imag_coefs: List[Coefficient]
    rhs_re_coefs: List[Coefficient]
    rhs_im_coefs: List[Coefficient]
    gram_re: np.ndarray   # (m_P, 2N, 2N)
    gram_im: np.ndarray   # (m_Q, 2N, 2N)
    proj_re: np.ndarray   # (m_fre, 2N)
    proj_im: np.ndarray   # (m_fim, 2N)
    active: np.ndarray    # (N, 2) bool: real / imaginary part of mode k is nonzero
    history: List[Dict[str, Any]] = field(default_factory=list)
    converged: bool = True
    epsilon: float = 0.0
    scale: float = 0.0

    @property
    def N(self) -> int:
        return len(self.modes_re)

    def coefficients(self, mu: ParameterPoint, ctx: CoefficientContext):
        """(zeta_re, zeta_im, degenerate_flags) at mu, from the reduced data only."""
        N = self.N
        zr = np.zeros(N)
        zi = np.zeros(N)
        flags = np.zeros(N, dtype=bool)
        if N == 0:
            return zr, zi, flags
        contract = ctx.contract
        P = contract(ctx.values(self.real_coefs, mu), self.gram_re)
        Q = contract(ctx.values(self.imag_coefs, mu), self.gram_im)
        pr = contract(ctx.values(self.rhs_re_coefs, mu), self.proj_re)
        pi = contract(ctx.values(self.rhs_im_coefs, mu), self.proj_im)

        x = np.zeros(2 * N)  # u_re coordinates in V
        y = np.zeros(2 * N)  # u_im coordinates in V
        for k in range(N):
            r, i = 2 * k, 2 * k + 1
            s_re = pr[r] - contract(P[r, :r], x[:r]) + contract(Q[r, :r], y[:r])
            s_im = pi[i] - contract(Q[i, :r], x[:r]) - contract(P[i, :r], y[:r])
            zr[k], zi[k], flags[k] = zeta_pair(P[r, r], P[i, i], Q[r, i], Q[i, r], s_re, s_im,
                                               bool(self.active[k, 0]), bool(self.active[k, 1]))
            if ctx.counter is not None:
                ctx.counter.scalar_ops += 4 + ZETA_PAIR_FLOPS
            x[r] = zr[k]
            y[i] = zi[k]
        if flags.any():
            logger.debug("%s: degenerate zeta at mu=%s for modes %s", self.key, mu, np.flatnonzero(flags))
        return zr, zi, flags

    def expand(self, zr: np.ndarray, zi: np.ndarray, counter=None) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        updates = 0
        for k in range(self.N):
            if zr[k] != 0.0:
                out += zr[k] * self.modes_re[k]
                updates += 1
            if zi[k] != 0.0:
                out += 1j * zi[k] * self.modes_im[k]
                updates += 1
        if counter is not None:
            counter.vector_ops += updates
        return out

    def evaluate(self, mu: ParameterPoint, ctx: CoefficientContext) -> np.ndarray:
        if ctx.solutions.get(self.key) is self:
            zr, zi = ctx.zetas(self.key, mu)
        else:
            zr, zi, _ = self.coefficients(mu, ctx)
        return self.expand(zr, zi, ctx.counter)

    def truncated(self, n_terms: int) -> "SeparatedSolution":
        """The first n_terms modes; equals an n_terms-step greedy run."""
        n = max(0, min(int(n_terms), self.N))
        return SeparatedSolution(
            key=self.key, shape=self.shape,
            modes_re=self.modes_re[:n], modes_im=self.modes_im[:n], samples=self.samples[:n],
            real_coefs=self.real_coefs, imag_coefs=self.imag_coefs,
            rhs_re_coefs=self.rhs_re_coefs, rhs_im_coefs=self.rhs_im_coefs,
            gram_re=self.gram_re[:, :2 * n, :2 * n], gram_im=self.gram_im[:, :2 * n, :2 * n],
            proj_re=self.proj_re[:, :2 * n], proj_im=self.proj_im[:, :2 * n],
            active=self.active[:n], history=self.history[:n],
            converged=self.converged if n == self.N else False,
            epsilon=self.epsilon, scale=self.scale,
        )

    # --- persistence ---
    def to_payload(self, prefix: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
        meta = {
            "key": self.key,
            "shape": list(self.shape),
            "N": self.N,
            "samples": [p.to_dict() for p in self.samples],
            "real_coefs": [c.to_dict() for c in self.real_coefs],
            "imag_coefs": [c.to_dict() for c in self.imag_coefs],
            "rhs_re_coefs": [c.to_dict() for c in self.rhs_re_coefs],
            "rhs_im_coefs": [c.to_dict() for c in self.rhs_im_coefs],
            "history": self.history,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "scale": self.scale,
        }
        arrays = {
            f"{prefix}modes_re": np.asarray(self.modes_re).reshape((self.N,) + self.shape),
            f"{prefix}modes_im": np.asarray(self.modes_im).reshape((self.N,) + self.shape),
            f"{prefix}gram_re": self.gram_re,
            f"{prefix}gram_im": self.gram_im,
            f"{prefix}proj_re": self.proj_re,
            f"{prefix}proj_im": self.proj_im,
            f"{prefix}active": self.active,
        }
        return meta, arrays

    @classmethod
    def from_payload(cls, meta: Dict[str, Any], arrays: Dict[str, np.ndarray], prefix: str) -> "SeparatedSolution":
        return cls(
            key=meta["key"],
            shape=tuple(meta["shape"]),
            modes_re=list(arrays[f"{prefix}modes_re"]),
            modes_im=list(arrays[f"{prefix}modes_im"]),
            samples=[ParameterPoint.from_dict(p) for p in meta["samples"]],
            real_coefs=[coefficient_from_dict(c) for c in meta["real_coefs"]],
            imag_coefs=[coefficient_from_dict(c) for c in meta["imag_coefs"]],
            rhs_re_coefs=[coefficient_from_dict(c) for c in meta["rhs_re_coefs"]],
            rhs_im_coefs=[coefficient_from_dict(c) for c in meta["rhs_im_coefs"]],
            gram_re=np.asarray(arrays[f"{prefix}gram_re"], dtype=float),
            gram_im=np.asarray(arrays[f"{prefix}gram_im"], dtype=float),
            proj_re=np.asarray(arrays[f"{prefix}proj_re"], dtype=float),
            proj_im=np.asarray(arrays[f"{prefix}proj_im"], dtype=float),
            active=np.asarray(arrays[f"{prefix}active"], dtype=bool),
            history=list(meta.get("history", [])),
            converged=bool(meta.get("converged", True)),
            epsilon=float(meta.get("epsilon", 0.0)),
            scale=float(meta.get("scale", 0.0)),
        )


def zeta_pair(p_rr: float, p_ii: float, q_ri: float, q_ir: float, s_re: float, s_im: float,
              active_re: bool = True, active_im: bool = True) -> Tuple[float, float, bool]:
    """Solve the 2x2 Petrov-Galerkin system for (zeta_re, zeta_im).

        p_rr zeta_re - q_ri zeta_im = s_re
        q_ir zeta_re + p_ii zeta_im = s_im

    Returns (zeta_re, zeta_im, degenerate).  A vanishing determinant gives
    zeros and degenerate=True.
    """
    if active_re and active_im:
        det = p_rr * p_ii + q_ri * q_ir
        scale = abs(p_rr * p_ii) + abs(q_ri * q_ir)
        if scale == 0.0 or abs(det) <= DEGENERATE_RTOL * scale:
            return 0.0, 0.0, True
        return (p_ii * s_re + q_ri * s_im) / det, (p_rr * s_im - q_ir * s_re) / det, False
    if active_re:
        if p_rr == 0.0:
            return 0.0, 0.0, True
        return s_re / p_rr, 0.0, False
    if active_im:
        if p_ii == 0.0:
            return 0.0, 0.0, True
        return 0.0, s_im / p_ii, False
    return 0.0, 0.0, True


def full_dimension_coefficients(system: AffineComplexSystem, modes_re: Sequence[np.ndarray],
                                modes_im: Sequence[np.ndarray], active: np.ndarray,
                                mu: ParameterPoint, ctx: CoefficientContext):
    """Same zeta recursion evaluated with length-n vectors (offline oracle)."""
    P, Q = system.operator_parts(mu, ctx)
    fr, fi = system.rhs(mu, ctx)
    ur = np.zeros(system.rhs_shape)
    ui = np.zeros(system.rhs_shape)
    N = len(modes_re)
    zr, zi = np.zeros(N), np.zeros(N)
    for k in range(N):
        cr, ci = modes_re[k], modes_im[k]
        rr = fr - P @ ur + Q @ ui
        ri = fi - Q @ ur - P @ ui
        zr[k], zi[k], _ = zeta_pair(_dot(cr, P @ cr), _dot(ci, P @ ci), _dot(cr, Q @ ci), _dot(ci, Q @ cr),
                                    _dot(cr, rr), _dot(ci, ri), bool(active[k, 0]), bool(active[k, 1]))
        ur = ur + zr[k] * cr
        ui = ui + zi[k] * ci
    return zr, zi


# ----------------- Greedy -----------------

def _residual(system: AffineComplexSystem, mu: ParameterPoint, ctx: CoefficientContext,
              solution: Optional[SeparatedSolution]) -> Tuple[np.ndarray, np.ndarray]:
    fr, fi = system.rhs(mu, ctx)
    if solution is None or solution.N == 0:
        return fr, fi
    zr, zi, _ = solution.coefficients(mu, ctx)
    u = solution.expand(zr, zi)
    ar, ai = system.apply(mu, ctx, u.real, u.imag)
    return fr - ar, fi - ai


def residual_norm(system: AffineComplexSystem, mu: ParameterPoint, ctx: CoefficientContext,
                  solution: Optional[SeparatedSolution]) -> float:
    rr, ri = _residual(system, mu, ctx, solution)
    return float(np.hypot(_norm(rr), _norm(ri)))


def solve_snapshot(system: AffineComplexSystem, mu: ParameterPoint, history: Optional[SeparatedSolution],
                   ctx: CoefficientContext) -> Tuple[np.ndarray, np.ndarray]:
    """Solve [[P, -Q], [Q, P]] [c_re; c_im] = [r_re; r_im] for the residual of `history` at mu."""
    rr, ri = _residual(system, mu, ctx, history)
    P, Q = system.operator_parts(mu, ctx)
    n = system.n
    if sp.issparse(P):
        block = sp.bmat([[P, -Q], [Q, P]], format="csc")
    else:
        block = np.block([[P, -Q], [Q, P]])
    rhs = np.concatenate([rr.reshape(n, -1), ri.reshape(n, -1)], axis=0)
    if not np.any(rhs):
        zero = np.zeros(system.rhs_shape)
        return zero, zero.copy()
    sol = solve_refined(block, rhs, mu=mu, label=f"{system.name} snapshot")
    return sol[:n].reshape(system.rhs_shape), sol[n:].reshape(system.rhs_shape)


class _ReducedBuilder:
    """Grows the reduced data one mode at a time, keeping K_j v products."""

    def __init__(self, system: AffineComplexSystem):
        self.system = system
        self.basis: List[np.ndarray] = []
        self.k_basis = [[] for _ in system.real_terms]
        self.l_basis = [[] for _ in system.imag_terms]
        self.gram_re = np.zeros((len(system.real_terms), 0, 0))
        self.gram_im = np.zeros((len(system.imag_terms), 0, 0))
        self.proj_re = np.zeros((len(system.rhs_real), 0))
        self.proj_im = np.zeros((len(system.rhs_imag), 0))

    @staticmethod
    def _grow(gram, terms, products, basis, new):
        m, size, _ = gram.shape
        out = np.zeros((m, size + len(new), size + len(new)))
        out[:, :size, :size] = gram
        for j, (_, mat) in enumerate(terms):
            for v in new:
                products[j].append(mat @ v)
            full = basis + new
            for a in range(size, size + len(new)):
                for b in range(size + len(new)):
                    out[j, a, b] = _dot(full[a], products[j][b])
                    out[j, b, a] = _dot(full[b], products[j][a])
        return out

    def add(self, c_re: np.ndarray, c_im: np.ndarray) -> None:
        new = [c_re, c_im]
        self.gram_re = self._grow(self.gram_re, self.system.real_terms, self.k_basis, self.basis, new)
        self.gram_im = self._grow(self.gram_im, self.system.imag_terms, self.l_basis, self.basis, new)
        self.basis.extend(new)
        self.proj_re = np.hstack([self.proj_re, [[_dot(v, f) for v in new] for _, f in self.system.rhs_real]]) \
            if self.system.rhs_real else np.zeros((0, len(self.basis)))
        self.proj_im = np.hstack([self.proj_im, [[_dot(v, f) for v in new] for _, f in self.system.rhs_imag]]) \
            if self.system.rhs_imag else np.zeros((0, len(self.basis)))


def _activity(c_re: np.ndarray, c_im: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[bool]]:
    nr, ni = _norm(c_re), _norm(c_im)
    big = max(nr, ni)
    if nr <= DEGENERATE_RTOL * big:
        c_re = np.zeros_like(c_re)
    if ni <= DEGENERATE_RTOL * big:
        c_im = np.zeros_like(c_im)
    return c_re, c_im, [bool(np.any(c_re)), bool(np.any(c_im))]


def vs_greedy(system: AffineComplexSystem, samples: SampleSet, epsilon: float, n_max: int,
              ctx: CoefficientContext, key: str = "U") -> SeparatedSolution:
    """Greedy construction of the separated representation over the sample set."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    points = list(samples.points)
    rng = np.random.default_rng(samples.rng_seed)
    first = int(rng.integers(len(points)))
    builder = _ReducedBuilder(system)

    def current(modes_re, modes_im, chosen, active, history, converged, scale):
        return SeparatedSolution(
            key=key, shape=system.rhs_shape, modes_re=list(modes_re), modes_im=list(modes_im),
            samples=list(chosen),
            real_coefs=[c for c, _ in system.real_terms], imag_coefs=[c for c, _ in system.imag_terms],
            rhs_re_coefs=[c for c, _ in system.rhs_real], rhs_im_coefs=[c for c, _ in system.rhs_imag],
            gram_re=builder.gram_re.copy(), gram_im=builder.gram_im.copy(),
            proj_re=builder.proj_re.copy(), proj_im=builder.proj_im.copy(),
            active=np.array(active, dtype=bool).reshape(-1, 2), history=list(history),
            converged=converged, epsilon=epsilon, scale=scale,
        )

    scale = residual_norm(system, points[first], ctx, None)
    if scale == 0.0:
        # f(mu_1) = 0: restart from the largest rhs in the set, or stop
        norms = [residual_norm(system, p, ctx, None) for p in points]
        first = int(np.argmax(norms))
        scale = norms[first]
        if scale == 0.0:
            logger.info("VS %s: right-hand side vanishes on all %d samples, N=0", key, len(points))
            return current([], [], [], [], [], True, 0.0)

    remaining = list(range(len(points)))
    modes_re: List[np.ndarray] = []
    modes_im: List[np.ndarray] = []
    chosen: List[ParameterPoint] = []
    active: List[List[bool]] = []
    history: List[Dict[str, Any]] = []
    solution = current([], [], [], [], [], False, scale)
    pick = first
    converged = False

    while True:
        mu = points[pick]
        remaining.remove(pick)
        before = residual_norm(system, mu, ctx, solution)
        c_re, c_im = solve_snapshot(system, mu, solution, ctx)
        c_re, c_im, act = _activity(c_re, c_im)
        if not any(act):
            logger.info("VS %s: zero snapshot at step %d, stopping", key, len(modes_re) + 1)
            converged = True
            break
        # unit modes keep the reduced recursion well scaled as the residual shrinks
        if act[0]:
            c_re = c_re / _norm(c_re)
        if act[1]:
            c_im = c_im / _norm(c_im)
        builder.add(c_re, c_im)
        modes_re.append(c_re)
        modes_im.append(c_im)
        chosen.append(mu)
        active.append(act)
        solution = current(modes_re, modes_im, chosen, active, history, False, scale)
        after = residual_norm(system, mu, ctx, solution)

        scan = [residual_norm(system, points[i], ctx, solution) for i in remaining]
        worst = max(scan) if scan else 0.0
        step = {"k": len(modes_re), "mu": mu.to_dict(), "residual_before": before,
                "residual_after": after, "max_residual": worst, "relative": worst / scale}
        history.append(step)
        logger.debug("VS %s step %d: |r(mu_k)| %.3e -> %.3e, max over remaining %.3e",
                     key, step["k"], before, after, worst)

        if not remaining:
            converged = True
            break
        if worst <= epsilon * scale:
            converged = True
            break
        if len(modes_re) >= n_max:
            logger.warning("VS %s: n_max=%d reached with relative residual %.3e > %.1e",
                           key, n_max, worst / scale, epsilon)
            break
        pick = remaining[int(np.argmax(scan))]

    solution = current(modes_re, modes_im, chosen, active, history, converged, scale)
    rel = history[-1]["relative"] if history else 0.0
    logger.info("VS %s: N=%d, relative residual %.3e, converged=%s", key, solution.N, rel, converged)
    return solution


def global_vs_rom(op, rhs, samples: SampleSet, epsilon: float, n_max: int,
                  ctx: CoefficientContext, key: str = "U") -> SeparatedSolution:
    """Plain VS on the monolithic frequency-domain system (no decomposition)."""
    return vs_greedy(affine_system_from_operator(op, rhs), samples, epsilon, n_max, ctx, key)
