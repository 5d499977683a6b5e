# blueprints/bench.py
"""Offline training, online evaluation, references and decay sweeps.

Every command works inside `config.run_dir()` (<output_dir>/<problem>-<hash>):

    offline.zip             trained model (metadata.json + arrays.npz)
    offline.json            term counts and greedy residual histories
    online/samples.csv      per-sample errors (no timing columns)
    online/timings.csv      per-sample wall clock of FT-DD-VS and FEM-BE
    online/time_errors.csv  mean relative error per time level
    online/report.json      ErrorReport
    online/mean_fields.npz  mean solution at t = T (heatmaps)
    reference/*             FEM-BE trajectories and Fourier round-trip check
    sweep/decay.csv         error versus number of separate terms
"""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from extensions import Session
from models.run_models import RunLog
from utils.artifact_utils import ARTIFACT_NAME, check_compatible, ensure_dirs, load_artifact, save_artifact, write_json
from utils.coefficients import CoefficientContext, OpCounter
from utils.complex_vs import SampleSet, SeparatedSolution, draw_training_samples, global_vs_rom
from utils.config import RunConfig
from utils.errors import StageError
from utils.frequency import FrequencyGrid, ParameterPoint, inverse_transform, lgl_grid, tail_ratio
from utils.interface_rom import InterfaceRom, build_interface_rom, evaluate_interface, interface_system
from utils.mesh_fem import (AffineOperator, AffineRhs, DomainPartition, Mesh2D, SubdomainBlocks, assemble,
                            build_mesh, build_partition, extract_blocks, to_vertex_field)
from utils.problems import ProblemDefinition, get_problem
from utils.reference_solvers import (direct_frequency_solve, export_trajectory_csv, fem_be_solve,
                                     heat_exact_trajectory, relative_l2_time_error, time_grid)
from utils.schur_dd import (AffineLoad, AffineSchur, LowRankX, assemble_affine_S,
                            build_affine_F, build_affine_S, schur_direct, solve_dd_direct)
from utils.subdomain_rom import SubdomainRom, build_subdomain_rom, evaluate_full_field

logger = logging.getLogger(__name__)

SOLUTION_ORDER = ("X1", "X2", "Y1", "Y2", "G", "I1", "I2")


@contextmanager
def stage(name: str):
    """Tag any failure inside the block with the pipeline stage name."""
    started = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        logger.exception("stage %s failed", name)
        raise StageError(name, exc) from exc
    logger.info("stage %s done in %.2fs", name, time.perf_counter() - started)


def _log_run(command: str, config: RunConfig, path=None, **fields_) -> None:
    if Session.kw.get("bind") is None:
        return
    try:
        RunLog.record(command, config.problem, config.config_hash(), path=str(path) if path else None, **fields_)
    except Exception:
        logger.exception("failed to write run log")


# ----------------- Discretization -----------------

@dataclass
class Discretization:
    problem: ProblemDefinition
    mesh: Mesh2D
    op: AffineOperator
    rhs: AffineRhs
    part: DomainPartition
    blocks: List[SubdomainBlocks]
    grid: FrequencyGrid

    @classmethod
    def build(cls, config: RunConfig) -> "Discretization":
        problem = get_problem(config.problem)
        mesh = build_mesh(config.nx, config.ny)
        op, rhs = assemble(problem, mesh)
        part = build_partition(mesh)
        blocks = [extract_blocks(op, rhs, part, j) for j in (1, 2)]
        grid = lgl_grid(config.n_omega, config.omega_max)
        return cls(problem, mesh, op, rhs, part, blocks, grid)

    def warm_transforms(self) -> None:
        """Forward transforms of the source profiles at every grid node (xi-independent)."""
        for src in self.problem.source_terms:
            for omega in self.grid.nodes:
                self.problem.time_transform(src.tag, omega)


# ----------------- Offline model -----------------

@dataclass
class OfflineModel:
    config: RunConfig
    disc: Discretization
    samples: SampleSet
    lowrank_x: List[LowRankX]
    lowrank_y: List[LowRankX]
    S: AffineSchur
    F: AffineLoad
    interface: InterfaceRom
    subdomains: List[SubdomainRom]
    timings: Dict[str, float] = field(default_factory=dict)

    def solutions(self) -> Dict[str, SeparatedSolution]:
        sols = {lr.key: lr.solution for lr in self.lowrank_x + self.lowrank_y}
        sols[self.interface.separated.key] = self.interface.separated
        sols.update({rom.key: rom.separated for rom in self.subdomains})
        return sols

    def online_context(self, counter: Optional[OpCounter] = None) -> CoefficientContext:
        ctx = CoefficientContext(self.disc.problem, counter=counter)
        sols = self.solutions()
        for key in SOLUTION_ORDER:
            if key in sols:
                ctx.register(sols[key])
        return ctx

    def term_counts(self) -> Dict[str, Any]:
        return {
            "m_a": [b.m_a for b in self.disc.blocks],
            "m_b": [b.m_b for b in self.disc.blocks],
            "N_S": [lr.N for lr in self.lowrank_x],
            "N_F": [lr.N for lr in self.lowrank_y],
            "m_S": self.S.m_S,
            "m_F": self.F.m_F,
            "N_G": self.interface.N,
            "N_I": [rom.N for rom in self.subdomains],
        }

    def histories(self) -> Dict[str, Any]:
        return {key: {"converged": s.converged, "steps": s.history} for key, s in self.solutions().items()}

    def evaluate(self, mu: ParameterPoint, ctx: CoefficientContext, vertices: bool = False) -> np.ndarray:
        return evaluate_full_field(self.interface, self.subdomains, self.disc.part, mu, ctx,
                                   mesh=self.disc.mesh if vertices else None)

    # ---- persistence ----
    def save(self, path) -> str:
        cfg = self.config
        meta: Dict[str, Any] = {
            "problem": cfg.problem,
            "mesh": [cfg.nx, cfg.ny],
            "omega_max": cfg.omega_max,
            "n_omega": cfg.n_omega,
            "config": cfg.to_dict(runtime=False),
            "config_hash": cfg.config_hash(),
            "seed": self.samples.rng_seed,
            "tolerances": {"eps_x": cfg.eps_x, "eps_f": cfg.eps_f,
                           "eps_interface": cfg.eps_interface, "eps_subdomain": cfg.eps_subdomain},
            "sampling": {"rule": cfg.sampling, "omega": "uniform on [0, omega_max]"},
            "training_samples": [p.to_dict() for p in self.samples.points],
            "term_counts": self.term_counts(),
            "timings": self.timings,
            "solutions": {},
        }
        arrays: Dict[str, np.ndarray] = {}
        for key, sol in self.solutions().items():
            m, a = sol.to_payload(f"{key}__")
            meta["solutions"][key] = m
            arrays.update(a)
        for name, stack in (("S", self.S), ("F", self.F)):
            m, a = stack.to_payload(f"{name}__")
            meta[name] = m
            arrays.update(a)
        meta["interface_provenance"] = self.interface.provenance
        return save_artifact(path, meta, arrays)

    @classmethod
    def load(cls, path, config: RunConfig) -> "OfflineModel":
        meta, arrays = load_artifact(path)
        check_compatible(meta, config.problem, config.nx, config.ny, config.omega_max, config.n_omega)
        disc = Discretization.build(config)
        sols = {key: SeparatedSolution.from_payload(m, arrays, f"{key}__") for key, m in meta["solutions"].items()}
        samples = SampleSet(tuple(ParameterPoint.from_dict(p) for p in meta["training_samples"]), int(meta["seed"]))
        return cls(
            config=config,
            disc=disc,
            samples=samples,
            lowrank_x=[LowRankX(j, "X", sols[f"X{j}"]) for j in (1, 2)],
            lowrank_y=[LowRankX(j, "Y", sols[f"Y{j}"]) for j in (1, 2)],
            S=AffineSchur.from_payload(meta["S"], arrays, "S__"),
            F=AffineLoad.from_payload(meta["F"], arrays, "F__"),
            interface=InterfaceRom(sols["G"], dict(meta.get("interface_provenance", {}))),
            subdomains=[SubdomainRom(j, sols[f"I{j}"]) for j in (1, 2)],
            timings=dict(meta.get("timings", {})),
        )


def train(config: RunConfig, disc: Optional[Discretization] = None) -> OfflineModel:
    """assembly -> affine S / F -> interface ROM -> subdomain ROMs."""
    timings: Dict[str, float] = {}
    t_start = time.perf_counter()
    with stage("assemble"):
        disc = disc or Discretization.build(config)
        samples = draw_training_samples(disc.problem.parameter_box, config.omega_max, config.n_train, config.seed)
        ctx = CoefficientContext(disc.problem)
    timings["assemble"] = time.perf_counter() - t_start

    t0 = time.perf_counter()
    with stage("affine_S"):
        S, lowrank_x = build_affine_S(disc.blocks, samples, config.eps_x, list(config.n_s), ctx)
    timings["affine_S"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with stage("affine_F"):
        F, lowrank_y = build_affine_F(disc.blocks, samples, config.eps_f, list(config.n_f), ctx)
    timings["affine_F"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with stage("interface_rom"):
        interface = build_interface_rom(S, F, samples, config.eps_interface, config.n_gamma, ctx)
    timings["interface_rom"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    with stage("subdomain_rom"):
        subdomains = [build_subdomain_rom(j, disc.blocks[j - 1], interface, samples, config.eps_subdomain,
                                          config.n_i[j - 1], ctx) for j in (1, 2)]
    timings["subdomain_rom"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    model = OfflineModel(config, disc, samples, lowrank_x, lowrank_y, S, F, interface, subdomains, timings)
    logger.info("offline %s: %s", config.problem, model.term_counts())
    return model


def run_offline(config: RunConfig) -> OfflineModel:
    run_dir, _ = ensure_dirs(config.run_dir())
    model = train(config)
    with stage("save"):
        path = model.save(run_dir / ARTIFACT_NAME)
        write_json(run_dir / "offline.json", {"config": config.to_dict(), "term_counts": model.term_counts(),
                                              "histories": model.histories(), "timings": model.timings})
    logger.info("offline artifact written to %s", path)
    _log_run("offline", config, path, note=str(model.term_counts()))
    return model


def load_model(config: RunConfig, artifact: Optional[str] = None) -> OfflineModel:
    path = Path(artifact) if artifact else config.run_dir() / ARTIFACT_NAME
    with stage("load"):
        return OfflineModel.load(path, config)


# ----------------- Online -----------------

def evaluation_samples(problem: ProblemDefinition, count: int, seed: int) -> List[tuple]:
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in problem.parameter_box])
    hi = np.array([b[1] for b in problem.parameter_box])
    return [tuple(float(v) for v in lo + (hi - lo) * rng.uniform(size=len(lo))) for _ in range(int(count))]


@dataclass
class ErrorReport:
    problem: str
    config_hash: str
    xis: List[tuple]
    sample_errors: List[float]
    epsilon_u: float
    epsilon_hat: Dict[str, float]
    time_levels: Dict[str, List[float]]
    online_seconds: List[float]
    reference_seconds: List[float]
    scalar_ops_per_sample: int
    vector_ops_per_sample: int
    tail_ratio: float
    term_counts: Dict[str, Any]
    config: Dict[str, Any]

    @property
    def mean_online(self) -> float:
        return float(np.mean(self.online_seconds)) if self.online_seconds else 0.0

    @property
    def mean_reference(self) -> float:
        return float(np.mean(self.reference_seconds)) if self.reference_seconds else 0.0

    @property
    def speedup(self) -> float:
        return self.mean_reference / self.mean_online if self.mean_online > 0 else float("inf")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem,
            "config_hash": self.config_hash,
            "M": len(self.sample_errors),
            "epsilon_u": self.epsilon_u,
            "epsilon_hat": self.epsilon_hat,
            "time_levels": {k: float(np.mean(v)) for k, v in self.time_levels.items()},
            "online_seconds_mean": self.mean_online,
            "reference_seconds_mean": self.mean_reference,
            "online_seconds_total": float(np.sum(self.online_seconds)),
            "reference_seconds_total": float(np.sum(self.reference_seconds)),
            "speedup": self.speedup,
            "scalar_ops_per_sample": self.scalar_ops_per_sample,
            "vector_ops_per_sample": self.vector_ops_per_sample,
            "tail_ratio": self.tail_ratio,
            "term_counts": self.term_counts,
            "config": self.config,
        }


def _online_sample(model: OfflineModel, xi: tuple, times: np.ndarray, time_levels: Sequence[float]) -> Dict[str, Any]:
    disc = model.disc
    counter = OpCounter()
    ctx = model.online_context(counter)
    mus = [ParameterPoint(w, xi) for w in disc.grid.nodes]

    t0 = time.perf_counter()
    hats = np.array([model.evaluate(mu, ctx) for mu in mus])
    u_rom = inverse_transform(hats, disc.grid, times)
    online = time.perf_counter() - t0

    t0 = time.perf_counter()
    reference = fem_be_solve(disc.problem, disc.op, disc.rhs, model.config.tau, xi)
    ref_seconds = time.perf_counter() - t0

    M = disc.op.mass
    levels = {}
    for t in time_levels:
        m = int(np.argmin(np.abs(times - t)))
        denom = np.sqrt(reference.values[m] @ (M @ reference.values[m]))
        diff = u_rom[m] - reference.values[m]
        levels[t] = float(np.sqrt(diff @ (M @ diff)) / denom) if denom > 0 else float("nan")
    diff = u_rom - reference.values
    num = np.einsum("ti,ti->t", diff, (M @ diff.T).T)
    den = np.einsum("ti,ti->t", reference.values, (M @ reference.values.T).T)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_time = np.where(den > 0, np.sqrt(num / np.where(den > 0, den, 1.0)), np.nan)
    return {
        "error": relative_l2_time_error(u_rom, reference.values, times, M),
        "levels": levels,
        "per_time": per_time,
        "online": online,
        "reference": ref_seconds,
        "scalar_ops": counter.scalar_ops,
        "vector_ops": counter.vector_ops,
        "final_rom": u_rom[-1],
        "final_ref": reference.values[-1],
        "tail": tail_ratio(hats),
    }


def frequency_errors(model: OfflineModel, xis: Sequence[tuple]) -> Dict[str, float]:
    """Mean relative errors of the interface, interior and full frequency fields against
    the monolithic direct solve, over every (xi, LGL node) pair."""
    disc = model.disc
    part = disc.part
    ctx = model.online_context()
    errs: Dict[str, List[float]] = {"interface": [], "interior1": [], "interior2": [], "full": []}
    pieces = {"interface": part.interface_dofs, "interior1": part.interior(1), "interior2": part.interior(2)}
    for xi in xis:
        for w in disc.grid.nodes:
            mu = ParameterPoint(w, xi)
            truth = direct_frequency_solve(disc.op, disc.rhs, mu, disc.problem)
            approx = model.evaluate(mu, ctx)
            for name, idx in list(pieces.items()) + [("full", slice(None))]:
                den = np.linalg.norm(truth[idx])
                if den > 0:
                    errs[name].append(float(np.linalg.norm(approx[idx] - truth[idx]) / den))
    return {k: float(np.mean(v)) if v else 0.0 for k, v in errs.items()}


def run_online(config: RunConfig, model: Optional[OfflineModel] = None, artifact: Optional[str] = None) -> ErrorReport:
    model = model or load_model(config, artifact)
    disc = model.disc
    run_dir, _ = ensure_dirs(config.run_dir())
    out_dir = run_dir / "online"
    out_dir.mkdir(parents=True, exist_ok=True)

    with stage("online"):
        disc.warm_transforms()
        times = time_grid(disc.problem.final_time, config.tau)
        xis = evaluation_samples(disc.problem, config.m_samples, config.eval_seed)
        work = lambda xi: _online_sample(model, xi, times, config.time_levels)
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(work, xis))
        else:
            results = [work(xi) for xi in xis]

    with stage("frequency_errors"):
        eps_hat = frequency_errors(model, xis[:config.n_validation])

    errors = [r["error"] for r in results]
    report = ErrorReport(
        problem=config.problem,
        config_hash=config.config_hash(),
        xis=xis,
        sample_errors=errors,
        epsilon_u=float(np.mean(errors)),
        epsilon_hat=eps_hat,
        time_levels={f"{t:g}": [r["levels"][t] for r in results] for t in config.time_levels},
        online_seconds=[r["online"] for r in results],
        reference_seconds=[r["reference"] for r in results],
        scalar_ops_per_sample=int(results[0]["scalar_ops"]),
        vector_ops_per_sample=int(results[0]["vector_ops"]),
        tail_ratio=float(max(r["tail"] for r in results)),
        term_counts=model.term_counts(),
        config=config.to_dict(runtime=False),
    )
    if report.tail_ratio > 1e-2:
        logger.warning("tail ratio %.2e at omega_max=%g: spectrum may be truncated", report.tail_ratio, config.omega_max)

    with stage("write"):
        _write_online(out_dir, report, results, times, disc)
    logger.info("online %s: eps_u=%.3e, eps_hat=%s, online %.4fs/sample, FEM-BE %.4fs/sample",
                config.problem, report.epsilon_u, eps_hat, report.mean_online, report.mean_reference)
    _log_run("online", config, out_dir, epsilon_u=report.epsilon_u,
             online_seconds=report.mean_online, reference_seconds=report.mean_reference)
    return report


def _write_online(out_dir: Path, report: ErrorReport, results, times: np.ndarray, disc: Discretization) -> None:
    levels = list(report.time_levels)
    with open(out_dir / "samples.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample"] + [f"xi{i + 1}" for i in range(len(report.xis[0]))] + ["error"]
                   + [f"error_t{t}" for t in levels])
        for i, (xi, r) in enumerate(zip(report.xis, results)):
            w.writerow([i] + [f"{v:.12e}" for v in xi] + [f"{r['error']:.12e}"]
                       + [f"{report.time_levels[t][i]:.12e}" for t in levels])
    with open(out_dir / "timings.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample", "online_seconds", "reference_seconds"])
        for i, r in enumerate(results):
            w.writerow([i, f"{r['online']:.6e}", f"{r['reference']:.6e}"])
    per_time = np.nanmean(np.array([r["per_time"] for r in results]), axis=0)
    with open(out_dir / "time_errors.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "error"])
        for t, e in zip(times, per_time):
            if np.isfinite(e):
                w.writerow([f"{t:.10g}", f"{e:.12e}"])
    mean_rom = np.mean([r["final_rom"] for r in results], axis=0)
    mean_ref = np.mean([r["final_ref"] for r in results], axis=0)
    np.savez_compressed(out_dir / "mean_fields.npz", rom=to_vertex_field(disc.mesh, mean_rom),
                        reference=to_vertex_field(disc.mesh, mean_ref), nx=disc.mesh.nx, ny=disc.mesh.ny)
    write_json(out_dir / "report.json", report.to_dict())


# ----------------- Reference -----------------

def run_reference(config: RunConfig, n_samples: int = 1, probes: Optional[Sequence[int]] = None) -> Dict[str, Any]:
    """FEM-BE trajectories for the first evaluation samples, the Fourier round trip of
    direct frequency solves against them, and (heat) the analytical comparison."""
    disc = Discretization.build(config)
    out_dir = ensure_dirs(config.run_dir())[0] / "reference"
    out_dir.mkdir(parents=True, exist_ok=True)
    times = time_grid(disc.problem.final_time, config.tau)
    disc.warm_transforms()
    rows = []
    with stage("reference"):
        for i, xi in enumerate(evaluation_samples(disc.problem, n_samples, config.eval_seed)):
            t0 = time.perf_counter()
            traj = fem_be_solve(disc.problem, disc.op, disc.rhs, config.tau, xi)
            seconds = time.perf_counter() - t0
            export_trajectory_csv(traj, out_dir / f"trajectory_{i}.csv", probes)
            hats = np.array([direct_frequency_solve(disc.op, disc.rhs, ParameterPoint(w, xi), disc.problem)
                             for w in disc.grid.nodes])
            fourier = inverse_transform(hats, disc.grid, times)
            row = {"sample": i, "xi": xi, "fem_be_seconds": seconds,
                   "fourier_vs_fem_be": relative_l2_time_error(fourier, traj.values, times, disc.op.mass),
                   "tail_ratio": tail_ratio(hats)}
            if disc.problem.analytical is not None:
                exact = heat_exact_trajectory(disc.mesh, times)
                row["fem_be_vs_exact"] = relative_l2_time_error(traj.values, exact, times, disc.op.mass)
                row["fourier_vs_exact"] = relative_l2_time_error(fourier, exact, times, disc.op.mass)
            rows.append(row)
            logger.info("reference sample %d: %s", i, row)
    write_json(out_dir / "reference.json", {"config": config.to_dict(), "samples": rows})
    _log_run("reference", config, out_dir, reference_seconds=float(np.mean([r["fem_be_seconds"] for r in rows])))
    return {"samples": rows}


# ----------------- Sweep -----------------

def _validation_points(problem: ProblemDefinition, config: RunConfig) -> List[ParameterPoint]:
    rng = np.random.default_rng(config.eval_seed + 1)
    lo = np.array([b[0] for b in problem.parameter_box])
    hi = np.array([b[1] for b in problem.parameter_box])
    return [ParameterPoint(rng.uniform(0.0, config.omega_max), tuple(lo + (hi - lo) * rng.uniform(size=len(lo))))
            for _ in range(config.n_validation)]


def s1_fidelity(model: OfflineModel, points: Sequence[ParameterPoint], n_max: int) -> List[Dict[str, float]]:
    """Relative spectral-norm error of the affine S_1 against the direct S_1 for N_S1 = 1..n_max."""
    disc = model.disc
    blocks = disc.blocks[0]
    R = blocks.restriction
    truths = []
    for mu in points:
        S_1, _ = schur_direct(blocks, mu, disc.problem)
        full = np.zeros((blocks.n_interface,) * 2, dtype=complex)
        full[np.ix_(R, R)] = S_1
        truths.append(full)
    rows = []
    base = model.online_context()
    for n in range(1, min(n_max, model.lowrank_x[0].N) + 1):
        lowrank = model.lowrank_x[0].truncated(n)
        affine = assemble_affine_S([lowrank], [blocks])
        ctx = base.derived([lowrank.solution])
        errs = [np.linalg.norm(affine.evaluate(mu, ctx) - S, 2) / np.linalg.norm(S, 2) for mu, S in zip(points, truths)]
        rows.append({"curve": "S1", "N": n, "mean": float(np.mean(errs)), "max": float(np.max(errs))})
    return rows


def run_sweep(config: RunConfig) -> List[Dict[str, float]]:
    """Train once with every cap at sweep_max and evaluate the N-term prefixes."""
    K = config.sweep_max
    sweep_config = replace(config, n_s=(K, K), n_gamma=K, n_i=(K, K))
    model = train(sweep_config)
    disc = model.disc
    points = _validation_points(disc.problem, config)
    out_dir = ensure_dirs(config.run_dir())[0] / "sweep"
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: List[Dict[str, float]] = []

    with stage("sweep_S1"):
        rows += s1_fidelity(model, points, K)

    base = model.online_context()
    with stage("sweep_interface"):
        system = interface_system(model.S, model.F)
        truths = [system.solve(mu, base) for mu in points]
        for n in range(1, model.interface.N + 1):
            rom = model.interface.truncated(n)
            ctx = base.derived([rom.separated])
            errs = [_rel(evaluate_interface(rom, mu, ctx), u) for mu, u in zip(points, truths)]
            rows.append(_row("G", n, errs))

    with stage("sweep_subdomain"):
        monolithic = [direct_frequency_solve(disc.op, disc.rhs, mu, disc.problem) for mu in points]
        max_n = max(rom.N for rom in model.subdomains)
        for n in range(1, max_n + 1):
            roms = [rom.truncated(n) for rom in model.subdomains]
            ctx = base.derived([r.separated for r in roms])
            for rom in roms:
                idx = disc.part.interior(rom.j)
                errs = [_rel(rom.separated.evaluate(mu, ctx), u[idx]) for mu, u in zip(points, monolithic)]
                rows.append(_row(f"I{rom.j}", n, errs))

    with stage("sweep_global"):
        ctx = CoefficientContext(disc.problem)
        global_rom = global_vs_rom(disc.op, disc.rhs, model.samples, config.eps_subdomain, K, ctx)
        for n in range(1, global_rom.N + 1):
            trunc = global_rom.truncated(n)
            errs = [_rel(trunc.evaluate(mu, ctx), u) for mu, u in zip(points, monolithic)]
            rows.append(_row("global", n, errs))

    with open(out_dir / "decay.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "N", "mean_error", "max_error"])
        for r in rows:
            w.writerow([r["curve"], r["N"], f"{r['mean']:.12e}", f"{r['max']:.12e}"])
    logger.info("sweep %s: %d rows written to %s", config.problem, len(rows), out_dir)
    _log_run("sweep", config, out_dir)
    return rows


def _rel(approx: np.ndarray, truth: np.ndarray) -> float:
    den = np.linalg.norm(truth)
    return float(np.linalg.norm(approx - truth) / den) if den > 0 else float(np.linalg.norm(approx))


def _row(curve: str, n: int, errs: Sequence[float]) -> Dict[str, float]:
    return {"curve": curve, "N": n, "mean": float(np.mean(errs)), "max": float(np.max(errs))}


def dd_identity_error(disc: Discretization, mu: ParameterPoint) -> float:
    """Exact Schur path against the monolithic solve (diagnostic)."""
    dd = solve_dd_direct(disc.blocks[0], disc.blocks[1], disc.part, mu, disc.problem)
    mono = direct_frequency_solve(disc.op, disc.rhs, mu, disc.problem)
    return _rel(dd, mono)
