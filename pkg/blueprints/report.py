# blueprints/report.py
"""Tables and SVG figures from finished runs.

Output names depend only on the config hash, and the SVG writer is pinned
(fixed hash salt, no date metadata), so re-running a report over the same
run directories reproduces the same files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from utils.artifact_utils import ensure_dirs  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "ftddvs"
_SVG_META = {"Date": None}


def _read_csv(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_run(run_dir) -> Dict[str, Any]:
    """Everything `online` and `sweep` left in one run directory."""
    run_dir = Path(run_dir)
    run: Dict[str, Any] = {"dir": run_dir, "name": run_dir.name}
    online = run_dir / "online"
    if (online / "report.json").exists():
        run["report"] = json.loads((online / "report.json").read_text(encoding="utf-8"))
        run["samples"] = _read_csv(online / "samples.csv")
        run["time_errors"] = _read_csv(online / "time_errors.csv")
        if (online / "mean_fields.npz").exists():
            with np.load(online / "mean_fields.npz") as npz:
                run["fields"] = {k: npz[k] for k in npz.files}
    if (run_dir / "sweep" / "decay.csv").exists():
        run["decay"] = _read_csv(run_dir / "sweep" / "decay.csv")
    if "report" not in run and "decay" not in run:
        raise FileNotFoundError(f"{run_dir} has no online report or sweep results")
    run["hash"] = run.get("report", {}).get("config_hash") or run_dir.name.rsplit("-", 1)[-1]
    return run


# ----------------- Tables -----------------

TABLE_HEADER = ["problem", "config", "method", "M", "epsilon_u", "mean_seconds", "total_seconds", "speedup"]


def table_rows(runs: Sequence[Dict[str, Any]]) -> List[List[Any]]:
    """Two rows per run: FT-DD-VS and the FEM-BE reference."""
    rows = []
    for run in runs:
        rep = run.get("report")
        if rep is None:
            continue
        rows.append([rep["problem"], rep["config_hash"], "FT-DD-VS", rep["M"], f"{rep['epsilon_u']:.3e}",
                     f"{rep['online_seconds_mean']:.4g}", f"{rep['online_seconds_total']:.4g}",
                     f"{rep['speedup']:.1f}"])
        rows.append([rep["problem"], rep["config_hash"], "FEM-BE", rep["M"], "-",
                     f"{rep['reference_seconds_mean']:.4g}", f"{rep['reference_seconds_total']:.4g}", "1.0"])
    return rows


def format_table(rows: Sequence[Sequence[Any]]) -> str:
    cells = [TABLE_HEADER] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(TABLE_HEADER))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def write_tables(runs: Sequence[Dict[str, Any]], out_dir: Path) -> Dict[str, Path]:
    key = hashlib.sha256(",".join(sorted(r["hash"] for r in runs)).encode("utf-8")).hexdigest()[:12]
    rows = table_rows(runs)
    txt = out_dir / f"table-{key}.txt"
    txt.write_text(format_table(rows), encoding="utf-8")
    csv_path = out_dir / f"table-{key}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_HEADER)
        w.writerows(rows)
    return {"text": txt, "csv": csv_path}


# ----------------- Figures -----------------

def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_decay(run: Dict[str, Any], plots_dir: Path) -> Optional[Path]:
    if "decay" not in run:
        return None
    curves: Dict[str, List[tuple]] = {}
    for r in run["decay"]:
        curves.setdefault(r["curve"], []).append((int(r["N"]), float(r["mean_error"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(curves):
        pts = sorted(curves[name])
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-300) for p in pts], "o-", label=name)
    ax.set_xlabel("number of separate terms N")
    ax.set_ylabel("mean relative error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, plots_dir / f"{run['hash']}-error_vs_N.svg")


def plot_samples(run: Dict[str, Any], plots_dir: Path, first: int = 100) -> Optional[Path]:
    if "samples" not in run:
        return None
    rows = run["samples"][:first]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy([int(r["sample"]) for r in rows], [float(r["error"]) for r in rows], ".", color="tab:blue")
    ax.axhline(run["report"]["epsilon_u"], color="tab:red", lw=1, label="mean")
    ax.set_xlabel("sample")
    ax.set_ylabel("relative L2(0,T) error")
    ax.legend()
    return _save(fig, plots_dir / f"{run['hash']}-sample_errors.svg")


def plot_time_errors(run: Dict[str, Any], plots_dir: Path) -> Optional[Path]:
    if not run.get("time_errors"):
        return None
    t = [float(r["t"]) for r in run["time_errors"]]
    e = [float(r["error"]) for r in run["time_errors"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(t, e, "-")
    ax.set_xlabel("t")
    ax.set_ylabel("mean relative error")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, plots_dir / f"{run['hash']}-error_vs_t.svg")


def plot_heatmaps(run: Dict[str, Any], plots_dir: Path) -> Optional[Path]:
    """Mean solution at t = T, one column per subdomain, one row per method."""
    fields = run.get("fields")
    if not fields:
        return None
    nx, ny = int(fields["nx"]), int(fields["ny"])
    half = nx // 2
    fig, axes = plt.subplots(2, 2, figsize=(8, 7), squeeze=False)
    vmin = min(fields["rom"].min(), fields["reference"].min())
    vmax = max(fields["rom"].max(), fields["reference"].max())
    for row, (label, key) in enumerate((("FT-DD-VS", "rom"), ("FEM-BE", "reference"))):
        grid = fields[key].reshape(ny + 1, nx + 1)
        for col, (sub, extent) in enumerate(((grid[:, :half + 1], (0.0, 0.5, 0.0, 1.0)),
                                             (grid[:, half:], (0.5, 1.0, 0.0, 1.0)))):
            ax = axes[row][col]
            im = ax.imshow(sub, origin="lower", extent=extent, vmin=vmin, vmax=vmax, cmap="viridis")
            ax.set_title(f"{label}, subdomain {col + 1}")
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
    fig.colorbar(im, ax=axes.ravel().tolist(), shrink=0.8)
    return _save(fig, plots_dir / f"{run['hash']}-mean_solution.svg")


def build_report(run_dirs: Sequence, out_dir=None) -> Dict[str, Any]:
    """Tables for all runs plus each run's figures (written into <run>/plots)."""
    if not run_dirs:
        raise ValueError("no run directories given")
    runs = [load_run(d) for d in run_dirs]
    out_dir = Path(out_dir) if out_dir else Path(runs[0]["dir"]).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Any] = {"tables": write_tables(runs, out_dir), "figures": []}
    for run in runs:
        _, plots_dir = ensure_dirs(run["dir"])
        for plot in (plot_decay, plot_samples, plot_time_errors, plot_heatmaps):
            try:
                path = plot(run, plots_dir)
            except Exception:
                logger.exception("plot %s failed for %s", plot.__name__, run["name"])
                continue
            if path is not None:
                written["figures"].append(path)
    logger.info("report: %d runs, %d figures", len(runs), len(written["figures"]))
    return written
