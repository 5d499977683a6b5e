# utils/artifact_utils.py
import io, json, datetime, zipfile
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from utils.errors import ArtifactMismatchError

FORMAT_VERSION = 2
ARTIFACT_NAME = "offline.zip"


def ensure_dirs(run_dir):
    run_dir = Path(run_dir)
    plots_dir = run_dir / "plots"
    for p in [run_dir, plots_dir]:
        p.mkdir(parents=True, exist_ok=True)
    return run_dir, plots_dir


def now_stamp():
    return datetime.datetime.now().strftime("%Y-%m-%d_%H-%M-%S")


def sanitize(obj):
    """Recursively convert numpy scalars/arrays and tuples into JSON-friendly types.

    - numpy integer / floating / bool -> python int / float / bool
    - numpy arrays, tuples, sets -> lists
    - dict keys -> str
    - other objects -> str(obj)
    """
    if obj is None or isinstance(obj, (str, bool, int, float)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (datetime.datetime, datetime.date)):
        return obj.isoformat()
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [sanitize(v) for v in obj]
    return str(obj)


def write_json(path, payload: Dict[str, Any]) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sanitize(payload), fh, ensure_ascii=False, indent=2, sort_keys=True)
    return str(path)


def save_artifact(path, meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> str:
    """
    ZIP with metadata.json + arrays.npz
    returns the artifact path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = dict(meta)
    meta["format_version"] = FORMAT_VERSION
    meta.setdefault("created_at", now_stamp())

    buf = io.BytesIO()
    np.savez_compressed(buf, **{k: np.asarray(v) for k, v in arrays.items()})
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as z:
        z.writestr("arrays.npz", buf.getvalue())
        z.writestr("metadata.json", json.dumps(sanitize(meta), ensure_ascii=False, indent=2, sort_keys=True))
    return str(path)


def read_metadata(path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"artifact not found: {path}")
    with zipfile.ZipFile(path, "r") as z:
        try:
            meta = json.loads(z.read("metadata.json").decode("utf-8"))
        except KeyError:
            raise ArtifactMismatchError(f"{path} has no metadata.json") from None
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise ArtifactMismatchError(f"unsupported artifact format_version={version!r} (expected {FORMAT_VERSION})")
    return meta


def load_artifact(path) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    meta = read_metadata(path)
    with zipfile.ZipFile(path, "r") as z:
        try:
            raw = z.read("arrays.npz")
        except KeyError:
            raise ArtifactMismatchError(f"{path} has no arrays.npz") from None
    with np.load(io.BytesIO(raw), allow_pickle=False) as npz:
        arrays = {k: npz[k] for k in npz.files}
    return meta, arrays


def check_compatible(meta: Dict[str, Any], problem: str, nx: int, ny: int,
                     omega_max: Optional[float] = None, n_omega: Optional[int] = None) -> None:
    """Artifact must have been trained for the same problem, mesh and frequency grid."""
    mismatches = []
    if meta.get("problem") != problem:
        mismatches.append(f"problem {meta.get('problem')!r} != {problem!r}")
    if list(meta.get("mesh", [])) != [nx, ny]:
        mismatches.append(f"mesh {meta.get('mesh')} != {[nx, ny]}")
    if omega_max is not None and float(meta.get("omega_max", -1)) != float(omega_max):
        mismatches.append(f"omega_max {meta.get('omega_max')} != {omega_max}")
    if n_omega is not None and int(meta.get("n_omega", -1)) != int(n_omega):
        mismatches.append(f"n_omega {meta.get('n_omega')} != {n_omega}")
    if mismatches:
        raise ArtifactMismatchError("artifact does not match config: " + "; ".join(mismatches))


def list_artifacts(output_dir):
    """Metadata rows (name/size/mtime/path) of every offline artifact under output_dir."""
    root = Path(output_dir)
    rows = []
    if not root.exists():
        return rows
    for p in sorted(root.glob(f"*/{ARTIFACT_NAME}"), reverse=True):
        rows.append({
            "name": p.parent.name,
            "size": p.stat().st_size,
            "mtime": datetime.datetime.fromtimestamp(p.stat().st_mtime).isoformat(timespec="seconds"),
            "path": str(p),
        })
    return rows
