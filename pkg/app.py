# -*- coding: utf-8 -*-
"""ftddvs command line: offline / online / reference / sweep / report / artifacts."""
import os
import logging
import sys
from datetime import datetime
from pathlib import Path

import click
from dotenv import load_dotenv

from extensions import init_registry
from utils.artifact_utils import list_artifacts
from utils.config import resolve_config
from utils.errors import ArtifactMismatchError, ConfigError, SingularSystemError, StageError

load_dotenv()

logger = logging.getLogger("ftddvs")


# ----------------- Logging -----------------
class LocalTimeFormatter(logging.Formatter):
    converter = datetime.fromtimestamp
    def formatTime(self, record, datefmt=None):
        ct = self.converter(record.created)
        return ct.strftime(datefmt or "%Y-%m-%d %H:%M:%S")


def output_root() -> Path:
    path = Path(os.environ.get("FTDDVS_OUTPUT_DIR") or os.path.join("data", "runs")).resolve()
    path.mkdir(parents=True, exist_ok=True)
    return path


def close_logging() -> None:
    root = logging.getLogger()
    for h in list(root.handlers):
        if getattr(h, "_ftddvs", False):
            root.removeHandler(h)
            h.close()


def setup_logging(level: str = "INFO") -> None:
    close_logging()
    root = logging.getLogger()
    fmt = LocalTimeFormatter("%(asctime)s  %(levelname)s  %(name)s  %(message)s")
    file_handler = logging.FileHandler(output_root() / "activity.log", encoding="utf-8")
    stderr_handler = logging.StreamHandler(sys.stderr)
    for h in (file_handler, stderr_handler):
        h.setFormatter(fmt)
        h._ftddvs = True
        root.addHandler(h)
    try:
        root.setLevel(level.upper())
    except ValueError:
        root.setLevel(logging.INFO)
        logger.warning("unknown log level %r, using INFO", level)


# ----------------- Helpers -----------------
def config_options(fn):
    """--preset / --config / --set / --seed / --output-dir, shared by every run command."""
    options = [
        click.option("--preset", default="heat", show_default=True, help="heat, rd1 or rd2 (data/presets)"),
        click.option("--config", "config_file", type=click.Path(dir_okay=False), help="JSON config file"),
        click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE", help="override one setting"),
        click.option("--seed", type=int, help="training sample seed"),
        click.option("--output-dir", type=click.Path(file_okay=False), help="root of the run directories"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _config(preset, config_file, overrides, seed, output_dir):
    try:
        return resolve_config(preset=preset, config_file=config_file, overrides=overrides,
                              output_dir=output_dir, seed=seed)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


def _run(label, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (StageError, ArtifactMismatchError, SingularSystemError, FileNotFoundError, ValueError) as exc:
        logger.exception("%s failed", label)
        raise click.ClickException(str(exc)) from exc


# ----------------- Commands -----------------
@click.group()
@click.option("--log-level", envvar="FTDDVS_LOG_LEVEL", default="INFO", show_default=True)
@click.pass_context
def cli(ctx, log_level):
    setup_logging(log_level)
    ctx.call_on_close(close_logging)
    try:
        init_registry(output_root() / "runs.sqlite3")
    except Exception:
        logger.exception("run registry unavailable; continuing without it")


@cli.command()
@config_options
def offline(preset, config_file, overrides, seed, output_dir):
    """Train the interface and subdomain ROMs and write the offline artifact."""
    from blueprints.bench import run_offline
    config = _config(preset, config_file, overrides, seed, output_dir)
    model = _run("offline", run_offline, config)
    click.echo(f"run directory: {config.run_dir()}")
    for key, value in model.term_counts().items():
        click.echo(f"  {key}: {value}")


@cli.command()
@config_options
@click.option("--artifact", type=click.Path(dir_okay=False), help="offline artifact (default: the run directory's)")
def online(preset, config_file, overrides, seed, output_dir, artifact):
    """Evaluate the ROM on M random samples against FEM-BE."""
    from blueprints.bench import run_online
    config = _config(preset, config_file, overrides, seed, output_dir)
    report = _run("online", run_online, config, artifact=artifact)
    click.echo(f"epsilon_u = {report.epsilon_u:.3e} over M = {len(report.sample_errors)} samples")
    for name, value in report.epsilon_hat.items():
        click.echo(f"  epsilon_hat[{name}] = {value:.3e}")
    click.echo(f"online {report.mean_online:.4g}s/sample, FEM-BE {report.mean_reference:.4g}s/sample "
               f"(speedup {report.speedup:.1f})")


@cli.command()
@config_options
@click.option("--samples", "n_samples", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--probe", "probes", multiple=True, type=int, help="free dof index to export (default: all)")
def reference(preset, config_file, overrides, seed, output_dir, n_samples, probes):
    """FEM-BE trajectories and the direct Fourier round trip."""
    from blueprints.bench import run_reference
    config = _config(preset, config_file, overrides, seed, output_dir)
    result = _run("reference", run_reference, config, n_samples=n_samples, probes=list(probes) or None)
    for row in result["samples"]:
        click.echo(f"sample {row['sample']}: fourier vs FEM-BE {row['fourier_vs_fem_be']:.3e}")


@cli.command()
@config_options
def sweep(preset, config_file, overrides, seed, output_dir):
    """Error versus number of separate terms (S1, interface, subdomains, global VS)."""
    from blueprints.bench import run_sweep
    config = _config(preset, config_file, overrides, seed, output_dir)
    rows = _run("sweep", run_sweep, config)
    for r in rows:
        click.echo(f"{r['curve']:>7} N={r['N']:<3d} mean {r['mean']:.3e}  max {r['max']:.3e}")


@cli.command()
@click.argument("run_dirs", nargs=-1, type=click.Path(file_okay=False))
@click.option("--latest", type=click.IntRange(min=1), help="use the K most recent online runs from the registry")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="where the tables go")
def report(run_dirs, latest, out_dir):
    """Tables and SVG figures of finished runs."""
    from blueprints.report import build_report
    dirs = list(run_dirs)
    if latest:
        from models.run_models import RunLog
        try:
            rows = RunLog.latest("online", latest)
        except Exception as exc:
            logger.exception("registry lookup failed")
            raise click.ClickException(f"registry lookup failed: {exc}") from exc
        for row in rows:
            run_dir = str(Path(row.path).parent) if row.path else None
            if run_dir and run_dir not in dirs:
                dirs.append(run_dir)
    if not dirs:
        raise click.UsageError("give run directories or --latest K")
    written = _run("report", build_report, dirs, out_dir)
    click.echo(Path(written["tables"]["text"]).read_text(encoding="utf-8"))
    for path in written["figures"]:
        click.echo(f"  {path}")


@cli.command()
@click.option("--output-dir", default=None, type=click.Path(file_okay=False))
def artifacts(output_dir):
    """List offline artifacts under the output directory."""
    root = output_dir or output_root()
    rows = list_artifacts(root)
    if not rows:
        click.echo(f"no artifacts under {root}")
    for r in rows:
        click.echo(f"{r['name']:<32} {r['size']:>10}  {r['mtime']}  {r['path']}")


if __name__ == "__main__":
    cli()
