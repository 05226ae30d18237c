"""Command-line entry point.

Thin wrappers only: argument parsing, file IO, and exit-code mapping. Exit
codes: 0 success, 1 runtime error, 2 usage error, 3 privacy (audit)
violation.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from . import approx, bench, datagen, exact
from .attacker import audit as run_audit
from .attacker import audit_time_varying
from .model import (
    InputError,
    Policy,
    World,
    load_anonymized,
    load_manifest,
    load_policy,
    load_requests,
    load_trajectories,
    save_anonymized,
    save_manifest,
    save_policy,
)
from .policy_engine import anonymize as run_anonymize

EXIT_RUNTIME = 1
EXIT_VIOLATION = 3


def runtime_errors_to_exit_1(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (InputError, OSError, json.JSONDecodeError, ValueError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return threads
    env = os.environ.get("TPANON_THREADS")
    return int(env) if env else (os.cpu_count() or 1)


def _resolve_world(traj: Path, manifest: Path | None, side: int | None, horizon: int | None) -> World:
    if side is not None and horizon is not None:
        return World(side, horizon)
    path = manifest if manifest is not None else traj.with_name("manifest.json")
    if not Path(path).exists():
        raise click.UsageError(
            "world dimensions unknown: pass --side/--horizon or --manifest "
            f"(no manifest at {path})"
        )
    m = load_manifest(path)
    return World(int(m["side"]), int(m["horizon"]))


@click.group()
def cli() -> None:
    """Offline LBS log anonymization with TP-aware sender k-anonymity."""


@cli.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--users", type=int, default=None, help="Number of users.")
@click.option("--side", type=int, default=None, help="Grid cells per axis (power of two).")
@click.option("--horizon", type=int, default=None, help="Number of timesteps.")
@click.option("--rate", type=float, default=1.0, show_default=True, help="Mean requests per user.")
@click.option("--speed", type=int, default=1, show_default=True, help="Max cells per step.")
@click.option(
    "--model",
    type=click.Choice(datagen.MOBILITY_MODELS),
    default="random_waypoint",
    show_default=True,
)
@click.option("--scenario", type=str, default=None, help="Crafted scenario name instead of random data.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@runtime_errors_to_exit_1
def generate(seed, users, side, horizon, rate, speed, model, scenario, out) -> None:
    """Write a synthetic trajectory/request instance (CSVs + manifest)."""
    if scenario is not None:
        db, log = datagen.craft(scenario)
        paths = datagen.write_instance(out, db, log, scenario=scenario)
    else:
        if users is None or side is None or horizon is None:
            raise click.UsageError("--users, --side and --horizon are required without --scenario")
        db, log = datagen.generate(
            seed, users, World(side, horizon), model=model, request_rate=rate, speed=speed
        )
        paths = datagen.write_instance(
            out, db, log, seed=seed, model=model, rate=rate, speed=speed
        )
    click.echo(f"wrote {paths['trajectories']}, {paths['requests']}, {paths['manifest']}")


@cli.command()
@click.option("--traj", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--req", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--manifest", type=click.Path(path_type=Path), default=None)
@click.option("--side", type=int, default=None)
@click.option("--horizon", type=int, default=None)
@click.option("--k", type=int, required=True)
@click.option("--solver", type=click.Choice(["exact", "approx"]), default="approx", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Pseudonym seed.")
@click.option("--cap", type=int, default=exact.DEFAULT_CAP, show_default=True, help="Exact-solver user cap.")
@click.option("--cover-weight", type=int, default=0, show_default=True,
              help="Synthetic objective weight for users without requests.")
@click.option("--threads", type=int, default=None, help="Worker count (default: TPANON_THREADS or machine).")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@runtime_errors_to_exit_1
def anonymize(traj, req, manifest, side, horizon, k, solver, seed, cap, cover_weight, threads, out) -> None:
    """Solve for a policy and publish the anonymized log."""
    world = _resolve_world(traj, manifest, side, horizon)
    db = load_trajectories(traj, world.side, world.horizon)
    log = load_requests(req, db)
    if solver == "exact":
        policy = exact.solve_exact(db, log, k, cap=cap)
    else:
        policy = approx.solve_approx(db, log, k, cover_weight=cover_weight)
    anon = run_anonymize(db, log, policy, seed=seed)
    out.mkdir(parents=True, exist_ok=True)
    save_policy(policy, out / "policy.json")
    save_anonymized(anon, out / "anonymized.csv")
    save_manifest(
        world,
        out / "manifest.json",
        k=k,
        solver=solver,
        seed=seed,
        threads=_resolve_threads(threads),
    )
    click.echo(f"wrote {out / 'policy.json'}, {out / 'anonymized.csv'}")


@cli.command()
@click.option("--traj", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--anon", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--policy", "policy_path", type=click.Path(path_type=Path), required=True)
@click.option("--manifest", type=click.Path(path_type=Path), default=None)
@click.option("--side", type=int, default=None)
@click.option("--horizon", type=int, default=None)
@click.option("--k", type=int, default=None, help="Defaults to the policy file's k.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Report JSON path.")
@runtime_errors_to_exit_1
def audit(traj, anon, policy_path, manifest, side, horizon, k, out) -> None:
    """Run the TP-aware attacker; exit 3 if any pseudonym falls below k."""
    world = _resolve_world(traj, manifest, side, horizon)
    db = load_trajectories(traj, world.side, world.horizon)
    published = load_anonymized(anon, world)
    loaded = load_policy(policy_path)
    if isinstance(loaded, Policy):
        k = k if k is not None else loaded.k
        report = run_audit(published, db, loaded, k)
    else:
        k = k if k is not None else loaded[0].k
        report = audit_time_varying(published, db, loaded, k)
    text = report.to_json()
    if out is not None:
        Path(out).write_text(text)
    click.echo(text, nl=False)
    if not report.passed:
        sys.exit(EXIT_VIOLATION)


@cli.command("bench")
@click.option("--config", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def bench_cmd(config, out) -> None:
    """Run the benchmark grid from a JSON config; writes JSONL + CSV reports."""
    try:
        cfg = json.loads(Path(config).read_text())
        if not isinstance(cfg, dict):
            raise InputError("bench config must be a JSON object")
        if not {"n", "l", "k", "seed"} <= cfg.keys():
            raise InputError("bench config needs n, l, k, seed")
    except (json.JSONDecodeError, InputError) as e:
        raise click.UsageError(f"malformed config: {e}")
    try:
        rows = bench.run_bench(cfg, out_dir=out)
    except (InputError, OSError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_RUNTIME)
    click.echo(f"wrote {Path(out) / 'report.jsonl'} ({len(rows)} rows)")


def main() -> None:
    cli(standalone_mode=True)


if __name__ == "__main__":
    main()
