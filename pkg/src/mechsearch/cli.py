"""Command-line entry points: bench, train, replay, serve."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agents import AspPolicy, FspPushPlanner, PushPolicy, train_asp, train_push
from .config import BinConfig, load_config
from .harness import (SetupSpec, make_push_planner, report_emit, run_benchmark,
                      run_trial)


def _load_cfg(path: str | None) -> BinConfig:
    return load_config(path) if path else BinConfig()


def _load_policies(push_weights: str | None, asp_weights: str | None
                   ) -> tuple[PushPolicy | None, AspPolicy | None]:
    push = asp = None
    if push_weights:
        push = PushPolicy()
        push.load(push_weights)
    if asp_weights:
        asp = AspPolicy()
        asp.load(asp_weights)
    return push, asp


@click.group()
def main():
    """Mechanical-search bin simulator and policy benchmark."""


@main.command()
@click.option("--setup", "setup_arg", default="all",
              type=click.Choice(["1", "2", "3", "4", "all"]), show_default=True)
@click.option("--heap-size", default=6, show_default=True)
@click.option("--trials", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--push-weights", type=click.Path(exists=True), default=None)
@click.option("--asp-weights", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def bench(setup_arg, heap_size, trials, seed, push_weights, asp_weights,
          config_path, out_dir):
    """Run the setup benchmark matrix and emit a report."""
    cfg = _load_cfg(config_path)
    numbers = [1, 2, 3, 4] if setup_arg == "all" else [int(setup_arg)]
    specs = [SetupSpec.number(n, heap_size, trials, seed) for n in numbers]
    needs_push = any(s.push == "learned" for s in specs)
    needs_asp = any(s.asp == "learned" for s in specs)
    if needs_push and not push_weights:
        raise click.UsageError("selected setups need --push-weights")
    if needs_asp and not asp_weights:
        raise click.UsageError("selected setups need --asp-weights")
    push_policy, asp_policy = _load_policies(push_weights, asp_weights)
    report = run_benchmark(specs, cfg, push_policy, asp_policy)
    files = report_emit(report, out_dir)
    for s in report["setups"]:
        mean = s["mean_actions"]
        click.echo(f"setup {s['setup']}: {s['n_success']}/{s['trials']} success, "
                   f"mean actions {mean if mean is None else f'{mean:.2f}'}")
    click.echo(f"report: {files['report']}")


@main.command()
@click.argument("policy", type=click.Choice(["push", "asp"]))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--episodes", default=None, type=int,
              help="Override the preset episode count.")
@click.option("--heap-size", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--preset", default="desk", type=click.Choice(["desk", "paper"]),
              show_default=True)
@click.option("--push-weights", type=click.Path(exists=True), default=None,
              help="Learned push policy for asp training (default: free-space baseline).")
def train(policy, config_path, out_dir, episodes, heap_size, seed, preset,
          push_weights):
    """Train the push policy (SAC) or the action selector (DQN)."""
    cfg = _load_cfg(config_path)
    presets = {
        "push": {"desk": (2000, 10), "paper": (12000, 10)},
        "asp": {"desk": (100, 8), "paper": (300, 20)},
    }
    n_ep, heap = presets[policy][preset]
    n_ep = episodes if episodes is not None else n_ep
    heap = heap_size if heap_size is not None else heap

    def log(ep, ret, info):
        if ep % 10 == 0 or ep == n_ep - 1:
            click.echo(f"episode {ep}: return {ret:.3f} {info}")

    if policy == "push":
        res = train_push(cfg, out_dir, episodes=n_ep, heap_size=heap,
                         seed=seed, log_cb=log)
    else:
        if push_weights:
            pp = PushPolicy()
            pp.load(push_weights)
            planner = make_push_planner("learned", pp)
        else:
            planner = FspPushPlanner()
        res = train_asp(cfg, out_dir, planner, episodes=n_ep, heap_size=heap,
                        seed=seed, log_cb=log)
    click.echo(f"weights: {res.bundle_path}")


@main.command()
@click.option("--trial", "trial_path", type=click.Path(exists=True), required=True,
              help="Benchmark report.json containing stored trial records.")
@click.option("--setup", "setup_n", default=1, show_default=True, type=int)
@click.option("--index", default=0, show_default=True,
              help="Trial index within the setup.")
@click.option("--push-weights", type=click.Path(exists=True), default=None)
@click.option("--asp-weights", type=click.Path(exists=True), default=None)
def replay(trial_path, setup_n, index, push_weights, asp_weights):
    """Re-run a stored trial and verify the record reproduces exactly."""
    report = json.loads(Path(trial_path).read_text())
    summary = next(s for s in report["setups"] if s["setup"] == setup_n)
    stored = report["trials"][str(setup_n)][index]
    cfg = BinConfig(**report["config"])
    spec = SetupSpec(summary["asp"], summary["push"], summary["heap_size"],
                     summary["trials"], summary["seed"])
    push_policy, asp_policy = _load_policies(push_weights, asp_weights)
    planner = make_push_planner(spec.push, push_policy)
    rec = run_trial(spec, stored["seed"], cfg, planner, asp_policy)
    if rec.to_dict() == stored:
        click.echo(f"replay OK: outcome {rec.outcome} in {rec.action_count} actions")
    else:
        click.echo("replay MISMATCH", err=True)
        sys.exit(1)


@main.command()
@click.option("--port", default=8321, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--push-weights", type=click.Path(exists=True), default=None)
def serve(port, host, config_path, push_weights):
    """Serve the rollout protocol (HTTP + WebSocket) and the operator UI."""
    import uvicorn

    from .service import build_app

    cfg = _load_cfg(config_path)
    push_policy, _ = _load_policies(push_weights, None)
    uvicorn.run(build_app(cfg, push_policy), host=host, port=port)


if __name__ == "__main__":
    main()
