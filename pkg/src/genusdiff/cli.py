"""Command-line entry points: experiment runs, the demo service, self-checks."""

from __future__ import annotations

from pathlib import Path

import click

from .experiment import RunConfig, run_experiment
from .synth import GeneratorConfig


def _default_static_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


@click.group(context_settings={"auto_envvar_prefix": "GD"})
def main() -> None:
    """Incremental genus/differentia hierarchy builder."""


@main.command()
@click.option("--depth", default=4, show_default=True, help="ground-truth tree depth")
@click.option("--branching", default=3, show_default=True, help="children per internal node")
@click.option("--encounters-per-leaf", default=5, show_default=True)
@click.option("--runs", default=100, show_default=True, help="shuffled repetitions to average")
@click.option("--dim", default=32, show_default=True, help="embedding dimension")
@click.option("--tail-size", default=16, show_default=True, help="Weibull tail size")
@click.option("--sigma", default=0.25, show_default=True, help="view noise sigma")
@click.option("--seed", default=0, show_default=True, help="data and ordering seed")
@click.option(
    "--out",
    default="costs.csv",
    show_default=True,
    type=click.Path(dir_okay=False, path_type=Path),
)
def run(depth, branching, encounters_per_leaf, runs, dim, tail_size, sigma, seed, out):
    """Run the geodesic-cost experiment and write the aggregated CSV."""
    generator = GeneratorConfig(
        depth=depth,
        branching=branching,
        encounters_per_leaf=encounters_per_leaf,
        dimension=dim,
        level_offset_scales=tuple(8.0 / 2**k for k in range(depth)),
        view_noise_sigma=sigma,
        seed=seed,
    )
    config = RunConfig(
        generator=generator,
        runs=runs,
        ordering_seed=seed,
        tail_size=tail_size,
        output_path=out,
    )
    with click.progressbar(length=runs, label="runs") as bar:
        result = run_experiment(config, progress=lambda _: bar.update(1))
    window = min(50, result.iterations)
    predict_tail = sum(result.predict_mean[-window:]) / window
    naive_tail = sum(result.naive_mean[-window:]) / window
    click.echo(f"wrote {out}: {result.iterations} iterations, 2 models, {runs} runs")
    click.echo(
        f"final-{window} mean geodesic cost: predict_genus {predict_tail:.3f}, "
        f"naive {naive_tail:.3f}"
    )


@main.command()
@click.option("--interactive", is_flag=True, help="print operator instructions for the web UI")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--static-dir",
    default=None,
    type=click.Path(file_okay=False, path_type=Path),
    help="built web UI to serve at / (defaults to frontend/dist when present)",
)
def demo(interactive, host, port, static_dir):
    """Serve the HTTP session API (plus the web UI when built)."""
    import uvicorn

    from .service import create_app

    static = static_dir if static_dir is not None else _default_static_dir()
    app = create_app(static_dir=static)
    if interactive:
        click.echo(f"open http://{host}:{port}/ and create a session to start answering")
        if static is None:
            click.echo("note: no built web UI found; only the JSON API is available")
    click.echo(f"API at http://{host}:{port}/sessions")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
def validate():
    """Run the invariant self-checks; exit nonzero when any check fails."""
    from .validate import run_validation

    raise SystemExit(0 if run_validation(echo=click.echo) else 1)
