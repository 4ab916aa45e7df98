"""
CLI commands for Fréchet U-Net.

This module provides the command-line interface for generating datasets, training the
network variants, running the benchmark, re-rendering reports and the tiny-n oracle.
"""

import csv
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, fields
from typing import Any, Dict, List, Optional

import click
import typer
from rich.console import Console
from rich.table import Table

from frechet_unet import __version__
from frechet_unet.core.benchmark import (
    build_dataset,
    load_records,
    model_label,
    run_benchmark,
    train_and_save,
    write_reports,
)
from frechet_unet.core.evaluation import summarize_all
from frechet_unet.core.oracle import counterexample, run_oracle
from frechet_unet.models.config import SECTIONS, SEED_ENV_VAR, RunConfig
from frechet_unet.models.enums import Ensemble, Variant
from frechet_unet.models.errors import ConfigError, FrechetUnetError
from frechet_unet.utils.formatting import format_duration, format_eig

logger = logging.getLogger('frechet_unet.cli')

EXIT_USAGE = 1
EXIT_RUNTIME = 2
ALL = "all"


def _config_help() -> str:
    """Every config field with its default, for the top-level help."""
    defaults = RunConfig()
    lines = ["Configuration fields (YAML sections, dotted names) and defaults:", "", "\b"]
    lines.append(f"  seed = {defaults.seed}   (env {SEED_ENV_VAR} overrides)")
    lines.append(f"  threads = {defaults.threads}")
    for section in SECTIONS:
        values = getattr(defaults, section)
        for f in fields(values):
            lines.append(f"  {section}.{f.name} = {getattr(values, f.name)}")
    return "\n".join(lines)


app = typer.Typer(
    help="Fréchet means of graph samples with a miniature U-Net.\n\n" + _config_help(),
    add_completion=False,
)

console = Console()


def _setup_logging(verbose: bool):
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler()],
    )
    logging.getLogger('frechet_unet').setLevel(level)


@contextmanager
def _reporting_errors():
    """Print package errors through the console and exit with the matching code."""
    try:
        yield
    except ConfigError as e:
        console.print(f"[bold red]Error:[/bold red] invalid configuration: {e}")
        raise typer.Exit(code=EXIT_USAGE)
    except (FrechetUnetError, OSError) as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise typer.Exit(code=EXIT_RUNTIME)


def _load_config(config_path: Optional[str], overrides: Dict[str, Any], verbose: bool) -> RunConfig:
    _setup_logging(verbose)
    config = RunConfig.load(config_path, overrides)
    console.print(f"[cyan]seed[/cyan] {config.seed}  [cyan]config digest[/cyan] {config.digest()}")
    return config


def _choices(value: str, allowed: List[str], name: str) -> List[str]:
    items = [item.strip() for item in value.split(",") if item.strip()]
    if items == [ALL]:
        return list(allowed)
    unknown = [item for item in items if item not in allowed]
    if not items or unknown:
        raise ConfigError(name, f"choose from {allowed} or '{ALL}'", value)
    return items


def _config_option():
    return typer.Option(None, "--config", "-c", help="YAML configuration file")


def _seed_option():
    return typer.Option(None, "--seed", help=f"Run seed (overrides the config file and {SEED_ENV_VAR})")


def _threads_option():
    return typer.Option(None, "--threads", "-j", help="Maximum worker threads")


def _verbose_option():
    return typer.Option(False, "--verbose", "-v", help="Debug logging")


@app.command()
def gen(
    ensemble: str = typer.Option(ALL, "--ensemble", "-e", help="ier, sbm, pa, comma list or all"),
    count_params: Optional[int] = typer.Option(None, "--count-params", help="Parameter draws (IER, SBM)"),
    batches_per_param: Optional[int] = typer.Option(None, "--batches-per-param", help="Batches per draw"),
    sample_size: Optional[int] = typer.Option(None, "--sample-size", "-N", help="Graphs per batch"),
    p_min: Optional[float] = typer.Option(None, "--p-min", help="SBM within-block probability, lower end"),
    p_max: Optional[float] = typer.Option(None, "--p-max", help="SBM within-block probability, upper end"),
    q_min: Optional[float] = typer.Option(None, "--q-min", help="SBM across-block probability, lower end"),
    q_max: Optional[float] = typer.Option(None, "--q-max", help="SBM across-block probability, upper end"),
    l_values: Optional[List[int]] = typer.Option(None, "--l", help="PA attachment counts (repeatable)"),
    batches_per_l: Optional[int] = typer.Option(None, "--batches-per-l", help="PA batches per l value"),
    constant_p: Optional[float] = typer.Option(None, "--constant-p", help="Replace IER edge probabilities by p"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Datasets directory"),
    config_path: Optional[str] = _config_option(),
    seed: Optional[int] = _seed_option(),
    threads: Optional[int] = _threads_option(),
    verbose: bool = _verbose_option(),
):
    """Generate training datasets"""
    with _reporting_errors():
        config = _load_config(config_path, {
            "seed": seed,
            "threads": threads,
            "generation.count_params": count_params,
            "generation.batches_per_param": batches_per_param,
            "generation.sample_size": sample_size,
            "generation.sbm_p_min": p_min,
            "generation.sbm_p_max": p_max,
            "generation.sbm_q_min": q_min,
            "generation.sbm_q_max": q_max,
            "generation.pa_l_values": l_values or None,
            "generation.pa_batches_per_l": batches_per_l,
            "generation.ier_constant_p": constant_p,
            "paths.datasets": out,
        }, verbose)
        ensembles = _choices(ensemble, [e.value for e in Ensemble], "ensemble")

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Ensemble")
        table.add_column("Pairs", justify="right")
        table.add_column("Graphs", justify="right")
        table.add_column("Directory")
        table.add_column("Time", justify="right")
        for name in ensembles:
            started = time.monotonic()
            with console.status(f"[bold blue]Generating {name} dataset...", spinner="dots"):
                directory, pairs = build_dataset(config, Ensemble(name), config.threads)
            table.add_row(name, str(len(pairs)), str(len(pairs) * config.generation.sample_size),
                          directory, format_duration(time.monotonic() - started))
        console.print(table)


@app.command()
def train(
    variant: str = typer.Option(..., "--variant", help="ier, sbm, pa, gen, comma list or all"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Training epochs"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size", help="Pairs per Adam step"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Adam learning rate"),
    base_channels: Optional[int] = typer.Option(None, "--base-channels", help="Width of the first stage"),
    config_path: Optional[str] = _config_option(),
    seed: Optional[int] = _seed_option(),
    threads: Optional[int] = _threads_option(),
    verbose: bool = _verbose_option(),
):
    """Train network variants on the generated datasets"""
    with _reporting_errors():
        config = _load_config(config_path, {
            "seed": seed,
            "threads": threads,
            "training.epochs": epochs,
            "training.batch_size": batch_size,
            "training.lr": lr,
            "training.base_channels": base_channels,
        }, verbose)
        variants = _choices(variant, [v.value for v in Variant], "variant")

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Model")
        table.add_column("First loss", justify="right")
        table.add_column("Final loss", justify="right")
        table.add_column("Checkpoint")
        table.add_column("SHA-256")
        for name in variants:
            path, digest, run = train_and_save(config, Variant(name), workers=config.threads)
            table.add_row(Variant(name).label, f"{run.epoch_losses[0]:.6f}", f"{run.epoch_losses[-1]:.6f}",
                          path, digest[:16])
        console.print(table)


def _print_summaries(summaries):
    for ensemble in Ensemble:
        rows = [(model, s) for (model, e), s in summaries.items() if e is ensemble]
        if not rows:
            continue
        table = Table(title=f"{ensemble.value.upper()} test batches", show_header=True,
                      header_style="bold magenta")
        table.add_column("Model")
        table.add_column("Trials", justify="right")
        table.add_column("Max mean Δλ")
        table.add_column("Min mean Δλ")
        table.add_column("Max mean Δλ rel")
        table.add_column("Min mean Δλ rel")
        table.add_column("KL mean", justify="right")
        table.add_column("KL variance", justify="right")
        for model, summary in rows:
            table.add_row(model_label(model), str(summary.trials), format_eig(summary.max_abs),
                          format_eig(summary.min_abs), format_eig(summary.max_rel), format_eig(summary.min_rel),
                          f"{summary.kl_mean:.6f}", f"{summary.kl_variance:.6f}")
        console.print(table)


@app.command("eval")
def evaluate_models(
    models: Optional[str] = typer.Option(None, "--models", "-m", help="Comma list of ier, sbm, pa, gen, naive"),
    ensemble: Optional[str] = typer.Option(None, "--ensemble", "-e", help="Comma list of ier, sbm, pa"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Test batches per ensemble"),
    train_missing: Optional[bool] = typer.Option(None, "--train-missing/--no-train-missing",
                                                 help="Train variants whose checkpoint is missing"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Reports directory"),
    config_path: Optional[str] = _config_option(),
    seed: Optional[int] = _seed_option(),
    threads: Optional[int] = _threads_option(),
    verbose: bool = _verbose_option(),
):
    """Evaluate models on held-out batches and write the report tables and curves"""
    with _reporting_errors():
        config = _load_config(config_path, {
            "seed": seed,
            "threads": threads,
            "evaluation.models": models,
            "evaluation.ensembles": ensemble,
            "evaluation.trials": trials,
            "evaluation.train_missing": train_missing,
            "paths.reports": out,
        }, verbose)
        started = time.monotonic()
        directory, summaries = run_benchmark(config, config.threads)
        _print_summaries(summaries)
        console.print(f"[bold green]Reports written to {directory}[/bold green] "
                      f"({format_duration(time.monotonic() - started)})")


@app.command()
def report(
    reports: Optional[str] = typer.Option(None, "--reports", "-r", help="Reports directory of a previous eval"),
    config_path: Optional[str] = _config_option(),
    verbose: bool = _verbose_option(),
):
    """Re-render the tables of a saved evaluation"""
    with _reporting_errors():
        config = _load_config(config_path, {"paths.reports": reports}, verbose)
        records = load_records(config.paths.reports)
        write_reports(records, config.paths.reports, config)
        _print_summaries(summarize_all(records, config.evaluation.rel_window))


@app.command()
def oracle(
    n: Optional[int] = typer.Option(None, "--n", help="Vertex count (2..6)"),
    trials: Optional[int] = typer.Option(None, "--trials", help="Seeded samples"),
    sample_size: Optional[int] = typer.Option(None, "--sample-size", "-N", help="Graphs per sample"),
    p: Optional[float] = typer.Option(None, "--p", help="Constant edge probability"),
    metric: Optional[str] = typer.Option(None, "--metric", help="hamming, adjacency or laplacian"),
    show_counterexample: bool = typer.Option(False, "--counterexample",
                                             help="Show the {K3, K3, empty} sample instead"),
    out: Optional[str] = typer.Option(None, "--out", "-o", help="Also write the result as CSV"),
    config_path: Optional[str] = _config_option(),
    seed: Optional[int] = _seed_option(),
    threads: Optional[int] = _threads_option(),
    verbose: bool = _verbose_option(),
):
    """Compare naive and medoid Fréchet means with exhaustive search on tiny graphs"""
    with _reporting_errors():
        config = _load_config(config_path, {
            "seed": seed,
            "threads": threads,
            "oracle.n": n,
            "oracle.trials": trials,
            "oracle.sample_size": sample_size,
            "oracle.p": p,
            "oracle.metric": metric,
        }, verbose)

        if show_counterexample:
            sample, exhaustive, naive = counterexample()
            table = Table(show_header=True, header_style="bold magenta")
            table.add_column("Method")
            table.add_column("Mean (upper bits)")
            table.add_column("Edges", justify="right")
            table.add_column("Objective", justify="right")
            for result in (exhaustive, naive):
                table.add_row(result.method.value, result.mean.upper_bits(), str(result.mean.edge_count),
                              f"{result.objective:g}")
            console.print(f"Sample: {', '.join(g.upper_bits() for g in sample)} (Hamming)")
            console.print(table)
            return

        report_data = run_oracle(config.oracle, config.seed, config.threads)
        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Statistic")
        table.add_column("Value", justify="right")
        for name, value in asdict(report_data).items():
            shown = value.value if hasattr(value, "value") else value
            table.add_row(name, f"{shown:.6g}" if isinstance(shown, float) else str(shown))
        console.print(table)
        if out:
            with open(out, "w", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(["statistic", "value"])
                for name, value in asdict(report_data).items():
                    writer.writerow([name, value.value if hasattr(value, "value") else value])
            console.print(f"[bold green]Oracle results written to {out}[/bold green]")


@app.command()
def version():
    """Show the package version"""
    console.print(f"frechet-unet {__version__}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI and return its exit code.

    Returns:
        int: 0 on success, 1 on usage errors, 2 on runtime errors
    """
    try:
        code = app(args=argv, prog_name="frechet-unet", standalone_mode=False)
    except click.exceptions.UsageError as e:
        console.print(f"[bold red]Error:[/bold red] {e.format_message()}")
        return EXIT_USAGE
    except click.exceptions.Abort:
        console.print("\n[yellow]Aborted.[/yellow]")
        return EXIT_USAGE
    return code if isinstance(code, int) else 0
