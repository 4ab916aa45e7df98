"""
Run orchestration: dataset and checkpoint locations, training with persistence, and
the benchmark that evaluates every model on held-out batches and writes the reports.

Reports directory:
    summary_table1.csv   IER, max/min of the mean absolute eigenvalue difference
    summary_table2.csv   IER, max/min of the mean relative difference (first rel_window eigenvalues)
    summary_table3..5    KL mean and variance on IER, SBM and PA
    curves_fig5..10      per-eigenvalue mean differences; odd: estimate vs true mean,
                         even: estimate vs sample mean spectrum; IER, SBM, PA in turn
    records.jsonl        every per-trial record, for re-rendering
"""

import csv
import json
import logging
import os
import shutil
import tempfile
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from frechet_unet.core.checkpoint import load_checkpoint, save_checkpoint
from frechet_unet.core.datasets import generate_dataset, generate_test_set
from frechet_unet.core.evaluation import evaluate, summarize_all
from frechet_unet.core.frechet import naive_frechet_mean
from frechet_unet.core.training import TrainingRun, predict_frechet, train_run
from frechet_unet.core.unet import ModelParams
from frechet_unet.models.config import RunConfig
from frechet_unet.models.enums import NAIVE_LABEL, NAIVE_MODEL, Ensemble, Variant
from frechet_unet.models.errors import MissingCheckpointError, ReportError
from frechet_unet.models.results import DatasetPair, EvalRecord, EvalSummary
from frechet_unet.utils.dataset_io import load_dataset, save_dataset
from frechet_unet.utils.formatting import format_duration

logger = logging.getLogger('frechet_unet.benchmark')

CHECKPOINT_SUFFIX = ".fgl"
RECORDS_FILE = "records.jsonl"
TABLE_HEADER = ["model", "metric", "value", "eig_index"]
CURVE_HEADER = ["model", "eig_index", "mean_abs", "mean_rel"]
ENSEMBLE_ORDER = (Ensemble.IER, Ensemble.SBM, Ensemble.PA)

Summaries = Dict[Tuple[str, Ensemble], EvalSummary]


def dataset_dir(config: RunConfig, ensemble: Ensemble) -> str:
    return os.path.join(config.paths.datasets, Ensemble(ensemble).value)


def checkpoint_path(config: RunConfig, variant: Variant) -> str:
    return os.path.join(config.paths.checkpoints, Variant(variant).value + CHECKPOINT_SUFFIX)


def loss_log_path(checkpoint: str) -> str:
    return checkpoint + ".loss.csv"


def model_label(model: str) -> str:
    return NAIVE_LABEL if model == NAIVE_MODEL else Variant(model).label


def run_provenance(config: RunConfig) -> Dict[str, object]:
    return {"seed": config.seed, "config_digest": config.digest()}


def build_dataset(config: RunConfig, ensemble: Ensemble, workers: int = 1) -> Tuple[str, List[DatasetPair]]:
    """Generate one training dataset and write it under the datasets path."""
    pairs = generate_dataset(ensemble, config.seed, config.generation, workers)
    directory = save_dataset(pairs, dataset_dir(config, ensemble), run_provenance(config))
    return directory, pairs


def training_data(config: RunConfig, variant: Variant, generate_missing: bool = False,
                  workers: int = 1) -> List[DatasetPair]:
    """Concatenated datasets of the variant's ensembles, in IER, SBM, PA order."""
    data = []
    for ensemble in Variant(variant).ensembles:
        directory = dataset_dir(config, ensemble)
        if generate_missing and not os.path.isdir(directory):
            logger.info(f"dataset {directory} missing, generating it")
            _, pairs = build_dataset(config, ensemble, workers)
        else:
            pairs = load_dataset(directory)
        data.extend(pairs)
    return data


def write_loss_log(path: str, losses: Sequence[float]):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(losses, start=1):
            writer.writerow([epoch, f"{loss:.9f}"])


def train_and_save(config: RunConfig, variant: Variant, data: Optional[List[DatasetPair]] = None,
                   workers: int = 1) -> Tuple[str, str, TrainingRun]:
    """
    Train a variant and persist its checkpoint and per-epoch loss log.

    Returns:
        Tuple[str, str, TrainingRun]: Checkpoint path, checkpoint SHA-256 and the run
    """
    variant = Variant(variant)
    if data is None:
        data = training_data(config, variant, workers=workers)
    started = time.monotonic()
    run = train_run(variant, data, config.seed, config.training, workers)
    path = checkpoint_path(config, variant)
    digest = save_checkpoint(run.params, run.state, path)
    write_loss_log(loss_log_path(path), run.epoch_losses)
    logger.info(f"{variant.label} trained in {format_duration(time.monotonic() - started)}")
    return path, digest, run


def load_model(config: RunConfig, variant: Variant, workers: int = 1) -> ModelParams:
    """Checkpointed parameters of a variant, training it first if configured to."""
    path = checkpoint_path(config, variant)
    if not os.path.isfile(path):
        if not config.evaluation.train_missing:
            raise MissingCheckpointError(
                f"no checkpoint for {Variant(variant).label} at {path}; run `train --variant "
                f"{Variant(variant).value}` or enable evaluation.train_missing")
        data = training_data(config, variant, generate_missing=True, workers=workers)
        train_and_save(config, variant, data, workers)
    params, _ = load_checkpoint(path, base_channels=config.training.base_channels,
                                input_size=config.generation.n)
    return params


def _estimator(config: RunConfig, model: str, workers: int) -> Callable[[List], object]:
    if model == NAIVE_MODEL:
        return lambda sample: naive_frechet_mean(sample).mean
    params = load_model(config, Variant(model), workers)
    threshold = config.evaluation.binarize_threshold
    return lambda sample: predict_frechet(params, sample, threshold)


def run_benchmark(config: RunConfig, workers: int = 1, report_dir: Optional[str] = None) -> Tuple[str, Summaries]:
    """
    Evaluate every configured model on held-out batches of every configured ensemble.

    Checkpoints are loaded before any test data is drawn, so a missing model fails the
    run before anything is written.

    Returns:
        Tuple[str, Summaries]: Report directory and the per-(model, ensemble) summaries
    """
    evaluation = config.evaluation
    estimators = {model: _estimator(config, model, workers) for model in evaluation.models}
    ensembles = [e for e in ENSEMBLE_ORDER if e.value in evaluation.ensembles]

    records: List[EvalRecord] = []
    for ensemble in ensembles:
        started = time.monotonic()
        test_set = generate_test_set(ensemble, config.seed, config.generation, evaluation.trials, workers)
        samples = [pair.batch for pair in test_set]
        truths = [pair.target for pair in test_set]
        seeds = [pair.stream for pair in test_set]
        for model in evaluation.models:
            outputs = [estimators[model](sample) for sample in samples]
            records.extend(evaluate(outputs, truths, samples, model, ensemble, seeds,
                                    evaluation.eps_rel, evaluation.eps_kl, workers))
        logger.info(f"evaluated {len(evaluation.models)} models on {len(test_set)} {ensemble.value} batches "
                    f"in {format_duration(time.monotonic() - started)}")

    directory = write_reports(records, report_dir or config.paths.reports, config)
    return directory, summarize_all(records, evaluation.rel_window)


def _fmt(value: float) -> str:
    return f"{value:.9f}"


def _table_rows(summaries: Summaries, models: Sequence[str], ensemble: Ensemble, kind: str) -> List[List[str]]:
    rows = []
    for model in models:
        summary = summaries.get((model, ensemble))
        if summary is None:
            continue
        label = model_label(model)
        if kind == "abs":
            entries = [("max_mean_abs", summary.max_abs), ("min_mean_abs", summary.min_abs)]
            rows.extend([label, name, _fmt(v), str(i)] for name, (v, i) in entries)
        elif kind == "rel":
            entries = [("max_mean_rel", summary.max_rel), ("min_mean_rel", summary.min_rel)]
            rows.extend([label, name, _fmt(v), str(i)] for name, (v, i) in entries)
        else:
            rows.append([label, "kl_mean", _fmt(summary.kl_mean), ""])
            rows.append([label, "kl_variance", _fmt(summary.kl_variance), ""])
    return rows


def _curve_rows(summaries: Summaries, models: Sequence[str], ensemble: Ensemble, against_sample: bool,
                abs_len: int, rel_len: int) -> List[List[str]]:
    rows = []
    for model in models:
        summary = summaries.get((model, ensemble))
        if summary is None:
            continue
        absolute = summary.mean_delta_sample if against_sample else summary.mean_delta
        relative = summary.mean_delta_sample_rel if against_sample else summary.mean_delta_rel
        for i in range(min(abs_len, len(absolute))):
            rel = _fmt(relative[i]) if i < rel_len else ""
            rows.append([model_label(model), str(i + 1), _fmt(absolute[i]), rel])
    return rows


def _write_csv(path: str, header: List[str], rows: List[List[str]]):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def report_files(records: Sequence[EvalRecord], config: RunConfig) -> Dict[str, Tuple[List[str], List[List[str]]]]:
    """File name -> (header, rows) of every table and curve file."""
    evaluation = config.evaluation
    summaries = summarize_all(records, evaluation.rel_window)
    models = list(dict.fromkeys(r.model for r in records))
    files = {
        "summary_table1.csv": (TABLE_HEADER, _table_rows(summaries, models, Ensemble.IER, "abs")),
        "summary_table2.csv": (TABLE_HEADER, _table_rows(summaries, models, Ensemble.IER, "rel")),
    }
    for number, ensemble in enumerate(ENSEMBLE_ORDER, start=3):
        files[f"summary_table{number}.csv"] = (TABLE_HEADER, _table_rows(summaries, models, ensemble, "kl"))
    for offset, ensemble in enumerate(ENSEMBLE_ORDER):
        for against_sample in (False, True):
            number = 5 + 2 * offset + int(against_sample)
            files[f"curves_fig{number}.csv"] = (CURVE_HEADER, _curve_rows(
                summaries, models, ensemble, against_sample, evaluation.abs_curve_len, evaluation.rel_curve_len))
    return files


def write_reports(records: Sequence[EvalRecord], directory: str, config: RunConfig) -> str:
    """Write tables, curves and records; the directory is replaced only once complete."""
    parent = os.path.dirname(os.path.abspath(directory))
    os.makedirs(parent, exist_ok=True)
    staging = tempfile.mkdtemp(dir=parent, prefix=".reports-")
    try:
        for name, (header, rows) in report_files(records, config).items():
            _write_csv(os.path.join(staging, name), header, rows)
        with open(os.path.join(staging, RECORDS_FILE), "w") as f:
            for record in records:
                f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        with open(os.path.join(staging, "run.json"), "w") as f:
            json.dump(run_provenance(config), f, indent=2, sort_keys=True)
        if os.path.exists(directory):
            shutil.rmtree(directory)
        os.replace(staging, directory)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    logger.info(f"Wrote reports for {len(records)} records to {directory}")
    return directory


def load_records(directory: str) -> List[EvalRecord]:
    """Records saved by ``write_reports``."""
    path = os.path.join(directory, RECORDS_FILE)
    if not os.path.isfile(path):
        raise ReportError(f"no evaluation records at {path}; run `eval` first")
    with open(path, "r") as f:
        return [EvalRecord.from_dict(json.loads(line)) for line in f if line.strip()]
