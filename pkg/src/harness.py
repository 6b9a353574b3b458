"""
Experiment orchestration.

Builds the fixed dataset splits for a configuration, runs one training cell
per (training-set size, seed), evaluates the best checkpoint on the test split
and persists a RunReport per cell.
"""

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .diffcore import forward, save_checkpoint
from .exceptions import ConfigurationError, NumericError, ReportIOError
from .export import ExportManager
from .learned_codec import asymmetry_report
from .models import ExperimentConfig, RunReport, Scheme, class_names, report_stem
from .ordering_search import dominant_ordering
from .stats import confusion_matrix, per_class_accuracy
from .synthdata import Dataset, SynthConfig, generate
from .trainer import Trainer, TrainingResult


@dataclass
class DataSplits:
    """Validation and test splits plus the pool training subsets are drawn from."""
    train_pool: Dataset
    validation: Dataset
    test: Dataset

    @property
    def true_ordering(self):
        return self.train_pool.true_ordering


def synth_config_for(config: ExperimentConfig) -> SynthConfig:
    """Generator settings large enough for the biggest training set plus both held-out splits."""
    per_class = (math.ceil(max(config.train_sizes) / config.num_classes)
                 + config.validation_per_class + config.test_per_class)
    return SynthConfig(num_classes=config.num_classes, samples_per_class=per_class,
                       angular_noise=config.angular_noise,
                       distractor_dims=config.distractor_dims,
                       label_noise=config.label_noise,
                       noise_structure=config.noise_structure,
                       seed=config.data_seed)


def prepare_splits(config: ExperimentConfig) -> DataSplits:
    """
    Generate the dataset and split it, stratified by clean class.

    The splits depend only on the data settings, never on the run seed, so
    every scheme and seed competes on identical validation and test data.
    """
    dataset = generate(synth_config_for(config))
    validation, test, pool = [], [], []
    for c in range(config.num_classes):
        members = np.flatnonzero(dataset.clean_labels == c)
        validation.append(members[:config.validation_per_class])
        test.append(members[config.validation_per_class:
                            config.validation_per_class + config.test_per_class])
        pool.append(members[config.validation_per_class + config.test_per_class:])
    # Sorting keeps the generator's shuffled order, so the pool mixes classes.
    return DataSplits(dataset.subset(np.sort(np.concatenate(pool))),
                      dataset.subset(np.sort(np.concatenate(validation))),
                      dataset.subset(np.sort(np.concatenate(test))))


def training_subset(pool: Dataset, size: int, seed: int) -> Dataset:
    """
    Draw the size-n training set for a seed.

    The subset is a prefix of one seed-determined permutation of the pool,
    so smaller sizes are contained in larger ones.
    """
    if size > len(pool):
        raise ConfigurationError(f"training size {size} exceeds the pool of {len(pool)} samples",
                                 "train_sizes")
    order = np.random.default_rng([seed, 2]).permutation(len(pool))
    return pool.subset(order[:size])


def _eval_labels(config: ExperimentConfig, dataset: Dataset) -> np.ndarray:
    return dataset.clean_labels if config.eval_labels == "clean" else dataset.labels


def _ordering_section(result: TrainingResult, splits: DataSplits) -> dict:
    weights = result.ordering_weights
    candidates = result.candidates
    dominant = dominant_ordering(weights, candidates)
    probabilities = weights.probabilities()
    true_index = candidates.index_of(splits.true_ordering)
    return {
        'candidates': [list(c.ranks) for c in candidates.candidates],
        'final_probabilities': [float(p) for p in probabilities],
        'dominant': {
            'index': int(np.argmax(probabilities)),
            'ranks': list(dominant.ranks),
            'cyclic_sequence': dominant.cyclic_sequence(),
            'probability': float(np.max(probabilities)),
        },
        'true_candidate_index': true_index,
        'matches_true_ordering': bool(true_index == int(np.argmax(probabilities))),
    }


def _build_report(config: ExperimentConfig, size: int, seed: int, splits: DataSplits,
                  result: Optional[TrainingResult], failure: Optional[str] = None,
                  checkpoints: Optional[list] = None) -> RunReport:
    names = class_names(config.num_classes)
    truth = splits.true_ordering
    common = dict(variant=config.variant, scheme=config.scheme.value, train_size=size, seed=seed,
                  config=config.to_dict(), class_names=names,
                  true_ordering={'ranks': list(truth.ranks),
                                 'cyclic_sequence': truth.cyclic_sequence()})
    if result is None:
        return RunReport(checkpoints=checkpoints or [], status="failed", failure=failure, **common)

    test = splits.test
    test_labels = _eval_labels(config, test)
    predicted = np.argmax(forward(result.best_params, test.features), axis=1)
    confusion = confusion_matrix(test_labels, predicted, config.num_classes)
    recall = per_class_accuracy(confusion)

    report = RunReport(
        checkpoints=[c.to_dict() for c in result.checkpoints],
        best_step=result.best_step,
        best_validation_accuracy=result.best_checkpoint.validation_accuracy,
        test_accuracy=float(np.mean(predicted == test_labels)),
        test_class_counts=[int(n) for n in confusion.sum(axis=1)],
        confusion_matrix=confusion.tolist(),
        per_class_accuracy=[None if np.isnan(a) else float(a) for a in recall],
        **common)
    if config.scheme == Scheme.PLSORD:
        report.ordering = _ordering_section(result, splits)
    if result.encoding is not None:
        report.label_matrix = result.encoding.to_text()
    if config.scheme == Scheme.LEARNED:
        report.asymmetry = asymmetry_report(result.encoding).tolist()
    return report


def run_cell(config: ExperimentConfig, splits: DataSplits, size: int,
             seed: int) -> Tuple[RunReport, float]:
    """
    Train and evaluate one cell.

    A non-finite loss marks the run failed instead of raising.

    Returns:
        Tuple of (report, wall-clock seconds)
    """
    logger = logging.getLogger(__name__)
    started = time.perf_counter()
    train = training_subset(splits.train_pool, size, seed)
    trainer = Trainer(config, seed, splits.true_ordering)
    try:
        result = trainer.fit(train.features, train.labels, splits.validation.features,
                             _eval_labels(config, splits.validation))
    except NumericError as e:
        logger.warning(f"Run {config.variant} n={size} seed={seed} failed: {e}")
        report = _build_report(config, size, seed, splits, None, failure=str(e),
                               checkpoints=[c.to_dict() for c in trainer.checkpoints])
        return report, time.perf_counter() - started

    report = _build_report(config, size, seed, splits, result)
    if config.save_checkpoints:
        extra = {}
        if result.ordering_weights is not None:
            extra['ordering_logits'] = result.ordering_weights.logits
        if result.encoding_params is not None:
            extra['encoding_alpha'] = result.encoding_params.alpha
        save_checkpoint(os.path.join(config.output_dir, "checkpoints", report.stem),
                        result.best_params, seed, result.best_step, extra)
    return report, time.perf_counter() - started


def _run_cell_args(args) -> Tuple[RunReport, float]:
    return run_cell(*args)


def run_experiment(config: ExperimentConfig,
                   splits: Optional[DataSplits] = None) -> List[RunReport]:
    """
    Run every (size, seed) cell of a configuration and persist its reports.

    Args:
        config: Validated experiment configuration
        splits: Precomputed splits; generated from the config when omitted

    Returns:
        List[RunReport]: Reports ordered by size, then seed

    Raises:
        ReportIOError: If the output directory is not writable
    """
    logger = logging.getLogger(__name__)
    exporter = ExportManager()
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as e:
        raise ReportIOError(f"cannot create output directory: {e}", config.output_dir, e)
    if not os.access(config.output_dir, os.W_OK):
        raise ReportIOError("output directory is not writable", config.output_dir)

    splits = splits or prepare_splits(config)
    cells = [(size, seed) for size in config.train_sizes for seed in config.seeds]
    logger.info(f"Running {len(cells)} cells for {config.variant} "
                f"with {config.workers} worker(s)")

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_run_cell_args,
                                     [(config, splits, size, seed) for size, seed in cells]))
    else:
        outcomes = [run_cell(config, splits, size, seed) for size, seed in cells]

    reports = []
    for report, seconds in outcomes:
        exporter.write_run_report(report, config.output_dir)
        exporter.write_timing(report, seconds, config.output_dir)
        reports.append(report)
    failed = sum(r.is_failed for r in reports)
    logger.info(f"Finished {config.variant}: {len(reports) - failed} ok, {failed} failed")
    return reports


def run_single(config: ExperimentConfig, size: Optional[int] = None) -> RunReport:
    """Run one cell: the given size (default the largest) with the first seed."""
    size = size if size is not None else max(config.train_sizes)
    if size <= 0:
        raise ConfigurationError("training size must be positive", "train_sizes")
    seed = config.seeds[0]
    single = replace(config, train_sizes=(size,), seeds=(seed,), workers=1)
    # Sizes within the configured range reuse the sweep's splits.
    splits = prepare_splits(config if size <= max(config.train_sizes) else single)
    return run_experiment(single, splits)[0]


def run_sweep(configs: Sequence[ExperimentConfig]) -> List[RunReport]:
    """
    Run several configurations (one scheme variant each) on shared data.

    Raises:
        ConfigurationError: If the configurations disagree on the data settings
    """
    if not configs:
        raise ConfigurationError("at least one configuration is required")
    data_keys = [synth_config_for(c) for c in configs]
    split_keys = {(c.validation_per_class, c.test_per_class, c.eval_labels) for c in configs}
    base = {(d.num_classes, d.angular_noise, d.distractor_dims, d.label_noise,
             d.noise_structure, d.seed) for d in data_keys}
    if len(base) > 1 or len(split_keys) > 1:
        raise ConfigurationError("sweep configurations must share the data settings")
    variants = [c.variant for c in configs]
    if len(set(variants)) != len(variants):
        raise ConfigurationError(f"duplicate variants in sweep: {variants}", "scheme")

    # One dataset sized for the largest training set serves every variant.
    largest = max(configs, key=lambda c: max(c.train_sizes))
    splits = prepare_splits(largest)
    reports: List[RunReport] = []
    for config in configs:
        reports.extend(run_experiment(config, splits))
    return reports
