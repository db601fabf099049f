"""End-to-end evaluation workflow over one or many random seeds.

One run for a (model kind, seed) pair does, in order: chronological split,
hyperparameter search with stratified k-fold cross-validation on the
hyperparameter set, extraction of the per-fold optimal threshold, averaging
of those thresholds, a final fit on the whole hyperparameter set, and frozen
evaluation on the test set and the five time slices.  The decision threshold
is never refitted on evaluation data: everything after the final fit only
applies the stored threshold.

Two metric regimes drive the search.  The ``standard`` regime optimises the
precision-recall area and picks per-fold thresholds at the best Youden
index; the ``requirement_aware`` regime optimises the constrained curve area
and picks thresholds where the slip target is met with the best volume
reduction.  All metrics are computed for every run regardless of the regime,
so the two can be compared side by side from their reports.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import classifiers
from .classifiers import ClassifierSpec, HyperParamSpace, TrainedModel
from .curves import (OperatingCurve, auc_pr, best_youden, constrained_auc,
                     select_threshold, sweep_thresholds, volume_at_target_slip)
from .dataset import Dataset, EncodedMatrix, FeatureEncoder, SplitPlan, \
    chrono_split, stratified_kfold
from .errors import IngestionError, InputError
from .metrics import (SENTINEL_THRESHOLD, MetricReport, TargetSpec,
                      confusion_counts)
from .seeding import derive_seed, rng_for

REGIME_STANDARD = "standard"
REGIME_REQUIREMENT = "requirement_aware"
REGIMES = (REGIME_STANDARD, REGIME_REQUIREMENT)

OPTIMIZER_RANDOM = "random"
OPTIMIZER_SURROGATE = "surrogate"
OPTIMIZERS = (OPTIMIZER_RANDOM, OPTIMIZER_SURROGATE)

EVAL_SETS = ("test", "slice1", "slice2", "slice3", "slice4", "slice5")


@dataclass
class ExperimentConfig:
    """Everything a multi-seed experiment needs besides the dataset."""

    model_kinds: tuple = (classifiers.DUMMY,)
    regime: str = REGIME_REQUIREMENT
    targets: TargetSpec = field(default_factory=TargetSpec)
    optimizer: str = OPTIMIZER_RANDOM
    budget: int = 20
    k_folds: int = 5
    base_seed: int = 0
    n_seeds: int = 10
    spaces: dict = field(default_factory=dict)
    run_id: str = "run"

    def __post_init__(self):
        if not self.model_kinds:
            raise InputError("at least one model kind is required")
        for kind in self.model_kinds:
            if kind not in classifiers.KINDS:
                raise InputError(f"unknown classifier kind {kind!r}")
        if self.regime not in REGIMES:
            raise InputError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.optimizer not in OPTIMIZERS:
            raise InputError(f"optimizer must be one of {OPTIMIZERS}")
        if self.budget < 1:
            raise InputError("budget must be >= 1")
        if self.k_folds < 2:
            raise InputError("k_folds must be >= 2")
        if self.n_seeds < 1:
            raise InputError("n_seeds must be >= 1")

    @property
    def seeds(self) -> list[int]:
        return [self.base_seed + i for i in range(self.n_seeds)]

    def space_for(self, kind: str) -> HyperParamSpace:
        return self.spaces.get(kind) or HyperParamSpace.default(kind)


@dataclass
class TrialResult:
    """Cross-validation outcome for one hyperparameter draw."""

    spec: ClassifierSpec
    fold_performances: list[float]
    fold_thresholds: list[float]
    mean_performance: float
    mean_threshold: float

    @property
    def deployable(self) -> bool:
        return math.isfinite(self.mean_threshold)


@dataclass
class RunResult:
    """One (kind, seed) pass: the deployable model and its frozen reports."""

    kind: str
    seed: int
    model: TrainedModel
    trial: TrialResult
    test_report: MetricReport
    slice_reports: list[MetricReport]
    test_curve: Optional[OperatingCurve]
    threshold_source: str
    undeployable: bool

    def report_for(self, eval_set: str) -> MetricReport:
        if eval_set == "test":
            return self.test_report
        if eval_set.startswith("slice"):
            return self.slice_reports[int(eval_set[5:]) - 1]
        raise InputError(f"unknown evaluation set {eval_set!r}")


@dataclass
class SeedAggregate:
    """Per-seed reports with mean and population (ddof=0) deviation."""

    kind: str
    seeds: tuple
    reports: dict  # eval set name -> list of MetricReport, one per seed
    reference_curve: Optional[OperatingCurve] = None
    reference_seed: Optional[int] = None
    undeployable_seeds: tuple = ()

    def mean_std(self, eval_set: str, metric: str) -> tuple:
        """(mean, std, n) over seeds where the metric was defined."""
        values = [r.metric(metric) for r in self.reports[eval_set]]
        defined = np.array([v for v in values if v is not None], dtype=float)
        if defined.size == 0:
            return None, None, 0
        return float(defined.mean()), float(defined.std(ddof=0)), int(defined.size)


# ---------------------------------------------------------------------------
# Metric reports


def score_report(scores: Sequence[float], labels: Sequence[int],
                 targets: TargetSpec,
                 threshold: Optional[float] = None) -> MetricReport:
    """All metrics for one scored set; threshold-dependent ones need a threshold.

    Metrics whose denominator class is absent come back ``None`` instead of
    failing, so thin evaluation slices degrade gracefully.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    report = MetricReport(threshold=threshold,
                          n_rows=int(labels.size),
                          n_positives=int(np.count_nonzero(labels == 1)))
    n_negatives = report.n_rows - report.n_positives

    if threshold is not None:
        cc = confusion_counts(scores, labels, threshold)
        report.accuracy = (cc.tp + cc.tn) / cc.total
        predicted_pos = cc.tp + cc.fp
        report.precision = cc.tp / predicted_pos if predicted_pos else 0.0
        if report.n_positives:
            report.recall_pos = cc.tp / cc.positives
            denominator = report.precision + report.recall_pos
            report.f1 = (2 * report.precision * report.recall_pos / denominator
                         if denominator > 0 else 0.0)
            s = cc.fn / cc.positives
            report.slip_rate = s
            report.slip_equals_target = s == targets.s_target
            report.cv = (targets.s_target - s if s >= targets.s_target
                         else (cc.tn / cc.negatives if n_negatives else None))
        if n_negatives:
            report.volume_reduction = cc.tn / cc.negatives
        if report.n_positives and n_negatives:
            report.youden_at_threshold = (report.volume_reduction
                                          + report.recall_pos - 1.0)

    if report.n_positives and n_negatives:
        curve = sweep_thresholds(scores, labels)
        report.auc_pr = auc_pr(scores, labels)
        report.youden_score = best_youden(curve).score
        report.v_at_s = volume_at_target_slip(curve, targets).value
        report.cauc = constrained_auc(curve, targets)
    return report


# ---------------------------------------------------------------------------
# Hyperparameter search


def _propose_surrogate(space: HyperParamSpace, rng: np.random.Generator,
                       history: list[TrialResult]) -> dict:
    """Pick the candidate that looks most like past good draws.

    A density-ratio surrogate: the top quarter of trials by mean performance
    forms the "good" set; 24 random candidates are ranked by the ratio of
    smoothed likelihoods under good versus remaining draws.
    """
    if len(history) < 5 or not (space.int_ranges or space.choices):
        return space.sample(rng)
    ranked = sorted(range(len(history)),
                    key=lambda i: (-history[i].mean_performance, i))
    n_good = max(2, len(history) // 4)
    good = [history[i].spec.hyperparameters for i in ranked[:n_good]]
    rest = [history[i].spec.hyperparameters for i in ranked[n_good:]]

    def likelihood(params: dict, group: list[dict]) -> float:
        if not group:
            return 1.0
        value = 1.0
        for name, (lo, hi) in space.int_ranges.items():
            width = max((hi - lo) / 4.0, 1.0)
            deltas = np.array([params[name] - g[name] for g in group], dtype=float)
            value *= float(np.mean(np.exp(-0.5 * (deltas / width) ** 2))) + 1e-9
        for name, options in space.choices.items():
            hits = sum(1 for g in group if g[name] == params[name])
            value *= (hits + 1.0) / (len(group) + len(options))
        return value

    candidates = [space.sample(rng) for _ in range(24)]
    ratios = [likelihood(c, good) / likelihood(c, rest) for c in candidates]
    return candidates[int(np.argmax(ratios))]


def optimize_hyperparams(kind: str, space: HyperParamSpace,
                         hyper_matrix: EncodedMatrix, regime: str,
                         targets: TargetSpec, budget: int, seed: int,
                         k_folds: int = 5,
                         optimizer: str = OPTIMIZER_RANDOM,
                         propose: Optional[Callable] = None) -> TrialResult:
    """Search the space with cross-validated scoring; return the best trial.

    Each trial trains on k-1 folds and, per validation fold, records the
    regime's target metric and optimal threshold.  Fold thresholds that are
    infeasible (no deployable slip-compliant point) are excluded from the
    threshold mean; a trial whose folds are all infeasible keeps the sentinel
    threshold and is marked undeployable.  Ties on mean performance go to the
    earlier trial.
    """
    if regime not in REGIMES:
        raise InputError(f"unknown regime {regime!r}")
    folds = stratified_kfold(hyper_matrix, k_folds, derive_seed(seed, "folds"))
    rng = rng_for(seed, "optimizer")
    if propose is None:
        propose = (_propose_surrogate if optimizer == OPTIMIZER_SURROGATE
                   else lambda sp, generator, history: sp.sample(generator))

    history: list[TrialResult] = []
    best: Optional[TrialResult] = None
    for trial_index in range(budget):
        params = propose(space, rng, history)
        space.validate(params)
        performances: list[float] = []
        thresholds: list[float] = []
        for fold_index, (train_idx, val_idx) in enumerate(folds):
            spec = ClassifierSpec(
                kind=kind, hyperparameters=params,
                seed=derive_seed(seed, "trial", trial_index, "fold", fold_index))
            model = classifiers.train(spec, hyper_matrix.take(train_idx))
            val = hyper_matrix.take(val_idx)
            val_scores = classifiers.score(model, val)
            curve = sweep_thresholds(val_scores, val.labels)
            if regime == REGIME_STANDARD:
                performances.append(auc_pr(val_scores, val.labels))
                thresholds.append(best_youden(curve).threshold)
            else:
                performances.append(constrained_auc(curve, targets))
                choice = select_threshold(curve, "v_at_s", targets)
                thresholds.append(choice.threshold)
        finite = [t for t in thresholds if math.isfinite(t)]
        trial = TrialResult(
            spec=ClassifierSpec(kind=kind, hyperparameters=params,
                                seed=derive_seed(seed, "final")),
            fold_performances=performances,
            fold_thresholds=thresholds,
            mean_performance=float(np.mean(performances)),
            mean_threshold=(float(np.mean(finite)) if finite
                            else SENTINEL_THRESHOLD),
        )
        history.append(trial)
        if best is None or trial.mean_performance > best.mean_performance:
            best = trial
    return best


# ---------------------------------------------------------------------------
# Single-seed workflow


def fit_deployable(hyper_ds: Dataset, kind: str, config: ExperimentConfig,
                   seed: int) -> tuple[TrainedModel, FeatureEncoder, TrialResult]:
    """Model building phase: sees only the hyperparameter rows.

    Fits the feature encoder, runs the hyperparameter search, refits the best
    spec on all hyperparameter rows and freezes the decision threshold.  The
    dummy kind keeps its own majority-class threshold: it predicts the most
    frequent class by definition, so the averaged fold threshold does not
    apply to it.
    """
    encoder = FeatureEncoder().fit(hyper_ds)
    hyper_matrix = encoder.transform(hyper_ds)
    trial = optimize_hyperparams(
        kind, config.space_for(kind), hyper_matrix, config.regime,
        config.targets, config.budget, seed, k_folds=config.k_folds,
        optimizer=config.optimizer)
    model = classifiers.train(trial.spec, hyper_matrix)
    if kind != classifiers.DUMMY:
        model.decision_threshold = trial.mean_threshold
    return model, encoder, trial


def run_single_seed(config: ExperimentConfig, dataset: Dataset, kind: str,
                    seed: int, plan: Optional[SplitPlan] = None) -> RunResult:
    """Full workflow for one seed: split, fit, freeze threshold, evaluate."""
    if plan is None:
        plan = chrono_split(dataset, seed)
    hyper_ds = dataset.take(plan.hyper_indices)
    model, encoder, trial = fit_deployable(hyper_ds, kind, config, seed)

    # Threshold is frozen; only now are evaluation rows touched.
    def evaluate(indices: np.ndarray) -> tuple[MetricReport, Optional[OperatingCurve]]:
        matrix = encoder.transform(dataset, indices=indices)
        eval_scores = classifiers.score(model, matrix)
        report = score_report(eval_scores, matrix.labels, config.targets,
                              threshold=model.decision_threshold)
        curve = None
        if report.auc_pr is not None:
            curve = sweep_thresholds(eval_scores, matrix.labels)
        return report, curve

    test_report, test_curve = evaluate(plan.test_indices)
    slice_reports = [evaluate(idx)[0] for idx in plan.slice_indices]
    return RunResult(
        kind=kind, seed=seed, model=model, trial=trial,
        test_report=test_report, slice_reports=slice_reports,
        test_curve=test_curve,
        threshold_source=("majority_class" if kind == classifiers.DUMMY
                          else "mean_fold"),
        undeployable=(kind != classifiers.DUMMY and not trial.deployable),
    )


def run_multi_seed(config: ExperimentConfig, dataset: Dataset) -> dict:
    """Independent runs per seed and kind, aggregated to mean and deviation."""
    aggregates: dict[str, SeedAggregate] = {}
    for kind in config.model_kinds:
        reports = {name: [] for name in EVAL_SETS}
        reference_curve = None
        reference_seed = None
        undeployable = []
        for seed in config.seeds:
            try:
                run = run_single_seed(config, dataset, kind, seed)
            except Exception as exc:
                raise type(exc)(f"[kind={kind} seed={seed}] {exc}") from exc
            for name in EVAL_SETS:
                reports[name].append(run.report_for(name))
            if reference_curve is None and run.test_curve is not None:
                reference_curve = run.test_curve
                reference_seed = seed
            if run.undeployable:
                undeployable.append(seed)
        aggregates[kind] = SeedAggregate(
            kind=kind, seeds=tuple(config.seeds), reports=reports,
            reference_curve=reference_curve, reference_seed=reference_seed,
            undeployable_seeds=tuple(undeployable))
    return aggregates


def verdict(aggregate: SeedAggregate, targets: TargetSpec) -> dict:
    """Success call for one model: mean test cv must reach the volume target.

    Also counts how many individual seeds pass, since a high deviation can
    hide seeds that miss the targets.
    """
    mean_cv, std_cv, n = aggregate.mean_std("test", "cv")
    per_seed = [r.cv for r in aggregate.reports["test"]]
    passes = sum(1 for value in per_seed
                 if value is not None and value >= targets.v_target)
    passed = mean_cv is not None and mean_cv >= targets.v_target
    return {"kind": aggregate.kind, "passed": passed, "mean_cv": mean_cv,
            "std_cv": std_cv, "seeds_passing": passes,
            "seeds_total": len(aggregate.seeds), "n_defined": n}


# ---------------------------------------------------------------------------
# External score ingestion


@dataclass
class ExternalEvaluation:
    report: MetricReport
    curve: Optional[OperatingCurve]
    slice_reports: Optional[list] = None


def read_scores_csv(path) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Read a score export: header with score,label[,timestamp] columns."""
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: file is empty") from None
        for required in ("score", "label"):
            if required not in header:
                raise IngestionError(f"{path}: missing column {required!r}")
        score_col = header.index("score")
        label_col = header.index("label")
        ts_col = header.index("timestamp") if "timestamp" in header else None
        scores, labels, stamps = [], [], []
        problems = []
        for i, row in enumerate(reader):
            line_no = i + 2
            try:
                value = float(row[score_col])
                label = int(row[label_col])
                if not 0.0 <= value <= 1.0:
                    raise ValueError(f"score {value} outside [0, 1]")
                if label not in (0, 1):
                    raise ValueError(f"label {label} not in {{0, 1}}")
                if ts_col is not None:
                    stamps.append(float(row[ts_col]))
            except (ValueError, IndexError) as exc:
                problems.append(f"line {line_no}: {exc}")
                continue
            scores.append(value)
            labels.append(label)
        if problems:
            raise IngestionError(f"{path}: " + "; ".join(problems[:20]))
    if not scores:
        raise IngestionError(f"{path}: no data rows")
    stamps_arr = np.array(stamps) if ts_col is not None else None
    return np.array(scores), np.array(labels), stamps_arr


def evaluate_external(path, targets: TargetSpec,
                      threshold: Optional[float] = None,
                      n_slices: Optional[int] = None) -> ExternalEvaluation:
    """Evaluate any exported score/label file with the full metric set.

    Threshold-dependent metrics appear only when a threshold was supplied
    (it must come from knowledge available before these rows).  With
    ``n_slices`` and a timestamp column, rows are also cut chronologically
    into that many contiguous slices and reported per slice.
    """
    scores, labels, stamps = read_scores_csv(path)
    report = score_report(scores, labels, targets, threshold=threshold)
    curve = None
    if report.auc_pr is not None:
        curve = sweep_thresholds(scores, labels)
    slice_reports = None
    if n_slices is not None:
        if n_slices < 2:
            raise InputError("n_slices must be >= 2")
        if stamps is None:
            raise InputError("slice-wise evaluation needs a timestamp column")
        order = np.argsort(stamps, kind="stable")
        slice_reports = [
            score_report(scores[chunk], labels[chunk], targets, threshold=threshold)
            for chunk in np.array_split(order, n_slices)]
    return ExternalEvaluation(report=report, curve=curve,
                              slice_reports=slice_reports)
