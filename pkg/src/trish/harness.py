"""Benchmark harness: G calibration, parameter grids, repeated seeded runs.

A grid experiment measures the mean norm G of one epoch of SG gradients,
builds 60 parameter triplets from it, runs every triplet `reps` times with
per-cell deterministic seeds, and aggregates final metrics, final batch
sizes, step-case frequencies and EGE-indexed mean curves.  Results land in
``grid.csv`` plus one curve file per cell; identical config and seed give
byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import FiniteSumProblem
from .data import chronological_split, minmax_normalize, parse_libsvm
from .models import (LogisticModel, MlpModel, default_x0, testing_accuracy,
                     testing_loss)
from .optimizer import (HyperParams, StepCase, run_sg, run_trish,
                        run_trish_as)

_ALGORITHMS = ("trish", "trish_as", "sg")
_MODELS = ("logistic", "mlp_classifier", "mlp_regressor")

DEFAULT_ALPHAS = (0.1, 10.0**-0.5, 1.0, 10.0**0.5, 10.0)
DEFAULT_GAMMA1_MULTIPLIERS = (4.0, 8.0, 16.0, 32.0)
DEFAULT_GAMMA2_MULTIPLIERS = (0.5, 1.0, 2.0)

GRID_CSV_HEADER = ("alpha,gamma1,gamma2,algorithm,mean_metric,std_metric,"
                   "mean_final_batch,case1_frac,case2_frac,case3_frac")
CURVE_CSV_HEADER = "ege,train_loss,test_metric"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a grid experiment needs, JSON-loadable."""

    model: str
    algorithm: str
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    data_path: Optional[str] = None          # single file, split chronologically
    train_fraction: float = 0.7
    normalize: bool = False                  # joint min-max over train+test
    positive_label: Optional[float] = None   # classifier targets: 1 iff label equals this
    alphas: tuple = DEFAULT_ALPHAS
    gamma1_multipliers: tuple = DEFAULT_GAMMA1_MULTIPLIERS
    gamma2_multipliers: tuple = DEFAULT_GAMMA2_MULTIPLIERS
    reps: int = 50
    seed: int = 0
    budget_epochs: float = 1.0
    batch_size: int = 64                     # fixed batch for trish / sg
    s0: Optional[int] = None                 # None: min(32, ceil(N/100))
    theta: float = 0.9
    nu: float = 5.84
    r: int = 10
    avg_threshold: float = 1.0
    g_value: Optional[float] = None          # skip calibration, use this G
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ValueError(f"model must be one of {_MODELS}, got {self.model!r}")
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"algorithm must be one of {_ALGORITHMS}, got {self.algorithm!r}")
        if not self.alphas:
            raise ValueError("alpha grid must be non-empty")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


def load_config(path) -> ExperimentConfig:
    """Read a config JSON, rejecting keys the schema does not define."""
    with open(path) as fh:
        raw = json.load(fh)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("alphas", "gamma1_multipliers", "gamma2_multipliers"):
        if key in raw:
            raw[key] = tuple(raw[key])
    return ExperimentConfig(**raw)


def initial_sample_size(N: int) -> int:
    """Starting batch size rule for the adaptive algorithm."""
    return min(32, math.ceil(N / 100))


def compute_G(problem: FiniteSumProblem, rng: np.random.Generator) -> float:
    """Average stochastic-gradient norm over one epoch of SG.

    SG runs with steplength 0.1 and batch size 64 (capped at N); the value
    calibrates the gamma grids to the dataset's gradient scale.
    """
    init_rng, batch_rng = rng.spawn(2)
    batch = min(64, problem.N)
    x0 = default_x0(problem, init_rng)
    _, records = run_sg(problem, x0, alpha=0.1, batch_size=batch,
                        budget_epochs=1.0, rng=batch_rng)
    return float(np.mean([rec.grad_norm for rec in records]))


def build_grid(G: float, alphas=DEFAULT_ALPHAS,
               gamma1_multipliers=DEFAULT_GAMMA1_MULTIPLIERS,
               gamma2_multipliers=DEFAULT_GAMMA2_MULTIPLIERS) -> list[tuple[float, float, float]]:
    """Cartesian parameter grid, alpha-major then gamma1 then gamma2.

    The default multipliers give the canonical 5 x 4 x 3 = 60 triplets
    (alpha, m1/G, m2/G).
    """
    if G <= 0:
        raise ValueError("G must be positive")
    return [(float(a), float(m1 / G), float(m2 / G))
            for a in alphas
            for m1 in gamma1_multipliers
            for m2 in gamma2_multipliers]


@dataclass
class GridCellResult:
    """Aggregated outcome of `reps` runs at one parameter triplet."""

    alpha: float
    gamma1: float
    gamma2: float
    algorithm: str
    mean_metric: float
    std_metric: float
    mean_final_batch: float
    case_fracs: tuple[float, float, float]
    curve_ege: np.ndarray
    curve_train_loss: np.ndarray
    curve_test_metric: np.ndarray

    @property
    def triplet(self) -> tuple[float, float, float]:
        return (self.alpha, self.gamma1, self.gamma2)


def _case_fractions(records) -> tuple[float, float, float]:
    cased = [rec.case for rec in records if rec.case is not None]
    if not cased:
        return (0.0, 0.0, 0.0)
    total = len(cased)
    return tuple(sum(1 for c in cased if c is case) / total
                 for case in (StepCase.CASE1, StepCase.CASE2, StepCase.CASE3))


def _metric_setup(config: ExperimentConfig, problem, test_features, test_labels):
    """Metric closure and its optimization direction for the model kind."""
    if config.model == "mlp_regressor":
        return (lambda x: testing_loss(problem, x, test_features, test_labels)), "min"
    return (lambda x: testing_accuracy(problem, x, test_features, test_labels)), "max"


def load_problem(config: ExperimentConfig):
    """Build the training problem and held-out arrays from the config paths."""
    if config.data_path is not None:
        with open(config.data_path) as fh:
            full = parse_libsvm(fh)
        X = np.asarray(full.features.todense(), dtype=np.float64)
        y = full.labels
        if config.normalize:
            both = minmax_normalize(np.column_stack([X, y]))
            X, y = both[:, :-1], both[:, -1]
        (X_train, y_train), (X_test, y_test) = chronological_split(
            X, y, config.train_fraction)
    elif config.train_path is not None and config.test_path is not None:
        with open(config.train_path) as fh:
            train = parse_libsvm(fh)
        with open(config.test_path) as fh:
            test = parse_libsvm(fh, n_features=train.n)
        n = max(train.n, test.n)
        if train.n < n:
            with open(config.train_path) as fh:
                train = parse_libsvm(fh, n_features=n)
        X_train, y_train = train.features, train.labels
        X_test, y_test = test.features, test.labels
        if config.normalize:
            dense = minmax_normalize(
                np.asarray(sp_vstack_dense(X_train, X_test), dtype=np.float64))
            X_train, X_test = dense[:train.N], dense[train.N:]
    else:
        raise ValueError("config needs data_path or train_path+test_path")

    if config.model == "logistic":
        problem = LogisticModel(X_train, y_train)
    elif config.model == "mlp_classifier":
        if config.positive_label is not None:
            y_train = (y_train == config.positive_label).astype(np.float64)
            y_test = (y_test == config.positive_label).astype(np.float64)
        problem = MlpModel.classifier(X_train, y_train)
    else:
        problem = MlpModel.regressor(_densify(X_train), y_train)
        X_test = _densify(X_test)
    return problem, X_test, y_test


def _densify(X) -> np.ndarray:
    return np.asarray(X.todense(), dtype=np.float64) if hasattr(X, "todense") \
        else np.asarray(X, dtype=np.float64)


def sp_vstack_dense(a, b) -> np.ndarray:
    return np.vstack([_densify(a), _densify(b)])


def _run_once(config, problem, params, algorithm, seed_seq, metric_fn):
    init_rng, batch_rng = (np.random.default_rng(s) for s in seed_seq.spawn(2))
    x0 = default_x0(problem, init_rng)
    if algorithm == "trish":
        batch = min(config.batch_size, problem.N)
        return run_trish(problem, x0, params, batch, config.budget_epochs,
                         batch_rng, track_loss=True, metric_fn=metric_fn)
    if algorithm == "sg":
        batch = min(config.batch_size, problem.N)
        return run_sg(problem, x0, params.alpha, batch, config.budget_epochs,
                      batch_rng, track_loss=True, metric_fn=metric_fn)
    s0 = config.s0 if config.s0 is not None else initial_sample_size(problem.N)
    return run_trish_as(problem, x0, params, s0, config.budget_epochs,
                        batch_rng, track_loss=True, metric_fn=metric_fn)


def _regrid_curves(rep_records):
    """Average per-rep curves on a shared EGE grid (linear interpolation)."""
    npoints = max(len(recs) for recs in rep_records)
    start = max(recs[0].ege for recs in rep_records)
    end = min(recs[-1].ege for recs in rep_records)
    grid = np.linspace(start, end, npoints)
    losses, metrics = [], []
    for recs in rep_records:
        ege = np.array([r.ege for r in recs])
        losses.append(np.interp(grid, ege, np.array([r.train_loss for r in recs])))
        metrics.append(np.interp(grid, ege, np.array([r.test_metric for r in recs])))
    return grid, np.mean(losses, axis=0), np.mean(metrics, axis=0)


def run_grid(config: ExperimentConfig, problem: FiniteSumProblem | None = None,
             test_features=None, test_labels=None,
             G: float | None = None) -> list[GridCellResult]:
    """Run the full parameter grid with `reps` seeded repetitions per cell.

    The problem and held-out data may be injected directly (bypassing file
    loading).  Per-run seeds derive from (algorithm, cell, rep), so results
    are reproducible and independent of execution order.  When
    `config.output_dir` is set, grid.csv and per-cell curve files are
    written there.
    """
    if problem is None:
        problem, test_features, test_labels = load_problem(config)
    metric_fn, _ = _metric_setup(config, problem, test_features, test_labels)

    if G is None:
        G = config.g_value
    if G is None:
        g_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(999,)))
        G = compute_G(problem, g_rng)
    grid = build_grid(G, config.alphas, config.gamma1_multipliers,
                      config.gamma2_multipliers)

    alg_code = _ALGORITHMS.index(config.algorithm)
    results = []
    for ci, (alpha, gamma1, gamma2) in enumerate(grid):
        params = HyperParams(alpha=alpha, gamma1=gamma1, gamma2=gamma2,
                             theta=config.theta, nu=config.nu, r=config.r,
                             avg_threshold=config.avg_threshold)
        finals, final_batches, fracs, rep_records = [], [], [], []
        for rep in range(config.reps):
            seq = np.random.SeedSequence(entropy=config.seed,
                                         spawn_key=(alg_code, ci, rep))
            _, records = _run_once(config, problem, params, config.algorithm,
                                   seq, metric_fn)
            finals.append(records[-1].test_metric)
            final_batches.append(records[-1].batch_size)
            fracs.append(_case_fractions(records))
            rep_records.append(records)
        curve_ege, curve_loss, curve_metric = _regrid_curves(rep_records)
        finals = np.array(finals)
        results.append(GridCellResult(
            alpha=alpha, gamma1=gamma1, gamma2=gamma2,
            algorithm=config.algorithm,
            mean_metric=float(finals.mean()),
            std_metric=float(finals.std(ddof=1)) if config.reps > 1 else 0.0,
            mean_final_batch=float(np.mean(final_batches)),
            case_fracs=tuple(float(np.mean([f[i] for f in fracs]))
                             for i in range(3)),
            curve_ege=curve_ege, curve_train_loss=curve_loss,
            curve_test_metric=curve_metric))

    if config.output_dir is not None:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_grid_csv(results, out / "grid.csv")
        write_curves(results, out / "curves")
    return results


def _fmt(value: float) -> str:
    return repr(float(value))


def write_grid_csv(results: list[GridCellResult], path) -> None:
    """One row per grid cell; floats in shortest round-trip form."""
    lines = [GRID_CSV_HEADER]
    for r in results:
        lines.append(",".join([
            _fmt(r.alpha), _fmt(r.gamma1), _fmt(r.gamma2), r.algorithm,
            _fmt(r.mean_metric), _fmt(r.std_metric), _fmt(r.mean_final_batch),
            _fmt(r.case_fracs[0]), _fmt(r.case_fracs[1]), _fmt(r.case_fracs[2])]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_curves(results: list[GridCellResult], directory) -> None:
    """EGE-indexed mean curves, one file per cell in grid order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for ci, r in enumerate(results):
        lines = [CURVE_CSV_HEADER]
        for e, l, m in zip(r.curve_ege, r.curve_train_loss, r.curve_test_metric):
            lines.append(f"{_fmt(e)},{_fmt(l)},{_fmt(m)}")
        (directory / f"{r.algorithm}_{ci:03d}.csv").write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class BestRow:
    """One comparison row: the triplet that was best for `selected_by`."""

    selected_by: str
    alpha: float
    gamma1: float
    gamma2: float
    trish_metric: float
    trish_as_metric: float
    trish_as_final_batch: float


def summarize_best(results: list[GridCellResult],
                   metric_direction: str = "max") -> list[BestRow]:
    """Two-row comparison at each algorithm's best triplet.

    Row one uses the triplet where the fixed-batch algorithm scored best,
    row two the triplet where the adaptive one did; each row reports both
    algorithms' metrics there plus the adaptive run's mean final batch size.
    Ties break to the earliest grid cell.
    """
    if metric_direction not in ("max", "min"):
        raise ValueError("metric_direction must be 'max' or 'min'")
    by_alg: dict[str, list[GridCellResult]] = {}
    for r in results:
        by_alg.setdefault(r.algorithm, []).append(r)
    if "trish" not in by_alg or "trish_as" not in by_alg:
        raise ValueError("need results for both trish and trish_as")
    pick = max if metric_direction == "max" else min
    lookup = {alg: {r.triplet: r for r in rows} for alg, rows in by_alg.items()}

    rows = []
    for alg in ("trish", "trish_as"):
        best = pick(by_alg[alg], key=lambda r: r.mean_metric)
        other = lookup["trish_as" if alg == "trish" else "trish"].get(best.triplet)
        if other is None:
            raise ValueError("the two algorithms ran different grids")
        as_cell = best if alg == "trish_as" else other
        trish_cell = best if alg == "trish" else other
        rows.append(BestRow(
            selected_by=alg, alpha=best.alpha, gamma1=best.gamma1,
            gamma2=best.gamma2, trish_metric=trish_cell.mean_metric,
            trish_as_metric=as_cell.mean_metric,
            trish_as_final_batch=as_cell.mean_final_batch))
    return rows
