"""Experiments that reproduce the bound, constant-lower-bound path, initialization and conv studies."""

import time
from typing import Callable, Iterable, List, Optional, Tuple

from loguru import logger

from relu_death import __version__
from relu_death.bounds import BoundPair, conv_bounds, lower_bound, min_width, upper_bound
from relu_death.errors import RejectedInputError
from relu_death.experiments.config import ExperimentConfig, ExperimentKind
from relu_death.experiments.results import ExperimentResult, ResultStore
from relu_death.init.seeding import SeedSpec
from relu_death.montecarlo.confidence import Estimate
from relu_death.montecarlo.estimators import (
    LivingScheme,
    estimate_alive_prob,
    estimate_conv_alive_prob,
    living_fraction_comparison,
)
from relu_death.montecarlo.variance import network_survey

Cell = Tuple[str, dict]
CellCallback = Callable[[dict], None]


def estimate_columns(estimate: Estimate) -> dict:
    return {
        "trials": estimate.trials,
        "alive": estimate.successes,
        "phat": estimate.p_hat,
        "ci_lo": estimate.ci_low,
        "ci_hi": estimate.ci_high,
    }


def run_cells(
    config: ExperimentConfig,
    cells: Iterable[Cell],
    compute: Callable[[dict, SeedSpec], dict],
    on_cell: Optional[CellCallback] = None,
) -> ExperimentResult:
    """
    Run every cell not already marked done, persisting after each one so an interrupted run resumes
    where it stopped. Cell `key` names the cell's seed stream, so reruns reproduce each row exactly.
    """
    config.validate()
    store = ResultStore(config)
    store.prepare(__version__)
    started = time.perf_counter()
    rows: List[dict] = []
    cells = list(cells)
    logger.info(f"{config.kind.value}: {len(cells)} cells, {config.trials} trials each, output in {store.root}")
    for key, params in cells:
        marker = store.load_cell(key)
        if marker is None:
            seed = SeedSpec(config.base_seed, f"{config.kind.value}/{key}")
            row = compute(params, seed)
            marker = store.save_cell(key, seed.describe(), row)
            logger.info(f"cell {key} done")
        else:
            logger.info(f"cell {key} already computed, skipping")
        row = marker["row"]
        store.record(key, marker)
        rows.append(row)
        store.write_table(rows)
        store.write_manifest()
        if on_cell is not None:
            on_cell(row)
    store.manifest["wall_clock_seconds"] = round(time.perf_counter() - started, 3)
    store.write_manifest(finished=True)
    return ExperimentResult(config, rows, store.manifest, store.csv_path, store.manifest_path)


def _require(config: ExperimentConfig, kind: ExperimentKind):
    if config.kind != kind:
        raise RejectedInputError(f"expected a {kind.value} config, got {config.kind.value}")


def run_grid(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    progress: bool = False,
    on_cell: Optional[CellCallback] = None,
) -> ExperimentResult:
    _require(config, ExperimentKind.GRID)
    scheme = config.init_scheme

    def compute(cell, seed):
        n, k = cell["n"], cell["k"]
        estimate = estimate_alive_prob(
            n, k, scheme, config.bias_mode, config.M, config.trials, seed,
            level=config.level, data_spec=config.data_spec, threads=threads, progress=progress,
        )
        bounds = BoundPair(lower_bound(n, k), upper_bound(n, k, config.bias_mode))
        return {"n": n, "k": k, **estimate_columns(estimate), "lower": bounds.lower, "upper": bounds.upper}

    cells = [(f"n={n}/k={k}", {"n": n, "k": k}) for n in config.n_values for k in config.k_values]
    return run_cells(config, cells, compute, on_cell)


def run_constant_lb_path(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    progress: bool = False,
    on_cell: Optional[CellCallback] = None,
) -> ExperimentResult:
    """Walk k = 1..k_max with the narrowest width n(k) whose lower bound reaches p."""
    _require(config, ExperimentKind.CONSTANT_LB_PATH)
    scheme = config.init_scheme

    def compute(cell, seed):
        n, k = cell["n"], cell["k"]
        survey = network_survey(
            n, k, scheme, config.bias_mode, config.M, config.trials, seed,
            level=config.level, threads=threads, progress=progress,
        )
        last = survey.variance.layers[-1]
        entering = sum(survey.events.entering)
        partial_deaths = sum(counts[1] for counts in survey.events.counts)
        return {
            "k": k,
            "n": n,
            **estimate_columns(survey.estimate),
            "lower": lower_bound(n, k),
            "upper": upper_bound(n, k, config.bias_mode),
            "normalized_variance": last.normalized,
            "sigma_partial_sum": last.partial_sigma_sum,
            "mean_sq_sigma": last.mean_sq_sigma,
            "e2_frequency": partial_deaths / entering if entering else 0.0,
        }

    cells = []
    for k in range(1, config.k_max + 1):
        n = min_width(config.p, k)
        cells.append((f"k={k}/n={n}", {"n": n, "k": k}))
    return run_cells(config, cells, compute, on_cell)


def run_init_comparison(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    progress: bool = False,
    on_cell: Optional[CellCallback] = None,
) -> ExperimentResult:
    _require(config, ExperimentKind.INIT_COMPARISON)
    scheme = config.init_scheme
    schemes = [LivingScheme.IID, LivingScheme.SIGN_FLIP, LivingScheme.BATCH_CENTER]

    def compute(cell, seed):
        n, k = cell["n"], cell["k"]
        iid, flip, center = living_fraction_comparison(
            n, k, schemes, config.M, config.trials, seed,
            init=scheme, bias_mode=config.bias_mode, threads=threads, progress=progress,
        )
        row = {"n": n, "k": k, "trials": config.trials}
        for prefix, stats in (("iid", iid), ("flip", flip), ("center", center)):
            row.update({
                f"{prefix}_mean": stats.mean,
                f"{prefix}_stderr": stats.stderr,
                f"{prefix}_min": stats.minimum,
                f"{prefix}_alive": stats.alive_rate,
            })
        row["lower"] = lower_bound(n, k)
        row["floor"] = (config.M >> k) / config.M
        row["flip_degenerate"] = flip.degenerate_trials
        return row

    cells = [(f"n={n}/k={k}", {"n": n, "k": k}) for n in config.n_values for k in config.k_values]
    return run_cells(config, cells, compute, on_cell)


def run_conv_grid(
    config: ExperimentConfig,
    threads: Optional[int] = None,
    progress: bool = False,
    on_cell: Optional[CellCallback] = None,
) -> ExperimentResult:
    _require(config, ExperimentKind.CONV_GRID)
    scheme = config.init_scheme

    def compute(cell, seed):
        channels, kernel, k = cell["channels"], cell["kernel"], cell["k"]
        estimate = estimate_conv_alive_prob(
            channels, kernel, config.side, k, scheme, config.bias_mode, config.M, config.trials, seed,
            level=config.level, threads=threads, progress=progress,
        )
        bounds = conv_bounds(channels, kernel, k)
        return {
            "channels": channels,
            "kernel": kernel,
            "side": config.side,
            "k": k,
            **estimate_columns(estimate),
            "lower": bounds.lower,
            "upper": bounds.upper,
        }

    cells = [
        (f"N={channels}/M={kernel}/k={k}", {"channels": channels, "kernel": kernel, "k": k})
        for channels in config.channels
        for kernel in config.kernels
        for k in config.k_values
    ]
    return run_cells(config, cells, compute, on_cell)


RUNNERS = {
    ExperimentKind.GRID: run_grid,
    ExperimentKind.CONSTANT_LB_PATH: run_constant_lb_path,
    ExperimentKind.INIT_COMPARISON: run_init_comparison,
    ExperimentKind.CONV_GRID: run_conv_grid,
}


def run_experiment(config: ExperimentConfig, **kwargs) -> ExperimentResult:
    return RUNNERS[config.kind](config, **kwargs)
