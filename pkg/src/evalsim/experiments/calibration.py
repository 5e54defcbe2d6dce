"""Calibration of the local-quantile binner as the pool grows.

A single binning evaluator sees all ``n`` applicants of a pool, ranks them
on one attribute, and reports quantile bins.  The miscalibration of a run is
the mean absolute gap between those local bins and the population bins of
the true percentiles.  The sweep estimates this error for a range of pool
sizes and fits the log-log decay slope (close to -1/2: local ranks converge
to percentiles at the usual root-n rate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import STREAM_CALIBRATION
from .kernels import calibration_worker
from .parallel import mean_and_se, run_points
from .results import ExperimentResult

CALIBRATION_CHUNK = 4096
DEFAULT_POOL_SIZES = (5, 10, 20, 50, 100, 200, 500, 1000)
DEFAULT_MARGINAL = ("power_law", {"delta": 1.0})


@dataclass(frozen=True)
class CalibrationSweep:
    """Per-size error estimates plus the fitted log-log decay slope."""

    results: tuple
    loglog_slope: float


def run_calibration_sweep(
    n_values=DEFAULT_POOL_SIZES,
    num_bins: int = 5,
    runs: int = 1000,
    marginal_spec=DEFAULT_MARGINAL,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = CALIBRATION_CHUNK,
) -> CalibrationSweep:
    n_values = tuple(int(n) for n in n_values)
    if len(n_values) < 2:
        raise ValueError("need at least two pool sizes to fit a slope")
    if any(n < 2 for n in n_values):
        raise ValueError("pool sizes must be at least 2")
    if num_bins < 2:
        raise ValueError("num_bins must be at least 2")
    if any(n < num_bins for n in n_values):
        raise ValueError("every pool size must be at least num_bins")

    points = [
        {"n": n, "num_bins": num_bins, "marginal": marginal_spec}
        for n in n_values
    ]
    sums = run_points(
        calibration_worker,
        points,
        runs,
        seed,
        STREAM_CALIBRATION,
        chunk_size,
        workers,
    )

    results = []
    for n, acc in zip(n_values, sums):
        mean, se = mean_and_se(acc["sum"], acc["sumsq"], int(acc["count"]))
        results.append(
            ExperimentResult(
                params={"n": n},
                scheme="binner",
                estimate=mean,
                std_error=se,
                runs=runs,
                seed=seed,
            )
        )

    means = np.array([r.estimate for r in results])
    slope = float(np.polyfit(np.log(n_values), np.log(means), 1)[0])
    return CalibrationSweep(results=tuple(results), loglog_slope=slope)
