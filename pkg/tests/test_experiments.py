"""Experiment plumbing: chunked reduction, grids, result tables, drivers."""

import json

import numpy as np
import pytest

from evalsim.experiments.bias import run_bias_grid
from evalsim.experiments.calibration import run_calibration_sweep
from evalsim.experiments.efficiency import run_efficiency_sweep
from evalsim.experiments.kernels import calibration_worker, efficiency_cells
from evalsim.experiments.parallel import chunk_sizes, mean_and_se, run_points
from evalsim.experiments.results import (
    ExperimentResult,
    GridSpec,
    write_metadata_json,
    write_results_csv,
)

CAL_POINT = {"n": 10, "num_bins": 5, "marginal": ("power_law", {"delta": 1.0})}


# ---------------------------------------------------------------------------
# chunked map-reduce


def test_chunk_sizes_cover_the_runs():
    assert chunk_sizes(10, 4) == [4, 4, 2]
    assert chunk_sizes(8, 4) == [4, 4]
    assert chunk_sizes(3, 100) == [3]
    with pytest.raises(ValueError):
        chunk_sizes(0, 4)
    with pytest.raises(ValueError):
        chunk_sizes(4, 0)


def test_mean_and_se_matches_numpy():
    rng = np.random.default_rng(3)
    x = rng.random(100)
    mean, se = mean_and_se(float(x.sum()), float((x * x).sum()), x.size)
    assert mean == pytest.approx(x.mean(), abs=1e-12)
    assert se == pytest.approx(x.std(ddof=1) / np.sqrt(x.size), abs=1e-12)
    assert mean_and_se(2.5, 6.25, 1) == (2.5, 0.0)


def test_run_points_is_worker_count_invariant():
    points = [CAL_POINT, {**CAL_POINT, "n": 20}]
    serial = run_points(calibration_worker, points, 300, 9, (7, 3), chunk_size=64)
    pooled = run_points(
        calibration_worker, points, 300, 9, (7, 3), chunk_size=64, workers=2
    )
    assert serial == pooled
    assert [s["count"] for s in serial] == [300.0, 300.0]


def test_run_points_layout_is_part_of_the_stream():
    args = (calibration_worker, [CAL_POINT], 256, 9)
    base = run_points(*args, (7, 3), chunk_size=64)
    assert run_points(*args, (7, 3), chunk_size=64) == base
    # a different tag, seed, or chunk grouping draws different numbers
    assert run_points(*args, (7, 4), chunk_size=64) != base
    assert run_points(calibration_worker, [CAL_POINT], 256, 10, (7, 3), chunk_size=64) != base
    assert run_points(*args, (7, 3), chunk_size=128) != base
    with pytest.raises(ValueError):
        run_points(*args, (7, 3), workers=0)


# ---------------------------------------------------------------------------
# grids and result rows


def test_grid_points_are_row_major():
    grid = GridSpec(axes=(("delta", (0.5, 1.0)), ("sigma", (0.0, 0.9))), fixed={"n": 4})
    assert grid.axis_names == ("delta", "sigma")
    assert grid.points() == [
        {"n": 4, "delta": 0.5, "sigma": 0.0},
        {"n": 4, "delta": 0.5, "sigma": 0.9},
        {"n": 4, "delta": 1.0, "sigma": 0.0},
        {"n": 4, "delta": 1.0, "sigma": 0.9},
    ]


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(axes=())
    with pytest.raises(ValueError):
        GridSpec(axes=(("voltage", (1.0,)),))
    with pytest.raises(ValueError):
        GridSpec(axes=(("delta", (1.0,)), ("delta", (2.0,))))
    with pytest.raises(ValueError):
        GridSpec(axes=(("delta", ()),))
    with pytest.raises(ValueError):
        GridSpec(axes=(("delta", (1.0,)),), fixed={"delta": 2.0})
    with pytest.raises(ValueError):
        GridSpec(axes=(("delta", (1.0,)),), fixed={"flux": 1})
    with pytest.raises(ValueError):
        GridSpec(axes=(("delta", (1.0,)),), runs=0)


def test_grid_json_dict():
    grid = GridSpec(axes=(("delta", (0.5,)),), fixed={"n": 4}, runs=100)
    assert grid.to_json_dict() == {
        "axes": [["delta", [0.5]]],
        "fixed": {"n": 4},
        "runs": 100,
    }


def test_result_row_validation():
    row = ExperimentResult({"n": 4}, "holistic", 0.5, 0.01, 100, 0)
    assert row.estimate == 0.5
    with pytest.raises(ValueError):
        ExperimentResult({"volume": 4}, "holistic", 0.5, 0.01, 100, 0)
    with pytest.raises(ValueError):
        ExperimentResult({"n": 4}, "holistic", 0.5, 0.01, 0, 0)
    with pytest.raises(ValueError):
        ExperimentResult({"n": 4}, "holistic", 0.5, -0.01, 100, 0)


def test_results_csv_golden(tmp_path):
    rows = [
        ExperimentResult({"tau": 0.1, "sigma": 1.0}, "holistic", 1.0, 0.0, 10, 3),
        ExperimentResult({"tau": 0.1, "sigma": 1.0}, "workload", 24.0, 0.0, 10, 3),
    ]
    path = tmp_path / "table.csv"
    write_results_csv(rows, ["tau", "sigma"], path)
    assert path.read_text() == (
        "tau,sigma,scheme,estimate,std_error,runs,seed\n"
        "0.1,1.0,holistic,1.0,0.0,10,3\n"
        "0.1,1.0,workload,24.0,0.0,10,3\n"
    )


def test_metadata_json_round_trip(tmp_path):
    grid = GridSpec(axes=(("delta", (0.5, 1.0)),), fixed={"n": 4}, runs=10)
    path = tmp_path / "meta.json"
    write_metadata_json(path, "bias-grid", 3, {"runs": "10"}, "1.0", grid=grid)
    payload = json.loads(path.read_text())
    assert payload == {
        "experiment": "bias-grid",
        "seed": 3,
        "version": "1.0",
        "config": {"runs": "10"},
        "grid": {"axes": [["delta", [0.5, 1.0]]], "fixed": {"n": 4}, "runs": 10},
    }

    bare = tmp_path / "bare.json"
    write_metadata_json(bare, "calibration", 3, {}, "1.0")
    assert "grid" not in json.loads(bare.read_text())


# ---------------------------------------------------------------------------
# calibration driver


def test_calibration_sweep_shrinks_with_pool_size():
    sweep = run_calibration_sweep(n_values=(5, 50), runs=400, seed=9)
    assert [r.params["n"] for r in sweep.results] == [5, 50]
    assert sweep.results[0].estimate > sweep.results[1].estimate
    assert sweep.loglog_slope < 0
    assert all(r.scheme == "binner" and r.runs == 400 for r in sweep.results)


def test_calibration_sweep_validation():
    with pytest.raises(ValueError):
        run_calibration_sweep(n_values=(50,), runs=10)
    with pytest.raises(ValueError):
        run_calibration_sweep(n_values=(3, 50), num_bins=5, runs=10)
    with pytest.raises(ValueError):
        run_calibration_sweep(n_values=(5, 50), num_bins=1, runs=10)
    with pytest.raises(ValueError):
        run_calibration_sweep(n_values=(5, 50), runs=0)


# ---------------------------------------------------------------------------
# efficiency driver


def test_efficiency_sweep_rows_and_workload():
    rows = run_efficiency_sweep((0.1, 1.0), (0.0, 1.0), n=20, runs=64, seed=9)
    assert len(rows) == 8
    # row-major over (tau, sigma), two schemes per point
    assert [(r.params["tau"], r.params["sigma"], r.scheme) for r in rows[:4]] == [
        (0.1, 0.0, "holistic"),
        (0.1, 0.0, "workload"),
        (0.1, 1.0, "holistic"),
        (0.1, 1.0, "workload"),
    ]
    workloads = {r.params["tau"]: r.estimate for r in rows if r.scheme == "workload"}
    assert workloads == {0.1: float(efficiency_cells(20, 0.1)), 1.0: 40.0}
    assert all(r.std_error == 0.0 for r in rows if r.scheme == "workload")

    # perfectly correlated attributes: screening cannot lose the best
    perfect = [r for r in rows if r.scheme == "holistic" and r.params["sigma"] == 1.0]
    assert all(r.estimate == 1.0 and r.std_error == 0.0 for r in perfect)


def test_efficiency_sweep_validation():
    with pytest.raises(ValueError):
        run_efficiency_sweep((0.1,), (0.5,), n=9, runs=10)
    with pytest.raises(ValueError):
        run_efficiency_sweep((0.0,), (0.5,), n=10, runs=10)
    with pytest.raises(ValueError):
        run_efficiency_sweep((0.1,), (1.5,), n=10, runs=10)


# ---------------------------------------------------------------------------
# bias-grid driver


def _small_grid(**kwargs):
    return GridSpec(
        axes=(("delta", (0.5, 1.0)), ("sigma", (0.0, 0.9))),
        fixed={"n": 4, "d": 4},
        **kwargs,
    )


def test_bias_grid_rows_are_paired():
    rows = run_bias_grid(_small_grid(), seed=9, runs=512)
    assert len(rows) == 12
    by_point = {}
    for row in rows:
        key = (row.params["delta"], row.params["sigma"])
        by_point.setdefault(key, {})[row.scheme] = row
    for point, schemes in by_point.items():
        assert set(schemes) == {"holistic", "segmented", "difference"}
        gap = schemes["segmented"].estimate - schemes["holistic"].estimate
        assert schemes["difference"].estimate == pytest.approx(gap, abs=1e-12)


def test_bias_grid_reproduces_and_honors_grid_runs():
    rows = run_bias_grid(_small_grid(runs=256), seed=9, runs=999_999)
    assert all(r.runs == 256 for r in rows)
    again = run_bias_grid(_small_grid(runs=256), seed=9)
    assert rows == again
    shifted = run_bias_grid(_small_grid(runs=256), seed=10)
    assert rows != shifted


def test_bias_grid_worker_count_invariance():
    one = run_bias_grid(_small_grid(runs=256), seed=9, chunk_size=64, workers=1)
    two = run_bias_grid(_small_grid(runs=256), seed=9, chunk_size=64, workers=2)
    assert one == two


def test_bias_grid_coin_mode_needs_gamma():
    grid = GridSpec(
        axes=(("delta", (1.0,)), ("sigma", (0.5,))),
        fixed={"n": 4, "d": 4, "gamma": 0.5},
        runs=64,
    )
    rows = run_bias_grid(grid, seed=9, coin_mode=True)
    assert len(rows) == 3

    bare = GridSpec(axes=(("delta", (1.0,)), ("sigma", (0.5,))), fixed={"n": 4, "d": 4})
    with pytest.raises(ValueError):
        run_bias_grid(bare, seed=9, runs=64, coin_mode=True)


def test_bias_grid_validation():
    with pytest.raises(ValueError):
        run_bias_grid(GridSpec(axes=(("sigma", (0.5,)),)), seed=9, runs=64)
    no_delta = GridSpec(axes=(("sigma", (0.5,)), ("beta", (0.0,))), fixed={"n": 4, "d": 4})
    with pytest.raises(ValueError):
        run_bias_grid(no_delta, seed=9, runs=64)
    rows = run_bias_grid(no_delta, seed=9, runs=64, require_delta_axis=False)
    assert len(rows) == 3
    three = GridSpec(
        axes=(("delta", (1.0,)), ("sigma", (0.5,))),
        fixed={"n": 4, "d": 4, "evaluators": 3},
    )
    with pytest.raises(ValueError):
        run_bias_grid(three, seed=9, runs=64)
