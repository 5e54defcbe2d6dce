"""Vectorized kernels must reproduce the object layer bit for bit.

Every scoring core is driven twice on identical inputs: once directly and
once through build-a-pool / report / merge / top1_accuracy.  Agreement is
asserted with exact float equality, not tolerances — the kernels are written
to evaluate the same expressions in the same order.  Committee sizes use a
power-of-two number of attributes so ranking by row sum and by row mean are
exactly interchangeable.
"""

import numpy as np
import pytest

from evalsim.distributions import PowerLaw
from evalsim.evaluators import (
    EvaluatorProfile,
    merge_scores,
    report,
    report_screened,
)
from evalsim.experiments.kernels import (
    bias_scheme_accuracies,
    calibration_worker,
    draw_bias_batch,
    draw_correlated_values,
    draw_efficiency_batch,
    draw_theorem_batch,
    efficiency_accuracies,
    efficiency_cells,
    efficiency_worker,
    marginal_from_spec,
    random_subset_mask,
    theorem_error_pairs,
    theorem_worker,
)
from evalsim.evaluators import local_quantile_bins, screening_cutoff
from evalsim.metrics import mean_bin_error, top1_accuracy
from evalsim.population import AttributeMatrix
from evalsim.rng import derive_stream

POWER_LAW = ("power_law", {"delta": 1.0})


def _no_groups(n, d):
    return np.zeros(n, dtype=bool), np.zeros(d, dtype=bool)


# ---------------------------------------------------------------------------
# shared helpers


def test_marginal_from_spec_round_trip():
    law = marginal_from_spec(POWER_LAW)
    assert isinstance(law, PowerLaw) and law.delta == 1.0
    tn = marginal_from_spec(("truncated_normal", {"mean": 0.0, "scale": 1.0, "low": -1.0, "high": 2.0}))
    assert tn.low == -1.0
    with pytest.raises(ValueError):
        marginal_from_spec(("cauchy", {}))


def test_random_subset_mask_sizes_and_edges():
    rng = derive_stream(41, 8)
    mask = random_subset_mask(rng, 500, 7, 3)
    assert mask.shape == (500, 7)
    assert np.all(mask.sum(axis=1) == 3)
    assert not random_subset_mask(rng, 4, 5, 0).any()
    assert random_subset_mask(rng, 4, 5, 5).all()
    with pytest.raises(ValueError):
        random_subset_mask(rng, 4, 5, 6)
    with pytest.raises(ValueError):
        random_subset_mask(rng, 4, 5, -1)


def test_random_subset_mask_is_uniform():
    rng = derive_stream(42, 8)
    batch = 20_000
    mask = random_subset_mask(rng, batch, 5, 2)
    # each element is included with probability 2/5
    freq = mask.mean(axis=0)
    se = np.sqrt(0.4 * 0.6 / batch)
    assert np.all(np.abs(freq - 0.4) <= 4.0 * se)
    # and each of the C(5, 2) = 10 subsets appears equally often
    codes = (mask * (1 << np.arange(5))).sum(axis=1)
    _, counts = np.unique(codes, return_counts=True)
    assert counts.size == 10
    se_subset = np.sqrt(0.1 * 0.9 / batch)
    assert np.all(np.abs(counts / batch - 0.1) <= 4.0 * se_subset)


def test_draw_correlated_values_full_correlation_is_exact():
    rng = derive_stream(43, 8)
    values = draw_correlated_values(rng, 10, 6, 3, 1.0, PowerLaw(0.5))
    assert values.shape == (10, 6, 3)
    assert np.all(values == values[:, :, :1])
    assert np.all(values >= 1.0)


# ---------------------------------------------------------------------------
# calibration kernel


def test_calibration_worker_matches_object_route():
    params = {"n": 7, "num_bins": 5, "marginal": POWER_LAW}
    out = calibration_worker(params, derive_stream(44, 8), 200)

    marginal = PowerLaw(1.0)
    x = marginal.sample(derive_stream(44, 8), (200, 7))
    errors = np.array(
        [mean_bin_error(local_quantile_bins(row, 5), marginal.cdf(row), 5) for row in x]
    )
    assert out["count"] == 200.0
    assert out["sum"] == errors.sum()
    assert out["sumsq"] == (errors * errors).sum()


# ---------------------------------------------------------------------------
# screening-efficiency kernel


def _efficiency_object_route(values, rows0, tau):
    batch, n, _ = values.shape
    cols = np.array([0, 1])
    acc = np.empty(batch)
    for b in range(batch):
        pool = AttributeMatrix(values[b], *_no_groups(n, 2))
        parts = [
            report_screened(np.flatnonzero(rows0[b]), cols, pool, tau),
            report_screened(np.flatnonzero(~rows0[b]), cols, pool, tau),
        ]
        acc[b] = top1_accuracy(merge_scores(parts), pool)
    return acc


@pytest.mark.parametrize("tau", [0.25, 0.5, 1.0])
def test_efficiency_kernel_matches_object_route(tau):
    rng = derive_stream(45, 8)
    values, rows0 = draw_efficiency_batch(rng, 64, 8, 0.5, PowerLaw(1.0))
    fast = efficiency_accuracies(values, rows0, tau)
    slow = _efficiency_object_route(values, rows0, tau)
    assert np.array_equal(fast, slow)


def test_efficiency_cells_counts_reports():
    assert efficiency_cells(20, 0.1) == 20 + 2 * screening_cutoff(0.1, 10)
    assert efficiency_cells(20, 1.0) == 40


def test_efficiency_worker_full_budget_is_perfect():
    params = {"n": 10, "sigma": 0.3, "tau": 1.0, "marginal": POWER_LAW}
    out = efficiency_worker(params, derive_stream(46, 8), 300)
    # tau = 1 screens nobody: the committee sees everything and cannot miss
    assert out["sum"] == 300.0
    assert out["sumsq"] == 300.0
    with pytest.raises(ValueError):
        efficiency_worker({**params, "n": 9}, derive_stream(46, 8), 10)


# ---------------------------------------------------------------------------
# bias-grid kernel


def _bias_object_route(batch_arrays, beta):
    values, disadvantaged, protected, hol_rows0, seg_cols0, coin0, coin1 = batch_arrays
    batch, n, d = values.shape
    all_rows = np.arange(n)
    all_cols = np.arange(d)
    acc_h = np.empty(batch)
    acc_s = np.empty(batch)
    for b in range(batch):
        pool = AttributeMatrix(values[b], disadvantaged[b], protected[b])
        profiles = [
            EvaluatorProfile("biased", beta=beta, is_biased=bool(coin0[b])),
            EvaluatorProfile("biased", beta=beta, is_biased=bool(coin1[b])),
        ]
        hol = merge_scores(
            [
                report(profiles[0], np.flatnonzero(hol_rows0[b]), all_cols, pool),
                report(profiles[1], np.flatnonzero(~hol_rows0[b]), all_cols, pool),
            ]
        )
        seg = merge_scores(
            [
                report(profiles[0], all_rows, np.flatnonzero(seg_cols0[b]), pool),
                report(profiles[1], all_rows, np.flatnonzero(~seg_cols0[b]), pool),
            ]
        )
        acc_h[b] = top1_accuracy(hol, pool)
        acc_s[b] = top1_accuracy(seg, pool)
    return acc_h, acc_s


@pytest.mark.parametrize("beta", [0.0, 0.3])
@pytest.mark.parametrize("gamma", [None, 0.5])
def test_bias_kernel_matches_object_route(beta, gamma):
    rng = derive_stream(47, 8)
    batch_arrays = draw_bias_batch(rng, 48, 6, 4, 0.5, 0.5, 0.5, PowerLaw(1.0), gamma)
    fast_h, fast_s = bias_scheme_accuracies(*batch_arrays, beta)
    slow_h, slow_s = _bias_object_route(batch_arrays, beta)
    assert np.array_equal(fast_h, slow_h)
    assert np.array_equal(fast_s, slow_s)


def test_bias_batch_fixed_committee_and_validation():
    rng = derive_stream(48, 8)
    out = draw_bias_batch(rng, 16, 4, 2, 0.0, 0.5, 0.5, PowerLaw(1.0), None)
    coin0, coin1 = out[5], out[6]
    assert coin0.all() and not coin1.any()
    with pytest.raises(ValueError):
        draw_bias_batch(rng, 4, 5, 2, 0.0, 0.5, 0.5, PowerLaw(1.0), None)
    with pytest.raises(ValueError):
        draw_bias_batch(rng, 4, 4, 3, 0.0, 0.5, 0.5, PowerLaw(1.0), None)


# ---------------------------------------------------------------------------
# theorem kernel


def _theorem_object_route(batch_arrays, beta):
    values, disadvantaged, protected2, hol_rows0, seg_first, coin0, coin1 = batch_arrays
    batch, n = values.shape
    all_rows = np.arange(n)
    err_h = np.empty(batch)
    err_s = np.empty(batch)
    for b in range(batch):
        two_col = np.repeat(values[b][:, None], 2, axis=1)
        pool = AttributeMatrix(two_col, disadvantaged[b], protected2[b])
        profiles = [
            EvaluatorProfile("biased", beta=beta, is_biased=bool(coin0[b])),
            EvaluatorProfile("biased", beta=beta, is_biased=bool(coin1[b])),
        ]
        hol = merge_scores(
            [
                report(profiles[0], np.flatnonzero(hol_rows0[b]), np.array([0, 1]), pool),
                report(profiles[1], np.flatnonzero(~hol_rows0[b]), np.array([0, 1]), pool),
            ]
        )
        first_owner, second_owner = (0, 1) if seg_first[b] else (1, 0)
        seg = merge_scores(
            [
                report(profiles[first_owner], all_rows, np.array([0]), pool),
                report(profiles[second_owner], all_rows, np.array([1]), pool),
            ]
        )
        err_h[b] = 1.0 - top1_accuracy(hol, pool)
        err_s[b] = 1.0 - top1_accuracy(seg, pool)
    return err_h, err_s


@pytest.mark.parametrize("beta", [0.0, 0.25])
@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_theorem_kernel_matches_object_route(beta, lam):
    rng = derive_stream(49, 8)
    batch_arrays = draw_theorem_batch(rng, 64, 4, 1.0, 0.5, lam, 0.5)
    fast_h, fast_s, best_is_dis = theorem_error_pairs(*batch_arrays, beta)
    slow_h, slow_s = _theorem_object_route(batch_arrays, beta)
    assert np.array_equal(fast_h, slow_h)
    assert np.array_equal(fast_s, slow_s)

    values, disadvantaged = batch_arrays[0], batch_arrays[1]
    best = values.argmax(axis=1)
    assert np.array_equal(best_is_dis, disadvantaged[np.arange(64), best])


def test_theorem_errors_only_hit_disadvantaged_bests():
    # discounts only lower scores, so an advantaged best applicant never loses
    rng = derive_stream(50, 8)
    batch_arrays = draw_theorem_batch(rng, 512, 6, 0.5, 0.5, 1.0, 0.5)
    err_h, err_s, best_is_dis = theorem_error_pairs(*batch_arrays, 0.0)
    assert np.all(err_h[~best_is_dis] == 0.0)
    assert np.all(err_s[~best_is_dis] == 0.0)


def test_theorem_worker_sums_are_consistent():
    params = {"n": 4, "delta": 1.0, "lambda": 1.0, "gamma": 0.5, "beta": 0.0}
    out = theorem_worker(params, derive_stream(51, 8), 400)
    assert out["count"] == 400.0
    assert 0.0 <= out["sum_hol"] <= 400.0
    assert 0.0 <= out["sum_seg"] <= 400.0
    assert out["sum_diff"] == pytest.approx(out["sum_hol"] - out["sum_seg"], abs=1e-9)
    # errors can strike only disadvantaged bests, so the conditional sums match
    assert out["sum_hol_dis"] == out["sum_hol"]
    assert out["sum_seg_dis"] == out["sum_seg"]
    with pytest.raises(ValueError):
        draw_theorem_batch(derive_stream(51, 8), 8, 5, 1.0, 0.5, 1.0, 0.5)
