"""Vectorized Monte Carlo kernels behind the experiment drivers.

Each kernel separates drawing from scoring.  ``draw_*`` helpers consume a
Generator and return batched input arrays; the scoring cores are pure
functions of those explicit arrays.  The cores reproduce, run for run and
bit for bit, what the object layer (build_pool, allocate_*, report,
top1_accuracy) computes, and the test suite drives both routes on identical
inputs and requires exact agreement.  Reported values are assembled with the
same ``where(discounted, beta * x, x)`` expression and summed along the same
axis as the object layer precisely so that equality is exact rather than
approximate.

Sweeps run millions of pools on one core, so everything is vectorized over
the batch axis, and the chunked runner keeps per-chunk memory modest.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from ..distributions import PowerLaw, TruncatedNormal, _U_BELOW_ONE, power_law_inv_cdf
from ..evaluators import screening_cutoff
from ..metrics import percentile_bin
from ..population import round_half_up


def marginal_from_spec(spec):
    """Build a marginal from a picklable ``(kind, kwargs)`` pair.

    Workers may run in separate processes, so experiment parameter dicts
    carry this serializable form instead of distribution objects.
    """
    kind, kwargs = spec
    if kind == "power_law":
        return PowerLaw(**kwargs)
    if kind == "truncated_normal":
        return TruncatedNormal(**kwargs)
    raise ValueError(f"unknown marginal kind {kind!r}")


def random_subset_mask(
    rng: np.random.Generator, batch: int, total: int, k: int
) -> np.ndarray:
    """Batched uniform random k-subsets of ``range(total)`` as bool masks."""
    if not 0 <= k <= total:
        raise ValueError("k must lie in [0, total]")
    mask = np.zeros((batch, total), dtype=bool)
    if k == 0:
        return mask
    if k == total:
        mask[:] = True
        return mask
    u = rng.random((batch, total))
    idx = np.argpartition(u, k - 1, axis=1)[:, :k]
    np.put_along_axis(mask, idx, True, axis=1)
    return mask


def draw_correlated_values(
    rng: np.random.Generator, batch: int, n: int, d: int, sigma: float, marginal
) -> np.ndarray:
    """Batched version of the one-factor copula sampler: ``(batch, n, d)``."""
    common = rng.standard_normal((batch, n))
    noise = rng.standard_normal((batch, n, d))
    z = math.sqrt(sigma) * common[..., None] + math.sqrt(1.0 - sigma) * noise
    u = np.minimum(ndtr(z), _U_BELOW_ONE)
    return marginal.inv_cdf(u)


def _tie_adjusted_hits(estimates: np.ndarray, best: np.ndarray) -> np.ndarray:
    """Per-run probability that a uniform top pick lands on ``best``.

    ``estimates`` may contain -inf for ineligible applicants; each row is
    guaranteed at least one finite entry by the callers.
    """
    top = estimates.max(axis=1)
    ties = (estimates == top[:, None]).sum(axis=1)
    hit = estimates[np.arange(estimates.shape[0]), best] == top
    return hit / ties


# ---------------------------------------------------------------------------
# calibration: local quantile bins versus population bins


def calibration_worker(params: dict, rng: np.random.Generator, size: int) -> dict:
    n = int(params["n"])
    num_bins = int(params["num_bins"])
    marginal = marginal_from_spec(params["marginal"])

    x = marginal.sample(rng, (size, n))
    ranks = np.argsort(np.argsort(x, axis=1, kind="stable"), axis=1) + 1
    local = -(-num_bins * ranks // n)
    truth = percentile_bin(marginal.cdf(x), num_bins)
    err = np.abs(local - truth).mean(axis=1)
    return {
        "sum": float(err.sum()),
        "sumsq": float((err * err).sum()),
        "count": float(size),
    }


# ---------------------------------------------------------------------------
# screening efficiency: two holistic screeners, two attributes


def efficiency_accuracies(
    values: np.ndarray, rows0: np.ndarray, tau: float
) -> np.ndarray:
    """Top-choice accuracy per run for the two-screener committee.

    ``values`` is ``(batch, n, 2)``; ``rows0`` marks the n/2 applicants owned
    by evaluator 0.  Each evaluator ranks its half by the first attribute and
    evaluates the second only for its top ``ceil(tau * n/2)``; an applicant
    missing the second attribute is ineligible for the top pick.
    """
    batch, n, _ = values.shape
    k = screening_cutoff(tau, n // 2)
    first = values[:, :, 0]
    total = values[:, :, 0] + values[:, :, 1]

    surviving = np.zeros((batch, n), dtype=bool)
    for mask in (rows0, ~rows0):
        blocked = np.where(mask, first, -np.inf)
        # ascending sort of the negated values: highest first attribute
        # first, stable so ties go to the lower applicant index.
        order = np.argsort(-blocked, axis=1, kind="stable")
        np.put_along_axis(surviving, order[:, :k], True, axis=1)

    best = np.argmax(total, axis=1)
    est = np.where(surviving, total, -np.inf)
    return _tie_adjusted_hits(est, best)


def efficiency_cells(n: int, tau: float) -> int:
    """Cells evaluated per run: every first attribute plus screened seconds."""
    return n + 2 * screening_cutoff(tau, n // 2)


def draw_efficiency_batch(
    rng: np.random.Generator, size: int, n: int, sigma: float, marginal
):
    """Draw pools (redrawing any run whose true best is tied) and ownership."""
    values = draw_correlated_values(rng, size, n, 2, sigma, marginal)
    while True:
        total = values[:, :, 0] + values[:, :, 1]
        top = total.max(axis=1)
        bad = (total == top[:, None]).sum(axis=1) > 1
        if not bad.any():
            break
        values[bad] = draw_correlated_values(
            rng, int(bad.sum()), n, 2, sigma, marginal
        )
    rows0 = random_subset_mask(rng, size, n, n // 2)
    return values, rows0


def efficiency_worker(params: dict, rng: np.random.Generator, size: int) -> dict:
    n = int(params["n"])
    sigma = float(params["sigma"])
    tau = float(params["tau"])
    marginal = marginal_from_spec(params["marginal"])
    if n % 2:
        raise ValueError("the two-screener committee needs an even pool")

    values, rows0 = draw_efficiency_batch(rng, size, n, sigma, marginal)
    acc = efficiency_accuracies(values, rows0, tau)
    return {
        "sum": float(acc.sum()),
        "sumsq": float((acc * acc).sum()),
        "count": float(size),
    }


# ---------------------------------------------------------------------------
# bias grids: holistic versus segmented committees of two, shared pools


def bias_scheme_accuracies(
    values: np.ndarray,
    disadvantaged: np.ndarray,
    protected: np.ndarray,
    hol_rows0: np.ndarray,
    seg_cols0: np.ndarray,
    coin0: np.ndarray,
    coin1: np.ndarray,
    beta: float,
):
    """Paired top-choice accuracies ``(holistic, segmented)`` per run.

    Shapes: ``values (B, n, d)``, ``disadvantaged (B, n)``, ``protected
    (B, d)``, ``hol_rows0 (B, n)`` and ``seg_cols0 (B, d)`` mark evaluator
    0's share under each scheme, ``coin0`` and ``coin1`` are the realized
    bias coins.  Both schemes score the same pools (common random numbers),
    so the per-run difference is a low-variance paired estimate.
    """
    batch, n, d = values.shape
    total = values.sum(axis=2)
    best = np.argmax(total, axis=1)

    # holistic: a row's owner reports every attribute of that row
    row_coin = np.where(hol_rows0, coin0[:, None], coin1[:, None])
    hit_h = (
        (disadvantaged & row_coin)[:, :, None] & protected[:, None, :]
    )
    est_h = np.where(hit_h, beta * values, values).sum(axis=2)

    # segmented: a column's owner reports that attribute for every row
    col_coin = np.where(seg_cols0, coin0[:, None], coin1[:, None])
    hit_s = (
        disadvantaged[:, :, None] & (protected & col_coin)[:, None, :]
    )
    est_s = np.where(hit_s, beta * values, values).sum(axis=2)

    return _tie_adjusted_hits(est_h, best), _tie_adjusted_hits(est_s, best)


def draw_bias_batch(
    rng: np.random.Generator,
    size: int,
    n: int,
    d: int,
    sigma: float,
    alpha: float,
    lam: float,
    marginal,
    gamma: float | None,
):
    """Draw everything one bias-grid chunk needs, in a fixed order.

    With ``gamma`` None the committee is the fixed one-biased, one-unbiased
    pair (evaluator 0 biased); otherwise each evaluator's coin is an
    independent Bernoulli(gamma).
    """
    if n % 2 or d % 2:
        raise ValueError("two-evaluator committees need even n and d")
    values = draw_correlated_values(rng, size, n, d, sigma, marginal)
    while True:
        total = values.sum(axis=2)
        top = total.max(axis=1)
        bad = (total == top[:, None]).sum(axis=1) > 1
        if not bad.any():
            break
        values[bad] = draw_correlated_values(
            rng, int(bad.sum()), n, d, sigma, marginal
        )
    disadvantaged = random_subset_mask(rng, size, n, round_half_up(alpha * n))
    protected = random_subset_mask(rng, size, d, round_half_up(lam * d))
    hol_rows0 = random_subset_mask(rng, size, n, n // 2)
    seg_cols0 = random_subset_mask(rng, size, d, d // 2)
    if gamma is None:
        coin0 = np.ones(size, dtype=bool)
        coin1 = np.zeros(size, dtype=bool)
    else:
        coin0 = rng.random(size) < gamma
        coin1 = rng.random(size) < gamma
    return values, disadvantaged, protected, hol_rows0, seg_cols0, coin0, coin1


def bias_worker(params: dict, rng: np.random.Generator, size: int) -> dict:
    n = int(params["n"])
    d = int(params["d"])
    beta = float(params["beta"])
    gamma = params.get("gamma")
    marginal = marginal_from_spec(params["marginal"])

    batch = draw_bias_batch(
        rng,
        size,
        n,
        d,
        float(params["sigma"]),
        float(params["alpha"]),
        float(params["lambda"]),
        marginal,
        None if gamma is None else float(gamma),
    )
    acc_h, acc_s = bias_scheme_accuracies(*batch, beta)
    diff = acc_s - acc_h
    return {
        "sum_hol": float(acc_h.sum()),
        "sumsq_hol": float((acc_h * acc_h).sum()),
        "sum_seg": float(acc_s.sum()),
        "sumsq_seg": float((acc_s * acc_s).sum()),
        "sum_diff": float(diff.sum()),
        "sumsq_diff": float((diff * diff).sum()),
        "count": float(size),
    }


# ---------------------------------------------------------------------------
# theorem setting: two attributes, sigma = 1, committee of two


def theorem_error_pairs(
    values: np.ndarray,
    disadvantaged: np.ndarray,
    protected2: np.ndarray,
    hol_rows0: np.ndarray,
    seg_first: np.ndarray,
    coin0: np.ndarray,
    coin1: np.ndarray,
    beta: float,
):
    """Paired top-choice errors for the fully correlated two-attribute case.

    ``values (B, n)`` is the single value shared by both attributes of each
    applicant (sigma = 1).  ``protected2 (B, 2)`` flags protected attributes,
    ``seg_first`` is True where evaluator 0 owns attribute 0 under the
    segmented scheme.  Returns ``(err_hol, err_seg, best_is_dis)``.
    """
    batch, n = values.shape
    best = np.argmax(values, axis=1)

    row_coin = np.where(hol_rows0, coin0[:, None], coin1[:, None])
    hit_h = disadvantaged & row_coin
    rep_h0 = np.where(hit_h & protected2[:, 0:1], beta * values, values)
    rep_h1 = np.where(hit_h & protected2[:, 1:2], beta * values, values)
    est_h = rep_h0 + rep_h1

    coin_a0 = np.where(seg_first, coin0, coin1)[:, None]
    coin_a1 = np.where(seg_first, coin1, coin0)[:, None]
    rep_s0 = np.where(
        disadvantaged & protected2[:, 0:1] & coin_a0, beta * values, values
    )
    rep_s1 = np.where(
        disadvantaged & protected2[:, 1:2] & coin_a1, beta * values, values
    )
    est_s = rep_s0 + rep_s1

    err_h = 1.0 - _tie_adjusted_hits(est_h, best)
    err_s = 1.0 - _tie_adjusted_hits(est_s, best)
    best_is_dis = disadvantaged[np.arange(batch), best]
    return err_h, err_s, best_is_dis


def draw_theorem_batch(
    rng: np.random.Generator,
    size: int,
    n: int,
    delta: float,
    alpha: float,
    lam: float,
    gamma: float,
):
    """Draw one chunk of the theorem experiment in a fixed order."""
    if n % 2:
        raise ValueError("the theorem setting needs an even pool")
    values = power_law_inv_cdf(rng.random((size, n)), delta)
    while True:
        top = values.max(axis=1)
        bad = (values == top[:, None]).sum(axis=1) > 1
        if not bad.any():
            break
        values[bad] = power_law_inv_cdf(rng.random((int(bad.sum()), n)), delta)
    disadvantaged = random_subset_mask(rng, size, n, round_half_up(alpha * n))
    protected2 = random_subset_mask(rng, size, 2, round_half_up(lam * 2))
    hol_rows0 = random_subset_mask(rng, size, n, n // 2)
    seg_first = rng.random(size) < 0.5
    coin0 = rng.random(size) < gamma
    coin1 = rng.random(size) < gamma
    return values, disadvantaged, protected2, hol_rows0, seg_first, coin0, coin1


def theorem_worker(params: dict, rng: np.random.Generator, size: int) -> dict:
    n = int(params["n"])
    beta = float(params["beta"])
    batch = draw_theorem_batch(
        rng,
        size,
        n,
        float(params["delta"]),
        float(params.get("alpha", 0.5)),
        float(params["lambda"]),
        float(params["gamma"]),
    )
    err_h, err_s, best_is_dis = theorem_error_pairs(*batch, beta)
    diff = err_h - err_s
    eh_dis = err_h * best_is_dis
    es_dis = err_s * best_is_dis
    return {
        "sum_hol": float(err_h.sum()),
        "sumsq_hol": float((err_h * err_h).sum()),
        "sum_seg": float(err_s.sum()),
        "sumsq_seg": float((err_s * err_s).sum()),
        "sum_diff": float(diff.sum()),
        "sumsq_diff": float((diff * diff).sum()),
        "sum_hol_dis": float(eh_dis.sum()),
        "sumsq_hol_dis": float((eh_dis * eh_dis).sum()),
        "sum_seg_dis": float(es_dis.sum()),
        "sumsq_seg_dis": float((es_dis * es_dis).sum()),
        "sum_dis": float(best_is_dis.sum()),
        "count": float(size),
    }


# ---------------------------------------------------------------------------
# tail comparison: best of one group versus twice the best of another


def tail_worker(params: dict, rng: np.random.Generator, size: int) -> dict:
    m = int(params["n_per_group"])
    delta = float(params["delta"])
    dis_best = power_law_inv_cdf(rng.random((size, m)), delta).max(axis=1)
    adv_best = power_law_inv_cdf(rng.random((size, m)), delta).max(axis=1)
    below = dis_best < 2.0 * adv_best
    return {"sum": float(below.sum()), "count": float(size)}
