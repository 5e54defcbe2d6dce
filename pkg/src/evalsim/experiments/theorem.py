"""Empirical verification of the two-attribute error-gap prediction.

In the fully correlated two-attribute setting (both attributes of an
applicant carry the same value), with half the pool disadvantaged and a
committee of two evaluators whose bias coins are independent Bernoulli(gamma),
the error gap between the schemes admits a closed form.  Writing p for the
probability that the best disadvantaged applicant scores more than twice the
best advantaged one (groups of m = n/2 each),

    err_holistic - err_segmented = gamma * (1 - gamma) / 2 * (4 * p - 1)

when every attribute is protected and the discount floor is 0.  Segmentation
helps exactly when p > 1/4; as the pool grows, p tends to
``2**-(1+delta) / (1 + 2**-(1+delta))``, which crosses 1/4 at
``delta = log2(3) - 1``.  Heavier tails than that favor segmentation, lighter
tails favor holistic review.  When only half the attributes are protected
(one of two), segmentation never hurts, whatever the discount.

This module estimates the gaps by paired Monte Carlo, computes p both by
simulation and by quadrature, and packages the comparisons as pass/fail
checks.  It also verifies the symmetry identity behind the closed form: an
error can only occur when the true best applicant is disadvantaged, which
happens with probability 1/2, so the unconditional error must equal half the
error conditioned on that event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from ..distributions import PowerLaw
from ..rng import STREAM_TAIL, STREAM_THEOREM
from .parallel import mean_and_se, run_points
from .results import ExperimentResult
from .kernels import tail_worker, theorem_worker

THEOREM_CHUNK = 8192
TAIL_CHUNK = 256

# Sub-stream tags for the individual checks.  The formula check draws its
# tail oracle from a stream of its own so the two estimates entering the
# comparison are independent.
_PART_A, _FORMULA, _THRESHOLD, _TAIL, _FORMULA_TAIL = 1, 2, 3, 4, 5


def _tail_chunk(n_per_group: int) -> int:
    """Chunk size keeping tail-oracle batches near a fixed element budget."""
    return max(TAIL_CHUNK, 65536 // max(1, n_per_group))


def threshold_delta() -> float:
    """Tail exponent where the asymptotic error gap changes sign."""
    return math.log2(3.0) - 1.0


def tail_above_limit(delta: float) -> float:
    """Large-pool limit of P(best disadvantaged > 2 * best advantaged)."""
    w = 2.0 ** -(1.0 + delta)
    return w / (1.0 + w)


def predicted_tail_above(m: int, delta: float) -> float:
    """Quadrature value of P(max of m draws > 2 * max of m other draws).

    Substituting q for the CDF of the second group's maximum turns the
    integral into a smooth one over (0, 1):

        P = integral_0^1 (1 - F(2 * F^-1(q^(1/m)))^m) dq
    """
    if m < 1:
        raise ValueError("group size must be positive")
    law = PowerLaw(delta)

    def integrand(q):
        y = law.inv_cdf(q ** (1.0 / m))
        return 1.0 - law.cdf(2.0 * y) ** m

    value, _ = quad(integrand, 0.0, 1.0, limit=200, epsabs=1e-12, epsrel=1e-12)
    return float(value)


def predicted_gap(gamma: float, p_above: float) -> float:
    """Closed-form err_holistic - err_segmented from the tail probability."""
    return gamma * (1.0 - gamma) / 2.0 * (4.0 * p_above - 1.0)


@dataclass(frozen=True)
class PairEstimate:
    """Paired Monte Carlo estimates for one theorem-setting parameter point."""

    err_hol: float
    se_hol: float
    err_seg: float
    se_seg: float
    diff: float  # err_hol - err_seg, estimated run by run (paired)
    se_diff: float
    p_best_dis: float
    gap_hol: float  # unconditional minus half the conditional error
    gap_hol_se: float
    gap_seg: float
    gap_seg_se: float
    runs: int


def _conditional_gap(sum_ei: float, sumsq_ei: float, sum_i: float, count: int):
    """Delta-method estimate of mean(err) - mean(err | best dis) / 2.

    Errors vanish whenever the true best applicant is advantaged (reports
    never raise a disadvantaged score or touch an advantaged one), so
    mean(err) equals mean(err * indicator) and the gap reduces to a function
    of two correlated sample means.
    """
    a = sum_ei / count
    b = sum_i / count
    if not 0.0 < b < 1.0:
        return 0.0, 0.0
    gap = a * (1.0 - 1.0 / (2.0 * b))
    var_a = max(0.0, sumsq_ei / count - a * a) / count
    var_b = b * (1.0 - b) / count
    cov_ab = a * (1.0 - b) / count
    da = 1.0 - 1.0 / (2.0 * b)
    db = a / (2.0 * b * b)
    var_gap = da * da * var_a + db * db * var_b + 2.0 * da * db * cov_ab
    return gap, math.sqrt(max(0.0, var_gap))


def _pair_from_sums(sums: dict) -> PairEstimate:
    count = int(sums["count"])
    err_hol, se_hol = mean_and_se(sums["sum_hol"], sums["sumsq_hol"], count)
    err_seg, se_seg = mean_and_se(sums["sum_seg"], sums["sumsq_seg"], count)
    diff, se_diff = mean_and_se(sums["sum_diff"], sums["sumsq_diff"], count)
    gap_hol, gap_hol_se = _conditional_gap(
        sums["sum_hol_dis"], sums["sumsq_hol_dis"], sums["sum_dis"], count
    )
    gap_seg, gap_seg_se = _conditional_gap(
        sums["sum_seg_dis"], sums["sumsq_seg_dis"], sums["sum_dis"], count
    )
    return PairEstimate(
        err_hol=err_hol,
        se_hol=se_hol,
        err_seg=err_seg,
        se_seg=se_seg,
        diff=diff,
        se_diff=se_diff,
        p_best_dis=sums["sum_dis"] / count,
        gap_hol=gap_hol,
        gap_hol_se=gap_hol_se,
        gap_seg=gap_seg,
        gap_seg_se=gap_seg_se,
        runs=count,
    )


def _validate_setting(n: int, gamma: float, beta: float, lam: float) -> None:
    if n < 2 or n % 2:
        raise ValueError("the theorem setting needs an even pool of >= 2")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")


def run_error_pairs(
    points,
    runs: int,
    seed: int,
    sub_tag: int,
    workers: int = 1,
    chunk_size: int = THEOREM_CHUNK,
) -> list:
    """Paired estimates for a list of theorem-setting parameter points.

    Each point is a dict with keys n, delta, beta, gamma, lambda (alpha is
    fixed at 1/2, sigma at 1, d at 2, the setting the closed form covers).
    """
    for point in points:
        _validate_setting(
            int(point["n"]),
            float(point["gamma"]),
            float(point["beta"]),
            float(point["lambda"]),
        )
    sums = run_points(
        theorem_worker,
        points,
        runs,
        seed,
        (STREAM_THEOREM, sub_tag),
        chunk_size,
        workers,
    )
    return [_pair_from_sums(s) for s in sums]


def tail_probability(
    n_per_group: int,
    delta: float,
    pools: int,
    seed: int,
    workers: int = 1,
    chunk_size: int = TAIL_CHUNK,
    stream_tag=STREAM_TAIL,
):
    """Monte Carlo P(best of one group < 2 * best of the other) and its SE."""
    if n_per_group < 1:
        raise ValueError("group size must be positive")
    sums = run_points(
        tail_worker,
        [{"n_per_group": n_per_group, "delta": delta}],
        pools,
        seed,
        stream_tag,
        chunk_size,
        workers,
    )[0]
    count = sums["count"]
    p = sums["sum"] / count
    se = math.sqrt(max(0.0, p * (1.0 - p)) / count)
    return p, se


# ---------------------------------------------------------------------------
# the packaged checks


@dataclass(frozen=True)
class PartACheck:
    """Half-protected case: segmentation should never be worse."""

    n: int
    delta: float
    beta: float
    gamma: float
    pair: PairEstimate
    passed: bool


@dataclass(frozen=True)
class FormulaCheck:
    """Fully protected case: the gap should match the closed form."""

    n: int
    delta: float
    gamma: float
    pair: PairEstimate
    p_above: float  # independent Monte Carlo tail estimate at m = n/2
    p_above_se: float
    p_above_quad: float  # quadrature cross-check of the same probability
    tail_samples: int
    predicted: float  # closed-form gap evaluated at the Monte Carlo estimate
    combined_se: float  # uncertainty from both the paired runs and the oracle
    passed: bool
    symmetry_hol_ok: bool
    symmetry_seg_ok: bool


@dataclass(frozen=True)
class ThresholdCheck:
    """Sign of the gap on either side of the critical tail exponent."""

    n: int
    delta: float
    gamma: float
    pair: PairEstimate
    expect_positive: bool
    passed: bool


@dataclass(frozen=True)
class TailCheck:
    """Simulated tail probability against quadrature and its limit."""

    n_per_group: int
    delta: float
    pools: int
    p_below: float
    se: float
    predicted_below: float
    limit_below: float
    passed: bool


@dataclass(frozen=True)
class TheoremReport:
    part_a: tuple
    formula: tuple
    threshold: tuple
    tail: tuple

    @property
    def all_passed(self) -> bool:
        return (
            all(c.passed for c in self.part_a)
            and all(c.passed and c.symmetry_hol_ok and c.symmetry_seg_ok for c in self.formula)
            and all(c.passed for c in self.threshold)
            and all(c.passed for c in self.tail)
        )


def run_part_a(
    beta_values=(0.0, 0.3, 0.7),
    gamma_values=(0.2, 0.5, 0.8),
    delta_values=(0.3, 1.0),
    n_values=(4, 20),
    runs: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = THEOREM_CHUNK,
) -> tuple:
    """Check err_seg <= err_hol + 3 SE with one of two attributes protected."""
    points = [
        {"n": n, "delta": de, "beta": be, "gamma": ga, "lambda": 0.5}
        for be in beta_values
        for ga in gamma_values
        for de in delta_values
        for n in n_values
    ]
    pairs = run_error_pairs(points, runs, seed, _PART_A, workers, chunk_size)
    checks = []
    for point, pair in zip(points, pairs):
        passed = pair.err_seg <= pair.err_hol + 3.0 * pair.se_diff
        checks.append(
            PartACheck(
                n=point["n"],
                delta=point["delta"],
                beta=point["beta"],
                gamma=point["gamma"],
                pair=pair,
                passed=passed,
            )
        )
    return tuple(checks)


def run_formula_check(
    n_values=(2, 20),
    delta_values=(0.3, 1.0),
    gamma: float = 0.5,
    runs: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = THEOREM_CHUNK,
    tail_samples: int = 1_000_000,
) -> tuple:
    """Check the closed-form gap with both attributes protected, beta = 0.

    The tail probability entering the prediction comes from an independent
    Monte Carlo oracle on its own random stream, so the pass criterion uses a
    combined standard error; the quadrature value rides along as a
    cross-check.
    """
    points = [
        {"n": n, "delta": de, "beta": 0.0, "gamma": gamma, "lambda": 1.0}
        for n in n_values
        for de in delta_values
    ]
    pairs = run_error_pairs(points, runs, seed, _FORMULA, workers, chunk_size)
    checks = []
    for index, (point, pair) in enumerate(zip(points, pairs)):
        m = point["n"] // 2
        p_below, p_se = tail_probability(
            m,
            point["delta"],
            tail_samples,
            seed,
            workers,
            chunk_size=_tail_chunk(m),
            stream_tag=(STREAM_THEOREM, _FORMULA_TAIL, index),
        )
        p_above = 1.0 - p_below
        predicted = predicted_gap(gamma, p_above)
        # The prediction is linear in the tail estimate with slope
        # 2 * gamma * (1 - gamma), and the two estimates are independent.
        combined_se = math.hypot(pair.se_diff, 2.0 * gamma * (1.0 - gamma) * p_se)
        checks.append(
            FormulaCheck(
                n=point["n"],
                delta=point["delta"],
                gamma=gamma,
                pair=pair,
                p_above=p_above,
                p_above_se=p_se,
                p_above_quad=predicted_tail_above(m, point["delta"]),
                tail_samples=tail_samples,
                predicted=predicted,
                combined_se=combined_se,
                passed=abs(pair.diff - predicted) <= 3.0 * combined_se,
                symmetry_hol_ok=abs(pair.gap_hol) <= 3.0 * pair.gap_hol_se,
                symmetry_seg_ok=abs(pair.gap_seg) <= 3.0 * pair.gap_seg_se,
            )
        )
    return tuple(checks)


def run_threshold_check(
    delta_values=(0.3, 0.9),
    n: int = 1000,
    gamma: float = 0.5,
    runs: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = THEOREM_CHUNK,
) -> tuple:
    """Check the gap's sign flips across the critical tail exponent."""
    points = [
        {"n": n, "delta": de, "beta": 0.0, "gamma": gamma, "lambda": 1.0}
        for de in delta_values
    ]
    pairs = run_error_pairs(points, runs, seed, _THRESHOLD, workers, chunk_size)
    critical = threshold_delta()
    checks = []
    for point, pair in zip(points, pairs):
        expect_positive = point["delta"] < critical
        if expect_positive:
            passed = pair.diff > 3.0 * pair.se_diff
        else:
            passed = pair.diff < -3.0 * pair.se_diff
        checks.append(
            ThresholdCheck(
                n=point["n"],
                delta=point["delta"],
                gamma=gamma,
                pair=pair,
                expect_positive=expect_positive,
                passed=passed,
            )
        )
    return tuple(checks)


def run_tail_check(
    delta_values=(1.0,),
    n_per_group: int = 10_000,
    pools: int = 10_000,
    seed: int = 0,
    workers: int = 1,
    chunk_size: int = TAIL_CHUNK,
) -> tuple:
    """Check the simulated tail probability against its quadrature value."""
    checks = []
    for index, delta in enumerate(delta_values):
        p, se = tail_probability(
            n_per_group,
            delta,
            pools,
            seed,
            workers,
            chunk_size,
            stream_tag=(STREAM_THEOREM, _TAIL, index),
        )
        predicted_below = 1.0 - predicted_tail_above(n_per_group, delta)
        checks.append(
            TailCheck(
                n_per_group=n_per_group,
                delta=delta,
                pools=pools,
                p_below=p,
                se=se,
                predicted_below=predicted_below,
                limit_below=1.0 / (1.0 + 2.0 ** -(1.0 + delta)),
                passed=abs(p - predicted_below) <= 3.0 * se,
            )
        )
    return tuple(checks)


def run_theorem_verify(
    n_values=(2, 20),
    delta_values=(0.3, 1.0),
    gamma: float = 0.5,
    runs: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    threshold_n: int = 1000,
    tail_group: int = 10_000,
    tail_pools: int = 10_000,
    tail_samples: int = 1_000_000,
) -> TheoremReport:
    """Run every packaged check over the requested pool sizes and exponents.

    ``n_values`` and ``delta_values`` drive the paired-error grids (the
    half-protected inequality and the closed-form comparison); the threshold
    check reuses ``delta_values`` at a large fixed pool, and the tail check
    reuses them at ``tail_group`` applicants per group.
    """
    return TheoremReport(
        part_a=run_part_a(
            delta_values=delta_values,
            n_values=n_values,
            runs=runs,
            seed=seed,
            workers=workers,
        ),
        formula=run_formula_check(
            n_values=n_values,
            delta_values=delta_values,
            gamma=gamma,
            runs=runs,
            seed=seed,
            workers=workers,
            tail_samples=tail_samples,
        ),
        threshold=run_threshold_check(
            delta_values=delta_values,
            n=threshold_n,
            gamma=gamma,
            runs=runs,
            seed=seed,
            workers=workers,
        ),
        tail=run_tail_check(
            delta_values=delta_values,
            n_per_group=tail_group,
            pools=tail_pools,
            seed=seed,
            workers=workers,
        ),
    )


def report_rows(report: TheoremReport, seed: int) -> dict:
    """Flatten a report into result rows, one table per check family."""
    part_a = []
    for c in report.part_a:
        params = {"n": c.n, "delta": c.delta, "beta": c.beta, "gamma": c.gamma}
        part_a.append(
            ExperimentResult(params, "holistic", c.pair.err_hol, c.pair.se_hol, c.pair.runs, seed)
        )
        part_a.append(
            ExperimentResult(params, "segmented", c.pair.err_seg, c.pair.se_seg, c.pair.runs, seed)
        )
        part_a.append(
            ExperimentResult(params, "difference", c.pair.diff, c.pair.se_diff, c.pair.runs, seed)
        )
    formula = []
    for c in report.formula:
        params = {"n": c.n, "delta": c.delta, "gamma": c.gamma}
        predicted_se = 2.0 * c.gamma * (1.0 - c.gamma) * c.p_above_se
        formula.append(
            ExperimentResult(params, "difference", c.pair.diff, c.pair.se_diff, c.pair.runs, seed)
        )
        formula.append(
            ExperimentResult(params, "predicted", c.predicted, predicted_se, c.tail_samples, seed)
        )
    threshold = []
    for c in report.threshold:
        params = {"n": c.n, "delta": c.delta, "gamma": c.gamma}
        threshold.append(
            ExperimentResult(params, "difference", c.pair.diff, c.pair.se_diff, c.pair.runs, seed)
        )
    tail = []
    for c in report.tail:
        params = {"n": c.n_per_group, "delta": c.delta}
        tail.append(
            ExperimentResult(params, "below", c.p_below, c.se, c.pools, seed)
        )
        tail.append(
            ExperimentResult(params, "predicted", c.predicted_below, 0.0, c.pools, seed)
        )
    return {"part_a": part_a, "formula": formula, "threshold": threshold, "tail": tail}
