"""Monte Carlo study of holistic versus segmented evaluation of applicant pools.

A pool of applicants, each described by several correlated attribute values,
is split among a committee of evaluators.  Under holistic allocation each
evaluator sees every attribute of a subset of applicants; under segmented
allocation each evaluator sees one attribute slice of every applicant.  The
package simulates how noisy, biased, or capacity-limited evaluators distort
the committee's choice under either scheme, and checks the simulated error
gap against a closed-form prediction for the two-attribute case.
"""

__version__ = "0.1.0"

from . import allocation, distributions, evaluators, metrics, population
from .rng import derive_stream

__all__ = [
    "__version__",
    "allocation",
    "derive_stream",
    "distributions",
    "evaluators",
    "metrics",
    "population",
]
