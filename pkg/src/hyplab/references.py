"""Closed-form reference laws and bounds for the experiments.

* standard normal CDF (the comparison target of every CLT-type claim),
* the limiting laws of the least singular value of square gaussian
  matrices, in the variable x = n * sigma_min^2,
* the max/min coordinate bounds for a Haar-uniform unit vector.

The real-case least-singular-value CDF is implemented with the exponent
sign corrected to ``1 - exp(-x/2 - sqrt(x))``: only this sign yields a
valid CDF whose derivative matches the density prefactor
``(1 + sqrt(x)) / (2 sqrt(x))`` times the exponential.  The commonly
printed ``+sqrt(x)`` variant is a typo; see README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr


def std_normal_cdf(t):
    """Phi(t) via the Cephes complementary-error-function expansion
    (scipy.special.ndtr), accurate to well below 1e-12.  Vectorized."""
    return ndtr(t)


def edelman_cdf(x, fieldname: str):
    """Limit law of x = n * sigma_min^2 for square gaussian matrices.

    Complex: 1 - exp(-x); this is in fact exact at every n.
    Real:    1 - exp(-x/2 - sqrt(x))  (sign-corrected; see module docstring).
    Negative arguments are rejected.  Vectorized over x.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0):
        raise ValueError("edelman_cdf is defined for x >= 0 only")
    if fieldname == "complex":
        out = -np.expm1(-arr)
    elif fieldname == "real":
        out = -np.expm1(-arr / 2.0 - np.sqrt(arr))
    else:
        raise ValueError(f"unknown field {fieldname!r}")
    return out if arr.shape else float(out)


def gaussian_sup_bound(n: int, c_level: float) -> float:
    """sqrt(8 (C+1)^3 log n / n): with probability >= 1 - n^{-C}, the sup
    norm of a Haar-uniform unit vector in n dimensions stays below this."""
    if n < 2:
        raise ValueError("gaussian_sup_bound needs n >= 2")
    if not c_level > 0:
        raise ValueError("C must be positive")
    return math.sqrt(8.0 * (c_level + 1.0) ** 3 * math.log(n) / n)


def gaussian_min_bound(n: int, c: float, a: float) -> tuple[float, float]:
    """Threshold (c/a) n^{-3/2} and the probability lower bound
    exp(-2c) - exp(-((a^2 - sqrt(2 a^2 - 1)) / 2) n) for the smallest
    coordinate of a Haar-uniform unit vector."""
    if n < 2:
        raise ValueError("gaussian_min_bound needs n >= 2")
    if not 0 <= c < 1:
        raise ValueError("c must lie in [0, 1)")
    if not a > 1:
        raise ValueError("a must exceed 1")
    threshold = (c / a) * n ** -1.5
    prob_lower = math.exp(-2.0 * c) - math.exp(-0.5 * (a * a - math.sqrt(2.0 * a * a - 1.0)) * n)
    return threshold, prob_lower


@dataclass(frozen=True)
class ReferenceCdf:
    """A named reference law with a vectorized CDF."""

    kind: str
    cdf: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.cdf(x)


STD_NORMAL = ReferenceCdf("std-normal", std_normal_cdf)
EDELMAN_REAL = ReferenceCdf("edelman-real", lambda x: edelman_cdf(x, "real"))
EDELMAN_COMPLEX = ReferenceCdf("edelman-complex", lambda x: edelman_cdf(x, "complex"))

_REGISTRY = {ref.kind: ref for ref in (STD_NORMAL, EDELMAN_REAL, EDELMAN_COMPLEX)}


def reference_by_name(name: str) -> ReferenceCdf:
    """Look up a reference CDF by its CLI name (e.g. ``edelman-complex``)."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown reference CDF {name!r}; known: {sorted(_REGISTRY)}") from None


def reference_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))
