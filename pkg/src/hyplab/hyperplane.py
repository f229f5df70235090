"""Normal vectors of random hyperplanes and their delocalization statistics.

Given an (n-1) x n matrix A of full rank, the unit vector orthogonal to
its rows is determined only up to a sign (over R) or a unit-modulus
rotation (over C).  ``normal_vector`` resolves that freedom either with a
uniform random phase ("haar", the convention for all distributional
experiments, which makes coordinate laws well-defined) or with a
deterministic convention ("canonical": the largest-magnitude entry is made
real and strictly positive, ties broken by lowest index), which gives
golden tests unique expected outputs.

The statistics exported here are invariant under the phase choice since
they depend only on coordinate magnitudes (or are reported up to phase).
"""

from __future__ import annotations

import math

import numpy as np

from . import linalg
from .errors import MissingStreamError
from .rng import RngStream
from .unit_vector import UnitVector, canonical_pivot


def canonicalize_phase(x: np.ndarray) -> np.ndarray:
    """Rotate so the largest-magnitude entry is real and strictly positive.

    Near-ties (within 1e-9 relative) are broken by lowest index so the
    convention is stable under rounding noise in the factorization.
    """
    pivot = canonical_pivot(x)
    if np.iscomplexobj(x):
        ph = x[pivot] / abs(x[pivot])
        return x * np.conj(ph)
    return x if x[pivot] > 0 else -x


def haar_phase(x: np.ndarray, stream: RngStream) -> np.ndarray:
    """Multiply by a uniform random sign (R) or rotation e^{i theta} (C).

    Consumes exactly one stream word.
    """
    u = float(stream.uniforms(1)[0])
    if np.iscomplexobj(x):
        return x * np.exp(2j * math.pi * u)
    return x if u < 0.5 else -x


def normal_vector(a, mode: str = "haar", stream: RngStream | None = None) -> UnitVector:
    """Unit normal vector of the hyperplane spanned by the rows of A.

    ``mode="haar"`` draws the phase from ``stream`` (required);
    ``mode="canonical"`` applies the deterministic convention.  Rank
    deficiency propagates from the null-vector factorization.
    """
    raw = linalg.null_vector(a)
    if mode == "haar":
        if stream is None:
            raise MissingStreamError("haar mode needs an RngStream for the phase draw")
        return UnitVector(haar_phase(raw.entries, stream), phase_mode="haar")
    if mode == "canonical":
        return UnitVector(canonicalize_phase(raw.entries), phase_mode="canonical")
    raise ValueError(f"unknown phase mode {mode!r}")


def sup_norm_statistic(x: UnitVector) -> float:
    """||x||_inf * sqrt(n / log n), the normalized delocalization statistic.

    Bounded below by sqrt(1 / log n), attained when all |x_i| are equal.
    """
    n = x.n
    if n < 3:
        raise ValueError("sup_norm_statistic needs n >= 3 (log n > 1)")
    return x.sup_norm() * math.sqrt(n / math.log(n))


def min_coord_statistic(x: UnitVector) -> float:
    """min_i |x_i| * n^{3/2}, the normalized smallest-coordinate statistic."""
    return x.min_coord() * x.n ** 1.5


def inner_product_statistic(x: UnitVector, u: UnitVector):
    """sqrt(n) * x^* u for a fixed unit vector u.

    Returns a float over R, a complex number over C (when either side is
    complex).
    """
    if x.n != u.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {u.n}")
    value = math.sqrt(x.n) * np.vdot(x.entries, u.entries)
    if np.iscomplexobj(x.entries) or np.iscomplexobj(u.entries):
        return complex(value)
    return float(value.real if np.iscomplexobj(value) else value)
