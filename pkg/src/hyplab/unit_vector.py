"""Unit vectors with an explicit phase convention.

A normal vector of a hyperplane (and an eigenvector) is only defined up to
a sign over the reals, or a unit-modulus rotation over the complexes.  Every
UnitVector therefore carries a ``phase_mode`` tag saying how that freedom
was resolved:

* ``"haar"``      -- multiplied by a uniform random sign / rotation,
* ``"canonical"`` -- largest-magnitude entry made real and strictly positive
                     (ties broken by lowest index),
* ``"raw"``       -- whatever phase the producing factorization emitted.

Magnitude-based statistics are identical in all three modes; distributional
statements about signed coordinates require ``"haar"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PHASE_MODES = ("haar", "canonical", "raw")

_NORM_TOL = 1e-12
_TIE_REL_TOL = 1e-9


def canonical_pivot(entries: np.ndarray) -> int:
    """Index whose entry the canonical convention makes real positive:
    the largest-magnitude entry, near-ties (1e-9 relative) broken by
    lowest index so the convention is stable under rounding noise."""
    mags = np.abs(entries)
    top = float(np.max(mags))
    return int(np.nonzero(mags >= top * (1.0 - _TIE_REL_TOL))[0][0])


@dataclass(frozen=True, eq=False)
class UnitVector:
    """A vector with Euclidean norm 1 (checked to 1e-12 at construction)."""

    entries: np.ndarray
    phase_mode: str = "raw"

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 1 or entries.size == 0:
            raise ValueError("UnitVector entries must be a nonempty 1-d array")
        if not np.all(np.isfinite(entries)):
            raise ValueError("UnitVector entries must be finite")
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"unknown phase mode {self.phase_mode!r}")
        norm = float(np.sqrt(np.sum(np.abs(entries) ** 2)))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"not a unit vector: ||x|| = {norm!r}")
        if self.phase_mode == "canonical":
            value = complex(entries[canonical_pivot(entries)])
            if value.real <= 0.0 or abs(value.imag) > _NORM_TOL:
                raise ValueError("canonical mode: largest-magnitude entry must be real positive")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    def min_coord(self) -> float:
        return float(np.min(np.abs(self.entries)))


def normalized(entries: np.ndarray, phase_mode: str = "raw") -> UnitVector:
    """Scale ``entries`` to unit norm and wrap as a UnitVector."""
    entries = np.asarray(entries)
    norm = float(np.sqrt(np.sum(np.abs(entries) ** 2)))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return UnitVector(entries / norm, phase_mode)
