"""Deterministic, stream-splittable random sampling.

Randomness is organized as counter-based Philox streams keyed by
``(master_seed, stream_index)``.  Distinct stream indices under one master
seed give statistically independent, non-overlapping sequences, and every
draw is a pure function of ``(master_seed, stream_index, draw ordinal)``,
so results are identical on any platform and for any number of workers.

All samplers are built on top of raw uniform words via inverse-CDF
transforms, which consume a fixed number of words per draw:

* one word per real scalar (gaussian via the Cephes inverse normal CDF
  ``scipy.special.ndtri``; Bernoulli and custom discrete laws via a
  cumulative-weight lookup),
* two words per complex scalar (real part first, then imaginary part).

Fixed word counts are what make the row-major fill-order contract of
``sample_matrix`` hold exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from .unit_vector import UnitVector

FAMILIES = ("gaussian", "bernoulli", "custom")
FIELDS = ("real", "complex")

_MOMENT_TOL = 1e-12
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class DistSpec:
    """A normalized (mean 0, variance 1) scalar law for matrix entries.

    Complex laws are always built as ``(xi1 + i*xi2)/sqrt(2)`` from two iid
    copies of the real law, so ``E|xi|^2 = 1``.  ``subgauss_k0`` is carried
    as metadata only (it parametrizes tail bounds, never a sampling path).
    Custom laws are finite discrete laws given by ``support``/``weights``
    for the real component; they are validated to have mean 0 and variance
    1 to within 1e-12 at construction.
    """

    family: str
    field: str = "real"
    subgauss_k0: float = 2.0
    support: tuple[float, ...] | None = None
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")
        if not (self.subgauss_k0 > 0):
            raise ValueError("subgauss_k0 must be positive")
        if self.family == "custom":
            if not self.support or not self.weights:
                raise ValueError("custom law needs support and weights")
            if len(self.support) != len(self.weights):
                raise ValueError("support and weights must have equal length")
            support = tuple(float(s) for s in self.support)
            weights = tuple(float(w) for w in self.weights)
            if any(w < 0 for w in weights):
                raise ValueError("weights must be nonnegative")
            total = math.fsum(weights)
            if abs(total - 1.0) > _MOMENT_TOL:
                raise ValueError(f"weights must sum to 1, got {total!r}")
            mean = math.fsum(w * s for w, s in zip(weights, support))
            var = math.fsum(w * s * s for w, s in zip(weights, support)) - mean * mean
            if abs(mean) > _MOMENT_TOL:
                raise ValueError(f"custom law has mean {mean!r}, expected 0")
            if abs(var - 1.0) > _MOMENT_TOL:
                raise ValueError(f"custom law has variance {var!r}, expected 1")
            object.__setattr__(self, "support", support)
            object.__setattr__(self, "weights", weights)
        elif self.support is not None or self.weights is not None:
            raise ValueError("support/weights are only valid for custom laws")

    @property
    def is_complex(self) -> bool:
        return self.field == "complex"

    @property
    def is_symmetric(self) -> bool:
        """True when the real component law is symmetric about 0."""
        if self.family in ("gaussian", "bernoulli"):
            return True
        pairs = dict(zip(self.support, self.weights))
        return all(abs(pairs.get(-s, 0.0) - w) <= _MOMENT_TOL for s, w in pairs.items())

    def token(self) -> str:
        """Config token, e.g. ``gaussian:real`` (custom laws have no token)."""
        if self.family == "custom":
            raise ValueError("custom laws are identified by their JSON file, not a token")
        return f"{self.family}:{self.field}"


def parse_dist_token(token: str) -> DistSpec:
    """Parse a config token: ``gaussian:real``, ``bernoulli:complex``, or
    ``custom:<path-to-json>`` where the JSON holds
    ``{"support": [...], "weights": [...], "field": "real"|"complex"}``."""
    head, sep, rest = token.partition(":")
    if head == "custom":
        if not sep:
            raise ValueError("custom token must be custom:<path-to-json>")
        with open(rest, encoding="utf-8") as fh:
            payload = json.load(fh)
        return DistSpec(
            family="custom",
            field=payload.get("field", "real"),
            support=tuple(payload["support"]),
            weights=tuple(payload["weights"]),
        )
    if head not in ("gaussian", "bernoulli"):
        raise ValueError(f"unknown distribution token {token!r}")
    fieldname = rest if sep else "real"
    if fieldname not in FIELDS:
        raise ValueError(f"unknown field {fieldname!r} in token {token!r}")
    return DistSpec(family=head, field=fieldname)


@dataclass
class RngStream:
    """One Philox stream under (master_seed, stream_index).

    Streams are value-like: owned by a single trial, never shared between
    concurrent tasks.  ``uniforms`` consumes one 64-bit word per value.
    """

    master_seed: int
    stream_index: int
    _gen: Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name, value in (("master_seed", self.master_seed), ("stream_index", self.stream_index)):
            if not 0 <= value < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        self._gen = Generator(Philox(key=key))

    def uniforms(self, count: int) -> np.ndarray:
        """Next ``count`` uniforms in [0, 1), one raw word each."""
        return self._gen.random(count)


def make_stream(master_seed: int, stream_index: int) -> RngStream:
    """Create the stream for (master_seed, stream_index); replayable."""
    return RngStream(master_seed, stream_index)


def _real_from_uniforms(u: np.ndarray, dist: DistSpec) -> np.ndarray:
    if dist.family == "gaussian":
        # u = 0.0 occurs with probability 2^-53 per word and ndtri(0) = -inf;
        # clamp to the next representable step of the uniform grid
        return ndtri(np.fmax(u, 2.0**-54))
    if dist.family == "bernoulli":
        return np.where(u < 0.5, -1.0, 1.0)
    cumw = np.cumsum(np.asarray(dist.weights))
    cumw[-1] = 1.0  # guard against fsum-rounding at the top
    idx = np.searchsorted(cumw, u, side="right")
    return np.asarray(dist.support)[idx]


def _sample_array(stream: RngStream, count: int, dist: DistSpec) -> np.ndarray:
    """``count`` iid draws in ordinal order (complex draws interleave re/im)."""
    if dist.is_complex:
        u = stream.uniforms(2 * count)
        re = _real_from_uniforms(u[0::2], dist)
        im = _real_from_uniforms(u[1::2], dist)
        return _INV_SQRT2 * (re + 1j * im)
    return _real_from_uniforms(stream.uniforms(count), dist)


def sample_scalar(stream: RngStream, dist: DistSpec):
    """One draw from the normalized law (1 word real, 2 words complex)."""
    value = _sample_array(stream, 1, dist)[0]
    return complex(value) if dist.is_complex else float(value)


def sample_matrix(stream: RngStream, rows: int, cols: int, dist: DistSpec) -> np.ndarray:
    """rows x cols matrix of iid draws; entry (i, j) is draw ordinal
    ``i*cols + j`` of the stream (row-major fill), so outputs are
    layout-reproducible."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    return _sample_array(stream, rows * cols, dist).reshape(rows, cols)


def sample_vector(stream: RngStream, n: int, dist: DistSpec) -> np.ndarray:
    """n iid draws as a 1-d array (same ordinal order as sample_matrix)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _sample_array(stream, n, dist)


def sample_sphere_uniform(stream: RngStream, n: int, fieldname: str = "real") -> UnitVector:
    """Uniform (Haar) point on the unit sphere of R^n or C^n.

    Draws n iid standard gaussians over the field and divides by
    S = sqrt(sum |xi_i|^2).  S = 0 is only possible via a broken generator:
    we resample once, then fail hard.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    gauss = DistSpec(family="gaussian", field=fieldname)
    for _ in range(2):
        xi = _sample_array(stream, n, gauss)
        s = float(np.sqrt(np.sum(np.abs(xi) ** 2)))
        if s > 0.0:
            return UnitVector(xi / s, phase_mode="haar")
    raise RuntimeError("sphere sampling drew the zero vector twice; generator is broken")
