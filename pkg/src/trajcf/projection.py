"""Sampled curves -> orthonormal Chebyshev coefficients, and back.

The orthonormal system on [-1, 1] is e_1 = 1 and e_k = sqrt(2) * T_{k-1}
for k >= 2 (T_j the Chebyshev polynomials of the first kind), orthonormal
under the probability weight 1 / (pi * sqrt(1 - t^2)).  A curve's k-th
coefficient is the weighted inner product <f, e_k>, computed here with the
Gauss-Chebyshev rule: nodes t_j = cos((2j - 1) pi / (2M)) and the uniform
weight 1/M.  That rule integrates polynomial integrands of degree up to
2M - 1 exactly, so for M >= n the discretized system is orthonormal to
machine precision.

Curves sampled on arbitrary strictly-increasing grids over any interval
[t_lo, t_hi] are handled by mapping the interval affinely onto [-1, 1] and
linearly interpolating between samples (with clamping beyond the sampled
range); interpolation is the one approximation in this module and is a bias
source for coarse grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numpy.polynomial import chebyshev as _cheb

import numpy as np

from .errors import InputError

# Largest harmonic truncation `project` accepts; keeps the quadrature
# default M = max(256, 8n) and downstream basis sizes desk-scale.
MAX_HARMONIC = 4096


def default_quad_points(n: int) -> int:
    """Default Gauss-Chebyshev point count for projecting to n coefficients."""
    return max(256, 8 * n)


@dataclass(frozen=True)
class SampledTrajectory:
    """One recorded curve.

    Parameters
    ----------
    times : array_like
        Strictly increasing sample times inside ``domain``.
    values : array_like
        Samples f(times), same length as ``times`` (at least 2).
    id : str, optional
        Label carried through reports.
    domain : (float, float)
        The interval the curve lives on; mapped affinely to [-1, 1]
        before any quadrature.
    """

    times: np.ndarray
    values: np.ndarray
    id: str | None = None
    domain: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size:
            raise InputError("times and values must be 1-D sequences of equal length")
        if t.size < 2:
            raise InputError("a trajectory needs at least 2 samples")
        if not np.all(np.isfinite(t)):
            raise InputError("trajectory times contain non-finite entries")
        if np.any(np.diff(t) <= 0):
            raise InputError(f"trajectory times must be strictly increasing (id={self.id!r})")
        lo, hi = float(self.domain[0]), float(self.domain[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise InputError(f"invalid domain interval ({lo}, {hi})")
        span = hi - lo
        if t[0] < lo - 1e-12 * span or t[-1] > hi + 1e-12 * span:
            raise InputError(
                f"trajectory times [{t[0]}, {t[-1]}] leave the declared domain [{lo}, {hi}]"
            )
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "domain", (lo, hi))

    def unit_times(self) -> np.ndarray:
        """Sample times mapped affinely onto [-1, 1]."""
        lo, hi = self.domain
        if lo == -1.0 and hi == 1.0:  # identity map: keep times bit-exact
            return self.times
        return 2.0 * (self.times - lo) / (hi - lo) - 1.0


@dataclass(frozen=True)
class CoefficientVector:
    """The first n_max orthonormal coefficients <f, e_k> of a curve."""

    coeffs: np.ndarray
    id: str | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise InputError("coefficients must form a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise InputError(f"coefficient vector contains non-finite entries (id={self.id!r})")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_max(self) -> int:
        return int(self.coeffs.size)

    def __len__(self) -> int:
        return self.n_max


def coeff_array(c) -> np.ndarray:
    """Return the underlying 1-D float array of a CoefficientVector or array_like."""
    if isinstance(c, CoefficientVector):
        return c.coeffs
    arr = np.asarray(c, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"expected a 1-D coefficient vector, got shape {arr.shape}")
    return arr


def chebyshev_quadrature_nodes(M: int) -> np.ndarray:
    """Gauss-Chebyshev nodes t_j = cos((2j - 1) pi / (2M)), j = 1..M.

    Returned in the natural descending order; the matching quadrature
    weight is uniformly 1/M.  Requires M >= 2.
    """
    if not isinstance(M, (int, np.integer)) or isinstance(M, bool) or M < 2:
        raise InputError(f"quadrature needs an integer point count >= 2, got {M!r}")
    j = np.arange(1, M + 1, dtype=float)
    return np.cos((2.0 * j - 1.0) * math.pi / (2.0 * M))


def resample_to_nodes(traj: SampledTrajectory, nodes) -> np.ndarray:
    """Piecewise-linear sample values at the given unit-interval nodes.

    Nodes must lie in [-1, 1] (the trajectory's domain after mapping).
    Nodes beyond the sampled range take the nearest endpoint value.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size and (nodes.min() < -1.0 - 1e-12 or nodes.max() > 1.0 + 1e-12):
        raise InputError("resampling nodes must lie within [-1, 1]")
    if not np.all(np.isfinite(traj.values)):
        raise InputError(f"trajectory values contain non-finite entries (id={traj.id!r})")
    # np.interp clamps to the end values outside the sampled range, which is
    # exactly the documented endpoint rule.
    return np.interp(nodes, traj.unit_times(), traj.values)


def project(traj: SampledTrajectory, n: int, quad_points: int | None = None) -> CoefficientVector:
    """Project a sampled curve onto the first n orthonormal coefficients.

    Parameters
    ----------
    traj : SampledTrajectory
    n : int
        Harmonic truncation, 1 <= n <= MAX_HARMONIC.
    quad_points : int, optional
        Gauss-Chebyshev point count M; defaults to max(256, 8n) and must
        be at least n so the discrete system stays orthonormal.

    Returns
    -------
    CoefficientVector
        Entry 1 is the quadrature mean of f; entry k >= 2 is
        (sqrt(2)/M) * sum_j f(t_j) T_{k-1}(t_j).
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise InputError(f"harmonic truncation must be an integer >= 1, got {n!r}")
    if n > MAX_HARMONIC:
        raise InputError(f"harmonic truncation {n} exceeds the cap of {MAX_HARMONIC}")
    M = default_quad_points(n) if quad_points is None else quad_points
    if not isinstance(M, (int, np.integer)) or isinstance(M, bool) or M < 2:
        raise InputError(f"quadrature point count must be an integer >= 2, got {M!r}")
    if M < n:
        raise InputError(
            f"{M} quadrature points cannot resolve {n} coefficients (need M >= n)"
        )
    nodes = chebyshev_quadrature_nodes(int(M))
    fvals = resample_to_nodes(traj, nodes)
    # chebvander columns are T_0 .. T_{n-1}, evaluated by the stable recurrence.
    T = _cheb.chebvander(nodes, n - 1)
    c = T.T @ fvals / M
    if n > 1:
        c[1:] *= math.sqrt(2.0)
    return CoefficientVector(coeffs=c, id=traj.id)


def reconstruct(c, t):
    """Evaluate the truncated series c_1 + sum_{k>=2} c_k sqrt(2) T_{k-1} at t.

    ``c`` may be a CoefficientVector or a plain sequence; ``t`` may be a
    scalar or an array (the result matches its shape).
    """
    coeffs = coeff_array(c)
    series = np.array(coeffs, dtype=float, copy=True)
    if series.size > 1:
        series[1:] *= math.sqrt(2.0)
    return _cheb.chebval(np.asarray(t, dtype=float), series)


def reconstruct_batch(coeff_matrix, t) -> np.ndarray:
    """Evaluate many truncated series at the same points.

    Parameters
    ----------
    coeff_matrix : array_like, shape (N, n)
        One orthonormal coefficient vector per row.
    t : array_like, shape (M,)

    Returns
    -------
    ndarray, shape (N, M)
    """
    C = np.asarray(coeff_matrix, dtype=float)
    if C.ndim != 2:
        raise InputError(f"expected a 2-D coefficient matrix, got shape {C.shape}")
    series = np.array(C.T, copy=True)  # chebval wants coefficients first
    if series.shape[0] > 1:
        series[1:, :] *= math.sqrt(2.0)
    return _cheb.chebval(np.asarray(t, dtype=float), series)
