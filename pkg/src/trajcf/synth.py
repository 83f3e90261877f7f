"""Seedable synthetic experiments: ball-perturbed curve families.

Both generators share one nominal curve, the orthonormal coefficient
vector of (T1 + T2 + T3)/3,

    g0 = (0, 1/(3 sqrt 2), 1/(3 sqrt 2), 1/(3 sqrt 2), 0),

and draw inliers g_i = g0 + eta_i with eta_i uniform on the solid Euclidean
ball of radius 1/10 over the first four orthonormal coordinates, so every
inlier satisfies |g_i - g0| <= 1/10 exactly and has harmonic degree 4 (its
fifth coefficient stays zero).

* experiment 1: the designated outlier takes the same construction with a
  ten-times larger radius (1.0) — same support directions, wildly larger
  spread, so its CD value at (d, n) = (4, 4) lands orders of magnitude
  above the in-sample average of 70.
* experiment 2: the designated outlier is g0 + eps * T4 (default
  eps = 1/10), whose fifth coefficient eps/sqrt(2) is nonzero — fitting at
  (d, n) = (1, 5) then yields a moment matrix whose last row and column
  vanish identically, and the regularized score blows up on the outlier.

Reproducibility: every trajectory draws from its own counter-based Philox
stream keyed (seed, index) — inlier i uses (seed, i), the experiment-1
outlier uses (seed, N) — so datasets are byte-identical across runs,
platforms, and any parallel generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import TrajectoryDataset
from .projection import (
    CoefficientVector,
    SampledTrajectory,
    chebyshev_quadrature_nodes,
    reconstruct_batch,
)

# Orthonormal coefficients of the shared nominal curve (T1 + T2 + T3)/3:
# T_k = e_{k+1} / sqrt(2) for k >= 1, hence the 1/(3 sqrt 2) entries.
NOMINAL_COEFFS = (0.0, 1.0 / (3.0 * math.sqrt(2.0)),
                  1.0 / (3.0 * math.sqrt(2.0)), 1.0 / (3.0 * math.sqrt(2.0)), 0.0)

# The ball perturbation spans the first four orthonormal coordinates.
PERTURBED_COORDS = (0, 1, 2, 3)

DEFAULT_RADIUS = 0.1
OUTLIER_RADIUS_FACTOR = 10.0  # "an order of magnitude" larger, pinned exactly
CURVE_SAMPLE_POINTS = 33


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic family."""

    nominal: tuple[float, ...]
    perturbed_coords: tuple[int, ...]
    radius: float
    sample_count: int
    seed: int

    def __post_init__(self) -> None:
        if self.radius <= 0.0 or not math.isfinite(self.radius):
            raise InputError(f"perturbation radius must be > 0, got {self.radius!r}")
        if self.sample_count < 1:
            raise InputError(f"sample count must be >= 1, got {self.sample_count}")
        if self.seed < 0:
            raise InputError(f"seed must be a non-negative integer, got {self.seed}")
        if any(k < 0 or k >= len(self.nominal) for k in self.perturbed_coords):
            raise InputError(
                f"perturbed coordinates {self.perturbed_coords} leave the "
                f"coefficient range 0..{len(self.nominal) - 1}"
            )


@dataclass(frozen=True)
class SyntheticExperiment:
    """One generated family: references plus a designated outlier."""

    dataset: TrajectoryDataset
    outlier: CoefficientVector
    nominal: CoefficientVector
    spec: SynthSpec


def _stream(seed: int, index: int) -> np.random.Generator:
    """The (seed, index)-keyed Philox stream for one trajectory."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_ball(dim: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """One uniform draw from the solid Euclidean ball of the given radius.

    Construction: an isotropic Gaussian direction normalized to the sphere,
    scaled by radius * U**(1/dim) with U uniform on (0, 1) — the classic
    volume-correct radial law.  radius = 0 returns the zero vector.
    """
    if dim < 1:
        raise InputError(f"ball dimension must be >= 1, got {dim}")
    if radius < 0.0 or not math.isfinite(radius):
        raise InputError(f"ball radius must be finite and >= 0, got {radius!r}")
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    while norm == 0.0:  # probability-zero guard
        direction = rng.standard_normal(dim)
        norm = np.linalg.norm(direction)
    u = rng.uniform(0.0, 1.0)
    return (radius * u ** (1.0 / dim) / norm) * direction


def _generate_family(spec: SynthSpec) -> tuple[np.ndarray, TrajectoryDataset]:
    """Coefficient matrix and dataset (with 33-point curves) for one spec."""
    g0 = np.asarray(spec.nominal, dtype=float)
    coords = np.asarray(spec.perturbed_coords, dtype=int)
    C = np.tile(g0, (spec.sample_count, 1))
    for i in range(spec.sample_count):
        C[i, coords] += sample_ball(coords.size, spec.radius, _stream(spec.seed, i))
    nodes = np.sort(chebyshev_quadrature_nodes(CURVE_SAMPLE_POINTS))
    values = reconstruct_batch(C, nodes)
    entries = tuple(
        (
            SampledTrajectory(times=nodes, values=values[i], id=f"g{i:04d}"),
            CoefficientVector(coeffs=C[i], id=f"g{i:04d}"),
        )
        for i in range(spec.sample_count)
    )
    return C, TrajectoryDataset(entries=entries, domain=(-1.0, 1.0))


def generate_example1(
    N: int, seed: int, radius: float = DEFAULT_RADIUS,
    outlier_radius: float | None = None,
) -> SyntheticExperiment:
    """Radius-ratio family: inliers in a ball of ``radius``, one outlier
    drawn the same way at ``outlier_radius`` (default 10x).

    The outlier uses the dedicated stream (seed, N), so it is independent
    of every inlier yet fully determined by (N, seed).
    """
    spec = SynthSpec(
        nominal=NOMINAL_COEFFS, perturbed_coords=PERTURBED_COORDS,
        radius=radius, sample_count=N, seed=seed,
    )
    _, dataset = _generate_family(spec)
    r_out = OUTLIER_RADIUS_FACTOR * radius if outlier_radius is None else outlier_radius
    out = np.asarray(NOMINAL_COEFFS, dtype=float)
    coords = np.asarray(PERTURBED_COORDS, dtype=int)
    out[coords] += sample_ball(coords.size, r_out, _stream(seed, N))
    return SyntheticExperiment(
        dataset=dataset,
        outlier=CoefficientVector(coeffs=out, id="outlier"),
        nominal=CoefficientVector(coeffs=np.asarray(NOMINAL_COEFFS), id="nominal"),
        spec=spec,
    )


def generate_example2(
    N: int, seed: int, radius: float = DEFAULT_RADIUS,
    outlier_epsilon: float = 0.1,
) -> SyntheticExperiment:
    """Harmonic-degree-mismatch family: inliers as in experiment 1 (fifth
    coefficient exactly zero), outlier = nominal + eps * T4 whose fifth
    orthonormal coefficient is eps / sqrt(2)."""
    spec = SynthSpec(
        nominal=NOMINAL_COEFFS, perturbed_coords=PERTURBED_COORDS,
        radius=radius, sample_count=N, seed=seed,
    )
    _, dataset = _generate_family(spec)
    out = np.asarray(NOMINAL_COEFFS, dtype=float)
    out[4] = outlier_epsilon / math.sqrt(2.0)
    return SyntheticExperiment(
        dataset=dataset,
        outlier=CoefficientVector(coeffs=out, id="outlier"),
        nominal=CoefficientVector(coeffs=np.asarray(NOMINAL_COEFFS), id="nominal"),
        spec=spec,
    )
