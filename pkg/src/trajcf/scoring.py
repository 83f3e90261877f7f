"""Thresholds, verdicts, and the two baseline scores.

The primary score of a probe is its CD value under a fitted model; a probe
is declared an outlier exactly when that value strictly exceeds a threshold
tau.  Two calibration rules are offered:

* ``quantile(q)`` — nearest-rank q-quantile of the CD values of a
  calibration set (default q = 0.999 over the training data);
* ``multiple(alpha)`` — alpha times the basis dimension m, anchored on the
  fact that the in-sample mean CD value is exactly m.

For comparison experiments two classical baselines are provided: the
smallest weighted-L2 distance to any reference curve, and the pointwise
test that fits a bivariate Christoffel model on the reference point cloud
{(t, g(t))} and reports the fraction of time points where the probe's
pointwise Christoffel value drops below a user-chosen delta.  The pointwise
baseline is the method the functional score is designed to beat: a probe
whose graph never leaves the reference envelope gets fraction ~ 0 no matter
how abnormal the curve is as a function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model as _model
from .basis import enumerate_basis, eval_monomial_matrix
from .errors import InputError, NumericalError
from .model import ChristoffelModel, TrajectoryDataset
from .projection import (
    CoefficientVector,
    SampledTrajectory,
    chebyshev_quadrature_nodes,
    coeff_array,
    reconstruct,
    resample_to_nodes,
)

DEFAULT_QUANTILE = 0.999

# Fixed column order of serialized reports.
REPORT_COLUMNS = ("id", "cd", "christoffel", "threshold", "verdict", "baseline_l2")


@dataclass(frozen=True)
class Threshold:
    """A calibrated decision level tau."""

    value: float
    method: str
    calibration_size: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value <= 0.0:
            raise InputError(f"threshold must be finite and > 0, got {self.value!r}")


@dataclass(frozen=True)
class ScoreReport:
    """Verdict and scores for one probe trajectory."""

    id: str | None
    cd: float
    christoffel: float
    threshold: float
    verdict: str
    baseline_l2: float | None = None

    def __post_init__(self) -> None:
        expected = "Outlier" if self.cd > self.threshold else "Inlier"
        if self.verdict != expected:
            raise InputError(
                f"inconsistent report: cd={self.cd}, threshold={self.threshold} "
                f"demands verdict {expected!r}, got {self.verdict!r}"
            )


def report_header() -> str:
    return ",".join(REPORT_COLUMNS)


def report_line(report: ScoreReport) -> str:
    """One report as a CSV line, columns in `REPORT_COLUMNS` order."""
    fields = [
        report.id or "",
        repr(report.cd),
        repr(report.christoffel),
        repr(report.threshold),
        report.verdict,
        "" if report.baseline_l2 is None else repr(report.baseline_l2),
    ]
    return ",".join(fields)


def nearest_rank_quantile(values, q: float) -> float:
    """Nearest-rank (no interpolation) q-quantile, q in (0, 1]."""
    vals = np.sort(np.asarray(values, dtype=float))
    if vals.size == 0:
        raise InputError("cannot take a quantile of an empty sample")
    if not (0.0 < q <= 1.0):
        raise InputError(f"quantile order must lie in (0, 1], got {q}")
    rank = max(1, math.ceil(q * vals.size))
    return float(vals[rank - 1])


def calibrate(
    model: ChristoffelModel,
    data: TrajectoryDataset | None = None,
    method: str = "quantile",
    param: float | None = None,
) -> Threshold:
    """Calibrate a decision threshold.

    ``method="quantile"`` uses the nearest-rank ``param``-quantile (default
    0.999) of the CD values over ``data`` — normally the training set.
    ``method="multiple"`` ignores ``data`` and returns ``param * m``
    (``param`` = alpha >= 1, default 10).
    """
    if method == "quantile":
        q = DEFAULT_QUANTILE if param is None else float(param)
        if data is None or len(data) == 0:
            raise InputError("quantile calibration needs a non-empty calibration set")
        cds = _model.cd_values(model, data.coefficient_matrix(model.n))
        return Threshold(
            value=nearest_rank_quantile(cds, q),
            method=f"quantile({q:g})",
            calibration_size=len(data),
        )
    if method == "multiple":
        alpha = 10.0 if param is None else float(param)
        if alpha < 1.0:
            raise InputError(f"threshold multiple must be >= 1, got {alpha}")
        return Threshold(
            value=alpha * model.size,
            method=f"multiple({alpha:g})",
            calibration_size=0,
        )
    raise InputError(f"unknown threshold method {method!r} (want 'quantile' or 'multiple')")


def classify(
    model: ChristoffelModel,
    threshold: Threshold,
    c,
    baseline_l2: float | None = None,
) -> ScoreReport:
    """Score one probe and compare against the threshold.

    Ties sit on the inlier side: a probe is an outlier only when its CD
    value strictly exceeds tau.
    """
    cd = _model.cd_value(model, c)
    chris = 0.0 if not math.isfinite(cd) else (1.0 / cd if cd > 0.0 else math.inf)
    verdict = "Outlier" if cd > threshold.value else "Inlier"
    probe_id = c.id if isinstance(c, CoefficientVector) else None
    return ScoreReport(
        id=probe_id, cd=cd, christoffel=chris,
        threshold=threshold.value, verdict=verdict, baseline_l2=baseline_l2,
    )


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def _values_on_nodes(obj, nodes: np.ndarray, prefer_coeffs: bool) -> np.ndarray:
    """Evaluate a dataset entry or probe at unit-interval nodes.

    ``obj`` may be a SampledTrajectory, a CoefficientVector, a raw
    coefficient sequence, or a dataset entry pair.  Curves are linearly
    interpolated; coefficient vectors are evaluated exactly as truncated
    series.  ``prefer_coeffs`` picks which representation wins when a
    dataset entry carries both.
    """
    if isinstance(obj, tuple) and len(obj) == 2:
        traj, coeffs = obj
        if prefer_coeffs:
            obj = coeffs if coeffs is not None else traj
        else:
            obj = traj if traj is not None else coeffs
    if isinstance(obj, SampledTrajectory):
        return resample_to_nodes(obj, nodes)
    return reconstruct(coeff_array(obj), nodes)


def nearest_trajectory_score(
    data: TrajectoryDataset, f, quad_points: int = 256
) -> float:
    """Smallest quadrature-weighted L2 distance from the probe to the database.

    Probe and references are all evaluated on the same Gauss-Chebyshev grid
    (curves by linear interpolation, so a probe that *is* a database curve
    scores exactly 0), and the distance uses the probability weight:
    ||f - g||^2 ~ (1/M) sum_j (f(t_j) - g(t_j))^2.
    """
    if len(data) == 0:
        raise InputError("nearest-trajectory score needs a non-empty database")
    nodes = chebyshev_quadrature_nodes(quad_points)
    fvals = _values_on_nodes(f, nodes, prefer_coeffs=False)
    best = math.inf
    for entry in data.entries:
        gvals = _values_on_nodes(entry, nodes, prefer_coeffs=False)
        dist2 = float(np.mean((fvals - gvals) ** 2))
        if dist2 < best:
            best = dist2
    return math.sqrt(best)


@dataclass(frozen=True)
class PointwiseChristoffel:
    """Bivariate Christoffel model on the reference point cloud {(t, g(t))}.

    This is the classical finite-dimensional construction, realized as the
    two-variable special case of the same machinery: monomials in (t, x) of
    total degree <= d2, moment matrix averaged over every (node, curve)
    pair, default diagonal regularization.
    """

    d2: int
    nodes: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    epsilon: float
    cloud_floor: float  # smallest pointwise Christoffel value on the cloud itself

    @classmethod
    def fit(cls, data: TrajectoryDataset, d2: int, quad_points: int = 129) -> "PointwiseChristoffel":
        if len(data) == 0:
            raise InputError("the pointwise baseline needs a non-empty database")
        nodes = chebyshev_quadrature_nodes(quad_points)
        rows = [_values_on_nodes(entry, nodes, prefer_coeffs=True) for entry in data.entries]
        G = np.stack(rows)                      # (N, M) curve values
        bas = enumerate_basis(d2, 2)
        pts = np.stack([np.tile(nodes, G.shape[0]), G.ravel()], axis=1)
        if not np.all(np.isfinite(pts)):
            raise NumericalError("the reference point cloud contains non-finite values")
        V = eval_monomial_matrix(pts, bas)
        count = V.shape[0]
        eps = _model.DEFAULT_EPSILON_SCALE * float(np.sum(V * V)) / (count * len(bas))
        s, Q = _model._factor_from_data(V, count, eps)
        cloud_cd = _model._cd_from_factor(s, Q, V)
        floor = float(1.0 / cloud_cd.max())
        return cls(
            d2=int(d2), nodes=nodes, eigenvalues=s, eigenvectors=Q,
            epsilon=eps, cloud_floor=floor,
        )

    def profile(self, f) -> np.ndarray:
        """Pointwise Christoffel values Lambda(t_j, f(t_j)) along the probe."""
        fvals = _values_on_nodes(f, self.nodes, prefer_coeffs=True)
        bas = enumerate_basis(self.d2, 2)
        pts = np.stack([self.nodes, fvals], axis=1)
        cd = _model._cd_from_factor(self.eigenvalues, self.eigenvectors,
                                    eval_monomial_matrix(pts, bas))
        return 1.0 / cd

    def fraction_below(self, f, delta: float) -> float:
        """Fraction of nodes where the probe's pointwise value drops under delta."""
        if delta < 0.0 or not math.isfinite(delta):
            raise InputError(f"delta must be finite and >= 0, got {delta!r}")
        lam = self.profile(f)
        return float(np.mean(lam < delta))


def naive_pointwise_score(
    data: TrajectoryDataset, f, d2: int, delta: float, quad_points: int = 129
) -> float:
    """Pointwise-baseline score: fraction of quadrature nodes where the
    probe's bivariate Christoffel value falls below delta.

    delta = 0 always yields 0 (the values are nonnegative).  No default
    decision rule is attached to the fraction; callers choose delta — the
    in-cloud floor (`PointwiseChristoffel.cloud_floor`) is the largest
    delta that does not flag the reference data itself.
    """
    cloud = PointwiseChristoffel.fit(data, d2, quad_points)
    return cloud.fraction_below(f, delta)
