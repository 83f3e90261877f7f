"""trajcf: functional anomaly detection via Christoffel-Darboux scores.

Curves are embedded as orthonormal Chebyshev coefficient vectors; a
reference database induces an empirical moment matrix over the monomials
of bounded algebraic and harmonic degree; a probe's anomaly score is the
quadratic form of its monomial vector against the (regularized) inverse
moment matrix.  On the reference population that score averages exactly
the basis dimension — far away it explodes, which is the detection signal.
"""

from .basis import (
    BasisEnumeration,
    MultiIndex,
    basis_size,
    enumerate_basis,
    eval_monomial,
    eval_monomial_matrix,
    eval_monomial_vector,
)
from .errors import InputError, MismatchError, NumericalError, TrajcfError
from .model import (
    ChristoffelModel,
    TrajectoryDataset,
    cd_value,
    cd_value_after_update,
    cd_values,
    christoffel_value,
    downdate,
    extremal_polynomial,
    fit,
    kernel,
    load,
    save,
    update,
)
from .projection import (
    CoefficientVector,
    SampledTrajectory,
    chebyshev_quadrature_nodes,
    project,
    reconstruct,
    resample_to_nodes,
)
from .scoring import (
    PointwiseChristoffel,
    ScoreReport,
    Threshold,
    calibrate,
    classify,
    naive_pointwise_score,
    nearest_trajectory_score,
)
from .synth import SynthSpec, SyntheticExperiment, generate_example1, generate_example2, sample_ball

__version__ = "0.1.0"

__all__ = [
    "BasisEnumeration", "MultiIndex", "basis_size", "enumerate_basis",
    "eval_monomial", "eval_monomial_matrix", "eval_monomial_vector",
    "InputError", "MismatchError", "NumericalError", "TrajcfError",
    "ChristoffelModel", "TrajectoryDataset", "cd_value", "cd_value_after_update",
    "cd_values", "christoffel_value", "downdate", "extremal_polynomial",
    "fit", "kernel", "load", "save", "update",
    "CoefficientVector", "SampledTrajectory", "chebyshev_quadrature_nodes",
    "project", "reconstruct", "resample_to_nodes",
    "PointwiseChristoffel", "ScoreReport", "Threshold", "calibrate", "classify",
    "naive_pointwise_score", "nearest_trajectory_score",
    "SynthSpec", "SyntheticExperiment", "generate_example1", "generate_example2",
    "sample_ball",
    "__version__",
]
