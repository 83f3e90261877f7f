"""Empirical moment matrix, its factorization, and the anomaly kernel.

Given reference curves embedded as coefficient vectors g_1 .. g_N, the model
of order (d, n) averages outer products of their monomial vectors,

    M = (1/N) * sum_i v(g_i) v(g_i)^T          (m x m, m = binomial(n+d, n)),

optionally shifted to M + eps*I, and exposes the quadratic form

    cd_value(h) = v(h)^T (M + eps*I)^{-1} v(h),

whose reciprocal (the Christoffel value) is small off the data's support and
of order m on it: the in-sample average of cd_value is exactly m when
eps = 0.  That dichotomy is the anomaly score.

Numerically the model keeps the raw sum S = N*M (exact bookkeeping for
updates and persistence) together with a spectral factorization
M + eps*I = Q diag(s) Q^T.  At fit time the factorization is taken from the
singular values of the row-scaled data matrix [V/sqrt(N); sqrt(eps)*I],
which avoids squaring the condition number the way forming S first does;
operations that only have S available (load, update, downdate) use the
symmetric eigendecomposition of S/N + eps*I.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import basis as _basis
from . import projection as _projection
from .basis import BasisEnumeration, enumerate_basis, eval_monomial_matrix
from .errors import InputError, MismatchError, NumericalError
from .projection import CoefficientVector, SampledTrajectory, coeff_array

# Relative eigenvalue floor below which an unregularized moment matrix is
# declared singular.  Legitimate dense datasets sit many decades above it.
SINGULAR_RCOND = 1e-15

# Scale factor of the default regularization eps = 1e-8 * trace(S/N) / m.
DEFAULT_EPSILON_SCALE = 1e-8

_FORMAT_HEADER = "trajcf model 1"
_BASIS_ORDERING = "graded-lex"


# ---------------------------------------------------------------------------
# dataset container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryDataset:
    """Reference database: curves and/or their coefficient vectors.

    Each entry pairs an optional SampledTrajectory with its
    CoefficientVector; datasets built from coefficient files carry None in
    the curve slot.
    """

    entries: tuple[tuple[SampledTrajectory | None, CoefficientVector], ...]
    domain: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self) -> None:
        if not self.entries:
            raise InputError("a trajectory dataset cannot be empty")
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def coefficient_vectors(self) -> tuple[CoefficientVector, ...]:
        return tuple(cv for _, cv in self.entries)

    def coefficient_matrix(self, n: int) -> np.ndarray:
        """First n coefficients of every entry, stacked (N, n)."""
        short = [cv.id or f"#{i}" for i, (_, cv) in enumerate(self.entries) if cv.n_max < n]
        if short:
            raise InputError(
                f"{len(short)} coefficient vector(s) have fewer than {n} entries "
                f"(first offender: {short[0]})"
            )
        return np.stack([cv.coeffs[:n] for _, cv in self.entries])

    @classmethod
    def from_coefficients(cls, coeffs, domain=(-1.0, 1.0), ids=None) -> "TrajectoryDataset":
        """Build a dataset from an (N, n) array (or list of vectors)."""
        rows = [coeff_array(c) for c in coeffs]
        if ids is None:
            ids = [None] * len(rows)
        entries = tuple(
            (None, c if isinstance(c, CoefficientVector) else CoefficientVector(r, id=i))
            for c, r, i in zip(coeffs, rows, ids)
        )
        return cls(entries=entries, domain=(float(domain[0]), float(domain[1])))

    @classmethod
    def from_trajectories(cls, trajectories, n: int, quad_points: int | None = None) -> "TrajectoryDataset":
        """Project curves to n coefficients and pair them up."""
        trajectories = list(trajectories)
        if not trajectories:
            raise InputError("a trajectory dataset cannot be empty")
        domain = trajectories[0].domain
        for tr in trajectories:
            if tr.domain != domain:
                raise InputError(
                    f"trajectories mix domains {domain} and {tr.domain}; "
                    "project them separately"
                )
        entries = tuple(
            (tr, _projection.project(tr, n, quad_points)) for tr in trajectories
        )
        return cls(entries=entries, domain=domain)


# ---------------------------------------------------------------------------
# factorization helpers
# ---------------------------------------------------------------------------

def default_epsilon(moment_sum: np.ndarray, sample_count: int) -> float:
    """Scale-relative default shift: 1e-8 * trace(S/N) / m."""
    m = moment_sum.shape[0]
    return DEFAULT_EPSILON_SCALE * float(np.trace(moment_sum)) / (sample_count * m)


def _factor_from_data(V: np.ndarray, N: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of V^T V / N + eps*I via the SVD of the stacked data matrix."""
    B = V / math.sqrt(N)
    if eps > 0.0:
        B = np.vstack([B, math.sqrt(eps) * np.eye(V.shape[1])])
    _, sig, QT = np.linalg.svd(B, full_matrices=False)
    if sig.size < V.shape[1]:  # more columns than rows: pad explicit zeros
        pad = V.shape[1] - sig.size
        sig = np.concatenate([sig, np.zeros(pad)])
        QT = np.vstack([QT, np.zeros((pad, V.shape[1]))])
    order = np.argsort(sig)  # ascending, matching eigh's convention
    return sig[order] ** 2, QT[order].T


def _factor_from_moments(S: np.ndarray, N: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of S/N + eps*I by symmetric eigendecomposition."""
    M = S / N
    M = (M + M.T) / 2.0
    if eps > 0.0:
        M = M + eps * np.eye(M.shape[0])
    s, Q = np.linalg.eigh(M)
    return s, Q


def _require_invertible(s: np.ndarray, eps: float) -> None:
    if eps > 0.0:
        return
    smax = float(s[-1]) if s.size else 0.0
    smin = float(s[0]) if s.size else 0.0
    if smax <= 0.0 or smin <= SINGULAR_RCOND * smax:
        raise NumericalError(
            f"moment matrix is numerically singular at epsilon = 0 "
            f"(smallest eigenvalue {smin:.6e}, largest {smax:.6e}); "
            f"refit with epsilon > 0"
        )


def _cd_from_factor(s: np.ndarray, Q: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Quadratic forms v^T (Q diag(s) Q^T)^{-1} v for each row v of V."""
    W = Q.T @ V.T
    with np.errstate(over="ignore", divide="ignore"):  # inf is a valid verdict
        return np.sum(W * W / s[:, None], axis=0)


# ---------------------------------------------------------------------------
# the model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChristoffelModel:
    """Fitted anomaly model of order (d, n).

    Immutable: update/downdate return new instances, so concurrent readers
    are never invalidated.
    """

    d: int
    n: int
    basis: BasisEnumeration = field(repr=False)
    epsilon: float
    sample_count: int
    moment_sum: np.ndarray = field(repr=False)       # S = sum_i v(g_i) v(g_i)^T
    eigenvalues: np.ndarray = field(repr=False)      # of S/N + eps*I, ascending
    eigenvectors: np.ndarray = field(repr=False)     # matching columns
    domain: tuple[float, float] = (-1.0, 1.0)
    provenance: str = "fit"

    def __post_init__(self) -> None:
        self.moment_sum.setflags(write=False)
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def size(self) -> int:
        """Basis dimension m = binomial(n + d, n)."""
        return len(self.basis)

    def moment_matrix(self) -> np.ndarray:
        """The averaged (unregularized) moment matrix S / N."""
        return self.moment_sum / self.sample_count

    def _probe_matrix(self, coeffs) -> np.ndarray:
        """Monomial vectors of one or many probes, with mismatch checks."""
        arr = np.asarray(coeffs, dtype=float)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise MismatchError(f"probe array has unsupported shape {arr.shape}")
        if arr.shape[1] < self.n:
            raise MismatchError(
                f"probe supplies {arr.shape[1]} coefficients but the model "
                f"has harmonic degree {self.n}"
            )
        return eval_monomial_matrix(arr[:, : self.n], self.basis)


def fit(data: TrajectoryDataset, d: int, n: int, epsilon: float | None = None) -> ChristoffelModel:
    """Fit a model of order (d, n) on a reference dataset.

    Parameters
    ----------
    data : TrajectoryDataset
    d, n : int
        Algebraic / harmonic degree bounds.
    epsilon : float or None
        Diagonal shift applied to S/N.  None selects the scale-relative
        default 1e-8 * trace(S/N) / m; 0.0 demands a numerically
        nonsingular moment matrix and fails loudly otherwise.

    Raises
    ------
    InputError
        Empty dataset, short coefficient vectors, invalid degrees or
        epsilon, basis cap exceeded.
    NumericalError
        Singular moment matrix at epsilon = 0.
    """
    bas = enumerate_basis(d, n)
    C = data.coefficient_matrix(bas.n)
    N = len(data)
    V = eval_monomial_matrix(C, bas)
    S = V.T @ V
    S = (S + S.T) / 2.0
    if epsilon is None:
        eps = default_epsilon(S, N)
    else:
        eps = float(epsilon)
        if not math.isfinite(eps) or eps < 0.0:
            raise InputError(f"epsilon must be finite and >= 0, got {epsilon!r}")
    s, Q = _factor_from_data(V, N, eps)
    _require_invertible(s, eps)
    return ChristoffelModel(
        d=bas.d, n=bas.n, basis=bas, epsilon=eps, sample_count=N,
        moment_sum=S, eigenvalues=s, eigenvectors=Q,
        domain=data.domain, provenance="fit(svd-data)",
    )


def cd_value(model: ChristoffelModel, c) -> float:
    """Anomaly score v(c)^T (S/N + eps*I)^{-1} v(c); always >= 0."""
    V = model._probe_matrix(coeff_array(c))
    return float(_cd_from_factor(model.eigenvalues, model.eigenvectors, V)[0])


def cd_values(model: ChristoffelModel, coeff_matrix) -> np.ndarray:
    """Vectorized `cd_value` over the rows of an (N, >=n) array."""
    V = model._probe_matrix(coeff_matrix)
    return _cd_from_factor(model.eigenvalues, model.eigenvectors, V)


def christoffel_value(model: ChristoffelModel, c) -> float:
    """Reciprocal score 1 / cd_value; 0.0 if the score overflows.

    With the constant monomial in the basis and eps = 0 the value lies in
    [0, 1]: the constant polynomial 1 is feasible for the variational
    characterization, and the empirical measure has mass 1.
    """
    cd = cd_value(model, c)
    if not math.isfinite(cd):
        return 0.0
    return 1.0 / cd if cd > 0.0 else math.inf


def kernel(model: ChristoffelModel, c1, c2) -> float:
    """Evaluation kernel v(c1)^T (S/N + eps*I)^{-1} v(c2) (symmetric)."""
    V1 = model._probe_matrix(coeff_array(c1))
    V2 = model._probe_matrix(coeff_array(c2))
    W1 = model.eigenvectors.T @ V1[0]
    W2 = model.eigenvectors.T @ V2[0]
    return float(np.sum(W1 * W2 / model.eigenvalues))


def extremal_polynomial(model: ChristoffelModel, h) -> np.ndarray:
    """Coefficients (monomial basis) of the minimizer attaining the
    Christoffel value at h.

    The returned w satisfies w . v(h) = 1, and at eps = 0 its empirical
    second moment (1/N) sum_i (w . v(g_i))^2 equals christoffel_value(h).
    """
    V = model._probe_matrix(coeff_array(h))
    W = model.eigenvectors.T @ V[0]
    cd = float(np.sum(W * W / model.eigenvalues))
    if cd <= 0.0 or not math.isfinite(cd):
        raise NumericalError(f"cannot normalize the extremal polynomial: CD value {cd!r}")
    return model.eigenvectors @ (W / model.eigenvalues) / cd


# ---------------------------------------------------------------------------
# updates
# ---------------------------------------------------------------------------

def update(model: ChristoffelModel, c_new) -> ChristoffelModel:
    """Absorb one trajectory: S += v v^T, N += 1, refactorize.

    Exact bookkeeping plus an O(m^3) refactorization: with eps > 0 the
    regularized matrix is not a rank-one perturbation of its predecessor
    (the shift rescales with N), so refactorizing is the correct default.
    For the eps = 0 fast path see `cd_value_after_update`.
    """
    V = model._probe_matrix(coeff_array(c_new))
    S = model.moment_sum + np.outer(V[0], V[0])
    S = (S + S.T) / 2.0
    N = model.sample_count + 1
    s, Q = _factor_from_moments(S, N, model.epsilon)
    _require_invertible(s, model.epsilon)
    return replace(
        model, sample_count=N, moment_sum=S, eigenvalues=s, eigenvectors=Q,
        provenance="update(eigh-moments)",
    )


def downdate(model: ChristoffelModel, c_old) -> ChristoffelModel:
    """Remove one absorbed trajectory: S -= v v^T, N -= 1, refactorize.

    Fails if the decrement breaks positive semidefiniteness (i.e. the
    trajectory was never absorbed) or, at eps = 0, leaves a singular
    matrix.
    """
    if model.sample_count < 2:
        raise InputError("cannot downdate below one absorbed trajectory")
    V = model._probe_matrix(coeff_array(c_old))
    S = model.moment_sum - np.outer(V[0], V[0])
    S = (S + S.T) / 2.0
    N = model.sample_count - 1
    s, Q = _factor_from_moments(S, N, model.epsilon)
    # Smallest eigenvalue of S itself, recovered from the shifted spectrum.
    smin_S = N * (float(s[0]) - model.epsilon)
    tol = 1e-10 * max(float(np.trace(S)), 1.0)
    if smin_S < -tol:
        raise NumericalError(
            f"downdate breaks positive semidefiniteness (eigenvalue {smin_S:.6e}); "
            f"the trajectory does not belong to the absorbed set"
        )
    _require_invertible(s, model.epsilon)
    return replace(
        model, sample_count=N, moment_sum=S, eigenvalues=s, eigenvectors=Q,
        provenance="downdate(eigh-moments)",
    )


def cd_value_after_update(model: ChristoffelModel, c_new, probe) -> float:
    """CD value the probe would get after absorbing c_new, without
    refactorizing.

    Rank-one identity on N*M + v0 v0^T (exact only at eps = 0, where the
    regularizer does not interfere):

        cd'(g) = (N+1) * [ cd(g)/N - (K(g, g0)/N)^2 / (1 + cd(g0)/N) ].
    """
    if model.epsilon != 0.0:
        raise InputError("the rank-one fast path is exact only at epsilon = 0")
    N = model.sample_count
    cd_g = cd_value(model, probe)
    cd_0 = cd_value(model, c_new)
    k = kernel(model, probe, c_new)
    return (N + 1) * (cd_g / N - (k / N) ** 2 / (1.0 + cd_0 / N))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _format_float(x: float) -> str:
    return "%.17g" % x


def _payload_lines(model: ChristoffelModel) -> list[str]:
    created = model.provenance.split("(")[0]
    lines = [
        _FORMAT_HEADER,
        f"d {model.d}",
        f"n {model.n}",
        f"m {model.size}",
        f"epsilon {_format_float(model.epsilon)}",
        f"N {model.sample_count}",
        f"domain {_format_float(model.domain[0])} {_format_float(model.domain[1])}",
        f"basis {_BASIS_ORDERING}",
        f"created-by {created}",
        "S",
    ]
    for row in model.moment_sum:
        lines.append(" ".join(_format_float(x) for x in row))
    return lines


def save(model: ChristoffelModel, sink) -> None:
    """Write the model as a self-describing text document.

    All floats use 17 significant digits, so the decimal text round-trips
    float64 values bit-exactly; a sha256 checksum of the payload guards
    against truncation and corruption.  ``sink`` is a path or a text file
    object.
    """
    lines = _payload_lines(model)
    payload = "\n".join(lines) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    text = payload + f"checksum sha256 {digest}\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_scalar(fields: dict, key: str, conv):
    if key not in fields:
        raise InputError(f"model file is missing the '{key}' field")
    try:
        return conv(fields[key])
    except ValueError as exc:
        raise InputError(f"model file field '{key}' is malformed: {fields[key]!r}") from exc


def load(source) -> ChristoffelModel:
    """Read a model written by `save` and rebuild its factorization."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    if not text.strip():
        raise InputError("model file is empty")
    lines = text.splitlines()
    if lines[0] != _FORMAT_HEADER:
        raise InputError(
            f"unsupported model format header {lines[0]!r} (expected {_FORMAT_HEADER!r})"
        )
    if not lines[-1].startswith("checksum sha256 "):
        raise InputError("model file is missing its checksum line (truncated?)")
    stated = lines[-1].split()[-1]
    payload = "\n".join(lines[:-1]) + "\n"
    actual = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    if actual != stated:
        raise InputError("model file checksum mismatch: payload corrupted")

    fields: dict[str, str] = {}
    matrix_rows: list[list[float]] = []
    in_matrix = False
    for ln in lines[1:-1]:
        if in_matrix:
            try:
                matrix_rows.append([float(x) for x in ln.split()])
            except ValueError as exc:
                raise InputError(f"model file matrix row is malformed: {ln!r}") from exc
        elif ln.strip() == "S":
            in_matrix = True
        else:
            key, _, value = ln.partition(" ")
            fields[key] = value

    d = _parse_scalar(fields, "d", int)
    n = _parse_scalar(fields, "n", int)
    m = _parse_scalar(fields, "m", int)
    eps = _parse_scalar(fields, "epsilon", float)
    N = _parse_scalar(fields, "N", int)
    dom_parts = _parse_scalar(fields, "domain", str).split()
    if len(dom_parts) != 2:
        raise InputError(f"model file domain is malformed: {fields.get('domain')!r}")
    domain = (float(dom_parts[0]), float(dom_parts[1]))
    ordering = fields.get("basis", "")
    if ordering != _BASIS_ORDERING:
        raise InputError(f"unsupported basis ordering {ordering!r}")

    bas = enumerate_basis(d, n)
    if m != len(bas):
        raise InputError(
            f"model file says m = {m} but degree pair ({d}, {n}) has "
            f"{len(bas)} monomials"
        )
    if len(matrix_rows) != m or any(len(r) != m for r in matrix_rows):
        raise InputError(
            f"model file moment matrix is not {m} x {m} "
            f"({len(matrix_rows)} rows found)"
        )
    S = np.array(matrix_rows, dtype=float)
    if N < 1:
        raise InputError(f"model file sample count must be >= 1, got {N}")
    if eps < 0.0 or not math.isfinite(eps):
        raise InputError(f"model file epsilon must be finite and >= 0, got {eps}")
    s, Q = _factor_from_moments(S, N, eps)
    _require_invertible(s, eps)
    # Preserve the original creator so save(load(f)) reproduces f's bytes.
    created = fields.get("created-by", "fit")
    return ChristoffelModel(
        d=d, n=n, basis=bas, epsilon=eps, sample_count=N,
        moment_sum=S, eigenvalues=s, eigenvectors=Q,
        domain=domain, provenance=f"{created}(eigh-moments)",
    )


def dumps(model: ChristoffelModel) -> str:
    """The exact text `save` would write (handy for byte-level tests)."""
    buf = io.StringIO()
    save(model, buf)
    return buf.getvalue()
