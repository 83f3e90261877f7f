import math

import numpy as np
import pytest

from trajcf.errors import InputError
from trajcf.model import fit, cd_value, default_epsilon
from trajcf.projection import reconstruct
from trajcf.synth import (
    CURVE_SAMPLE_POINTS,
    NOMINAL_COEFFS,
    SynthSpec,
    generate_example1,
    generate_example2,
    sample_ball,
)


# --- ball sampling ---------------------------------------------------------------

def test_ball_draws_never_leave_the_ball():
    rng = np.random.default_rng(0)
    for dim, radius in ((1, 0.5), (3, 2.0), (4, 0.1)):
        draws = np.stack([sample_ball(dim, radius, rng) for _ in range(20_000)])
        norms = np.linalg.norm(draws, axis=1)
        assert norms.max() <= radius
        assert norms.min() > 0.0


def test_ball_radius_zero_is_the_origin():
    rng = np.random.default_rng(1)
    assert np.array_equal(sample_ball(4, 0.0, rng), np.zeros(4))


def test_ball_radial_law():
    # for the uniform ball law, (|x| / r)**dim is uniform on (0, 1)
    rng = np.random.default_rng(2)
    dim, radius = 4, 0.1
    draws = np.stack([sample_ball(dim, radius, rng) for _ in range(100_000)])
    u = (np.linalg.norm(draws, axis=1) / radius) ** dim
    assert abs(u.mean() - 0.5) < 0.01
    assert abs(np.mean(u < 0.25) - 0.25) < 0.01


def test_ball_rejects_bad_parameters():
    rng = np.random.default_rng(3)
    with pytest.raises(InputError):
        sample_ball(0, 1.0, rng)
    with pytest.raises(InputError):
        sample_ball(3, -1.0, rng)
    with pytest.raises(InputError):
        sample_ball(3, math.inf, rng)


# --- family generation -----------------------------------------------------------

def test_generation_is_deterministic():
    a = generate_example1(40, seed=11)
    b = generate_example1(40, seed=11)
    Ca = a.dataset.coefficient_matrix(5)
    Cb = b.dataset.coefficient_matrix(5)
    assert np.array_equal(Ca, Cb)
    assert np.array_equal(a.outlier.coeffs, b.outlier.coeffs)


def test_per_index_streams_make_prefixes_agree():
    # trajectory i depends only on (seed, i), not on how many others exist
    small = generate_example1(30, seed=5).dataset.coefficient_matrix(5)
    large = generate_example1(60, seed=5).dataset.coefficient_matrix(5)
    assert np.array_equal(small, large[:30])


def test_different_seeds_differ():
    a = generate_example1(10, seed=0).dataset.coefficient_matrix(5)
    b = generate_example1(10, seed=1).dataset.coefficient_matrix(5)
    assert not np.array_equal(a, b)


def test_inliers_stay_in_the_small_ball():
    exp = generate_example1(500, seed=4)
    C = exp.dataset.coefficient_matrix(5)
    g0 = np.asarray(NOMINAL_COEFFS)
    assert np.allclose(C[:, 4], 0.0, atol=0.0)          # fifth coordinate untouched
    dist = np.linalg.norm(C - g0, axis=1)
    assert dist.max() <= 0.1
    assert dist.min() > 0.0


def test_outlier_uses_the_larger_radius():
    exp = generate_example1(200, seed=9)
    g0 = np.asarray(NOMINAL_COEFFS)
    eta = exp.outlier.coeffs - g0
    assert eta[4] == 0.0
    assert np.linalg.norm(eta) <= 1.0


def test_curves_match_their_coefficients():
    exp = generate_example1(5, seed=2)
    traj, cv = exp.dataset.entries[3]
    assert traj.times.size == CURVE_SAMPLE_POINTS
    assert np.all(np.diff(traj.times) > 0)
    assert np.allclose(traj.values, reconstruct(cv.coeffs, traj.times), atol=1e-14)
    assert traj.id == cv.id == "g0003"


def test_nominal_curve_is_the_average_of_three_waves():
    exp = generate_example1(1, seed=0)
    t = np.linspace(-1.0, 1.0, 7)
    target = (np.polynomial.chebyshev.chebval(t, [0, 1])
              + np.polynomial.chebyshev.chebval(t, [0, 0, 1])
              + np.polynomial.chebyshev.chebval(t, [0, 0, 0, 1])) / 3.0
    assert np.allclose(reconstruct(exp.nominal.coeffs, t), target, atol=1e-15)


def test_second_family_outlier_carries_the_extra_harmonic():
    exp = generate_example2(50, seed=0)
    assert exp.outlier.coeffs[4] == pytest.approx(0.1 / math.sqrt(2.0), rel=1e-15)
    assert exp.outlier.coeffs[:4] == pytest.approx(list(NOMINAL_COEFFS[:4]), abs=0.0)


def test_second_family_drives_a_vanishing_moment_row():
    # the inliers' fifth coordinate is identically zero, so the fitted
    # moment matrix at harmonic degree 5 has an exactly vanishing last
    # row/column and the extra-harmonic outlier scores enormously.
    exp = generate_example2(300, seed=0)
    model = fit(exp.dataset, 1, 5)
    M = model.moment_matrix()
    assert np.max(np.abs(M[-1, :])) <= 1e-14
    assert np.max(np.abs(M[:, -1])) <= 1e-14
    assert cd_value(model, exp.outlier) > 6000.0


def test_default_epsilon_matches_the_trace_rule():
    exp = generate_example1(100, seed=6)
    model = fit(exp.dataset, 2, 3)
    expected = default_epsilon(model.moment_sum, model.sample_count)
    assert model.epsilon == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(
        1e-8 * np.trace(model.moment_matrix()) / model.size, rel=1e-12
    )


# --- parameter validation ----------------------------------------------------------

def test_spec_validation():
    with pytest.raises(InputError):
        SynthSpec(nominal=(0.0, 1.0), perturbed_coords=(0,), radius=-1.0,
                  sample_count=10, seed=0)
    with pytest.raises(InputError):
        SynthSpec(nominal=(0.0, 1.0), perturbed_coords=(0,), radius=0.1,
                  sample_count=0, seed=0)
    with pytest.raises(InputError):
        SynthSpec(nominal=(0.0, 1.0), perturbed_coords=(5,), radius=0.1,
                  sample_count=10, seed=0)
    with pytest.raises(InputError):
        SynthSpec(nominal=(0.0, 1.0), perturbed_coords=(0,), radius=0.1,
                  sample_count=10, seed=-1)


def test_generator_rejects_bad_counts():
    with pytest.raises(InputError):
        generate_example1(0, seed=0)
    with pytest.raises(InputError):
        generate_example2(-3, seed=0)
