import json
from pathlib import Path

import numpy as np
import oracles
import pytest

from lowlight.ops import (box_mean, gaussian_convolve, gaussian_kernel1d,
                          gradient, gradient_transpose)


def test_gradient_constant_is_zero():
    f = np.full((7, 9), 3.25)
    for axis in "hv":
        assert np.all(gradient(f, axis) == 0.0)


def test_gradient_hand_case_row():
    # forward differences with replicate edge: [0,1,3] -> [1,2,0]
    f = np.array([[0.0, 1.0, 3.0]])
    np.testing.assert_allclose(gradient(f, "h"), [[1.0, 2.0, 0.0]])
    assert np.all(gradient(f, "v") == 0.0)


def test_gradient_matches_loop_oracle():
    rng = np.random.default_rng(3)
    f = rng.random((6, 11))
    for axis in "hv":
        np.testing.assert_allclose(gradient(f, axis), oracles.forward_diff(f, axis))


def test_gradient_adjoint_identity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        f = rng.standard_normal((5, 7))
        g = rng.standard_normal((5, 7))
        for axis in "hv":
            lhs = float(np.sum(gradient(f, axis) * g))
            rhs = float(np.sum(f * gradient_transpose(g, axis)))
            assert abs(lhs - rhs) < 1e-10


def test_gradient_matches_shared_convention_fixture():
    # the same frozen values are asserted by the denoiser package's tests
    data = json.loads((Path(__file__).parent / "data"
                       / "gradient_fixture.json").read_text())
    field = np.array(data["field"])
    np.testing.assert_array_equal(gradient(field, "h"), np.array(data["grad_h"]))
    np.testing.assert_array_equal(gradient(field, "v"), np.array(data["grad_v"]))
    tv = float(np.sum(gradient(field, "h") ** 2 + gradient(field, "v") ** 2))
    assert tv == data["tv_sum_of_squares"]


def test_gradient_rejects_unknown_axis_and_mode():
    f = np.zeros((3, 3))
    with pytest.raises(ValueError):
        gradient(f, "x")
    with pytest.raises(ValueError):
        gradient(f, "h", mode="wrap")


def test_gaussian_rejects_nonpositive_sigma():
    with pytest.raises(ValueError):
        gaussian_convolve(np.zeros((4, 4)), 0.0)
    with pytest.raises(ValueError):
        gaussian_convolve(np.zeros((4, 4)), -1.5)


def test_gaussian_kernel_normalized_and_truncated():
    for sigma in (0.5, 1.5, 3.0):
        k = gaussian_kernel1d(sigma)
        assert len(k) == 2 * int(np.ceil(3 * sigma)) + 1
        assert abs(k.sum() - 1.0) < 1e-14


def test_gaussian_constant_fixed_point():
    f = np.full((10, 12), 0.731)
    np.testing.assert_allclose(gaussian_convolve(f, 2.0), f, atol=1e-12)


def test_gaussian_impulse_gives_separable_kernel():
    sigma = 1.0
    k = oracles.gaussian_kernel(sigma)
    n = 2 * len(k) + 5
    f = np.zeros((n, n))
    c = n // 2
    f[c, c] = 1.0
    out = gaussian_convolve(f, sigma)
    assert abs(out[c, c] - k[len(k) // 2] ** 2) < 1e-14
    r = len(k) // 2
    np.testing.assert_allclose(out[c - r:c + r + 1, c - r:c + r + 1],
                               np.outer(k, k), atol=1e-14)


def test_gaussian_preserves_interior_mass():
    rng = np.random.default_rng(4)
    f = np.zeros((40, 40))
    f[15:25, 15:25] = rng.random((10, 10))
    out = gaussian_convolve(f, 1.5)
    assert abs(out.sum() - f.sum()) < 1e-9


def test_gaussian_matches_loop_oracle():
    rng = np.random.default_rng(5)
    f = rng.random((7, 9))
    ours = gaussian_convolve(f, 1.2)
    ref = oracles.convolve2d_replicate(f, oracles.gaussian_kernel(1.2))
    np.testing.assert_allclose(ours, ref, atol=1e-12)


def test_smoothers_are_linear():
    rng = np.random.default_rng(6)
    f = rng.random((8, 8))
    g = rng.random((8, 8))
    a, b = 2.5, -1.25
    for op in (lambda x: gaussian_convolve(x, 1.7), lambda x: box_mean(x, 2)):
        np.testing.assert_allclose(op(a * f + b * g), a * op(f) + b * op(g),
                                   atol=1e-10)


def test_box_mean_radius_zero_is_identity():
    rng = np.random.default_rng(7)
    f = rng.random((5, 6))
    np.testing.assert_array_equal(box_mean(f, 0), f)


def test_box_mean_constant_fixed_point():
    f = np.full((9, 4), 0.2)
    np.testing.assert_allclose(box_mean(f, 3), f, atol=1e-12)


def test_box_mean_center_impulse():
    f = np.zeros((3, 3))
    f[1, 1] = 9.0
    assert abs(box_mean(f, 1)[1, 1] - 1.0) < 1e-12


def test_box_mean_matches_loop_oracle():
    rng = np.random.default_rng(8)
    f = rng.random((9, 7))
    for radius in (1, 2, 4):
        np.testing.assert_allclose(box_mean(f, radius),
                                   oracles.box_mean_loops(f, radius), atol=1e-10)


def test_box_mean_rejects_negative_radius():
    with pytest.raises(ValueError):
        box_mean(np.zeros((3, 3)), -1)
