import math

import numpy as np
import pytest

from confusion_attack.objective import ObjectiveConfig, entropy_objective
from confusion_attack.surrogate import constant_objective, linear_objective
from confusion_attack.toy import (
    ToyModelSpec,
    clean_toy_image,
    finite_diff_gradient,
    toy_forward,
    toy_gradient,
)


def toy_logits_reference(phase, image):
    """Nested-loop evaluation of the toy captioner, no numpy."""
    feats = []
    for c in range(3):
        for r in range(4):
            for q in range(4):
                total = 0.0
                for i in range(8):
                    for j in range(8):
                        total += image[c][8 * r + i][8 * q + j]
                feats.append(total / 64 - 0.5)
    return [sum(math.sin(0.7 * (v * 48 + f + 1) + phase) * feats[f] for f in range(48)) for v in range(64)]


def test_gray_gives_zero_logits():
    z = toy_forward(ToyModelSpec(0.0), np.full((3, 32, 32), 0.5))
    assert np.all(z == 0.0)


def test_white_image_matches_reference():
    z = toy_forward(ToyModelSpec(0.0), np.ones((3, 32, 32)))
    ref = toy_logits_reference(0.0, np.ones((3, 32, 32)).tolist())
    np.testing.assert_allclose(z, ref, atol=1e-12)
    # 0.5 * sum_f W[v, f]
    np.testing.assert_allclose(z[:3], [0.5 * sum(math.sin(0.7 * (v * 48 + f + 1)) for f in range(48)) for v in range(3)])


def test_clean_image_matches_reference(clean_image):
    for phase in (0.0, 1.0, 2.0):
        ref = toy_logits_reference(phase, clean_image.tolist())
        np.testing.assert_allclose(toy_forward(ToyModelSpec(phase), clean_image), ref, atol=1e-12)


def test_phases_differ(clean_image):
    assert not np.allclose(toy_forward(ToyModelSpec(0.0), clean_image), toy_forward(ToyModelSpec(1.0), clean_image))


def test_clean_image_formula():
    x = clean_toy_image()
    assert x.shape == (3, 32, 32)
    assert x[0, 0, 0] == 0.0
    assert x[2, 31, 31] == 1.0
    assert x[1, 3, 4] == pytest.approx(2 * 7 / 186)


def test_linear_in_features(rng):
    spec = ToyModelSpec(1.0)
    a, b = rng.random((3, 32, 32)), rng.random((3, 32, 32))
    np.testing.assert_allclose(toy_forward(spec, (a + b) / 2), (toy_forward(spec, a) + toy_forward(spec, b)) / 2, atol=1e-12)


def test_constant_objective_gradient(rng):
    g = toy_gradient(ToyModelSpec(0.0), rng.random((3, 32, 32)), constant_objective(3.0))
    assert np.all(g == 0)


def test_entropy_gradient_vanishes_at_gray():
    g = toy_gradient(ToyModelSpec(0.0), np.full((3, 32, 32), 0.5), entropy_objective(ObjectiveConfig()))
    assert np.abs(g).max() < 1e-15


def test_sum_objective_gradient_constant(rng, toy_a):
    obj = linear_objective(np.ones(64))
    g1 = toy_a.input_gradient(rng.random((3, 32, 32)), "", obj)
    g2 = toy_a.input_gradient(rng.random((3, 32, 32)), "", obj)
    np.testing.assert_array_equal(g1, g2)
    # each pixel sees (1/64) * sum_v W[v, f] of its cell feature
    w = toy_a.spec.weights
    assert g1[1, 9, 17] == pytest.approx(w[:, 16 + 1 * 4 + 2].sum() / 64)


def test_linear_objective_finite_differences_exact(toy_b, rng):
    x = rng.random((3, 32, 32))
    obj = linear_objective(rng.normal(size=64))
    np.testing.assert_allclose(finite_diff_gradient(toy_b, x, obj, 1e-3), toy_b.input_gradient(x, "", obj), atol=1e-8)


def test_finite_difference_error_is_second_order(toy_a, rng):
    x = rng.random((3, 32, 32))
    # low temperature gives visible curvature
    obj = entropy_objective(ObjectiveConfig(k=50, temperature=0.02))
    exact = toy_a.input_gradient(x, "", obj)
    err = [np.abs(finite_diff_gradient(toy_a, x, obj, h) - exact).max() for h in (0.02, 0.01)]
    assert 3.0 < err[0] / err[1] < 5.0


def test_finite_difference_zero_objective(toy_a, clean_image):
    assert np.all(finite_diff_gradient(toy_a, clean_image, constant_objective()) == 0)


def test_entropy_gradient_relative_error(toy_a, toy_b, rng):
    obj = entropy_objective(ObjectiveConfig())
    for model in (toy_a, toy_b):
        x = rng.random((3, 32, 32))
        exact = model.input_gradient(x, "", obj)
        fd = finite_diff_gradient(model, x, obj, 1e-3)
        assert np.abs(exact - fd).max() / np.abs(fd).max() <= 1e-3
