import numpy as np
import pytest

from confusion_attack import surrogate
from confusion_attack.errors import AdapterError, CapabilityError, ConfigError
from confusion_attack.objective import ObjectiveConfig, entropy_objective
from confusion_attack.surrogate import (
    Preprocessing,
    SurrogateModel,
    bilinear_matrix,
    combine_objectives,
    constant_objective,
    forward_logits,
    get_model,
    input_gradient,
    linear_objective,
    register_model,
    registered_models,
    resize_bilinear,
    resize_bilinear_adjoint,
)
from confusion_attack.toy import finite_diff_gradient, toy_model


def test_toy_logit_length(toy_a, clean_image):
    assert forward_logits(toy_a, clean_image).shape == (64,)


def test_forward_deterministic_and_prompt_insensitive(toy_a, clean_image):
    z1 = forward_logits(toy_a, clean_image, "Describe this image.")
    z2 = forward_logits(toy_a, clean_image, "Describe this image.")
    z3 = forward_logits(toy_a, clean_image, "What is shown?")
    assert z1.tobytes() == z2.tobytes() == z3.tobytes()


def test_variants_differ(toy_a, toy_b, clean_image):
    assert not np.allclose(forward_logits(toy_a, clean_image), forward_logits(toy_b, clean_image))


def test_constant_objective_zero_gradient(toy_a, rng):
    assert np.all(input_gradient(toy_a, rng.random((3, 32, 32)), "", constant_objective(2.0)) == 0)


def test_gradient_linearity(toy_b, rng):
    x = rng.random((3, 40, 24))
    o1 = entropy_objective(ObjectiveConfig())
    o2 = linear_objective(rng.normal(size=64))
    g = input_gradient(toy_b, x, "", combine_objectives(2.5, o1, -0.75, o2))
    expected = 2.5 * input_gradient(toy_b, x, "", o1) - 0.75 * input_gradient(toy_b, x, "", o2)
    np.testing.assert_allclose(g, expected, rtol=1e-12, atol=1e-15)


def test_gradient_through_resize_matches_differences(toy_a, rng):
    x = rng.random((3, 54, 96))
    obj = entropy_objective(ObjectiveConfig(temperature=0.1))
    fd = finite_diff_gradient(toy_a, x, obj, 1e-3)
    g = input_gradient(toy_a, x, "", obj)
    assert np.abs(g - fd).max() / np.abs(fd).max() <= 1e-3


class TestResize:
    def test_identity(self, rng):
        x = rng.random((3, 7, 5))
        np.testing.assert_array_equal(resize_bilinear(x, 7, 5), x)
        np.testing.assert_array_equal(bilinear_matrix(6, 6), np.eye(6))

    def test_rows_sum_to_one(self):
        for n_out, n_in in [(32, 54), (32, 96), (64, 10), (3, 1)]:
            np.testing.assert_allclose(bilinear_matrix(n_out, n_in).sum(axis=1), 1.0)

    @pytest.mark.parametrize("shape", [(54, 96), (20, 13), (64, 64)])
    def test_matches_torch_interpolate(self, rng, shape):
        torch = pytest.importorskip("torch")
        x = rng.random((3, *shape))
        ref = torch.nn.functional.interpolate(
            torch.from_numpy(x)[None], size=(32, 32), mode="bilinear", align_corners=False, antialias=False
        )[0].numpy()
        np.testing.assert_allclose(resize_bilinear(x, 32, 32), ref, atol=1e-12)

    def test_adjoint_identity(self, rng):
        x = rng.random((3, 54, 96))
        g = rng.normal(size=(3, 32, 32))
        lhs = np.vdot(resize_bilinear(x, 32, 32), g)
        rhs = np.vdot(x, resize_bilinear_adjoint(g, 54, 96))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class Broken(SurrogateModel):
    model_id = "broken"
    family = "none"
    vocab_size = 4
    preprocessing = Preprocessing(2, 2)

    def native_logits(self, x, prompt):
        raise RuntimeError("weights missing")


class NoGrad(SurrogateModel):
    model_id = "nograd"
    family = "none"
    vocab_size = 4
    preprocessing = Preprocessing(2, 2)

    def native_logits(self, x, prompt):
        return np.zeros(4)


def test_adapter_error_carries_model_id():
    with pytest.raises(AdapterError) as info:
        Broken().forward_logits(np.zeros((3, 2, 2)))
    assert info.value.model_id == "broken"


def test_wrong_logit_length_is_adapter_error():
    class Short(NoGrad):
        vocab_size = 5

    with pytest.raises(AdapterError):
        Short().forward_logits(np.zeros((3, 2, 2)))


def test_capability_error():
    with pytest.raises(CapabilityError):
        NoGrad().input_gradient(np.zeros((3, 2, 2)), "", constant_objective())


def test_registry_contains_toys():
    assert {"toy-a", "toy-b", "toy-c"} <= set(registered_models())
    assert get_model("toy-c").family == "toyC"
    with pytest.raises(ConfigError, match="nope"):
        get_model("nope")


def test_register_model():
    register_model("fixed-zero", NoGrad)
    assert isinstance(get_model("fixed-zero"), NoGrad)


def test_extension_path_env(tmp_path, monkeypatch):
    plugin = tmp_path / "my_adapter.py"
    plugin.write_text(
        "from confusion_attack.toy import ToyCaptioner\n"
        "from confusion_attack.surrogate import register_model\n"
        "register_model('toy-z', lambda: ToyCaptioner('toy-z', 'toyZ', 3.0))\n"
    )
    monkeypatch.setenv(surrogate.ADAPTER_PATH_ENV, str(plugin))
    monkeypatch.setattr(surrogate, "_extensions_loaded", False)
    assert get_model("toy-z").family == "toyZ"
    monkeypatch.delitem(surrogate._REGISTRY, "toy-z")


def test_thread_safety_declaration():
    assert toy_model("toy-a").thread_safe
