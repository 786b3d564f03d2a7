import numpy as np
import pytest

from statecov.gradients import (
    GradientError,
    finite_diff_grad,
    input_grad,
    param_shift_grad,
    score_input_grads,
)
from statecov.qnn import (
    AnsatzSpec,
    EncoderSpec,
    build_model,
    cross_entropy,
    forward,
)


def _loss_fn(model, x, label):
    def f(feats):
        _, scores = forward(model, feats)
        return cross_entropy(scores, label)

    return f


class TestFiniteDiff:
    def test_quadratic(self):
        g = finite_diff_grad(lambda v: float(v[0] ** 2), np.array([3.0]), 1e-4)
        assert abs(g[0] - 6.0) < 1e-6

    def test_constant(self):
        g = finite_diff_grad(lambda v: 1.0, np.zeros(4), 1e-4)
        assert np.array_equal(g, np.zeros(4))

    def test_bad_step(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda v: 0.0, np.zeros(1), 0.0)


class TestParamShift:
    def test_single_ry_cos_derivative(self):
        # <Z> = cos(theta) for RY(theta)|0>, so d<Z>/dtheta = -sin(theta)
        model = build_model(
            EncoderSpec("angle", 1), AnsatzSpec("layered", 1, "linear"), 1, 1, seed=0
        )
        params = np.zeros(3)
        params[1] = np.pi / 2  # the RY slot
        model = model.with_params(params)
        grad = param_shift_grad(model, [0.0], 0)
        assert abs(grad[1] - (-1.0)) < 1e-12

        model = model.with_params(np.zeros(3))
        grad = param_shift_grad(model, [0.0], 0)
        assert abs(grad[1]) < 1e-12

    @pytest.mark.parametrize("preset", ["layered", "entangling"])
    def test_matches_finite_differences(self, preset):
        rng = np.random.default_rng(4)
        model = build_model(
            EncoderSpec("angle", 3), AnsatzSpec(preset, 2, "cyclic"), 3, 2, seed=2
        )
        x = rng.uniform(0, 1, 3)
        for _ in range(3):
            model = model.with_params(rng.uniform(-np.pi, np.pi, model.params.size))
            grad = param_shift_grad(model, x, 0)

            def expectation(p, model=model, x=x):
                m = model.with_params(p)
                _, scores = forward(m, x)
                return float(scores[0])

            fd = finite_diff_grad(expectation, model.params, 1e-4)
            assert np.max(np.abs(grad - fd)) < 1e-6

    def test_bad_observable(self):
        model = build_model(
            EncoderSpec("angle", 2), AnsatzSpec("layered", 1, "linear"), 2, 2, seed=0
        )
        with pytest.raises(GradientError):
            param_shift_grad(model, [0.1, 0.2], 5)

    def test_nonzero_on_random_draws(self):
        # guards against dead parameterizations of the presets
        hits = 0
        total = 20
        rng = np.random.default_rng(8)
        for i in range(total):
            preset = "layered" if i % 2 == 0 else "entangling"
            model = build_model(
                EncoderSpec("angle", 3), AnsatzSpec(preset, 1, "linear"), 3, 2, seed=100 + i
            )
            x = rng.uniform(0.1, 0.9, 3)
            g = input_grad(model, x, 0)
            pg = param_shift_grad(model, x, 0)
            if np.linalg.norm(pg) > 1e-8 and np.linalg.norm(g) > 1e-12:
                hits += 1
        assert hits >= 0.9 * total


class TestInputGrad:
    @pytest.mark.parametrize(
        "encoder_kind,q,d", [("angle", 3, 3), ("amplitude", 2, 4), ("amplitude", 3, 6)]
    )
    def test_matches_finite_differences(self, encoder_kind, q, d):
        rng = np.random.default_rng(5)
        model = build_model(
            EncoderSpec(encoder_kind, d), AnsatzSpec("layered", 2, "linear"), q, 2, seed=3
        )
        for _ in range(3):
            x = rng.uniform(0.1, 0.9, d)
            grad = input_grad(model, x, 1)
            fd = finite_diff_grad(_loss_fn(model, x, 1), x, 1e-5)
            assert np.max(np.abs(grad - fd)) < 1e-5

    def test_symmetry_under_equal_inputs(self):
        # star entanglement is symmetric in qubits 1..q-1; equal features on
        # those qubits with equal per-qubit rotations give pairwise equal grads
        model = build_model(
            EncoderSpec("angle", 3), AnsatzSpec("layered", 1, "star"), 3, 1, seed=0
        )
        base = np.tile(np.array([0.3, 0.7, 0.5]), 3)  # same 3 angles per qubit
        model = model.with_params(base * np.pi)
        x = np.array([0.4, 0.6, 0.6])
        grad = input_grad(model, x, 0)
        assert abs(grad[1] - grad[2]) < 1e-9

    def test_zero_amplitude_input_rejected(self):
        model = build_model(
            EncoderSpec("amplitude", 4), AnsatzSpec("layered", 1, "linear"), 2, 2, seed=0
        )
        with pytest.raises(GradientError):
            score_input_grads(model, np.zeros(4))

    def test_gradient_small_at_scanned_minimum(self):
        # vary one feature, locate the interior loss minimum by scanning for
        # the derivative's sign change, bisect it down, check the gradient
        model = build_model(
            EncoderSpec("angle", 2), AnsatzSpec("layered", 1, "linear"), 2, 2, seed=5
        )

        def deriv(t):
            return input_grad(model, np.array([t, 0.5]), 0)[0]

        grid = np.linspace(0.01, 0.99, 99)
        vals = [deriv(t) for t in grid]
        lo, hi = next(
            (grid[i], grid[i + 1]) for i in range(len(grid) - 1) if vals[i] < 0 < vals[i + 1]
        )
        for _ in range(60):
            mid = (lo + hi) / 2
            if deriv(mid) < 0:
                lo = mid
            else:
                hi = mid
        assert abs(deriv((lo + hi) / 2)) < 1e-6
