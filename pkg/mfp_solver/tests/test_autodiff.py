"""
Tests for jets (value, spatial gradient, Laplacian) and parameter gradients.

Oracles are jax.grad / jax.hessian of the plain forward pass and central
finite differences.
"""

import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from mfp_solver.autodiff import (
    activation_jet,
    jet_forward,
    loss_and_param_gradient,
    loss_param_gradient,
    softplus,
)
from mfp_solver.exceptions import ConfigurationError, NumericalFailureError
from mfp_solver.network import forward
from mfp_solver.selfcheck import fd_gradient, fd_laplacian, fd_param_gradient, random_net, rel_norm_error


def _mish(z):
    return z * jnp.tanh(jnp.log1p(jnp.exp(z)))


class TestActivationJet:
    """Tests for elementwise activation derivatives."""

    @pytest.mark.parametrize("kind,scale,closed_form", [
        ("tanh", 1.0, jnp.tanh),
        ("sin", 1.0, jnp.sin),
        ("sin", 10.0, lambda z: jnp.sin(10.0 * z)),
        ("mish", 1.0, _mish),
    ])
    def test_derivatives_match_autodiff(self, kind, scale, closed_form):
        """Test that sigma, sigma' and sigma'' match jax.grad of the closed form."""
        zs = jnp.linspace(-4.0, 4.0, 17)
        s0, s1, s2 = activation_jet(kind, scale, zs)
        d1 = jax.vmap(jax.grad(closed_form))(zs)
        d2 = jax.vmap(jax.grad(jax.grad(closed_form)))(zs)

        np.testing.assert_allclose(s0, closed_form(zs), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(s1, d1, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(s2, d2, rtol=1e-10, atol=1e-10)

    def test_mish_at_one_and_a_half(self):
        """Test mish value and derivatives at z = 1.5 against finite differences."""
        z = 1.5
        h = 1e-4
        f = lambda t: float(_mish(jnp.asarray(t)))
        s0, s1, s2 = activation_jet("mish", 1.0, jnp.asarray(z))

        assert float(s0) == pytest.approx(f(z), abs=1e-12)
        assert float(s1) == pytest.approx((f(z + h) - f(z - h)) / (2 * h), abs=1e-6)
        assert float(s2) == pytest.approx((f(z + h) - 2 * f(z) + f(z - h)) / (h * h), abs=1e-6)

    def test_sin_frequency_scaling(self):
        """Test that sin(a z) derivatives carry powers of a."""
        z = jnp.asarray(0.3)
        s0, s1, s2 = activation_jet("sin", 5.0, z)

        assert float(s0) == pytest.approx(math.sin(1.5))
        assert float(s1) == pytest.approx(5.0 * math.cos(1.5))
        assert float(s2) == pytest.approx(-25.0 * math.sin(1.5))

    def test_softplus_is_stable_for_large_inputs(self):
        """Test that softplus neither overflows nor loses the linear regime."""
        values = softplus(jnp.asarray([-1000.0, 0.0, 1000.0]))

        assert np.all(np.isfinite(values))
        assert float(values[0]) == 0.0
        assert float(values[1]) == pytest.approx(math.log(2.0))
        assert float(values[2]) == 1000.0

    def test_mish_jet_is_finite_for_large_inputs(self):
        """Test that mish derivatives stay finite far out in both tails."""
        s0, s1, s2 = activation_jet("mish", 1.0, jnp.asarray([-200.0, 200.0]))

        assert np.all(np.isfinite(np.asarray([s0, s1, s2])))
        assert float(s1[1]) == pytest.approx(1.0)

    def test_unknown_kind_rejected(self):
        """Test that an unknown activation raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            activation_jet("relu", 1.0, jnp.zeros(3))


class TestJetForward:
    """Tests for value, spatial gradient and Laplacian of a network."""

    def test_single_point_matches_hessian(self, tanh_net):
        """Test the jet at x = 0.3 against jax.grad and jax.hessian of forward."""
        spec, params = tanh_net
        x = jnp.asarray([0.3])
        fn = lambda p: forward(spec, params, p)

        jet = jet_forward(spec, params, x)

        assert jet.value.shape == ()
        assert jet.spatial_grad.shape == (1,)
        assert float(jet.value) == pytest.approx(float(fn(x)), abs=1e-12)
        np.testing.assert_allclose(jet.spatial_grad, jax.grad(fn)(x), rtol=1e-10, atol=1e-12)
        assert float(jet.spatial_lap) == pytest.approx(float(jnp.trace(jax.hessian(fn)(x))), rel=1e-9, abs=1e-12)

    def test_single_point_matches_finite_differences(self, tanh_net):
        """Test the jet at x = 0.3 against central finite differences."""
        spec, params = tanh_net
        x = np.array([[0.3]])
        fn = lambda pts: forward(spec, params, jnp.asarray(pts))

        jet = jet_forward(spec, params, x)

        assert rel_norm_error(jet.spatial_grad, fd_gradient(fn, x)) < 1e-5
        assert rel_norm_error(jet.spatial_lap, fd_laplacian(fn, x)) < 1e-5

    def test_batch_2d_matches_hessian_trace(self, sin_net_2d):
        """Test the 2D Laplacian of a batch against the Hessian trace per point."""
        spec, params = sin_net_2d
        x = jnp.asarray(np.random.default_rng(0).uniform(0.0, 1.0, size=(12, 2)))
        fn = lambda p: forward(spec, params, p)

        jet = jet_forward(spec, params, x)
        grads = jax.vmap(jax.grad(fn))(x)
        laps = jax.vmap(lambda p: jnp.trace(jax.hessian(fn)(p)))(x)

        assert jet.value.shape == (12,)
        assert jet.spatial_grad.shape == (12, 2)
        assert jet.spatial_lap.shape == (12,)
        np.testing.assert_allclose(jet.spatial_grad, grads, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(jet.spatial_lap, laps, rtol=1e-9, atol=1e-11)

    @pytest.mark.parametrize("kind", ["tanh", "mish", "sin"])
    def test_value_matches_forward(self, kind):
        """Test that the jet value equals the plain forward pass."""
        spec, params = random_net(kind, 1, seed=11)
        x = jnp.linspace(-1.0, 1.0, 100)[:, None]

        np.testing.assert_allclose(jet_forward(spec, params, x).value, forward(spec, params, x), atol=1e-12)

    def test_input_dimension_mismatch(self, tanh_net):
        """Test that 2D points are rejected by a 1D network."""
        spec, params = tanh_net
        with pytest.raises(ConfigurationError):
            jet_forward(spec, params, jnp.zeros((4, 2)))

    def test_jet_is_linear_in_readout(self, sin_net_2d):
        """Test that scaling the readout layer scales every jet component."""
        spec, params = sin_net_2d
        readout = spec.width + 1
        scaled = params.at[-readout:].multiply(-2.5)
        x = jnp.asarray([[0.2, 0.7], [0.9, 0.1]])

        a = jet_forward(spec, params, x)
        b = jet_forward(spec, scaled, x)

        for left, right in zip(a, b):
            np.testing.assert_allclose(-2.5 * np.asarray(left), right, atol=1e-12)


class TestParamGradient:
    """Tests for reverse-mode gradients with respect to the parameters."""

    def test_laplacian_loss_matches_finite_differences(self):
        """Test the gradient of mean (f + lap N)^2 on 8 points of a 4 x 20 sin net."""
        spec, params = random_net("sin", 1, seed=2, hidden_layers=4, width=20)
        x = jnp.linspace(-0.9, 0.9, 8)[:, None]
        f = math.pi ** 2 * jnp.sin(math.pi * x[:, 0])

        def loss(p):
            return jnp.mean((f + jet_forward(spec, p, x).spatial_lap) ** 2)

        grad = np.asarray(loss_param_gradient(loss, params))
        idx = np.arange(0, spec.param_count, 37)

        assert grad.shape == (spec.param_count,)
        assert rel_norm_error(grad[idx], fd_param_gradient(loss, params, idx)) < 1e-4

    def test_value_is_returned_with_gradient(self):
        """Test that the loss value comes back with the gradient."""
        value, grad = loss_and_param_gradient(lambda p: jnp.sum(p ** 2), jnp.asarray([1.0, -2.0]))

        assert value == pytest.approx(5.0)
        np.testing.assert_allclose(grad, [2.0, -4.0])

    def test_non_finite_loss(self):
        """Test that a NaN loss raises NumericalFailureError."""
        with pytest.raises(NumericalFailureError):
            loss_and_param_gradient(lambda p: jnp.sum(p) * jnp.nan, jnp.ones(3))

    def test_non_finite_gradient_reports_index(self):
        """Test that the first non-finite gradient entry is reported."""
        params = jnp.ones(5).at[3].set(0.0)

        with pytest.raises(NumericalFailureError) as exc_info:
            loss_and_param_gradient(lambda p: jnp.sum(jnp.sqrt(p)), params)

        assert exc_info.value.param_index == 3
