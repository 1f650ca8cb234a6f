import math

import numpy as np
from django.test import SimpleTestCase

from apps.autodiff.gradcheck import check_gradients, projected, random_projection
from apps.autodiff.tensor import Tensor
from apps.layers import functional as F
from apps.layers.params import (
    DepthwiseConvParams,
    GroupedConvParams,
    LayerNormParams,
    LinearParams,
    SubsamplerParams,
)
from core.exceptions import ConfigurationError, DimensionError, InputTooShortError


def _tensor(shape, seed=0, requires_grad=True):
    rng = np.random.default_rng(seed)
    return Tensor(rng.uniform(-1.0, 1.0, size=shape), requires_grad=requires_grad)


def _check(fn, tensors, out_shape, seed=99, rtol=1e-5):
    w = random_projection(out_shape, np.random.default_rng(seed))
    return check_gradients(lambda: projected(fn(), w), tensors, rtol=rtol)


class LayerNormTests(SimpleTestCase):
    """Normalização por quadro sobre os canais."""

    def test_constant_row_collapses_to_beta(self):
        """Testa que uma linha constante vira beta."""
        out = F.layer_norm(Tensor(np.ones((1, 4))), LayerNormParams.build(4))
        np.testing.assert_array_equal(out.data, np.zeros((1, 4)))

    def test_symmetric_pair(self):
        """Testa a normalização de um par simétrico."""
        out = F.layer_norm(Tensor([[1.0, -1.0]]), LayerNormParams.build(2))
        np.testing.assert_allclose(out.data, [[1.0, -1.0]], atol=1e-10)

    def test_output_statistics(self):
        """Testa média zero e variância unitária da saída."""
        x = Tensor(np.random.default_rng(3).normal(size=(5, 16)) * 4.0)
        out = F.layer_norm(x, LayerNormParams.build(16)).data
        self.assertLess(np.abs(out.mean(axis=-1)).max(), 1e-10)
        self.assertLess(np.abs(out.std(axis=-1) - 1.0).max(), 1e-6)

    def test_channel_mismatch(self):
        """Testa o erro de canais incompatíveis."""
        with self.assertRaises(DimensionError):
            F.layer_norm(Tensor(np.zeros((2, 3))), LayerNormParams.build(4))

    def test_gradient(self):
        """Testa o gradiente da layer norm."""
        x = _tensor((3, 6), 1)
        p = LayerNormParams.build(6)
        p.gamma.data[:] = np.random.default_rng(2).uniform(0.5, 1.5, 6)
        p.beta.data[:] = np.random.default_rng(4).uniform(-1, 1, 6)
        result = _check(lambda: F.layer_norm(x, p), [x, p.gamma, p.beta], (3, 6))
        self.assertTrue(result.passed, f"erro relativo {result.max_rel_error}")


class ActivationTests(SimpleTestCase):
    def test_gelu_reference_values(self):
        """Testa a GELU em valores de referência."""
        out = F.gelu(Tensor([0.0, 1.0, -10.0])).data
        self.assertEqual(out[0], 0.0)
        self.assertAlmostEqual(out[1], 0.8413447461, places=10)
        self.assertLess(abs(out[2] - (-7.62e-23)), 1e-24)

    def test_softmax_reference_values(self):
        """Testa o softmax em valores de referência."""
        np.testing.assert_allclose(F.softmax(Tensor(np.zeros((1, 4)))).data, [[0.25] * 4])
        np.testing.assert_allclose(F.softmax(Tensor([[1000.0, 0.0]])).data, [[1.0, 0.0]], atol=1e-12)
        out = F.softmax(Tensor([[math.log(1), math.log(2), math.log(3)]])).data
        np.testing.assert_allclose(out, [[1 / 6, 2 / 6, 3 / 6]], atol=1e-15)

    def test_softmax_rows_and_shift_invariance(self):
        """Testa linhas somando 1 e invariância a deslocamento."""
        x = np.random.default_rng(5).normal(size=(4, 7))
        a = F.softmax(Tensor(x)).data
        b = F.softmax(Tensor(x + 12.5)).data
        np.testing.assert_allclose(a.sum(axis=-1), np.ones(4), atol=1e-12)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_log_softmax_normalizes(self):
        """Testa a normalização do log-softmax."""
        x = Tensor(np.random.default_rng(6).normal(size=(3, 5)) * 30)
        lse = np.log(np.exp(F.log_softmax(x).data).sum(axis=-1))
        np.testing.assert_allclose(lse, np.zeros(3), atol=1e-9)

    def test_activation_gradients(self):
        """Testa os gradientes das ativações."""
        # relu é checada longe da descontinuidade em zero
        away_from_zero = Tensor(
            np.random.default_rng(7).uniform(0.1, 1.0, (3, 4)) * np.array([1, -1, 1, -1]), requires_grad=True
        )
        cases = {
            "gelu": (F.gelu, _tensor((3, 4), 8)),
            "sigmoid": (F.sigmoid, _tensor((3, 4), 9)),
            "swish": (F.swish, _tensor((3, 4), 10)),
            "relu": (F.relu, away_from_zero),
            "softmax": (F.softmax, _tensor((3, 4), 11)),
            "log_softmax": (F.log_softmax, _tensor((3, 4), 12)),
        }
        for name, (fn, x) in cases.items():
            with self.subTest(op=name):
                result = _check(lambda: fn(x), [x], (3, 4))
                self.assertTrue(result.passed, f"{name}: erro relativo {result.max_rel_error}")


class DropoutTests(SimpleTestCase):
    def test_identity_cases(self):
        """Testa os casos em que o dropout é identidade."""
        x = _tensor((4, 4), requires_grad=False)
        self.assertIs(F.dropout(x, 0.0, training=True, seed=1), x)
        self.assertIs(F.dropout(x, 0.7, training=False, seed=1), x)

    def test_rate_must_be_below_one(self):
        """Testa que a taxa de dropout precisa ser menor que 1."""
        with self.assertRaises(ConfigurationError):
            F.dropout(Tensor(np.ones(3)), 1.0, training=True, seed=0)

    def test_keep_fraction_and_scaling(self):
        """Testa a fração mantida e a reescala do dropout."""
        out = F.dropout(Tensor(np.ones((200, 200))), 0.5, training=True, seed=0).data
        kept = out != 0
        self.assertAlmostEqual(kept.mean(), 0.5, delta=0.02)
        np.testing.assert_array_equal(out[kept], 2.0)


class ConvolutionTests(SimpleTestCase):
    """Convoluções 1-D depthwise e agrupadas com padding 'same'."""

    def test_delta_kernel_is_identity(self):
        """Testa que um kernel delta é identidade."""
        x = _tensor((9, 5), requires_grad=False)
        out = F.depthwise_conv1d(x, DepthwiseConvParams.delta(5, 7))
        np.testing.assert_array_equal(out.data, x.data)

    def test_box_kernel_by_hand(self):
        """Testa um kernel caixa calculado à mão."""
        p = DepthwiseConvParams.delta(1, 3)
        p.weight.data[:] = 1.0
        out = F.depthwise_conv1d(Tensor([[0.0], [1.0], [0.0]]), p)
        self.assertEqual(out.data.ravel().tolist(), [1.0, 1.0, 1.0])

    def test_even_kernel_rejected(self):
        """Testa a recusa de kernels pares."""
        with self.assertRaises(ConfigurationError):
            DepthwiseConvParams.build(4, 4, np.random.default_rng(0))

    def test_depthwise_channel_independence(self):
        """Testa a independência entre canais na convolução depthwise."""
        p = DepthwiseConvParams.build(4, 5, np.random.default_rng(1))
        x = _tensor((8, 4), 2, requires_grad=False)
        y = Tensor(x.data.copy())
        y.data[:, 2] += 1.0
        diff = F.depthwise_conv1d(x, p).data != F.depthwise_conv1d(y, p).data
        self.assertFalse(diff[:, [0, 1, 3]].any())
        self.assertTrue(diff[:, 2].any())

    def test_grouped_degenerates_to_depthwise(self):
        """Testa que a convolução agrupada degenera em depthwise."""
        rng = np.random.default_rng(3)
        g = GroupedConvParams.build(6, 6, 5, rng)
        d = DepthwiseConvParams.delta(6, 5)
        d.weight.data[:] = g.weight.data[:, 0, :]
        d.bias.data[:] = g.bias.data
        x = _tensor((7, 6), 4, requires_grad=False)
        np.testing.assert_allclose(F.grouped_conv1d(x, g).data, F.depthwise_conv1d(x, d).data, atol=1e-14)

    def test_grouped_pointwise_sum(self):
        """Testa a soma pontual dentro de cada grupo."""
        p = GroupedConvParams.build(2, 1, 1, np.random.default_rng(0))
        p.weight.data[:] = 1.0
        p.bias.data[:] = 0.0
        self.assertEqual(F.grouped_conv1d(Tensor([[3.0, 4.0]]), p).data.tolist(), [[7.0]])

    def test_grouped_requires_divisible_groups(self):
        """Testa a exigência de grupos divisíveis."""
        with self.assertRaises(ConfigurationError):
            GroupedConvParams.build(6, 4, 3, np.random.default_rng(0))

    def test_group_independence(self):
        """Testa a independência entre grupos."""
        p = GroupedConvParams.build(6, 3, 3, np.random.default_rng(5))
        x = _tensor((5, 6), 6, requires_grad=False)
        y = Tensor(x.data.copy())
        y.data[:, 1] -= 0.5  # canal do grupo 0
        diff = F.grouped_conv1d(x, p).data != F.grouped_conv1d(y, p).data
        self.assertTrue(diff[:, 0].any())
        self.assertFalse(diff[:, 1:].any())

    def test_interior_translation_equivariance(self):
        """Testa a equivariância a translações longe das bordas."""
        k, shift = 5, 3
        p = DepthwiseConvParams.build(2, k, np.random.default_rng(7))
        base = np.random.default_rng(8).normal(size=(30, 2))
        shifted = np.roll(base, shift, axis=0)
        a = F.depthwise_conv1d(Tensor(base), p).data
        b = F.depthwise_conv1d(Tensor(shifted), p).data
        interior = range(k + shift, 30 - k)
        np.testing.assert_allclose(b[list(interior)], a[[t - shift for t in interior]], atol=1e-13)

    def test_convolution_gradients(self):
        """Testa os gradientes das convoluções."""
        rng = np.random.default_rng(9)
        dw = DepthwiseConvParams.build(3, 5, rng)
        gp = GroupedConvParams.build(6, 2, 3, rng)
        x3, x6 = _tensor((4, 3), 10), _tensor((4, 6), 11)
        result = _check(lambda: F.depthwise_conv1d(x3, dw), [x3, dw.weight, dw.bias], (4, 3))
        self.assertTrue(result.passed, f"depthwise: {result.max_rel_error}")
        result = _check(lambda: F.grouped_conv1d(x6, gp), [x6, gp.weight, gp.bias], (4, 2))
        self.assertTrue(result.passed, f"grouped: {result.max_rel_error}")

    def test_linear_gradient(self):
        """Testa o gradiente da camada linear."""
        p = LinearParams.build(4, 3, np.random.default_rng(12))
        x = _tensor((2, 4), 13)
        self.assertTrue(_check(lambda: F.linear(x, p), [x, p.weight, p.bias], (2, 3)).passed)


class SubsampleTests(SimpleTestCase):
    def setUp(self):
        self.params = SubsamplerParams.build(80, 8, np.random.default_rng(0))

    def test_length_formula(self):
        """Testa a fórmula do comprimento após a subamostragem."""
        self.assertEqual(F.subsampled_length(16), 3)
        self.assertEqual(F.subsampled_length(100), 24)

    def test_output_shape(self):
        """Testa a forma da saída da subamostragem."""
        for frames in (7, 16, 33):
            with self.subTest(frames=frames):
                out = F.subsample(_tensor((frames, 80), frames, requires_grad=False), self.params)
                self.assertEqual(out.shape, (F.subsampled_length(frames), 8))

    def test_too_short(self):
        """Testa o erro para entradas curtas demais."""
        with self.assertRaises(InputTooShortError):
            F.subsample(Tensor(np.zeros((6, 80))), self.params)

    def test_gradient_small_front_end(self):
        """Testa o gradiente de uma subamostragem pequena."""
        p = SubsamplerParams.build(9, 2, np.random.default_rng(1))
        x = _tensor((9, 9), 2)
        tensors = [x, p.conv1.weight, p.conv2.weight, p.linear.weight]
        result = check_gradients(
            lambda: projected(F.subsample(x, p), random_projection((1, 2), np.random.default_rng(3))),
            tensors,
            rtol=1e-4,
        )
        self.assertTrue(result.passed, f"erro relativo {result.max_rel_error}")


class PositionalEncodingTests(SimpleTestCase):
    def test_first_frame_and_range(self):
        """Testa o primeiro quadro e o intervalo das posições senoidais."""
        table = F.sinusoidal_positions(10, 8)
        np.testing.assert_array_equal(table[0, 0::2], np.zeros(4))
        np.testing.assert_array_equal(table[0, 1::2], np.ones(4))
        self.assertLessEqual(np.abs(table).max(), 1.0)
