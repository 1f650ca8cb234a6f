import numpy as np
from django.test import SimpleTestCase

from apps.attention.mha import MhaParams, mha_forward
from apps.autodiff.gradcheck import check_gradients, projected, random_projection
from apps.autodiff.tensor import Tensor
from apps.layers import functional as F
from core.exceptions import ConfigurationError, DimensionError


def _identity_projections(p: MhaParams) -> None:
    for proj in (p.query, p.key, p.value, p.output):
        proj.weight.data[:] = np.eye(p.d_model)
        proj.bias.data[:] = 0.0


class MhaForwardTests(SimpleTestCase):
    """Testa a autoatenção multi-cabeça e a captura de mapas."""

    def setUp(self):
        self.params = MhaParams.build(8, 2, np.random.default_rng(0))

    def test_single_frame_weight_is_one(self):
        """Testa que um único quadro recebe peso 1."""
        x = Tensor(np.random.default_rng(1).normal(size=(1, 8)))
        out, maps = mha_forward(x, self.params, capture=True)
        for m in maps:
            self.assertEqual(m.weights.tolist(), [[1.0]])
        expected = F.linear(F.linear(x, self.params.value), self.params.output).data
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    def test_identical_frames_give_uniform_rows(self):
        """Testa linhas uniformes quando todos os quadros são iguais."""
        x = Tensor(np.tile(np.random.default_rng(2).normal(size=(1, 8)), (5, 1)))
        _, maps = mha_forward(x, self.params, capture=True)
        self.assertEqual(len(maps), 2)
        for m in maps:
            np.testing.assert_allclose(m.weights, np.full((5, 5), 0.2), atol=1e-12)

    def test_hand_set_two_frame_case(self):
        """Testa um caso de dois quadros com pesos definidos à mão."""
        p = MhaParams.build(2, 1, np.random.default_rng(3))
        _identity_projections(p)
        _, maps = mha_forward(Tensor(np.eye(2)), p, capture=True)
        np.testing.assert_allclose(maps[0].weights, [[0.6698, 0.3302], [0.3302, 0.6698]], atol=1e-4)

    def test_rows_are_stochastic(self):
        """Testa que cada linha do mapa soma 1."""
        x = Tensor(np.random.default_rng(4).normal(size=(6, 8)) * 3)
        _, maps = mha_forward(x, self.params, capture=True, layer_index=3)
        for m in maps:
            self.assertEqual(m.layer, 3)
            np.testing.assert_allclose(m.weights.sum(axis=1), np.ones(6), atol=1e-6)
            self.assertTrue(((m.weights >= 0) & (m.weights <= 1)).all())

    def test_no_capture_returns_none(self):
        """Testa que sem captura nenhum mapa é devolvido."""
        _, maps = mha_forward(Tensor(np.zeros((3, 8))), self.params)
        self.assertIsNone(maps)

    def test_permutation_equivariance(self):
        """Testa a equivariância a permutações dos quadros."""
        x = np.random.default_rng(5).normal(size=(5, 8))
        perm = np.array([3, 0, 4, 1, 2])
        a, _ = mha_forward(Tensor(x), self.params)
        b, _ = mha_forward(Tensor(x[perm]), self.params)
        np.testing.assert_allclose(b.data, a.data[perm], atol=1e-12)

    def test_width_mismatch(self):
        """Testa o erro de largura incompatível."""
        with self.assertRaises(DimensionError):
            mha_forward(Tensor(np.zeros((3, 6))), self.params)

    def test_heads_must_divide_width(self):
        """Testa que o número de cabeças precisa dividir a largura."""
        with self.assertRaises(ConfigurationError):
            MhaParams.build(8, 3, np.random.default_rng(0))

    def test_gradient(self):
        """Testa o gradiente da atenção por diferenças finitas."""
        p = MhaParams.build(8, 2, np.random.default_rng(6))
        x = Tensor(np.random.default_rng(7).uniform(-1, 1, (4, 8)), requires_grad=True)
        w = random_projection((4, 8), np.random.default_rng(8))
        result = check_gradients(
            lambda: projected(mha_forward(x, p)[0], w), [x] + p.parameters(), rtol=1e-4, max_coords=120
        )
        self.assertTrue(result.passed, f"erro relativo {result.max_rel_error}")
