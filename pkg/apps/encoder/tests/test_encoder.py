from tempfile import TemporaryDirectory

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from apps.autodiff.gradcheck import check_gradients, projected, random_projection
from apps.autodiff.tensor import Tensor
from apps.encoder.config import EncoderConfig, toy_config
from apps.encoder.counting import analytic_param_count, param_count
from apps.encoder.forward import encoder_forward, encoder_layer_forward
from apps.encoder.params import EncoderLayerParams, EncoderParams
from apps.layers import functional as F
from apps.layers.params import DepthwiseConvParams, LinearParams
from apps.multiconv.params import CsguBlockParams
from core.exceptions import DimensionError, InputTooShortError


def _small_config(**overrides) -> EncoderConfig:
    base = dict(num_layers=2, d_model=8, heads=2, d_inter=16, kernels=(3, 5), feature_dim=20)
    base.update(overrides)
    return EncoderConfig(**base)


def _features(frames, dim=20, seed=0):
    return Tensor(np.random.default_rng(seed).normal(size=(frames, dim)))


class EncoderConfigTests(SimpleTestCase):
    """Validação e persistência da configuração."""

    def test_derived_defaults(self):
        """Testa os padrões derivados de d_inter, d_ffn e final_kernel."""
        cfg = EncoderConfig(d_model=64)
        self.assertEqual((cfg.d_inter, cfg.d_ffn, cfg.final_kernel), (384, 256, 31))

    def test_round_trip(self):
        """Testa a conversão da configuração para dicionário e de volta."""
        cfg = toy_config(fusion="weighted", dropout=0.2)
        self.assertEqual(EncoderConfig.from_dict(cfg.to_dict()), cfg)

    def test_save_and_load(self):
        """Testa a gravação e a leitura da configuração em JSON."""
        cfg = _small_config(fusion="depth", final_kernel=7)
        with TemporaryDirectory() as tmp:
            path = cfg.save(f"{tmp}/cfg.json")
            self.assertEqual(EncoderConfig.load(path), cfg)

    def test_invalid_fields(self):
        """Testa os erros de validação por campo."""
        cases = {
            "heads": dict(heads=3),
            "kernels": dict(kernels=(8, 16)),
            "fusion": dict(fusion="max"),
            "dropout": dict(dropout=1.0),
            "d_inter": dict(d_inter=15),
        }
        for field, overrides in cases.items():
            with self.subTest(field=field):
                with self.assertRaises(ValidationError) as ctx:
                    _small_config(**overrides).full_clean()
                self.assertIn(field, ctx.exception.message_dict)

    def test_grouped_fusion_requires_divisible_width(self):
        """Testa a exigência de d_inter/2 divisível pelo número de kernels nas fusões agrupadas."""
        with self.assertRaises(ValidationError) as ctx:
            _small_config(d_inter=12, kernels=(3, 5, 7, 9), fusion="concat").full_clean()
        self.assertIn("kernels", ctx.exception.message_dict)

    def test_unknown_key_rejected(self):
        """Testa a recusa de chaves desconhecidas."""
        with self.assertRaises(ValidationError):
            EncoderConfig.from_dict({"d_model": 8, "batch": 4})

    def test_replace_recomputes_derived(self):
        """Testa que `replace` recalcula os campos derivados."""
        cfg = EncoderConfig(d_model=64).replace(d_model=32, kernels=(3, 7))
        self.assertEqual((cfg.d_inter, cfg.d_ffn, cfg.final_kernel), (192, 128, 7))


class EncoderLayerTests(SimpleTestCase):
    def setUp(self):
        self.cfg = _small_config(dropout=0.0)
        self.layer = EncoderLayerParams.build(self.cfg, np.random.default_rng(0))

    def test_zeroed_branches_leave_final_norm(self):
        """Testa que, com as projeções dos ramos zeradas, a camada se reduz à norma final."""
        for proj in (self.layer.ffn1.outer, self.layer.ffn2.outer, self.layer.mha.output, self.layer.conv_block.down_proj):
            proj.weight.data[:] = 0.0
            proj.bias.data[:] = 0.0
        x = _features(5, 8, 1)
        out, _ = encoder_layer_forward(x, self.layer)
        np.testing.assert_array_equal(out.data, F.layer_norm(x, self.layer.final_norm).data)

    def test_shape_and_mismatch(self):
        """Testa a forma da saída e o erro de largura."""
        out, _ = encoder_layer_forward(_features(4, 8), self.layer)
        self.assertEqual(out.shape, (4, 8))
        with self.assertRaises(DimensionError):
            encoder_layer_forward(_features(4, 6), self.layer)

    def test_layer_gradient(self):
        """Testa o gradiente de uma camada completa."""
        x = Tensor(np.random.default_rng(2).uniform(-1, 1, (3, 8)), requires_grad=True)
        w = random_projection((3, 8), np.random.default_rng(3))
        result = check_gradients(
            lambda: projected(encoder_layer_forward(x, self.layer)[0], w),
            [x] + self.layer.parameters(),
            rtol=1e-4,
            max_coords=50,
            rng=np.random.default_rng(4),
        )
        self.assertTrue(result.passed, f"erro relativo {result.max_rel_error}")


class EncoderForwardTests(SimpleTestCase):
    def test_output_length(self):
        """Testa o comprimento da saída após a subamostragem."""
        params = EncoderParams.build(_small_config(feature_dim=80))
        h, _ = encoder_forward(_features(16, 80), params)
        self.assertEqual(h.shape, (3, 8))

    def test_too_short(self):
        """Testa o erro para entradas curtas demais."""
        with self.assertRaises(InputTooShortError):
            encoder_forward(_features(6), EncoderParams.build(_small_config()))

    def test_inference_determinism(self):
        """Testa saídas idênticas em inferência."""
        a, _ = encoder_forward(_features(20, seed=5), EncoderParams.build(_small_config(seed=9)))
        b, _ = encoder_forward(_features(20, seed=5), EncoderParams.build(_small_config(seed=9)))
        np.testing.assert_array_equal(a.data, b.data)

    def test_captures(self):
        """Testa a captura de mapas de atenção e gates."""
        cfg = _small_config(fusion="weighted")
        h, captures = encoder_forward(_features(24), EncoderParams.build(cfg), capture=True)
        self.assertEqual(len(captures.attention), cfg.num_layers * cfg.heads)
        for m in captures.attention:
            self.assertEqual(m.weights.shape, (h.shape[0], h.shape[0]))
            np.testing.assert_allclose(m.weights.sum(axis=1), np.ones(h.shape[0]), atol=1e-6)
        self.assertEqual(sorted(captures.alphas), [0, 1])
        self.assertEqual(captures.alphas[0].shape, (h.shape[0], 2))

    def test_single_kernel_multiconv_matches_csgu(self):
        """Testa que o MultiConv com um kernel reproduz o CSGU."""
        cfg = _small_config(kernels=(5,), fusion="sum")
        multiconv = EncoderParams.build(cfg)
        csgu = EncoderParams.build(cfg.replace(conv_block="csgu"))
        for source, target in zip(multiconv.layers, csgu.layers):
            shared = CsguBlockParams.sharing(source.conv_block)
            target.conv_block = shared
            for name in ("ffn1_norm", "ffn1", "mha_norm", "mha", "ffn2_norm", "ffn2", "final_norm"):
                setattr(target, name, getattr(source, name))
        csgu.subsampler = multiconv.subsampler
        x = _features(18)
        np.testing.assert_array_equal(encoder_forward(x, multiconv)[0].data, encoder_forward(x, csgu)[0].data)


class ParamCountTests(SimpleTestCase):
    """Contagem medida contra a contagem fechada."""

    def test_primitive_counts(self):
        """Testa a contagem de parâmetros das primitivas."""
        rng = np.random.default_rng(0)
        self.assertEqual(LinearParams.build(4, 3, rng).num_parameters(), 15)
        self.assertEqual(DepthwiseConvParams.build(6, 3, rng).num_parameters(), 24)

    def test_measured_equals_analytic(self):
        """Testa que a contagem medida bate com a analítica."""
        for conv_block in ("multiconv", "csgu", "conformer"):
            for fusion in ("sum", "weighted", "concat", "depth"):
                cfg = _small_config(conv_block=conv_block, fusion=fusion, conformer_kernel=7)
                with self.subTest(conv_block=conv_block, fusion=fusion):
                    measured = param_count(EncoderParams.build(cfg))
                    self.assertEqual(measured.as_dict(), analytic_param_count(cfg).as_dict())

    def test_fusion_deltas(self):
        """Testa as diferenças de parâmetros entre fusões."""
        base = _small_config(kernels=(3, 5, 7, 9), d_inter=16)
        counts = {f: param_count(EncoderParams.build(base.replace(fusion=f))).total for f in ("sum", "weighted", "concat", "depth")}
        d_prime, count, n = 8, 4, base.num_layers
        self.assertEqual(counts["weighted"] - counts["sum"], n * (d_prime * count + count))
        self.assertEqual(counts["depth"] - counts["concat"], n * (d_prime * 9 + d_prime))
        self.assertLess(counts["weighted"], counts["depth"])

    def test_full_size_deltas_analytic(self):
        """Testa as diferenças entre fusões no tamanho completo."""
        cfg = EncoderConfig(num_layers=12, d_model=256, d_inter=1536, kernels=(7, 15, 23, 31))
        totals = {f: analytic_param_count(cfg.replace(fusion=f)).total for f in ("sum", "weighted", "concat", "depth")}
        self.assertEqual(totals["weighted"] - totals["sum"], 36_912)
        self.assertEqual(totals["depth"] - totals["concat"], 294_912)
        self.assertTrue(totals["concat"] < totals["sum"] < totals["weighted"] < totals["depth"])
        self.assertEqual(totals["sum"] - totals["concat"], 27_648)
        self.assertEqual(round(totals["sum"] / 1e6, 1), round(totals["concat"] / 1e6, 1))
