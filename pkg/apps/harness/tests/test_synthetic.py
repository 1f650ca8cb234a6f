from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from apps.harness.synthetic import (
    SPLITS,
    SyntheticTaskSpec,
    build_dataset,
    generate_dataset,
    load_dataset,
    make_templates,
)
from core.exceptions import DatasetExistsError, EmptySplitError
from core.utils import spawn_seeds


def small_spec(**overrides) -> SyntheticTaskSpec:
    base = dict(vocab_size=4, feature_dim=16, min_tokens=3, max_tokens=5, train_size=6, dev_size=3, test_size=2, seed=3)
    base.update(overrides)
    return SyntheticTaskSpec(**base)


class SyntheticTaskSpecTests(SimpleTestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_defaults(self):
        """Testa os valores padrão da tarefa sintética."""
        spec = SyntheticTaskSpec()
        self.assertEqual((spec.vocab_size, spec.template_frames, spec.feature_dim), (8, 12, 80))
        self.assertEqual((spec.min_tokens, spec.max_tokens), (3, 10))
        self.assertEqual(spec.noise_std, 0.3)
        self.assertEqual(spec.frames_for(5), 60)

    def test_round_trip(self):
        """Testa a persistência da especificação em JSON."""
        spec = small_spec(noise_std=0.125)
        path = spec.save(Path(self.tmp.name) / "spec.json")
        self.assertEqual(SyntheticTaskSpec.load(path), spec)

    def test_validation(self):
        """Testa a validação dos campos da tarefa."""
        with self.assertRaises(ValidationError) as ctx:
            small_spec(vocab_size=0, noise_std=-1.0).full_clean()
        self.assertIn("vocab_size", ctx.exception.message_dict)
        self.assertIn("noise_std", ctx.exception.message_dict)
        with self.assertRaises(ValidationError):
            small_spec(min_tokens=6, max_tokens=4).full_clean()
        with self.assertRaises(ValidationError):
            SyntheticTaskSpec.from_dict({"vocab": 3})


class GenerateDatasetTests(SimpleTestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_lengths_follow_token_count(self):
        """Testa que o número de quadros acompanha o de tokens."""
        dataset = build_dataset(small_spec())
        for split in SPLITS:
            for utt in dataset.splits[split]:
                self.assertEqual(utt.features.shape, (len(utt.tokens) * 12, 16))
                self.assertTrue(3 <= len(utt.tokens) <= 5)
                self.assertTrue(all(1 <= t <= 4 for t in utt.tokens))

    def test_noise_free_features_are_template_concatenations(self):
        """Testa que, sem ruído, as features são os templates concatenados."""
        spec = small_spec(noise_std=0.0)
        dataset = build_dataset(spec)
        templates = make_templates(spec, spawn_seeds(spec.seed, 4)[0])
        for utt in dataset.splits["train"]:
            expected = np.concatenate([templates[t - 1] for t in utt.tokens]).astype(np.float32)
            np.testing.assert_array_equal(utt.features, expected)

    def test_same_seed_gives_byte_identical_files(self):
        """Testa arquivos idênticos byte a byte com a mesma semente."""
        first = generate_dataset(small_spec(), self.root / "a").root
        second = generate_dataset(small_spec(), self.root / "b").root
        names = sorted(p.name for p in first.iterdir())
        self.assertEqual(names, sorted(p.name for p in second.iterdir()))
        for name in names:
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

    def test_splits_use_distinct_streams(self):
        """Testa que cada partição usa seu próprio gerador."""
        dataset = build_dataset(small_spec(train_size=3, dev_size=3))
        train = [utt.features.tobytes() for utt in dataset.splits["train"]]
        dev = [utt.features.tobytes() for utt in dataset.splits["dev"]]
        self.assertFalse(set(train) & set(dev))

    def test_collision_requires_force(self):
        """Testa que sobrescrever um diretório exige `force`."""
        generate_dataset(small_spec(), self.root / "data")
        with self.assertRaises(DatasetExistsError):
            generate_dataset(small_spec(seed=4), self.root / "data")
        generate_dataset(small_spec(seed=4), self.root / "data", force=True)
        self.assertEqual(load_dataset(self.root / "data").spec.seed, 4)

    def test_load_restores_everything(self):
        """Testa que a carga restaura especificação e partições."""
        written = generate_dataset(small_spec(), self.root / "data")
        loaded = load_dataset(self.root / "data")
        self.assertEqual(loaded.spec, written.spec)
        for split in SPLITS:
            self.assertEqual(len(loaded.splits[split]), len(written.splits[split]))
            for a, b in zip(loaded.splits[split], written.splits[split]):
                self.assertEqual((a.utt_id, a.tokens), (b.utt_id, b.tokens))
                np.testing.assert_array_equal(a.features, b.features)

    def test_empty_split_is_an_error(self):
        """Testa o erro ao pedir uma partição vazia."""
        dataset = build_dataset(small_spec(test_size=0))
        with self.assertRaises(EmptySplitError):
            dataset.split("test")
