from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from django.test import SimpleTestCase, override_settings

from core.exceptions import ConfigurationError, MulticonvError, ParameterIntegrityError, TrainingDivergedError
from core.utils import dtype_name, make_rng, read_json, resolve_dtype, spawn_seeds, write_json


class DtypeTests(SimpleTestCase):
    def test_resolve_names(self):
        """Testa a resolução de nomes de precisão."""
        self.assertEqual(resolve_dtype("float32"), np.dtype(np.float32))
        self.assertEqual(resolve_dtype(np.float64), np.dtype(np.float64))
        self.assertEqual(dtype_name(np.float32), "float32")
        with self.assertRaises(ConfigurationError):
            resolve_dtype("float16")
        with self.assertRaises(ConfigurationError):
            resolve_dtype(np.int32)

    @override_settings(MULTICONV_TRAIN_DTYPE="float64")
    def test_default_comes_from_settings(self):
        """Testa o padrão de precisão vindo das settings."""
        self.assertEqual(resolve_dtype(None), np.dtype(np.float64))


class SeedTests(SimpleTestCase):
    def test_make_rng_is_deterministic(self):
        """Testa geradores determinísticos por semente."""
        self.assertEqual(make_rng(4).random(), make_rng(4).random())
        rng = np.random.default_rng(0)
        self.assertIs(make_rng(rng), rng)

    def test_spawned_streams_differ(self):
        """Testa que os geradores derivados diferem."""
        first, second = spawn_seeds(9, 2)
        self.assertNotEqual(np.random.default_rng(first).random(), np.random.default_rng(second).random())
        self.assertEqual(
            np.random.default_rng(spawn_seeds(9, 2)[1]).random(), np.random.default_rng(second).random()
        )


class JsonTests(SimpleTestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_write_is_sorted_and_readable(self):
        """Testa a escrita ordenada e a leitura do JSON."""
        path = write_json(Path(self.tmp.name) / "sub" / "a.json", {"b": 1, "a": [1, 2]})
        self.assertTrue(path.read_text().startswith('{\n  "a"'))
        self.assertEqual(read_json(path), {"a": [1, 2], "b": 1})

    def test_invalid_json(self):
        """Testa o erro para JSON inválido."""
        path = Path(self.tmp.name) / "bad.json"
        path.write_text("{nao é json", encoding="utf-8")
        with self.assertRaises(ConfigurationError):
            read_json(path)


class ExceptionTests(SimpleTestCase):
    def test_messages_carry_context(self):
        """Testa que as mensagens de erro carregam contexto."""
        error = ParameterIntegrityError("multiconv-depth:conv_block", 10, 12)
        self.assertIn("multiconv-depth:conv_block", str(error))
        diverged = TrainingDivergedError(3, ["train-00001", "train-00002"], float("nan"))
        self.assertIn("train-00002", str(diverged))
        self.assertIsInstance(diverged, MulticonvError)
