from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest.mock import patch

from django.test import SimpleTestCase

from apps.encoder.config import toy_config
from apps.harness.gradcheck_suite import SuiteReport
from core.cli import SUBCOMMANDS, cli_dispatch

PATH_RUN_SUITE = "apps.harness.management.commands.grad_check.run_gradcheck_suite"


class CliDispatchTests(SimpleTestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.config = toy_config().save(Path(self.tmp.name) / "toy.json")

    def dispatch(self, *argv) -> tuple[int, str, str]:
        out, err = StringIO(), StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = cli_dispatch(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_subcommand_names(self):
        """Testa os nomes dos subcomandos."""
        self.assertEqual(
            set(SUBCOMMANDS), {"gen-data", "train", "eval", "analyze", "param-count", "grad-check"}
        )

    def test_param_count_succeeds(self):
        """Testa a contagem de parâmetros com código 0."""
        code, out, _ = self.dispatch("param-count", "--config", str(self.config), "--fusion", "weighted")
        self.assertEqual(code, 0)
        self.assertIn("multiconv-weighted", out)
        self.assertIn("total", out)

    def test_even_kernels_exit_with_usage_error(self):
        """Testa que kernels pares saem com código 1."""
        code, _, err = self.dispatch("param-count", "--kernels", "8,16")
        self.assertEqual(code, 1)
        self.assertIn("--kernels", err)

    def test_unknown_flag_prints_help(self):
        """Testa a ajuda impressa para opção desconhecida."""
        code, _, err = self.dispatch("param-count", "--nao-existe")
        self.assertEqual(code, 1)
        self.assertIn("usage:", err)

    def test_unknown_subcommand(self):
        """Testa o erro para subcomando desconhecido."""
        code, _, err = self.dispatch("treinar")
        self.assertEqual(code, 1)
        self.assertIn("treinar", err)
        self.assertEqual(self.dispatch()[0], 1)

    def test_runtime_failure_exits_two(self):
        """Testa que falhas de execução saem com código 2."""
        code, _, _ = self.dispatch("eval", "--checkpoint", "x.mcfk", "--data", str(Path(self.tmp.name) / "vazio"))
        self.assertEqual(code, 2)

    @patch(PATH_RUN_SUITE)
    def test_grad_check_passes(self, mock_run):
        """Testa a checagem de gradientes pela linha de comando."""
        mock_run.return_value = SuiteReport(7, [])
        code, _, _ = self.dispatch("grad-check", "--seed", "7")
        self.assertEqual(code, 0)
        self.assertEqual(mock_run.call_args.args[0], 7)
