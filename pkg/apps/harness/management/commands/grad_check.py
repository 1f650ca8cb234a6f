from django.conf import settings
from django.core.management.base import CommandError

from apps.harness.gradcheck_suite import run_gradcheck_suite

from ._common import RUNTIME_ERROR, MulticonvCommand


class Command(MulticonvCommand):
    help = "Roda a bateria de checagens de gradiente por diferenças finitas."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--configs", type=int, help="Número de configurações sorteadas.")

    def run(self, **options):
        seed = options["seed"] if options["seed"] is not None else settings.MULTICONV_DEFAULT_SEED
        count = options["configs"] or settings.MULTICONV_GRADCHECK_CONFIGS
        report = run_gradcheck_suite(seed, count)
        for result in report.failures:
            self.stderr.write(
                f"FALHOU {result.name}: erro relativo {result.max_rel_error:.3e}, absoluto {result.max_abs_error:.3e}"
            )
        if not report.passed:
            raise CommandError(
                f"{len(report.failures)} de {len(report.results)} casos falharam.", returncode=RUNTIME_ERROR
            )
        self.stdout.write(self.style.SUCCESS(f"{len(report.results)} casos aprovados (semente {seed})."))
