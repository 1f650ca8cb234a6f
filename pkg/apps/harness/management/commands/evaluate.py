from apps.harness.evaluation import evaluate
from apps.harness.synthetic import load_dataset

from ._common import MulticonvCommand


class Command(MulticonvCommand):
    help = "Avalia um checkpoint (TER de corpus) em uma partição do dataset."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--checkpoint", type=str, required=True)
        parser.add_argument("--data", type=str, required=True)
        parser.add_argument("--split", choices=["train", "dev", "test"], default="test")

    def run(self, **options):
        report = evaluate(options["checkpoint"], load_dataset(options["data"]), options["split"], options["out"])
        self.stdout.write(
            f"TER ({report.split}): {report.ter:.2%} ({report.errors}/{report.ref_tokens} tokens, "
            f"{report.utterances} elocuções); perda média {report.loss:.4f}"
        )
        if options["out"]:
            self.stdout.write(f"Resultados por elocução em {options['out']}")
