from apps.harness.synthetic import SyntheticTaskSpec, generate_dataset
from core.utils import read_json

from ._common import MulticonvCommand


class Command(MulticonvCommand):
    help = "Gera o dataset sintético (features + transcrições + manifesto)."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--force", action="store_true", help="Sobrescreve um diretório existente.")
        parser.add_argument("--vocab-size", type=int)
        parser.add_argument("--template-frames", type=int)
        parser.add_argument("--noise-std", type=float)
        parser.add_argument("--train-size", type=int)
        parser.add_argument("--dev-size", type=int)
        parser.add_argument("--test-size", type=int)

    def run(self, **options):
        data = read_json(options["config"]) if options["config"] else {}
        for name in ("seed", "vocab_size", "template_frames", "noise_std", "train_size", "dev_size", "test_size"):
            if options.get(name) is not None:
                data[name] = options[name]
        spec = SyntheticTaskSpec.from_dict(data)
        spec.full_clean()

        out = options["out"] or self.default_output("data")
        dataset = generate_dataset(spec, out, force=options["force"])
        sizes = ", ".join(f"{split}={len(utts)}" for split, utts in dataset.splits.items())
        self.stdout.write(self.style.SUCCESS(f"Dataset gerado em {out} ({sizes})."))
