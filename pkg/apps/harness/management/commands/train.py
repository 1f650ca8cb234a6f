from django.core.exceptions import ValidationError

from apps.encoder.config import EncoderConfig
from apps.harness.config import TrainConfig
from apps.harness.synthetic import load_dataset
from apps.harness.training import train
from core.utils import read_json

from ._common import MulticonvCommand


class Command(MulticonvCommand):
    help = "Treina o encoder com CTC sobre o dataset sintético."
    encoder_options = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--data", type=str, required=True, help="Diretório gerado por gen-data.")
        parser.add_argument("--steps", type=int)
        parser.add_argument("--batch-size", type=int)
        parser.add_argument("--lr", type=float, dest="learning_rate")
        parser.add_argument("--eval-interval", type=int)
        parser.add_argument("--dtype", choices=["float32", "float64"])

    def load_config(self, options) -> TrainConfig:
        """Aceita um TrainConfig completo ou só a configuração do encoder."""
        if not options["config"]:
            return TrainConfig()
        data = read_json(options["config"])
        if "encoder" in data:
            return TrainConfig.from_dict(data)
        return TrainConfig(encoder=EncoderConfig.from_dict(data))

    def run(self, **options):
        cfg = self.load_config(options)
        changes = {
            name: options[name]
            for name in ("steps", "batch_size", "learning_rate", "eval_interval", "dtype", "seed")
            if options.get(name) is not None
        }
        cfg = cfg.replace(encoder=self.resolve_encoder_config(options, cfg.encoder), **changes)
        if options["out"]:
            cfg = cfg.replace(output_dir=str(options["out"]))
        elif not options["config"]:
            cfg = cfg.replace(output_dir=str(self.default_output("train")))
        cfg.full_clean()

        dataset = load_dataset(options["data"])
        if cfg.encoder.feature_dim != dataset.spec.feature_dim:
            raise ValidationError({"feature_dim": f"O dataset tem {dataset.spec.feature_dim} features por quadro."})
        result = train(cfg, dataset)
        if result.best is not None:
            self.stdout.write(
                self.style.SUCCESS(
                    f"Treino concluído em {result.output_dir}: melhor dev TER {result.best.dev_ter:.2%} "
                    f"no passo {result.best.step}."
                )
            )
