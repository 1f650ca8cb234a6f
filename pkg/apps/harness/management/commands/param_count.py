import numpy as np

from apps.analysis.exporters import OutputFormat, export_frame
from apps.analysis.parameters import comparison_configs, kernel_sweep_report, param_report, variant_label
from apps.encoder.params import EncoderParams

from ._common import MulticonvCommand, parse_kernels


def parse_sweep(value: str) -> list[tuple[int, ...]]:
    """'3,7;7,15,23,31' -> [(3, 7), (7, 15, 23, 31)]."""
    return [parse_kernels(chunk) for chunk in value.split(";") if chunk.strip()]


class Command(MulticonvCommand):
    help = "Conta parâmetros por bloco e confere com a fórmula fechada."
    encoder_options = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--compare", action="store_true", help="As quatro fusões e os dois baselines.")
        parser.add_argument("--sweep", type=parse_sweep, help="Conjuntos de kernels separados por ';'.")
        parser.add_argument("--format", choices=OutputFormat.values, default=OutputFormat.CSV, dest="output_format")

    def run(self, **options):
        cfg = self.resolve_encoder_config(options)
        if options["sweep"]:
            frame, title = kernel_sweep_report(cfg, options["sweep"]), "Parâmetros por conjunto de kernels"
        else:
            configs = comparison_configs(cfg) if options["compare"] else [cfg]
            # float32 basta para contar e reduz a memória das variantes em tamanho real
            frame = param_report(EncoderParams.build(c, np.float32) for c in configs)
            title = "Parâmetros por variante"
            if not options["compare"]:
                self.stdout.write(f"Variante {variant_label(cfg)}: {int(frame['total'].iloc[0])} parâmetros")
        self.write_table(frame)

        if options["out"]:
            details = {"d_model": cfg.d_model, "camadas": cfg.num_layers, "kernels": ",".join(map(str, cfg.kernels))}
            export_frame(frame, options["out"], options["output_format"], title=title, details=details)
            self.stdout.write(self.style.SUCCESS(f"Tabela exportada em {options['out']}"))
