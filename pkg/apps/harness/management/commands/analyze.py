from apps.analysis.diagonality import diagonality_report
from apps.analysis.exporters import SUFFIXES, OutputFormat, export_frame
from apps.analysis.importance import kernel_importance
from apps.harness.model import AsrModel
from apps.harness.synthetic import load_dataset

from ._common import MulticonvCommand

DIAGONALITY = "diagonality"
GATE_IMPORTANCE = "gate-importance"


class Command(MulticonvCommand):
    help = "Análises de um checkpoint: diagonalidade da atenção ou importância dos kernels."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("kind", choices=[DIAGONALITY, GATE_IMPORTANCE])
        parser.add_argument("--checkpoint", type=str, required=True)
        parser.add_argument("--data", type=str, required=True)
        parser.add_argument("--split", choices=["train", "dev", "test"], default="dev")
        parser.add_argument("--limit", type=int, help="Máximo de elocuções analisadas.")
        parser.add_argument("--baseline", type=str, help="Checkpoint de referência para a redução relativa.")
        parser.add_argument("--format", choices=OutputFormat.values, default=OutputFormat.CSV, dest="output_format")

    def run(self, **options):
        model = AsrModel.load(options["checkpoint"])
        utterances = load_dataset(options["data"]).split(options["split"])[: options["limit"]]
        features = [utt.features for utt in utterances]
        details = {"checkpoint": options["checkpoint"], "partição": options["split"], "elocuções": len(features)}

        if options["kind"] == DIAGONALITY:
            report = diagonality_report(model, features, label=options["checkpoint"])
            frame, title = report.to_frame(), "Diagonalidade da atenção por camada"
            self.write_table(frame)
            self.stdout.write(f"Média entre camadas: {report.average:.4f}")
            if options["baseline"]:
                baseline = diagonality_report(AsrModel.load(options["baseline"]), features, label=options["baseline"])
                self.stdout.write(f"Redução relativa contra {options['baseline']}: {report.relative_reduction(baseline):.2%}")
                details["baseline"] = options["baseline"]
        else:
            matrix = kernel_importance(model, features)
            frame, title = matrix.to_frame(), "Importância dos kernels (gate da fusão ponderada)"
            self.write_table(frame)

        fmt = options["output_format"]
        out = options["out"] or self.default_output("analysis") / f"{options['kind']}{SUFFIXES[fmt]}"
        export_frame(frame, out, fmt, title=title, details=details)
        self.stdout.write(self.style.SUCCESS(f"Tabela exportada em {out}"))
