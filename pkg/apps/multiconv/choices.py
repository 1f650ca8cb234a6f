from django.db import models


class FusionKind(models.TextChoices):
    SUM = "sum", "Soma"
    WEIGHTED = "weighted", "Ponderada (softmax por quadro)"
    CONCAT = "concat", "Concatenação"
    DEPTH = "depth", "Concatenação + depthwise final"


class ConvBlockKind(models.TextChoices):
    MULTICONV = "multiconv", "MultiConv (M-CSGU)"
    CSGU = "csgu", "CSGU (kernel único)"
    CONFORMER = "conformer", "Conformer"


# fusões que usam convoluções agrupadas e exigem P | d'
GROUPED_FUSIONS = (FusionKind.CONCAT, FusionKind.DEPTH)
