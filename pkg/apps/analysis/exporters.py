from __future__ import annotations

import logging
from datetime import datetime
from pathlib import Path

import pandas as pd
from django.db import models

logger = logging.getLogger(__name__)


class OutputFormat(models.TextChoices):
    CSV = "csv", "CSV"
    JSON = "json", "JSON"
    EXCEL = "excel", "Excel (xlsx)"


SUFFIXES = {OutputFormat.CSV: ".csv", OutputFormat.JSON: ".json", OutputFormat.EXCEL: ".xlsx"}


def export_frame(
    df: pd.DataFrame,
    path: str | Path,
    output_format: str = OutputFormat.CSV,
    title: str = "",
    details: dict | None = None,
) -> Path:
    """
    Grava uma tabela de análise no formato pedido.

    CSV e JSON trazem apenas os dados (o CSV com cabeçalho na primeira linha);
    o Excel ganha título, data de geração e os parâmetros da análise antes da
    tabela.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if output_format == OutputFormat.CSV:
        df.to_csv(path, index=False, encoding="utf-8")
    elif output_format == OutputFormat.JSON:
        df.to_json(path, orient="records", force_ascii=False, indent=2)
    elif output_format == OutputFormat.EXCEL:
        _write_excel(df, path, title, details or {})
    else:
        raise ValueError(f"Formato de saída inválido: '{output_format}'.")
    logger.info(f"Relatório '{title or path.stem}' exportado em {path} ({len(df)} linhas).")
    return path


def _write_excel(df: pd.DataFrame, path: Path, title: str, details: dict) -> None:
    content = [[title or "Relatório"], [f'Gerado em: {datetime.now().strftime("%d/%m/%Y %H:%M:%S")}'], []]
    if details:
        content.append(["Parâmetros:"])
        content.extend([[f"{key}: {value}"] for key, value in details.items()])
        content.append([])
    content.append(df.columns.tolist())
    content.extend(df.values.tolist())

    with pd.ExcelWriter(path, engine="openpyxl") as writer:
        pd.DataFrame(content).to_excel(writer, index=False, header=False, sheet_name="Análise", startrow=0)
