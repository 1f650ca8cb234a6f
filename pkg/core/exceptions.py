## hierarquia de erros de domínio compartilhada por todos os apps
class MulticonvError(Exception):
    """Erro base de todo o projeto. Os comandos tratam qualquer subclasse como falha de execução."""


class DimensionError(MulticonvError, ValueError):
    """Formas (shapes) incompatíveis entre operandos."""

    def __init__(self, message: str, *shapes):
        if shapes:
            message = f"{message} (shapes: {', '.join(str(tuple(s)) for s in shapes)})"
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class ChannelIndexError(MulticonvError, IndexError):
    """Índice de canal fora do intervalo válido."""


class ConfigurationError(MulticonvError, ValueError):
    """Parâmetro de construção inválido (taxa de dropout, grupos, kernel par...)."""


class ContractError(MulticonvError):
    """Pré-condição de uso de uma operação violada."""


class TapeStateError(MulticonvError, RuntimeError):
    """Uso inválido da fita de diferenciação (backward duplo, fitas misturadas)."""


class InputTooShortError(MulticonvError, ValueError):
    """Sequência de entrada curta demais para o front-end de subamostragem."""


class ParameterIntegrityError(MulticonvError):
    """Contagem medida de parâmetros diverge da fórmula fechada."""

    def __init__(self, block: str, measured: int, expected: int):
        super().__init__(
            f"Contagem de parâmetros inconsistente no bloco '{block}': "
            f"medido={measured}, esperado={expected}"
        )
        self.block = block
        self.measured = measured
        self.expected = expected


class TrainingDivergedError(MulticonvError):
    """Perda não finita durante o treino."""

    def __init__(self, step: int, batch_ids: list, loss: float):
        super().__init__(
            f"Perda não finita ({loss}) no passo {step}; lote: {', '.join(batch_ids)}"
        )
        self.step = step
        self.batch_ids = list(batch_ids)
        self.loss = loss


class DatasetExistsError(MulticonvError):
    """Diretório de saída do dataset já existe e --force não foi informado."""


class CheckpointFormatError(MulticonvError):
    """Arquivo de checkpoint corrompido ou de versão desconhecida."""


class VocabularyMismatchError(MulticonvError):
    """Vocabulário do checkpoint difere do vocabulário do dataset."""


class EmptySplitError(MulticonvError):
    """Partição (ou conjunto de análise) sem nenhuma elocução."""
