"""
Erros da VPKI.

Cada erro tem um código numérico estável: é ele que viaja no corpo das
respostas `err` (0x00FF) e permite ao cliente relançar a mesma exceção.
"""


class VpkiError(Exception):
    code = 0x0000
    default_message = "Erro na VPKI."

    def __init__(self, message: str | None = None):
        super().__init__(message or self.default_message)

    @property
    def message(self) -> str:
        return str(self)


class DecodeError(VpkiError):
    code = 0x0001
    default_message = "Bytes malformados na codificação canônica."


class FrameError(VpkiError):
    code = 0x0002
    default_message = "Frame inválido (magic, versão ou tamanho)."


class MalformedRequest(VpkiError):
    code = 0x0003
    default_message = "Corpo da requisição malformado."


class UnsupportedMessage(VpkiError):
    code = 0x0004
    default_message = "Tipo de mensagem não suportado por este servidor."


class StaleTimestamp(VpkiError):
    code = 0x0010
    default_message = "Timestamp fora da janela de tolerância do relógio."


class ReplayedNonce(VpkiError):
    code = 0x0011
    default_message = "Nonce já visto dentro da janela de retenção."


class Unauthorized(VpkiError):
    code = 0x0012
    default_message = "Chamador não autenticado para esta operação."


class ResponseInvalid(VpkiError):
    code = 0x0013
    default_message = "Resposta inválida (nonce, timestamp ou assinatura)."


class ServiceUnavailable(VpkiError):
    code = 0x0014
    default_message = "Servidor indisponível."


class ServiceError(VpkiError):
    code = 0x0015
    default_message = "Erro interno do servidor."


class BadSignature(VpkiError):
    code = 0x0020
    default_message = "Assinatura não confere."


class UnknownIssuer(VpkiError):
    code = 0x0021
    default_message = "Emissor desconhecido no trust store."


class BadProofOfPossession(VpkiError):
    code = 0x0022
    default_message = "Prova de posse da chave privada inválida."


class RevokedCredential(VpkiError):
    code = 0x0023
    default_message = "Credencial revogada ou substituída."


class DuplicateSubject(VpkiError):
    code = 0x0030
    default_message = "Veículo já registrado."


class UnknownSubject(VpkiError):
    code = 0x0031
    default_message = "Veículo desconhecido."


class OverlappingTicket(VpkiError):
    code = 0x0032
    default_message = "Já existe um ticket válido para este veículo no período."


class TicketBindingMismatch(VpkiError):
    code = 0x0040
    default_message = "O número aleatório não abre o digest do ticket."


class TicketReused(VpkiError):
    code = 0x0041
    default_message = "Ticket já utilizado."


class IntervalViolation(VpkiError):
    code = 0x0042
    default_message = "Intervalo pedido fora do período do ticket."


class TicketInvalid(VpkiError):
    code = 0x0043
    default_message = "Ticket inválido ou expirado."


class UnknownTicket(VpkiError):
    code = 0x0044
    default_message = "Ticket desconhecido."


class MaliciousRequester(VpkiError):
    code = 0x0050
    default_message = "Provas de posse inválidas atingiram o limite; requisição abortada."


class EmptyRequest(VpkiError):
    code = 0x0051
    default_message = "Nenhum slot de pseudônimo no intervalo pedido."


class NoSlot(VpkiError):
    code = 0x0052
    default_message = "Não há slot livre para este CSR."


class BatchTooLarge(VpkiError):
    code = 0x0053
    default_message = "Lote de CSRs vazio ou acima do máximo permitido."


class UnknownPseudonym(VpkiError):
    code = 0x0054
    default_message = "Pseudônimo desconhecido."


class MismatchedResponse(VpkiError):
    code = 0x0055
    default_message = "Chave pública do pseudônimo não confere com o CSR."


class NotFound(VpkiError):
    code = 0x0060
    default_message = "Entrada não encontrada no diretório."


class ForeignUnreachable(VpkiError):
    code = 0x0070
    default_message = "LTCA de origem inalcançável; resolução parcial."

    def __init__(self, message: str | None = None, home_issuer: str = "", foreign_serial: int = 0):
        super().__init__(message)
        self.home_issuer = home_issuer
        self.foreign_serial = foreign_serial


class PolicyInvalid(VpkiError):
    code = 0x0080
    default_message = "Política de domínio inválida."


class ScenarioInvalid(VpkiError):
    code = 0x0081
    default_message = "Cenário inválido."


class ServiceSpawnFailure(VpkiError):
    code = 0x0082
    default_message = "Falha ao subir os serviços do cenário."


class IoError(VpkiError):
    code = 0x0083
    default_message = "Falha de E/S ao exportar o relatório."


class MissingGroundTruth(VpkiError):
    code = 0x0090
    default_message = "Transcript sem ground truth para pontuação."


class SnapshotMissing(VpkiError):
    code = 0x0091
    default_message = "Snapshot ausente para a entidade pedida."


def _all_subclasses(cls):
    for sub in cls.__subclasses__():
        yield sub
        yield from _all_subclasses(sub)


ERRORS_BY_CODE = {cls.code: cls for cls in _all_subclasses(VpkiError)}


def error_from_code(code: int, message: str) -> VpkiError:
    """Reconstrói do lado do cliente a exceção enviada pelo servidor."""
    return ERRORS_BY_CODE.get(code, ServiceError)(message)
