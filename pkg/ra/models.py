from django.contrib.auth.models import User
from django.db import models
from django.utils.translation import gettext_lazy as _


class OperatorKey(models.Model):
    """Chave com que um operador assina pedidos de resolução enviados pelo fio."""

    user = models.OneToOneField(User, on_delete=models.CASCADE, related_name='ra_key', verbose_name=_("operador"))
    public_key = models.BinaryField(_("chave pública"))

    class Meta:
        verbose_name = _("Chave de operador")
        verbose_name_plural = _("Chaves de operadores")

    def __str__(self):
        return f"Chave de {self.user.username}"


class AuditLogEntry(models.Model):
    """
    Registro de uma resolução pedida à RA. Só aceita inserção: uma entrada
    gravada nunca muda nem some.
    """

    class Outcome(models.TextChoices):
        OK = 'OK', _('Concluída')
        PARTIAL = 'PARTIAL', _('Parcial (LTCA de origem inalcançável)')
        FAILED = 'FAILED', _('Falhou')
        DENIED = 'DENIED', _('Negada (sem permissão)')

    authority = models.CharField(_("RA"), max_length=64)
    operator = models.CharField(_("operador"), max_length=150)
    pseudonym_issuer = models.CharField(_("PCA emissora"), max_length=64)
    pseudonym_serial = models.BigIntegerField(_("serial do pseudônimo"))
    justification = models.TextField(_("justificativa"))
    revoke_pseudonyms = models.BooleanField(_("revogar pseudônimos?"), default=False)
    revoke_ltc = models.BooleanField(_("revogar LTC?"), default=False)
    steps = models.JSONField(_("passos"), default=list)
    outcome = models.CharField(_("resultado"), max_length=10, choices=Outcome.choices)
    subject_id = models.CharField(_("veículo"), max_length=255, blank=True)
    home_ltca = models.CharField(_("LTCA de origem"), max_length=64, blank=True)
    detail = models.TextField(_("detalhe"), blank=True)
    created_at = models.BigIntegerField(_("registrado em"))

    class Meta:
        verbose_name = _("Entrada de auditoria")
        verbose_name_plural = _("Entradas de auditoria")
        ordering = ['created_at', 'id']
        permissions = [
            ('request_resolution', 'Pode solicitar resolução de pseudônimos'),
        ]

    def save(self, *args, **kwargs):
        if not self._state.adding:
            raise PermissionError("Entradas de auditoria não podem ser alteradas.")
        super().save(*args, **kwargs)

    def delete(self, *args, **kwargs):
        raise PermissionError("Entradas de auditoria não podem ser apagadas.")

    def __str__(self):
        return f"{self.pseudonym_issuer}/{self.pseudonym_serial} por {self.operator}: {self.outcome}"
