from django.db import models
from django.utils.translation import gettext_lazy as _


class TicketUsage(models.Model):
    """
    Uso de ticket: cada (emissor, serial) aparece no máximo uma vez por PCA.
    A PCA não sabe de quem é o ticket, só que ele já foi apresentado.
    """

    authority = models.CharField(_("PCA"), max_length=64)
    ticket_issuer = models.CharField(_("LTCA emissora do ticket"), max_length=64)
    ticket_serial = models.BigIntegerField(_("serial do ticket"))
    interval_start = models.BigIntegerField(_("início do ticket"))
    interval_end = models.BigIntegerField(_("fim do ticket"))
    used_at = models.BigIntegerField(_("usado em"))

    class Meta:
        verbose_name = _("Uso de ticket")
        verbose_name_plural = _("Usos de tickets")
        unique_together = ('authority', 'ticket_issuer', 'ticket_serial')
        ordering = ['authority', 'used_at']

    def __str__(self):
        return f"{self.ticket_issuer}/{self.ticket_serial} em {self.authority}"


class IssuedPseudonym(models.Model):
    authority = models.CharField(_("PCA"), max_length=64)
    serial = models.BigIntegerField(_("número de série"))
    usage = models.ForeignKey(TicketUsage, on_delete=models.PROTECT, related_name='pseudonyms', verbose_name=_("ticket"))
    public_key = models.BinaryField(_("chave pública"))
    interval_start = models.BigIntegerField(_("início da validade"))
    interval_end = models.BigIntegerField(_("fim da validade"))
    issued_at = models.BigIntegerField(_("emitido em"))

    class Meta:
        verbose_name = _("Pseudônimo emitido")
        verbose_name_plural = _("Pseudônimos emitidos")
        unique_together = ('authority', 'serial')
        ordering = ['authority', 'serial']

    def __str__(self):
        return f"Pseudônimo {self.serial} [{self.interval_start}, {self.interval_end})"


class RevokedPseudonym(models.Model):
    authority = models.CharField(_("PCA"), max_length=64)
    serial = models.BigIntegerField(_("número de série"))
    crl_sequence = models.BigIntegerField(_("CRL em que entrou"))
    revoked_at = models.BigIntegerField(_("revogado em"))

    class Meta:
        verbose_name = _("Pseudônimo revogado")
        verbose_name_plural = _("Pseudônimos revogados")
        unique_together = ('authority', 'serial')
        ordering = ['authority', 'serial']

    def __str__(self):
        return f"{self.serial} (CRL {self.crl_sequence})"


class CrlPublication(models.Model):
    authority = models.CharField(_("PCA"), max_length=64)
    sequence = models.BigIntegerField(_("sequência"))
    issued_at = models.BigIntegerField(_("publicada em"))
    entry_count = models.PositiveIntegerField(_("entradas"))

    class Meta:
        verbose_name = _("Publicação de CRL")
        verbose_name_plural = _("Publicações de CRL")
        unique_together = ('authority', 'sequence')
        ordering = ['authority', 'sequence']

    def __str__(self):
        return f"CRL {self.sequence} de {self.authority} ({self.entry_count} entradas)"
