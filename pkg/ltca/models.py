from django.db import models
from django.utils.translation import gettext_lazy as _


class VehicleRecord(models.Model):
    """Identidade de longo prazo de um veículo registrado nesta LTCA."""

    authority = models.CharField(_("LTCA"), max_length=64)
    subject_id = models.CharField(_("identificador do veículo"), max_length=255)
    revoked = models.BooleanField(_("revogado?"), default=False)
    registered_at = models.BigIntegerField(_("registrado em"))

    class Meta:
        verbose_name = _("Veículo registrado")
        verbose_name_plural = _("Veículos registrados")
        unique_together = ('authority', 'subject_id')
        ordering = ['authority', 'subject_id']

    def __str__(self):
        return f"{self.subject_id} @ {self.authority}"


class IssuedLtc(models.Model):
    """Histórico de LTCs; só o `current` serve para pedir tickets."""

    authority = models.CharField(_("LTCA"), max_length=64)
    vehicle = models.ForeignKey(VehicleRecord, on_delete=models.CASCADE, related_name='ltcs', verbose_name=_("veículo"))
    serial = models.BigIntegerField(_("número de série"))
    public_key = models.BinaryField(_("chave pública"))
    validity_start = models.BigIntegerField(_("início da validade"))
    validity_end = models.BigIntegerField(_("fim da validade"))
    current = models.BooleanField(_("atual?"), default=True)
    issued_at = models.BigIntegerField(_("emitido em"))

    class Meta:
        verbose_name = _("LTC emitido")
        verbose_name_plural = _("LTCs emitidos")
        unique_together = ('authority', 'serial')
        ordering = ['authority', 'serial']

    def __str__(self):
        return f"LTC {self.serial} de {self.vehicle.subject_id}"


class TicketLedgerEntry(models.Model):
    """
    Registro de tickets emitidos: quem pediu, para quando e qual digest.
    Não guarda a autoridade de destino, que fica escondida no digest.
    """

    authority = models.CharField(_("LTCA"), max_length=64)
    ticket_serial = models.BigIntegerField(_("serial do ticket"))
    vehicle = models.ForeignKey(VehicleRecord, on_delete=models.PROTECT, related_name='tickets', verbose_name=_("veículo"))
    interval_start = models.BigIntegerField(_("início do intervalo"))
    interval_end = models.BigIntegerField(_("fim do intervalo"))
    target_digest = models.BinaryField(_("digest de destino"), max_length=32)
    issued_at = models.BigIntegerField(_("emitido em"))
    expires_at = models.BigIntegerField(_("expira em"))

    class Meta:
        verbose_name = _("Entrada do ledger de tickets")
        verbose_name_plural = _("Ledger de tickets")
        unique_together = ('authority', 'ticket_serial')
        indexes = [models.Index(fields=['vehicle', 'expires_at'], name='ltca_ticket_vehicle_8c1f2a_idx')]
        ordering = ['authority', 'ticket_serial']

    def __str__(self):
        return f"Ticket {self.ticket_serial} [{self.interval_start}, {self.interval_end})"


class ForeignTicketExchange(models.Model):
    """Ticket nativo emitido em troca de um ticket estrangeiro (veículo em roaming)."""

    authority = models.CharField(_("LTCA"), max_length=64)
    ticket_serial = models.BigIntegerField(_("serial do ticket nativo"))
    ftkt_issuer = models.CharField(_("LTCA de origem"), max_length=64)
    ftkt_serial = models.BigIntegerField(_("serial do ticket estrangeiro"))
    interval_start = models.BigIntegerField(_("início do intervalo"))
    interval_end = models.BigIntegerField(_("fim do intervalo"))
    target_digest = models.BinaryField(_("digest de destino"), max_length=32)
    issued_at = models.BigIntegerField(_("emitido em"))

    class Meta:
        verbose_name = _("Troca de ticket estrangeiro")
        verbose_name_plural = _("Trocas de tickets estrangeiros")
        unique_together = [('authority', 'ftkt_issuer', 'ftkt_serial'), ('authority', 'ticket_serial')]
        ordering = ['authority', 'ticket_serial']

    def __str__(self):
        return f"n-tkt {self.ticket_serial} <- {self.ftkt_issuer}/{self.ftkt_serial}"
