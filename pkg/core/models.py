from django.db import models, transaction
from django.db.models import F
from django.utils.translation import gettext_lazy as _


class SerialCounter(models.Model):
    """
    Contador monotônico de números de série por emissor.

    Réplicas de uma mesma PCA usam escopos distintos (um por resíduo
    `offset` módulo `stride`), então nunca emitem o mesmo serial.
    """

    authority = models.CharField(_("autoridade"), max_length=64)
    scope = models.CharField(_("escopo"), max_length=64)
    value = models.BigIntegerField(_("último valor emitido"), default=0)

    class Meta:
        verbose_name = _("Contador de série")
        verbose_name_plural = _("Contadores de série")
        unique_together = ('authority', 'scope')

    def __str__(self):
        return f"{self.authority}/{self.scope} = {self.value}"

    @classmethod
    def allocate(cls, authority: str, scope: str, count: int = 1, offset: int = 0, stride: int = 1) -> list[int]:
        """Reserva `count` seriais consecutivos do escopo e devolve seus valores."""
        if count < 1:
            return []
        key = f"{scope}:{offset}/{stride}"
        with transaction.atomic():
            counter, _created = cls.objects.select_for_update().get_or_create(authority=authority, scope=key)
            cls.objects.filter(pk=counter.pk).update(value=F('value') + count)
            first = counter.value + 1
        return [offset + stride * k for k in range(first, first + count)]
