import django.db.models.deletion
from django.conf import settings
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        migrations.swappable_dependency(settings.AUTH_USER_MODEL),
    ]

    operations = [
        migrations.CreateModel(
            name="AuditLogEntry",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="RA")),
                ("operator", models.CharField(max_length=150, verbose_name="operador")),
                ("pseudonym_issuer", models.CharField(max_length=64, verbose_name="PCA emissora")),
                ("pseudonym_serial", models.BigIntegerField(verbose_name="serial do pseudônimo")),
                ("justification", models.TextField(verbose_name="justificativa")),
                ("revoke_pseudonyms", models.BooleanField(default=False, verbose_name="revogar pseudônimos?")),
                ("revoke_ltc", models.BooleanField(default=False, verbose_name="revogar LTC?")),
                ("steps", models.JSONField(default=list, verbose_name="passos")),
                (
                    "outcome",
                    models.CharField(
                        choices=[
                            ("OK", "Concluída"),
                            ("PARTIAL", "Parcial (LTCA de origem inalcançável)"),
                            ("FAILED", "Falhou"),
                        ],
                        max_length=10,
                        verbose_name="resultado",
                    ),
                ),
                ("subject_id", models.CharField(blank=True, max_length=255, verbose_name="veículo")),
                ("home_ltca", models.CharField(blank=True, max_length=64, verbose_name="LTCA de origem")),
                ("detail", models.TextField(blank=True, verbose_name="detalhe")),
                ("created_at", models.BigIntegerField(verbose_name="registrado em")),
            ],
            options={
                "verbose_name": "Entrada de auditoria",
                "verbose_name_plural": "Entradas de auditoria",
                "ordering": ["created_at", "id"],
                "permissions": [("request_resolution", "Pode solicitar resolução de pseudônimos")],
            },
        ),
        migrations.CreateModel(
            name="OperatorKey",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("public_key", models.BinaryField(verbose_name="chave pública")),
                (
                    "user",
                    models.OneToOneField(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="ra_key",
                        to=settings.AUTH_USER_MODEL,
                        verbose_name="operador",
                    ),
                ),
            ],
            options={
                "verbose_name": "Chave de operador",
                "verbose_name_plural": "Chaves de operadores",
            },
        ),
    ]
