import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="VehicleRecord",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="LTCA")),
                ("subject_id", models.CharField(max_length=255, verbose_name="identificador do veículo")),
                ("revoked", models.BooleanField(default=False, verbose_name="revogado?")),
                ("registered_at", models.BigIntegerField(verbose_name="registrado em")),
            ],
            options={
                "verbose_name": "Veículo registrado",
                "verbose_name_plural": "Veículos registrados",
                "ordering": ["authority", "subject_id"],
                "unique_together": {("authority", "subject_id")},
            },
        ),
        migrations.CreateModel(
            name="IssuedLtc",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="LTCA")),
                ("serial", models.BigIntegerField(verbose_name="número de série")),
                ("public_key", models.BinaryField(verbose_name="chave pública")),
                ("validity_start", models.BigIntegerField(verbose_name="início da validade")),
                ("validity_end", models.BigIntegerField(verbose_name="fim da validade")),
                ("current", models.BooleanField(default=True, verbose_name="atual?")),
                ("issued_at", models.BigIntegerField(verbose_name="emitido em")),
                (
                    "vehicle",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="ltcs",
                        to="ltca.vehiclerecord",
                        verbose_name="veículo",
                    ),
                ),
            ],
            options={
                "verbose_name": "LTC emitido",
                "verbose_name_plural": "LTCs emitidos",
                "ordering": ["authority", "serial"],
                "unique_together": {("authority", "serial")},
            },
        ),
        migrations.CreateModel(
            name="TicketLedgerEntry",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="LTCA")),
                ("ticket_serial", models.BigIntegerField(verbose_name="serial do ticket")),
                ("interval_start", models.BigIntegerField(verbose_name="início do intervalo")),
                ("interval_end", models.BigIntegerField(verbose_name="fim do intervalo")),
                ("target_digest", models.BinaryField(max_length=32, verbose_name="digest de destino")),
                ("issued_at", models.BigIntegerField(verbose_name="emitido em")),
                ("expires_at", models.BigIntegerField(verbose_name="expira em")),
                (
                    "vehicle",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.PROTECT,
                        related_name="tickets",
                        to="ltca.vehiclerecord",
                        verbose_name="veículo",
                    ),
                ),
            ],
            options={
                "verbose_name": "Entrada do ledger de tickets",
                "verbose_name_plural": "Ledger de tickets",
                "ordering": ["authority", "ticket_serial"],
                "unique_together": {("authority", "ticket_serial")},
                "indexes": [models.Index(fields=["vehicle", "expires_at"], name="ltca_ticket_vehicle_8c1f2a_idx")],
            },
        ),
        migrations.CreateModel(
            name="ForeignTicketExchange",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="LTCA")),
                ("ticket_serial", models.BigIntegerField(verbose_name="serial do ticket nativo")),
                ("ftkt_issuer", models.CharField(max_length=64, verbose_name="LTCA de origem")),
                ("ftkt_serial", models.BigIntegerField(verbose_name="serial do ticket estrangeiro")),
                ("interval_start", models.BigIntegerField(verbose_name="início do intervalo")),
                ("interval_end", models.BigIntegerField(verbose_name="fim do intervalo")),
                ("target_digest", models.BinaryField(max_length=32, verbose_name="digest de destino")),
                ("issued_at", models.BigIntegerField(verbose_name="emitido em")),
            ],
            options={
                "verbose_name": "Troca de ticket estrangeiro",
                "verbose_name_plural": "Trocas de tickets estrangeiros",
                "ordering": ["authority", "ticket_serial"],
                "unique_together": {("authority", "ftkt_issuer", "ftkt_serial"), ("authority", "ticket_serial")},
            },
        ),
    ]
