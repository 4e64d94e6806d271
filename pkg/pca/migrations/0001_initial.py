import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="TicketUsage",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="PCA")),
                ("ticket_issuer", models.CharField(max_length=64, verbose_name="LTCA emissora do ticket")),
                ("ticket_serial", models.BigIntegerField(verbose_name="serial do ticket")),
                ("interval_start", models.BigIntegerField(verbose_name="início do ticket")),
                ("interval_end", models.BigIntegerField(verbose_name="fim do ticket")),
                ("used_at", models.BigIntegerField(verbose_name="usado em")),
            ],
            options={
                "verbose_name": "Uso de ticket",
                "verbose_name_plural": "Usos de tickets",
                "ordering": ["authority", "used_at"],
                "unique_together": {("authority", "ticket_issuer", "ticket_serial")},
            },
        ),
        migrations.CreateModel(
            name="IssuedPseudonym",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="PCA")),
                ("serial", models.BigIntegerField(verbose_name="número de série")),
                ("public_key", models.BinaryField(verbose_name="chave pública")),
                ("interval_start", models.BigIntegerField(verbose_name="início da validade")),
                ("interval_end", models.BigIntegerField(verbose_name="fim da validade")),
                ("issued_at", models.BigIntegerField(verbose_name="emitido em")),
                (
                    "usage",
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.PROTECT,
                        related_name="pseudonyms",
                        to="pca.ticketusage",
                        verbose_name="ticket",
                    ),
                ),
            ],
            options={
                "verbose_name": "Pseudônimo emitido",
                "verbose_name_plural": "Pseudônimos emitidos",
                "ordering": ["authority", "serial"],
                "unique_together": {("authority", "serial")},
            },
        ),
        migrations.CreateModel(
            name="RevokedPseudonym",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="PCA")),
                ("serial", models.BigIntegerField(verbose_name="número de série")),
                ("crl_sequence", models.BigIntegerField(verbose_name="CRL em que entrou")),
                ("revoked_at", models.BigIntegerField(verbose_name="revogado em")),
            ],
            options={
                "verbose_name": "Pseudônimo revogado",
                "verbose_name_plural": "Pseudônimos revogados",
                "ordering": ["authority", "serial"],
                "unique_together": {("authority", "serial")},
            },
        ),
        migrations.CreateModel(
            name="CrlPublication",
            fields=[
                ("id", models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name="ID")),
                ("authority", models.CharField(max_length=64, verbose_name="PCA")),
                ("sequence", models.BigIntegerField(verbose_name="sequência")),
                ("issued_at", models.BigIntegerField(verbose_name="publicada em")),
                ("entry_count", models.PositiveIntegerField(verbose_name="entradas")),
            ],
            options={
                "verbose_name": "Publicação de CRL",
                "verbose_name_plural": "Publicações de CRL",
                "ordering": ["authority", "sequence"],
                "unique_together": {("authority", "sequence")},
            },
        ),
    ]
