from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ("ra", "0001_initial"),
    ]

    operations = [
        migrations.AlterField(
            model_name="auditlogentry",
            name="outcome",
            field=models.CharField(
                choices=[
                    ("OK", "Concluída"),
                    ("PARTIAL", "Parcial (LTCA de origem inalcançável)"),
                    ("FAILED", "Falhou"),
                    ("DENIED", "Negada (sem permissão)"),
                ],
                max_length=10,
                verbose_name="resultado",
            ),
        ),
    ]
