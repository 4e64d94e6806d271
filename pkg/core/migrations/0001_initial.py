from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="SerialCounter",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                ("authority", models.CharField(max_length=64, verbose_name="autoridade")),
                ("scope", models.CharField(max_length=64, verbose_name="escopo")),
                ("value", models.BigIntegerField(default=0, verbose_name="último valor emitido")),
            ],
            options={
                "verbose_name": "Contador de série",
                "verbose_name_plural": "Contadores de série",
                "unique_together": {("authority", "scope")},
            },
        ),
    ]
