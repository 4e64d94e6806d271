from django.apps import AppConfig


class LtcaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'ltca'
    verbose_name = "LTCA (identidades de longo prazo e tickets)"
