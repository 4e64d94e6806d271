from django.apps import AppConfig


class RaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'ra'
    verbose_name = "RA (resolução e revogação)"
