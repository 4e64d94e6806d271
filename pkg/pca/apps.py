from django.apps import AppConfig


class PcaConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'pca'
    verbose_name = "PCA (pseudônimos e revogação)"
