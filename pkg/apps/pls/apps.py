from django.apps import AppConfig


class PlsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.pls"
    verbose_name = "Concentration estimator"
