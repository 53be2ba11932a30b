from django.apps import AppConfig


class DampedWaveAppConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "apps.damped_wave"
    verbose_name = "Damped wave simulator"
