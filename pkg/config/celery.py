import os

from celery import Celery

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")

app = Celery("besselab")

# CELERY_* keys in Django settings
app.config_from_object("django.conf:settings", namespace="CELERY")

# picks up apps.pls.tasks and apps.damped_wave.tasks
app.autodiscover_tasks()
