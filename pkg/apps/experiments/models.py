import logging

from django.db import models

from apps.kernels.models import LabError

logger = logging.getLogger(__name__)

COMMANDS = (
    "kernel-check",
    "density",
    "transform-check",
    "pls-sweep",
    "multiband",
    "nazarov-turan",
    "bernstein",
    "damped-wave",
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4


class ExperimentError(LabError):
    pass


class ConfigValidationError(ExperimentError):
    def __init__(self, message: str, errors: dict | None = None):
        super().__init__(message)
        self.errors = errors or {}


class RunLedgerError(ExperimentError):
    pass


class ExperimentRun(models.Model):
    class Status(models.TextChoices):
        RUNNING = "running", "Running"
        SUCCEEDED = "succeeded", "Succeeded"
        INVALID = "invalid", "Invalid"
        NOT_CONVERGED = "not_converged", "Not converged"
        IO_FAILED = "io_failed", "I/O failed"

    command = models.CharField(max_length=32, choices=[(name, name) for name in COMMANDS])
    # decimal text: unsigned 64-bit seeds overflow BIGINT and NUMERIC columns
    seed = models.CharField(max_length=20)
    config_hash = models.CharField(max_length=64, db_index=True)
    version = models.CharField(max_length=32)
    status = models.CharField(max_length=16, choices=Status.choices, default=Status.RUNNING)
    exit_code = models.SmallIntegerField(blank=True, null=True)
    output_dir = models.CharField(max_length=1024)
    message = models.TextField(blank=True, default="")
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    def finish(self, status: str, exit_code: int, message: str = ""):
        self.status = status
        self.exit_code = exit_code
        self.message = message
        self.save(update_fields=["status", "exit_code", "message", "updated_at"])
        logger.info(f"Run {self.pk} ({self.command}) finished: {status}, exit code {exit_code}")

    def __str__(self):
        return f"{self.command} [{self.config_hash[:12]}] seed={self.seed}"

    class Meta:
        verbose_name = "Experiment Run"
        verbose_name_plural = "Experiment Runs"
        ordering = ["-created_at"]
