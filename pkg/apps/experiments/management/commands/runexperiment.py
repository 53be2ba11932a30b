import logging

from django.core.management.base import BaseCommand, CommandError

from apps.experiments.models import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    ConfigValidationError,
    ExperimentRun,
    RunLedgerError,
)
from apps.experiments.runner import execute, load_config, start_run, validate, write_diagnostic, write_outputs
from apps.kernels.models import ConvergenceError, LabError

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Run one experiment described by a JSON config file and write its result files"

    def add_arguments(self, parser):
        parser.add_argument("config", help="Path to the experiment config JSON")
        parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
        parser.add_argument("--out", default=None, help="Output directory (default: LAB_OUTPUT_DIR)")
        parser.add_argument("--threads", type=int, default=1, help="Worker threads for independent entries")
        parser.add_argument(
            "--validate-only",
            action="store_true",
            help="Check the config and exit without running",
        )
        parser.add_argument(
            "--celery",
            action="store_true",
            help="Fan independent entries out through Celery",
        )

    def handle(self, *args, **options):
        if options["threads"] < 1:
            raise CommandError(f"--threads must be at least 1, got {options['threads']}", returncode=EXIT_INVALID)
        try:
            config = load_config(options["config"], seed=options["seed"], output_dir=options["out"])
            validate(config)
            if options["validate_only"]:
                self.stdout.write(self.style.SUCCESS(f"{config.command} config is valid ({config.config_hash[:12]})"))
                return
        except ConfigValidationError as e:
            raise CommandError(str(e), returncode=EXIT_INVALID) from e
        except OSError as e:
            raise CommandError(f"cannot read {options['config']}: {e}", returncode=EXIT_IO) from e

        try:
            run = start_run(config)
        except RunLedgerError as e:
            raise CommandError(str(e), returncode=EXIT_IO) from e

        try:
            outcome = execute(config, threads=options["threads"], use_celery=options["celery"] or None)
            write_outputs(config, outcome)
        except ConvergenceError as e:
            self._fail(run, ExperimentRun.Status.NOT_CONVERGED, EXIT_NOT_CONVERGED, e)
            try:
                path = write_diagnostic(config, e)
            except OSError as io_error:
                logger.error(f"Could not write the diagnostic file: {io_error}")
            else:
                self.stderr.write(f"Diagnostic written to {path}")
            raise CommandError(f"{config.command} did not converge: {e}", returncode=EXIT_NOT_CONVERGED) from e
        except LabError as e:
            self._fail(run, ExperimentRun.Status.INVALID, EXIT_INVALID, e)
            raise CommandError(f"invalid {config.command} experiment: {e}", returncode=EXIT_INVALID) from e
        except OSError as e:
            self._fail(run, ExperimentRun.Status.IO_FAILED, EXIT_IO, e)
            raise CommandError(f"could not write results to {config.output_dir}: {e}", returncode=EXIT_IO) from e

        run.finish(ExperimentRun.Status.SUCCEEDED, EXIT_OK, outcome.headline)
        self.stdout.write(self.style.SUCCESS(f"{config.command}: {outcome.headline}"))
        self.stdout.write(f"Results in {config.output_dir} ({config.config_hash[:12]})")

    def _fail(self, run: ExperimentRun, status: str, exit_code: int, error: Exception):
        logger.error(f"{run.command} failed with {type(error).__name__}: {error}")
        run.finish(status, exit_code, str(error))
