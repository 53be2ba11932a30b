import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone

from apps.damped_wave.study import study
from apps.experiments.forms import FORMS
from apps.experiments.models import COMMANDS, ConfigValidationError, ExperimentRun, RunLedgerError
from apps.inequalities.bernstein import bernstein_ratio, bump_profile
from apps.inequalities.decomposition import decomposition_residual
from apps.inequalities.nazarov_turan import (
    adversarial_nazarov_turan,
    calibrate_nazarov_turan,
    nazarov_turan_ratio,
    random_subset,
)
from apps.kernels.calibration import calibrate
from apps.kernels.evaluation import j_eval
from apps.measure.density import density_report
from apps.pls.constants import gj_constant, gj_naive_annulus
from apps.pls.models import SweepConfig
from apps.pls.sweep import multiband_sweep, sweep_R
from apps.transform.bochner import bochner_reduce, direct_norm_squared, reduced_norm_squared
from apps.transform.models import RadialGrid
from apps.transform.transform import plancherel_residual, synthesize_bandlimited

logger = logging.getLogger(__name__)

CONFIG_FIELDS = {"command", "params", "seed", "output_dir"}
MAX_SEED = 2**64
KERNEL_TOLERANCE = 1e-10
ERROR_MEASURE = "|computed - exact| / max(|exact|, envelope), envelope (1+x)^(-alpha-1/2) or s^(-m-1)"
PLANCHEREL_TOLERANCE = 1e-6
IDENTITY_GRID = np.linspace(0.1, 100.0, 2000)


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def write_rows(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    seed: int
    output_dir: Path

    def canonical(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed}

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.canonical()).encode("utf-8")).hexdigest()


@dataclass
class Outcome:
    headline: str
    summary: dict
    files: dict = field(default_factory=dict)


@dataclass
class RunContext:
    seed: int
    threads: int = 1
    use_celery: bool = False


def parse_config(payload, seed: int | None = None, output_dir=None) -> ExperimentConfig:
    """Checks the envelope of a config; the params are checked by the command's form."""
    if not isinstance(payload, dict):
        raise ConfigValidationError("an experiment config must be a JSON object")
    unknown = sorted(set(payload) - CONFIG_FIELDS)
    if unknown:
        raise ConfigValidationError(f"unknown config fields {unknown}")
    command = payload.get("command")
    if command not in COMMANDS:
        raise ConfigValidationError(f"command must be one of {list(COMMANDS)}, got {command!r}")
    params = payload.get("params", {})
    if not isinstance(params, dict):
        raise ConfigValidationError("params must be a JSON object")
    seed = payload.get("seed", settings.LAB_DEFAULT_SEED) if seed is None else seed
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < MAX_SEED:
        raise ConfigValidationError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    if output_dir is None:
        output_dir = payload.get("output_dir") or settings.LAB_OUTPUT_DIR
    return ExperimentConfig(command=command, params=params, seed=seed, output_dir=Path(output_dir))


def load_config(path, seed: int | None = None, output_dir=None) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        logger.error(f"Config {path} is not valid JSON: {e}")
        raise ConfigValidationError(f"{path} is not valid JSON: {e}") from e
    return parse_config(payload, seed=seed, output_dir=output_dir)


def validate(config: ExperimentConfig):
    form = FORMS[config.command](config.params, config.seed)
    if not form.is_valid():
        errors = {name: [str(message) for message in messages] for name, messages in form.errors.items()}
        detail = "; ".join(f"{'config' if name == '__all__' else name}: {' '.join(messages)}" for name, messages in errors.items())
        raise ConfigValidationError(f"invalid {config.command} params: {detail}", errors=errors)
    return form


def kernel_check(form, context: RunContext) -> Outcome:
    m_max = form.value("m_max", 4)
    s_grid = np.linspace(1.0, form.value("s_max", 50.0), form.value("points", 400))
    residuals = {m: decomposition_residual(m, s_grid) for m in range(m_max + 1)}
    x = IDENTITY_GRID
    closed_forms = {
        0.5: np.sin(x) / x,
        1.5: 3.0 * (np.sin(x) - x * np.cos(x)) / x**3,
    }
    identity_errors = {}
    for alpha, exact in closed_forms.items():
        scale = np.maximum(np.abs(exact), (1.0 + x) ** (-alpha - 0.5))
        identity_errors[str(alpha)] = float(np.max(np.abs(j_eval(alpha, x) - exact) / scale))
    calibrations = [asdict(calibrate(alpha)) for alpha in form.cleaned_data["calibrate"]]
    worst = max(max(residuals.values()), max(identity_errors.values()))
    summary = {
        "error_measure": ERROR_MEASURE,
        "scaled_residuals": {str(m): value for m, value in residuals.items()},
        "scaled_identity_errors": identity_errors,
        "calibrations": calibrations,
        "tolerance": KERNEL_TOLERANCE,
        "passed": worst < KERNEL_TOLERANCE,
    }
    files = {"residuals.csv": write_rows(["m", "scaled_residual"], [[m, repr(value)] for m, value in residuals.items()])}
    return Outcome(f"max scaled residual {max(residuals.values()):.3e} for m=0..{m_max}, identities {max(identity_errors.values()):.3e}", summary, files)


def density(form, context: RunContext) -> Outcome:
    E = form.cleaned_data["E"]
    report = density_report(form.cleaned_data["alpha"], E, form.cleaned_data.get("window"))
    rows = [[name, "" if value is None else repr(float(value))] for name, value in report.to_dict().items()]
    summary = {"set": json.loads(E.to_json()), "report": report.to_dict()}
    return Outcome(
        f"gamma_lebesgue={report.gamma_lebesgue:.6g}, gamma_mu={report.gamma_mu:.6g}",
        summary,
        {"density.csv": write_rows(["quantity", "value"], rows)},
    )


def transform_check(form, context: RunContext) -> Outcome:
    alpha = form.cleaned_data["alpha"]
    start = form.value("band_start", 0.0)
    t_max = form.value("t_max", 80.0)
    profile = bump_profile(alpha, (start, start + 1.0), width=form.value("width", 1.0)).resolving(t_max)
    grid = RadialGrid.build(alpha, t_max, max_freq=start + 1.0)
    residual = plancherel_residual(profile, grid)
    summary = {"alpha": alpha, "band": [start, start + 1.0], "t_max": t_max, "plancherel_residual": residual}
    headline = f"Plancherel residual {residual:.3e} at t_max={t_max}"
    bochner = form.cleaned_data.get("bochner")
    if bochner is not None:
        n, k = bochner["n"], bochner["k"]

        def F(r):
            return r**k * np.exp(-(r**2))

        direct = direct_norm_squared(n, k, F)
        reduced = reduced_norm_squared(bochner_reduce(n, k, F))
        summary["bochner"] = {"n": n, "k": k, "direct": direct, "reduced": reduced, "relative_gap": abs(direct - reduced) / direct}
        headline += f", Bochner gap {summary['bochner']['relative_gap']:.3e}"
    summary["passed"] = residual < PLANCHEREL_TOLERANCE
    files = {
        "profile.csv": profile.to_csv(),
        "synthesis.csv": synthesize_bandlimited(profile, grid).to_csv(),
    }
    return Outcome(headline, summary, files)


def _sweep_config(form, context: RunContext) -> SweepConfig:
    return SweepConfig(threads=context.threads, use_celery=context.use_celery, seed=context.seed, **form.sweep_options())


def pls_sweep(form, context: RunContext) -> Outcome:
    alpha = form.cleaned_data["alpha"]
    result = sweep_R(alpha, form.cleaned_data["E"], form.cleaned_data["R_list"], _sweep_config(form, context))
    summary = result.to_dict()
    gamma = form.cleaned_data.get("gamma")
    if gamma is not None and alpha >= 0:
        summary["explicit_constants"] = [
            {**gj_constant(alpha, gamma, R).to_dict(), "log10_C_naive": gj_naive_annulus(alpha, gamma, R)}
            for R in form.cleaned_data["R_list"]
        ]
    line = result.summary()
    return Outcome(
        f"min_kappa={line['min_kappa']:.6g}, max_kappa={line['max_kappa']:.6g}, ratio={line['ratio']:.6g}",
        summary,
        {"sweep.csv": result.to_csv()},
    )


def multiband(form, context: RunContext) -> Outcome:
    samples = form.cleaned_data.get("positions") or form.cleaned_data["samples"]
    result = multiband_sweep(
        form.cleaned_data["alpha"],
        form.cleaned_data["N"],
        samples,
        form.cleaned_data["E"],
        _sweep_config(form, context),
        allow_any_order=form.value("allow_any_order", False),
        **form.options("spread"),
    )
    line = result.summary()
    return Outcome(
        f"min_kappa={line['min_kappa']:.6g}, max_kappa={line['max_kappa']:.6g}, ratio={line['ratio']:.6g}",
        result.to_dict(),
        {"multiband.csv": result.to_csv()},
    )


def nazarov_turan(form, context: RunContext) -> Outcome:
    N, M = form.cleaned_data["N"], form.cleaned_data["M"]
    interval = form.cleaned_data["interval"]
    options = form.options("p", "set_fraction", "cells", "freq_scale", "C0")
    calibration = calibrate_nazarov_turan(
        form.value("trials", 1000), N, M, seed=context.seed, interval=interval, threads=context.threads, **options
    )
    summary = {"calibration": calibration.sidecar()}
    headline = f"{calibration.violations} violations in {len(calibration.trials)} trials, C0 needed {calibration.C0_needed:.4g}"
    if form.value("adversarial", False):
        rng = np.random.default_rng(context.seed)
        E = random_subset(interval, form.value("set_fraction", 0.5), form.value("cells", 8), rng)
        p = form.value("p", 2.0)
        ratio, best = adversarial_nazarov_turan(N, M, interval, E, p=p, seed=context.seed, restarts=form.value("restarts", 4))
        _, bound = nazarov_turan_ratio(best, interval, E, p=p, C0=form.cleaned_data.get("C0"))
        summary["adversarial"] = {"ratio": ratio, "bound": bound, "holds": ratio <= bound, "set": json.loads(E.to_json()), "maximizer": best.to_dict()}
        headline += f"; adversarial ratio {ratio:.4g} against bound {bound:.4g}"
    return Outcome(headline, summary, {"trials.csv": calibration.to_csv()})


def bernstein(form, context: RunContext) -> Outcome:
    alpha = form.cleaned_data["alpha"]
    start = form.value("band_start", 0.0)
    terms = form.value("legendre_terms", 4)
    t_max = form.value("t_max", 80.0)
    rng = np.random.default_rng(context.seed)
    rows, worst = [], 0.0
    for index in range(form.value("profiles", 5)):
        coeffs = rng.normal(size=terms) + 1j * rng.normal(size=terms)
        profile = bump_profile(alpha, (start, start + 1.0), width=form.value("width", 1.0), coeffs=coeffs)
        for R in form.cleaned_data["R_list"]:
            for k in form.cleaned_data["k_list"]:
                result = bernstein_ratio(alpha, profile, R, k, t_max=t_max)
                worst = max(worst, result.ratio)
                rows.append([index, repr(R), k, repr(result.ratio), repr(result.spectral_ratio), repr(result.plancherel_gap)])
    summary = {"alpha": alpha, "band": [start, start + 1.0], "t_max": t_max, "evaluations": len(rows), "max_ratio": worst, "holds": worst <= 1.0 + 1e-8}
    return Outcome(
        f"max Bernstein ratio {worst:.6g} over {len(rows)} evaluations",
        summary,
        {"bernstein.csv": write_rows(["profile", "R", "k", "ratio", "spectral_ratio", "plancherel_gap"], rows)},
    )


def damped_wave(form, context: RunContext) -> Outcome:
    config = form.cleaned_data["config"]
    (result,) = study([config], seed=context.seed, threads=context.threads, use_celery=context.use_celery)
    trace = result.pop("trace")
    summary = {**result, "samples": len(trace), "final_energy": float(trace.energies[-1])}
    rates = ", ".join(f"{model} rate {fit['rate']:.4g}" for model, fit in result["fits"].items()) or "no fit"
    return Outcome(f"abscissa {result['abscissa']:.6g}, horizon {result['horizon']:.4g}, {rates}", summary, {"trace.csv": trace.to_csv()})


HANDLERS = {
    "kernel-check": kernel_check,
    "density": density,
    "transform-check": transform_check,
    "pls-sweep": pls_sweep,
    "multiband": multiband,
    "nazarov-turan": nazarov_turan,
    "bernstein": bernstein,
    "damped-wave": damped_wave,
}


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {str(key): _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    if isinstance(value, np.generic):
        return _finite(value.item())
    return value


def manifest(config: ExperimentConfig, files) -> dict:
    return {
        "command": config.command,
        "config": config.canonical(),
        "config_sha256": config.config_hash,
        "seed": config.seed,
        "version": settings.LAB_VERSION,
        "files": sorted(files),
        "created_at": timezone.now().isoformat(),
    }


def write_outputs(config: ExperimentConfig, outcome: Outcome) -> list:
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    files = dict(outcome.files)
    files["summary.json"] = json.dumps(_finite({"headline": outcome.headline, **outcome.summary}), indent=2, sort_keys=True) + "\n"
    for name, text in files.items():
        (output_dir / name).write_text(text, encoding="utf-8")
    record = manifest(config, [*files, "manifest.json"])
    (output_dir / "manifest.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(files) + 1} files to {output_dir}")
    return record["files"]


def write_diagnostic(config: ExperimentConfig, error: Exception) -> Path:
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / "diagnostic.json"
    payload = {
        "command": config.command,
        "config_sha256": config.config_hash,
        "seed": config.seed,
        "version": settings.LAB_VERSION,
        "error": type(error).__name__,
        "message": str(error),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def execute(config: ExperimentConfig, threads: int = 1, use_celery: bool | None = None) -> Outcome:
    """Validate and run one experiment without touching the filesystem."""
    form = validate(config)
    context = RunContext(
        seed=config.seed,
        threads=threads,
        use_celery=settings.LAB_USE_CELERY if use_celery is None else use_celery,
    )
    logger.info(f"Running {config.command} with seed {config.seed} ({config.config_hash[:12]})")
    return HANDLERS[config.command](form, context)


def start_run(config: ExperimentConfig) -> ExperimentRun:
    try:
        return ExperimentRun.objects.create(
            command=config.command,
            seed=str(config.seed),
            config_hash=config.config_hash,
            version=settings.LAB_VERSION,
            output_dir=str(config.output_dir),
        )
    except (DatabaseError, OverflowError) as e:
        logger.error(f"Could not record the {config.command} run: {e}")
        raise RunLedgerError(f"could not record the run in the database: {e}") from e
