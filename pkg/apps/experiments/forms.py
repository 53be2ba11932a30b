import math

from django import forms

from apps.damped_wave.models import DampedWaveConfig
from apps.inequalities.bernstein import MAX_DERIVATIVE
from apps.inequalities.decomposition import MAX_M
from apps.kernels.models import BesselOrder, LabError
from apps.measure.generators import generate_set
from apps.measure.models import RadialSet


def number_list(value, name: str, integer: bool = False, minimum: float | None = None, strictly: bool = False):
    if not isinstance(value, list) or not value:
        raise forms.ValidationError(f"{name} must be a nonempty list")
    numbers = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
            raise forms.ValidationError(f"{name} holds a non-numeric entry {item!r}")
        if integer and int(item) != item:
            raise forms.ValidationError(f"{name} must hold integers, got {item!r}")
        if minimum is not None and (item <= minimum if strictly else item < minimum):
            raise forms.ValidationError(f"{name} entries must be {'>' if strictly else '>='} {minimum}, got {item!r}")
        numbers.append(int(item) if integer else float(item))
    return numbers


class AlphaField(forms.FloatField):
    def validate(self, value):
        super().validate(value)
        try:
            BesselOrder(value)
        except LabError as e:
            raise forms.ValidationError(str(e)) from e


class ExperimentForm(forms.Form):
    """Params of one command; every key of the params object must be a declared field."""

    command = None

    def __init__(self, params: dict, seed: int):
        super().__init__(data=params)
        self.seed = seed

    def clean(self):
        cleaned = super().clean()
        unknown = sorted(set(self.data) - set(self.fields))
        if unknown:
            raise forms.ValidationError(f"unknown fields {unknown} for {self.command}")
        return cleaned

    def value(self, name: str, default=None):
        value = self.cleaned_data.get(name)
        return default if value is None else value

    def options(self, *names) -> dict:
        """Cleaned values that were given, for keyword arguments with library defaults."""
        return {name: self.cleaned_data[name] for name in names if self.cleaned_data.get(name) is not None}

    def radial_set(self, value):
        if value is None:
            return None
        if not isinstance(value, dict):
            raise forms.ValidationError("a set is an object with intervals or with a generator kind")
        try:
            if "kind" in value:
                unknown = set(value) - {"kind", "params"}
                if unknown:
                    raise forms.ValidationError(f"unknown generator fields {sorted(unknown)}")
                return generate_set(value["kind"], value.get("params"), seed=self.seed)
            return RadialSet.from_dict(value)
        except (LabError, TypeError, ValueError) as e:
            raise forms.ValidationError(f"invalid set: {e}") from e

    def clean_E(self):
        return self.radial_set(self.cleaned_data.get("E"))


class KernelCheckForm(ExperimentForm):
    """Decomposition residuals and closed-form identities, as errors scaled by max(|exact|, envelope)."""

    command = "kernel-check"

    m_max = forms.IntegerField(required=False, min_value=0, max_value=MAX_M)
    s_max = forms.FloatField(required=False, min_value=1.0)
    points = forms.IntegerField(required=False, min_value=2)
    calibrate = forms.JSONField(required=False)

    def clean_calibrate(self):
        value = self.cleaned_data.get("calibrate")
        if value is None:
            return []
        orders = number_list(value, "calibrate", minimum=-0.5, strictly=True)
        return orders


class DensityForm(ExperimentForm):
    command = "density"

    alpha = AlphaField()
    E = forms.JSONField()
    window = forms.FloatField(required=False, min_value=1e-9)


class TransformCheckForm(ExperimentForm):
    command = "transform-check"

    alpha = AlphaField()
    band_start = forms.FloatField(required=False, min_value=0.0)
    width = forms.FloatField(required=False, min_value=1e-3, max_value=1.0)
    t_max = forms.FloatField(required=False, min_value=1.0)
    bochner = forms.JSONField(required=False)

    def clean_bochner(self):
        value = self.cleaned_data.get("bochner")
        if value is None:
            return None
        if not isinstance(value, dict) or set(value) != {"n", "k"}:
            raise forms.ValidationError("bochner must be an object with exactly the keys n and k")
        n, k = number_list([value["n"], value["k"]], "bochner", integer=True, minimum=0)
        if n not in (2, 3):
            raise forms.ValidationError(f"the direct quadrature covers n in (2, 3), got n={n}")
        return {"n": n, "k": k}


class SweepOptionsForm(ExperimentForm):
    band_dim = forms.IntegerField(required=False, min_value=4)
    t_max = forms.FloatField(required=False, min_value=1.0)
    tail_tolerance = forms.FloatField(required=False, min_value=1e-12, max_value=1.0)
    check_stability = forms.NullBooleanField(required=False)

    def sweep_options(self) -> dict:
        return self.options("band_dim", "t_max", "tail_tolerance", "check_stability")


class PlsSweepForm(SweepOptionsForm):
    command = "pls-sweep"

    alpha = AlphaField()
    E = forms.JSONField()
    R_list = forms.JSONField()
    gamma = forms.FloatField(required=False, min_value=1e-12, max_value=1.0)

    def clean_R_list(self):
        values = number_list(self.cleaned_data.get("R_list"), "R_list", minimum=0.0, strictly=True)
        if any(b <= a for a, b in zip(values, values[1:])):
            raise forms.ValidationError("R_list must be strictly ascending")
        return values


class MultibandForm(SweepOptionsForm):
    command = "multiband"

    alpha = AlphaField()
    N = forms.IntegerField(min_value=1)
    E = forms.JSONField()
    positions = forms.JSONField(required=False)
    samples = forms.IntegerField(required=False, min_value=1)
    spread = forms.FloatField(required=False, min_value=1.0)
    allow_any_order = forms.NullBooleanField(required=False)

    def clean_positions(self):
        value = self.cleaned_data.get("positions")
        if value is None:
            return None
        if not isinstance(value, list) or not value:
            raise forms.ValidationError("positions must be a nonempty list of position lists")
        return [tuple(number_list(item, "positions", minimum=0.0)) for item in value]

    def clean(self):
        cleaned = super().clean()
        if (cleaned.get("positions") is None) == (cleaned.get("samples") is None):
            raise forms.ValidationError("give exactly one of positions and samples")
        return cleaned


class NazarovTuranForm(ExperimentForm):
    command = "nazarov-turan"

    N = forms.IntegerField(min_value=1)
    M = forms.IntegerField(min_value=1)
    trials = forms.IntegerField(required=False, min_value=1)
    p = forms.FloatField(required=False, min_value=1.0)
    interval = forms.JSONField(required=False)
    set_fraction = forms.FloatField(required=False, min_value=1e-6, max_value=1.0)
    cells = forms.IntegerField(required=False, min_value=1)
    freq_scale = forms.FloatField(required=False, min_value=1e-9)
    C0 = forms.FloatField(required=False, min_value=1e-12)
    adversarial = forms.NullBooleanField(required=False)
    restarts = forms.IntegerField(required=False, min_value=1)

    def clean_interval(self):
        value = self.cleaned_data.get("interval")
        if value is None:
            return (0.0, 1.0)
        lo, hi = number_list(value, "interval") if isinstance(value, list) and len(value) == 2 else (None, None)
        if lo is None or not hi > lo:
            raise forms.ValidationError("interval must be [a, b] with a < b")
        return (lo, hi)


class BernsteinForm(ExperimentForm):
    command = "bernstein"

    alpha = AlphaField()
    R_list = forms.JSONField()
    k_list = forms.JSONField(required=False)
    band_start = forms.FloatField(required=False, min_value=0.0)
    width = forms.FloatField(required=False, min_value=1e-3, max_value=1.0)
    profiles = forms.IntegerField(required=False, min_value=1)
    legendre_terms = forms.IntegerField(required=False, min_value=1, max_value=16)
    t_max = forms.FloatField(required=False, min_value=1.0)

    def clean_R_list(self):
        return number_list(self.cleaned_data.get("R_list"), "R_list", minimum=0.0, strictly=True)

    def clean_k_list(self):
        value = self.cleaned_data.get("k_list")
        if value is None:
            return [1, 2]
        values = number_list(value, "k_list", integer=True, minimum=0)
        if max(values) > MAX_DERIVATIVE:
            raise forms.ValidationError(f"derivative order is capped at {MAX_DERIVATIVE}")
        return values

    def clean(self):
        cleaned = super().clean()
        R_list, start = cleaned.get("R_list"), cleaned.get("band_start") or 0.0
        if R_list and start + 1.0 > min(R_list):
            raise forms.ValidationError(f"the band [{start}, {start + 1.0}] must lie inside [0, R] for every R")
        return cleaned


class DampedWaveForm(ExperimentForm):
    command = "damped-wave"

    d = forms.IntegerField(min_value=2)
    s = forms.FloatField()
    c0 = forms.FloatField(min_value=0.0)
    E = forms.JSONField(required=False)
    L = forms.FloatField(required=False)
    modes = forms.IntegerField(required=False)
    t_final = forms.FloatField(required=False)
    output_dt = forms.FloatField(required=False)

    def clean(self):
        cleaned = super().clean()
        if self.errors:
            return cleaned
        try:
            cleaned["config"] = DampedWaveConfig(
                E=RadialSet.half_line() if cleaned.get("E") is None else cleaned["E"],
                **self.options("d", "s", "c0", "L", "modes", "t_final", "output_dt"),
            )
        except LabError as e:
            raise forms.ValidationError(str(e)) from e
        return cleaned


FORMS = {
    form.command: form
    for form in (
        KernelCheckForm,
        DensityForm,
        TransformCheckForm,
        PlsSweepForm,
        MultibandForm,
        NazarovTuranForm,
        BernsteinForm,
        DampedWaveForm,
    )
}
