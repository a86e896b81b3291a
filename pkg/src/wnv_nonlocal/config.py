# Run configuration: TOML parsing with defaults, validation and exact re-emission

import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field

from .errors import ConfigError, ParameterError
from .fb_sim import SimSettings
from .kernels import make_kernel
from .model import ModelParams
from .nonlocal_eigen import METHODS
from .periodic_solver import SolverSettings

COMMANDS = ("eigen", "lamP", "periodic", "simulate", "classify", "sweep", "contour")
SHARED_KERNEL_COMMANDS = ("eigen", "lamP")

DEFAULT_KERNEL = {"kind": "tent", "radius": 1.0}

NUMERICS = {
    "dx": 0.02,
    "dt": "auto",
    "periods": 10,
    "period_tol": 1e-8,
    "max_periods": 5000,
    "snapshot_every": 0,
    "eigen_method": "auto",
}

# None marks defaults derived from [model] (the interval [-h0, h0])
SECTIONS = {
    "eigen": {"n_samples": 201},
    "lamP": {"left": None, "right": None, "L_sequence": []},
    "periodic": {"left": None, "right": None, "mode": "above", "eps": 1e-3},
    "classify": {"mode": "auto", "max_periods": 200, "threshold": "none", "mu_low": 1e-3,
                 "mu_high": 1e2, "sigma_low": 1e-3, "sigma_high": 1.0, "rel_width": 0.05},
    "sweep": {"delta": [], "b1": [], "mu": [], "h0": [], "dynamic": True, "max_periods": 200,
              "parallel": False, "max_concurrent": 4},
    "contour": {"delta_min": 0.0, "delta_max": 0.95, "n_delta": 20, "b1_min": 1e-3,
                "b1_max": 10.0, "tie_k": False},
}

CHOICES = {
    "numerics.eigen_method": METHODS,
    "periodic.mode": ("above", "below", "both", "ode"),
    "classify.mode": ("static", "dynamic", "auto"),
    "classify.threshold": ("none", "mu", "sigma"),
}

KERNEL_KEYS = {"kind", "radius", "sigma"}


@dataclass
class RunConfig:
    """
    A fully resolved run configuration.

    Attributes
    ----------
    model: ModelParams.
    kernel: Kernel section of species 1 (kind plus radius or sigma).
    kernel2: Kernel section of species 2, or None when both species share `kernel`.
    numerics: Numerical settings shared by all commands.
    sections: Command sections, one dict per command with settings.
    defaulted: Dotted names of the values filled in from defaults (not compared).
    """
    model: ModelParams
    kernel: dict
    kernel2: dict = None
    numerics: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    defaulted: tuple = field(default=(), compare=False)

    def kernels(self):
        """
        (J1, J2) built from the kernel sections.
        """
        k1 = make_kernel(**self.kernel)
        k2 = k1 if self.kernel2 is None else make_kernel(**self.kernel2)
        return k1, k2

    @property
    def shared_kernel(self):
        return self.kernel2 is None or self.kernel2 == self.kernel

    def sim_settings(self):
        n = self.numerics
        return SimSettings(dx=n["dx"], dt=n["dt"], snapshot_every=n["snapshot_every"],
                           eigen_method=n["eigen_method"])

    def solver_settings(self):
        n = self.numerics
        return SolverSettings(dx=n["dx"], dt=n["dt"], period_tol=n["period_tol"],
                              max_periods=n["max_periods"])

    def with_overrides(self, **scalars):
        """
        Copy with numerics scalars replaced (None values are ignored).
        """
        numerics = dict(self.numerics)
        overridden = set()
        for key, value in scalars.items():
            if value is None:
                continue
            if key not in numerics:
                raise ConfigError(f"Unknown numerics key `{key}`.")
            numerics[key] = value
            overridden.add(f"numerics.{key}")

        defaulted = tuple(d for d in self.defaulted if d not in overridden)
        out = RunConfig(self.model, self.kernel, self.kernel2, numerics, self.sections, defaulted)
        _check_numerics(out.numerics)
        return out

    def check_command(self, command):
        """
        Reject configurations a command cannot run: unknown commands and distinct kernels where a
        shared kernel is needed.
        """
        if command not in COMMANDS:
            raise ConfigError(f"Unknown command `{command}`; expected one of {', '.join(COMMANDS)}.")

        needs_shared = command in SHARED_KERNEL_COMMANDS or (
            command == "classify" and self.sections["classify"]["mode"] == "static")

        if needs_shared and not self.shared_kernel:
            raise ConfigError(f"`kernel2` differs from `kernel`; `{command}` needs one kernel for both species.")

        return self


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_type(name, value, default):
    if name == "numerics.dt":
        # "auto" or a number, checked in _check_numerics
        return value
    if default is None or isinstance(default, float):
        ok = _is_number(value)
    elif isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list) and all(_is_number(v) for v in value)
    else:
        ok = isinstance(value, str)

    if not ok:
        raise ConfigError(f"Malformed value for `{name}`: {value!r}.")

    if isinstance(value, list):
        return [float(v) for v in value]
    if default is None or isinstance(default, float):
        return float(value)
    return value


def _fill(section_name, values, defaults, defaulted):
    unknown = sorted(set(values) - set(defaults))
    if unknown:
        raise ConfigError(f"Unknown key `{section_name}.{unknown[0]}`.")

    out = {}
    for key, default in defaults.items():
        name = f"{section_name}.{key}"
        if key in values:
            out[key] = _check_type(name, values[key], default)
        else:
            out[key] = list(default) if isinstance(default, list) else default
            defaulted.append(name)

        if name in CHOICES and out[key] not in CHOICES[name]:
            raise ConfigError(f"`{name}` must be one of {', '.join(CHOICES[name])}, got {out[key]!r}.")

    return out


def _parse_kernel(name, values):
    if not isinstance(values, dict):
        raise ConfigError(f"`{name}` must be a section.")
    unknown = sorted(set(values) - KERNEL_KEYS)
    if unknown:
        raise ConfigError(f"Unknown key `{name}.{unknown[0]}`.")
    if "kind" not in values:
        raise ConfigError(f"`{name}.kind` is missing.")

    out = {"kind": values["kind"]}
    for key in ("radius", "sigma"):
        if key in values:
            out[key] = _check_type(f"{name}.{key}", values[key], 0.0)

    try:
        make_kernel(**out)
    except ParameterError as e:
        raise ConfigError(f"Invalid `{name}`: {e}") from e

    return out


def _check_numerics(numerics):
    if not numerics["dx"] > 0:
        raise ConfigError("`numerics.dx` must be positive.")
    dt = numerics["dt"]
    if isinstance(dt, str):
        if dt != "auto":
            raise ConfigError(f"`numerics.dt` must be \"auto\" or a number, got {dt!r}.")
    elif not _is_number(dt) or not dt > 0:
        raise ConfigError(f"`numerics.dt` must be \"auto\" or a positive number, got {dt!r}.")
    else:
        numerics["dt"] = float(dt)
    for key in ("periods", "max_periods"):
        if numerics[key] < 1:
            raise ConfigError(f"`numerics.{key}` must be at least 1.")
    if numerics["snapshot_every"] < 0:
        raise ConfigError("`numerics.snapshot_every` must be nonnegative.")
    if not numerics["period_tol"] > 0:
        raise ConfigError("`numerics.period_tol` must be positive.")


def parse_config(text, command=None):
    """
    Parse and validate a TOML run configuration.

    Parameters
    ----------
    text: TOML source with a [model] section and optional [kernel], [kernel2], [numerics] and
          command sections.
    command: If given, also check that the configuration suits this command.

    Returns
    -------
    RunConfig
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Malformed configuration: {e}") from e

    known = {"model", "kernel", "kernel2", "numerics", *SECTIONS}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"Unknown section `{unknown[0]}`.")

    if "model" not in data:
        raise ConfigError("The `model` section is missing.")

    model_values = data["model"]
    for key, value in model_values.items():
        if key in ModelParams.field_names() and not _is_number(value):
            raise ConfigError(f"Malformed value for `model.{key}`: {value!r}.")
    try:
        model = ModelParams.from_mapping(model_values).check()
    except ParameterError as e:
        raise ConfigError(str(e)) from e

    defaulted = []

    if "kernel" in data:
        kernel = _parse_kernel("kernel", data["kernel"])
    else:
        kernel = dict(DEFAULT_KERNEL)
        defaulted.append("kernel")
    kernel2 = _parse_kernel("kernel2", data["kernel2"]) if "kernel2" in data else None

    numerics = _fill("numerics", data.get("numerics", {}), NUMERICS, defaulted)
    _check_numerics(numerics)

    sections = {}
    for name, defaults in SECTIONS.items():
        values = data.get(name, {})
        if not isinstance(values, dict):
            raise ConfigError(f"`{name}` must be a section.")
        section = _fill(name, values, defaults, defaulted)

        for key, bound in (("left", -model.h0), ("right", model.h0)):
            if key in section and section[key] is None:
                section[key] = bound

        sections[name] = section

    for name in ("lamP", "periodic"):
        if not sections[name]["left"] < sections[name]["right"]:
            raise ConfigError(f"`{name}.left` must be below `{name}.right`.")

    config = RunConfig(model, kernel, kernel2, numerics, sections, tuple(defaulted))

    if command is not None:
        config.check_command(command)

    return config


def load_config(path, command=None):
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read(), command)


def format_float(value):
    """
    Format with 17 significant digits, always readable back as a TOML float.
    """
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"

    text = "%.17g" % value
    if not any(c in text for c in ".e"):
        text += ".0"
    return text


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, list):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return json.dumps(value)


def _emit_section(name, values):
    lines = [f"[{name}]"]
    lines.extend(f"{key} = {_format_value(value)}" for key, value in values.items())
    return lines


def emit_config(config):
    """
    Serialise a RunConfig to TOML with every value explicit; parse_config(emit_config(c)) == c.

    Returns
    -------
    str
    """
    lines = []
    if config.defaulted:
        lines.append("# defaulted: " + ", ".join(config.defaulted))

    lines += _emit_section("model", config.model.as_dict())
    lines += _emit_section("kernel", config.kernel)
    if config.kernel2 is not None:
        lines += _emit_section("kernel2", config.kernel2)
    lines += _emit_section("numerics", config.numerics)
    for name, values in config.sections.items():
        lines += _emit_section(name, values)

    return "\n".join(lines) + "\n"
