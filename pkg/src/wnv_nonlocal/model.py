# Model parameters, the season clock and the basic reproduction number

import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, fields, replace as dc_replace
from enum import Enum

from .errors import ParameterError


@dataclass(frozen=True)
class ModelParams:
    """
    Rates and geometry of the seasonal West Nile virus model with nonlocal dispersal and free
    boundaries.

    Species 1 are infected birds, species 2 infected adult mosquitoes. The warm season occupies
    the first (1 - delta) * omega of every period, the cold season the remainder.

    Attributes
    ----------
    a1, a2: Transmission coefficients (1 / (density * time)).
    e1, e2: Total bird and adult mosquito densities.
    b1: Bird removal rate.
    b2: Warm-season mosquito death rate.
    k: Cold-season mosquito decay rate.
    d1, d2: Dispersal rates.
    omega: Period length.
    delta: Fraction of the period spent in the cold season, in [0, 1].
    mu1, mu2: Boundary expansion coefficients.
    h0: Initial half-width of the infected interval.
    """
    a1: float
    a2: float
    e1: float
    e2: float
    b1: float
    b2: float
    k: float
    d1: float
    d2: float
    omega: float
    delta: float
    mu1: float
    mu2: float
    h0: float

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values):
        """
        Build parameters from a mapping with exactly the field names as keys.

        Parameters
        ----------
        values: A dict-like object of numeric values.

        Returns
        -------
        ModelParams
        """
        names = cls.field_names()
        unknown = sorted(set(values) - set(names))
        missing = [n for n in names if n not in values]

        if unknown:
            raise ParameterError(f"Unknown model parameter(s): {', '.join(unknown)}.")
        if missing:
            raise ParameterError(f"Missing model parameter(s): {', '.join(missing)}.")

        return cls(**{n: float(values[n]) for n in names})

    def as_dict(self):
        return {n: getattr(self, n) for n in self.field_names()}

    def replace(self, **changes):
        return dc_replace(self, **changes)

    def check(self):
        """
        Raise a ParameterError listing every violated invariant, otherwise return self.
        """
        report = validate_params(self)

        if report:
            raise ParameterError("Invalid model parameters: " + "; ".join(report) + ".")

        return self

    @property
    def r0(self):
        return basic_reproduction_number(self)

    @property
    def clock(self):
        return SeasonClock(self.omega, self.delta)


_POSITIVE = ("a1", "a2", "e1", "e2", "b1", "b2", "k", "omega", "h0")
_NONNEGATIVE = ("d1", "d2", "mu1", "mu2")


def validate_params(p):
    """
    List the invariants violated by a parameter set.

    Parameters
    ----------
    p: A ModelParams instance.

    Returns
    -------
    list of str
        One message per violated invariant; empty if the parameters are valid.
    """
    report = []

    for name in _POSITIVE:
        value = getattr(p, name)
        if not math.isfinite(value) or value <= 0:
            report.append(f"{name} not positive")

    for name in _NONNEGATIVE:
        value = getattr(p, name)
        if not math.isfinite(value):
            report.append(f"{name} not finite")
        elif value < 0:
            report.append(f"{name} negative")

    if not (0 <= p.delta <= 1):
        report.append("delta out of [0,1]")

    return report


def basic_reproduction_number(p):
    """
    Basic reproduction number sqrt(a1 a2 e1 e2 / (b1 b2)) of the warm-season ODE system.
    """
    return math.sqrt(p.a1 * p.a2 * p.e1 * p.e2 / (p.b1 * p.b2))


def load_params(path):
    """
    Read the `[model]` section of a TOML configuration file.

    Parameters
    ----------
    path: Path to the configuration file.

    Returns
    -------
    ModelParams
    """
    with open(path, "rb") as f:
        data = tomllib.load(f)

    if "model" not in data:
        raise ParameterError(f"{path} has no [model] section.")

    return ModelParams.from_mapping(data["model"])


class Phase(Enum):
    WARM = "warm"
    COLD = "cold"


@dataclass(frozen=True)
class SeasonClock:
    """
    Maps a time to its season. Period m covers (m * omega, (m + 1) * omega]; its warm season is
    (m * omega, m * omega + warm_len] and its cold season the rest.
    """
    omega: float
    delta: float

    @property
    def warm_len(self):
        return (1 - self.delta) * self.omega

    @property
    def cold_len(self):
        return self.delta * self.omega

    def period_index(self, t):
        return int(math.floor(t / self.omega))

    def phase(self, t):
        """
        Season at time t. Degenerate clocks (delta = 0 or 1) have a single season.
        """
        if self.cold_len == 0:
            return Phase.WARM
        if self.warm_len == 0:
            return Phase.COLD

        s = math.fmod(t, self.omega)
        if s < 0:
            s += self.omega

        return Phase.WARM if 0 < s <= self.warm_len else Phase.COLD

    def season_start(self, t):
        """
        Start time of the season containing t.
        """
        m = self.period_index(t)
        start = m * self.omega

        if self.phase(t) is Phase.COLD and self.warm_len > 0:
            s = t - start
            if s == 0:
                # t sits on a period boundary, which closes the previous cold season
                start -= self.omega
            return start + self.warm_len

        return start
