# Dispersal kernels: densities, tail integrals and checks of the kernel assumptions

import numpy as np

from scipy.integrate import quad
from scipy.special import erf

from .errors import ParameterError

GAUSSIAN_CUTOFF = 6.0


class Kernel(object):
    """
    A symmetric dispersal density J with compact (or effectively compact) support.

    Builtin kernels are created with `make_kernel`; arbitrary densities can be wrapped
    directly, in which case the tail is computed by quadrature and `check_kernel` should be
    used to confirm the kernel assumptions hold.

    Methods
    -------
    density(x)
        Evaluate J at x (vectorised).
    tail(z)
        Evaluate the tail integral of J from z to infinity (vectorised).
    """
    def __init__(self, density, support_radius, tail=None, kind="custom", scale=None):
        """
        Parameters
        ----------
        density: A vectorised function returning J(x).
        support_radius: J vanishes outside [-support_radius, support_radius].
        tail: A vectorised closed form for the tail integral (optional).
        kind: Name of the kernel family, used for equality and config output.
        scale: Shape parameter of the family (radius or sigma).
        """
        if not support_radius > 0:
            raise ParameterError("support_radius must be positive.")

        self._density = density
        self._tail = tail
        self.support_radius = float(support_radius)
        self.kind = kind
        self.scale = scale

    def density(self, x):
        return self._density(np.asarray(x, dtype=float))

    def tail(self, z):
        z = np.asarray(z, dtype=float)

        if self._tail is not None:
            return self._tail(z)

        # No closed form: integrate numerically, one point at a time
        r = self.support_radius
        out = np.empty(z.shape)
        for ind, value in np.ndenumerate(z):
            lower = min(max(value, -r), r)
            out[ind] = quad(lambda s: float(self._density(np.asarray(s))), lower, r,
                            epsabs=1e-13, limit=200)[0]
        return out if out.shape else float(out)

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        if self.kind == "custom" or other.kind == "custom":
            return self is other
        return self.kind == other.kind and self.scale == other.scale

    def __hash__(self):
        return hash((self.kind, self.scale)) if self.kind != "custom" else id(self)

    def __repr__(self):
        return f"Kernel(kind={self.kind!r}, scale={self.scale!r})"

    def as_dict(self):
        key = "radius" if self.kind == "tent" else "sigma"
        return {"kind": self.kind, key: self.scale}


def _tent(radius):
    r = float(radius)

    def density(x):
        return np.where(np.abs(x) < r, (r - np.abs(x)) / r**2, 0.0)

    def tail(z):
        a = np.clip(np.abs(z), 0, r)
        upper = (r - a) ** 2 / (2 * r**2)
        return np.where(z >= 0, upper, 1 - upper)

    return Kernel(density, r, tail, kind="tent", scale=r)


def _truncated_gaussian(sigma):
    s = float(sigma)
    cutoff = GAUSSIAN_CUTOFF * s
    norm = erf(GAUSSIAN_CUTOFF / np.sqrt(2))

    def density(x):
        values = np.exp(-0.5 * (x / s) ** 2) / (s * np.sqrt(2 * np.pi) * norm)
        return np.where(np.abs(x) <= cutoff, values, 0.0)

    def tail(z):
        a = np.clip(np.abs(z), 0, cutoff)
        upper = (norm - erf(a / (s * np.sqrt(2)))) / (2 * norm)
        return np.where(z >= 0, upper, 1 - upper)

    return Kernel(density, cutoff, tail, kind="truncated_gaussian", scale=s)


_BUILDERS = {
    "tent": ("radius", _tent),
    "truncated_gaussian": ("sigma", _truncated_gaussian),
}


def make_kernel(kind, radius=None, sigma=None):
    """
    Build one of the builtin continuous kernels.

    Parameters
    ----------
    kind: "tent" (triangular density on [-radius, radius]) or "truncated_gaussian" (normal
          density cut at 6 sigma and renormalised).
    radius: Half-width of the tent kernel.
    sigma: Standard deviation of the untruncated Gaussian.

    Returns
    -------
    Kernel
    """
    if kind not in _BUILDERS:
        raise ParameterError(f"Unknown kernel kind {kind!r}; expected one of {sorted(_BUILDERS)}.")

    key, builder = _BUILDERS[kind]
    value = radius if key == "radius" else sigma

    if value is None:
        raise ParameterError(f"Kernel kind {kind!r} needs `{key}`.")
    if not value > 0:
        raise ParameterError(f"Kernel {key} must be positive, got {value}.")

    return builder(value)


def kernel_mass(kernel):
    r = kernel.support_radius
    return quad(lambda s: float(kernel.density(s)), -r, r, points=[0.0], epsabs=1e-13, limit=200)[0]


def check_kernel(kernel, n_samples=10_000, mass_tol=1e-10, modulus=1e-2):
    """
    List the kernel assumptions a kernel fails.

    Continuity is tested with a discrete modulus: successive differences of the density
    over `n_samples` points covering slightly more than the support may not exceed
    `modulus` times the peak density.

    Parameters
    ----------
    kernel: A Kernel.
    n_samples: Number of sample points.
    mass_tol: Allowed deviation of the total mass from 1.
    modulus: Allowed relative jump between neighbouring samples.

    Returns
    -------
    list of str
        Empty if every check passes.
    """
    report = []
    r = kernel.support_radius
    x = np.linspace(-1.1 * r, 1.1 * r, n_samples)
    values = kernel.density(x)

    if not np.all(np.isfinite(values)):
        report.append("density not bounded")
        return report

    if np.any(values < 0):
        report.append("density negative")

    if not np.allclose(values, kernel.density(-x), rtol=0, atol=1e-14 * max(values.max(), 1)):
        report.append("density not symmetric")

    peak = float(kernel.density(0.0))
    if not peak > 0:
        report.append("density(0) not positive")

    if np.max(np.abs(np.diff(values))) > modulus * max(values.max(), peak):
        report.append("density not continuous")

    if abs(kernel_mass(kernel) - 1) > mass_tol:
        report.append("mass not 1")

    z = np.linspace(0, r, 101)
    tails = kernel.tail(z)
    if abs(tails[0] - 0.5) > 1e-9:
        report.append("tail(0) not 1/2")
    if np.any(np.diff(tails) > 1e-15):
        report.append("tail not nonincreasing")
    if abs(tails[-1]) > 1e-9:
        report.append("tail does not vanish at the support radius")

    return report
