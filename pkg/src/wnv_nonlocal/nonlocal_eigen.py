# Functions for principal eigenvalues of the nonlocal dispersal operator on bounded intervals, and
# of the seasonal nonlocal system built from it

import math

from dataclasses import dataclass
from functools import lru_cache
from warnings import warn

import numpy as np
import pandas as pd

from scipy.integrate import trapezoid
from scipy.sparse.linalg import eigsh

from .eigen_cache import CachedPrincipalEigenvalue
from .errors import ConvergenceError, KernelMismatchError, ParameterError
from .model import SeasonClock
from .ode_eigen import N_SAMPLES, lambda1_O, spectral_constants
from .utils.quadrature import (fitted_spacing, grid_size, kernel_operator, lattice_range,
                               lattice_stencil, symmetrised_operator)

POWER_MAX_NODES = 1000
METHODS = ("auto", "power", "lanczos")


def check_same_kernel(kernel, kernel2=None):
    """
    Eigenvalue computations assume both species disperse with one kernel.
    """
    if kernel2 is not None and kernel2 != kernel:
        raise KernelMismatchError(f"Eigenvalues need J1 = J2, got {kernel!r} and {kernel2!r}.")


def _power_iteration(A, tol, residual_tol, max_iter):
    v = np.ones(A.shape[0]) / math.sqrt(A.shape[0])
    rho = 0.0

    for i in range(max_iter):
        w = A @ v
        rho_new = float(v @ w)
        residual = np.max(np.abs(w - rho_new * v))

        if abs(rho_new - rho) <= tol * abs(rho_new) and residual <= residual_tol:
            return rho_new, w / np.linalg.norm(w)

        rho = rho_new
        v = w / np.linalg.norm(w)

    raise ConvergenceError(f"Power iteration did not converge within {max_iter} steps "
                           f"(n={A.shape[0]}, last residual {residual:.3g}).")


def perron(A, method="auto", tol=1e-12, residual_tol=1e-10, max_iter=100_000):
    """
    Perron root and positive unit eigenvector of a symmetric nonnegative irreducible matrix.

    Parameters
    ----------
    A: Symmetric nonnegative (sparse) matrix.
    method: "power" (power iteration from the constant vector), "lanczos" (ARPACK) or "auto"
            (power iteration up to POWER_MAX_NODES nodes, Lanczos above).
    tol: Relative change of the Rayleigh quotient at which power iteration stops.
    residual_tol: Sup-norm residual required of the unit eigenvector.
    max_iter: Power iteration budget.

    Returns
    -------
    (rho, v)
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}.")

    n = A.shape[0]
    if method == "auto":
        method = "power" if n <= POWER_MAX_NODES else "lanczos"

    if method == "power" or n < 3:
        return _power_iteration(A, tol, residual_tol, max_iter)

    vals, vecs = eigsh(A, k=1, which="LA", v0=np.ones(n), tol=0)
    rho = float(vals[0])
    v = vecs[:, 0]
    v = v if v.sum() > 0 else -v

    residual = np.max(np.abs(A @ v - rho * v))
    if residual > residual_tol:
        warn(f"Lanczos eigenvector residual {residual:.3g} exceeds {residual_tol:.1g}.",
             RuntimeWarning, stacklevel=3)

    return rho, v


@dataclass(frozen=True)
class NonlocalEigen:
    """
    Principal eigenpair of u -> int J(x - y) u(y) dy - u(x) on a closed interval.

    Attributes
    ----------
    lambda_star: Principal eigenvalue, in (-1, 0).
    eigvec: Eigenfunction samples at x, positive with sup 1.
    interval: (L1, L2).
    dx: Grid spacing.
    x: Grid nodes.
    """
    lambda_star: float
    eigvec: np.ndarray
    interval: tuple
    dx: float
    x: np.ndarray


@lru_cache(maxsize=256)
def _closed_interval_eigen(kernel, n_nodes, dx, method):
    stencil = lattice_stencil(kernel, dx)
    A, c = symmetrised_operator(stencil, n_nodes, end_weights=True)
    rho, v = perron(A, method=method)

    g = v / np.sqrt(c)
    g = g / g.max()
    g.setflags(write=False)

    return rho - 1, g


def lambda1_star(kernel, interval, dx=None, method="auto"):
    """
    Principal eigenvalue of the nonlocal dispersal operator on a closed interval.

    The operator is discretised by the composite trapezoid rule on equally spaced nodes and the
    Perron pair of the nonnegative map (operator + identity) is computed.

    Parameters
    ----------
    kernel: Kernel.
    interval: (L1, L2) with L1 < L2.
    dx: Grid spacing dividing L2 - L1 (default: support radius / 100).
    method: Perron solver, see `perron`.

    Returns
    -------
    NonlocalEigen
    """
    dx = kernel.support_radius / 100 if dx is None else float(dx)
    n_nodes = grid_size(interval, dx) + 1

    lam, g = _closed_interval_eigen(kernel, n_nodes, dx, method)
    x = interval[0] + np.arange(n_nodes) * dx

    return NonlocalEigen(lam, g.copy(), tuple(interval), dx, x)


def shifted_params(p, lambda_star):
    """
    Parameters with b_i replaced by b_i - d_i * lambda_star (k is not shifted).
    """
    return p.replace(b1=p.b1 - p.d1 * lambda_star, b2=p.b2 - p.d2 * lambda_star)


@dataclass(frozen=True)
class EigenResultNonlocal:
    """
    Principal (or generalized) eigenvalue of the seasonal nonlocal system on an interval.

    Attributes
    ----------
    lambda_P: Principal(value) or GeneralizedPair(upper, lower).
    s1, s2: Warm-season constants of the shifted rates.
    star: The underlying NonlocalEigen.
    ode: EigenResultODE of the shifted homogeneous problem, carrying the time factors.
    """
    lambda_P: object
    s1: float
    s2: float
    star: NonlocalEigen
    ode: object

    @property
    def value(self):
        return self.ode.value

    @property
    def upper(self):
        return self.lambda_P.upper

    @property
    def lower(self):
        return self.lambda_P.lower

    def eigenfunctions(self):
        """
        Separable eigenfunction pair f_i(t) g(x) on the time and space grids.

        Returns
        -------
        (t, x, phi, psi, phi_t, psi_t), each field of shape (len(t), len(x)).
        """
        if not self.ode.is_principal:
            raise ParameterError("No principal eigenfunction exists for a generalized pair.")

        g = self.star.eigvec
        ode = self.ode
        return (ode.t, self.star.x, np.outer(ode.phi, g), np.outer(ode.psi, g),
                np.outer(ode.phi_t, g), np.outer(ode.psi_t, g))


def lambda1_P(p, kernel, interval, dx=None, kernel2=None, method="auto", n_samples=N_SAMPLES):
    """
    Principal eigenvalue of the seasonal nonlocal system on an interval.

    With one kernel shared by both species the eigenfunctions separate in t and x, and the
    eigenvalue equals the homogeneous one with b_i replaced by b_i - d_i * lambda_star.

    Parameters
    ----------
    p: ModelParams.
    kernel: Kernel of both species.
    interval: (L1, L2).
    dx: Grid spacing (default: support radius / 100).
    kernel2: Optional second kernel; must equal `kernel`.
    method: Perron solver, see `perron`.
    n_samples: Number of time samples of the eigenfunctions.

    Returns
    -------
    EigenResultNonlocal
    """
    check_same_kernel(kernel, kernel2)
    p.check()

    star = lambda1_star(kernel, interval, dx=dx, method=method)
    ode = lambda1_O(shifted_params(p, star.lambda_star), n_samples=n_samples)
    sc = spectral_constants(p, star.lambda_star)

    return EigenResultNonlocal(ode.kind, sc.s1, sc.s2, star, ode)


class LatticeEigenvalue(CachedPrincipalEigenvalue):
    """
    Principal eigenvalue of the nonlocal operator restricted to n consecutive nodes of the
    lattice dx * Z, every node carrying the full quadrature weight. Values depend on the node
    count only and are nondecreasing in it.
    """
    def __init__(self, kernel, dx, method="auto", max_nodes=256):
        super().__init__(max_nodes)
        self.kernel = kernel
        self.dx = float(dx)
        self.method = method
        self.stencil = lattice_stencil(kernel, self.dx)

    def calculate(self, n_nodes):
        A, _ = symmetrised_operator(self.stencil, n_nodes, end_weights=False)
        rho, _ = perron(A, method=self.method)
        return rho - 1


@lru_cache(maxsize=32)
def lattice_store(kernel, dx, method="auto"):
    """
    Shared LatticeEigenvalue store per (kernel, dx, method).
    """
    return LatticeEigenvalue(kernel, dx, method)


class FreeBoundaryIndex(object):
    """
    The free-boundary index lambda_1^F: the seasonal principal eigenvalue on the current infected
    interval (g, h), evaluated on the simulator's active lattice nodes.

    The active nodes lie strictly inside (g, h) and the densities vanish at g and h, so every
    node carries the full weight. `lambda1_P` on a closed interval uses trapezoid end weights
    instead; the two agree to O(dx), so near lambda = 0 the static and dynamic rules may differ
    at a fixed dx.

    For a generalized pair (delta = 1) the upper eigenvalue is reported.
    """
    def __init__(self, p, kernel, dx, method="auto", store=None):
        """
        Parameters
        ----------
        p: ModelParams.
        kernel: Kernel of both species.
        dx: Lattice spacing.
        method: Perron solver, see `perron`.
        store: A LatticeEigenvalue store (default: the shared store for kernel and dx).
        """
        self.p = p
        self.kernel = kernel
        self.dx = float(dx)
        self.store = lattice_store(kernel, self.dx, method) if store is None else store

    def node_count(self, g, h):
        j_min, j_max = lattice_range(g, h, self.dx)
        return max(j_max - j_min + 1, 0)

    def lambda_star(self, n_nodes):
        return self.store.get(n_nodes)

    def from_count(self, n_nodes):
        lam_star = self.lambda_star(n_nodes)
        return lambda1_O(shifted_params(self.p, lam_star), n_samples=2).upper

    def __call__(self, g, h):
        if not g < h:
            raise ParameterError("The interval must satisfy g < h.")
        n = self.node_count(g, h)
        if n < 1:
            raise ParameterError(f"No lattice node of spacing {self.dx} lies inside ({g}, {h}).")
        return self.from_count(n)


def lambda1_F(p, kernel, g, h, dx=None, kernel2=None, method="auto"):
    """
    Free-boundary index lambda_1^F for the interval (g, h) on the lattice dx * Z.

    Returns
    -------
    float
    """
    check_same_kernel(kernel, kernel2)
    dx = kernel.support_radius / 100 if dx is None else dx
    return FreeBoundaryIndex(p, kernel, dx, method)(g, h)


def lambda1_O_limit_check(p, kernel, L_sequence, dx=None, method="auto"):
    """
    Convergence of lambda_1^P([-L, L]) to the homogeneous eigenvalue as L grows.

    Parameters
    ----------
    p: ModelParams with delta < 1.
    kernel: Kernel of both species.
    L_sequence: Increasing half-widths.
    dx: Grid spacing dividing every 2L.
    method: Perron solver, see `perron`.

    Returns
    -------
    pandas DataFrame with columns L, lambda_star, lambda_P, lambda_O and gap.
    """
    if not p.delta < 1:
        raise ParameterError("The limit identity needs delta < 1.")

    lam_O = lambda1_O(p, n_samples=2).value
    rows = []

    for L in L_sequence:
        res = lambda1_P(p, kernel, (-L, L), dx=dx, method=method, n_samples=2)
        rows.append((float(L), res.star.lambda_star, res.value, lam_O, res.value - lam_O))

    df = pd.DataFrame(rows, columns=["L", "lambda_star", "lambda_P", "lambda_O", "gap"])
    gaps = df["gap"].to_numpy()
    df.attrs["monotone"] = bool(np.all(np.diff(gaps) <= 0))

    if not df.attrs["monotone"]:
        warn("Gaps to the homogeneous eigenvalue are not decreasing in L.", RuntimeWarning, stacklevel=2)

    return df


@dataclass(frozen=True)
class CertifiedBounds:
    lower: float
    upper: float


def certified_bounds(p, kernel, x, t, phi, psi, phi_t, psi_t, kernel2=None):
    """
    Bracket the seasonal principal eigenvalue using a positive periodic test pair.

    For each sample the residual ratio (phi_t - d1 L[phi] - a1e1 psi + b1 phi) / phi (and its
    analogue for psi, with the cold-season equations where they apply) is formed; the smallest
    and largest ratios bound the principal eigenvalue from below and above.

    Parameters
    ----------
    p: ModelParams.
    kernel: Kernel of both species.
    x: Equally spaced nodes of the closed interval.
    t: Sample times in [0, omega]; t <= (1 - delta) omega uses the warm-season equations.
    phi, psi: Positive test functions, shape (len(t), len(x)).
    phi_t, psi_t: Their time derivatives (left derivatives at the season switch).
    kernel2: Optional second kernel; must equal `kernel`.

    Returns
    -------
    CertifiedBounds
    """
    check_same_kernel(kernel, kernel2)

    phi, psi, phi_t, psi_t = (np.asarray(a, dtype=float) for a in (phi, psi, phi_t, psi_t))
    if np.any(phi <= 0) or np.any(psi <= 0):
        raise ValueError("Test functions must be positive.")

    x = np.asarray(x, dtype=float)
    dx = x[1] - x[0]
    K, _ = kernel_operator(lattice_stencil(kernel, dx), len(x), end_weights=True)

    L_phi = (K @ phi.T).T - phi
    L_psi = (K @ psi.T).T - psi

    warm_len = SeasonClock(p.omega, p.delta).warm_len
    warm = ((np.asarray(t) <= warm_len) & (warm_len > 0))[:, None]

    r1 = (phi_t - p.d1 * L_phi + p.b1 * phi - np.where(warm, p.a1 * p.e1 * psi, 0.0)) / phi
    r2 = np.where(warm,
                  (psi_t - p.d2 * L_psi + p.b2 * psi - p.a2 * p.e2 * phi) / psi,
                  (psi_t + p.k * psi) / psi)

    ratios = np.concatenate([r1.ravel(), r2.ravel()])
    return CertifiedBounds(float(ratios.min()), float(ratios.max()))


@dataclass(frozen=True)
class DecayingUpperSolution:
    """
    Explicit upper solution M exp(-gamma t) (phi, psi) on the interval
    [-h_bar(t), h_bar(t)], h_bar(t) = h0 + eps0 (1 - exp(-gamma t)).

    Initial data with sup u_{1,0} + sup u_{2,0} <= sigma * M on [-h0, h0] lie below it, so their
    solution vanishes and its interval stays inside [-h0 - eps0, h0 + eps0].
    """
    h0: float
    eps0: float
    lambda_P: float
    gamma: float
    M: float
    sigma: float
    t: np.ndarray
    x: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    @property
    def h1(self):
        return self.h0 + self.eps0

    @property
    def init_bound(self):
        return self.sigma * self.M

    def boundary(self, t):
        return self.h0 + self.eps0 * (1 - np.exp(-self.gamma * np.asarray(t, dtype=float)))


def decaying_upper_solution(p, kernel, eps0, h0=None, dx=None, method="auto", n_samples=N_SAMPLES):
    """
    Build the decaying upper solution certifying vanishing for small initial data.

    Parameters
    ----------
    p: ModelParams.
    kernel: Kernel of both species.
    eps0: Allowed growth of the half-width.
    h0: Initial half-width (default: p.h0).
    dx: Target grid spacing; adjusted down so that it divides 2 (h0 + eps0).
    method: Perron solver, see `perron`.
    n_samples: Number of time samples over one period.

    Returns
    -------
    DecayingUpperSolution
    """
    h0 = p.h0 if h0 is None else float(h0)
    if not eps0 > 0:
        raise ParameterError("eps0 must be positive.")

    h1 = h0 + eps0
    dx = kernel.support_radius / 100 if dx is None else dx

    res = lambda1_P(p, kernel, (-h1, h1), dx=fitted_spacing(2 * h1, dx), method=method,
                    n_samples=n_samples)
    if not res.ode.is_principal:
        raise ParameterError("The decaying upper solution needs a principal eigenfunction (delta < 1 or b1 = k).")
    if not res.value > 0:
        raise ParameterError(f"lambda_1^P([-h1, h1]) = {res.value:.6g} is not positive; "
                             "no decaying upper solution exists.")

    lam = res.value
    t, x, phi, psi, _, _ = res.eigenfunctions()
    scale = 1.0 / np.max(phi + psi)
    phi = phi * scale
    psi = psi * scale

    gamma = lam / 2
    flux = trapezoid(p.mu1 * phi + p.mu2 * psi, x, axis=1)
    M = math.inf if flux.max() == 0 else gamma * eps0 / flux.max()

    inner = np.abs(x) <= h0 + 1e-9 * h1
    sigma = float(min(phi[0, inner].min(), psi[0, inner].min()))

    return DecayingUpperSolution(h0, eps0, lam, gamma, M, sigma, t, x, phi, psi)
