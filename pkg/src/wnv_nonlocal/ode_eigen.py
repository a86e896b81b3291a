# Functions for the principal eigenvalue of the spatially homogeneous seasonal eigenvalue problem

import math

from dataclasses import dataclass
from enum import Enum
from warnings import warn

import numpy as np
import pandas as pd

from .errors import BracketError, ConvergenceError, ParameterError, RootSelectionError
from .utils.roots import bisect_sign

N_SAMPLES = 201


@dataclass(frozen=True)
class SpectralConstants:
    """
    Constants of the warm-season linearisation.

    Attributes
    ----------
    c1, c2: Eigenvalues (c1 > c2) of the warm-season matrix [[-b1, a1e1], [a2e2, -b2]].
    C0: Normaliser a1a2e1e2 + (b1 + c1)^2 of the eigenfunctions.
    s1, s2: The same eigenvalues with b_i replaced by b_i - d_i * lambda_star.
    beta: b1 + c1 = -(b2 + c2) > 0.
    """
    c1: float
    c2: float
    C0: float
    s1: float
    s2: float
    beta: float


def _warm_roots(q, b1, b2):
    # Roots c1 > c2 of (c + b1)(c + b2) = q and b1 + c1, each free of cancellation
    sq = math.sqrt((b1 - b2) ** 2 + 4 * q)
    c1 = 2 * (q - b1 * b2) / (b1 + b2 + sq)
    c2 = -(b1 + b2 + sq) / 2
    beta = (b1 - b2 + sq) / 2 if b1 >= b2 else 2 * q / (b2 - b1 + sq)
    return c1, c2, beta


def spectral_constants(p, lambda_star=0.0):
    """
    Warm-season constants c1, c2, C0 and their shifted analogues s1, s2.

    Parameters
    ----------
    p: ModelParams.
    lambda_star: Principal eigenvalue of the nonlocal operator used for the shift (0 gives s_i = c_i).

    Returns
    -------
    SpectralConstants
    """
    q = p.a1 * p.a2 * p.e1 * p.e2
    c1, c2, beta = _warm_roots(q, p.b1, p.b2)
    s1, s2, _ = _warm_roots(q, p.b1 - p.d1 * lambda_star, p.b2 - p.d2 * lambda_star)

    return SpectralConstants(c1=c1, c2=c2, C0=q + beta**2, s1=s1, s2=s2, beta=beta)


class CaseTag(Enum):
    K_EQUALS_B1 = "KEqualsB1"
    K_GREATER = "KGreater"
    K_LESS = "KLess"
    DELTA_ONE = "DeltaOne"


@dataclass(frozen=True)
class Principal:
    value: float

    @property
    def upper(self):
        return self.value

    @property
    def lower(self):
        return self.value


@dataclass(frozen=True)
class GeneralizedPair:
    upper: float
    lower: float


@dataclass(frozen=True)
class EigenResultODE:
    """
    Principal (or generalized) eigenvalue of the homogeneous problem with its eigenfunctions.

    Attributes
    ----------
    kind: Principal(value) or GeneralizedPair(upper, lower).
    m: Mixture coefficient of the two warm-season modes.
    Lambda: exp(lambda * omega).
    case_tag: CaseTag of the branch used.
    t: Uniform sample times over [0, omega].
    phi, psi: Eigenfunctions at t, normalised by psi(0) = 1 (None for a generalized pair).
    phi_t, psi_t: Time derivatives at t (one-sided from the left at the season switch).
    debug: The eight coefficients A_ij of the periodicity system, when it was solved.
    """
    kind: object
    m: float
    Lambda: float
    case_tag: CaseTag
    t: np.ndarray = None
    phi: np.ndarray = None
    psi: np.ndarray = None
    phi_t: np.ndarray = None
    psi_t: np.ndarray = None
    debug: dict = None

    @property
    def is_principal(self):
        return isinstance(self.kind, Principal)

    @property
    def value(self):
        """
        The principal eigenvalue; raises for a generalized pair.
        """
        if not self.is_principal:
            raise ParameterError("No principal eigenvalue exists: the generalized eigenvalues differ.")
        return self.kind.value

    @property
    def upper(self):
        return self.kind.upper

    @property
    def lower(self):
        return self.kind.lower


def _coefficients(p, sc):
    tw = (1 - p.delta) * p.omega
    tc = p.delta * p.omega
    a1e1 = p.a1 * p.e1
    a2e2 = p.a2 * p.e2
    beta = sc.beta

    return {
        "A11": a1e1 * math.exp(sc.c1 * tw),
        "A12": beta * math.exp(sc.c2 * tw),
        "A13": beta * math.exp(p.b1 * tc),
        "A14": a1e1 * math.exp(p.b1 * tc),
        "A21": beta * math.exp(sc.c1 * tw),
        "A22": a2e2 * math.exp(sc.c2 * tw),
        "A23": a2e2 * math.exp(p.k * tc),
        "A24": beta * math.exp(p.k * tc),
    }


def _stable_quadratic(a, b, c):
    # Real roots of a x^2 + b x + c with the cancellation-free formula
    disc = b * b - 4 * a * c
    if disc < 0:
        if disc < -1e-12 * b * b:
            return []
        disc = 0.0

    root = math.sqrt(disc)
    w = -0.5 * (b + math.copysign(root, b))
    if w == 0:
        return [0.0, 0.0]

    return sorted([w / a, c / w])


def lambda_quadratic(A):
    """
    Coefficients (a, b, c) of the quadratic a L^2 + b L + c = 0 obeyed by Lambda = exp(lambda omega).
    """
    return (A["A11"] * A["A22"] + A["A12"] * A["A21"],
            -(A["A13"] * A["A21"] + A["A11"] * A["A23"] + A["A22"] * A["A14"] + A["A12"] * A["A24"]),
            A["A23"] * A["A14"] + A["A13"] * A["A24"])


def m_quadratic(A):
    """
    Coefficients (a, b, c) of the quadratic a m^2 + b m + c = 0 obeyed by the mixture coefficient.
    """
    return (A["A13"] * A["A22"] - A["A12"] * A["A23"],
            -(A["A22"] * A["A14"] + A["A12"] * A["A24"] - A["A13"] * A["A21"] - A["A11"] * A["A23"]),
            A["A11"] * A["A24"] - A["A21"] * A["A14"])


def _mixture(A, Lam):
    # m from whichever periodicity equation is better conditioned at this root
    den1 = A["A13"] - A["A12"] * Lam
    den2 = A["A22"] * Lam - A["A23"]
    if abs(den1) >= abs(den2):
        return (A["A14"] - A["A11"] * Lam) / den1 if den1 != 0 else math.inf
    return (A["A24"] - A["A21"] * Lam) / den2


def _warm_modes(p, sc, lam, m, t):
    # Unnormalised warm-season eigenfunctions and their derivatives
    mu1 = lam + sc.c1
    mu2 = lam + sc.c2
    a1e1 = p.a1 * p.e1
    a2e2 = p.a2 * p.e2
    e1 = np.exp(mu1 * t)
    e2 = np.exp(mu2 * t)

    phi = (a1e1 * e1 - sc.beta * m * e2) / sc.C0
    psi = (sc.beta * e1 + a2e2 * m * e2) / sc.C0
    phi_t = (a1e1 * mu1 * e1 - sc.beta * m * mu2 * e2) / sc.C0
    psi_t = (sc.beta * mu1 * e1 + a2e2 * m * mu2 * e2) / sc.C0

    return phi, psi, phi_t, psi_t


def eigenfunctions(p, sc, lam, m, t):
    """
    Evaluate the periodic eigenfunction pair for eigenvalue `lam` and mixture coefficient `m`.

    The warm season uses the two warm modes, the cold season continues each component with its
    own decoupled exponential.

    Parameters
    ----------
    p: ModelParams.
    sc: SpectralConstants of p.
    lam: Eigenvalue.
    m: Mixture coefficient.
    t: Sample times in [0, omega].

    Returns
    -------
    (phi, psi, phi_t, psi_t) normalised by psi(0) = 1.
    """
    t = np.asarray(t, dtype=float)
    tw = (1 - p.delta) * p.omega

    phi, psi, phi_t, psi_t = _warm_modes(p, sc, lam, m, np.minimum(t, tw))
    phi_w, psi_w, _, _ = _warm_modes(p, sc, lam, m, tw)
    cold = t > tw

    if np.any(cold):
        s = t[cold] - tw
        f1 = np.exp((lam - p.b1) * s)
        f2 = np.exp((lam - p.k) * s)
        phi[cold] = phi_w * f1
        psi[cold] = psi_w * f2
        phi_t[cold] = (lam - p.b1) * phi[cold]
        psi_t[cold] = (lam - p.k) * psi[cold]

    _, psi0, _, _ = _warm_modes(p, sc, lam, m, 0.0)

    return phi / psi0, psi / psi0, phi_t / psi0, psi_t / psi0


def _is_positive(p, sc, lam, m):
    # Each warm-season component is A exp(c1 t) - B exp(c2 t), so its sign changes at most once
    # and the two season ends decide positivity; the cold season only rescales.
    if not (math.isfinite(m) and math.isfinite(lam)):
        return False

    tw = (1 - p.delta) * p.omega
    for s in (0.0, tw):
        phi, psi, _, _ = _warm_modes(p, sc, lam, m, s)
        if not (phi > 0 and psi > 0):
            return False
    return True


def _case_tag(p):
    if p.delta == 1:
        return CaseTag.DELTA_ONE
    if p.k == p.b1:
        return CaseTag.K_EQUALS_B1
    return CaseTag.K_GREATER if p.k > p.b1 else CaseTag.K_LESS


def _principal(p, sc, lam, m, Lam, case_tag, n_samples, debug=None):
    t = np.linspace(0, p.omega, n_samples)
    phi, psi, phi_t, psi_t = eigenfunctions(p, sc, lam, m, t)

    return EigenResultODE(Principal(lam), m, Lam, case_tag, t, phi, psi, phi_t, psi_t, debug)


def lambda1_O(p, n_samples=N_SAMPLES):
    """
    Principal eigenvalue of the spatially homogeneous periodic problem with seasonal switching.

    For delta = 1 and b1 != k no principal eigenvalue exists and the generalized pair
    (max{b1, k}, min{b1, k}) is returned. For k = b1 the closed form (b1 + c1) delta - c1 is
    used. Otherwise the periodicity system of the two warm modes is reduced to a quadratic in
    Lambda = exp(lambda omega), and the root whose eigenfunctions are positive is kept.

    Parameters
    ----------
    p: ModelParams.
    n_samples: Number of eigenfunction samples on [0, omega].

    Returns
    -------
    EigenResultODE
    """
    p.check()
    sc = spectral_constants(p)
    tag = _case_tag(p)

    if p.delta == 1 and p.b1 != p.k:
        upper, lower = max(p.b1, p.k), min(p.b1, p.k)
        return EigenResultODE(GeneralizedPair(upper, lower), math.nan, math.nan, tag)

    if p.delta == 1 or p.k == p.b1:
        lam = p.b1 if p.delta == 1 else sc.beta * p.delta - sc.c1
        return _principal(p, sc, lam, 0.0, math.exp(lam * p.omega), tag, n_samples)

    A = _coefficients(p, sc)
    roots = _stable_quadratic(*lambda_quadratic(A))

    admissible = []
    for Lam in roots:
        if not Lam > 0:
            continue
        lam = math.log(Lam) / p.omega
        m = _mixture(A, Lam)
        if _is_positive(p, sc, lam, m):
            admissible.append((lam, m, Lam))

    if len(admissible) != 1:
        raise RootSelectionError(
            f"{len(admissible)} of the roots {roots} give positive eigenfunctions for {p}.")

    lam, m, Lam = admissible[0]

    return _principal(p, sc, lam, m, Lam, tag, n_samples, debug=A)


def _expm2(A, t):
    # exp(A t) for a 2x2 matrix with distinct real eigenvalues
    tr = A[0, 0] + A[1, 1]
    gap = math.sqrt((A[0, 0] - A[1, 1]) ** 2 + 4 * A[0, 1] * A[1, 0])
    r1 = (tr + gap) / 2
    r2 = (tr - gap) / 2
    eye = np.eye(2)

    if gap == 0:
        return np.exp(r1 * t) * (eye + (A - r1 * eye) * t)

    return (np.exp(r1 * t) * (A - r2 * eye) - np.exp(r2 * t) * (A - r1 * eye)) / gap


def period_map(p):
    """
    Monodromy matrix exp(A_c delta omega) exp(A_w (1 - delta) omega) of the linearised system.
    """
    A_w = np.array([[-p.b1, p.a1 * p.e1], [p.a2 * p.e2, -p.b2]])
    cold = np.diag([math.exp(-p.b1 * p.delta * p.omega), math.exp(-p.k * p.delta * p.omega)])

    return cold @ _expm2(A_w, (1 - p.delta) * p.omega)


def lambda1_O_oracle(p):
    """
    Principal eigenvalue -ln(rho(M)) / omega from the Perron root of the period map M.

    Parameters
    ----------
    p: ModelParams with delta < 1 or k = b1.

    Returns
    -------
    float
    """
    if p.delta == 1 and p.k != p.b1:
        raise ParameterError("The period map has no simple dominant multiplier when delta = 1 and k != b1.")

    M = period_map(p)
    rho = (M[0, 0] + M[1, 1] + math.sqrt((M[0, 0] - M[1, 1]) ** 2 + 4 * M[0, 1] * M[1, 0])) / 2

    return -math.log(rho) / p.omega


def generalized_bounds(p):
    """
    Upper and lower generalized principal eigenvalues; equal unless delta = 1 and b1 != k.

    Returns
    -------
    (upper, lower)
    """
    result = lambda1_O(p, n_samples=2)
    return result.upper, result.lower


def zero_level_residual(p):
    """
    Difference of the two sides of the zero-level identity: zero exactly when lambda1_O = 0.

    Parameters
    ----------
    p: ModelParams with 0 < delta < 1.

    Returns
    -------
    float
    """
    if not 0 < p.delta < 1:
        raise ParameterError("The zero-level identity needs 0 < delta < 1.")

    sc = spectral_constants(p)
    tw = (1 - p.delta) * p.omega
    E1 = math.exp(sc.c1 * tw)
    E2 = math.exp(sc.c2 * tw)
    B = math.exp(p.b1 * p.delta * p.omega)
    K = math.exp(p.k * p.delta * p.omega)

    den_left = sc.beta * (E2 - B)
    den_right = p.a2 * p.e2 * (E2 - K)
    if den_left == 0 or den_right == 0:
        raise ParameterError("The zero-level identity is singular for these parameters.")

    left = p.a1 * p.e1 * (E1 - B) / den_left
    right = -sc.beta * (E1 - K) / den_right

    return left - right


@dataclass(frozen=True)
class SignBounds:
    sufficient_positive: bool
    necessary_positive: bool
    sufficient_negative: bool
    necessary_negative: bool


def sign_bounds(p):
    """
    Sufficient and necessary conditions on the sign of lambda1_O, comparing min/max{b1, k} delta
    with c1 (1 - delta).

    Parameters
    ----------
    p: ModelParams with 0 < delta < 1.

    Returns
    -------
    SignBounds
    """
    if not 0 < p.delta < 1:
        raise ParameterError("The sign conditions need 0 < delta < 1.")

    c1 = spectral_constants(p).c1
    low = min(p.b1, p.k) * p.delta
    high = max(p.b1, p.k) * p.delta
    rhs = c1 * (1 - p.delta)

    return SignBounds(sufficient_positive=low > rhs,
                      necessary_positive=high > rhs,
                      sufficient_negative=high < rhs,
                      necessary_negative=low < rhs)


def contour_zero_closed_form(p, delta_grid):
    """
    Zero level of lambda1_O in the (delta, b1) plane along the tied family k = b1.

    Returns
    -------
    pandas DataFrame with columns delta and b1.
    """
    q = p.a1 * p.a2 * p.e1 * p.e2
    delta = np.asarray(delta_grid, dtype=float)
    b1 = 2 * q * (1 - delta) / (p.b2 + np.sqrt(p.b2**2 + 4 * delta * q))

    return pd.DataFrame({"delta": delta, "b1": b1})


def contour_zero(p, delta_grid, b1_range, tie_k=False, tol=1e-9, max_iter=200):
    """
    Trace the contour lambda1_O = 0 in the (delta, b1) plane by bisection in b1.

    lambda1_O is strictly increasing in b1, so each delta has at most one zero. Deltas for which
    `b1_range` does not bracket a sign change are omitted with a warning and listed in
    `attrs["omitted"]` of the result.

    Parameters
    ----------
    p: ModelParams providing every parameter except delta and b1.
    delta_grid: Iterable of cold-season fractions.
    b1_range: (low, high) search interval for b1, low > 0.
    tie_k: Move k together with b1 (k = b1 along the search).
    tol: Absolute tolerance on lambda1_O.
    max_iter: Maximum number of bisection steps.

    Returns
    -------
    pandas DataFrame with columns delta and b1.
    """
    low, high = b1_range
    if not 0 < low < high:
        raise ParameterError("b1_range must satisfy 0 < low < high.")

    points = []
    omitted = []

    for delta in delta_grid:
        def level(b1):
            changes = {"delta": float(delta), "b1": b1}
            if tie_k:
                changes["k"] = b1
            return lambda1_O(p.replace(**changes), n_samples=2).lower

        try:
            b1 = bisect_sign(level, low, high, tol=tol, max_iter=max_iter)
        except (BracketError, ConvergenceError) as err:
            omitted.append(float(delta))
            continue

        points.append((float(delta), b1))

    if omitted:
        warn(f"No zero of lambda1_O in b1_range for delta in {omitted}.", RuntimeWarning, stacklevel=2)

    df = pd.DataFrame(points, columns=["delta", "b1"])
    df.attrs["omitted"] = omitted

    return df
