# Bisection helpers shared by the contour and threshold searches

import numpy as np

from ..errors import BracketError, ConvergenceError


def bisect_sign(func, lower, upper, tol=1e-9, max_iter=200):
    """
    Find a zero of a function that changes sign on [lower, upper].

    Iteration stops once |func(midpoint)| <= tol, or the bracket can no longer be split in
    floating point.

    Parameters
    ----------
    func: Scalar function of one variable.
    lower, upper: Bracket ends.
    tol: Absolute tolerance on the function value.
    max_iter: Maximum number of halvings.

    Returns
    -------
    float
    """
    f_lower = func(lower)
    f_upper = func(upper)

    if f_lower == 0:
        return lower
    if f_upper == 0:
        return upper
    if np.sign(f_lower) == np.sign(f_upper):
        raise BracketError(f"No sign change on [{lower}, {upper}].")

    for _ in range(max_iter):
        mid = 0.5 * (lower + upper)
        f_mid = func(mid)

        if abs(f_mid) <= tol or mid in (lower, upper):
            return mid

        if np.sign(f_mid) == np.sign(f_lower):
            lower, f_lower = mid, f_mid
        else:
            upper = mid

    raise ConvergenceError(f"Bisection did not reach tolerance {tol} in {max_iter} iterations.")


def bisect_predicate(pred, lower, upper, rel_width, max_iter=60):
    """
    Locate the switch of a monotone boolean predicate, False at `lower` and True at `upper`.

    Parameters
    ----------
    pred: Function returning a bool.
    lower, upper: Positive bracket ends.
    rel_width: Stop once upper / lower <= 1 + rel_width.
    max_iter: Maximum number of halvings.

    Returns
    -------
    (lower, upper, iterations)
    """
    iterations = 0

    while upper / lower > 1 + rel_width and iterations < max_iter:
        # Geometric midpoint: thresholds are scale parameters
        mid = np.sqrt(lower * upper)
        if pred(mid):
            upper = mid
        else:
            lower = mid
        iterations += 1

    return lower, upper, iterations
