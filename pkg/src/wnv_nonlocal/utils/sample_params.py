# Sample random parameter sets while respecting the model invariants and extra constraints

from warnings import warn

import numpy as np

from ..model import ModelParams, validate_params

DEFAULT_RANGES = {
    "a1": (0.2, 2.0), "a2": (0.2, 2.0), "e1": (0.2, 2.0), "e2": (0.2, 2.0),
    "b1": (0.1, 2.0), "b2": (0.1, 2.0), "k": (0.1, 3.0),
    "d1": (0.0, 1.0), "d2": (0.0, 1.0),
    "omega": (0.5, 3.0), "delta": (0.0, 0.95),
    "mu1": (0.0, 2.0), "mu2": (0.0, 2.0), "h0": (0.5, 3.0),
}


def sample_params(n, ranges=None, fixed=None, constraint=None, max_retries=100, seed=None):
    """
    Sample ModelParams uniformly within per-parameter ranges, rejecting invalid draws.

    Parameters
    ----------
    n: Number of parameter sets.
    ranges: Dict of (low, high) ranges overriding `DEFAULT_RANGES` (optional).
    fixed: Dict of values that are not sampled (optional).
    constraint: A function of ModelParams returning False for unwanted draws (optional).
    max_retries: Maximum number of redraw rounds. If exceeded, the sets drawn so far are
                 returned with a warning.
    seed: Random seed to use.

    Returns
    -------
    list of ModelParams
    """
    assert max_retries > 0, "max_retries must be > 0."

    rng = np.random.default_rng(seed)
    ranges = {**DEFAULT_RANGES, **(ranges or {})}
    fixed = fixed or {}

    def draw():
        values = {name: float(rng.uniform(*ranges[name])) for name in ModelParams.field_names()
                  if name not in fixed}
        return ModelParams.from_mapping({**values, **fixed})

    def accept(p):
        return not validate_params(p) and (constraint is None or constraint(p))

    samples = [p for p in (draw() for _ in range(n)) if accept(p)]
    tries = 0

    # Replace rejected draws
    while len(samples) < n and tries < max_retries:
        samples.extend(p for p in (draw() for _ in range(n - len(samples))) if accept(p))
        tries += 1

    if len(samples) < n:
        warn(f"Could only sample {len(samples)} of {n} valid parameter sets after {max_retries} tries.",
             RuntimeWarning, stacklevel=2)

    return samples
