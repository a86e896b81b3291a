import itertools

import pandas as pd


def generate_grid(axes, fixed=None):
    """
    Create a row-major grid of parameter values covering every combination of the axes.

    The first axis varies slowest, so rows come out in the order of nested loops over the axes
    as given.

    Parameters
    ----------
    axes: A dict mapping parameter names to sequences of values (insertion order is kept).
    fixed: A dict of values shared by all grid points, added as extra columns (optional).

    Returns
    -------
    A pandas dataframe with one row per grid point.
    """
    if not axes:
        raise ValueError("At least one axis is needed.")

    names = list(axes)
    for name in names:
        if len(axes[name]) == 0:
            raise ValueError(f"Axis {name!r} has no values.")

    grid = pd.DataFrame(list(itertools.product(*(axes[n] for n in names))), columns=names)

    for name, value in (fixed or {}).items():
        grid[name] = value

    return grid
