# Discrete nonlocal operators: lattice stencils, trapezoid weights and banded kernel matrices

import math

import numpy as np
import scipy.sparse as sp

from ..errors import ParameterError


def grid_size(interval, dx, rtol=1e-9):
    """
    Number of grid cells of width dx covering an interval exactly.

    Parameters
    ----------
    interval: A (left, right) tuple with left < right.
    dx: Grid spacing.
    rtol: Relative tolerance when checking that dx divides the interval length.

    Returns
    -------
    int
    """
    left, right = interval
    if not left < right:
        raise ParameterError(f"Interval must satisfy left < right, got {interval}.")
    if not dx > 0:
        raise ParameterError("dx must be positive.")

    length = right - left
    n = int(round(length / dx))

    if n < 1 or abs(n * dx - length) > rtol * length:
        raise ParameterError(f"dx={dx} does not divide the interval length {length}.")

    return n


def fitted_spacing(length, dx, min_cells=2):
    """
    Largest spacing not above dx that divides `length` into whole cells.
    """
    n = max(min_cells, int(math.ceil(length / dx - 1e-9)))
    return length / n


def lattice_range(g, h, dx, atol=1e-9):
    """
    Index range of the lattice nodes j * dx lying strictly inside (g, h). Nodes closer than
    atol * dx to either end count as outside.

    Returns
    -------
    (j_min, j_max), with j_max < j_min when no node is inside.
    """
    j_min = int(math.floor(g / dx + atol)) + 1
    j_max = int(math.ceil(h / dx - atol)) - 1
    return j_min, j_max


def lattice_stencil(kernel, dx):
    """
    Quadrature weights dx * J(j * dx) for the lattice offsets j = -s, ..., s covering the kernel
    support, rescaled to sum to exactly 1.

    The rescaling keeps the discrete operator mass-preserving, so that constant states are
    treated exactly and the explicit schemes keep densities below their carrying levels.

    Parameters
    ----------
    kernel: A Kernel.
    dx: Lattice spacing.

    Returns
    -------
    numpy array of length 2 * s + 1, symmetric about its centre.
    """
    s = int(math.ceil(kernel.support_radius / dx - 1e-9))
    offsets = np.arange(-s, s + 1) * dx
    weights = dx * kernel.density(offsets)

    # Symmetrise against round-off in the density evaluation
    weights = 0.5 * (weights + weights[::-1])

    return weights / weights.sum()


def trapezoid_weights(n_nodes):
    """
    Relative composite-trapezoid weights on n_nodes equally spaced nodes (1 inside, 1/2 at the
    two end nodes). The factor dx is carried by the stencil.
    """
    if n_nodes < 2:
        raise ValueError("The trapezoid rule needs at least two nodes.")

    weights = np.ones(n_nodes)
    weights[0] = weights[-1] = 0.5
    return weights


def stencil_matrix(stencil, n_nodes):
    """
    Banded symmetric Toeplitz matrix S with S[i, j] = stencil[s + i - j].

    Parameters
    ----------
    stencil: Output of `lattice_stencil`.
    n_nodes: Matrix dimension.

    Returns
    -------
    scipy.sparse.csr_matrix
    """
    s = (len(stencil) - 1) // 2
    offsets = [o for o in range(-s, s + 1) if abs(o) < n_nodes]
    diagonals = [np.full(n_nodes - abs(o), stencil[s + o]) for o in offsets]

    return sp.diags(diagonals, offsets, shape=(n_nodes, n_nodes), format="csr")


def kernel_operator(stencil, n_nodes, end_weights=True):
    """
    Discretisation u -> int J(x - y) u(y) dy on n_nodes equally spaced nodes.

    With `end_weights` the composite trapezoid rule is used (the closed interval case), without
    it every node carries the full weight (the rule for densities vanishing at both ends, as on
    the free-boundary lattice).

    Parameters
    ----------
    stencil: Output of `lattice_stencil`.
    n_nodes: Number of nodes.
    end_weights: Whether to halve the weights of the two end nodes.

    Returns
    -------
    (K, c): the sparse operator K = S diag(c) and the vector of relative weights c.
    """
    c = trapezoid_weights(n_nodes) if end_weights and n_nodes > 1 else np.ones(n_nodes)
    S = stencil_matrix(stencil, n_nodes)

    return (S @ sp.diags(c)).tocsr(), c


def symmetrised_operator(stencil, n_nodes, end_weights=True):
    """
    Symmetric matrix diag(c)^(1/2) S diag(c)^(1/2), similar to the operator of
    `kernel_operator`; eigenvectors map back through diag(c)^(-1/2).

    Returns
    -------
    (A, c)
    """
    c = trapezoid_weights(n_nodes) if end_weights and n_nodes > 1 else np.ones(n_nodes)
    root = sp.diags(np.sqrt(c))
    S = stencil_matrix(stencil, n_nodes)

    return (root @ S @ root).tocsr(), c


def lattice_convolution(u, stencil):
    """
    Apply the lattice stencil to a vector of node values (zero beyond both ends).
    """
    s = (len(stencil) - 1) // 2
    return np.convolve(u, stencil, mode="full")[s:s + len(u)]
