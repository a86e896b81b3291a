# Principal eigenvalues stored by lattice node count (on equally spaced nodes the discrete operator
# depends on the interval only through its node count)

import abc

from numpy import full as np_full
from numpy import concatenate, nan, isnan


class CachedPrincipalEigenvalue(abc.ABC):
    """
    Lazily filled table of principal eigenvalues, one entry per node count.

    Missing entries are NaN. The table doubles in size when a larger node count is requested,
    so a free-boundary run that keeps adding nodes computes each count once.
    """
    def __init__(self, max_nodes=256):
        """
        Parameters
        ----------
        max_nodes: Initial capacity of the table.
        """
        self.stored_values = np_full(max_nodes + 1, nan)

    def get(self, n_nodes):
        """
        Eigenvalue for `n_nodes` nodes (at least 1), computed on first request.

        Returns
        -------
        float
        """
        if n_nodes < 1:
            raise ValueError("At least one node is needed.")

        val = self.stored_values[n_nodes] if n_nodes < len(self.stored_values) else nan

        if isnan(val):
            val = self.calculate(n_nodes)
            self.set(n_nodes, val)

        return val

    def set(self, n_nodes, value):
        if n_nodes >= len(self.stored_values):
            extra = max(n_nodes + 1 - len(self.stored_values), len(self.stored_values))
            self.stored_values = concatenate([self.stored_values, np_full(extra, nan)])

        self.stored_values[n_nodes] = value

    def __len__(self):
        return int((~isnan(self.stored_values)).sum())

    @abc.abstractmethod
    def calculate(self, n_nodes):
        """
        Principal eigenvalue of the operator on `n_nodes` consecutive nodes.
        """
