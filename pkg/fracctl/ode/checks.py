import numpy as np

from ..exceptions import InputError


def positivity_check(traj, interior_only=False):
    """True when every scalar state is strictly positive."""
    values = traj.values.reshape(traj.grid.n_nodes, -1)
    if values.shape[1] != 1:
        raise InputError("positivity_check expects a scalar trajectory")
    if interior_only:
        values = values[1:-1]
    return bool(np.all(values > 0))


def comparison_check(lower, upper, tol=1e-8):
    """True when |lower(t)| <= |upper(t)| + tol at every node."""
    if not lower.grid.matches(upper.grid):
        raise InputError("trajectories must share one grid")
    return bool(np.all(np.abs(lower.values) <= np.abs(upper.values) + tol))
