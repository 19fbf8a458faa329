"""Numpy implementation of the extended value iteration sweep loop.

Semantics twin of the compiled kernel: one sweep ranks states by the current
iterate, shifts each transition row optimistically inside its L1 ball (mass
min(1, p_best + radius/2) on the best state, stripped from the worst-ranked
states), and Bellman-backs-up with optimistic rewards.  Iterates until the
span of successive differences drops below stop_span.
"""

from __future__ import annotations

import numpy as np


def run_evi(u0, r_tilde, p_hat, t_radius, stop_span, iter_cap):
    """Run extended value iteration.

    Parameters
    ----------
    u0 : (O,) float array, starting iterate.
    r_tilde : (O, A) optimistic rewards (already clipped to [0, 1]).
    p_hat : (O, A, O) empirical transition rows.
    t_radius : (O, A) L1 confidence radii (widening included).
    stop_span : positive stopping threshold for span(u_next - u).
    iter_cap : maximum sweeps before raising.

    Returns
    -------
    (policy, gain, values, iterations, span) with 0-based int64 policy,
    values recentered at min 0.
    """
    u = np.array(u0, dtype=float)
    n_states = u.shape[0]
    half = np.asarray(t_radius, dtype=float) / 2.0
    r_tilde = np.asarray(r_tilde, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    for it in range(1, int(iter_cap) + 1):
        order = np.argsort(-u, kind="stable")
        ps = p_hat[:, :, order].copy()
        ps[:, :, 0] = np.minimum(1.0, ps[:, :, 0] + half)
        excess = ps.sum(axis=2) - 1.0
        for j in range(n_states - 1, 0, -1):
            cut = np.minimum(ps[:, :, j], np.maximum(excess, 0.0))
            ps[:, :, j] -= cut
            excess -= cut
        q = r_tilde + ps @ u[order]
        u_next = q.max(axis=1)
        policy = q.argmax(axis=1).astype(np.int64)
        diff = u_next - u
        dmax = float(diff.max())
        dmin = float(diff.min())
        span = dmax - dmin
        if span < stop_span:
            return policy, (dmax + dmin) / 2.0, u_next - u_next.min(), it, span
        u = u_next - u_next.min()
    raise RuntimeError(
        f"extended value iteration did not reach span < {stop_span} "
        f"within {iter_cap} sweeps"
    )
