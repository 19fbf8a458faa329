# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled extended-value-iteration sweep loop (twin of _evi_py)."""

import numpy as np


def run_evi(double[::1] u0, double[:, ::1] r_tilde, double[:, :, ::1] p_hat,
            double[:, ::1] t_radius, double stop_span, long long iter_cap):
    cdef Py_ssize_t n_states = u0.shape[0]
    cdef Py_ssize_t n_actions = r_tilde.shape[1]
    u_arr = np.array(u0, dtype=np.float64)
    un_arr = np.zeros(n_states, dtype=np.float64)
    pol_arr = np.zeros(n_states, dtype=np.int64)
    ord_arr = np.zeros(n_states, dtype=np.int64)
    q_arr = np.zeros(n_states, dtype=np.float64)
    cdef double[::1] u = u_arr
    cdef double[::1] u_next = un_arr
    cdef long long[::1] policy = pol_arr
    cdef long long[::1] order = ord_arr
    cdef double[::1] q = q_arr
    cdef long long it
    cdef Py_ssize_t i, j, o, a, best_j, idx
    cdef double half, s, excess, cut, val, best_val, dmax, dmin, span, gain, umin
    cdef long long tmp

    for it in range(1, iter_cap + 1):
        # rank states by decreasing value, earliest index first on ties
        for i in range(n_states):
            order[i] = i
        for i in range(n_states):
            best_j = i
            for j in range(i + 1, n_states):
                if u[order[j]] > u[order[best_j]]:
                    best_j = j
            tmp = order[i]
            order[i] = order[best_j]
            order[best_j] = tmp

        for o in range(n_states):
            best_val = -1e300
            policy[o] = 0
            for a in range(n_actions):
                half = 0.5 * t_radius[o, a]
                s = 0.0
                for j in range(n_states):
                    q[j] = p_hat[o, a, j]
                idx = order[0]
                q[idx] = q[idx] + half
                if q[idx] > 1.0:
                    q[idx] = 1.0
                for j in range(n_states):
                    s += q[j]
                excess = s - 1.0
                for j in range(n_states - 1, 0, -1):
                    if excess <= 0.0:
                        break
                    idx = order[j]
                    cut = q[idx] if q[idx] < excess else excess
                    q[idx] -= cut
                    excess -= cut
                val = r_tilde[o, a]
                for j in range(n_states):
                    val += q[j] * u[j]
                if val > best_val:
                    best_val = val
                    policy[o] = a
            u_next[o] = best_val

        dmax = u_next[0] - u[0]
        dmin = dmax
        for o in range(1, n_states):
            val = u_next[o] - u[o]
            if val > dmax:
                dmax = val
            if val < dmin:
                dmin = val
        span = dmax - dmin
        if span < stop_span:
            gain = (dmax + dmin) / 2.0
            umin = u_next[0]
            for o in range(1, n_states):
                if u_next[o] < umin:
                    umin = u_next[o]
            for o in range(n_states):
                un_arr[o] = u_next[o] - umin
            return pol_arr, gain, un_arr, int(it), span
        umin = u_next[0]
        for o in range(1, n_states):
            if u_next[o] < umin:
                umin = u_next[o]
        for o in range(n_states):
            u[o] = u_next[o] - umin

    raise RuntimeError(
        f"extended value iteration did not reach span < {stop_span} "
        f"within {iter_cap} sweeps"
    )
