# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of _kernel_py. Same entry points, same array layouts."""

from libc.math cimport log

import numpy as np


def step_kernel(double[::1] log_w, long long[::1] n_obs, long long[:, ::1] counts,
                Py_ssize_t m, Py_ssize_t x0, Py_ssize_t alphabet,
                double d_log_prior, double insert_log_w, double log_margin):
    cdef Py_ssize_t i
    cdef double loss, anchor_loss = 0.0
    cdef bint restart = False
    cdef double bar
    for i in range(m):
        loss = log(<double> (n_obs[i] + alphabet)) - log(<double> (counts[i, x0] + 1))
        if i == 0:
            anchor_loss = loss
            log_w[0] -= loss
        else:
            log_w[i] += d_log_prior - loss
    log_w[m] = insert_log_w
    bar = log_w[0] + log_margin
    for i in range(1, m + 1):
        if log_w[i] > bar:
            restart = True
            break
    for i in range(m + 1):
        counts[i, x0] += 1
        n_obs[i] += 1
    return anchor_loss, restart


def run_stream(long long[::1] symbols0, Py_ssize_t alphabet,
               int schedule_kind, double log_const, double log_margin):
    cdef Py_ssize_t n_steps = symbols0.shape[0]
    cdef Py_ssize_t cap = 64
    log_w_arr = np.zeros(cap)
    n_obs_arr = np.zeros(cap, dtype=np.int64)
    counts_arr = np.zeros((cap, alphabet), dtype=np.int64)
    cdef double[::1] log_w = log_w_arr
    cdef long long[::1] n_obs = n_obs_arr
    cdef long long[:, ::1] counts = counts_arr
    cdef Py_ssize_t m = 0, stream_len = 0, pos, x0, i, n_total
    cdef double log_evidence = 0.0, anchor_loss, d_log_prior, insert_log_w
    cdef double log_alphabet = log(<double> alphabet)
    cdef bint restart
    restarts = []
    for pos in range(n_steps):
        x0 = symbols0[pos]
        if stream_len == 0:
            counts[0, x0] += 1
            n_obs[0] += 1
            log_w[0] = -log_alphabet
            m = 1
            stream_len = 1
            log_evidence = -log_alphabet
            continue
        if m + 1 > cap:
            cap *= 2
            new_log_w = np.zeros(cap)
            new_log_w[:m] = log_w_arr[:m]
            new_n_obs = np.zeros(cap, dtype=np.int64)
            new_n_obs[:m] = n_obs_arr[:m]
            new_counts = np.zeros((cap, alphabet), dtype=np.int64)
            new_counts[:m] = counts_arr[:m]
            log_w_arr, n_obs_arr, counts_arr = new_log_w, new_n_obs, new_counts
            log_w = log_w_arr
            n_obs = n_obs_arr
            counts = counts_arr
        n_total = stream_len + 1
        if schedule_kind == 0:
            d_log_prior = log(<double> (n_total - 1)) - log(<double> n_total)
            insert_log_w = -log(<double> n_total) + log_evidence - log_alphabet
        else:
            d_log_prior = 0.0
            insert_log_w = log_const + log_evidence - log_alphabet
        anchor_loss, restart = step_kernel(
            log_w, n_obs, counts, m, x0, alphabet, d_log_prior, insert_log_w,
            log_margin,
        )
        m += 1
        stream_len += 1
        log_evidence -= anchor_loss
        if restart:
            restarts.append(pos + 1)
            for i in range(m):
                log_w[i] = 0.0
                n_obs[i] = 0
                counts[i, :] = 0
            m = 0
            stream_len = 0
            log_evidence = 0.0
    return np.asarray(restarts, dtype=np.int64)
