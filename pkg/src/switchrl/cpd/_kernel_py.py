"""Numpy implementation of the detector hot loop.

The compiled twin in _kernel_cy.pyx implements the same two entry points with
identical array layouts; _kernel.py picks one at import time.  Keep the
arithmetic order of the two implementations aligned so that streams produce
the same restart times under either backend.
"""

from __future__ import annotations

import math

import numpy as np


def step_kernel(log_w, n_obs, counts, m, x0, alphabet, d_log_prior, insert_log_w,
                log_margin):
    """Advance all live forecasters by one symbol and run the restart test.

    Parameters
    ----------
    log_w : float64[capacity]
        Log-weights; row 0 is the forecaster anchored at the restart time.
    n_obs : int64[capacity]
        Symbols seen per forecaster.
    counts : int64[capacity, alphabet]
        Per-forecaster symbol counts.
    m : int
        Number of live forecasters (rows 0..m-1).  Row m must be zeroed; it
        receives the newly inserted forecaster.
    x0 : int
        Zero-based symbol.
    d_log_prior : float
        log prior(r,s,t) - log prior(r,s,t-1), shared by all challengers
        (schedules whose prior depends only on (r,t)).
    insert_log_w : float
        Log-weight assigned to the forecaster inserted at this step.
    log_margin : float
        A challenger must exceed the anchor's log-weight by this margin
        (-log delta) for the restart test to fire.

    Returns (anchor_loss, restart).
    """
    losses = np.log(n_obs[:m] + alphabet) - np.log(counts[:m, x0] + 1)
    log_w[0] -= losses[0]
    log_w[1:m] += d_log_prior - losses[1:m]
    log_w[m] = insert_log_w
    restart = bool(np.any(log_w[1 : m + 1] > log_w[0] + log_margin))
    counts[: m + 1, x0] += 1
    n_obs[: m + 1] += 1
    return float(losses[0]), restart


def run_stream(symbols0, alphabet, schedule_kind, log_const, log_margin):
    """Feed a whole 0-based symbol stream through a fresh detector.

    schedule_kind: 0 = reciprocal prior 1/(t-r+1), 1 = constant prior.
    Returns the 1-based positions at which the detector restarted.
    """
    n_steps = len(symbols0)
    cap = 64
    log_w = np.zeros(cap)
    n_obs = np.zeros(cap, dtype=np.int64)
    counts = np.zeros((cap, alphabet), dtype=np.int64)
    m = 0
    stream_len = 0
    log_evidence = 0.0
    log_alphabet = math.log(alphabet)
    restarts = []
    for pos in range(n_steps):
        x0 = int(symbols0[pos])
        if stream_len == 0:
            counts[0, x0] += 1
            n_obs[0] += 1
            log_w[0] = -log_alphabet
            m = 1
            stream_len = 1
            log_evidence = -log_alphabet
            continue
        if m + 1 > cap:
            grow = cap
            cap *= 2
            log_w = np.concatenate([log_w, np.zeros(grow)])
            n_obs = np.concatenate([n_obs, np.zeros(grow, dtype=np.int64)])
            counts = np.concatenate(
                [counts, np.zeros((grow, alphabet), dtype=np.int64)]
            )
        n_total = stream_len + 1  # symbols since restart after this step
        if schedule_kind == 0:
            d_log_prior = math.log(n_total - 1) - math.log(n_total)
            insert_log_w = -math.log(n_total) + log_evidence - log_alphabet
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
            log_w[:m] = 0.0
            n_obs[:m] = 0
            counts[:m, :] = 0
            m = 0
            stream_len = 0
            log_evidence = 0.0
    return np.asarray(restarts, dtype=np.int64)
