"""Timing comparison of the numpy and compiled backends.

Runs the detector stream kernel and the optimistic-planning kernel on
identical inputs through both implementations, checks they agree, and
prints per-call timings with the speedup.  Usage:

    python3 benchmarks/bench_kernels.py [--repeats N] [--stream-length N]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from switchrl.cpd import _kernel_py

try:
    from switchrl.cpd import _kernel_cy
except ImportError:
    _kernel_cy = None

from switchrl import _evi_py

try:
    from switchrl import _evi_cy
except ImportError:
    _evi_cy = None


def time_call(fn, repeats):
    best = math.inf
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def detector_workload(stream_length, rng):
    """Five segments of stream_length // 5 steps each; the forecaster bank
    grows to the segment length, which dominates the per-step cost."""
    alphabet = 4
    segment = stream_length // 5
    pieces = []
    for i in range(5):
        theta = rng.dirichlet(np.ones(alphabet))
        pieces.append(rng.choice(alphabet, size=segment, p=theta))
    symbols0 = np.concatenate(pieces).astype(np.int64)
    log_margin = -math.log(0.05)
    return symbols0, alphabet, log_margin


def evi_workload(n_states, n_actions, rng):
    p_hat = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    r_tilde = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    t_radius = rng.uniform(0.02, 0.3, size=(n_states, n_actions))
    u0 = np.zeros(n_states)
    return (
        np.ascontiguousarray(u0),
        np.ascontiguousarray(r_tilde),
        np.ascontiguousarray(p_hat),
        np.ascontiguousarray(t_radius),
        1e-4,
        10**6,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--stream-length", type=int, default=10_000)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(404)
    rows = []

    symbols0, alphabet, log_margin = detector_workload(args.stream_length, rng)
    py_time, py_out = time_call(
        lambda: _kernel_py.run_stream(symbols0, alphabet, 0, 0.0, log_margin),
        args.repeats,
    )
    if _kernel_cy is not None:
        cy_time, cy_out = time_call(
            lambda: _kernel_cy.run_stream(symbols0, alphabet, 0, 0.0,
                                          log_margin),
            args.repeats,
        )
        assert list(py_out) == list(cy_out), "backend restart mismatch"
    else:
        cy_time = None
    rows.append((f"detector stream ({args.stream_length} steps)",
                 py_time, cy_time))

    for n_states, n_actions in [(6, 3), (20, 5)]:
        work = evi_workload(n_states, n_actions, rng)
        py_time, py_out = time_call(lambda: _evi_py.run_evi(*work),
                                    args.repeats)
        if _evi_cy is not None:
            cy_time, cy_out = time_call(lambda: _evi_cy.run_evi(*work),
                                        args.repeats)
            assert np.array_equal(py_out[0], cy_out[0]), "policy mismatch"
            assert abs(py_out[1] - cy_out[1]) < 1e-9, "gain mismatch"
        else:
            cy_time = None
        rows.append((f"optimistic planning (O={n_states}, A={n_actions})",
                     py_time, cy_time))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'numpy':>10}  {'compiled':>10}  speedup")
    for name, py_time, cy_time in rows:
        py_ms = f"{py_time * 1e3:.2f} ms"
        if cy_time is None:
            print(f"{name:<{width}}  {py_ms:>10}  {'n/a':>10}  n/a")
        else:
            cy_ms = f"{cy_time * 1e3:.2f} ms"
            print(f"{name:<{width}}  {py_ms:>10}  {cy_ms:>10}  "
                  f"{py_time / cy_time:.1f}x")
    if _kernel_cy is None or _evi_cy is None:
        print("note: compiled backend not built; showing numpy only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
