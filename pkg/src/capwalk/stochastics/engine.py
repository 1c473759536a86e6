"""Deterministic chunked execution of trial kernels over a thread pool.

Trials are split into fixed-size chunks. Each chunk writes into its own
slice of preallocated outcome arrays, so neither the chunk order nor the
number of workers changes any result. Compiled kernels release the GIL.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import defaults
from .._backend import active_backend
from .._rng import trial_keys

DEFAULT_CHUNK = int(defaults.load()["stochastics"]["chunk"])


def run_trials(kernels, args, master_seed, trials, workers=1, chunk=DEFAULT_CHUNK, walkers=1):
    """Run ``trials`` independent trials; returns (codes, times, steps).

    ``kernels`` is a (compiled, numpy) pair sharing the signature
    ``kernel(keys, *args, out_code, out_time, out_steps)``. With several
    walkers per trial, ``keys`` has one column per walker index.
    """
    compiled, fallback = kernels
    kernel = compiled if active_backend() == "numba" else fallback
    codes = np.empty(trials, np.int64)
    times = np.empty(trials)
    steps = np.empty(trials, np.int64)
    bounds = [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]

    def work(span):
        s, e = span
        if walkers == 1:
            keys = trial_keys(master_seed, s, e - s)
        else:
            keys = np.stack([trial_keys(master_seed, s, e - s, w) for w in range(walkers)], axis=1)
        with np.errstate(over="ignore"):
            kernel(keys, *args, codes[s:e], times[s:e], steps[s:e])

    if workers <= 1 or len(bounds) == 1:
        for span in bounds:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))
    return codes, times, steps
