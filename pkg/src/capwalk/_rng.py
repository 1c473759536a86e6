"""Counter-based random numbers shared by the compiled and numpy kernels.

Every draw is a pure function of a 64-bit key and a 64-bit counter, so a
trial's random stream does not depend on which worker runs it or in which
order. The generator is the SplitMix64 output function applied to
``key + counter * golden``. The same source functions are compiled with numba
(scalar arguments) and executed by numpy (uint64 array arguments).
"""

import math

import numpy as np

from ._backend import kernel_jit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0
_MASK = (1 << 64) - 1

_SEED_SALT = 0x6A09E667F3BCC909


def _build(jit):
    """Build (mix64, uniform, normal_pair) under the given decorator."""

    @jit
    def mix64(z):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)

    @jit
    def uniform(key, ctr):
        # open interval (0, 1)
        u = mix64(key + ctr * GOLDEN)
        return ((u >> _S11) + 0.5) * _INV53

    @jit
    def normal_pair(key, ctr):
        # Box-Muller on counters ctr and ctr + 1
        u1 = uniform(key, ctr)
        u2 = uniform(key, ctr + np.uint64(1))
        rad = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * math.pi * u2
        return rad * np.cos(ang), rad * np.sin(ang)

    return mix64, uniform, normal_pair


mix64, uniform, normal_pair = _build(lambda fn: fn)
mix64_jit, uniform_jit, normal_pair_jit = _build(kernel_jit)


def _mix64_int(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_trial_seed(master_seed, trial, walker=0):
    """Per-trial key derived from the master seed, trial index and walker index.

    The map is a composition of bijections of 64-bit words, so distinct
    ``(trial, walker)`` pairs with ``trial < 2**56`` and ``walker < 256`` never
    share a key under one master seed.
    """
    if not 0 <= walker < 256:
        raise ValueError("walker index must be in [0, 256)")
    if not 0 <= trial < 2**56:
        raise ValueError("trial index must be in [0, 2**56)")
    base = _mix64_int(_mix64_int(int(master_seed) ^ _SEED_SALT))
    return _mix64_int(base ^ ((trial << 8) | walker))


def trial_keys(master_seed, start, count, walker=0):
    """Vectorised ``derive_trial_seed`` for trials ``start .. start+count-1``."""
    base = np.uint64(_mix64_int(_mix64_int(int(master_seed) ^ _SEED_SALT)))
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(base ^ ((idx << np.uint64(8)) | np.uint64(walker)))
