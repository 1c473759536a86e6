"""First-hitting kernel for Brownian motion (generator Laplacian) on R^n.

Targets are unions of primitives: solid ball (0), sphere (1), solid annulus
(2) and the exterior of a ball (3, used for exit times). Each step draws
ceil(n/2) Box-Muller pairs plus one bridge uniform, always consuming the
same counter block so that runs with and without the bridge correction see
identical paths.

Outcome codes: 0 no hit by T, 1 hit, 2 escaped, 3 aborted, 4 counted as a
hit after escape (the escape fold, drawn with probability
(rho_ref / |x - c|)^(n-2)).
"""

import math

import numpy as np

from .._backend import kernel_jit
from .._rng import normal_pair, normal_pair_jit, uniform, uniform_jit

NO_HIT, HIT, ESCAPED, ABORTED, FOLDED = 0, 1, 2, 3, 4
ESCAPE_COUNTER = np.uint64(0xFFFFFFFFFFFF0000)
ABORT_DT = 1e-14


def block_size(n):
    return 2 * ((n + 1) // 2) + 1


def _make_kernel(jit, normal_pair, uniform):
    @jit
    def prim_state(x, k, ptype, pcen, pr1, pr2):
        # returns (gap >= 0, side); side 0 means inside the target
        acc = 0.0
        for j in range(x.shape[0]):
            d = x[j] - pcen[k, j]
            acc += d * d
        rad = math.sqrt(acc)
        t = ptype[k]
        if t == 0:
            if rad <= pr1[k]:
                return 0.0, 0
            return rad - pr1[k], 1
        if t == 1:
            if rad >= pr1[k]:
                return rad - pr1[k], 1
            return pr1[k] - rad, -1
        if t == 2:
            if rad < pr1[k]:
                return pr1[k] - rad, -1
            if rad > pr2[k]:
                return rad - pr2[k], 1
            return 0.0, 0
        if rad >= pr1[k]:
            return 0.0, 0
        return pr1[k] - rad, 1

    @jit
    def run(keys, x0, ptype, pcen, pr1, pr2, esc_c, esc_r, esc_ref, T, dt_max, dt_min,
            kappa, bridge, max_steps, out_code, out_time, out_steps):
        n = x0.shape[0]
        npr = ptype.shape[0]
        half = (n + 1) // 2
        block = np.uint64(2 * half + 1)
        one = np.uint64(1)
        x = np.empty(n)
        xn = np.empty(n)
        gaps = np.empty(npr)
        sides = np.empty(npr, np.int64)
        for trial in range(keys.shape[0]):
            key = keys[trial]
            for j in range(n):
                x[j] = x0[j]
            code = NO_HIT
            t = 0.0
            steps = 0
            dmin = math.inf
            for k in range(npr):
                g, s = prim_state(x, k, ptype, pcen, pr1, pr2)
                gaps[k] = g
                sides[k] = s
                if s == 0:
                    code = HIT
                dmin = min(dmin, g)
            while code == NO_HIT and t < T:
                if steps >= max_steps:
                    code = ABORTED
                    break
                dt = (dmin / kappa) ** 2
                if dt < dt_min:
                    dt = dt_min
                if dt > dt_max:
                    dt = dt_max
                if dt > T - t:
                    dt = T - t
                if dt < ABORT_DT and dt_min == 0.0:
                    code = ABORTED
                    break
                ctr = np.uint64(steps) * block
                scale = math.sqrt(2.0 * dt)
                for h in range(half):
                    z0, z1 = normal_pair(key, ctr + np.uint64(2 * h))
                    xn[2 * h] = x[2 * h] + scale * z0
                    if 2 * h + 1 < n:
                        xn[2 * h + 1] = x[2 * h + 1] + scale * z1
                u = uniform(key, ctr + block - one)
                steps += 1
                t += dt
                survive = 1.0
                dmin = math.inf
                for k in range(npr):
                    g, s = prim_state(xn, k, ptype, pcen, pr1, pr2)
                    if s == 0 or s != sides[k]:
                        code = HIT
                    elif bridge:
                        survive *= 1.0 - math.exp(-gaps[k] * g / dt)
                    gaps[k] = g
                    sides[k] = s
                    dmin = min(dmin, g)
                if code == NO_HIT and bridge and u >= survive:
                    code = HIT
                for j in range(n):
                    x[j] = xn[j]
                if code == HIT:
                    break
                if esc_r > 0.0:
                    acc = 0.0
                    for j in range(n):
                        d = x[j] - esc_c[j]
                        acc += d * d
                    rad = math.sqrt(acc)
                    if rad >= esc_r:
                        code = ESCAPED
                        if uniform(key, ESCAPE_COUNTER) < (esc_ref / rad) ** (n - 2):
                            code = FOLDED
                        break
            out_code[trial] = code
            out_time[trial] = t
            out_steps[trial] = steps

    return run


run_flat_jit = _make_kernel(kernel_jit, normal_pair_jit, uniform_jit)


def _prim_state_np(x, ptype, pcen, pr1, pr2):
    """Vectorised gaps and sides for walker positions ``x`` of shape (m, n)."""
    m = x.shape[0]
    npr = len(ptype)
    gaps = np.empty((m, npr))
    sides = np.empty((m, npr), np.int64)
    for k in range(npr):
        rad = np.sqrt(((x - pcen[k]) ** 2).sum(axis=1))
        t = ptype[k]
        if t == 0:
            inside = rad <= pr1[k]
            gaps[:, k] = np.where(inside, 0.0, rad - pr1[k])
            sides[:, k] = np.where(inside, 0, 1)
        elif t == 1:
            out = rad >= pr1[k]
            gaps[:, k] = np.where(out, rad - pr1[k], pr1[k] - rad)
            sides[:, k] = np.where(out, 1, -1)
        elif t == 2:
            below, above = rad < pr1[k], rad > pr2[k]
            gaps[:, k] = np.where(below, pr1[k] - rad, np.where(above, rad - pr2[k], 0.0))
            sides[:, k] = np.where(below, -1, np.where(above, 1, 0))
        else:
            inside = rad < pr1[k]
            gaps[:, k] = np.where(inside, pr1[k] - rad, 0.0)
            sides[:, k] = np.where(inside, 1, 0)
    return gaps, sides


def run_flat_numpy(keys, x0, ptype, pcen, pr1, pr2, esc_c, esc_r, esc_ref, T, dt_max, dt_min,
                   kappa, bridge, max_steps, out_code, out_time, out_steps):
    """Same algorithm as the compiled kernel, advancing all live walkers together."""
    N, n = len(keys), len(x0)
    half = (n + 1) // 2
    block = np.uint64(2 * half + 1)
    x = np.tile(np.asarray(x0, float), (N, 1))
    t = np.zeros(N)
    steps = np.zeros(N, np.int64)
    code = np.full(N, NO_HIT, np.int64)
    gaps, sides = _prim_state_np(x, ptype, pcen, pr1, pr2)
    code[(sides == 0).any(axis=1)] = HIT
    dmin = gaps.min(axis=1)
    with np.errstate(over="ignore"):
        while True:
            live = np.flatnonzero((code == NO_HIT) & (t < T))
            if live.size == 0:
                break
            over = steps[live] >= max_steps
            code[live[over]] = ABORTED
            live = live[~over]
            dt = np.clip((dmin[live] / kappa) ** 2, dt_min, dt_max)
            dt = np.minimum(dt, T - t[live])
            tiny = (dt < ABORT_DT) & (dt_min == 0.0)
            code[live[tiny]] = ABORTED
            live, dt = live[~tiny], dt[~tiny]
            if live.size == 0:
                continue
            key = keys[live]
            ctr = steps[live].astype(np.uint64) * block
            scale = np.sqrt(2.0 * dt)
            xn = x[live].copy()
            for h in range(half):
                z0, z1 = normal_pair(key, ctr + np.uint64(2 * h))
                xn[:, 2 * h] += scale * z0
                if 2 * h + 1 < n:
                    xn[:, 2 * h + 1] += scale * z1
            u = uniform(key, ctr + block - np.uint64(1))
            steps[live] += 1
            t[live] += dt
            g_new, s_new = _prim_state_np(xn, ptype, pcen, pr1, pr2)
            crossed = ((s_new == 0) | (s_new != sides[live])).any(axis=1)
            if bridge:
                with np.errstate(divide="ignore"):
                    p_cross = np.where(s_new == sides[live], np.exp(-gaps[live] * g_new / dt[:, None]), 1.0)
                survive = np.prod(1.0 - p_cross, axis=1)
                crossed |= u >= survive
            code[live[crossed]] = HIT
            x[live] = xn
            gaps[live] = g_new
            sides[live] = s_new
            dmin[live] = g_new.min(axis=1)
            if esc_r > 0.0:
                rest = live[~crossed]
                rad = np.sqrt(((x[rest] - esc_c) ** 2).sum(axis=1))
                gone = rad >= esc_r
                idx = rest[gone]
                fold = uniform(keys[idx], ESCAPE_COUNTER) < (esc_ref / rad[gone]) ** (n - 2)
                code[idx] = np.where(fold, FOLDED, ESCAPED)
    out_code[:] = code
    out_time[:] = t
    out_steps[:] = steps
