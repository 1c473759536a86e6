"""Kernels for Brownian motion on the Eguchi-Hanson product.

Radial kernel: the radial coordinate is an autonomous diffusion with drift
3/r + a^4/r^5 and diffusivity 2 f(r), f = 1 - (a/r)^4. It is stepped as the
norm of a 4-vector whose noise is stretched by sqrt(f) along the radial
direction and which carries the extra drift a^4/r^5. The law of the norm is
that of the radial diffusion and the scheme is exact when f = 1, so the
Euler error only enters through the small curvature terms.

Chart kernel: full Euler-Maruyama in the unit-determinant Cartesian chart of
the Eguchi-Hanson factor (metric eigenvalues 1/f radially, f along the Hopf
direction), plus independent flat coordinates. It either tracks hits of the
bolt sublevel set or exits from a ball, where the distance from the centre
is replaced by the upper value sqrt(|dx|^2 / f_min + |dz|^2) (f_min taken at
the point of the chart segment closest to the bolt), so exits are never
missed.

Outcome codes match ``_flat``.
"""

import math

import numpy as np

from .._backend import kernel_jit
from .._rng import normal_pair, normal_pair_jit, uniform, uniform_jit
from ._flat import ABORT_DT, ABORTED, ESCAPE_COUNTER, ESCAPED, FOLDED, HIT, NO_HIT


def bolt_oracle(r, a, r_star):
    """P_r[hit {r <= r_star}] for the radial diffusion with T = infinity."""
    r = np.asarray(r, dtype=float)
    num = np.log((r * r + a * a) / (r * r - a * a)) if a > 0 else 0.0
    if r_star <= a:
        return np.ones_like(r) if np.ndim(r) else 1.0
    den = math.log((r_star**2 + a * a) / (r_star**2 - a * a))
    out = np.where(r <= r_star, 1.0, num / den)
    return float(out) if np.ndim(out) == 0 else out


def _make_radial(jit, normal_pair, uniform):
    @jit
    def oracle(r, a, log_star):
        if log_star <= 0.0:
            return 1.0
        return math.log((r * r + a * a) / (r * r - a * a)) / log_star

    @jit
    def run(keys, r0, a, r_star, esc_r, T, dt_max, dt_min, kappa, bridge, max_steps,
            out_code, out_time, out_steps):
        a4 = a ** 4
        f_star = 1.0 - a4 / r_star ** 4
        if f_star <= 0.0:
            f_star = 1e-300
        log_star = 0.0
        if r_star > a:
            log_star = math.log((r_star * r_star + a * a) / (r_star * r_star - a * a))
        block = np.uint64(5)
        for trial in range(keys.shape[0]):
            key = keys[trial]
            r = r0
            t = 0.0
            steps = 0
            code = NO_HIT
            if r <= r_star:
                code = HIT
            while code == NO_HIT and t < T:
                if steps >= max_steps:
                    code = ABORTED
                    break
                gap = r - r_star
                dt = (gap / kappa) ** 2
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
                z0, z1 = normal_pair(key, ctr)
                z2, z3 = normal_pair(key, ctr + np.uint64(2))
                u = uniform(key, ctr + np.uint64(4))
                f = 1.0 - a4 / r ** 4
                s = math.sqrt(2.0 * dt)
                y0 = r + a4 / r ** 5 * dt + s * math.sqrt(f) * z0
                rn = math.sqrt(y0 * y0 + s * s * (z1 * z1 + z2 * z2 + z3 * z3))
                if rn < a:
                    rn = 2.0 * a - rn
                steps += 1
                t += dt
                if rn <= r_star:
                    code = HIT
                elif bridge and u < math.exp(-gap * (rn - r_star) / (f_star * dt)):
                    code = HIT
                r = rn
                if code == NO_HIT and esc_r > 0.0 and r >= esc_r:
                    code = ESCAPED
                    if uniform(key, ESCAPE_COUNTER) < oracle(r, a, log_star):
                        code = FOLDED
            out_code[trial] = code
            out_time[trial] = t
            out_steps[trial] = steps

    return run


run_radial_jit = _make_radial(kernel_jit, normal_pair_jit, uniform_jit)


def run_radial_numpy(keys, r0, a, r_star, esc_r, T, dt_max, dt_min, kappa, bridge, max_steps,
                     out_code, out_time, out_steps):
    N = len(keys)
    a4 = a**4
    f_star = max(1.0 - a4 / r_star**4, 1e-300)
    log_star = math.log((r_star**2 + a * a) / (r_star**2 - a * a)) if r_star > a else 0.0
    block = np.uint64(5)
    r = np.full(N, float(r0))
    t = np.zeros(N)
    steps = np.zeros(N, np.int64)
    code = np.where(r <= r_star, HIT, NO_HIT).astype(np.int64)
    with np.errstate(over="ignore"):
        while True:
            live = np.flatnonzero((code == NO_HIT) & (t < T))
            if live.size == 0:
                break
            over = steps[live] >= max_steps
            code[live[over]] = ABORTED
            live = live[~over]
            gap = r[live] - r_star
            dt = np.minimum(np.clip((gap / kappa) ** 2, dt_min, dt_max), T - t[live])
            tiny = (dt < ABORT_DT) & (dt_min == 0.0)
            code[live[tiny]] = ABORTED
            live, dt, gap = live[~tiny], dt[~tiny], gap[~tiny]
            if live.size == 0:
                continue
            key = keys[live]
            ctr = steps[live].astype(np.uint64) * block
            z0, z1 = normal_pair(key, ctr)
            z2, z3 = normal_pair(key, ctr + np.uint64(2))
            u = uniform(key, ctr + np.uint64(4))
            rl = r[live]
            f = 1.0 - a4 / rl**4
            s = np.sqrt(2.0 * dt)
            y0 = rl + a4 / rl**5 * dt + s * np.sqrt(f) * z0
            rn = np.sqrt(y0 * y0 + s * s * (z1 * z1 + z2 * z2 + z3 * z3))
            rn = np.where(rn < a, 2.0 * a - rn, rn)
            steps[live] += 1
            t[live] += dt
            hit = rn <= r_star
            if bridge:
                hit |= u < np.exp(-gap * (rn - r_star) / (f_star * dt))
            code[live[hit]] = HIT
            r[live] = rn
            if esc_r > 0.0:
                rest = live[~hit]
                gone = rest[r[rest] >= esc_r]
                if gone.size:
                    rg = r[gone]
                    prob = np.log((rg * rg + a * a) / (rg * rg - a * a)) / log_star if log_star > 0 else np.ones_like(rg)
                    fold = uniform(keys[gone], ESCAPE_COUNTER) < prob
                    code[gone] = np.where(fold, FOLDED, ESCAPED)
    out_code[:] = code
    out_time[:] = t
    out_steps[:] = steps


# --- full chart kernel ---------------------------------------------------------

MODE_BOLT, MODE_EXIT = 0, 1


def _make_chart(jit, normal_pair, uniform):
    @jit
    def seg_min_norm(p, q):
        # distance from the origin to the segment [p, q] in R^4
        dd = 0.0
        pd = 0.0
        for j in range(4):
            d = q[j] - p[j]
            dd += d * d
            pd += p[j] * d
        s = 0.0
        if dd > 0.0:
            s = min(1.0, max(0.0, -pd / dd))
        acc = 0.0
        for j in range(4):
            c = p[j] + s * (q[j] - p[j])
            acc += c * c
        return math.sqrt(acc)

    @jit
    def exit_distance(x, z, xc, zc, a4):
        fmin = 1.0 - a4 / seg_min_norm(xc, x) ** 4
        ax = 0.0
        for j in range(4):
            d = x[j] - xc[j]
            ax += d * d
        az = 0.0
        for j in range(z.shape[0]):
            d = z[j] - zc[j]
            az += d * d
        return math.sqrt(ax / fmin + az)

    @jit
    def run(keys, x0, z0, a, mode, target, esc_r, T, dt_max, dt_min, kappa, bridge, max_steps,
            out_code, out_time, out_steps):
        k = z0.shape[0]
        dim = 4 + k
        half = (dim + 1) // 2
        block = np.uint64(2 * half + 1)
        a4 = a ** 4
        f_star = 1.0
        log_star = 0.0
        if mode == MODE_BOLT:
            f_star = max(1.0 - a4 / target ** 4, 1e-300)
            if target > a:
                log_star = math.log((target * target + a * a) / (target * target - a * a))
        x = np.empty(4)
        z = np.empty(k)
        xn = np.empty(4)
        zn = np.empty(k)
        eta = np.empty(dim)
        for trial in range(keys.shape[0]):
            key = keys[trial]
            for j in range(4):
                x[j] = x0[j]
            for j in range(k):
                z[j] = z0[j]
            t = 0.0
            steps = 0
            code = NO_HIT
            r = math.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2)
            if mode == MODE_BOLT:
                gap = r - target
            else:
                gap = target - exit_distance(x, z, x0, z0, a4)
            if gap <= 0.0:
                code = HIT
            while code == NO_HIT and t < T:
                if steps >= max_steps:
                    code = ABORTED
                    break
                dt = (gap / kappa) ** 2
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
                for h in range(half):
                    e0, e1 = normal_pair(key, ctr + np.uint64(2 * h))
                    eta[2 * h] = e0
                    if 2 * h + 1 < dim:
                        eta[2 * h + 1] = e1
                u = uniform(key, ctr + block - np.uint64(1))
                f = 1.0 - a4 / r ** 4
                inv_r = 1.0 / r
                xr0, xr1, xr2, xr3 = x[0] * inv_r, x[1] * inv_r, x[2] * inv_r, x[3] * inv_r
                v0, v1, v2, v3 = -xr1, xr0, -xr3, xr2
                pr = xr0 * eta[0] + xr1 * eta[1] + xr2 * eta[2] + xr3 * eta[3]
                pv = v0 * eta[0] + v1 * eta[1] + v2 * eta[2] + v3 * eta[3]
                cr = math.sqrt(f) - 1.0
                cv = 1.0 / math.sqrt(f) - 1.0
                drift = a4 / r ** 6 - a4 / (r ** 4 - a4) / (r * r)
                s = math.sqrt(2.0 * dt)
                xn[0] = x[0] + drift * x[0] * dt + s * (eta[0] + cr * pr * xr0 + cv * pv * v0)
                xn[1] = x[1] + drift * x[1] * dt + s * (eta[1] + cr * pr * xr1 + cv * pv * v1)
                xn[2] = x[2] + drift * x[2] * dt + s * (eta[2] + cr * pr * xr2 + cv * pv * v2)
                xn[3] = x[3] + drift * x[3] * dt + s * (eta[3] + cr * pr * xr3 + cv * pv * v3)
                for j in range(k):
                    zn[j] = z[j] + s * eta[4 + j]
                rn = math.sqrt(xn[0] ** 2 + xn[1] ** 2 + xn[2] ** 2 + xn[3] ** 2)
                if rn < a:
                    # reflect through the bolt along the radial direction
                    for j in range(4):
                        xn[j] *= (2.0 * a - rn) / rn
                    rn = 2.0 * a - rn
                steps += 1
                t += dt
                if mode == MODE_BOLT:
                    gap_new = rn - target
                    diff = f_star
                else:
                    gap_new = target - exit_distance(xn, zn, x0, z0, a4)
                    diff = 1.0
                if gap_new <= 0.0:
                    code = HIT
                elif bridge and u < math.exp(-gap * gap_new / (diff * dt)):
                    code = HIT
                for j in range(4):
                    x[j] = xn[j]
                for j in range(k):
                    z[j] = zn[j]
                r = rn
                gap = gap_new
                if code == NO_HIT and mode == MODE_BOLT and esc_r > 0.0 and r >= esc_r:
                    code = ESCAPED
                    prob = 1.0
                    if log_star > 0.0:
                        prob = math.log((r * r + a * a) / (r * r - a * a)) / log_star
                    if uniform(key, ESCAPE_COUNTER) < prob:
                        code = FOLDED
            out_code[trial] = code
            out_time[trial] = t
            out_steps[trial] = steps

    return run


run_chart_jit = _make_chart(kernel_jit, normal_pair_jit, uniform_jit)
# The chart kernel is a spot-check tool; its numpy path runs the same scalar
# code trial by trial without compilation.
run_chart_numpy = _make_chart(lambda fn: fn, normal_pair, uniform)
