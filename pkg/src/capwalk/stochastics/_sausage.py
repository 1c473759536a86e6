"""Intersection of the eps-sausages of two independent Brownian paths in R^n.

Each walker first takes coarse steps whose size grows with the distance
from the midpoint of the two starts, so the number of segments grows only
logarithmically with the escape radius. Segment pairs are then searched with a
dual traversal of bounding-ball trees. Bounding balls of a segment cover
the Brownian bridge between its endpoints with a margin of BRIDGE_SLACK
standard deviations. Pairs that survive pruning are refined by inserting
Brownian-bridge midpoints. Every midpoint is a deterministic function of
(trial key, coarse segment, heap position), so a segment refined twice is
refined identically.

Decision rule: once both segments are shorter than the leaf time step the
linear segments are compared. A distance of at least 4 eps is a miss. Anything closer
is refined a further 16x in time and then counted as a hit when the
segment distance is at most 2 eps.
"""

import math

import numpy as np

from .. import defaults
from .._backend import kernel_jit
from .._rng import mix64, mix64_jit, normal_pair, normal_pair_jit
from ._flat import ABORTED, ESCAPED, HIT, NO_HIT

BRIDGE_SLACK = float(defaults.load()["stochastics"]["bridge_slack"])
NODE_SALT = np.uint64(0xD1B54A32D192ED03)
MAX_HEAP_DEPTH = 39
DEEP_HEAP = 1 << MAX_HEAP_DEPTH
STACK = 512


def _make(jit, mix64, normal_pair):
    @jit
    def seg_dist(p0, p1, q0, q1, i, k):
        # closest distance between segments [p0[i], p1[i]] and [q0[k], q1[k]]
        n = p0.shape[1]
        a = 0.0
        e = 0.0
        f = 0.0
        c = 0.0
        b = 0.0
        for j in range(n):
            d1 = p1[i, j] - p0[i, j]
            d2 = q1[k, j] - q0[k, j]
            r = p0[i, j] - q0[k, j]
            a += d1 * d1
            e += d2 * d2
            f += d2 * r
            c += d1 * r
            b += d1 * d2
        if a <= 1e-300 and e <= 1e-300:
            s = 0.0
            t = 0.0
        elif a <= 1e-300:
            s = 0.0
            t = min(max(f / e, 0.0), 1.0)
        elif e <= 1e-300:
            t = 0.0
            s = min(max(-c / a, 0.0), 1.0)
        else:
            den = a * e - b * b
            s = min(max((b * f - c * e) / den, 0.0), 1.0) if den > 1e-300 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t = 1.0
                s = min(max((b - c) / a, 0.0), 1.0)
        acc = 0.0
        for j in range(n):
            d = (p0[i, j] + s * (p1[i, j] - p0[i, j])) - (q0[k, j] + t * (q1[k, j] - q0[k, j]))
            acc += d * d
        return math.sqrt(acc)

    @jit
    def walk(key, start, center, d_ref, eta, dt_max, esc_r, T, path, times):
        # coarse path; returns (segments, escaped, overflow)
        n = start.shape[0]
        half = (n + 1) // 2
        for j in range(n):
            path[0, j] = start[j]
        times[0] = 0.0
        k = 0
        cap = path.shape[0] - 1
        while True:
            acc = 0.0
            for j in range(n):
                d = path[k, j] - center[j]
                acc += d * d
            rad = math.sqrt(acc)
            if esc_r > 0.0 and rad >= esc_r:
                return k, True, False
            if times[k] >= T:
                return k, False, False
            if k >= cap:
                return k, False, True
            dt = min((eta * max(rad, d_ref)) ** 2 / (2.0 * n), dt_max)
            if dt > T - times[k]:
                dt = T - times[k]
            scale = math.sqrt(2.0 * dt)
            ctr = np.uint64(k) * np.uint64(2 * half)
            for h in range(half):
                z0, z1 = normal_pair(key, ctr + np.uint64(2 * h))
                path[k + 1, 2 * h] = path[k, 2 * h] + scale * z0
                if 2 * h + 1 < n:
                    path[k + 1, 2 * h + 1] = path[k, 2 * h + 1] + scale * z1
            times[k + 1] = times[k] + dt
            k += 1

    @jit
    def build_tree(path, times, nseg, size, cen, rad):
        # bounding balls of segments at leaves size + i, merged upwards
        n = path.shape[1]
        for i in range(size):
            node = size + i
            if i < nseg:
                acc = 0.0
                for j in range(n):
                    cen[node, j] = 0.5 * (path[i, j] + path[i + 1, j])
                    d = path[i + 1, j] - path[i, j]
                    acc += d * d
                rad[node] = 0.5 * math.sqrt(acc) + BRIDGE_SLACK * math.sqrt(times[i + 1] - times[i])
            else:
                rad[node] = -1.0
        for node in range(size - 1, 0, -1):
            l = 2 * node
            r = l + 1
            if rad[r] < 0.0:
                rad[node] = rad[l]
                for j in range(n):
                    cen[node, j] = cen[l, j]
                continue
            if rad[l] < 0.0:
                rad[node] = -1.0
                continue
            acc = 0.0
            for j in range(n):
                d = cen[r, j] - cen[l, j]
                acc += d * d
            dist = math.sqrt(acc)
            if dist + rad[r] <= rad[l]:
                rad[node] = rad[l]
                for j in range(n):
                    cen[node, j] = cen[l, j]
            elif dist + rad[l] <= rad[r]:
                rad[node] = rad[r]
                for j in range(n):
                    cen[node, j] = cen[r, j]
            else:
                big = 0.5 * (dist + rad[l] + rad[r])
                w = (big - rad[l]) / dist
                rad[node] = big
                for j in range(n):
                    cen[node, j] = cen[l, j] + w * (cen[r, j] - cen[l, j])

    @jit
    def ball_gap(c1, r1, i, c2, r2, k):
        acc = 0.0
        for j in range(c1.shape[1]):
            d = c1[i, j] - c2[k, j]
            acc += d * d
        return math.sqrt(acc) - r1[i] - r2[k]

    @jit
    def midpoint(nkey, k, heap, x0, x1, row, dt, out):
        n = x0.shape[1]
        half = (n + 1) // 2
        ctr = ((np.uint64(k) << np.uint64(40)) | np.uint64(heap)) * np.uint64(2 * half)
        s = math.sqrt(0.5 * dt)
        for h in range(half):
            z0, z1 = normal_pair(nkey, ctr + np.uint64(2 * h))
            out[2 * h] = 0.5 * (x0[row, 2 * h] + x1[row, 2 * h]) + s * z0
            if 2 * h + 1 < n:
                out[2 * h + 1] = 0.5 * (x0[row, 2 * h + 1] + x1[row, 2 * h + 1]) + s * z1

    @jit
    def refine_pair(nka, nkb, ka, kb, pa, ta, pb, tb, eps, dt_leaf, sa0, sa1, sb0, sb1, sdt, sheap, cbuf):
        # depth-first bridge refinement of one coarse pair; True on contact
        n = pa.shape[1]
        dt_fin = dt_leaf / 16.0
        top = 0
        for j in range(n):
            sa0[0, j] = pa[ka, j]
            sa1[0, j] = pa[ka + 1, j]
            sb0[0, j] = pb[kb, j]
            sb1[0, j] = pb[kb + 1, j]
        sdt[0, 0] = ta[ka + 1] - ta[ka]
        sdt[0, 1] = tb[kb + 1] - tb[kb]
        sheap[0, 0] = 1
        sheap[0, 1] = 1
        top = 1
        while top > 0:
            top -= 1
            dta = sdt[top, 0]
            dtb = sdt[top, 1]
            ha = sheap[top, 0]
            hb = sheap[top, 1]
            # capsule test: segment distance less both bridge margins
            sd = seg_dist(sa0, sa1, sb0, sb1, top, top)
            if sd - BRIDGE_SLACK * (math.sqrt(dta) + math.sqrt(dtb)) > 2.0 * eps:
                continue
            deep_a = ha >= DEEP_HEAP
            deep_b = hb >= DEEP_HEAP
            fin_a = dta <= dt_fin or deep_a
            fin_b = dtb <= dt_fin or deep_b
            if (dta <= dt_leaf or deep_a) and (dtb <= dt_leaf or deep_b):
                if fin_a and fin_b:
                    if sd <= 2.0 * eps:
                        return True
                    continue
                if sd >= 4.0 * eps:
                    continue
            split_a = (not fin_a) and (fin_b or dta >= dtb)
            if split_a:
                midpoint(nka, ka, ha, sa0, sa1, top, dta, cbuf)
                # child 2h+1 replaces the entry; child 2h is pushed above it
                for j in range(n):
                    sa0[top + 1, j] = sa0[top, j]
                    sa1[top + 1, j] = cbuf[j]
                    sb0[top + 1, j] = sb0[top, j]
                    sb1[top + 1, j] = sb1[top, j]
                    sa0[top, j] = cbuf[j]
                sdt[top, 0] = 0.5 * dta
                sdt[top + 1, 0] = 0.5 * dta
                sdt[top + 1, 1] = dtb
                sheap[top, 0] = 2 * ha + 1
                sheap[top + 1, 0] = 2 * ha
                sheap[top + 1, 1] = hb
            else:
                midpoint(nkb, kb, hb, sb0, sb1, top, dtb, cbuf)
                for j in range(n):
                    sb0[top + 1, j] = sb0[top, j]
                    sb1[top + 1, j] = cbuf[j]
                    sa0[top + 1, j] = sa0[top, j]
                    sa1[top + 1, j] = sa1[top, j]
                    sb0[top, j] = cbuf[j]
                sdt[top, 1] = 0.5 * dtb
                sdt[top + 1, 1] = 0.5 * dtb
                sdt[top + 1, 0] = dta
                sheap[top, 1] = 2 * hb + 1
                sheap[top + 1, 1] = 2 * hb
                sheap[top + 1, 0] = ha
            top += 2
        return False

    @jit
    def run(keys, xa, xb, eps, T, esc_r, eta, dt_max, dt_leaf, max_coarse, out_code, out_time, out_steps):
        n = xa.shape[0]
        center = 0.5 * (xa + xb)
        acc = 0.0
        for j in range(n):
            d = xa[j] - xb[j]
            acc += d * d
        d_ref = 0.5 * math.sqrt(acc)
        pa = np.empty((max_coarse + 1, n))
        pb = np.empty((max_coarse + 1, n))
        ta = np.empty(max_coarse + 1)
        tb = np.empty(max_coarse + 1)
        size = 1
        while size < max_coarse:
            size *= 2
        cen_a = np.empty((2 * size, n))
        cen_b = np.empty((2 * size, n))
        rad_a = np.empty(2 * size)
        rad_b = np.empty(2 * size)
        pairs = np.empty((STACK, 2), np.int64)
        sa0 = np.empty((STACK, n))
        sa1 = np.empty((STACK, n))
        sb0 = np.empty((STACK, n))
        sb1 = np.empty((STACK, n))
        sdt = np.empty((STACK, 2))
        sheap = np.empty((STACK, 2), np.int64)
        cbuf = np.empty(n)
        for trial in range(keys.shape[0]):
            key_a = keys[trial, 0]
            key_b = keys[trial, 1]
            na, esc_a, over_a = walk(key_a, xa, center, d_ref, eta, dt_max, esc_r, T, pa, ta)
            nb, esc_b, over_b = walk(key_b, xb, center, d_ref, eta, dt_max, esc_r, T, pb, tb)
            out_steps[trial] = na + nb
            out_time[trial] = max(ta[na], tb[nb])
            nka = mix64(key_a ^ NODE_SALT)
            nkb = mix64(key_b ^ NODE_SALT)
            sz_a = 1
            while sz_a < max(na, 1):
                sz_a *= 2
            sz_b = 1
            while sz_b < max(nb, 1):
                sz_b *= 2
            build_tree(pa, ta, na, sz_a, cen_a, rad_a)
            build_tree(pb, tb, nb, sz_b, cen_b, rad_b)
            code = NO_HIT
            top = 0
            if na > 0 and nb > 0:
                pairs[0, 0] = 1
                pairs[0, 1] = 1
                top = 1
            while top > 0:
                top -= 1
                i = pairs[top, 0]
                j = pairs[top, 1]
                if rad_a[i] < 0.0 or rad_b[j] < 0.0:
                    continue
                if ball_gap(cen_a, rad_a, i, cen_b, rad_b, j) > 2.0 * eps:
                    continue
                leaf_a = i >= sz_a
                leaf_b = j >= sz_b
                if leaf_a and leaf_b:
                    if refine_pair(nka, nkb, i - sz_a, j - sz_b, pa, ta, pb, tb, eps, dt_leaf,
                                   sa0, sa1, sb0, sb1, sdt, sheap, cbuf):
                        code = HIT
                        break
                    continue
                if leaf_b or (not leaf_a and rad_a[i] >= rad_b[j]):
                    pairs[top, 0] = 2 * i + 1
                    pairs[top, 1] = j
                    pairs[top + 1, 0] = 2 * i
                    pairs[top + 1, 1] = j
                else:
                    pairs[top, 0] = i
                    pairs[top, 1] = 2 * j + 1
                    pairs[top + 1, 0] = i
                    pairs[top + 1, 1] = 2 * j
                top += 2
            if code == NO_HIT:
                if over_a or over_b:
                    code = ABORTED
                elif esc_a and esc_b:
                    code = ESCAPED
            out_code[trial] = code

    return run


run_sausage_jit = _make(kernel_jit, mix64_jit, normal_pair_jit)
run_sausage_numpy = _make(lambda fn: fn, mix64, normal_pair)
