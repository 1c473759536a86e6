"""Equilibrium measures of discretized sets.

The energy w^T K w is minimised over the probability simplex by Frank-Wolfe
with away steps. Each step keeps K w up to date with one column update, so a
step costs O(N). Between Frank-Wolfe rounds an active-set polish solves the
KKT system on the current support, which finishes the nearly full-support
equilibria of smooth sets in a few rounds. The returned gap
w^T K w - min_i (K w)_i certifies first-order optimality.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .. import defaults, geometry
from .._backend import active_backend, njit
from ..errors import GeometryDomainError
from ..kernels import KernelChoice


@dataclass(frozen=True)
class PatchMeasure:
    """Discrete probability measure whose atoms stand for small uniform patches."""

    support: np.ndarray
    weights: np.ndarray
    patch_radii: np.ndarray
    patch_dim: int = None

    def __post_init__(self):
        support = np.atleast_2d(np.asarray(self.support, float))
        weights = np.asarray(self.weights, float)
        radii = np.asarray(self.patch_radii, float)
        if not (len(support) == len(weights) == len(radii)):
            raise GeometryDomainError("support, weights and patch_radii must have equal length")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise GeometryDomainError("weights must be nonnegative and sum to 1")
        if np.any(radii <= 0):
            raise GeometryDomainError("patch radii must be positive")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "patch_radii", radii)
        if self.patch_dim is None:
            object.__setattr__(self, "patch_dim", max(1, support.shape[1] - 1))

    @classmethod
    def uniform(cls, support, patch_radii=None, patch_dim=None):
        from .discretize import half_nn_radii

        support = np.atleast_2d(np.asarray(support, float))
        radii = half_nn_radii(support) if patch_radii is None else patch_radii
        return cls(support, np.full(len(support), 1.0 / len(support)), radii, patch_dim)

    def __len__(self):
        return len(self.weights)


@dataclass
class CapacityResult:
    capacity: float
    energy: float
    weights: PatchMeasure
    iterations: int
    duality_gap: float
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def relative_gap(self):
        return self.duality_gap / self.energy


def _support_array(points):
    if isinstance(points, PatchMeasure):
        return points.support, points.patch_radii
    from .discretize import half_nn_radii

    support = np.atleast_2d(np.asarray(points, float))
    return support, half_nn_radii(support)


def kernel_matrix(points, kernel, patch_radii=None, rho_reg=None, m=None):
    """Symmetric kernel matrix with patch-regularised diagonal.

    Off-diagonal entries are d(x_i, x_j)^(2-n) times the Martin weight
    (d(x0, x_i)^(n-2) + d(x0, x_j)^(n-2)) / 2 (the symmetric part of the Martin
    kernel, which has the same quadratic form). Diagonal entries are the
    kernel at distance rho_reg * patch_radius_i.
    """
    support, radii = _support_array(points)
    if patch_radii is not None:
        radii = np.asarray(patch_radii, float)
    n = support.shape[1] if m is None else m.dim
    if kernel.exponent != n - 2:
        raise GeometryDomainError("kernel exponent must equal n - 2")
    if rho_reg is None:
        rho_reg = defaults.rho_reg(n)
    if m is not None and not m.is_flat:
        pts = [geometry.Point(m, row) for row in support]
        dist = np.array([[geometry.distance(m, p, q) for q in pts] for p in pts])
    else:
        dist = cdist(support, support)
    np.fill_diagonal(dist, 1.0)
    K = dist ** (2.0 - n)
    np.fill_diagonal(K, (rho_reg * radii) ** (2.0 - n))
    if kernel.tag == "martin":
        x0 = np.asarray(kernel.x0, float)
        if m is not None and not m.is_flat:
            base = geometry.Point(m, x0)
            d0 = np.array([geometry.distance(m, base, p) for p in pts])
        else:
            d0 = np.linalg.norm(support - x0, axis=1)
        w = d0 ** (n - 2.0)
        K *= 0.5 * (w[:, None] + w[None, :])
    return K


# --- Frank-Wolfe with away steps ---------------------------------------------


def _fw_away(K, w, Kw, tol, max_iter):
    n = K.shape[0]
    E = 0.0
    for i in range(n):
        E += w[i] * Kw[i]
    it = 0
    gap = math.inf
    while it < max_iter:
        s = 0
        gmin = Kw[0]
        v = -1
        gmax = -math.inf
        for i in range(n):
            if Kw[i] < gmin:
                gmin = Kw[i]
                s = i
            if w[i] > 0.0 and Kw[i] > gmax:
                gmax = Kw[i]
                v = i
        gap = E - gmin
        if gap <= tol * E:
            break
        if gap >= gmax - E:
            den = K[s, s] - 2.0 * gmin + E
            step = 1.0 if den <= 0.0 else min(1.0, gap / den)
            for i in range(n):
                w[i] *= 1.0 - step
                Kw[i] = (1.0 - step) * Kw[i] + step * K[s, i]
            w[s] += step
            E = (1.0 - step) ** 2 * E + 2.0 * step * (1.0 - step) * gmin + step * step * K[s, s]
        else:
            wv = w[v]
            max_step = wv / (1.0 - wv)
            den = E - 2.0 * gmax + K[v, v]
            step = max_step if den <= 0.0 else min(max_step, (gmax - E) / den)
            for i in range(n):
                w[i] *= 1.0 + step
                Kw[i] = (1.0 + step) * Kw[i] - step * K[v, i]
            w[v] -= step
            if step == max_step:
                w[v] = 0.0
            E = (1.0 + step) ** 2 * E - 2.0 * step * (1.0 + step) * gmax + step * step * K[v, v]
        it += 1
        if it % 512 == 0:
            # refresh against accumulated rounding
            total = 0.0
            for i in range(n):
                total += w[i]
            for i in range(n):
                w[i] /= total
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += K[i, j] * w[j]
                Kw[i] = acc
            E = 0.0
            for i in range(n):
                E += w[i] * Kw[i]
    return it, E, gap


_fw_away_jit = njit(cache=True, nogil=True)(_fw_away)


def _fw_away_numpy(K, w, Kw, tol, max_iter):
    """Vectorised Frank-Wolfe loop with the same step rules as the compiled one."""
    E = float(w @ Kw)
    it = 0
    gap = math.inf
    while it < max_iter:
        s = int(np.argmin(Kw))
        gmin = Kw[s]
        active = np.flatnonzero(w > 0.0)
        v = int(active[np.argmax(Kw[active])])
        gmax = Kw[v]
        gap = E - gmin
        if gap <= tol * E:
            break
        if gap >= gmax - E:
            den = K[s, s] - 2.0 * gmin + E
            step = 1.0 if den <= 0.0 else min(1.0, gap / den)
            w *= 1.0 - step
            w[s] += step
            Kw *= 1.0 - step
            Kw += step * K[s]
            E = (1.0 - step) ** 2 * E + 2.0 * step * (1.0 - step) * gmin + step * step * K[s, s]
        else:
            wv = w[v]
            max_step = wv / (1.0 - wv)
            den = E - 2.0 * gmax + K[v, v]
            step = max_step if den <= 0.0 else min(max_step, (gmax - E) / den)
            w *= 1.0 + step
            w[v] -= step
            if step == max_step:
                w[v] = 0.0
            Kw *= 1.0 + step
            Kw -= step * K[v]
            E = (1.0 + step) ** 2 * E - 2.0 * step * (1.0 + step) * gmax + step * step * K[v, v]
        it += 1
        if it % 512 == 0:
            w /= w.sum()
            Kw[:] = K @ w
            E = float(w @ Kw)
    return it, E, gap


def _polish(K, w, max_rounds=60):
    """Solve the KKT system on the support of ``w``, dropping atoms that go negative."""
    support = np.flatnonzero(w > 0.0)
    for _ in range(max_rounds):
        if support.size == 0:
            return None
        sub = K[np.ix_(support, support)]
        try:
            v = np.linalg.solve(sub, np.ones(support.size))
        except np.linalg.LinAlgError:
            return None
        keep = v > 0.0
        if keep.all():
            out = np.zeros_like(w)
            out[support] = v / v.sum()
            return out
        support = support[keep]
    return None


def _certify(K, w):
    Kw = K @ w
    E = float(w @ Kw)
    return Kw, E, E - float(Kw.min())


def equilibrium_measure(points, kernel, tol=None, max_iters=None, rho_reg=None, m=None, K=None):
    """Minimise the discrete energy over probability weights on ``points``.

    Returns a ``CapacityResult``; ``converged`` is False when the relative gap
    is still above ``tol`` after ``max_iters`` Frank-Wolfe steps, in which case
    the best iterate found is returned with its gap.
    """
    cfg = defaults.load()["capacity"]
    tol = cfg["tol"] if tol is None else tol
    max_iters = cfg["max_iters"] if max_iters is None else max_iters
    if not tol > 0:
        raise GeometryDomainError("tol must be positive")
    support, radii = _support_array(points)
    patch_dim = points.patch_dim if isinstance(points, PatchMeasure) else None
    if K is None:
        K = kernel_matrix(support, kernel, radii, rho_reg, m)
    K = np.ascontiguousarray(K, dtype=float)
    if not np.all(np.isfinite(K)):
        raise GeometryDomainError("kernel matrix must be finite (patch regularisation missing)")
    N = K.shape[0]
    w = np.full(N, 1.0 / N)
    Kw = K @ w
    loop = _fw_away_jit if active_backend() == "numba" else _fw_away_numpy
    chunk = max(2000, 4 * N)
    total = 0
    polishes = 0
    best = (math.inf, w.copy(), math.inf)
    while True:
        budget = min(chunk, max_iters - total)
        it, E, gap = loop(K, w, Kw, tol, budget)
        total += it
        Kw, E, gap = _certify(K, w)
        if E < best[0]:
            best = (E, w.copy(), gap)
        if gap <= tol * E or total >= max_iters:
            break
        trial = _polish(K, w)
        polishes += 1
        if trial is not None:
            Kw_t, E_t, gap_t = _certify(K, trial)
            if E_t < E:
                w, Kw, E, gap = trial, Kw_t, E_t, gap_t
                if E < best[0]:
                    best = (E, w.copy(), gap)
                if gap <= tol * E:
                    break
    E, w, gap = best
    converged = gap <= tol * E
    measure = PatchMeasure(support, w / w.sum(), radii, patch_dim)
    return CapacityResult(
        capacity=1.0 / E,
        energy=E,
        weights=measure,
        iterations=total,
        duality_gap=gap,
        converged=converged,
        diagnostics={"polish_rounds": polishes, "points": N, "tol": tol},
    )


def calibrate_rho_reg(n, count, tol=1e-7):
    """Diagonal factor for which the unit sphere of R^n at ``count`` points has capacity 1."""
    from scipy.optimize import brentq

    from .discretize import half_nn_radii, sphere_points

    support = sphere_points(n, count)
    radii = half_nn_radii(support)
    kernel = KernelChoice.newtonian(n)
    base = kernel_matrix(support, kernel, radii, 1.0)

    def excess(rho):
        K = base.copy()
        np.fill_diagonal(K, (rho * radii) ** (2.0 - n))
        return equilibrium_measure(support, kernel, tol=1e-9, K=K).capacity - 1.0

    return brentq(excess, 0.2, 3.0, xtol=tol)
