"""Monte Carlo estimates of hitting events for generator-Laplacian Brownian motion."""

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import defaults, geometry
from .._rng import derive_trial_seed
from ..errors import GeometryDomainError, PreconditionError, UnsupportedGeometryError
from ..stats import binomial_ci
from . import _eh, _flat, _sausage
from .engine import run_trials

_DEFAULTS = defaults.load()["stochastics"]
ABORT_FLAG_FRACTION = _DEFAULTS["abort_flag_fraction"]


@dataclass(frozen=True)
class StepPolicy:
    """Adaptive step rule dt = clip((gap / kappa)^2, dt_min, dt_max)."""

    dt_max: float = math.inf
    kappa: float = _DEFAULTS["kappa"]
    bridge: bool = True
    dt_min: float = _DEFAULTS["dt_min"]
    max_steps: int = _DEFAULTS["max_steps"]

    def __post_init__(self):
        if not self.dt_max > 0:
            raise GeometryDomainError("dt_max must be positive")
        if not self.kappa >= 2:
            raise GeometryDomainError("kappa must be >= 2")
        if not self.dt_min >= 0:
            raise GeometryDomainError("dt_min must be >= 0")


@dataclass
class TrialReport:
    hits: int
    trials: int
    p_hat: float
    ci: tuple
    seed: int
    policy: StepPolicy
    wall_time: float = 0.0
    level: float = 0.99
    aborted: int = 0
    escaped: int = 0
    folded: int = 0
    flagged: bool = False
    bias_notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["ci"] = list(self.ci)
        return d


def _report(codes, seed, policy, level, started, notes, extra=None):
    trials = len(codes)
    hits = int(np.count_nonzero((codes == _flat.HIT) | (codes == _flat.FOLDED)))
    aborted = int(np.count_nonzero(codes == _flat.ABORTED))
    escaped = int(np.count_nonzero(codes == _flat.ESCAPED))
    folded = int(np.count_nonzero(codes == _flat.FOLDED))
    lo, hi = binomial_ci(hits, trials, level)
    flagged = aborted > ABORT_FLAG_FRACTION * trials
    if flagged:
        notes = notes + [f"{aborted} of {trials} trials aborted (step underflow or step cap)"]
    return TrialReport(
        hits=hits,
        trials=trials,
        p_hat=hits / trials,
        ci=(lo, hi),
        seed=int(seed),
        policy=policy,
        wall_time=time.perf_counter() - started,
        level=level,
        aborted=aborted,
        escaped=escaped,
        folded=folded,
        flagged=flagged,
        bias_notes=notes,
        extra=extra or {},
    )


# --- single steps ----------------------------------------------------------------


def simulate_step(m, p, dt, noise):
    """One Euler-Maruyama step x + b dt + sqrt(2 dt) sigma noise with sigma sigma^T = g^-1.

    On the Eguchi-Hanson chart a step that lands below the bolt is reflected
    radially, r -> 2a - r.
    """
    if not dt > 0:
        raise GeometryDomainError("dt must be positive")
    noise = np.asarray(noise, float)
    if noise.shape != (m.dim,):
        raise GeometryDomainError(f"noise must have shape ({m.dim},)")
    if m.is_flat:
        return geometry.Point(m, p.array + math.sqrt(2.0 * dt) * noise)
    g_inv = np.linalg.inv(geometry.metric_at(m, p))
    sigma = np.linalg.cholesky(0.5 * (g_inv + g_inv.T))
    x = p.array + geometry.laplace_drift(m, p) * dt + math.sqrt(2.0 * dt) * sigma @ noise
    a = m.bolt_scale
    if x[0] < a:
        x[0] = 2.0 * a - x[0]
    x[1] = abs(x[1]) % (2 * math.pi)
    if x[1] > math.pi:
        x[1] = 2 * math.pi - x[1]
    return geometry.Point(m, x)


# --- flat targets ----------------------------------------------------------------


def _flat_primitives(s, n, out):
    if isinstance(s, geometry.Ball):
        out.append((0, s.center, s.radius, 0.0))
    elif isinstance(s, geometry.SphereShell):
        out.append((1, s.center, s.radius, 0.0))
    elif isinstance(s, geometry.Annulus):
        out.append((2, s.center, s.r_in, s.r_out))
    elif isinstance(s, geometry.FiniteUnion):
        for member in s.members:
            _flat_primitives(member, n, out)
    else:
        raise UnsupportedGeometryError(f"no flat hitting kernel for {s!r}")
    if len(out[-1][1]) != n:
        raise GeometryDomainError("set center has the wrong dimension")
    return out


def compile_flat_target(s, n):
    """Primitive arrays plus a bounding ball (center, radius, exact_fold)."""
    geometry._check_set(s)
    prims = _flat_primitives(s, n, [])
    ptype = np.array([p[0] for p in prims], np.int64)
    pcen = np.array([p[1] for p in prims], float).reshape(len(prims), n)
    pr1 = np.array([p[2] for p in prims], float)
    pr2 = np.array([p[3] for p in prims], float)
    outer = np.where(ptype == 2, pr2, pr1)
    if len(prims) == 1:
        return ptype, pcen, pr1, pr2, pcen[0], float(outer[0]), True
    center = pcen.mean(axis=0)
    radius = float(np.max(np.linalg.norm(pcen - center, axis=1) + outer))
    return ptype, pcen, pr1, pr2, center, radius, False


def _flat_hits(n, x0, target, T, policy, trials, seed, workers, escape_factor):
    ptype, pcen, pr1, pr2, center, ref, exact = target
    notes = []
    esc_r = 0.0
    if math.isinf(T):
        dist = float(np.linalg.norm(x0 - center))
        if dist <= ref and not np.all(ptype == 1):
            raise PreconditionError("the T = infinity surrogate needs the start outside the target's bounding ball")
        esc_r = escape_factor * max(dist, ref)
        notes.append(
            f"T=inf surrogate: stop at radius {esc_r:g} about the target, count a hit with probability "
            f"(R_ref/|x-c|)^(n-2), R_ref={ref:g}" + ("" if exact else " (an upper value for unions)")
        )
    notes.append(f"bridge correction {'on' if policy.bridge else 'off'}; kappa={policy.kappa:g}, dt_min={policy.dt_min:g}")
    args = (np.asarray(x0, float), ptype, pcen, pr1, pr2, np.asarray(center, float), esc_r, ref, float(T),
            float(policy.dt_max), float(policy.dt_min), float(policy.kappa), bool(policy.bridge), int(policy.max_steps))
    codes, times, _ = run_trials((_flat.run_flat_jit, _flat.run_flat_numpy), args, seed, trials, workers)
    return codes, times, notes


def _is_bolt_target(s):
    if isinstance(s, geometry.BoltSublevel):
        return s.r_star
    if isinstance(s, geometry.Product) and isinstance(s.base, geometry.BoltSublevel) and math.isinf(s.slab.half_width):
        return s.base.r_star
    return None


def hitting_probability_mc(m, x0, s, T, trials, policy=None, seed=0, workers=1, level=0.99,
                           escape_factor=50.0, method="radial"):
    """Estimate P_x0[X_t in s for some 0 < t < T] with a Clopper-Pearson interval."""
    policy = policy or StepPolicy()
    if trials < 1:
        raise GeometryDomainError("trials must be >= 1")
    started = time.perf_counter()
    if m.is_flat:
        target = compile_flat_target(s, m.dim)
        codes, _, notes = _flat_hits(m.dim, x0.array, target, T, policy, trials, seed, workers, escape_factor)
        return _report(codes, seed, policy, level, started, notes)
    r_star = _is_bolt_target(s)
    if r_star is None:
        raise UnsupportedGeometryError("on the Eguchi-Hanson product only bolt sublevel targets are simulated")
    codes, notes = _bolt_codes(m, x0, max(r_star, m.bolt_scale), T, trials, policy, seed, workers, escape_factor, method)
    return _report(codes, seed, policy, level, started, notes)


def first_hitting(m, x0, s, T, policy=None, seed=0, trial=0):
    """Single trial: returns (hit, tau). ``tau`` is None without a hit by T.

    With the T = infinity surrogate an escaped walker that is folded into a
    hit has no hitting time; it is returned as (True, None).
    """
    policy = policy or StepPolicy()
    if not m.is_flat:
        raise UnsupportedGeometryError("single-trial hitting is implemented on Euclidean space")
    target = compile_flat_target(s, m.dim)
    ptype, pcen, pr1, pr2, center, ref, _ = target
    esc_r = 50.0 * max(float(np.linalg.norm(x0.array - center)), ref) if math.isinf(T) else 0.0
    keys = np.array([derive_trial_seed(seed, trial)], np.uint64)
    code, t, st = np.empty(1, np.int64), np.empty(1), np.empty(1, np.int64)
    _flat.run_flat_jit(keys, x0.array, ptype, pcen, pr1, pr2, np.asarray(center, float), esc_r, ref, float(T),
                       float(policy.dt_max), float(policy.dt_min), float(policy.kappa), bool(policy.bridge),
                       int(policy.max_steps), code, t, st)
    if code[0] == _flat.HIT:
        return True, float(t[0])
    if code[0] == _flat.FOLDED:
        return True, None
    return False, None


def occupancy_time_mc(m, x0, ball, T, trials, steps=400, seed=0):
    """Expected time spent in ``ball`` before T, returned as (mean, standard error).

    Flat space only. Paths use exact Gaussian increments of variance 2 dt on a
    uniform grid of ``steps`` intervals; occupancy is the midpoint Riemann sum.
    """
    if not m.is_flat:
        raise UnsupportedGeometryError("occupancy time is implemented on Euclidean space")
    if not isinstance(ball, geometry.Ball):
        raise UnsupportedGeometryError("occupancy time needs a Ball")
    if not (T > 0 and math.isfinite(T)):
        raise GeometryDomainError("T must be positive and finite")
    if trials < 2 or steps < 1:
        raise GeometryDomainError("need trials >= 2 and steps >= 1")
    dt = T / steps
    rng = np.random.default_rng(seed)
    c = np.asarray(ball.center, float)
    x = np.tile(x0.array, (trials, 1))
    occ = np.zeros(trials)
    half = math.sqrt(dt)  # half-step increment has variance dt
    for _ in range(steps):
        x += half * rng.standard_normal(x.shape)
        occ += dt * (np.linalg.norm(x - c, axis=1) <= ball.radius)
        x += half * rng.standard_normal(x.shape)
    return float(occ.mean()), float(occ.std(ddof=1) / math.sqrt(trials))


# --- exit times ---------------------------------------------------------------------


def exit_time_tail(m, x0, r, delta, trials, policy=None, seed=0, workers=1, level=0.99):
    """Estimate P[tau <= delta] for the exit time tau of B(x0, r) and compare with exp(-r^2 / 100 delta)."""
    policy = policy or StepPolicy()
    n = m.dim
    if not (r > 0 and delta > 0):
        raise GeometryDomainError("r and delta must be positive")
    if delta > r * r / (2 * n):
        raise PreconditionError(f"delta must be <= r^2/(2n) = {r * r / (2 * n):g}")
    bound = math.exp(-r * r / (100.0 * delta))
    started = time.perf_counter()
    if m.is_flat:
        x = x0.array
        target = (np.array([3], np.int64), x[None, :].copy(), np.array([float(r)]), np.array([0.0]), x, float(r), True)
        codes, _, notes = _flat_hits(n, x, target, float(delta), policy, trials, seed, workers, 0.0)
    else:
        a, k = m.bolt_scale, m.flat_dim
        xc = geometry.eh_to_cartesian(*x0.coords[:4])
        zc = np.array(x0.coords[4:], float)
        if np.linalg.norm(xc) - a <= 2.0 * r:
            raise PreconditionError("the exit check on the Eguchi-Hanson product needs a centre far from the bolt")
        args = (xc, zc, float(a), _eh.MODE_EXIT, float(r), 0.0, float(delta), float(policy.dt_max),
                float(policy.dt_min), float(policy.kappa), bool(policy.bridge), int(policy.max_steps))
        codes, _, _ = run_trials((_eh.run_chart_jit, _eh.run_chart_numpy), args, seed, trials, workers)
        notes = [
            "Eguchi-Hanson chart simulation; exits use the upper distance sqrt(|dx|^2/f_min + |dz|^2), "
            "so the estimate can only err upward",
            f"bridge correction {'on' if policy.bridge else 'off'}; kappa={policy.kappa:g}",
        ]
    rep = _report(codes, seed, policy, level, started, notes)
    rep.extra = {"bound": bound, "pass": rep.ci[1] <= bound}
    return rep


# --- Eguchi-Hanson bolt ---------------------------------------------------------------


def _bolt_codes(m, x0, r_star, T, trials, policy, seed, workers, escape_factor, method):
    a = m.bolt_scale
    r0 = x0.radius
    esc_r = escape_factor * r0 if math.isinf(T) else 0.0
    notes = [f"bridge correction {'on' if policy.bridge else 'off'}; kappa={policy.kappa:g}"]
    if esc_r:
        notes.append(f"T=inf surrogate: stop at r={esc_r:g}, count a hit with the exact radial probability")
    common = (float(esc_r), float(T), float(policy.dt_max), float(policy.dt_min), float(policy.kappa),
              bool(policy.bridge), int(policy.max_steps))
    if method == "radial":
        args = (float(r0), float(a), float(r_star)) + common
        codes, _, _ = run_trials((_eh.run_radial_jit, _eh.run_radial_numpy), args, seed, trials, workers)
        notes.insert(0, "autonomous radial diffusion (reflected at the bolt)")
    elif method == "chart":
        xc = geometry.eh_to_cartesian(*x0.coords[:4])
        args = (xc, np.zeros(0), float(a), _eh.MODE_BOLT, float(r_star)) + common
        codes, _, _ = run_trials((_eh.run_chart_jit, _eh.run_chart_numpy), args, seed, trials, workers)
        notes.insert(0, "full Euler-Maruyama in the Cartesian chart of the Eguchi-Hanson factor")
    else:
        raise GeometryDomainError("method must be 'radial' or 'chart'")
    return codes, notes


def eh_bolt_hitting(m, x0, eps, T, trials, seed=0, policy=None, workers=1, level=0.99, method="radial",
                    escape_factor=50.0):
    """Hitting of the bolt sublevel set {r <= r*(eps)} with the exact radial probability."""
    policy = policy or StepPolicy()
    if m.is_flat:
        raise GeometryDomainError("bolt hitting needs the Eguchi-Hanson product")
    a = m.bolt_scale
    r_star = geometry.bolt_sublevel_for_epsilon(a, eps)
    d = geometry.distance_to(m, geometry.BoltSublevel(r_star), x0)
    if d < 3 * eps:
        raise PreconditionError(f"distance to the singular set {d:g} is below 3 eps = {3 * eps:g}")
    started = time.perf_counter()
    codes, notes = _bolt_codes(m, x0, r_star, T, trials, policy, seed, workers, escape_factor, method)
    rep = _report(codes, seed, policy, level, started, notes)
    oracle = float(_eh.bolt_oracle(x0.radius, a, r_star))
    rep.extra = {"oracle": oracle, "r_star": r_star, "distance": d, "oracle_in_ci": rep.ci[0] <= oracle <= rep.ci[1]}
    return rep


# --- two walkers ----------------------------------------------------------------------

MAX_COARSE_STEPS = 1 << 16


def sausage_intersection(m, x0, x1, eps, T, trials, policy=None, seed=0, workers=1, level=0.99,
                         escape_factor=50.0, refine=1.0):
    """Probability that the eps-sausages of two independent Brownian paths meet.

    A trial is a hit when the two paths come within 2 eps of each other at
    any pair of times. Coarse steps have length about (0.8 / kappa) times the
    distance from the midpoint of the starts; contact is decided after
    Brownian-bridge refinement to time steps eps^2 / (32 n refine).
    ``refine`` > 1 shrinks the final step for bias studies.
    """
    policy = policy or StepPolicy()
    if not m.is_flat:
        raise UnsupportedGeometryError("two-walker simulation is implemented on Euclidean space")
    n = m.dim
    if n > 8:
        raise GeometryDomainError("two-walker simulation supports n <= 8")
    if not (eps > 0 and refine > 0):
        raise GeometryDomainError("eps and refine must be positive")
    xa, xb = np.asarray(x0.array, float), np.asarray(x1.array, float)
    d = float(np.linalg.norm(xa - xb))
    if d <= 5 * eps:
        raise PreconditionError(f"start separation {d:g} must exceed 5 eps = {5 * eps:g}")
    if trials < 1:
        raise GeometryDomainError("trials must be >= 1")
    esc_r = escape_factor * d if math.isinf(T) else 0.0
    if math.isinf(T) and esc_r <= 0:
        raise PreconditionError("the T = infinity surrogate needs a positive escape factor")
    eta = 0.8 / policy.kappa
    dt_leaf = eps * eps / (2.0 * n * refine)
    started = time.perf_counter()
    args = (xa, xb, float(eps), float(T), float(esc_r), float(eta), float(policy.dt_max), float(dt_leaf),
            MAX_COARSE_STEPS)
    codes, _, _ = run_trials((_sausage.run_sausage_jit, _sausage.run_sausage_numpy), args, seed, trials,
                             workers, walkers=2)
    notes = [
        f"contact decided on linear segments after bridge refinement to dt={dt_leaf / 16:.3g}",
        f"coarse step length {eta:g} x distance from the midpoint of the starts (kappa={policy.kappa:g})",
        f"bridge pruning margin {_sausage.BRIDGE_SLACK:g} sqrt(dt)",
    ]
    if esc_r:
        notes.append(f"T=inf surrogate: both paths stop at radius {esc_r:g} about the midpoint; "
                     "contacts beyond it are not counted (a downward bias)")
    return _report(codes, seed, policy, level, started, notes, {"separation": d, "eps": eps, "refine": refine})
