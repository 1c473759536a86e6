"""Registry of named, versioned experiments.

Each experiment declares a parameter schema, the statements it checks and a
``run(cfg, out)`` function that appends ``Result`` rows to ``out``. Rows
appended before a failure survive in the partial report.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .. import capacity, defaults, geometry, kernels, stochastics
from ..errors import ConfigError, GeometryDomainError
from ..stats import loglog_slope
from ..stochastics import _eh
from . import grammar
from .config import COMMON, Param
from .report import Report, Result

INF = math.inf


@dataclass(frozen=True)
class Experiment:
    name: str
    version: str
    checks: tuple
    manifold: str
    schema: dict
    run: object
    validate: object = None
    summary: str = ""


REGISTRY = {}


def register(name, version, checks, manifold, schema, summary, validate=None):
    def wrap(fn):
        REGISTRY[name] = Experiment(name, version, tuple(checks), manifold, schema, fn, validate, summary)
        return fn

    return wrap


def get_experiment(name):
    if name not in REGISTRY:
        from .config import nearest_key

        raise ConfigError(f"unknown experiment {name!r}; did you mean {nearest_key(name, REGISTRY)!r}?")
    return REGISTRY[name]


def schema_for(name):
    return {**COMMON, **get_experiment(name).schema}


def _policy(p):
    return stochastics.StepPolicy(dt_max=p["dt_max"], kappa=p["kappa"], bridge=p["bridge"], dt_min=p["dt_min"])


def _stoch():
    return defaults.load()["stochastics"]


def _harness():
    return defaults.load()["harness"]


def _policy_params(trials):
    s = _stoch()
    return {
        "trials": Param("int", trials, "Monte Carlo trials per point", positive=True),
        "kappa": Param("float", s["kappa"], "step safety factor (>= 2)"),
        "bridge": Param("bool", True, "Brownian-bridge crossing correction on|off"),
        "dt_max": Param("float", INF, "time step ceiling", positive=True),
        "dt_min": Param("float", s["dt_min"], "time step floor"),
    }


def _ci_overlap(a, b):
    return a[0] <= b[1] and b[0] <= a[1]


def _trial_result(name, rep, params, bound=None, passed=None, note=""):
    return Result(name, rep.p_hat, list(rep.ci), bound, passed,
                  {**params, "hits": rep.hits, "trials": rep.trials, "aborted": rep.aborted}, note)


# --- constants ------------------------------------------------------------------------


@register(
    "constants",
    "1",
    ["the hitting-estimate constant equals 1 for sharp flat-space heat-kernel parameters",
     "Green-potential interval from integrated heat-kernel bounds"],
    "euclidean:n=5",
    {
        "preset": Param("str", "euclidean", "heat-kernel parameter preset", ("euclidean", "conservative")),
        "T": Param("float", INF, "time horizon", positive=True),
        "diam": Param("float", 0.0, "diameter of the target and base point"),
        "d": Param("floats", (0.5, 1.0, 2.0), "distances for the Green-potential interval", positive=True),
        "v_time": Param("float", 1000.0, "time for the noncollapsing ratio on curved manifolds", positive=True),
        "samples": Param("int", 200_000, "volume samples on curved manifolds", positive=True),
    },
    "Lambda, v and Green-potential intervals",
)
def _constants(cfg, out):
    p, m = cfg.params, cfg.manifold
    n = m.dim
    if m.is_flat:
        v = geometry.unit_ball_volume(n)
        out.append(Result("v", v, note="exact flat volume ratio"))
    else:
        bolt_point = geometry.Point(m, (m.bolt_scale, 0.0, 0.0, 0.0) + (0.0,) * m.flat_dim)
        est = kernels.noncollapse_v(m, [bolt_point], p["v_time"], p["samples"], p["seed"])
        # the lower bracket end keeps Lambda on the conservative side
        v = est.ci_low
        out.append(Result("v", v, [est.ci_low, est.ci_high], params={"point": "bolt", "T": p["v_time"]},
                          note="lower end of the volume bracket"))
    if p["preset"] == "euclidean":
        if not m.is_flat:
            raise GeometryDomainError("the euclidean preset is valid only on flat space")
        params = kernels.euclidean_params(n, p["T"], p["diam"])
    else:
        params = kernels.conservative_params(n, v, p["T"], p["diam"])
    lam = kernels.lambda_constant(params)
    sharp = p["preset"] == "euclidean" and math.isinf(p["T"])
    out.append(Result("Lambda", lam, bound=[1.0, 1.0] if sharp else None, passed=(lam == 1.0) if sharp else None,
                      params={"gamma": params.gamma, "C_gamma": params.C_gamma, "v": params.v}))
    for d in p["d"]:
        lo, hi = kernels.green_potential_bounds(params, d)
        row = Result("green_potential", [lo, hi], bound=[lo, hi], passed=lo <= hi, params={"d": d})
        if sharp:
            exact = math.gamma(n / 2 - 1) / (4 * math.pi ** (n / 2)) * d ** (2 - n)
            row.passed = lo <= hi and abs(lo - exact) <= 1e-12 * exact and abs(hi - exact) <= 1e-12 * exact
            row.note = f"classical Green function {exact!r}"
        out.append(row)


# --- capacity -------------------------------------------------------------------------


@register(
    "capacity",
    "1",
    ["equilibrium-measure capacity with a certified duality gap",
     "Martin capacity inside the Newtonian comparison interval",
     "Newtonian capacity of a ball below the single-cover bound"],
    "euclidean:n=3",
    {
        "set": Param("set", geometry.SphereShell((0.0, 0.0, 0.0), 1.0), "target set"),
        "x0": Param("point", None, "base point for the Martin kernel"),
        "kernel": Param("str", "newtonian", "kernel", ("newtonian", "martin")),
        "points": Param("int", 500, "points on the coarsest level", positive=True),
        "levels": Param("int", 2, "levels; level i uses points * 2^i", positive=True),
        "tol": Param("float", 1e-6, "relative duality-gap tolerance", positive=True),
        "expected": Param("float?", None, "known capacity to compare against"),
    },
    "capacity of a set on a refinement ladder",
)
def _capacity(cfg, out):
    p, m = cfg.params, cfg.manifold
    ladder = [p["points"] * 2**i for i in range(p["levels"])]
    x0 = None if p["x0"] is None else geometry.Point(m, p["x0"])
    res = capacity.capacity_of_set(m, p["set"], x0, p["kernel"], ladder, p["tol"])
    for lvl in res.diagnostics["levels"]:
        out.append(Result("capacity_level", lvl["capacity"], params={"points": lvl["points"]}))
    out.append(Result("capacity", res.capacity, passed=res.converged,
                      params={"kernel": p["kernel"], "points": ladder[-1], "iterations": res.iterations,
                              "relative_gap": res.relative_gap},
                      note="passes when the duality gap certificate holds"))
    out.append(Result("capacity_extrapolated", res.diagnostics["richardson"]))
    if p["expected"] is not None:
        tol = _harness()["capacity_rel_tol"]
        exp = p["expected"]
        out.append(Result("capacity_vs_expected", res.capacity, bound=[exp * (1 - tol), exp * (1 + tol)],
                          passed=abs(res.capacity - exp) <= tol * exp))
    n = m.dim
    if p["kernel"] == "martin" and m.is_flat:
        newton = capacity.capacity_of_set(m, p["set"], None, "newtonian", ladder[-1:], p["tol"])
        dmin, dmax = capacity.distance_range(m, p["set"], x0)
        lo, hi = capacity.martin_newtonian_sandwich(newton.capacity, dmin, dmax, n)
        slack = 2 * p["tol"] * hi
        out.append(Result("martin_in_newtonian_interval", res.capacity, bound=[lo, hi],
                          passed=lo - slack <= res.capacity <= hi + slack,
                          params={"newtonian": newton.capacity, "dmin": dmin, "dmax": dmax}))
    if p["kernel"] == "newtonian" and isinstance(p["set"], geometry.Ball):
        ub = capacity.ball_capacity_upper(p["set"].radius, n)
        out.append(Result("ball_single_cover_bound", res.capacity, bound=[0.0, ub], passed=res.capacity <= ub))


# --- single-walker hitting --------------------------------------------------------------


def _hit_validate(cfg):
    s = cfg.params["set"]
    if cfg.manifold.is_flat and isinstance(s, (geometry.BoltSublevel, geometry.Product)):
        raise ConfigError("bolt and product sets need an eh-product manifold")


@register(
    "hit",
    "1",
    ["Monte Carlo hitting probability against the harmonic oracle where one exists",
     "disabling the bridge correction can only lower the estimate"],
    "euclidean:n=5",
    {
        "set": Param("set", geometry.Ball((2.0, 0.0, 0.0, 0.0, 0.0), 1.0), "target set"),
        "x0": Param("point", None, "start point (default: origin, or r=5a on the Eguchi-Hanson factor)"),
        "T": Param("float", INF, "time horizon", positive=True),
        **_policy_params(100_000),
        "escape_factor": Param("float", _stoch()["escape_factor"], "escape radius over target distance",
                               positive=True),
        "compare_bridge": Param("bool", False, "also run with the bridge correction off"),
    },
    "hitting probability of a set",
    _hit_validate,
)
def _hit(cfg, out):
    p, m = cfg.params, cfg.manifold
    if p["x0"] is not None:
        x0 = geometry.Point(m, p["x0"])
    elif m.is_flat:
        x0 = geometry.Point(m, (0.0,) * m.dim)
    else:
        x0 = geometry.Point(m, (5 * m.bolt_scale, 0.0, 0.0, 0.0) + (0.0,) * m.flat_dim)
    policy = _policy(p)
    rep = stochastics.hitting_probability_mc(m, x0, p["set"], p["T"], p["trials"], policy, p["seed"],
                                             p["workers"], escape_factor=p["escape_factor"])
    oracle = _hit_oracle(m, x0, p["set"], p["T"])
    passed = None if oracle is None else rep.ci[0] <= oracle <= rep.ci[1]
    row = _trial_result("p_hat", rep, {"bridge": policy.bridge}, passed=passed, note="; ".join(rep.bias_notes))
    if oracle is not None:
        row.bound = [oracle, oracle]
    out.append(row)
    if rep.flagged:
        out.append(Result("aborted_fraction", rep.aborted / rep.trials, passed=False))
    if p["compare_bridge"]:
        off = stochastics.StepPolicy(policy.dt_max, policy.kappa, not policy.bridge, policy.dt_min)
        rep2 = stochastics.hitting_probability_mc(m, x0, p["set"], p["T"], p["trials"], off, p["seed"],
                                                  p["workers"], escape_factor=p["escape_factor"])
        on_rep, off_rep = (rep, rep2) if policy.bridge else (rep2, rep)
        out.append(_trial_result("p_hat_bridge_off", off_rep, {"bridge": False},
                                 passed=off_rep.p_hat <= on_rep.p_hat,
                                 note="same random numbers as the bridge-on run"))


def _hit_oracle(m, x0, s, T):
    if not math.isinf(T):
        return None
    if m.is_flat and isinstance(s, (geometry.Ball, geometry.SphereShell)):
        d = float(np.linalg.norm(x0.array - np.asarray(s.center, float)))
        if d > s.radius:
            return (s.radius / d) ** (m.dim - 2)
        return 1.0 if isinstance(s, geometry.SphereShell) else None
    if not m.is_flat:
        r_star = stochastics.api._is_bolt_target(s)
        if r_star is not None:
            return float(_eh.bolt_oracle(x0.radius, m.bolt_scale, max(r_star, m.bolt_scale)))
    return None


# --- sandwich on R^n ----------------------------------------------------------------------


def _flat_only(cfg):
    if not cfg.manifold.is_flat:
        raise ConfigError(f"{cfg.name} runs on a euclidean manifold")


@register(
    "sandwich-euclidean",
    "1",
    ["hitting probability of a ball lies within [Cap_K / 2 Lambda, Lambda Cap_K]",
     "hitting probability of a ball equals (r/d)^(n-2)"],
    "euclidean:n=5",
    {
        "radius": Param("float", 1.0, "ball radius", positive=True),
        "distances": Param("floats", (2.0, 4.0, 8.0), "distances from the start to the ball centre",
                           positive=True),
        "points": Param("int", 2000, "discretization points for the Martin capacity", positive=True),
        **_policy_params(1_000_000),
    },
    "two-sided capacity estimate for the hitting probability of balls",
    _flat_only,
)
def _sandwich(cfg, out):
    p, m = cfg.params, cfg.manifold
    n = m.dim
    x0 = geometry.Point(m, (0.0,) * n)
    lam = kernels.lambda_constant(kernels.euclidean_params(n))
    policy = _policy(p)
    for d in p["distances"]:
        if d <= p["radius"]:
            raise GeometryDomainError("the start must lie outside the ball")
        ball = geometry.Ball((d,) + (0.0,) * (n - 1), p["radius"])
        cap = capacity.capacity_of_set(m, ball, x0, "martin", [p["points"]]).capacity
        rep = stochastics.hitting_probability_mc(m, x0, ball, INF, p["trials"], policy, p["seed"], p["workers"])
        lo, hi = cap / (2 * lam), lam * cap
        out.append(_trial_result("p_hat_in_capacity_interval", rep, {"d": d, "cap_K": cap, "Lambda": lam},
                                 bound=[lo, hi], passed=_ci_overlap(rep.ci, (lo, hi))))
        oracle = (p["radius"] / d) ** (n - 2)
        out.append(_trial_result("p_hat_vs_harmonic_oracle", rep, {"d": d}, bound=[oracle, oracle],
                                 passed=rep.ci[0] <= oracle <= rep.ci[1]))


# --- two walkers ----------------------------------------------------------------------------


def _two_walker_validate(cfg):
    _flat_only(cfg)
    p = cfg.params
    if p["separation"] <= 5 * max(p["eps"]):
        raise ConfigError("separation must exceed 5 eps for every eps")
    if p["ratio_separation"] <= 5 * p["ratio_eps"] or p["separation"] <= 5 * p["ratio_eps"]:
        raise ConfigError("both ratio separations must exceed 5 ratio_eps")


@register(
    "two-walker",
    "1",
    ["sausage intersection probability scales like eps^(n-4)",
     "sausage intersection probability scales like d^-(n-4) in the separation",
     "refinement bias: halving the contact time step leaves the estimate within its interval"],
    "euclidean:n=5",
    {
        "eps": Param("floats", (0.02, 0.04, 0.08, 0.16), "sausage radii", positive=True),
        "separation": Param("float", 1.0, "distance between the two starts", positive=True),
        "ratio_eps": Param("float", 0.08, "eps for the separation-doubling ratio", positive=True),
        "ratio_separation": Param("float", 2.0, "doubled separation", positive=True),
        "T": Param("float", INF, "time horizon", positive=True),
        "refine_check": Param("bool", True, "rerun the largest eps with half the contact time step"),
        **_policy_params(100_000),
    },
    "Wiener sausage intersection of two independent walkers",
    _two_walker_validate,
)
def _two_walker(cfg, out):
    p, m = cfg.params, cfg.manifold
    n = m.dim
    h = _harness()
    policy = _policy(p)
    origin = geometry.Point(m, (0.0,) * n)

    def run(eps, sep, refine=1.0):
        other = geometry.Point(m, (sep,) + (0.0,) * (n - 1))
        return stochastics.sausage_intersection(m, origin, other, eps, p["T"], p["trials"], policy, p["seed"],
                                                p["workers"], refine=refine)

    reps = {}
    for eps in p["eps"]:
        reps[eps] = run(eps, p["separation"])
        out.append(_trial_result("p_hat", reps[eps], {"eps": eps, "separation": p["separation"]}))
    ps = [reps[e].p_hat for e in p["eps"]]
    target = n - 4
    if min(ps) > 0 and len(ps) >= 3:
        slope, se, _ = loglog_slope(list(p["eps"]), ps, [reps[e].ci for e in p["eps"]])
        tol = h["two_walker_slope_tol"]
        out.append(Result("eps_slope", slope, [slope - 2 * se, slope + 2 * se], [target - tol, target + tol],
                          abs(slope - target) <= tol, {"se": se}))
    else:
        out.append(Result("eps_slope", None, passed=False, note="a point has no hits or fewer than 3 points"))
    near = reps.get(p["ratio_eps"]) or run(p["ratio_eps"], p["separation"])
    far = run(p["ratio_eps"], p["ratio_separation"])
    out.append(_trial_result("p_hat", far, {"eps": p["ratio_eps"], "separation": p["ratio_separation"]}))
    expected = (p["separation"] / p["ratio_separation"]) ** target
    factor = h["two_walker_ratio_factor"]
    ratio = far.p_hat / near.p_hat if near.p_hat > 0 else INF
    out.append(Result("separation_ratio", ratio, [far.ci[0] / near.ci[1], far.ci[1] / max(near.ci[0], 1e-300)],
                      [expected / factor, expected * factor], expected / factor <= ratio <= expected * factor,
                      {"eps": p["ratio_eps"]}))
    if p["refine_check"]:
        eps = max(p["eps"])
        fine = run(eps, p["separation"], refine=2.0)
        out.append(_trial_result("p_hat_half_contact_step", fine, {"eps": eps, "refine": 2.0},
                                 bound=list(reps[eps].ci), passed=_ci_overlap(fine.ci, reps[eps].ci),
                                 note="passes when the interval overlaps the default-step interval"))


# --- exit times -------------------------------------------------------------------------------


def _exit_validate(cfg):
    p, n = cfg.params, cfg.manifold.dim
    for delta in p["deltas"]:
        if delta > p["radius"] ** 2 / (2 * n):
            raise ConfigError(f"delta={delta} exceeds radius^2/(2n)={p['radius'] ** 2 / (2 * n):g}")


@register(
    "exit-tail",
    "1",
    ["short-time exit probability from a ball is at most exp(-r^2 / 100 delta)"],
    "euclidean:n=5",
    {
        "radius": Param("float", 1.0, "ball radius", positive=True),
        "deltas": Param("floats", (0.005, 0.002), "time limits", positive=True),
        "x0": Param("point", None, "ball centre (default: origin, or r=20a on the Eguchi-Hanson factor)"),
        **_policy_params(1_000_000),
    },
    "exit-time tail of a ball against its Gaussian bound",
    _exit_validate,
)
def _exit_tail(cfg, out):
    p, m = cfg.params, cfg.manifold
    if p["x0"] is not None:
        x0 = geometry.Point(m, p["x0"])
    elif m.is_flat:
        x0 = geometry.Point(m, (0.0,) * m.dim)
    else:
        x0 = geometry.Point(m, (20 * m.bolt_scale, 1.0, 0.0, 0.0) + (0.0,) * m.flat_dim)
    policy = _policy(p)
    for delta in p["deltas"]:
        rep = stochastics.exit_time_tail(m, x0, p["radius"], delta, p["trials"], policy, p["seed"], p["workers"])
        bound = rep.extra["bound"]
        out.append(_trial_result("exit_probability", rep, {"delta": delta, "r": p["radius"]}, bound=[0.0, bound],
                                 passed=rep.ci[1] <= bound))


# --- Eguchi-Hanson bolt -------------------------------------------------------------------------


def _eh_only(cfg):
    if cfg.manifold.is_flat:
        raise ConfigError(f"{cfg.name} runs on an eh-product manifold")


@register(
    "eh-bolt",
    "1",
    ["bolt hitting probability matches the radial harmonic function",
     "bolt hitting probability decays like eps^2/d^2",
     "radial reduction agrees with the full chart simulation"],
    "eh-product:n=4,a=1",
    {
        "eps": Param("float", 1.0, "singular-set scale (0 < eps <= 1)", positive=True),
        "r0": Param("floats", (5.0, 10.0, 20.0), "start radii", positive=True),
        "T": Param("float", INF, "time horizon", positive=True),
        "chart_check": Param("bool", True, "compare radial and chart simulations"),
        "chart_r0": Param("float", 5.0, "start radius for the chart comparison", positive=True),
        "chart_trials": Param("int", 20_000, "trials for the chart comparison", positive=True),
        **_policy_params(1_000_000),
    },
    "hitting of the Eguchi-Hanson bolt",
    _eh_only,
)
def _eh_bolt(cfg, out):
    p, m = cfg.params, cfg.manifold
    a = m.bolt_scale
    policy = _policy(p)
    tail = (0.0,) * m.flat_dim

    def start(r0):
        return geometry.Point(m, (r0, 1.0, 0.0, 0.0) + tail)

    reps = []
    for r0 in p["r0"]:
        rep = stochastics.eh_bolt_hitting(m, start(r0), p["eps"], p["T"], p["trials"], p["seed"], policy,
                                          p["workers"])
        reps.append(rep)
        oracle = rep.extra["oracle"]
        passed = rep.ci[0] <= oracle <= rep.ci[1] if math.isinf(p["T"]) else None
        out.append(_trial_result("p_hat_vs_oracle", rep, {"r0": r0, "distance": rep.extra["distance"]},
                                 bound=[oracle, oracle], passed=passed))
    tol = _harness()["bolt_slope_tol"]
    r0s = list(p["r0"])
    if len(r0s) >= 3:
        oracles = [rep.extra["oracle"] for rep in reps]
        slope, _, _ = loglog_slope(r0s, oracles)
        out.append(Result("oracle_slope_in_r0", slope, bound=[-2 - tol, -2 + tol], passed=abs(slope + 2) <= tol))
        if min(rep.p_hat for rep in reps) > 0:
            mc, se, _ = loglog_slope(r0s, [rep.p_hat for rep in reps], [rep.ci for rep in reps])
            out.append(Result("mc_slope_in_r0", mc, [mc - 2 * se, mc + 2 * se], [-2 - tol, -2 + tol],
                              abs(mc + 2) <= tol, {"se": se}))
        dists = [rep.extra["distance"] for rep in reps]
        shape = [capacity.dyadic_singular_set_bound(p["eps"], d, m.dim) for d in dists]
        s_shape, _, _ = loglog_slope(dists, shape)
        out.append(Result("dyadic_bound_slope_in_d", s_shape, note="shape of the dyadic capacity bound"))
    if p["chart_check"]:
        x0 = start(p["chart_r0"])
        radial = stochastics.eh_bolt_hitting(m, x0, p["eps"], p["T"], p["chart_trials"], p["seed"], policy,
                                             p["workers"], method="radial")
        chart = stochastics.eh_bolt_hitting(m, x0, p["eps"], p["T"], p["chart_trials"], p["seed"], policy,
                                            p["workers"], method="chart")
        out.append(_trial_result("chart_vs_radial", chart, {"r0": p["chart_r0"], "radial_p_hat": radial.p_hat},
                                 bound=list(radial.ci), passed=_ci_overlap(chart.ci, radial.ci)))
    out.append(Result("bolt_radius", geometry.bolt_sublevel_for_epsilon(a, p["eps"]), params={"eps": p["eps"]}))


# --- Jiang-Naber volume --------------------------------------------------------------------------


@register(
    "jn-volume",
    "1",
    ["volume of the 2 eps neighbourhood of the singular set is at most C eps^4 r^(n-4)"],
    "eh-product:n=6,a=0.05",
    {
        "eps_factors": Param("floats", (1.0, 2.0), "eps in units of the bolt scale", positive=True),
        "r_factors": Param("floats", (10.0, 20.0, 40.0), "ball radii in units of the bolt scale", positive=True),
        "samples": Param("int", 400_000, "Monte Carlo samples per volume", positive=True),
    },
    "tube volume around the Eguchi-Hanson bolt",
    _eh_only,
)
def _jn(cfg, out):
    p, m = cfg.params, cfg.manifold
    a = m.bolt_scale
    radii = [f * a for f in p["r_factors"]]
    # Bonferroni: the whole grid holds at the 99% level
    level = 1.0 - 0.01 / (len(radii) * len(p["eps_factors"]))
    lows, highs = [], []
    for i, f in enumerate(p["eps_factors"]):
        eps = f * a
        rows = capacity.jiang_naber_volume_check(m, eps, radii, p["samples"], p["seed"] + 1000 * i, level)
        for row in rows:
            agree = row["volume_ci"][0] <= row["volume_quadrature"] <= row["volume_ci"][1]
            out.append(Result("normalized_volume", row["ratio"], row["ratio_ci"], passed=agree,
                              params={"eps": eps, "r": row["r"], "volume": row["volume"],
                                      "volume_quadrature": row["volume_quadrature"], "level": level},
                              note="passes when the quadrature value lies in the Monte Carlo interval"))
            lows.append(row["ratio_ci"][0])
            highs.append(row["ratio_ci"][1])
        for lo_row, hi_row in zip(rows, rows[1:]):
            dbl = hi_row["volume_quadrature"] / lo_row["volume_quadrature"]
            out.append(Result("r_doubling_volume_ratio", dbl, params={"eps": eps, "r": lo_row["r"],
                                                                      "flat_factor_ratio": 2.0 ** (m.dim - 4)}))
    limit = _harness()["jn_spread_limit"]
    spread = max(highs) / min(lows)
    out.append(Result("ratio_spread", spread, bound=[1.0, limit], passed=spread <= limit,
                      note="largest upper interval end over smallest lower end"))


# --- Hausdorff content -------------------------------------------------------------------------------


@register(
    "hausdorff",
    "1",
    ["energy lower bound for Hausdorff content reproduces the uniform-segment value",
     "energy lower bound never exceeds an explicit cover"],
    "euclidean:n=3",
    {
        "points": Param("int", 1000, "atoms on the unit segment", positive=True),
        "alpha": Param("float", 0.5, "content exponent", positive=True),
        "eps": Param("float", 1.0, "cover scale", positive=True),
    },
    "energy lower bound for Hausdorff content",
)
def _hausdorff(cfg, out):
    p = cfg.params
    tol = _harness()["hausdorff_rel_tol"]
    N, alpha, eps = p["points"], p["alpha"], p["eps"]
    seg = capacity.segment_points(N)
    mu = capacity.PatchMeasure.uniform(seg, np.full(N, 0.5 / N), patch_dim=1)
    bound, denom = capacity.hausdorff_energy_lower_bound(mu, alpha, eps)
    if alpha == 0.5 and eps >= 1.0:
        out.append(Result("segment_energy", denom, bound=[8 / 3 * (1 - tol), 8 / 3 * (1 + tol)],
                          passed=abs(denom - 8 / 3) <= tol * 8 / 3))
        out.append(Result("segment_bound", bound, bound=[3 / 8 * (1 - tol), 3 / 8 * (1 + tol)],
                          passed=abs(bound - 3 / 8) <= tol * 3 / 8))
    else:
        out.append(Result("segment_bound", bound, params={"energy": denom}))
    m3 = geometry.ManifoldSpec.euclidean(3)
    tests = {
        "segment": mu,
        "sphere": capacity.PatchMeasure.uniform(capacity.sphere_points(3, 400), patch_dim=2),
        "two_balls": capacity.discretize(m3, geometry.FiniteUnion((geometry.Ball((0.0, 0.0, 0.0), 0.5),
                                                                   geometry.Ball((3.0, 0.0, 0.0), 0.5))), 400),
    }
    for name, meas in tests.items():
        for scale in (0.5 * eps, eps):
            if np.any(2 * meas.patch_radii > scale):
                continue
            b, _ = capacity.hausdorff_energy_lower_bound(meas, alpha, scale)
            cover = capacity.greedy_cover_value(meas, alpha, scale)
            out.append(Result("bound_below_cover", b, bound=[0.0, cover], passed=b <= cover,
                              params={"set": name, "eps": scale}))


# --- heat-kernel and Green bounds ----------------------------------------------------------------------


@register(
    "green-bounds",
    "1",
    ["flat heat kernel between the Cheeger-Yau and Li-Yau bounds",
     "Green potential interval equals the classical Green function on flat space",
     "negative-curvature heat-kernel bounds are ordered under the calibrated constant"],
    "euclidean:n=5",
    {
        "hyperbolic_n": Param("int", 3, "odd dimension for the hyperbolic check", positive=True),
        "d": Param("floats", (0.5, 1.0, 2.0), "distances for the Green interval", positive=True),
    },
    "heat-kernel and Green-potential bounds",
    _flat_only,
)
def _green(cfg, out):
    p, n = cfg.params, cfg.manifold.dim
    ts, ds = kernels._default_grid()
    t, d = np.meshgrid(ts, ds, indexing="ij")
    flat = kernels.heat_kernel_flat(n, t, d)
    lower = kernels.cheeger_yau_lower(n, t, d)
    params = kernels.euclidean_params(n)
    upper = kernels.li_yau_upper(params, geometry.unit_ball_volume(n) * t ** (n / 2), t, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = float(np.max(np.where(flat > 0, np.abs(lower - flat) / flat, np.abs(lower - flat))))
    out.append(Result("lower_bound_relative_error", err, bound=[0.0, 1e-12], passed=err <= 1e-12))
    ok = bool(np.all(lower <= flat * (1 + 1e-12)) and np.all(flat <= upper * (1 + 1e-12)))
    out.append(Result("flat_kernel_sandwiched", ok, passed=ok, params={"grid": list(t.shape)}))
    cons = kernels.conservative_params(n)
    cons_upper = kernels.li_yau_upper(cons, geometry.unit_ball_volume(n) * t ** (n / 2), t, d)
    ok = bool(np.all(flat <= cons_upper))
    out.append(Result("flat_kernel_below_conservative_upper", ok, passed=ok, params={"C_gamma": cons.C_gamma}))
    for dist in p["d"]:
        lo, hi = kernels.green_potential_bounds(params, dist)
        exact = math.gamma(n / 2 - 1) / (4 * math.pi ** (n / 2)) * dist ** (2 - n)
        out.append(Result("green_interval", [lo, hi], bound=[exact, exact],
                          passed=abs(lo - exact) <= 1e-12 * exact and abs(hi - exact) <= 1e-12 * exact,
                          params={"d": dist}))
        lo, hi = kernels.green_potential_bounds(cons, dist)
        out.append(Result("green_interval_conservative", [lo, hi], passed=lo <= hi, params={"d": dist}))
    hn = p["hyperbolic_n"]
    C = kernels.calibrate_hyperbolic_constant(hn)
    exact = kernels.hyperbolic_heat_kernel(hn, t, d)
    vols = np.array([kernels.hyperbolic_ball_volume(hn, math.sqrt(tt)) for tt in ts])[:, None]
    lo, hi = kernels.hyperbolic_bounds(hn, t, d, vols, vols, C)
    ok = bool(np.all(lo <= hi))
    out.append(Result("hyperbolic_lower_below_upper", ok, passed=ok, params={"n": hn, "C_n": C}))
    ok = bool(np.all(lo <= exact * (1 + 1e-9)) and np.all(exact <= hi * (1 + 1e-9)))
    out.append(Result("hyperbolic_exact_kernel_bracketed", ok, passed=ok, params={"n": hn, "C_n": C}))
    hyp = defaults.load()["kernels"]["hyperbolic"]
    grid = (ts, ds[ds <= hyp["simplified_d_max"]])
    Cs = kernels.calibrate_simplified_constant(hn, hyp["simplified_T"], grid)
    out.append(Result("hyperbolic_simplified_constant", Cs, params={"n": hn, "T": hyp["simplified_T"],
                                                                    "d_max": hyp["simplified_d_max"]}))


# --- driver ------------------------------------------------------------------------------------------------


def run_experiment(cfg):
    """Run a validated config. Geometry errors mid-run give a partial, failing report."""
    exp = get_experiment(cfg.name)
    report = Report(
        experiment=exp.name,
        version=exp.version,
        checks=list(exp.checks),
        config=cfg.to_dict(),
        defaults=defaults.load(),
        seed=cfg.params["seed"],
    )
    started = time.perf_counter()
    try:
        exp.run(cfg, report.results)
    except (GeometryDomainError, NotImplementedError) as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    report.wall_time = time.perf_counter() - started
    return report


def describe():
    """(name, summary, checks) for every registered experiment."""
    return [(e.name, e.summary, e.checks) for e in REGISTRY.values()]


def manifold_text(cfg):
    return grammar.serialize_manifold(cfg.manifold)
