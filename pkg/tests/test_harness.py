import json
import math

import numpy as np
import pytest

import frozen
import oracles
from capwalk import cli
from capwalk import geometry as g
from capwalk.errors import ConfigError, GeometryDomainError
from capwalk.harness import (
    REGISTRY,
    Report,
    Result,
    binomial_ci,
    loglog_slope,
    make_config,
    parse_config,
    run_experiment,
    schema_for,
)
from capwalk.harness import grammar

EXPERIMENTS = [
    "capacity", "constants", "hit", "sandwich-euclidean", "two-walker", "exit-tail",
    "eh-bolt", "jn-volume", "hausdorff", "green-bounds",
]


# --- binomial_ci ---------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 10, 1000])
def test_ci_zero_hits_closed_form(n):
    lo, hi = binomial_ci(0, n, 0.99)
    assert lo == 0.0
    assert hi == pytest.approx(1 - 0.005 ** (1 / n), rel=1e-12)


@pytest.mark.parametrize("n", [1, 10, 1000])
def test_ci_all_hits_mirrors_zero_hits(n):
    lo, hi = binomial_ci(n, n, 0.99)
    assert hi == 1.0
    assert lo == pytest.approx(0.005 ** (1 / n), rel=1e-12)


def test_ci_matches_bisection_oracle():
    lo, hi = binomial_ci(50, 100, 0.95)
    assert lo == pytest.approx(frozen.CP_50_100_95[0], abs=1e-9)
    assert hi == pytest.approx(frozen.CP_50_100_95[1], abs=1e-9)


@pytest.mark.parametrize("k,n", [(3, 17), (120, 400), (999, 1000)])
def test_ci_matches_bisection_oracle_elsewhere(k, n):
    expect = oracles.clopper_pearson(k, n, 0.99)
    got = binomial_ci(k, n, 0.99)
    assert got == pytest.approx(expect, abs=1e-9)


def test_ci_rejects_bad_input():
    with pytest.raises(GeometryDomainError):
        binomial_ci(5, 4)
    with pytest.raises(GeometryDomainError):
        binomial_ci(1, 4, 1.0)


# --- loglog_slope ----------------------------------------------------------------------


def test_slope_of_exact_power_law():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, se, _ = loglog_slope(x, x**2)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_slope_of_constant():
    slope, se, _ = loglog_slope([1.0, 3.0, 9.0], [5.0, 5.0, 5.0])
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_slope_needs_positive_values_and_three_points():
    with pytest.raises(GeometryDomainError):
        loglog_slope([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])
    with pytest.raises(GeometryDomainError):
        loglog_slope([1.0, 2.0], [1.0, 2.0])


def test_slope_noisy_resamples_cover_truth():
    rng = np.random.default_rng(0)
    x = np.array([0.02, 0.04, 0.08, 0.16])
    sd = 0.05
    ci = np.exp(np.log(x)[:, None] + np.array([-1, 1]) * 2.5758293035489004 * sd)
    inside = 0
    for _ in range(100):
        y = x * np.exp(sd * rng.standard_normal(x.size))
        slope, se, _ = loglog_slope(x, y, ci * (y / x)[:, None])
        inside += abs(slope - 1.0) <= 2 * se
    # 2 standard errors cover about 95 percent
    assert inside >= 88


# --- grammar ---------------------------------------------------------------------------


@pytest.mark.parametrize("text", [
    "ball:c=(4,0,0,0,0),r=1",
    "shell:c=(0,0,0),r=2.5",
    "annulus:c=(0,0,0),r_in=1,r_out=2",
    "bolt:r=1.2",
    "union:[ball:c=(4,0,0),r=1;ball:c=(-4,0,0),r=0.5]",
    "product:[bolt:r=1.5;slab:c=(0,0),w=inf]",
])
def test_set_grammar_round_trip(text):
    s = grammar.parse_set(text)
    assert grammar.serialize_set(s) == text
    assert grammar.parse_set(grammar.serialize_set(s)) == s


@pytest.mark.parametrize("text", ["euclidean:n=5", "eh-product:n=6,a=0.05"])
def test_manifold_grammar_round_trip(text):
    m = grammar.parse_manifold(text)
    assert grammar.serialize_manifold(m) == text
    assert m == (g.ManifoldSpec.euclidean(5) if m.is_flat else g.ManifoldSpec.eguchi_hanson(6, 0.05))


def test_grammar_rejects_garbage():
    for text in ("ball:c=(1,2),q=3", "sphere:r=1", "ball:c=(1,x),r=1", "union:[ball:c=(1),r=1"):
        with pytest.raises(ConfigError):
            grammar.parse_set(text)


# --- configs ---------------------------------------------------------------------------


def test_registry_has_every_subcommand():
    assert sorted(REGISTRY) == sorted(EXPERIMENTS)
    for exp in REGISTRY.values():
        assert exp.checks and exp.summary and exp.version


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_default_config_round_trip(name):
    cfg = make_config(name)
    again = parse_config(cfg.serialize())
    assert again.serialize() == cfg.serialize()
    assert again.params.keys() == schema_for(name).keys()


def test_unknown_key_names_nearest():
    with pytest.raises(ConfigError, match="trials"):
        make_config("hit", params={"trals": 10})


def test_schema_violation_is_rejected_before_running():
    with pytest.raises(ConfigError):
        make_config("hit", params={"trials": -5})
    with pytest.raises(ConfigError):
        make_config("hit", params={"bridge": "maybe"})
    with pytest.raises(ConfigError):
        make_config("sandwich-euclidean", manifold="eh-product:n=6,a=1")


def test_unknown_experiment_names_nearest():
    with pytest.raises(ConfigError, match="two-walker"):
        make_config("two-walkers")


# --- reports ---------------------------------------------------------------------------


def _small_hit(seed=0, workers=1):
    return make_config("hit", params={"trials": 2000, "seed": seed, "workers": workers})


def test_report_json_round_trip():
    rep = run_experiment(_small_hit())
    text = rep.to_json()
    back = Report.from_json(text)
    assert back.to_json() == text
    assert back.verdict == rep.verdict


def test_report_csv_has_one_row_per_result():
    rep = run_experiment(make_config("hit", params={"trials": 2000, "compare_bridge": True}))
    rows = rep.to_csv().strip().splitlines()
    assert rows[0] == "quantity,params,value,ci_lo,ci_hi,bound_lo,bound_hi,verdict"
    assert len(rows) == 1 + len(rep.results)


def test_verdict_logic():
    rep = Report("x", "1", [], {"params": {}}, {})
    assert rep.verdict == "pass"
    rep.results.append(Result("info", 1.0))
    assert rep.verdict == "pass"
    rep.results.append(Result("ok", 1.0, passed=True))
    assert rep.verdict == "pass"
    rep.results.append(Result("bad", 1.0, passed=False))
    assert rep.verdict == "fail"
    ok = Report("x", "1", [], {"params": {}}, {}, error="GeometryDomainError: boom")
    assert ok.verdict == "fail"


def test_report_payload_is_deterministic():
    a = run_experiment(_small_hit(seed=3, workers=1)).payload_json()
    b = run_experiment(_small_hit(seed=3, workers=2)).payload_json()
    assert a == b
    c = run_experiment(_small_hit(seed=4, workers=1)).payload_json()
    assert a != c


def test_geometry_error_gives_partial_report():
    cfg = make_config("sandwich-euclidean", params={"distances": "(2,0.5)", "trials": 2000, "points": 200})
    rep = run_experiment(cfg)
    assert rep.error and "GeometryDomainError" in rep.error
    assert rep.verdict == "fail"
    assert rep.results


def test_reports_echo_defaults_and_provenance():
    data = json.loads(run_experiment(make_config("constants")).to_json())
    assert "stochastics" in data["defaults"]
    assert data["provenance"]["seed"] == 0
    assert data["provenance"]["library_version"]


def test_constants_report_sharp_lambda():
    rep = run_experiment(make_config("constants"))
    lam = [r for r in rep.results if r.quantity == "Lambda"]
    assert lam and lam[0].value == 1.0
    assert rep.verdict == "pass"


# --- CLI --------------------------------------------------------------------------------


def test_cli_exit_zero_and_json(capsys):
    assert cli.main(["constants"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["verdict"] == "pass"


def test_cli_exit_one_on_failed_verdict(capsys):
    # far too few points for the capacity ladder to reach the comparison tolerance
    code = cli.main(["capacity", "--set", "shell:c=(0,0,0),r=1", "--manifold", "euclidean:n=3",
                     "--points", "6", "--levels", "1", "--expected", "1"])
    assert code == 1
    capsys.readouterr()


def test_cli_exit_two_on_config_error(capsys):
    assert cli.main(["hit", "--trals", "10"]) == 2
    err = capsys.readouterr().err
    assert "--trials" in err
    assert cli.main(["hit", "--trials", "ten"]) == 2
    capsys.readouterr()


def test_cli_csv_and_out(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert cli.main(["hit", "--trials", "500", "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().startswith("quantity,")
    assert capsys.readouterr().out == ""


def test_cli_flags_cover_shared_names(capsys):
    code = cli.main(["hit", "--trials", "500", "--seed", "9", "--kappa", "4", "--bridge", "off",
                     "--dt-max", "0.5", "--T", "inf"])
    assert code in (0, 1)
    data = json.loads(capsys.readouterr().out)
    assert data["config"]["params"]["bridge"] is False
    assert data["config"]["params"]["kappa"] == 4.0


def test_cli_list(capsys):
    assert cli.main(["list"]) == 0
    text = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert f"{name}:" in text
