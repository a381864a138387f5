"""Acceptance suite: ten desk-scale criteria, one test and verdict line each.

 1. identity residuals on the damped 1D benchmark, with dt-halving ratios
 2. second-difference check of the gauged variance on the same benchmark
 3. chirped-Gaussian collapse detected before the lifespan bound
 4. spike-train damping moments and divergent partial sums
 5. running-average estimates for monotone damping families
 6. quadratic-negativity decision against the brute-force oracle
 7. long sub-critical run completes with finite gradients
 8. variance inequality and localized second-difference estimate
 9. free-propagator norm integral shrinks with the damping envelope
10. empirical blow-up/global threshold bracket by bisection

Each test prints "[PASS] criterion N: ..." (visible with -s) and carries the
same verdict in its name for plain -v output.
"""

import math

import numpy as np
import pytest

import nlslab as nl
from nlslab import criteria as crit
from nlslab import damping as dmp
from nlslab import experiments as xp
from oracles import (brute_force_quadratic, gaussian_moments,
                     sample_quadratic_triples)


def report(num, label, failures):
    status = "PASS" if not failures else "FAIL"
    print(f"[{status}] criterion {num}: {label}")
    assert not failures, f"criterion {num}: {label}: " + "; ".join(failures)


def check(failures, ok, message):
    if not ok:
        failures.append(message)


# ---------------------------------------------------------------------------
# shared desk-scale runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def benchmark():
    """Damped 1D cubic benchmark: a = 0.5, L = 16, n = 512, dt = 1e-3."""
    grid = nl.Grid(1, 16.0, 512)
    u0 = xp.gaussian_data(grid, amplitude=1.2, width=1.0, chirp=0.3)
    spec = nl.ProblemSpec(grid=grid, p=3.0, mu=-1, damping=dmp.constant(0.5),
                          initial=u0, dt_max=1e-3, t_end=1.0, frames=201)
    return xp.verify_identities(spec)


@pytest.fixture(scope="module")
def collapse():
    """2D quartic chirped Gaussian with E < 0, V < 0 on the 256^2 grid,
    run at 0, 1/4 and 1/2 of the damping threshold with the radius-8
    localized virial attached to every frame."""
    grid = nl.Grid(2, 8.0, 256)
    return xp.blow0_scenario(grid, 4.0, 3.0, 0.5, fractions=(0.0, 0.25, 0.5),
                             above_factor=None, cutoff_radii=(8.0,))


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_identity_residuals_on_benchmark(benchmark):
    failures = []
    res = benchmark.residuals
    check(failures, benchmark.classification == "completed",
          f"run classified {benchmark.classification}")
    check(failures, res["mass"] <= 1e-10,
          f"mass residual {res['mass']:.3e} > 1e-10")
    for name in ("energy_rate", "variance_rate", "virial_rate",
                 "hamiltonian_rate"):
        check(failures, res[name] <= 1e-3,
              f"{name} residual {res[name]:.3e} > 1e-3")
    for name in ("energy_rate", "variance_rate", "virial_rate"):
        ratio = benchmark.convergence[name]
        check(failures, ratio >= 3.0,
              f"{name} halving ratio {ratio:.2f} < 3")
    report(1, "balance-law residuals on the damped benchmark", failures)


def test_criterion_02_variance_second_difference(benchmark):
    failures = []
    res = benchmark.residuals["variance_second"]
    check(failures, res <= 5e-3,
          f"second-difference residual {res:.3e} > 5e-3")
    report(2, "gauged-variance second difference matches its right side",
           failures)


def test_criterion_03_collapse_before_lifespan_bound(collapse):
    failures = []
    want = gaussian_moments(2, 4.0, 3.0, 1.0, 0.5)
    for name, got in (("energy", collapse.energy0),
                      ("virial", collapse.virial0),
                      ("variance", collapse.variance0)):
        check(failures, got == pytest.approx(want[name], rel=1e-9),
              f"initial {name} {got} != {want[name]}")
    check(failures, collapse.a_star == pytest.approx(2.0 / 3.0, rel=1e-9),
          f"a_star {collapse.a_star} != 2/3")
    for entry in collapse.entries:
        check(failures, entry["classification"] == "blowup-detected",
              f"a={entry['a_value']:.4f} classified "
              f"{entry['classification']}")
        check(failures,
              entry["t_detect"] is not None
              and entry["t_detect"] <= entry["lifespan_bound"],
              f"a={entry['a_value']:.4f} detected at {entry['t_detect']} "
              f"after bound {entry['lifespan_bound']}")
    report(3, "blow-up detected before the lifespan bound at 0, a*/4, a*/2",
           failures)


def test_criterion_04_spike_train_moments_and_divergence():
    failures = []
    for alpha in (0.5, 1.0, 2.0):
        for n in range(1, 11):
            for q in (1, 2, 3):
                want = 2.0 ** (2 * q - 1) / (q + 1) * n ** (q - alpha - 1)
                got = dmp.spike_moment(alpha, n, q)
                check(failures, got == pytest.approx(want, rel=1e-12),
                      f"moment(alpha={alpha}, n={n}, q={q}) {got} != {want}")
    partial = sum(dmp.spike_moment(1.0, n, 1) for n in range(1, 1001))
    check(failures, partial >= 0.9 * math.log(1000.0),
          f"partial sum {partial:.3f} < 0.9 ln 1000")
    abar = dmp.sup_average(dmp.CumulativeDamping(dmp.appendix_spike(1.0)),
                           1000.0)
    check(failures, abar.value <= 1.0 + 1e-9,
          f"running-average estimate {abar.value:.4f} > 1")
    report(4, "spike moments match the closed form; L1 sums diverge while "
              "the average stays bounded", failures)


def test_criterion_05_monotone_damping_averages():
    failures = []
    sat = dmp.CumulativeDamping(dmp.saturating(1.0))
    values = [dmp.sup_average(sat, h).value for h in (10.0, 100.0, 1000.0)]
    check(failures, values[0] < values[1] < values[2],
          f"estimates not increasing: {values}")
    for value, horizon in zip(values, (10.0, 100.0, 1000.0)):
        check(failures, abs(value - 1.0) <= 2.0 / horizon,
              f"estimate {value} misses 1 by more than 2/{horizon:g}")
    poly = dmp.CumulativeDamping(dmp.polynomial_decay(1.0))
    refined = [dmp.sup_average(poly, 10.0, pts).value
               for pts in (512, 2048, 8192)]
    check(failures, all(b >= a - 1e-15 for a, b in zip(refined, refined[1:])),
          f"refinement not monotone: {refined}")
    check(failures, abs(refined[-1] - 1.0) <= 1e-3,
          f"refined estimate {refined[-1]} not within 1e-3 of a(0)=1")
    report(5, "sup-average estimates for saturating and decaying damping",
           failures)


def test_criterion_06_quadratic_negativity_matches_oracle():
    failures = []
    disagreements = []
    for a, b, c in sample_quadratic_triples(10000, seed=12345):
        analytic = crit.quadratic_negativity(a, b, c)[0]
        sampled = brute_force_quadratic(a, b, c)
        if analytic != sampled:
            disagreements.append((a, b, c, analytic, sampled))
    check(failures, not disagreements,
          f"{len(disagreements)} disagreements, first: "
          f"{disagreements[:1]}")
    report(6, "analytic negativity decision agrees with the sampling oracle "
              "on 10^4 seeded triples", failures)


def test_criterion_07_subcritical_long_run_completes():
    failures = []
    grid = nl.Grid(2, 16.0, 256)
    u0 = xp.gaussian_data(grid, amplitude=5.0, width=1.0)
    spec = nl.ProblemSpec(grid=grid, p=2.0, mu=-1,
                          damping=dmp.polynomial_decay(2.0), initial=u0,
                          dt_max=2e-3, t_end=10.0, frames=201)
    try:
        monitor = xp.subcritical_monitor(spec)
    except nl.NlslabError as err:
        report(7, "sub-critical run to t=10", [f"run failed: {err}"])
        return
    check(failures, monitor.classification == "completed",
          f"classified {monitor.classification}")
    check(failures, bool(np.all(np.isfinite(monitor.grad_history))),
          "non-finite gradient norm along the run")
    report(7, "amplitude-5 sub-critical run completes to t=10 with finite "
              "gradients", failures)


def test_criterion_08_variance_and_localized_inequalities(collapse):
    failures = []
    for entry, record in zip(collapse.entries, collapse.records):
        cd = dmp.CumulativeDamping(dmp.constant(entry["a_value"]))
        terms = crit.variance_inequality_terms(record, cd, 4.0)
        slack = 1e-6 * terms["variance"][0]
        check(failures, bool(np.all(terms["variance"] >= 0.0)),
              f"a={entry['a_value']:.4f}: negative variance")
        worst = float(np.max(terms["variance"] - terms["rhs"]))
        check(failures, worst <= slack,
              f"a={entry['a_value']:.4f}: variance exceeds its bound "
              f"by {worst:.3e} > {slack:.3e}")
        margins = xp.localized_estimate_margins(
            record, record.extras["loc_virial_R8"], cd, 4.0, 2,
            collapse.energy0, drop_last=2)["margins"]
        check(failures, float(np.max(margins)) <= 5e-2,
              f"a={entry['a_value']:.4f}: localized margin "
              f"{np.max(margins):.3e} > 5e-2")
    report(8, "variance inequality and radius-8 localized estimate hold "
              "frame-wise", failures)


def test_criterion_09_free_norm_tracks_damping_envelope():
    failures = []
    grid = nl.Grid(3, 16.0, 64)
    u0 = xp.gaussian_data(grid, amplitude=1.0, width=2.0)
    horizon, frames = 2.0, 401
    times = np.linspace(0.0, horizon, frames)
    profile = xp.free_lp1_profile(u0, 3.0, times)
    integrals = {}
    for a in (1.0, 2.0, 4.0):
        rep = xp.free_norm_ge(u0, dmp.constant(a), 3.0, horizon,
                              frames=frames, lp1_values=profile)
        check(failures, rep.power == 8.0, f"wrong integrability power "
              f"{rep.power}")
        integrals[a] = rep.integral

    def envelope(a):
        return -math.expm1(-8.0 * a * horizon) / (8.0 * a)

    for lo, hi in ((1.0, 2.0), (2.0, 4.0)):
        got = integrals[hi] / integrals[lo]
        allowed = 1.1 * envelope(hi) / envelope(lo)
        check(failures, got <= allowed,
              f"I({hi:g})/I({lo:g}) = {got:.4f} > {allowed:.4f}")
    report(9, "doubling constant damping shrinks the free-norm integral at "
              "the envelope rate (10% tolerance)", failures)


def test_criterion_10_threshold_bracket_by_bisection():
    failures = []
    grid = nl.Grid(2, 8.0, 128)
    u0 = xp.gaussian_data(grid, amplitude=3.0, width=1.0)
    assert nl.energy(u0, 3.0) < 0.0
    result = xp.bisect_threshold(u0, 3.0, 0.0, 3.0, tol=1e-4, t_probe=2.0,
                                 max_probes=12)
    lo, hi = result.bracket
    check(failures, len(result.probes) <= 12,
          f"{len(result.probes)} probes > 12")
    check(failures, (hi - lo) / hi <= 5e-2,
          f"relative bracket width {(hi - lo) / hi:.4f} > 5e-2")
    check(failures, result.anomalies == [],
          f"anomalies: {result.anomalies}")
    for param, cls, _ in result.entries:
        consistent = param <= lo if cls in ("blowup-detected",
                                            "resolution-lost") \
            else param >= hi
        check(failures, consistent,
              f"probe at {param:.4f} classified {cls} breaks monotone "
              f"bracketing")
    report(10, "bisection brackets the blow-up/global boundary to 5% in 12 "
               "probes", failures)
