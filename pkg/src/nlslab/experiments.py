"""Multi-run studies built on the solver.

Four families of experiments:

* identity verification: march a benchmark configuration and measure how
  well the exact balance laws (mass decay, energy rate, variance rate,
  moment rate, gauge-Hamiltonian rate, variance second derivative) hold in
  finite differences across frames, including the convergence ratio under
  simultaneous dt and frame-spacing halving;
* theorem scenarios: the negative-energy chirped-Gaussian blow-up scenario
  with its lifespan bounds, the radial localized variant, and the long
  subcritical monitoring run;
* sweeps: grid sweeps over a damping parameter and bisection for the
  empirical blow-up/global boundary in constant damping;
* the free-propagator norm integral entering the global-existence
  criterion.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace, field as dc_field

import numpy as np

from . import criteria as crit
from . import damping as dmp
from . import quantities as qt
from .errors import (BracketError, ConfigurationError, HypothesisError,
                     NumericalError, RegimeError, UsageError)
from .grid import Field, Grid, field_from_function, free_evolve, \
    radial_asymmetry
from .solver import ProblemSpec, simulate

_BLOW_SIDE = ("blowup-detected", "resolution-lost")


# ---------------------------------------------------------------------------
# initial data families
# ---------------------------------------------------------------------------

def gaussian_data(grid: Grid, amplitude: float = 1.0, width: float = 1.0,
                  chirp: float = 0.0, center=None) -> Field:
    """amplitude * exp(-|x-c|^2/(2 width^2)) * exp(-i chirp |x-c|^2).

    A positive chirp makes the initial virial negative, which is what the
    blow-up scenarios need.
    """
    if width <= 0.0:
        raise UsageError("gaussian width must be positive")
    if center is None:
        center = (0.0,) * grid.dim
    if len(center) != grid.dim:
        raise UsageError("center length must match the grid dimension")

    def fn(*coords):
        r2 = sum((x - c) ** 2 for x, c in zip(coords, center))
        return amplitude * np.exp(-r2 / (2.0 * width ** 2)) \
            * np.exp(-1j * chirp * r2)

    return field_from_function(grid, fn)


def ring_data(grid: Grid, amplitude: float = 1.0, radius: float = 3.0,
              width: float = 1.0, chirp: float = 0.0) -> Field:
    """Radial shell amplitude * exp(-(r-radius)^2/(2 width^2) - i chirp r^2)."""
    if width <= 0.0 or radius < 0.0:
        raise UsageError("ring needs positive width and nonnegative radius")

    def fn(*coords):
        r = np.sqrt(sum(x ** 2 for x in coords))
        return amplitude * np.exp(-(r - radius) ** 2 / (2.0 * width ** 2)) \
            * np.exp(-1j * chirp * r ** 2)

    return field_from_function(grid, fn)


# ---------------------------------------------------------------------------
# identity verification
# ---------------------------------------------------------------------------

RATE_IDENTITIES = ("energy_rate", "variance_rate", "virial_rate",
                   "hamiltonian_rate", "variance_second")


@dataclass
class IdentityReport:
    residuals: dict
    convergence: dict
    frames_used: int
    truncated: bool
    classification: str

    def to_dict(self) -> dict:
        return {
            "residuals": dict(self.residuals),
            "convergence": dict(self.convergence),
            "frames_used": self.frames_used,
            "truncated": self.truncated,
            "classification": self.classification,
        }


def _rel_max(lhs: np.ndarray, rhs: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1.0)
    return float(np.max(np.abs(lhs - rhs)) / scale)


def _frame_arrays(records):
    get = lambda name: np.array([getattr(r, name) for r in records])
    return {name: get(name) for name in
            ("t", "mass", "energy", "nehari", "variance", "virial",
             "pohozaev", "hamiltonian", "grad_sq", "lp1")}


def identity_residuals(records, cd: dmp.CumulativeDamping, p: float,
                       dim: int) -> dict:
    """Max relative residuals of the balance laws over a frame list.

    First derivatives are centred differences on the interior frames, the
    variance second derivative a three-point second difference; frames must
    be uniformly spaced.
    """
    if len(records) < 5:
        raise NumericalError("need at least five frames for the residuals")
    f = _frame_arrays(records)
    t = f["t"]
    steps = np.diff(t)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
        raise NumericalError("identity residuals need uniform frame spacing")
    big_a = np.asarray(dmp.cumulative(cd, t))
    a_vals = np.asarray(dmp.evaluate(cd.spec, t))
    growth = np.exp(2.0 * big_a)

    def ddt(y):
        return (y[2:] - y[:-2]) / (t[2:] - t[:-2])

    mid = slice(1, -1)
    out = {}
    out["mass"] = float(np.max(np.abs(f["mass"] * growth - f["mass"][0]))
                        / f["mass"][0])
    out["energy_rate"] = _rel_max(ddt(f["energy"]),
                                  -2.0 * (a_vals * f["nehari"])[mid])
    out["variance_rate"] = _rel_max(
        ddt(f["variance"]) + 2.0 * (a_vals * f["variance"])[mid],
        4.0 * f["virial"][mid])
    out["virial_rate"] = _rel_max(
        ddt(f["virial"]) + 2.0 * (a_vals * f["virial"])[mid],
        2.0 * f["pohozaev"][mid])

    # gauge-frame quantities: |v|^2 = e^{2A} |u|^2 throughout
    lp1_weighted = a_vals * growth * f["lp1"]
    coeff = 2.0 * (p - 1.0) / (p + 1.0)
    out["hamiltonian_rate"] = _rel_max(ddt(f["hamiltonian"]),
                                       coeff * lp1_weighted[mid])
    integrated = f["energy"][0] \
        + coeff * crit.cumulative_trapezoid(lp1_weighted, t)
    out["hamiltonian_integrated"] = _rel_max(f["hamiltonian"], integrated)

    k_v = growth * f["variance"]
    second = (k_v[2:] - 2.0 * k_v[1:-1] + k_v[:-2]) / steps[0] ** 2
    rhs = (8.0 * growth * f["grad_sq"]
           - 4.0 * dim * (p - 1.0) / (p + 1.0) * growth * f["lp1"])
    out["variance_second"] = _rel_max(second, rhs[mid])
    return out


def verify_identities(spec: ProblemSpec, convergence: bool = True
                      ) -> IdentityReport:
    """Run the configuration and report the balance-law residuals.

    With ``convergence`` a second run at half the step cap and half the
    frame spacing measures the residual ratios; second-order stepping should
    shrink the finite-difference residuals by about four.
    """
    cd = spec.cumulative_damping()
    record = simulate(spec)
    records = record.frames
    truncated = record.classification != "completed"
    if truncated:
        records = records[:-1]
    residuals = identity_residuals(records, cd, spec.p, spec.grid.dim)
    ratios = {}
    if convergence:
        fine_spec = replace(spec, dt_max=spec.dt_max / 2.0,
                            frames=2 * spec.frames - 1)
        fine = simulate(fine_spec)
        fine_records = fine.frames
        if fine.classification != "completed":
            fine_records = fine_records[:-1]
        fine_res = identity_residuals(fine_records, cd, spec.p, spec.grid.dim)
        for name in RATE_IDENTITIES:
            ratios[name] = residuals[name] / max(fine_res[name], 1e-300)
    return IdentityReport(residuals=residuals, convergence=ratios,
                          frames_used=len(records), truncated=truncated,
                          classification=record.classification)


# ---------------------------------------------------------------------------
# negative-energy scenario with lifespan bounds
# ---------------------------------------------------------------------------

@dataclass
class Blow0Report:
    a_star: float
    ratio: float
    energy0: float
    virial0: float
    variance0: float
    entries: list
    records: list = dc_field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "criticality_ratio": self.ratio,
            "energy0": self.energy0,
            "virial0": self.virial0,
            "variance0": self.variance0,
            "entries": [dict(e) for e in self.entries],
        }


def blow0_scenario(grid: Grid, p: float, amplitude: float, chirp: float,
                   width: float = 1.0, fractions=(0.0, 0.25, 0.5),
                   above_factor: float | None = 2.0,
                   dt_max: float = 2.5e-4, safety: float = 0.5,
                   frames: int = 200, grad_factor: float = 2.0,
                   tail_fraction: float = 1e-2, horizon_margin: float = 1.25,
                   cutoff_radii=(), strict: bool = True) -> Blow0Report:
    """Chirped-Gaussian blow-up scenario under constant damping.

    The datum must have negative energy and negative virial (checked).  For
    each fraction f < 1 the run uses a = f a_*, computes the lifespan bound,
    and must detect blow-up no later than that bound; ``above_factor`` adds
    one unconstrained run above the threshold whose outcome is recorded
    without assertion.  ``cutoff_radii`` attaches the localized virial at
    each radius as a per-frame extra for the radial estimate checks.

    The default detection factor is deliberately low: in the collapse
    endgame the gradient ratio and the spectral tail cross any fixed
    thresholds almost simultaneously, so detection must target the stage
    where the field is still several refinement levels away from the grid
    scale.
    """
    u0 = gaussian_data(grid, amplitude=amplitude, width=width, chirp=chirp)
    e0 = qt.energy(u0, p)
    v0 = qt.virial(u0)
    k0 = qt.variance(u0)
    # roundoff bands as in the criteria checks: a sign holding only at
    # machine precision would make a_star, and with it the horizon, absurd
    if e0 >= -1e-12 * max(1.0, qt.grad_norm_sq(u0)):
        raise ConfigurationError(f"scenario needs negative energy, got {e0}")
    if v0 >= -1e-12 * max(1.0, k0):
        raise ConfigurationError(f"scenario needs negative virial, got {v0}")
    ratio = crit.criticality_ratio(grid.dim, p)
    a_star = crit.damping_threshold(v0, k0, ratio)

    extras = {f"loc_virial_R{r:g}": _loc_virial_fn(qt.CutoffProfile(r))
              for r in cutoff_radii}
    values = [f * a_star for f in fractions]
    if above_factor is not None:
        values.append(above_factor * a_star)
    bounds = [crit.lifespan_bound(v, ratio, k0, v0) if v < a_star else None
              for v in values]
    finite = [b for b in bounds if b is not None]
    if not finite:
        raise UsageError("scenario needs at least one fraction below 1")
    horizon = horizon_margin * max(finite)

    entries = []
    records = []
    failures = []
    for value, bound in zip(values, bounds):
        spec = ProblemSpec(grid=grid, p=p, mu=-1,
                           damping=dmp.constant(value), initial=u0,
                           dt_max=dt_max, t_end=horizon, safety=safety,
                           frames=frames, grad_factor=grad_factor,
                           tail_fraction=tail_fraction)
        record = simulate(spec, extra_functionals=extras)
        within = None
        if bound is not None:
            within = (record.classification == "blowup-detected"
                      and record.t_detect is not None
                      and record.t_detect <= bound)
            if not within:
                failures.append(
                    f"a={value:g}: {record.classification} "
                    f"(t_detect={record.t_detect}) vs bound {bound:g}")
        entries.append({
            "a_value": value,
            "lifespan_bound": bound,
            "classification": record.classification,
            "t_detect": record.t_detect,
            "within_bound": within,
        })
        records.append(record)
    if strict and failures:
        raise NumericalError("lifespan bound violated: " + "; ".join(failures))
    return Blow0Report(a_star=a_star, ratio=ratio, energy0=e0, virial0=v0,
                       variance0=k0, entries=entries, records=records)


def _loc_virial_fn(profile: qt.CutoffProfile):
    return lambda t, u: qt.localized_virial(u, profile)


def localized_estimate_margins(records, loc_values, cd: dmp.CumulativeDamping,
                               p: float, dim: int, energy0: float,
                               drop_last: int = 0) -> dict:
    """Second differences of the gauged localized virial against the
    inter-critical upper estimate

        2 N (p-1) E(0) + 4 N (p-1)^2/(p+1) integral(a e^{(1-p)A} |v|_{p+1})
        + 2 (4 - N (p-1)) |grad v|^2.

    The cutoff remainder terms on the right are positive and omitted, so a
    pass here is conservative; margins are (lhs - rhs) normalized per frame
    and should stay below the discretization slack.  ``drop_last`` trims
    frames adjacent to a detection event where differencing is meaningless.
    """
    records = getattr(records, "frames", records)
    cd = dmp.as_cumulative(cd)
    if drop_last:
        records = records[:-drop_last]
        loc_values = loc_values[:-drop_last]
    if len(records) < 5:
        raise NumericalError("need at least five frames for the margins")
    f = _frame_arrays(records)
    t = f["t"]
    steps = np.diff(t)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * steps[0]:
        raise NumericalError("margins need uniform frame spacing")
    big_a = np.asarray(dmp.cumulative(cd, t))
    growth = np.exp(2.0 * big_a)
    a_vals = np.asarray(dmp.evaluate(cd.spec, t))

    loc_v = growth * np.asarray(loc_values, dtype=float)
    lhs = (loc_v[2:] - 2.0 * loc_v[1:-1] + loc_v[:-2]) / steps[0] ** 2
    q1 = crit.cumulative_trapezoid(a_vals * growth * f["lp1"], t)
    rhs = (2.0 * dim * (p - 1.0) * energy0
           + 4.0 * dim * (p - 1.0) ** 2 / (p + 1.0) * q1
           + 2.0 * (4.0 - dim * (p - 1.0)) * growth * f["grad_sq"])[1:-1]
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return {"t": t[1:-1], "lhs": lhs, "rhs": rhs,
            "margins": (lhs - rhs) / scale}


# ---------------------------------------------------------------------------
# sweeps and bisection
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    entries: list                      # (param, classification, time) sorted
    bracket: tuple | None
    bracket_width: float | None
    probes: list                       # chronological probe log
    anomalies: list

    def to_dict(self) -> dict:
        return {
            "entries": [list(e) for e in self.entries],
            "bracket": list(self.bracket) if self.bracket else None,
            "bracket_width": self.bracket_width,
            "probes": [dict(p) for p in self.probes],
            "anomalies": list(self.anomalies),
        }


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("param,classification,t_detect\n")
        for param, cls, t in result.entries:
            fh.write(f"{param:.17g},{cls},{t:.17g}\n")


def _scan_anomalies(entries) -> list:
    """Classification should flip from blow-up to completed once as the
    parameter grows; report any completed run sitting below a blow-up run."""
    out = []
    for lo_param, lo_cls, _ in entries:
        if lo_cls != "completed":
            continue
        for hi_param, hi_cls, _ in entries:
            if hi_cls in _BLOW_SIDE and hi_param > lo_param:
                out.append(f"completed at {lo_param:g} below "
                           f"{hi_cls} at {hi_param:g}")
    return out


def _empirical_bracket(entries):
    blow = [p for p, cls, _ in entries if cls in _BLOW_SIDE]
    done = [p for p, cls, _ in entries if cls == "completed"]
    if not blow or not done or max(blow) >= min(done):
        return None
    return (max(blow), min(done))


def bisect_threshold(u0: Field, p: float, a_lo: float, a_hi: float,
                     tol: float, t_probe: float, *, mu: int = -1,
                     dt_max: float = 1e-3, safety: float = 0.5,
                     frames: int = 101, grad_factor: float = 2.0,
                     tail_fraction: float = 1e-2,
                     max_probes: int = 40) -> SweepResult:
    """Bisect constant damping for the blow-up/global boundary.

    The endpoints must classify as blow-up (low) and completed (high) at
    horizon t_probe, else the bracket is rejected.  Classification is
    assumed monotone in the damping strength; every probe is logged so a
    violation of that assumption is visible in the result rather than
    silently bisected over.  Resolution-lost probes count as the blow-up
    side and are flagged.
    """
    if not (a_hi > a_lo >= 0.0):
        raise BracketError(f"need 0 <= a_lo < a_hi, got [{a_lo}, {a_hi}]")
    if t_probe <= 0.0 or tol <= 0.0:
        raise UsageError("t_probe and tol must be positive")

    probes = []

    def probe(a_value: float) -> bool:
        spec = ProblemSpec(grid=u0.grid, p=p, mu=mu,
                           damping=dmp.constant(a_value), initial=u0,
                           dt_max=dt_max, t_end=t_probe, safety=safety,
                           frames=frames, grad_factor=grad_factor,
                           tail_fraction=tail_fraction)
        record = simulate(spec)
        cls = record.classification
        probes.append({
            "param": a_value,
            "classification": cls,
            "t_detect": record.t_detect if record.t_detect is not None
            else t_probe,
            "flagged": cls == "resolution-lost",
        })
        return cls in _BLOW_SIDE

    if not probe(a_lo):
        raise BracketError(
            f"lower endpoint a={a_lo} classified as "
            f"{probes[-1]['classification']}, expected blow-up")
    if probe(a_hi):
        raise BracketError(
            f"upper endpoint a={a_hi} classified as "
            f"{probes[-1]['classification']}, expected completed")

    lo, hi = a_lo, a_hi
    while hi - lo > tol and len(probes) < max_probes:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    entries = sorted((pr["param"], pr["classification"], pr["t_detect"])
                     for pr in probes)
    return SweepResult(entries=entries, bracket=(lo, hi),
                       bracket_width=hi - lo, probes=probes,
                       anomalies=_scan_anomalies(entries))


_SWEEP_FACTORIES = {
    "constant": dmp.constant,
    "saturating": dmp.saturating,
    "polynomial-decay": dmp.polynomial_decay,
    "appendix-spike": dmp.appendix_spike,
}


def _sweep_probe(args):
    param, spec = args
    record = simulate(spec)
    time = record.t_detect if record.t_detect is not None else spec.t_end
    return param, record.classification, time


def sweep_grid(base_spec: ProblemSpec, values, kind: str = "constant",
               workers: int | None = None) -> SweepResult:
    """Independent runs over a damping-parameter grid, in a process pool.

    Worker count follows the NLSLAB_THREADS environment cap; results merge
    in parameter order regardless of completion order.
    """
    if kind not in _SWEEP_FACTORIES:
        raise ConfigurationError(f"no sweepable damping kind {kind!r}")
    values = [float(v) for v in values]
    if not values:
        raise UsageError("sweep needs at least one parameter value")
    jobs = [(v, replace(base_spec, damping=_SWEEP_FACTORIES[kind](v)))
            for v in values]
    if workers is None:
        env = os.environ.get("NLSLAB_THREADS", "")
        workers = int(env) if env.isdigit() and int(env) > 0 \
            else (os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs)))
    if workers == 1:
        results = [_sweep_probe(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_probe, jobs))
    entries = sorted(results)
    probes = [{"param": p, "classification": c, "t_detect": t,
               "flagged": c == "resolution-lost"} for p, c, t in results]
    bracket = _empirical_bracket(entries)
    return SweepResult(
        entries=entries, bracket=bracket,
        bracket_width=bracket[1] - bracket[0] if bracket else None,
        probes=probes, anomalies=_scan_anomalies(entries))


# ---------------------------------------------------------------------------
# free-propagator norm integral
# ---------------------------------------------------------------------------

@dataclass
class FreeNormReport:
    integral: float
    power: float
    sup_norm: float
    envelope_integral: float
    comparison_bound: float
    inf_average: float

    def to_dict(self) -> dict:
        return {
            "integral": self.integral,
            "power": self.power,
            "sup_norm": self.sup_norm,
            "envelope_integral": self.envelope_integral,
            "comparison_bound": self.comparison_bound,
            "inf_average": self.inf_average,
        }


def free_lp1_profile(u0: Field, p: float, times) -> np.ndarray:
    """int |e^{it Lap} u0|^{p+1} at each requested time."""
    return np.array([qt.lp1_integral(free_evolve(u0, float(t)), p)
                     for t in times])


def free_norm_ge(u0: Field, spec: dmp.DampingSpec, p: float, horizon: float,
                 frames: int = 401, calibration: float = 1.0,
                 lp1_values: np.ndarray | None = None) -> FreeNormReport:
    """Trapezoid value of int_0^T e^{-theta A} |e^{it Lap} u0|_{p+1}^theta dt.

    Also reports the pieces of two a-priori bounds: sup_norm times
    envelope_integral (the frame-wise supremum against int e^{-theta A}),
    and the calibrated comparison level ||u0||_H1^theta / (theta a_lower).
    ``lp1_values`` may carry a precomputed profile for the uniform frame
    grid, since the free evolution does not depend on the damping.
    """
    if horizon <= 0.0:
        raise UsageError("horizon must be positive")
    if frames < 3:
        raise UsageError("need at least three frames")
    power = crit.integrability_power(u0.grid.dim, p)
    times = np.linspace(0.0, horizon, frames)
    if lp1_values is None:
        lp1_values = free_lp1_profile(u0, p, times)
    lp1_values = np.asarray(lp1_values, dtype=float)
    if lp1_values.shape != times.shape:
        raise UsageError("lp1_values must match the frame grid")
    norms = lp1_values ** (power / (p + 1.0))
    cd = dmp.CumulativeDamping(spec)
    decay = np.exp(-power * np.asarray(dmp.cumulative(cd, times)))
    integral = float(np.trapezoid(decay * norms, times))
    envelope = float(np.trapezoid(decay, times))
    aunder = dmp.inf_average(cd, horizon).value
    h1_pow = calibration * math.sqrt(qt.h1_norm_sq(u0)) ** power
    if h1_pow == 0.0:
        comparison = 0.0
    elif aunder > 0.0:
        comparison = h1_pow / (power * aunder)
    else:
        comparison = math.inf
    return FreeNormReport(integral=integral, power=power,
                          sup_norm=float(np.max(norms)),
                          envelope_integral=envelope,
                          comparison_bound=comparison,
                          inf_average=aunder)


# ---------------------------------------------------------------------------
# subcritical monitoring
# ---------------------------------------------------------------------------

@dataclass
class MonitorReport:
    classification: str
    t: np.ndarray
    grad_history: np.ndarray
    envelope: np.ndarray
    within_envelope: bool

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "t": self.t.tolist(),
            "grad_history": self.grad_history.tolist(),
            "envelope": self.envelope.tolist(),
            "within_envelope": self.within_envelope,
        }


def subcritical_monitor(spec: ProblemSpec, c0: float = 1.0) -> MonitorReport:
    """Long focusing run below the mass-critical exponent.

    Such runs are globally well posed, so anything but a completed
    classification is a numerical failure and raises.  The gradient history
    is reported against the a-priori growth envelope for the calibration
    constant ``c0``; the comparison is informational unless c0 is certified.
    """
    if spec.mu != -1:
        raise RegimeError("the subcritical monitor covers the focusing sign")
    if spec.p >= crit.mass_critical_p(spec.grid.dim):
        raise RegimeError(
            f"need p < {crit.mass_critical_p(spec.grid.dim)}, got {spec.p}")
    record = simulate(spec)
    if record.classification != "completed":
        raise NumericalError(
            f"subcritical run classified {record.classification} "
            f"at t={record.t_detect}")
    t = np.array([r.t for r in record.frames])
    grad = np.array([r.grad_sq for r in record.frames])
    cd = spec.cumulative_damping()
    env = np.asarray(crit.gronwall_envelope(t, float(grad[0]), c0, cd))
    return MonitorReport(classification=record.classification, t=t,
                         grad_history=grad, envelope=env,
                         within_envelope=bool(np.all(grad <= env)))


# ---------------------------------------------------------------------------
# radial localized scenario
# ---------------------------------------------------------------------------

@dataclass
class RadialBlow2Report:
    asymmetry: float
    energy0: float
    verdicts: list
    runs: list
    records: list = dc_field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "asymmetry": self.asymmetry,
            "energy0": self.energy0,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "runs": [dict(r) for r in self.runs],
        }


def radial_blow2_scenario(u0: Field, p: float, radii,
                          damping_values=(0.0,), *, dt_max: float = 2.5e-4,
                          safety: float = 0.5, t_end: float = 0.5,
                          frames: int = 200, grad_factor: float = 2.0,
                          tail_fraction: float = 1e-2,
                          asymmetry_tol: float = 1e-10,
                          slack: float = 5e-2) -> RadialBlow2Report:
    """Localized-virial blow-up scenario for radial negative-energy data.

    For each cutoff radius the quadratic envelope verdict is evaluated;
    each damping value then gets a run whose gauged localized virial is
    checked frame-wise (second differences, interior frames, detection
    neighbours dropped) against the inter-critical estimate with the given
    relative slack.
    """
    asym = radial_asymmetry(u0)
    if asym > asymmetry_tol:
        raise HypothesisError(
            f"datum asymmetry {asym:.3e} exceeds {asymmetry_tol:.0e}")
    e0 = qt.energy(u0, p)
    if e0 >= 0.0:
        raise HypothesisError(f"scenario needs negative energy, got {e0}")
    radii = [float(r) for r in radii]
    verdicts = [crit.check_blow2(u0, p, qt.CutoffProfile(r),
                                 asymmetry_tol=asymmetry_tol) for r in radii]

    extras = {f"loc_virial_R{r:g}": _loc_virial_fn(qt.CutoffProfile(r))
              for r in radii}
    runs = []
    records = []
    for value in damping_values:
        spec = ProblemSpec(grid=u0.grid, p=p, mu=-1,
                           damping=dmp.constant(value), initial=u0,
                           dt_max=dt_max, t_end=t_end, safety=safety,
                           frames=frames, grad_factor=grad_factor,
                           tail_fraction=tail_fraction)
        record = simulate(spec, extra_functionals=extras)
        cd = spec.cumulative_damping()
        drop = 0 if record.classification == "completed" else 2
        margins = {}
        for r in radii:
            check = localized_estimate_margins(
                record.frames, record.extras[f"loc_virial_R{r:g}"], cd, p,
                u0.grid.dim, e0, drop_last=drop)
            margins[r] = float(np.max(check["margins"]))
        runs.append({
            "a_value": value,
            "classification": record.classification,
            "t_detect": record.t_detect,
            "estimate_margins": margins,
            "within_slack": all(m <= slack for m in margins.values()),
        })
        records.append(record)
    return RadialBlow2Report(asymmetry=asym, energy0=e0, verdicts=verdicts,
                             runs=runs, records=records)
