"""Analytic blow-up and global-existence criteria, evaluated on grid data.

Each checker returns a CriterionVerdict: the criterion tag, the list of
hypotheses with measured values, derived thresholds, and any quantitative
bounds the criterion emits.  Tags: Blow0 (monotone damping below the virial
threshold), Blow1 (classical variance conditions), Blow2 (radial localized
variant), GE (damping large enough for global existence), AppendixB
(subcritical focusing, always global).

The admissible window for the inter-critical theory is

    1 + 4/N < p < 1 + 4/(N-2)   (p < infinity when N <= 2),

inside which two derived exponents live:

    criticality ratio    (N + 2 - (N-2) p) / (N (p-1) - 4)
    integrability power  2 (p-1)(p+1) / (4 - (N-2)(p-1))     (N >= 3).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from . import damping as dmp
from . import quantities as qt
from .errors import HypothesisError, RegimeError, UsageError
from .grid import Field, radial_asymmetry

_BOUNDARY_TOL = 1e-12


# ---------------------------------------------------------------------------
# regime bookkeeping and derived exponents
# ---------------------------------------------------------------------------

def mass_critical_p(dim: int) -> float:
    return 1.0 + 4.0 / dim


def energy_critical_p(dim: int) -> float:
    return 1.0 + 4.0 / (dim - 2) if dim >= 3 else math.inf


def classify_regime(dim: int, p: float) -> str:
    """One of subcritical, mass-critical, inter-critical, energy-critical,
    supercritical (with a 1e-12 band around the closed endpoints)."""
    if dim < 1 or p <= 1.0:
        raise UsageError("need dim >= 1 and p > 1")
    pm = mass_critical_p(dim)
    pe = energy_critical_p(dim)
    if abs(p - pm) <= _BOUNDARY_TOL:
        return "mass-critical"
    if p < pm:
        return "subcritical"
    if math.isfinite(pe) and abs(p - pe) <= _BOUNDARY_TOL:
        return "energy-critical"
    if p < pe:
        return "inter-critical"
    return "supercritical"


def criticality_ratio(dim: int, p: float) -> float:
    """(N+2-(N-2)p) / (N(p-1)-4); defined strictly between the critical
    exponents, diverging at the mass-critical end."""
    if classify_regime(dim, p) != "inter-critical":
        raise RegimeError(
            f"criticality ratio needs 1+4/{dim} < p < {energy_critical_p(dim)}")
    return (dim + 2.0 - (dim - 2.0) * p) / (dim * (p - 1.0) - 4.0)


def integrability_power(dim: int, p: float) -> float:
    """2(p-1)(p+1) / (4-(N-2)(p-1)): the time-integrability exponent used by
    the global-existence criterion.  Requires N >= 3 and mass-critical <= p <
    energy-critical."""
    if dim < 3:
        raise RegimeError("integrability power is defined for dim >= 3")
    regime = classify_regime(dim, p)
    if regime not in ("mass-critical", "inter-critical"):
        raise RegimeError("need 1+4/N <= p < 1+4/(N-2)")
    return 2.0 * (p - 1.0) * (p + 1.0) / (4.0 - (dim - 2.0) * (p - 1.0))


def damping_threshold(virial0: float, variance0: float, ratio: float) -> float:
    """a* = -2 V0 / ((ratio+1) K0), the largest sup-average the monotone
    blow-up criterion tolerates.  Needs V0 < 0 and K0 > 0."""
    if virial0 >= 0.0:
        raise HypothesisError("threshold needs a negative initial virial")
    if variance0 <= 0.0:
        raise HypothesisError("threshold needs a positive initial variance")
    return -2.0 * virial0 / ((ratio + 1.0) * variance0)


def lifespan_bound(sup_avg: float, ratio: float, variance0: float,
                   virial0: float) -> float:
    """Upper bound on the blow-up time under a sup-averaged damping level.

        -ln(1 + (ratio+1) abar K0 / (2 V0)) / (2 (ratio+1) abar),

    continued by its limit -K0/(4 V0) as abar -> 0.  Blows up (to +infinity)
    as abar approaches the threshold a*.
    """
    if virial0 >= 0.0 or variance0 <= 0.0:
        raise HypothesisError("lifespan bound needs V0 < 0 and K0 > 0")
    if sup_avg < 0.0:
        raise HypothesisError("sup-averaged damping cannot be negative")
    a_star = damping_threshold(virial0, variance0, ratio)
    if sup_avg >= a_star:
        raise HypothesisError(
            f"sup average {sup_avg} is not below the threshold {a_star}")
    if sup_avg == 0.0:
        return -variance0 / (4.0 * virial0)
    c = ratio + 1.0
    return -math.log1p(c * sup_avg * variance0 / (2.0 * virial0)) \
        / (2.0 * c * sup_avg)


def required_damping_level(h1_norm: float, dim: int, p: float,
                           calibration: float = 1.0) -> float:
    """C ||u0||_H1^power: the inf-average level the GE criterion asks for.

    The constant in front is not explicit; ``calibration`` stands in for it,
    so only ratios of this quantity across data are meaningful.
    """
    if h1_norm < 0.0:
        raise UsageError("norm must be nonnegative")
    return calibration * h1_norm ** integrability_power(dim, p)


def gronwall_envelope(t, grad0_sq: float, c0: float,
                      cd: dmp.CumulativeDamping):
    """(2 grad0^2 + 2 C0 + 4 C0 A(t)) e^(2A(t)): the subcritical gradient
    envelope with calibration constant C0."""
    if grad0_sq < 0.0 or c0 < 0.0:
        raise UsageError("envelope inputs must be nonnegative")
    big_a = dmp.cumulative(cd, t)
    return (2.0 * grad0_sq + 2.0 * c0 + 4.0 * c0 * np.asarray(big_a)) \
        * np.exp(2.0 * np.asarray(big_a))


def quadratic_negativity(a: float, b: float, c: float):
    """Does a t^2 + b t + c dip below zero for some t > 0?  Needs c > 0.

    Returns (decision, witness): a < 0 always crosses; a = 0 crosses iff
    b < 0; a > 0 crosses iff b + 2 sqrt(ac) < 0 (negative vertex value with a
    positive vertex position).  The witness is a time where the quadratic is
    negative, or None.
    """
    if c <= 0.0:
        raise HypothesisError("quadratic negativity assumes c > 0")
    if a < 0.0:
        # c > 0 puts t = 0 between the roots; the parabola is negative past
        # the larger one, (-b - sqrt(..))/(2a) since 2a < 0
        root = (-b - math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
        witness = 2.0 * max(root, 1.0)
        return True, witness
    if a == 0.0:
        if b < 0.0:
            return True, 2.0 * c / (-b)
        return False, None
    if b + 2.0 * math.sqrt(a * c) < 0.0:
        return True, -b / (2.0 * a)
    return False, None


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass
class Hypothesis:
    name: str
    holds: bool
    value: float
    tolerance: float = 0.0


@dataclass
class CriterionVerdict:
    theorem: str
    hypotheses: list
    thresholds: dict = dc_field(default_factory=dict)
    bounds: dict = dc_field(default_factory=dict)
    regime: str = ""

    @property
    def all_hold(self) -> bool:
        return all(h.holds for h in self.hypotheses)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def check_blow1(u0: Field, p: float) -> CriterionVerdict:
    """Classical variance conditions: E < 0; or E = 0 and V < 0; or E > 0 and
    V + sqrt(E K) < 0.  Energy is tested against a band 1e-12 max(1, grad^2)
    so 'E = 0' is meaningful on grid data."""
    dim = u0.grid.dim
    e_val = qt.energy(u0, p)
    v_val = qt.virial(u0)
    k_val = qt.variance(u0)
    grad2 = qt.grad_norm_sq(u0)
    band = 1e-12 * max(1.0, grad2)

    pm = mass_critical_p(dim)
    pe = energy_critical_p(dim)
    regime = classify_regime(dim, p)
    admissible = dim >= 2 and p >= pm - _BOUNDARY_TOL and \
        (dim <= 2 or p <= pe + _BOUNDARY_TOL)

    cond1 = e_val < -band
    cond2 = abs(e_val) <= band and v_val < 0.0
    cond3 = e_val > band and v_val + math.sqrt(max(e_val, 0.0) * k_val) < 0.0
    hyps = [
        Hypothesis("admissible-regime", admissible, p),
        Hypothesis("negative-energy", cond1, e_val, band),
        Hypothesis("zero-energy-negative-virial", cond2, v_val, band),
        Hypothesis("positive-energy-dominated", cond3,
                   v_val + math.sqrt(max(e_val, 0.0) * k_val), band),
    ]
    verdict = CriterionVerdict(
        theorem="Blow1",
        hypotheses=hyps,
        thresholds={"energy_band": band},
        bounds={"energy": e_val, "virial": v_val, "variance": k_val},
        regime=regime,
    )
    if regime == "energy-critical":
        # endpoint case: the grid cannot distinguish it from nearby exponents
        verdict.thresholds["resolution_limited"] = 1.0
    verdict.bounds["predicts_blowup"] = float(
        admissible and (cond1 or cond2 or cond3))
    return verdict


def check_blow0(u0: Field, spec: dmp.DampingSpec, p: float, horizon: float,
                grid_points: int = 512) -> CriterionVerdict:
    """Monotone-damping criterion: inter-critical p, E < 0, V < 0,
    non-decreasing a, and sup average below the threshold a*.  Emits the
    lifespan bound when every hypothesis holds.

    The sign hypotheses are tested against 1e-12 roundoff bands (energy on
    the grad^2 scale, virial on the variance scale): a quantity that is zero
    to machine precision must not certify a strict inequality, and a
    roundoff-negative virial would produce an absurd threshold a*."""
    dim = u0.grid.dim
    regime = classify_regime(dim, p)
    e_val = qt.energy(u0, p)
    v_val = qt.virial(u0)
    k_val = qt.variance(u0)
    band_e = 1e-12 * max(1.0, qt.grad_norm_sq(u0))
    band_v = 1e-12 * max(1.0, k_val)
    mono = dmp.classify_monotonicity(spec, horizon)
    cd = dmp.CumulativeDamping(spec)
    abar = dmp.sup_average(cd, horizon, grid_points)

    hyps = [
        Hypothesis("inter-critical", regime == "inter-critical", p),
        Hypothesis("negative-energy", e_val < -band_e, e_val, band_e),
        Hypothesis("negative-virial", v_val < -band_v, v_val, band_v),
        Hypothesis("non-decreasing-damping", mono == "non-decreasing", 0.0),
    ]
    thresholds = {"sup_average": abar.value,
                  "sup_average_at_upper": float(abar.at_upper)}
    bounds = {"energy": e_val, "virial": v_val, "variance": k_val}
    if regime == "inter-critical" and v_val < -band_v and k_val > 0.0:
        ratio = criticality_ratio(dim, p)
        a_star = damping_threshold(v_val, k_val, ratio)
        thresholds["a_star"] = a_star
        thresholds["criticality_ratio"] = ratio
        below = abar.value < a_star
        hyps.append(Hypothesis("sup-average-below-threshold", below,
                               abar.value))
        if below and all(h.holds for h in hyps):
            bounds["lifespan"] = lifespan_bound(abar.value, ratio, k_val, v_val)
    else:
        hyps.append(Hypothesis("sup-average-below-threshold", False,
                               abar.value))
    return CriterionVerdict(theorem="Blow0", hypotheses=hyps,
                            thresholds=thresholds, bounds=bounds,
                            regime=regime)


def check_blow2(u0: Field, p: float, profile: qt.CutoffProfile,
                asymmetry_tol: float = 1e-10) -> CriterionVerdict:
    """Radial localized criterion at one cutoff radius R.

    Builds a quadratic envelope a_R t^2 + b_R t + c_R for the localized
    virial, with a_R = N(p-1)E(u0) (the computable leading coefficient; the
    cutoff remainder vanishes as R grows), b_R its first time derivative and
    c_R its initial value, and asks quadratic_negativity for a crossing time.
    """
    dim = u0.grid.dim
    regime = classify_regime(dim, p)
    asym = radial_asymmetry(u0)
    pm = mass_critical_p(dim)
    p_cap = min(5.0, energy_critical_p(dim))
    admissible = dim >= 2 and pm - _BOUNDARY_TOL <= p <= p_cap + _BOUNDARY_TOL

    e_val = qt.energy(u0, p)
    a_r = dim * (p - 1.0) * e_val
    b_r = qt.localized_virial_first(u0, profile)
    c_r = qt.localized_virial(u0, profile)

    hyps = [
        Hypothesis("radial", asym <= asymmetry_tol, asym, asymmetry_tol),
        Hypothesis("admissible-regime", admissible, p),
        Hypothesis("positive-localized-variance", c_r > 0.0, c_r),
    ]
    negative, witness = (False, None) if c_r <= 0.0 \
        else quadratic_negativity(a_r, b_r, c_r)
    hyps.append(Hypothesis("envelope-dips-negative", negative,
                           witness if witness is not None else math.inf))
    bounds = {"quadratic_a": a_r, "quadratic_b": b_r, "quadratic_c": c_r,
              "energy": e_val}
    if witness is not None:
        bounds["crossing_time"] = witness
    return CriterionVerdict(
        theorem="Blow2",
        hypotheses=hyps,
        thresholds={"cutoff_radius": profile.R,
                    "asymmetry_tolerance": asymmetry_tol},
        bounds=bounds,
        regime=regime,
    )


def check_global_existence(u0: Field, p: float, spec: dmp.DampingSpec,
                           horizon: float, calibration: float = 1.0,
                           grid_points: int = 512) -> CriterionVerdict:
    """Global existence for inf-averaged damping above the calibrated level."""
    dim = u0.grid.dim
    regime = classify_regime(dim, p)
    admissible = dim >= 3 and regime in ("mass-critical", "inter-critical")
    cd = dmp.CumulativeDamping(spec)
    aunder = dmp.inf_average(cd, horizon, grid_points)
    hyps = [Hypothesis("admissible-regime", admissible, p)]
    thresholds = {"inf_average": aunder.value,
                  "inf_average_at_lower": float(aunder.at_lower)}
    bounds = {}
    if admissible:
        h1 = math.sqrt(qt.h1_norm_sq(u0))
        required = required_damping_level(h1, dim, p, calibration)
        thresholds["required_level"] = required
        thresholds["integrability_power"] = integrability_power(dim, p)
        hyps.append(Hypothesis("damping-large-enough",
                               aunder.value >= required, aunder.value))
        bounds["h1_norm"] = h1
    else:
        hyps.append(Hypothesis("damping-large-enough", False, aunder.value))
    return CriterionVerdict(theorem="GE", hypotheses=hyps,
                            thresholds=thresholds, bounds=bounds,
                            regime=regime)


def check_subcritical(dim: int, p: float, mu: int) -> CriterionVerdict:
    """Focusing subcritical regime: global for every nonnegative damping."""
    regime = classify_regime(dim, p)
    hyps = [
        Hypothesis("focusing", mu == -1, float(mu)),
        Hypothesis("subcritical", regime == "subcritical", p),
    ]
    return CriterionVerdict(theorem="AppendixB", hypotheses=hyps,
                            regime=regime)


# ---------------------------------------------------------------------------
# trajectory-level inequality terms
# ---------------------------------------------------------------------------

def cumulative_trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Running trapezoid integral of samples y over nodes x, starting at 0."""
    out = np.zeros_like(np.asarray(y, dtype=float))
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def variance_inequality_terms(records, cd: dmp.CumulativeDamping, p: float,
                              sup_avg: float | None = None) -> dict:
    """Per-frame pieces of the variance inequality K <= P + c Q.

    P(t) = 4 E(0) t^2 + 4 V(0) t + K(0) from the first frame; Q(t) is the
    triple nested integral of g(s) = a(s) e^((1-p)A(s)) |v(s)|_(p+1)^(p+1),
    accumulated by three cumulative trapezoid passes over the frames; ``rhs``
    adds them with the coefficient 16(p-1)/(p+1).  When ``sup_avg`` is given,
    ``q_envelope`` carries the cheap bound (t^3/6) sup_s |v|_(p+1)^(p+1) abar.

    ``records`` may be a frame list or a whole trajectory record.
    """
    records = getattr(records, "frames", records)
    cd = dmp.as_cumulative(cd)
    if len(records) < 2:
        raise UsageError("need at least two frames")
    t = np.array([r.t for r in records])
    k_u = np.array([r.variance for r in records])
    lp1_u = np.array([r.lp1 for r in records])
    big_a = dmp.cumulative(cd, t)
    a_vals = dmp.evaluate(cd.spec, t)
    # a e^{(1-p)A} |v|^{p+1} = a e^{2A} |u|^{p+1} after the gauge factors merge
    g = a_vals * np.exp(2.0 * big_a) * lp1_u
    q = cumulative_trapezoid(
        cumulative_trapezoid(cumulative_trapezoid(g, t), t), t)
    first = records[0]
    parabola = 4.0 * first.energy * t ** 2 + 4.0 * first.virial * t \
        + first.variance
    coeff = 16.0 * (p - 1.0) / (p + 1.0)
    out = {
        "t": t,
        "variance": k_u,
        "parabola": parabola,
        "q": q,
        "rhs": parabola + coeff * q,
        "coefficient": coeff,
    }
    if sup_avg is not None:
        lp1_v = np.exp((p + 1.0) * big_a) * lp1_u
        out["q_envelope"] = t ** 3 / 6.0 * np.maximum.accumulate(lp1_v) \
            * sup_avg
    return out
