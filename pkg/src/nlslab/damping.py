"""Time-dependent damping coefficients and their averaged measurements.

A damping coefficient is a continuous function a(t) >= 0 on [0, infinity).
This module provides the built-in families, the running integral
A(t) = int_0^t a(s) ds, and grid estimates of three scalar measurements:

* sup average   sup_{t>0} A(t)/t
* inf average   inf_{t>0} A(t)/t
* weighted inf  inf_{t>0} A(t)/w(t) for a weight
  w(t) = t^alpha (1+t)^beta ln(1+t)^gamma exp(delta t^sigma)

All three are estimated by sampling on logarithmically spaced grids; the
estimates carry flags telling whether the extremizer sat on a boundary of the
sampled window (in which case the true sup/inf may live at 0+ or infinity).

The spike family deserves a remark: it is a train of triangular bumps
supported on [n, n + 1/(2 n^(exponent+1))] with slope 16 n^(exponent+2), so
the n-th bump has height 4n yet area n^(-exponent).  Its moments
int_n^(n+1) a^q have the closed form (2^(2q-1)/(q+1)) n^(q-exponent-1), which
the tests exploit.  General-purpose quadrature would step right over bumps
this narrow, so cumulative integration of this family always goes through the
exact piecewise formulas.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError, UsageError

KINDS = (
    "constant",
    "saturating",
    "polynomial-decay",
    "appendix-spike",
    "piecewise-linear",
    "zero",
)

# Default quadrature tolerance for numeric cumulative integration.
DEFAULT_QUADRATURE_TOL = 1e-10


@dataclass(frozen=True)
class DampingSpec:
    """A damping coefficient: a family name plus its single scalar parameter.

    ``param`` is the rate for constant/saturating, the decay exponent for
    polynomial-decay, and the spike exponent for appendix-spike.  The
    piecewise-linear family ignores ``param`` and uses ``table``, a tuple of
    (t, a) nodes with strictly increasing t.
    """

    kind: str
    param: float = 0.0
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown damping kind {self.kind!r}")
        if self.kind in ("constant", "saturating") and self.param < 0:
            raise ConfigurationError("damping rate must be nonnegative")
        if self.kind == "polynomial-decay" and self.param < 0:
            raise ConfigurationError("decay exponent must be nonnegative")
        if self.kind == "appendix-spike" and self.param <= 0:
            raise ConfigurationError("spike exponent must be positive")
        if self.kind == "piecewise-linear":
            if len(self.table) < 2:
                raise ConfigurationError("piecewise-linear table needs >= 2 nodes")
            ts = [t for t, _ in self.table]
            vals = [a for _, a in self.table]
            if any(not math.isfinite(t) or not math.isfinite(a)
                   for t, a in self.table):
                raise ConfigurationError("piecewise-linear table must be finite")
            if any(t1 >= t2 for t1, t2 in zip(ts, ts[1:])):
                raise ConfigurationError("table times must be strictly increasing")
            if min(vals) < 0:
                raise ConfigurationError("damping values must be nonnegative")
            if ts[0] < 0:
                raise ConfigurationError("table times must be nonnegative")


def constant(rate: float) -> DampingSpec:
    return DampingSpec("constant", float(rate))


def saturating(rate: float) -> DampingSpec:
    """a(t) = rate * (1 - exp(-t)): zero at t = 0, saturates at ``rate``."""
    return DampingSpec("saturating", float(rate))


def polynomial_decay(exponent: float) -> DampingSpec:
    """a(t) = (1 + t)^(-exponent)."""
    return DampingSpec("polynomial-decay", float(exponent))


def appendix_spike(exponent: float) -> DampingSpec:
    """Triangular spike train; see the module docstring."""
    return DampingSpec("appendix-spike", float(exponent))


def piecewise_linear(points: Sequence[tuple[float, float]]) -> DampingSpec:
    return DampingSpec("piecewise-linear",
                       table=tuple((float(t), float(a)) for t, a in points))


def zero() -> DampingSpec:
    return DampingSpec("zero")


def from_csv(path) -> DampingSpec:
    """Load a piecewise-linear coefficient from a two-column CSV.

    The file must carry the exact header ``t,a`` and strictly increasing
    times.  Between nodes the coefficient interpolates linearly; outside the
    tabulated range it extends by its boundary values, which keeps a(t)
    continuous on [0, infinity).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty damping table")
        if [c.strip() for c in header] != ["t", "a"]:
            raise ConfigurationError(f"{path}: expected header 't,a'")
        points = []
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ConfigurationError(f"{path}: expected two columns, got {row}")
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ConfigurationError(f"{path}: non-numeric entry {row}") from exc
    return piecewise_linear(points)


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def spike_function(exponent: float, t):
    """The spike-train coefficient h(t).

    Zero on [0, 1).  On [n, n+1] for integer n >= 1 it rises linearly with
    slope 16 n^(exponent+2) from t = n, peaks at height 4n after a half-width
    1/(4 n^(exponent+1)), descends symmetrically, and stays zero for the rest
    of the unit interval.
    """
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise UsageError("damping is defined for t >= 0")
    out = np.zeros_like(t_arr)
    n = np.floor(t_arr)
    mask = n >= 1.0
    if np.any(mask):
        nn = n[mask]
        u = t_arr[mask] - nn
        width = 0.5 * nn ** (-(exponent + 1.0))
        slope = 16.0 * nn ** (exponent + 2.0)
        rising = slope * u
        falling = slope * (width - u)
        out[mask] = np.where(u <= 0.5 * width, rising,
                             np.where(u < width, falling, 0.0))
    return float(out[0]) if scalar else out


def spike_moment(exponent: float, n: int, q: float) -> float:
    """Exact int_n^(n+1) h(t)^q dt for the spike family.

    Each bump consists of two linear ramps; integrating (slope*u)^q over each
    ramp gives slope^q * (width/2)^(q+1) / (q+1), and the two ramps are
    congruent.  Equals (2^(2q-1)/(q+1)) n^(q-exponent-1).
    """
    if n < 1:
        raise UsageError("spikes start at n = 1")
    if q <= 0:
        raise UsageError("moment order must be positive")
    slope = 16.0 * n ** (exponent + 2.0)
    half = 0.25 * n ** (-(exponent + 1.0))
    return 2.0 * slope ** q * half ** (q + 1.0) / (q + 1.0)


def _spike_cumulative(exponent: float, t):
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t_arr)
    n = np.floor(t_arr).astype(int)
    mask = n >= 1
    if np.any(mask):
        nmax = int(n.max())
        # areas of complete bumps 1..nmax; bump m has area m^(-exponent)
        areas = np.arange(1, nmax + 1, dtype=float) ** (-exponent)
        prefix = np.concatenate([[0.0], np.cumsum(areas)])
        nn = n[mask].astype(float)
        u = t_arr[mask] - nn
        width = 0.5 * nn ** (-(exponent + 1.0))
        slope = 16.0 * nn ** (exponent + 2.0)
        area = nn ** (-exponent)
        partial = np.where(
            u <= 0.5 * width,
            0.5 * slope * u ** 2,
            np.where(u < width, area - 0.5 * slope * (width - u) ** 2, area),
        )
        out[mask] = prefix[n[mask] - 1] + partial
    return float(out[0]) if scalar else out


def evaluate(spec: DampingSpec, t):
    """Evaluate a(t); accepts a scalar or an ndarray of times >= 0."""
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise UsageError("damping is defined for t >= 0")
    if spec.kind == "constant":
        out = np.full_like(t_arr, spec.param)
    elif spec.kind == "saturating":
        out = spec.param * (-np.expm1(-t_arr))
    elif spec.kind == "polynomial-decay":
        out = (1.0 + t_arr) ** (-spec.param)
    elif spec.kind == "appendix-spike":
        out = np.atleast_1d(spike_function(spec.param, t_arr))
    elif spec.kind == "piecewise-linear":
        ts = np.array([p[0] for p in spec.table])
        vals = np.array([p[1] for p in spec.table])
        out = np.interp(t_arr, ts, vals)
    else:  # zero
        out = np.zeros_like(t_arr)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# cumulative integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CumulativeDamping:
    """A damping coefficient together with its running integral A(t).

    Every built-in family has an exact closed form, used by default.  The
    adaptive-Simpson fallback is kept for cross-checks and custom work; it is
    never applied to the spike family, whose bumps are far narrower than any
    sensible initial subdivision.
    """

    spec: DampingSpec
    quadrature_tol: float = DEFAULT_QUADRATURE_TOL

    @cached_property
    def _table_arrays(self):
        ts = np.array([p[0] for p in self.spec.table])
        vals = np.array([p[1] for p in self.spec.table])
        # cumulative integral at the nodes; exact for a piecewise-linear a
        seg = 0.5 * (vals[1:] + vals[:-1]) * np.diff(ts)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return ts, vals, cum

    def __call__(self, t):
        return cumulative(self, t)


def as_cumulative(obj) -> CumulativeDamping:
    """Coerce a DampingSpec (or pass through a CumulativeDamping)."""
    if isinstance(obj, CumulativeDamping):
        return obj
    if isinstance(obj, DampingSpec):
        return CumulativeDamping(obj)
    raise UsageError(f"expected a damping spec, got {type(obj).__name__}")


def cumulative(cd: CumulativeDamping, t):
    """A(t) = int_0^t a(s) ds via the family's closed form."""
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise UsageError("cumulative damping is defined for t >= 0")
    spec = cd.spec
    if spec.kind == "constant":
        out = spec.param * t_arr
    elif spec.kind == "saturating":
        # int_0^t rate (1 - e^(-s)) ds = rate (t + expm1(-t)); the expm1
        # form keeps full relative precision where t^2/2 dominates
        out = spec.param * (t_arr + np.expm1(-t_arr))
    elif spec.kind == "polynomial-decay":
        theta = spec.param
        if theta == 1.0:
            out = np.log1p(t_arr)
        else:
            out = np.expm1((1.0 - theta) * np.log1p(t_arr)) / (1.0 - theta)
    elif spec.kind == "appendix-spike":
        out = np.atleast_1d(_spike_cumulative(spec.param, t_arr))
    elif spec.kind == "piecewise-linear":
        ts, vals, cum = cd._table_arrays
        # below the first node a(s) = vals[0]; above the last a(s) = vals[-1]
        idx = np.clip(np.searchsorted(ts, t_arr, side="right") - 1, -1, len(ts) - 1)
        out = np.empty_like(t_arr)
        below = idx < 0
        out[below] = vals[0] * t_arr[below]
        inside = ~below
        i = idx[inside]
        dt = t_arr[inside] - ts[i]
        # slope of a on segment i (0 beyond the last node)
        slope = np.zeros(len(ts))
        slope[:-1] = np.diff(vals) / np.diff(ts)
        out[inside] = vals[0] * ts[0] + cum[i] + vals[i] * dt + 0.5 * slope[i] * dt ** 2
    else:  # zero
        out = np.zeros_like(t_arr)
    return float(out[0]) if scalar else out


def integrate_adaptive(f, a: float, b: float, rel_tol: float = 1e-10,
                       max_depth: int = 48) -> float:
    """Adaptive Simpson quadrature of f over [a, b].

    Splits an interval until the usual |S_fine - S_coarse| <= 15 tol test
    passes, applying the one-step Richardson correction.  The error budget
    is absolute (rel_tol times the first whole-interval estimate), halved
    per split; a relative-to-segment budget would never terminate on kinks,
    where the error stays a fixed fraction of the shrinking segment.  Raises
    NumericalError if any interval still disagrees at ``max_depth``.
    """
    if b < a:
        raise UsageError("integration bounds must satisfy a <= b")
    if b == a:
        return 0.0

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    # seed with 32 panels, not one: a Simpson pair whose five samples all
    # land on zeros of a localized integrand would agree on garbage, and
    # the coarse pass also sets the absolute error budget
    xs = np.linspace(a, b, 65)
    fs = [float(f(x)) for x in xs]
    arr = np.abs(np.asarray(fs))
    scale = max(float(abs(np.trapezoid(fs, xs))),
                float(arr.max()) * (b - a) / 1024.0, 1e-300)
    tol0 = rel_tol * scale / 32.0

    total = 0.0
    stack = []
    for i in range(0, 64, 2):
        x0, x2 = xs[i], xs[i + 2]
        whole = simpson(x0, x2, fs[i], fs[i + 1], fs[i + 2])
        stack.append((x0, x2, fs[i], fs[i + 1], fs[i + 2],
                      whole, max_depth, tol0))
    while stack:
        x0, x2, f0, f1, f2, whole, depth, tol = stack.pop()
        xm = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + xm)
        rm = 0.5 * (xm + x2)
        flm, frm = f(lm), f(rm)
        left = simpson(x0, xm, f0, flm, f1)
        right = simpson(xm, x2, f1, frm, f2)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            total += left + right + err / 15.0
        elif depth <= 0:
            raise NumericalError(
                f"adaptive Simpson stalled on [{x0}, {x2}]: residual {abs(err):.3e}")
        else:
            stack.append((x0, xm, f0, flm, f1, left, depth - 1, tol / 2.0))
            stack.append((xm, x2, f1, frm, f2, right, depth - 1, tol / 2.0))
    return total


def cumulative_numeric(cd: CumulativeDamping, t: float) -> float:
    """A(t) by adaptive Simpson; cross-check path for the smooth families."""
    if cd.spec.kind == "appendix-spike":
        # quadrature would miss bumps of width ~ n^(-exponent-1); use the
        # exact piecewise formula instead
        return _spike_cumulative(cd.spec.param, float(t))
    return integrate_adaptive(lambda s: evaluate(cd.spec, s), 0.0, float(t),
                              rel_tol=cd.quadrature_tol)


# ---------------------------------------------------------------------------
# averaged measurements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightParams:
    """Exponents of the comparison weight t^alpha (1+t)^beta ln(1+t)^gamma e^(delta t^sigma)."""

    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0
    sigma: float = 1.0

    def weight(self, t):
        t_arr = np.asarray(t, dtype=float)
        w = t_arr ** self.alpha
        if self.beta != 0.0:
            w = w * (1.0 + t_arr) ** self.beta
        if self.gamma != 0.0:
            w = w * np.log1p(t_arr) ** self.gamma
        if self.delta != 0.0:
            w = w * np.exp(self.delta * t_arr ** self.sigma)
        return w


@dataclass(frozen=True)
class AverageEstimate:
    """Grid estimate of an extremal average.

    ``value`` is the extremum over the finest sampling level; ``levels`` holds
    the estimate at each nested refinement level (monotone by construction,
    since each level's samples contain the previous level's).  ``at_lower`` /
    ``at_upper`` flag an extremizer on the window boundary, meaning the true
    sup/inf may only be approached as t -> 0+ or t -> infinity.
    """

    value: float
    arg_t: float
    at_lower: bool
    at_upper: bool
    levels: tuple[float, ...]


def _sample_times(horizon: float, grid_points: int, t_min: float,
                  refine_levels: int) -> np.ndarray:
    if horizon <= 0 or t_min <= 0 or t_min >= horizon:
        raise UsageError("need 0 < t_min < horizon")
    if grid_points < 2:
        raise UsageError("need at least two sample points")
    n_fine = (grid_points - 1) * 2 ** (refine_levels - 1) + 1
    return np.geomspace(t_min, horizon, n_fine)


def _extremal_average(cd: CumulativeDamping, params: WeightParams,
                      horizon: float, grid_points: int, mode: str,
                      t_min: float, refine_levels: int) -> AverageEstimate:
    ts = _sample_times(horizon, grid_points, t_min, refine_levels)
    w = params.weight(ts)
    if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
        raise DomainError("weight vanishes or overflows at a sample point")
    ratio = cumulative(cd, ts) / w
    pick = np.argmax if mode == "sup" else np.argmin
    levels = []
    for lev in range(refine_levels):
        stride = 2 ** (refine_levels - 1 - lev)
        levels.append(float(ratio[::stride][pick(ratio[::stride])]))
    idx = int(pick(ratio))
    return AverageEstimate(
        value=float(ratio[idx]),
        arg_t=float(ts[idx]),
        at_lower=idx == 0,
        at_upper=idx == len(ts) - 1,
        levels=tuple(levels),
    )


def sup_average(cd: CumulativeDamping, horizon: float, grid_points: int = 512,
                t_min: float = 1e-8, refine_levels: int = 3) -> AverageEstimate:
    """Estimate sup_{t>0} A(t)/t by log-spaced sampling of (0, horizon].

    This is a grid estimate, not a certified supremum; consult the boundary
    flags before trusting it as one.
    """
    return _extremal_average(cd, WeightParams(), horizon, grid_points, "sup",
                             t_min, refine_levels)


def inf_average(cd: CumulativeDamping, horizon: float, grid_points: int = 512,
                t_min: float = 1e-8, refine_levels: int = 3) -> AverageEstimate:
    """Estimate inf_{t>0} A(t)/t on the same sampling scheme as sup_average."""
    return _extremal_average(cd, WeightParams(), horizon, grid_points, "inf",
                             t_min, refine_levels)


def weighted_inf_average(cd: CumulativeDamping, params: WeightParams,
                         horizon: float, grid_points: int = 512,
                         t_min: float = 1e-8,
                         refine_levels: int = 3) -> AverageEstimate:
    """Estimate inf_{t>0} A(t)/w(t) for a comparison weight w.

    With params (1, 0, 0, 0, *) the weight is w(t) = t and the result
    coincides sample-for-sample with inf_average.
    """
    return _extremal_average(cd, params, horizon, grid_points, "inf",
                             t_min, refine_levels)


def classify_monotonicity(spec: DampingSpec, horizon: float,
                          grid_points: int = 4096) -> str:
    """Sampled monotonicity verdict on [0, horizon].

    Returns 'non-decreasing', 'non-increasing', or 'neither', using a 1e-12
    tolerance on successive differences.  A constant coefficient satisfies
    both and reports 'non-decreasing' by convention.  The verdict is only as
    good as the sampling: features narrower than the grid spacing are missed.
    """
    ts = np.linspace(0.0, horizon, grid_points)
    diffs = np.diff(evaluate(spec, ts))
    tol = 1e-12
    if np.all(diffs >= -tol):
        return "non-decreasing"
    if np.all(diffs <= tol):
        return "non-increasing"
    return "neither"
