"""Monitored functionals, the radial cutoff calculus, and diagnostics rows.

For a field u on the box and exponent p > 1 the monitored quantities are

    M = int |u|^2                    mass
    E = |grad u|^2 - 2/(p+1) int |u|^(p+1)      energy
    I = |grad u|^2 - int |u|^(p+1)              Nehari functional
    K = int |x|^2 |u|^2              variance
    V = Im int (x . grad u) conj(u)  virial momentum
    P = |grad u|^2 - N(p-1)/(2(p+1)) int |u|^(p+1)   Pohozaev functional

and, for the gauged field v = e^(A(t)) u,

    H(v) = |grad v|^2 - 2/(p+1) e^((1-p)A(t)) int |v|^(p+1).

The cutoff calculus builds the radial weight phi_R used by the localized
virial argument.  Its seed profile zeta is: 2r on [0,1]; 2[r - (r-1)^5] on
(1, 1+5^(-1/4)]; a decreasing quintic bridge on (1+5^(-1/4), 2) that clamps
value and first two derivatives at both ends; 0 beyond 2.  Then
Theta(r) = int_0^r zeta and phi_R(r) = R^2 Theta(r/R), so phi_R(r) = r^2
inside radius R and phi_R is constant beyond 2R.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import damping as dmp
from .errors import DomainError, UsageError
from .grid import Field, Grid, boundary_mass_fraction, gradient, integrate

# ---------------------------------------------------------------------------
# plain functionals
# ---------------------------------------------------------------------------


def _check_p(p: float) -> None:
    if p <= 1.0:
        raise UsageError("nonlinearity exponent must satisfy p > 1")


def mass(field: Field) -> float:
    return integrate(field.grid, np.abs(field.values) ** 2)


def grad_norm_sq(field: Field) -> float:
    dens = np.zeros(field.grid.shape)
    for g in gradient(field):
        dens += np.abs(g.values) ** 2
    return integrate(field.grid, dens)


def lp1_integral(field: Field, p: float) -> float:
    """int |u|^(p+1)."""
    _check_p(p)
    return integrate(field.grid, np.abs(field.values) ** (p + 1.0))


def energy(field: Field, p: float) -> float:
    _check_p(p)
    return grad_norm_sq(field) - 2.0 / (p + 1.0) * lp1_integral(field, p)


def nehari(field: Field, p: float) -> float:
    _check_p(p)
    return grad_norm_sq(field) - lp1_integral(field, p)


def pohozaev(field: Field, p: float) -> float:
    _check_p(p)
    N = field.grid.dim
    return grad_norm_sq(field) - N * (p - 1.0) / (2.0 * (p + 1.0)) \
        * lp1_integral(field, p)


def variance(field: Field) -> float:
    return integrate(field.grid, field.grid.radius_sq * np.abs(field.values) ** 2)


def virial(field: Field) -> float:
    """V = Im int (x . grad u) conj(u)."""
    acc = np.zeros(field.grid.shape)
    conj = np.conj(field.values)
    for ax, g in enumerate(gradient(field)):
        acc += np.imag(field.grid.coordinate_mesh(ax) * g.values * conj)
    return integrate(field.grid, acc)


def h1_norm_sq(field: Field) -> float:
    return mass(field) + grad_norm_sq(field)


def gauge_hamiltonian(v: Field, t: float, cd: dmp.CumulativeDamping,
                      p: float) -> float:
    """H(v) at time t; its time derivative has one sign (nonnegative)."""
    _check_p(p)
    damp = np.exp((1.0 - p) * dmp.cumulative(cd, t))
    return grad_norm_sq(v) - 2.0 / (p + 1.0) * damp * lp1_integral(v, p)


def gn_sigma(dim: int, p: float) -> float:
    """Interpolation exponent N(p-1)/(2(p+1)) of the Gagliardo-Nirenberg bound."""
    _check_p(p)
    return dim * (p - 1.0) / (2.0 * (p + 1.0))


def gn_ratio(field: Field, p: float) -> float:
    """||f||_(p+1) / (||f||_2^(1-sigma) ||grad f||_2^sigma); finite over H1 \\ {0}."""
    _check_p(p)
    m = mass(field)
    g = grad_norm_sq(field)
    if m == 0.0 or g == 0.0:
        raise DomainError("Gagliardo-Nirenberg ratio needs a nonzero field")
    sigma = gn_sigma(field.grid.dim, p)
    lp1 = lp1_integral(field, p) ** (1.0 / (p + 1.0))
    return lp1 / (m ** (0.5 * (1.0 - sigma)) * g ** (0.5 * sigma))


# ---------------------------------------------------------------------------
# diagnostics rows
# ---------------------------------------------------------------------------

DIAGNOSTICS_HEADER = "t,M,E,I,K,V,P,H,grad2,bmf"


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One monitored row.  ``lp1`` is int |u|^(p+1), kept for reconstruction
    of the nonlinear terms; it is implied by (E, grad_sq) and not serialized."""

    t: float
    mass: float
    energy: float
    nehari: float
    variance: float
    virial: float
    pohozaev: float
    hamiltonian: float
    grad_sq: float
    boundary_fraction: float
    lp1: float

    def boundary_flagged(self, threshold: float = 1e-6) -> bool:
        """Whether K and V should be read with suspicion on this row."""
        return self.boundary_fraction > threshold


def diagnostics(u: Field, t: float, cd: dmp.CumulativeDamping,
                p: float) -> DiagnosticsRecord:
    """Evaluate every monitored functional of u(t) in one pass."""
    _check_p(p)
    grad2 = grad_norm_sq(u)
    lp1 = lp1_integral(u, p)
    N = u.grid.dim
    e_val = grad2 - 2.0 / (p + 1.0) * lp1
    # H(v) for v = e^{A} u collapses to e^{2A} E(u): the two gauge factors
    # on the nonlinear term cancel to the same e^{2A}
    big_a = dmp.cumulative(cd, t)
    return DiagnosticsRecord(
        t=float(t),
        mass=mass(u),
        energy=e_val,
        nehari=grad2 - lp1,
        variance=variance(u),
        virial=virial(u),
        pohozaev=grad2 - N * (p - 1.0) / (2.0 * (p + 1.0)) * lp1,
        hamiltonian=float(np.exp(2.0 * big_a) * e_val),
        grad_sq=grad2,
        boundary_fraction=boundary_mass_fraction(u),
        lp1=lp1,
    )


def write_diagnostics_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write(DIAGNOSTICS_HEADER + "\n")
        for r in records:
            fh.write(",".join(repr(float(x)) for x in (
                r.t, r.mass, r.energy, r.nehari, r.variance, r.virial,
                r.pohozaev, r.hamiltonian, r.grad_sq, r.boundary_fraction))
                + "\n")


def read_diagnostics_csv(path, p: float):
    """Read rows back; lp1 is reconstructed from (grad2 - E)(p+1)/2."""
    _check_p(p)
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != DIAGNOSTICS_HEADER:
            raise UsageError(f"{path}: unexpected diagnostics header")
        for row in reader:
            t, m, e, i, k, v, pq, h, g2, bmf = map(float, row)
            out.append(DiagnosticsRecord(
                t=t, mass=m, energy=e, nehari=i, variance=k, virial=v,
                pohozaev=pq, hamiltonian=h, grad_sq=g2, boundary_fraction=bmf,
                lp1=(g2 - e) * (p + 1.0) / 2.0))
    return out


# ---------------------------------------------------------------------------
# cutoff calculus
# ---------------------------------------------------------------------------

ZETA_KNOT = 1.0 + 5.0 ** -0.25  # seam between the quintic drop and the bridge


def _bridge_polynomials():
    """Quintic on [ZETA_KNOT, 2] clamping (value, d1, d2) at both ends.

    Solved in the unit variable s = (r - ZETA_KNOT)/w: raw powers of r
    near 2 produce coefficients ~1e4 whose cancellation leaves ~1e-11 of
    noise on every evaluation.
    """
    r1 = ZETA_KNOT
    w = 2.0 - r1
    val = 2.0 * (r1 - (r1 - 1.0) ** 5)
    d2 = -40.0 * (r1 - 1.0) ** 3
    rows, rhs = [], []
    # constraints on q(s) = zeta(r1 + w s), so q'' = w^2 zeta''
    for s, targets in ((0.0, (val, 0.0, d2 * w * w)), (1.0, (0.0, 0.0, 0.0))):
        rows.append([s ** k for k in range(6)])
        rows.append([k * s ** (k - 1) if k >= 1 else 0.0 for k in range(6)])
        rows.append([k * (k - 1) * s ** (k - 2) if k >= 2 else 0.0
                     for k in range(6)])
        rhs.extend(targets)
    coeffs = np.linalg.solve(np.array(rows), np.array(rhs))
    q = np.polynomial.Polynomial(coeffs)
    q1, q2, q3, qi = q.deriv(), q.deriv(2), q.deriv(3), q.integ()

    def to_s(r):
        return (np.asarray(r, dtype=float) - r1) / w

    def bridge(r):
        return q(to_s(r))

    def bridge_d1(r):
        return q1(to_s(r)) / w

    def bridge_d2(r):
        return q2(to_s(r)) / w ** 2

    def bridge_d3(r):
        return q3(to_s(r)) / w ** 3

    def bridge_antiderivative(r):
        # antiderivative in r, up to a constant; only differences are used
        return w * qi(to_s(r))

    return bridge, bridge_d1, bridge_d2, bridge_d3, bridge_antiderivative


_BRIDGE, _BRIDGE_D1, _BRIDGE_D2, _BRIDGE_D3, _BRIDGE_INT = _bridge_polynomials()
_THETA_KNOT = ZETA_KNOT ** 2 - (ZETA_KNOT - 1.0) ** 6 / 3.0
_THETA_END = _THETA_KNOT + float(_BRIDGE_INT(2.0) - _BRIDGE_INT(ZETA_KNOT))


def _piecewise(r, inner, middle, bridge, outer_value=0.0):
    scalar = np.ndim(r) == 0
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    conds = [r_arr <= 1.0,
             (r_arr > 1.0) & (r_arr <= ZETA_KNOT),
             (r_arr > ZETA_KNOT) & (r_arr < 2.0)]
    # evaluate each branch on a clipped argument so no branch sees points
    # outside its domain (the bridge polynomial grows fast outside [knot, 2])
    vals = [inner(np.minimum(r_arr, 1.0)),
            middle(np.clip(r_arr, 1.0, ZETA_KNOT)),
            bridge(np.clip(r_arr, ZETA_KNOT, 2.0))]
    out = np.select(conds, vals, default=outer_value)
    return float(out[0]) if scalar else out


def cutoff_zeta(r):
    """The seed profile zeta; continuous with two continuous derivatives."""
    return _piecewise(r,
                      lambda x: 2.0 * x,
                      lambda x: 2.0 * (x - (x - 1.0) ** 5),
                      _BRIDGE)


def cutoff_zeta_d1(r):
    return _piecewise(r,
                      lambda x: np.full_like(x, 2.0),
                      lambda x: 2.0 * (1.0 - 5.0 * (x - 1.0) ** 4),
                      _BRIDGE_D1)


def cutoff_zeta_d2(r):
    return _piecewise(r,
                      lambda x: np.zeros_like(x),
                      lambda x: -40.0 * (x - 1.0) ** 3,
                      _BRIDGE_D2)


def cutoff_zeta_d3(r):
    # discontinuous at the seams; used only inside integrals
    return _piecewise(r,
                      lambda x: np.zeros_like(x),
                      lambda x: -120.0 * (x - 1.0) ** 2,
                      _BRIDGE_D3)


def cutoff_theta(r):
    """Theta(r) = int_0^r zeta(s) ds, evaluated branchwise in closed form."""
    return _piecewise(
        r,
        lambda x: x ** 2,
        lambda x: x ** 2 - (x - 1.0) ** 6 / 3.0,
        lambda x: _THETA_KNOT + (_BRIDGE_INT(x) - _BRIDGE_INT(ZETA_KNOT)),
        outer_value=_THETA_END)


@dataclass(frozen=True)
class CutoffProfile:
    """The rescaled weight phi_R(r) = R^2 Theta(r/R) and its derivatives.

    phi_R agrees with r^2 for r <= R and is constant for r >= 2R, so the
    second radial derivative phi'' = zeta'(r/R) never exceeds 2 but does dip
    negative on the bridge branch.
    """

    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise UsageError("cutoff radius must be positive")

    def phi(self, r):
        return self.R ** 2 * cutoff_theta(np.asarray(r, float) / self.R)

    def dphi(self, r):
        return self.R * cutoff_zeta(np.asarray(r, float) / self.R)

    def d2phi(self, r):
        return cutoff_zeta_d1(np.asarray(r, float) / self.R)

    def dphi_over_r(self, r):
        """phi'(r)/r, continued by its limit 2 at the origin."""
        r_arr = np.asarray(r, dtype=float)
        rho = r_arr / self.R
        inner = rho <= 1.0
        out = np.where(inner, 2.0,
                       self.R * cutoff_zeta(np.maximum(rho, 1.0))
                       / np.maximum(r_arr, self.R))
        return float(out) if np.ndim(r) == 0 else out

    def laplacian(self, r, dim: int):
        """phi'' + (dim-1) phi'/r."""
        return self.d2phi(r) + (dim - 1) * self.dphi_over_r(r)

    def bilaplacian(self, r, dim: int):
        """Radial bilaplacian; identically zero where phi is r^2 or constant."""
        r_arr = np.asarray(r, dtype=float)
        rho = r_arr / self.R
        trivial = (rho <= 1.0) | (rho >= 2.0)
        safe_r = np.where(trivial, self.R, r_arr)
        rho_c = np.clip(rho, 1.0, 2.0)
        d1 = self.R * cutoff_zeta(rho_c)
        d2 = cutoff_zeta_d1(rho_c)
        d3 = cutoff_zeta_d2(rho_c) / self.R
        d4 = cutoff_zeta_d3(rho_c) / self.R ** 2
        n1 = dim - 1
        out = d4 + 2.0 * n1 * d3 / safe_r \
            + n1 * (dim - 3) * (d2 / safe_r ** 2 - d1 / safe_r ** 3)
        out = np.where(trivial, 0.0, out)
        return float(out) if np.ndim(r) == 0 else out

    def phi1(self, r):
        """2 - phi''; nonnegative everywhere."""
        return 2.0 - self.d2phi(r)

    def phi2(self, r, dim: int):
        """2 dim - Laplacian(phi); nonnegative everywhere."""
        return 2.0 * dim - self.laplacian(r, dim)


def mass_critical_epsilon0(dim: int, samples: int = 20000,
                           rho_max: float = 4.0) -> float:
    """Largest eps with 4 phi1 - eps phi2^(dim/2) >= 0 outside the unit ball.

    Found as the sampled infimum of 4 phi1 / phi2^(dim/2) over rho > 1; the
    ratio is scale-free in R, tends to 4 as rho -> 1+ and is constant
    8/(2 dim)^(dim/2) beyond rho = 2, so a fine grid on (1, rho_max] suffices.
    """
    prof = CutoffProfile(1.0)
    rho = 1.0 + (rho_max - 1.0) * (np.arange(1, samples + 1) / samples)
    num = 4.0 * prof.phi1(rho)
    den = prof.phi2(rho, dim) ** (dim / 2.0)
    if np.any(den <= 0.0):
        raise DomainError("phi2 must stay positive outside the unit ball")
    return float(np.min(num / den))


# ---------------------------------------------------------------------------
# localized virial
# ---------------------------------------------------------------------------

def localized_virial(v: Field, profile: CutoffProfile) -> float:
    """int phi_R(|x|) |v|^2."""
    r = np.sqrt(v.grid.radius_sq)
    return integrate(v.grid, profile.phi(r) * np.abs(v.values) ** 2)


def localized_virial_first(v: Field, profile: CutoffProfile) -> float:
    """First time derivative of the localized virial:

        2 Im int grad(phi_R) . grad(v) conj(v)
          = 2 Im int phi'(r)/r (x . grad v) conj(v).

    With phi = |x|^2 this is 4 virial(v)."""
    grid = v.grid
    r = np.sqrt(grid.radius_sq)
    grads = gradient(v)
    dot = np.zeros(grid.shape, dtype=complex)
    for ax, g in enumerate(grads):
        dot += grid.coordinate_mesh(ax) * g.values
    density = profile.dphi_over_r(r) * (dot * np.conj(v.values)).imag
    return 2.0 * integrate(grid, density)


def localized_virial_second(v: Field, t: float, cd: dmp.CumulativeDamping,
                            p: float, profile: CutoffProfile | None = None
                            ) -> float:
    """Second time derivative of the (localized) virial, from the identity

        - int Lap^2(phi) |v|^2
        + 4 Re sum_jk int d2phi/dxj dxk  djv conj(dkv)
        - 2(p-1)/(p+1) e^((1-p)A) int Lap(phi) |v|^(p+1)

    With ``profile`` None the weight is phi = |x|^2 and the expression
    collapses to 8 |grad v|^2 - 4N(p-1)/(p+1) e^((1-p)A) int |v|^(p+1).
    """
    _check_p(p)
    grid = v.grid
    N = grid.dim
    damp = float(np.exp((1.0 - p) * dmp.cumulative(cd, t)))
    coeff = 2.0 * (p - 1.0) / (p + 1.0)
    if profile is None:
        return 8.0 * grad_norm_sq(v) \
            - coeff * damp * 2.0 * N * lp1_integral(v, p)

    r = np.sqrt(grid.radius_sq)
    grads = gradient(v)
    grad_density = np.zeros(grid.shape)
    for g in grads:
        grad_density += np.abs(g.values) ** 2
    # radial part of the gradient, with x/r continued by zero at the origin
    safe_r = np.where(r == 0.0, 1.0, r)
    radial = np.zeros(grid.shape, dtype=complex)
    for ax, g in enumerate(grads):
        radial += np.where(r == 0.0, 0.0,
                           grid.coordinate_mesh(ax) / safe_r) * g.values
    c1 = profile.dphi_over_r(r)
    c2 = profile.d2phi(r) - c1
    hessian_form = c1 * grad_density + c2 * np.abs(radial) ** 2
    bil = profile.bilaplacian(r, N)
    lap = profile.laplacian(r, N)
    dens = np.abs(v.values) ** 2
    nl = np.abs(v.values) ** (p + 1.0)
    return (-integrate(grid, bil * dens)
            + 4.0 * integrate(grid, hessian_form)
            - coeff * damp * integrate(grid, lap * nl))
