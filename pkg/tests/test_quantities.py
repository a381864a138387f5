"""Monitored functionals, cutoff calculus, and the localized virial."""

import numpy as np
import pytest

import nlslab as nl
from nlslab import damping as dmp
from nlslab import quantities as qt
from nlslab.errors import DomainError, UsageError

from oracles import gaussian_moments


GRIDS = {1: nl.Grid(1, 16.0, 256), 2: nl.Grid(2, 12.0, 128), 3: nl.Grid(3, 10.0, 64)}


def gaussian_field(dim, amplitude=1.0, width=1.0, chirp=0.0):
    # phase e^{-i b r^2}, matching the convention of the moment oracle
    g = GRIDS[dim]
    return nl.Field(g, amplitude * np.exp(-g.radius_sq / (2.0 * width**2))
                    * np.exp(-1j * chirp * g.radius_sq))


# ---------------------------------------------------------------------------
# moment functionals against closed forms
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("dim, p, amplitude, width, chirp", [
    (1, 3.0, 1.0, 1.0, 0.0),
    (1, 3.0, 1.0, 1.0, 1.0),
    (1, 2.0, 0.7, 1.5, -0.4),
    (2, 3.0, 1.2, 1.0, 0.5),
    (2, 4.0, 1.0, 0.8, 0.0),
    (3, 3.0, 0.9, 1.1, 0.3),
])
def test_gaussian_moments_match_closed_forms(dim, p, amplitude, width, chirp):
    u = gaussian_field(dim, amplitude, width, chirp)
    want = gaussian_moments(dim, p, amplitude, width, chirp)
    assert nl.mass(u) == pytest.approx(want["mass"], rel=1e-10)
    assert nl.variance(u) == pytest.approx(want["variance"], rel=1e-10)
    assert nl.grad_norm_sq(u) == pytest.approx(want["grad_sq"], rel=1e-10)
    assert nl.lp1_integral(u, p) == pytest.approx(want["lp1"], rel=1e-10)
    assert nl.energy(u, p) == pytest.approx(want["energy"], rel=1e-9)
    assert nl.nehari(u, p) == pytest.approx(want["nehari"], rel=1e-9)
    assert nl.pohozaev(u, p) == pytest.approx(want["pohozaev"], rel=1e-9)
    if chirp == 0.0:
        assert abs(nl.virial(u)) < 1e-12
    else:
        assert nl.virial(u) == pytest.approx(want["virial"], rel=1e-10)


def test_unit_gaussian_cubic_energy():
    # E = sqrt(pi)/2 - sqrt(2 pi)/4 for the unit-width real Gaussian at p=3
    u = gaussian_field(1)
    assert nl.energy(u, 3.0) == pytest.approx(0.2595698568, abs=1e-9)


def test_virial_conjugation_flips_sign():
    u = gaussian_field(1, chirp=1.0)
    ubar = nl.Field(u.grid, np.conj(u.values))
    assert nl.virial(ubar) == pytest.approx(-nl.virial(u), rel=1e-12)
    # V = -2 b K for the inward-chirped Gaussian; K = sqrt(pi)/2 here
    assert nl.virial(u) == pytest.approx(-np.sqrt(np.pi), rel=1e-10)


def test_functional_linear_relations():
    # I and P are fixed combinations of grad2 and the p+1 integral
    u = gaussian_field(2, amplitude=1.3, width=0.9, chirp=0.2)
    p = 3.0
    g2 = nl.grad_norm_sq(u)
    lp1 = nl.lp1_integral(u, p)
    assert nl.nehari(u, p) == pytest.approx(g2 - lp1, rel=1e-12)
    assert nl.energy(u, p) == pytest.approx(g2 - 0.5 * lp1, rel=1e-12)
    assert nl.pohozaev(u, p) == pytest.approx(g2 - 0.5 * lp1, rel=1e-12)
    assert nl.h1_norm_sq(u) == pytest.approx(nl.mass(u) + g2, rel=1e-14)


def test_exponent_validation():
    u = gaussian_field(1)
    for fn in (nl.lp1_integral, nl.energy, nl.nehari, nl.pohozaev):
        with pytest.raises(UsageError):
            fn(u, 1.0)


# ---------------------------------------------------------------------------
# gauge hamiltonian
# ---------------------------------------------------------------------------

def test_gauge_hamiltonian_reduces_to_energy():
    u = gaussian_field(1, chirp=0.5)
    cd = dmp.CumulativeDamping(nl.constant(0.7))
    assert nl.gauge_hamiltonian(u, 0.0, cd, 3.0) == \
        pytest.approx(nl.energy(u, 3.0), rel=1e-14)
    free = dmp.CumulativeDamping(nl.constant(0.0))
    assert nl.gauge_hamiltonian(u, 5.0, free, 3.0) == \
        pytest.approx(nl.energy(u, 3.0), rel=1e-14)


def test_gauge_hamiltonian_constant_damping():
    u = gaussian_field(1)
    p, a, t = 3.0, 0.5, 2.0
    cd = dmp.CumulativeDamping(nl.constant(a))
    want = nl.grad_norm_sq(u) \
        - 0.5 * np.exp((1.0 - p) * a * t) * nl.lp1_integral(u, p)
    assert nl.gauge_hamiltonian(u, t, cd, p) == pytest.approx(want, rel=1e-12)


# ---------------------------------------------------------------------------
# interpolation quotient
# ---------------------------------------------------------------------------

def test_gn_sigma_values():
    assert nl.gn_sigma(3, 3.0) == pytest.approx(0.75)
    assert nl.gn_sigma(2, 3.0) == pytest.approx(0.5)
    assert nl.gn_sigma(1, 5.0) == pytest.approx(1.0 / 3.0)


def test_gn_ratio_scale_and_dilation_invariant():
    # the quotient ignores amplitude and width separately
    base = nl.gn_ratio(gaussian_field(1, 1.0, 1.0), 3.0)
    for amplitude, width in [(2.5, 1.0), (1.0, 0.5), (0.3, 2.0)]:
        other = nl.gn_ratio(gaussian_field(1, amplitude, width), 3.0)
        assert other == pytest.approx(base, rel=1e-10)


def test_gn_ratio_closed_form():
    dim, p = 2, 3.0
    m = gaussian_moments(dim, p, 1.1, 0.9, 0.0)
    sigma = nl.gn_sigma(dim, p)
    want = m["lp1"] ** (1.0 / (p + 1.0)) \
        / (m["mass"] ** (0.5 * (1.0 - sigma)) * m["grad_sq"] ** (0.5 * sigma))
    got = nl.gn_ratio(gaussian_field(dim, 1.1, 0.9), p)
    assert got == pytest.approx(want, rel=1e-10)


def test_gn_ratio_drops_under_chirp():
    # a chirp adds gradient energy without changing |u|, so the quotient falls
    assert nl.gn_ratio(gaussian_field(1, chirp=1.0), 3.0) \
        < nl.gn_ratio(gaussian_field(1), 3.0)


def test_gn_ratio_zero_field():
    with pytest.raises(DomainError):
        nl.gn_ratio(nl.zero_field(GRIDS[1]), 3.0)


# ---------------------------------------------------------------------------
# diagnostics rows
# ---------------------------------------------------------------------------

def test_diagnostics_agrees_with_functionals():
    u = gaussian_field(2, 1.2, 1.0, 0.5)
    cd = dmp.CumulativeDamping(nl.constant(0.4))
    p, t = 3.0, 1.5
    rec = nl.diagnostics(u, t, cd, p)
    assert rec.mass == pytest.approx(nl.mass(u), rel=1e-14)
    assert rec.energy == pytest.approx(nl.energy(u, p), rel=1e-14)
    assert rec.nehari == pytest.approx(nl.nehari(u, p), rel=1e-14)
    assert rec.variance == pytest.approx(nl.variance(u), rel=1e-14)
    assert rec.virial == pytest.approx(nl.virial(u), rel=1e-14)
    assert rec.pohozaev == pytest.approx(nl.pohozaev(u, p), rel=1e-14)
    assert rec.grad_sq == pytest.approx(nl.grad_norm_sq(u), rel=1e-14)
    assert rec.lp1 == pytest.approx(nl.lp1_integral(u, p), rel=1e-14)
    # H(v) with v = e^A u collapses to e^{2A} E(u)
    assert rec.hamiltonian == pytest.approx(
        np.exp(2.0 * 0.4 * t) * rec.energy, rel=1e-12)
    assert not rec.boundary_flagged()


def test_diagnostics_csv_roundtrip(tmp_path):
    cd = dmp.CumulativeDamping(nl.constant(0.3))
    p = 3.0
    rows = [nl.diagnostics(gaussian_field(1, a, w, b), t, cd, p)
            for t, a, w, b in [(0.0, 1.0, 1.0, 0.0),
                               (0.5, 0.8, 1.2, 0.3),
                               (1.0, 0.6, 1.5, -0.2)]]
    path = tmp_path / "diag.csv"
    nl.write_diagnostics_csv(rows, path)
    assert path.read_text().splitlines()[0] == qt.DIAGNOSTICS_HEADER
    back = nl.read_diagnostics_csv(path, p)
    assert len(back) == len(rows)
    for got, want in zip(back, rows):
        for name in ("t", "mass", "energy", "nehari", "variance", "virial",
                     "pohozaev", "hamiltonian", "grad_sq", "boundary_fraction"):
            assert getattr(got, name) == getattr(want, name)
        # lp1 is not serialized; reconstructed from (grad2 - E)(p+1)/2
        assert got.lp1 == pytest.approx(want.lp1, rel=1e-12)


def test_diagnostics_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(UsageError, match="header"):
        nl.read_diagnostics_csv(path, 3.0)


# ---------------------------------------------------------------------------
# cutoff profile
# ---------------------------------------------------------------------------

def test_zeta_branch_values():
    assert qt.cutoff_zeta(0.0) == 0.0
    assert qt.cutoff_zeta(0.5) == 1.0
    assert qt.cutoff_zeta(1.0) == 2.0
    assert qt.cutoff_zeta(2.0) == 0.0
    assert qt.cutoff_zeta(3.7) == 0.0
    # derivative vanishes where the quintic drop hands over to the bridge
    assert qt.cutoff_zeta_d1(qt.ZETA_KNOT) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seam", [1.0, qt.ZETA_KNOT, 2.0])
def test_zeta_is_c2_across_seams(seam):
    # a missing clamp would show up as an O(1) jump; the loose d2 tolerance
    # absorbs the bridge's steep third derivative
    h = 1e-7
    for fn, tol in ((qt.cutoff_zeta, 1e-6), (qt.cutoff_zeta_d1, 1e-4),
                    (qt.cutoff_zeta_d2, 5e-3)):
        assert abs(fn(seam + h) - fn(seam - h)) < tol


def test_zeta_derivatives_by_finite_differences():
    rng = np.random.default_rng(3)
    r = rng.uniform(0.05, 2.5, size=64)
    # keep clear of the seams so central differences see one branch
    for s in (1.0, qt.ZETA_KNOT, 2.0):
        r = r[np.abs(r - s) > 1e-3]
    h = 1e-6
    d1 = (qt.cutoff_zeta(r + h) - qt.cutoff_zeta(r - h)) / (2.0 * h)
    assert np.max(np.abs(d1 - qt.cutoff_zeta_d1(r))) < 1e-7
    d2 = (qt.cutoff_zeta_d1(r + h) - qt.cutoff_zeta_d1(r - h)) / (2.0 * h)
    assert np.max(np.abs(d2 - qt.cutoff_zeta_d2(r))) < 1e-6


def test_theta_integrates_zeta():
    assert qt.cutoff_theta(0.7) == pytest.approx(0.49, rel=1e-14)
    r = np.linspace(0.1, 2.8, 271)
    h = 1e-6
    d = (qt.cutoff_theta(r + h) - qt.cutoff_theta(r - h)) / (2.0 * h)
    assert np.max(np.abs(d - qt.cutoff_zeta(r))) < 1e-8
    # constant past the support of zeta
    assert qt.cutoff_theta(2.0) == qt.cutoff_theta(10.0)


def test_profile_matches_square_inside_and_freezes_outside():
    prof = qt.CutoffProfile(3.0)
    r_in = np.linspace(0.0, 3.0, 61)
    assert np.max(np.abs(prof.phi(r_in) - r_in**2)) < 1e-12
    assert prof.phi(6.0) == prof.phi(9.5)
    assert prof.dphi(7.0) == 0.0
    assert prof.dphi_over_r(0.0) == 2.0


def test_profile_global_bounds():
    prof = qt.CutoffProfile(2.0)
    r = np.linspace(1e-9, 8.0, 4001)
    assert np.all(prof.dphi(r) <= 2.0 * r + 1e-12)
    assert np.all(prof.d2phi(r) <= 2.0 + 1e-12)
    assert np.all(prof.phi1(r) >= -1e-12)
    for dim in (1, 2, 3):
        assert np.all(prof.laplacian(r, dim) <= 2.0 * dim + 1e-12)
        assert np.all(prof.phi2(r, dim) >= -1e-12)
    # phi'' does dip negative on the bridge branch
    assert np.min(prof.d2phi(r)) < 0.0


def test_profile_bilaplacian_support():
    prof = qt.CutoffProfile(2.0)
    assert prof.bilaplacian(1.0, 3) == 0.0
    assert prof.bilaplacian(5.0, 3) == 0.0
    assert prof.bilaplacian(3.0, 3) != 0.0


def test_profile_rejects_bad_radius():
    with pytest.raises(UsageError):
        qt.CutoffProfile(0.0)


@pytest.mark.parametrize("dim", [2, 3])
def test_mass_critical_epsilon0(dim):
    eps0 = nl.mass_critical_epsilon0(dim)
    assert eps0 > 0.0
    # the ratio is constant 8/(2 dim)^(dim/2) beyond rho = 2
    assert eps0 <= 8.0 / (2.0 * dim) ** (dim / 2.0) + 1e-12
    prof = qt.CutoffProfile(1.0)
    rho = np.linspace(1.0 + 1e-6, 6.0, 5001)
    margin = 4.0 * prof.phi1(rho) - eps0 * prof.phi2(rho, dim) ** (dim / 2.0)
    assert np.min(margin) > -1e-10


# ---------------------------------------------------------------------------
# localized virial
# ---------------------------------------------------------------------------

def test_localized_virial_recovers_variance_for_large_radius():
    u = gaussian_field(1)
    prof = qt.CutoffProfile(8.0)
    assert nl.localized_virial(u, prof) == \
        pytest.approx(nl.variance(u), rel=1e-12)
    assert nl.localized_virial(nl.zero_field(u.grid), prof) == 0.0


def test_localized_virial_against_adaptive_quadrature():
    # small cutoff radius so the weight really truncates the Gaussian
    g = nl.Grid(1, 16.0, 1024)
    u = nl.Field(g, np.exp(-g.radius_sq / 2.0))
    prof = qt.CutoffProfile(1.5)
    want = dmp.integrate_adaptive(
        lambda x: prof.phi(abs(x)) * np.exp(-x * x), -16.0, 16.0)
    assert nl.localized_virial(u, prof) == pytest.approx(want, rel=1e-7)


def test_localized_virial_first_reduces_to_virial():
    u = gaussian_field(1, chirp=0.8)
    prof = qt.CutoffProfile(8.0)
    assert nl.localized_virial_first(u, prof) == \
        pytest.approx(4.0 * nl.virial(u), rel=1e-10)


def test_localized_virial_second_unweighted_formula():
    u = gaussian_field(2, 1.1, 1.0, 0.4)
    cd = dmp.CumulativeDamping(nl.constant(0.5))
    p, t = 3.0, 0.7
    got = nl.localized_virial_second(u, t, cd, p)
    damp = np.exp((1.0 - p) * 0.5 * t)
    want = 8.0 * nl.grad_norm_sq(u) \
        - 4.0 * 2 * (p - 1.0) / (p + 1.0) * damp * nl.lp1_integral(u, p)
    assert got == pytest.approx(want, rel=1e-12)


def test_localized_virial_second_large_radius_matches_unweighted():
    # with the cutoff far beyond the support all three weighted terms
    # collapse onto the phi = |x|^2 expression
    u = gaussian_field(2, 1.0, 0.8, 0.3)
    cd = dmp.CumulativeDamping(nl.constant(0.2))
    p, t = 3.0, 0.4
    prof = qt.CutoffProfile(8.0)
    weighted = nl.localized_virial_second(u, t, cd, p, prof)
    plain = nl.localized_virial_second(u, t, cd, p)
    assert weighted == pytest.approx(plain, rel=1e-8)
