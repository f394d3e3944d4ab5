"""Independent ground-truth generators: closed forms, shooting, multistart."""

import numpy as np
import pytest

import foldcont as fc
from foldcont import oracles as oc
from foldcont.errors import BlowupError


def test_radial_family_closed_form():
    # b-grid {0.5, 1, 2}: mu = 8b/(1+b)^2, peak value 2 ln(1+b)
    for b, mu in ((0.5, 16.0 / 9.0), (1.0, 2.0), (2.0, 16.0 / 9.0)):
        pt = oc.radial_family_point(b)
        assert pt.mu == pytest.approx(mu, rel=1e-15)
        assert pt.sup_norm == pytest.approx(2 * np.log1p(b), rel=1e-15)


def test_radial_profile_solves_ode():
    # -(v'' + v'/r) = mu e^v checked with central differences
    b = 1.3
    pt = oc.radial_family_point(b)
    r = np.linspace(0.05, 0.95, 300)
    hr = r[1] - r[0]
    v = oc.radial_profile(b, r)
    lap = (v[2:] - 2 * v[1:-1] + v[:-2]) / hr ** 2 \
        + (v[2:] - v[:-2]) / (2 * hr * r[1:-1])
    assert np.max(np.abs(lap + pt.mu * np.exp(v[1:-1]))) < 1e-3
    assert oc.radial_profile(b, np.array([1.0]))[0] == pytest.approx(0.0, abs=1e-15)


def test_radial_branch_fold_at_b_one():
    pts = oc.radial_branch(np.linspace(0.2, 3.0, 60))
    mus = [p.mu for p in pts]
    assert max(mus) <= 2.0 + 1e-12
    assert mus.index(max(mus)) not in (0, len(mus) - 1)


def test_integrate_ivp_harmonic_oscillator():
    def rhs(t, y):
        return np.array([y[1], -y[0]])

    t_end = 2 * np.pi
    y = oc.integrate_ivp(rhs, 0.0, t_end, np.array([1.0, 0.0]), rtol=1e-10)
    assert np.allclose(y, [1.0, 0.0], atol=1e-8)


def test_integrate_ivp_blowup_guard():
    def rhs(t, y):
        return y * y

    with pytest.raises(BlowupError):
        oc.integrate_ivp(rhs, 0.0, 2.0, np.array([1.0]))


def test_interval_family_parametrization():
    # sup over theta of mu(theta) is attained at the fold
    mu_star, sup_star = oc.interval_fold_exact()
    assert mu_star == pytest.approx(3.513830719125161, abs=1e-12)
    assert sup_star == pytest.approx(1.1868421686343882, abs=1e-12)
    th = np.linspace(0.1, 12.0, 500)
    mus = oc.interval_family_mu(th)
    assert np.max(mus) <= mu_star + 1e-9


def test_shooting_reproduces_closed_form_fold():
    mu_star, _ = oc.interval_fold_exact()
    mu_shoot = oc.fold_1d_shooting(fc.exponential(), tol=1e-8)
    assert abs(mu_shoot - mu_star) < 1e-6


def test_solutions_1d_counts():
    sols = oc.solutions_1d(fc.exponential(), 1.0)
    assert len(sols) == 2
    assert sols[0] < 1.0 < sols[1]
    assert oc.solutions_1d(fc.exponential(), 3.6) == []


def test_solutions_1d_match_family():
    # both shooting roots lie on the closed-form family
    sols = oc.solutions_1d(fc.exponential(), 2.0)
    th = np.linspace(1e-3, 40.0, 200000)
    mus = oc.interval_family_mu(th)
    sups = oc.interval_family_sup(th)
    for s in sols:
        i = np.argmin(np.abs(sups - s))
        assert abs(mus[i] - 2.0) < 1e-3


def test_multistart_seeded_determinism(interval_problem):
    small = fc.make_problem(fc.domain_from_key("interval:9"), fc.exponential())
    a = oc.multistart_enumerate(small, 1.0, 60, seed=3)
    b = oc.multistart_enumerate(small, 1.0, 60, seed=3)
    assert len(a) == len(b) == 2
    for va, vb in zip(a, b):
        assert np.array_equal(va, vb)
