"""Perturbation fields, composite maps and the degenerate-map guard."""

import numpy as np
import pytest

import foldcont as fc
from foldcont.diffeo import collar_basis, identity_diffeo, random_diffeo
from foldcont.errors import ConfigError, DegenerateMapError


def _fd_jacobian(field, x, eps=1e-6):
    n, d = x.shape
    out = np.zeros((n, d, d))
    for j in range(d):
        dx = np.zeros(d)
        dx[j] = eps
        out[:, :, j] = (field.value(x + dx) - field.value(x - dx)) / (2 * eps)
    return out


@pytest.mark.parametrize("field,pts", [
    (fc.ConstantField([0.3, -0.1]), np.random.default_rng(0).uniform(-1, 1, (40, 2))),
    (fc.LinearField(np.array([[0.2, 1.0], [0.5, -0.3]])),
     np.random.default_rng(1).uniform(-1, 1, (40, 2))),
    (fc.IntervalEndField("right"), np.random.default_rng(2).uniform(0.05, 0.95, (40, 1))),
    (fc.RectBoundaryField(0, 2, (1.0, 1.0)),
     np.random.default_rng(3).uniform(0.05, 0.95, (40, 2))),
    (fc.DiskRadialField(3, "sin"),
     np.random.default_rng(4).normal(0, 0.4, (40, 2))),
])
def test_field_jacobians_match_finite_differences(field, pts):
    jac = field.jacobian(pts)
    fd = _fd_jacobian(field, pts)
    assert np.max(np.abs(jac - fd)) < 1e-7


def test_fields_vanish_away_from_boundary():
    fld = fc.DiskRadialField(2, "cos")
    inner = np.array([[0.1, 0.1], [0.2, -0.1], [0.0, 0.3]])
    assert np.all(fld.value(inner) == 0.0)
    fld = fc.IntervalEndField("left")
    assert np.all(fld.value(np.array([[0.6], [0.9]])) == 0.0)


def test_identity_diffeo():
    h = identity_diffeo()
    assert h.is_identity()
    x = np.array([[0.2, 0.3]])
    assert np.array_equal(h.map_points(x), x)
    assert np.allclose(h.jacobian(x), np.eye(2))


def test_composite_map_and_jacobian():
    fields = collar_basis("disk", 2)
    h = fc.Diffeomorphism(fields, [0.01, -0.02, 0.015])
    x = np.random.default_rng(5).normal(0, 0.5, (30, 2))
    jac = h.jacobian(x)
    eps = 1e-6
    for j in range(2):
        dx = np.zeros(2)
        dx[j] = eps
        fd = (h.map_points(x + dx) - h.map_points(x - dx)) / (2 * eps)
        assert np.max(np.abs(jac[:, :, j] - fd)) < 1e-7


def test_amplitude_and_scaling():
    h = random_diffeo("rect", 0.05, 2, seed=9)
    assert h.amplitude <= 0.05
    assert h.scaled(0.5).amplitude == pytest.approx(0.5 * h.amplitude)


def test_random_diffeo_seeded():
    a = random_diffeo("disk", 0.02, 3, seed=123)
    b = random_diffeo("disk", 0.02, 3, seed=123)
    assert np.array_equal(a.coeffs, b.coeffs)
    c = random_diffeo("disk", 0.02, 3, seed=124)
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_degenerate_map_raises():
    # a huge collar coefficient folds the map over itself
    h = fc.Diffeomorphism([fc.IntervalEndField("right")], [-3.0])
    pts = np.linspace(0, 1, 64)[:, None]
    with pytest.raises(DegenerateMapError):
        h.validate_on(pts)


def test_collar_basis_bad_args():
    with pytest.raises(ConfigError):
        collar_basis("interval", 0)
    with pytest.raises(ConfigError):
        collar_basis("hexagon", 2)
