"""Reference meshes: quadrature weights, index sets and gradients."""

import numpy as np
import pytest

import foldcont as fc
from foldcont.errors import ConfigError
from foldcont.mesh import build_mesh, domain_from_key


def test_domain_keys():
    d = domain_from_key("interval:32")
    assert d.kind == "interval" and d.resolution == (32,)
    d = domain_from_key("rect:8x12")
    assert d.kind == "rect" and d.resolution == (8, 12)
    d = domain_from_key("disk:16x32")
    assert d.kind == "disk"
    with pytest.raises(ConfigError):
        domain_from_key("torus:8")


@pytest.mark.parametrize("key,vol", [
    ("interval:50", 1.0),
    ("rect:20x20", 1.0),
    ("disk:32x64", np.pi),
])
def test_volume_quadrature(key, vol):
    mesh = build_mesh(domain_from_key(key))
    assert mesh.volume == pytest.approx(vol, rel=1e-12)


def test_interior_boundary_partition():
    mesh = build_mesh(domain_from_key("rect:6x7"))
    assert len(mesh.interior) == 6 * 7
    assert len(mesh.interior) + len(mesh.boundary) == mesh.n_all
    assert not set(mesh.interior) & set(mesh.boundary)


def test_gradient_exact_on_quadratics_interval():
    mesh = build_mesh(domain_from_key("interval:20"))
    x = mesh.xi[:, 0]
    g = mesh.grad_ops[0] @ (x ** 2)
    # centered interior rows are exact on quadratics
    assert np.allclose(g[mesh.interior], 2.0 * x[mesh.interior], atol=1e-12)


def test_gradient_end_rows_share_centered_bias():
    # end rows are tuned so the h^2 error coefficient matches the
    # centered rows (v'''/6) and the h^3 term vanishes
    mesh = build_mesh(domain_from_key("interval:20"))
    x = mesh.xi[:, 0]
    h = mesh.spacing[0]
    for p, dp, d3 in ((x ** 3, 3 * x ** 2, 6.0),):
        g = mesh.grad_ops[0] @ p
        expect = dp + h * h * d3 / 6.0
        assert np.allclose(g, expect, atol=1e-10)


def test_disk_gradient_convergence():
    errs = []
    for res in ("16x32", "32x64"):
        mesh = build_mesh(domain_from_key("disk:" + res))
        r2 = mesh.xi[:, 0] ** 2
        g = mesh.grad_ops[0] @ r2
        live = mesh.xi[:, 0] > 0
        errs.append(np.max(np.abs(g[live] - 2.0 * mesh.xi[live, 0])))
    # quadratic in r is reproduced exactly by centered differences
    assert errs[1] < 1e-12


def test_disk_boundary_data():
    mesh = build_mesh(domain_from_key("disk:12x24"))
    bd = mesh.bdata
    r = np.hypot(*mesh.points[bd.idx].T)
    assert np.allclose(r, 1.0, atol=1e-14)
    assert np.allclose(np.sum(bd.sigma_xi), 2 * np.pi, rtol=1e-12)


def test_embed_roundtrip():
    mesh = build_mesh(domain_from_key("interval:10"))
    vals = np.arange(10, dtype=float)
    full = mesh.embed(vals)
    assert np.all(full[mesh.boundary] == 0.0)
    assert np.array_equal(mesh.interior_values(full), vals)
