"""Divergence-form assembly of the pulled-back Laplacian.

The physical Laplacian on h(Omega0), transported to the computational
grid xi through T = h o chart, becomes (1/rho) div_xi(A grad_xi u) with
A = |det J_T| J_T^{-1} J_T^{-T} and rho = |det J_T|.  Assembly builds the
symmetric bilinear-form matrix edge by edge (flux form for the diagonal
coefficients, centered-gradient quadrature for the cross coefficient),
so the weighted operator is symmetric to round-off by construction.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .diffeo import Diffeomorphism, identity_diffeo
from .errors import DegenerateMapError
from .mesh import Mesh

__all__ = [
    "PullbackCoefficients",
    "DiscreteOperator",
    "pullback_fields",
    "assemble_elliptic",
    "normal_derivative",
    "physical_gradient",
]


def _inv2(j):
    """Batched inverse for (n,1,1) or (n,2,2) Jacobians."""
    if j.shape[1] == 1:
        return 1.0 / j
    det = j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]
    out = np.empty_like(j)
    out[:, 0, 0] = j[:, 1, 1] / det
    out[:, 0, 1] = -j[:, 0, 1] / det
    out[:, 1, 0] = -j[:, 1, 0] / det
    out[:, 1, 1] = j[:, 0, 0] / det
    return out


def _det(j):
    if j.shape[1] == 1:
        return j[:, 0, 0]
    return j[:, 0, 0] * j[:, 1, 1] - j[:, 0, 1] * j[:, 1, 0]


class TotalMap:
    """Composition x = h(chart(xi)) with batched Jacobian evaluation."""

    def __init__(self, mesh: Mesh, h: Diffeomorphism):
        self.mesh = mesh
        self.h = h

    def jac(self, xi):
        jc = self.mesh.chart.jac(xi)
        if self.h.is_identity():
            return jc
        pts = self.mesh.chart.point(xi)
        jh = self.h.jacobian(pts)
        return np.einsum("nij,njk->nik", jh, jc)

    def coeffs_at(self, xi):
        """(A, rho) of the transported operator at computational points."""
        j = self.jac(xi)
        det = _det(j)
        if np.any(det <= 0.0):
            raise DegenerateMapError("total map has det J <= 0 on the grid")
        jinv = _inv2(j)
        a = det[:, None, None] * np.einsum("nij,nkj->nik", jinv, jinv)
        return a, det


class PullbackCoefficients:
    """Per-node diffeomorphism pullback data A(x), rho(x) in physical frame."""

    def __init__(self, h: Diffeomorphism, a_nodes, rho_nodes):
        self.h = h
        self.a = a_nodes      # (n, d, d), SPD
        self.rho = rho_nodes  # (n,)


def pullback_fields(h: Diffeomorphism, mesh: Mesh) -> PullbackCoefficients:
    """Physical-frame pullback coefficients of h at the mesh nodes."""
    jh = h.jacobian(mesh.points)
    det = _det(jh)
    if np.any(det <= 0.0):
        raise DegenerateMapError("diffeomorphism has det J <= 0 at a node")
    jinv = _inv2(jh)
    a = det[:, None, None] * np.einsum("nij,nkj->nik", jinv, jinv)
    return PullbackCoefficients(h, a, det)


class DiscreteOperator:
    """Pulled-back Laplacian with Dirichlet elimination and quadrature.

    lap_full maps all-node vectors to the interior action of the elliptic
    part (units of Delta u); lap is its interior-column restriction.  The
    weighted form w_i (lap u)_i is symmetric in (u, v).
    """

    def __init__(self, mesh: Mesh, h: Diffeomorphism, d_full, w_all):
        self.mesh = mesh
        self.h = h
        self.w_all = w_all
        self.w = w_all[mesh.interior]
        inv_w = sp.diags(1.0 / self.w)
        self._d_full = d_full
        self.lap_full = (inv_w @ d_full).tocsr()
        self.lap = self.lap_full[:, mesh.interior].tocsr()
        self.n = mesh.interior.size
        self._tmap = TotalMap(mesh, h)
        self._bq = None
        # smallest meaningful residual: rounding in the stiffest row
        diag = np.abs(self.lap.diagonal())
        self.res_floor = float(np.finfo(float).eps * diag.max()) if diag.size \
            else 0.0

    # weighted inner product over interior nodes
    def inner(self, u, v) -> float:
        return float(np.dot(self.w * u, v))

    def norm_w(self, u) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def apply(self, v_interior):
        return self.lap @ v_interior

    def apply_full(self, field_all):
        """Elliptic part applied to a field with arbitrary boundary values."""
        return self.lap_full @ field_all

    # ------------------------------------------------------------------
    def boundary_quadrature(self):
        """(boundary idx, physical arc weights, unit outward normals)."""
        if self._bq is None:
            bd = self.mesh.bdata
            if self.mesh.dim == 1:
                # 0-dimensional boundary: counting measure
                pts = self.mesh.points[bd.idx]
                nrm = bd.normal_xi.astype(float)
                if not self.h.is_identity():
                    j = self.h.jacobian(pts)
                    nrm = np.sign(_det(j)) * nrm
                self._bq = (bd.idx, np.ones(bd.idx.size), nrm)
            else:
                xi = self.mesh.xi[bd.idx]
                j = self._tmap.jac(xi)
                tan = np.einsum("nij,nj->ni", j, bd.tangent_xi)
                arc = np.linalg.norm(tan, axis=1) * bd.sigma_xi
                jinv_t = np.transpose(_inv2(j), (0, 2, 1))
                nu = np.einsum("nij,nj->ni", jinv_t, bd.normal_xi)
                nu /= np.maximum(np.linalg.norm(nu, axis=1), 1e-300)[:, None]
                self._bq = (bd.idx, arc, nu)
        return self._bq


def assemble_elliptic(mesh: Mesh, h: Diffeomorphism = None) -> DiscreteOperator:
    """Assemble the transported Laplacian for the (possibly mapped) domain."""
    if h is None:
        h = identity_diffeo(mesh.dim)
    tmap = TotalMap(mesh, h)
    n = mesh.n_all

    rows, cols, vals = [], [], []
    for edge in mesh.edges:
        a, _ = tmap.coeffs_at(edge["mid"])
        d = edge["axis"]
        coef = a[:, d, d] * edge["vol"] / edge["dxi"] ** 2
        i, j = edge["i"], edge["j"]
        rows.extend([i, j, i, j])
        cols.extend([i, j, j, i])
        vals.extend([coef, coef, -coef, -coef])
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))

    if mesh.dim == 2:
        a_nodes, rho_nodes = _node_coeffs(mesh, tmap)
        a12 = a_nodes[:, 0, 1]
        if np.max(np.abs(a12)) > 0.0:
            g1, g2 = mesh.grad_ops
            d12 = sp.diags(a12 * mesh.cellvol_xi)
            cross = g1.T @ d12 @ g2
            m = m + cross + cross.T
    else:
        _, rho_nodes = _node_coeffs(mesh, tmap)

    w_all = mesh.base_weight * _diffeo_det(mesh, h)
    d_full = (-m[mesh.interior, :]).tocsr()
    return DiscreteOperator(mesh, h, d_full, w_all)


def _node_coeffs(mesh: Mesh, tmap: TotalMap):
    """A and rho at nodes; the disk pole is patched by a near-pole sample."""
    xi = mesh.xi.copy()
    pole = getattr(mesh, "pole", None)
    if pole is not None:
        xi[pole, 0] = 0.5 * mesh.spacing[0]
    a, rho = tmap.coeffs_at(xi)
    if pole is not None:
        a[pole] = np.eye(2)
        rho[pole] = 1.0
    return a, rho


def _diffeo_det(mesh: Mesh, h: Diffeomorphism):
    if h.is_identity():
        return np.ones(mesh.n_all)
    det = _det(h.jacobian(mesh.points))
    if np.any(det <= 0.0):
        raise DegenerateMapError("diffeomorphism has det J <= 0 at a node")
    return det


def physical_gradient(op: DiscreteOperator, field_all: np.ndarray) -> np.ndarray:
    """Gradient of a grid function in physical coordinates, all nodes.

    Centered stencils in the interior, one-sided second order at the
    boundary; the disk pole uses a first-harmonic fit over ring one.
    """
    mesh = op.mesh
    grad_xi = np.stack([g @ field_all for g in mesh.grad_ops], axis=1)
    j = op._tmap.jac(mesh.xi)
    pole = getattr(mesh, "pole", None)
    if pole is not None:
        j[pole] = np.eye(2)  # placeholder; the pole row is patched below
    jinv_t = np.transpose(_inv2(j), (0, 2, 1))
    grad = np.einsum("nij,nj->ni", jinv_t, grad_xi)
    if pole is not None:
        nt = int(mesh.domain.resolution[1])
        dr = mesh.spacing[0]
        ring = field_all[1:1 + nt] - field_all[pole]
        th = mesh.xi[1:1 + nt, 1]
        gx = 2.0 * np.mean(ring * np.cos(th)) / dr
        gy = 2.0 * np.mean(ring * np.sin(th)) / dr
        ghat = np.array([gx, gy])
        if not op.h.is_identity():
            jh = op.h.jacobian(mesh.points[[pole]])
            ghat = np.transpose(_inv2(jh), (0, 2, 1))[0] @ ghat
        grad[pole] = ghat
    return grad


def normal_derivative(op: DiscreteOperator, field_all: np.ndarray) -> np.ndarray:
    """Outward physical normal derivative of a grid function on the boundary."""
    mesh = op.mesh
    bd = mesh.bdata
    grad = physical_gradient(op, field_all)
    _, _, nu = op.boundary_quadrature()
    return np.einsum("ni,ni->n", grad[bd.idx], nu)
