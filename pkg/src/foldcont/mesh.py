"""Structured reference meshes: interval, rectangle and polar disk.

Every mesh lives on a computational grid xi; a chart maps xi to physical
coordinates (identity for interval/rectangle, polar coordinates for the
disk).  Perturbed domains are handled by composing the chart with a
diffeomorphism of the physical reference domain, never by remeshing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

__all__ = ["ReferenceDomain", "Mesh", "build_mesh", "domain_from_key"]


@dataclass(frozen=True)
class ReferenceDomain:
    """Reference domain kind plus interior resolution per axis."""

    kind: str  # "interval" | "rect" | "disk"
    resolution: tuple
    lengths: tuple = (1.0, 1.0)  # rectangle side lengths

    def __post_init__(self):
        if self.kind not in ("interval", "rect", "disk"):
            raise ConfigError(f"unknown domain kind {self.kind!r}")
        if any(int(r) < 3 for r in self.resolution):
            raise ConfigError("resolution must be >= 3 per axis")


def domain_from_key(key: str) -> ReferenceDomain:
    """Parse ``interval:<n>``, ``rect:<nx>x<ny>:<lx>x<ly>``, ``disk:<nr>x<nt>``."""
    parts = key.split(":")
    try:
        if parts[0] == "interval" and len(parts) == 2:
            return ReferenceDomain("interval", (int(parts[1]),))
        if parts[0] == "rect" and len(parts) in (2, 3):
            nx, ny = (int(v) for v in parts[1].split("x"))
            if len(parts) == 3:
                lx, ly = (float(v) for v in parts[2].split("x"))
            else:
                lx, ly = 1.0, 1.0
            return ReferenceDomain("rect", (nx, ny), (lx, ly))
        if parts[0] == "disk" and len(parts) == 2:
            nr, nt = (int(v) for v in parts[1].split("x"))
            return ReferenceDomain("disk", (nr, nt))
    except ValueError as exc:
        raise ConfigError(f"malformed domain key {key!r}") from exc
    raise ConfigError(f"malformed domain key {key!r}")


class _IdentityChart:
    dim = None

    def __init__(self, dim):
        self.dim = dim

    def point(self, xi):
        return np.array(xi, dtype=float, copy=True)

    def jac(self, xi):
        n = xi.shape[0]
        return np.broadcast_to(np.eye(self.dim), (n, self.dim, self.dim)).copy()


class _PolarChart:
    """xi = (r, theta) -> (r cos theta, r sin theta)."""

    dim = 2

    def point(self, xi):
        r, th = xi[:, 0], xi[:, 1]
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)

    def jac(self, xi):
        r, th = xi[:, 0], xi[:, 1]
        c, s = np.cos(th), np.sin(th)
        out = np.empty((xi.shape[0], 2, 2))
        out[:, 0, 0] = c
        out[:, 0, 1] = -r * s
        out[:, 1, 0] = s
        out[:, 1, 1] = r * c
        return out


@dataclass
class _BoundaryData:
    idx: np.ndarray           # boundary node index
    stencil_idx: np.ndarray   # (nb, 3) inward one-sided stencil nodes
    stencil_step: np.ndarray  # (nb,) signed xi spacing along the normal
    normal_xi: np.ndarray     # (nb, dim) unit outward computational normal
    tangent_xi: np.ndarray    # (nb, dim) computational tangent (2D) or zeros
    sigma_xi: np.ndarray      # (nb,) computational boundary measure weight


class Mesh:
    """Nodes, index sets, quadrature data and difference operators.

    Attributes of note:
      xi          (n, dim) computational coordinates
      points      (n, dim) physical chart coordinates (reference domain)
      interior    interior node indices; boundary: the rest
      base_weight per-node integral of the chart volume element
      cellvol_xi  per-node computational cell volume (cross-term quadrature)
      grad_ops    tuple of sparse d/dxi_k operators (centered, one-sided at
                  non-periodic boundaries, zero rows at the disk pole)
    """

    def __init__(self, domain: ReferenceDomain):
        self.domain = domain
        self.kind = domain.kind
        if self.kind == "interval":
            self._build_interval()
        elif self.kind == "rect":
            self._build_rect()
        else:
            self._build_disk()
        self.n_all = self.xi.shape[0]
        self.dim = self.xi.shape[1]
        mask = np.zeros(self.n_all, dtype=bool)
        mask[self.interior] = True
        self.is_interior = mask
        self.points = self.chart.point(self.xi)
        self.volume = float(self.base_weight.sum())

    # ------------------------------------------------------------------
    # interval
    # ------------------------------------------------------------------
    def _build_interval(self):
        (n,) = (int(r) for r in self.domain.resolution)
        h = 1.0 / (n + 1)
        self.spacing = (h,)
        self.chart = _IdentityChart(1)
        self.xi = (np.arange(n + 2) * h)[:, None]
        self.interior = np.arange(1, n + 1)
        self.boundary = np.array([0, n + 1])

        w = np.full(n + 2, h)
        w[[0, -1]] = h / 2.0
        self.base_weight = w
        self.cellvol_xi = w.copy()

        # edges along the single axis
        i = np.arange(n + 1)
        self.edges = [dict(i=i, j=i + 1,
                           mid=((np.arange(n + 1) + 0.5) * h)[:, None],
                           vol=np.full(n + 1, h), axis=0, dxi=h)]

        self.grad_ops = (self._grad_1d_line(np.arange(n + 2), h, n + 2),)

        self.bdata = _BoundaryData(
            idx=self.boundary,
            stencil_idx=np.array([[0, 1, 2], [n + 1, n, n - 1]]),
            stencil_step=np.array([h, -h]),
            normal_xi=np.array([[-1.0], [1.0]]),
            tangent_xi=np.zeros((2, 1)),
            sigma_xi=np.array([1.0, 1.0]),
        )

    # one-sided end stencil with moments (0,1,0,1,0): second order, but its
    # h^2 bias equals the centered rows' (+h^2 v'''/6) and the h^3 term
    # vanishes, so the gradient's error field stays smooth up to the ends
    # (boundary values get divided by h^2 downstream)
    _END5 = (-2.5, 5.5, -5.0, 2.5, -0.5)

    @classmethod
    def _grad_1d_line(cls, ids, h, n_all):
        """Second-order d/dx on one grid line (4th-order one-sided ends)."""
        rows, cols, vals = [], [], []
        m = len(ids)
        for a in range(m):
            if a == 0:
                if m >= 5:
                    st = [(k, c) for k, c in enumerate(cls._END5)]
                else:
                    st = [(0, -1.5), (1, 2.0), (2, -0.5)]
            elif a == m - 1:
                if m >= 5:
                    st = [(m - 1 - k, -c) for k, c in enumerate(cls._END5)]
                else:
                    st = [(m - 1, 1.5), (m - 2, -2.0), (m - 3, 0.5)]
            else:
                st = [(a - 1, -0.5), (a + 1, 0.5)]
            for b, c in st:
                rows.append(ids[a])
                cols.append(ids[b])
                vals.append(c / h)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n_all, n_all))

    # ------------------------------------------------------------------
    # rectangle
    # ------------------------------------------------------------------
    def _build_rect(self):
        nx, ny = (int(r) for r in self.domain.resolution)
        lx, ly = self.domain.lengths
        hx, hy = lx / (nx + 1), ly / (ny + 1)
        self.spacing = (hx, hy)
        self.chart = _IdentityChart(2)
        mx, my = nx + 2, ny + 2

        def nid(ix, iy):
            return ix * my + iy

        ix, iy = np.meshgrid(np.arange(mx), np.arange(my), indexing="ij")
        self.xi = np.stack([(ix * hx).ravel(), (iy * hy).ravel()], axis=1)
        inter = (ix > 0) & (ix < mx - 1) & (iy > 0) & (iy < my - 1)
        self.interior = np.nonzero(inter.ravel())[0]
        self.boundary = np.nonzero(~inter.ravel())[0]

        wx = np.full(mx, hx); wx[[0, -1]] = hx / 2.0
        wy = np.full(my, hy); wy[[0, -1]] = hy / 2.0
        self.base_weight = np.outer(wx, wy).ravel()
        self.cellvol_xi = self.base_weight.copy()

        edges = []
        # x-direction edges (skip those lying entirely on y-boundary rows)
        a_ix, a_iy = np.meshgrid(np.arange(mx - 1), np.arange(1, my - 1),
                                 indexing="ij")
        i = nid(a_ix, a_iy).ravel(); j = nid(a_ix + 1, a_iy).ravel()
        mid = np.stack([((a_ix + 0.5) * hx).ravel(), (a_iy * hy).ravel()], axis=1)
        edges.append(dict(i=i, j=j, mid=mid,
                          vol=np.full(i.size, hx * hy), axis=0, dxi=hx))
        # y-direction edges
        b_ix, b_iy = np.meshgrid(np.arange(1, mx - 1), np.arange(my - 1),
                                 indexing="ij")
        i = nid(b_ix, b_iy).ravel(); j = nid(b_ix, b_iy + 1).ravel()
        mid = np.stack([(b_ix * hx).ravel(), ((b_iy + 0.5) * hy).ravel()], axis=1)
        edges.append(dict(i=i, j=j, mid=mid,
                          vol=np.full(i.size, hx * hy), axis=1, dxi=hy))
        self.edges = edges

        n_all = mx * my
        gx = sp.lil_matrix((n_all, n_all))
        gy = sp.lil_matrix((n_all, n_all))
        for jj in range(my):
            line = nid(np.arange(mx), jj)
            gx += self._grad_1d_line(line, hx, n_all)
        for ii in range(mx):
            line = nid(ii, np.arange(my))
            gy += self._grad_1d_line(line, hy, n_all)
        self.grad_ops = (sp.csr_matrix(gx), sp.csr_matrix(gy))

        # boundary table; corners get zero measure and a zero stencil
        b_idx, st_idx, st_step, nrm, tan, sig = [], [], [], [], [], []
        for ii in range(mx):
            for jj in range(my):
                on_x = ii in (0, mx - 1)
                on_y = jj in (0, my - 1)
                if not (on_x or on_y):
                    continue
                b_idx.append(nid(ii, jj))
                if on_x and on_y:  # corner
                    st_idx.append([nid(ii, jj)] * 3)
                    st_step.append(hx)
                    nrm.append(np.array([1.0 if ii else -1.0,
                                         1.0 if jj else -1.0]) / np.sqrt(2))
                    tan.append([0.0, 0.0])
                    sig.append(0.0)
                elif on_x:
                    s = 1 if ii == 0 else -1
                    st_idx.append([nid(ii, jj), nid(ii + s, jj), nid(ii + 2 * s, jj)])
                    st_step.append(s * hx)
                    nrm.append([-float(s), 0.0])
                    tan.append([0.0, 1.0])
                    sig.append(hy if 0 < jj < my - 1 else hy / 2.0)
                else:
                    s = 1 if jj == 0 else -1
                    st_idx.append([nid(ii, jj), nid(ii, jj + s), nid(ii, jj + 2 * s)])
                    st_step.append(s * hy)
                    nrm.append([0.0, -float(s)])
                    tan.append([1.0, 0.0])
                    sig.append(hx if 0 < ii < mx - 1 else hx / 2.0)
        self.bdata = _BoundaryData(
            idx=np.array(b_idx), stencil_idx=np.array(st_idx),
            stencil_step=np.array(st_step, dtype=float),
            normal_xi=np.array(nrm, dtype=float),
            tangent_xi=np.array(tan, dtype=float),
            sigma_xi=np.array(sig, dtype=float))

    # ------------------------------------------------------------------
    # disk (polar grid, single shared pole node)
    # ------------------------------------------------------------------
    def _build_disk(self):
        nr, nt = (int(r) for r in self.domain.resolution)
        dr, dt = 1.0 / nr, 2.0 * np.pi / nt
        self.spacing = (dr, dt)
        self.chart = _PolarChart()

        def nid(j, k):
            return 1 + (j - 1) * nt + np.mod(k, nt)

        n_all = 1 + nr * nt
        xi = np.zeros((n_all, 2))
        jj, kk = np.meshgrid(np.arange(1, nr + 1), np.arange(nt), indexing="ij")
        xi[1:, 0] = (jj * dr).ravel()
        xi[1:, 1] = (kk * dt).ravel()
        self.xi = xi
        self.pole = 0
        bnd = nid(nr, np.arange(nt))
        mask = np.ones(n_all, dtype=bool)
        mask[bnd] = False
        self.interior = np.nonzero(mask)[0]
        self.boundary = bnd

        w = np.zeros(n_all)
        w[0] = np.pi * dr * dr / 4.0
        rj = xi[1:, 0]
        w[1:] = rj * dr * dt
        w[bnd] = (1.0 - dr / 4.0) * (dr / 2.0) * dt
        self.base_weight = w

        cv = np.zeros(n_all)
        cv[1:] = dr * dt
        cv[bnd] = (dr / 2.0) * dt
        cv[0] = 0.0  # cross terms are never accumulated at the pole
        self.cellvol_xi = cv

        edges = []
        # pole spokes
        k = np.arange(nt)
        edges.append(dict(i=np.zeros(nt, dtype=int), j=nid(1, k),
                          mid=np.stack([np.full(nt, dr / 2.0), k * dt], axis=1),
                          vol=np.full(nt, dr * dt), axis=0, dxi=dr))
        # radial edges
        jj, kk = np.meshgrid(np.arange(1, nr), np.arange(nt), indexing="ij")
        i = nid(jj, kk).ravel(); j = nid(jj + 1, kk).ravel()
        mid = np.stack([((jj + 0.5) * dr).ravel(), (kk * dt).ravel()], axis=1)
        edges.append(dict(i=i, j=j, mid=mid,
                          vol=np.full(i.size, dr * dt), axis=0, dxi=dr))
        # angular edges (rings 1 .. nr-1)
        jj, kk = np.meshgrid(np.arange(1, nr), np.arange(nt), indexing="ij")
        i = nid(jj, kk).ravel(); j = nid(jj, kk + 1).ravel()
        mid = np.stack([(jj * dr).ravel(), ((kk + 0.5) * dt).ravel()], axis=1)
        edges.append(dict(i=i, j=j, mid=mid,
                          vol=np.full(i.size, dr * dt), axis=1, dxi=dt))
        self.edges = edges

        # gradient operators: d/dr one-sided at r=dr and r=1, zero at pole;
        # d/dtheta periodic centered, zero at pole.
        rows, cols, vals = [], [], []
        for kq in range(nt):
            for jq in range(1, nr + 1):
                a = nid(jq, kq)
                if jq == 1:
                    # centered using the pole value
                    st = [(0, -0.5), (nid(2, kq), 0.5)]
                elif jq == nr:
                    if nr >= 5:
                        st = [(nid(nr - k, kq), -c)
                              for k, c in enumerate(self._END5)]
                    else:
                        st = [(nid(nr, kq), 1.5), (nid(nr - 1, kq), -2.0),
                              (nid(nr - 2, kq), 0.5)]
                else:
                    st = [(nid(jq - 1, kq), -0.5), (nid(jq + 1, kq), 0.5)]
                for b, c in st:
                    rows.append(a); cols.append(int(b)); vals.append(c / dr)
        gr = sp.csr_matrix((vals, (rows, cols)), shape=(n_all, n_all))
        rows, cols, vals = [], [], []
        for jq in range(1, nr + 1):
            for kq in range(nt):
                a = nid(jq, kq)
                rows += [a, a]
                cols += [int(nid(jq, kq - 1)), int(nid(jq, kq + 1))]
                vals += [-0.5 / dt, 0.5 / dt]
        gt = sp.csr_matrix((vals, (rows, cols)), shape=(n_all, n_all))
        self.grad_ops = (gr, gt)

        k = np.arange(nt)
        self.bdata = _BoundaryData(
            idx=bnd,
            stencil_idx=np.stack([nid(nr, k), nid(nr - 1, k), nid(nr - 2, k)],
                                 axis=1),
            stencil_step=np.full(nt, -dr),
            normal_xi=np.stack([np.ones(nt), np.zeros(nt)], axis=1),
            tangent_xi=np.stack([np.zeros(nt), np.ones(nt)], axis=1),
            sigma_xi=np.full(nt, dt),
        )

    # ------------------------------------------------------------------
    def interior_values(self, field_all: np.ndarray) -> np.ndarray:
        return field_all[self.interior]

    def embed(self, field_interior: np.ndarray) -> np.ndarray:
        """Zero-extend an interior vector to all nodes (Dirichlet data)."""
        out = np.zeros(self.n_all)
        out[self.interior] = field_interior
        return out


def build_mesh(domain: ReferenceDomain) -> Mesh:
    return Mesh(domain)
