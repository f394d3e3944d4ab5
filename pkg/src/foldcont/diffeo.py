"""Smooth domain perturbations h(x) = x + sum_i c_i psi_i(x).

Basis fields are analytic (value and Jacobian in closed form).  The
default generators are boundary-collar fields: radial Fourier bumps on
the disk, per-face cosine bumps on the rectangle, endpoint bumps on the
interval.  The collar profile vanishes to all orders at the inner collar
radius, so perturbed maps are exactly the identity deep inside the
domain.  Whole-domain fields (translations, linear maps) are available
for validation tests.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DegenerateMapError

__all__ = [
    "Diffeomorphism",
    "ConstantField",
    "LinearField",
    "IntervalEndField",
    "RectBoundaryField",
    "DiskRadialField",
    "identity_diffeo",
    "collar_basis",
    "random_diffeo",
]

_COLLAR = 0.5  # fields vanish for (scaled) boundary distance beyond this


def _smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    out[u >= 1.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    out[mid] = a / (a + b)
    return out


def _smoothstep_d(u):
    """Derivative of _smoothstep."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    da = a / um ** 2
    db = -b / (1.0 - um) ** 2
    out[mid] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


def _collar_profile(t):
    """Profile p(t): 0 for t <= 0.5, rising smoothly to 1 at t = 1."""
    return _smoothstep((t - _COLLAR) / (1.0 - _COLLAR))


def _collar_profile_d(t):
    return _smoothstep_d((t - _COLLAR) / (1.0 - _COLLAR)) / (1.0 - _COLLAR)


class ConstantField:
    """Rigid translation direction (whole-domain test field)."""

    def __init__(self, vector):
        self.vector = np.atleast_1d(np.asarray(vector, dtype=float))

    def value(self, x):
        return np.broadcast_to(self.vector, x.shape).copy()

    def jacobian(self, x):
        d = x.shape[1]
        return np.zeros((x.shape[0], d, d))


class LinearField:
    """psi(x) = M x; with M = I and coefficient 1 this is the dilation 2x."""

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    def value(self, x):
        return x @ self.matrix.T

    def jacobian(self, x):
        return np.broadcast_to(self.matrix, (x.shape[0],) + self.matrix.shape).copy()


class IntervalEndField:
    """1D collar bump moving one endpoint outward (unit boundary value)."""

    def __init__(self, side: str):
        if side not in ("left", "right"):
            raise ConfigError("side must be 'left' or 'right'")
        self.side = side

    def value(self, x):
        t = x[:, 0]
        if self.side == "right":
            return _collar_profile(t)[:, None]
        return -_collar_profile(1.0 - t)[:, None]

    def jacobian(self, x):
        t = x[:, 0]
        if self.side == "right":
            return _collar_profile_d(t)[:, None, None]
        return _collar_profile_d(1.0 - t)[:, None, None]


class RectBoundaryField:
    """Outward collar bump on both faces normal to ``axis``.

    psi(x) = b(x_a / l_a) * cos(m*pi*x_o / l_o) * e_axis, where b is the
    signed collar profile (negative near the low face, positive near the
    high face) and x_o the transverse coordinate.
    """

    def __init__(self, axis: int, mode: int, lengths):
        self.axis = int(axis)
        self.mode = int(mode)
        self.lengths = tuple(float(v) for v in lengths)

    def _b(self, t):
        return np.where(t >= 0.5, _collar_profile(2.0 * t - 1.0),
                        -_collar_profile(1.0 - 2.0 * t))

    def _bd(self, t):
        return np.where(t >= 0.5, 2.0 * _collar_profile_d(2.0 * t - 1.0),
                        2.0 * _collar_profile_d(1.0 - 2.0 * t))

    def value(self, x):
        a, o = self.axis, 1 - self.axis
        la, lo = self.lengths[a], self.lengths[o]
        t = x[:, a] / la
        trans = np.cos(self.mode * np.pi * x[:, o] / lo)
        out = np.zeros_like(x)
        out[:, a] = self._b(t) * trans
        return out

    def jacobian(self, x):
        a, o = self.axis, 1 - self.axis
        la, lo = self.lengths[a], self.lengths[o]
        t = x[:, a] / la
        arg = self.mode * np.pi * x[:, o] / lo
        out = np.zeros((x.shape[0], 2, 2))
        out[:, a, a] = self._bd(t) / la * np.cos(arg)
        out[:, a, o] = -self._b(t) * (self.mode * np.pi / lo) * np.sin(arg)
        return out


class DiskRadialField:
    """Radial collar field p(r) * trig(m*theta) * e_r on the unit disk."""

    def __init__(self, mode: int, parity: str = "cos"):
        if parity not in ("cos", "sin"):
            raise ConfigError("parity must be 'cos' or 'sin'")
        self.mode = int(mode)
        self.parity = parity

    def _polar(self, x):
        r = np.hypot(x[:, 0], x[:, 1])
        th = np.arctan2(x[:, 1], x[:, 0])
        return r, th

    def _trig(self, th, d=0):
        m = self.mode
        if self.parity == "cos":
            return np.cos(m * th) if d == 0 else -m * np.sin(m * th)
        return np.sin(m * th) if d == 0 else m * np.cos(m * th)

    def value(self, x):
        r, th = self._polar(x)
        g = _collar_profile(r) * self._trig(th)
        er = np.zeros_like(x)
        live = r > _COLLAR
        er[live, 0] = x[live, 0] / r[live]
        er[live, 1] = x[live, 1] / r[live]
        return g[:, None] * er

    def jacobian(self, x):
        n = x.shape[0]
        out = np.zeros((n, 2, 2))
        r, th = self._polar(x)
        live = r > _COLLAR
        if not np.any(live):
            return out
        r, th = r[live], th[live]
        c, s = np.cos(th), np.sin(th)
        g = _collar_profile(r) * self._trig(th)
        g_r = _collar_profile_d(r) * self._trig(th)
        g_th = _collar_profile(r) * self._trig(th, d=1)
        # grad r = (c, s); grad theta = (-s, c)/r; d(e_r) = e_theta (x) grad theta
        er = np.stack([c, s], axis=1)
        et = np.stack([-s, c], axis=1)
        grad_g = (g_r[:, None] * er + (g_th / r)[:, None] * et)
        jac = (er[:, :, None] * grad_g[:, None, :]
               + (g / r)[:, None, None] * et[:, :, None] * et[:, None, :])
        out[live] = jac
        return out


class Diffeomorphism:
    """h(x) = x + sum_i c_i psi_i(x) with analytic Jacobian."""

    def __init__(self, fields, coeffs):
        if len(fields) != len(coeffs):
            raise ConfigError("fields and coefficients differ in length")
        self.fields = list(fields)
        self.coeffs = np.asarray(coeffs, dtype=float)

    @property
    def amplitude(self) -> float:
        """Perturbation size measure: max |coefficient|."""
        return float(np.max(np.abs(self.coeffs))) if len(self.coeffs) else 0.0

    def is_identity(self) -> bool:
        return len(self.coeffs) == 0 or bool(np.all(self.coeffs == 0.0))

    def displacement(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for c, f in zip(self.coeffs, self.fields):
            if c != 0.0:
                out += c * f.value(x)
        return out

    def map_points(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x + self.displacement(x)

    def jacobian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = x.shape
        out = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        for c, f in zip(self.coeffs, self.fields):
            if c != 0.0:
                out += c * f.jacobian(x)
        return out

    def scaled(self, factor: float) -> "Diffeomorphism":
        return Diffeomorphism(self.fields, self.coeffs * factor)

    def validate_on(self, points) -> np.ndarray:
        """Return det J at the given points; raise if any is <= 0."""
        det = np.linalg.det(self.jacobian(points))
        if np.any(det <= 0.0):
            raise DegenerateMapError(
                f"det J <= 0 at {int(np.sum(det <= 0))} node(s); "
                f"min det = {det.min():.3e}")
        return det


def identity_diffeo(dim: int = 2) -> Diffeomorphism:
    del dim
    return Diffeomorphism([], [])


def collar_basis(kind: str, n_modes: int, lengths=(1.0, 1.0)):
    """Default boundary-collar basis fields for a domain kind."""
    if n_modes < 1:
        raise ConfigError("n_modes must be >= 1")
    if kind == "interval":
        # only two boundary points; n_modes beyond 2 adds nothing
        return [IntervalEndField("right"), IntervalEndField("left")][:min(n_modes, 2)]
    if kind == "rect":
        out = []
        for m in range(n_modes):
            out.append(RectBoundaryField(0, m, lengths))
            out.append(RectBoundaryField(1, m, lengths))
        return out
    if kind == "disk":
        out = [DiskRadialField(0, "cos")]
        for m in range(1, n_modes):
            out.append(DiskRadialField(m, "cos"))
            out.append(DiskRadialField(m, "sin"))
        return out
    raise ConfigError(f"unknown domain kind {kind!r}")


def random_diffeo(kind: str, amplitude: float, n_modes: int, seed,
                  lengths=(1.0, 1.0)) -> Diffeomorphism:
    """Seeded random collar perturbation, coefficients uniform in +-amplitude."""
    fields = collar_basis(kind, n_modes, lengths)
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-amplitude, amplitude, size=len(fields))
    return Diffeomorphism(fields, coeffs)
