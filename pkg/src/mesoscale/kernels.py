"""Analytic building blocks: Green's functions, capacitary potentials, sources.

All point arguments broadcast: ``x`` and ``y`` may be single points of shape
``(3,)`` or stacks of shape ``(..., 3)``. A Python float is returned when the
broadcast result is a scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import comb

from .errors import InsideInclusion, OutOfDomain, SingularPoint, UnsupportedShape
from .geometry import AmbientDomain, Inclusion, Shape

FOUR_PI = 4.0 * math.pi
# relative tolerance used when deciding whether a point sits on a sphere
SURFACE_RTOL = 1e-12


def _points(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"points must have a trailing dimension of 3, got {arr.shape}")
    return arr


def _out(values):
    values = np.asarray(values)
    return float(values) if values.ndim == 0 else values


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...i,...i->...", v, v))


def kelvin_distance(a: float, xp: np.ndarray, yp: np.ndarray) -> np.ndarray:
    """``sqrt(|x|^2 |y|^2 - 2 a^2 x.y + a^4)`` evaluated without cancellation.

    Equals ``|y| * |x - a^2 y / |y|^2|`` and is symmetric in ``x`` and ``y``;
    its value at ``y = 0`` is ``a^2``.
    """
    xp, yp = np.broadcast_arrays(xp, yp)
    nx = _norm(xp)
    ny = _norm(yp)
    use_y = (ny >= nx)[..., None]
    big = np.where(use_y, yp, xp)
    small = np.where(use_y, xp, yp)
    nbig = np.maximum(nx, ny)[..., None]
    safe = np.where(nbig > 0, nbig, 1.0)
    a2 = np.asarray(a, dtype=float) ** 2
    v = nbig * small - a2[..., None] * big / safe
    dist = _norm(v)
    return np.where(nbig[..., 0] > 0, dist, a2)


def free_green(x, y):
    """Fundamental solution ``1 / (4 pi |x - y|)`` without checks."""
    return 1.0 / (FOUR_PI * _norm(_points(x) - _points(y)))


# ---------------------------------------------------------------- ambient

def _check_in_ambient(ambient: AmbientDomain, *pts):
    if ambient.is_free_space:
        return
    limit = ambient.ball_radius * (1.0 + SURFACE_RTOL)
    for p in pts:
        if np.any(_norm(p) > limit):
            raise OutOfDomain(f"point outside the ball of radius {ambient.ball_radius}")


def _ball_image(radius: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return radius / (FOUR_PI * kelvin_distance(radius, x, y))


def ambient_green(ambient: AmbientDomain, x, y, check: bool = True):
    """Dirichlet Green's function of the ambient domain."""
    x, y = _points(x), _points(y)
    r = _norm(x - y)
    if check:
        if np.any(r == 0.0):
            raise SingularPoint("ambient_green evaluated at x == y")
        _check_in_ambient(ambient, x, y)
    g = 1.0 / (FOUR_PI * r)
    if not ambient.is_free_space:
        g = g - _ball_image(ambient.ball_radius, x, y)
    return _out(g)


def ambient_regular_part(ambient: AmbientDomain, x, y, check: bool = True):
    """``H = 1/(4 pi |x-y|) - G``, from the image term so the diagonal is finite."""
    x, y = _points(x), _points(y)
    if check:
        _check_in_ambient(ambient, x, y)
    if ambient.is_free_space:
        return _out(np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1]))
    return _out(_ball_image(ambient.ball_radius, x, y))


# ------------------------------------------------------------- inclusions

def capacity(inclusion: Inclusion) -> float:
    if inclusion.shape is not Shape.BALL:
        raise UnsupportedShape(f"no capacity formula for shape {inclusion.shape!r}")
    return inclusion.radius


def _check_outside(inclusion: Inclusion, *pts):
    o = np.asarray(inclusion.center)
    limit = inclusion.radius * (1.0 - SURFACE_RTOL)
    for p in pts:
        if np.any(_norm(p - o) < limit):
            raise InsideInclusion(f"point strictly inside inclusion at {inclusion.center}")


def capacitary_potential(inclusion: Inclusion, x, check: bool = True):
    x = _points(x)
    if check:
        capacity(inclusion)
        _check_outside(inclusion, x)
    return _out(inclusion.radius / _norm(x - np.asarray(inclusion.center)))


def exterior_green(inclusion: Inclusion, x, y, check: bool = True):
    """Dirichlet Green's function of the exterior of a ball (Kelvin image)."""
    x, y = _points(x), _points(y)
    r = _norm(x - y)
    if check:
        capacity(inclusion)
        if np.any(r == 0.0):
            raise SingularPoint("exterior_green evaluated at x == y")
        _check_outside(inclusion, x, y)
    o = np.asarray(inclusion.center)
    a = inclusion.radius
    return _out(1.0 / (FOUR_PI * r) - a / (FOUR_PI * kelvin_distance(a, x - o, y - o)))


def exterior_regular_part(inclusion: Inclusion, x, y, check: bool = True):
    x, y = _points(x), _points(y)
    if check:
        capacity(inclusion)
        _check_outside(inclusion, x, y)
    o = np.asarray(inclusion.center)
    a = inclusion.radius
    return _out(a / (FOUR_PI * kelvin_distance(a, x - o, y - o)))


# ----------------------------------------------------------------- source

@dataclass(frozen=True)
class Bump:
    """``amplitude * (1 - |x-center|^2/rho^2)^exponent`` inside ``rho``, else 0."""

    center: tuple
    rho: float
    amplitude: float = 1.0
    exponent: int = 4

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        if int(self.exponent) != self.exponent or self.exponent < 2:
            raise ValueError("bump exponent must be an integer >= 2")
        object.__setattr__(self, "exponent", int(self.exponent))
        if not self.rho > 0:
            raise ValueError("bump support radius must be positive")

    @property
    def mass(self) -> float:
        """Total integral of the bump."""
        return FOUR_PI * self.amplitude * self.rho ** 3 * _inner_moment(self.exponent, 1.0)


@dataclass(frozen=True)
class PotentialValue:
    value: float
    gradient: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SourceTerm:
    bumps: tuple = ()
    max_support_diameter: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if self.support_diameter > self.max_support_diameter:
            raise ValueError(
                f"support diameter {self.support_diameter:.4g} exceeds "
                f"{self.max_support_diameter:.4g}"
            )

    @property
    def support_diameter(self) -> float:
        if not self.bumps:
            return 0.0
        cs = np.array([b.center for b in self.bumps])
        rs = np.array([b.rho for b in self.bumps])
        gaps = np.linalg.norm(cs[:, None] - cs[None, :], axis=-1) + rs[:, None] + rs[None, :]
        return float(max(gaps.max(), 2 * rs.max()))

    @property
    def sup_norm(self) -> float:
        # upper bound; exact when the supports are disjoint
        return float(sum(abs(b.amplitude) for b in self.bumps))

    def scaled(self, factor: float) -> "SourceTerm":
        bumps = tuple(
            Bump(b.center, b.rho, b.amplitude * factor, b.exponent) for b in self.bumps
        )
        return SourceTerm(bumps, self.max_support_diameter)


def _binomial_terms(k: int):
    i = np.arange(k + 1)
    return i, comb(k, i, exact=False) * (-1.0) ** i


def _inner_moment(k: int, u):
    """``int_0^u t^2 (1 - t^2)^k dt``."""
    i, c = _binomial_terms(k)
    u = np.asarray(u, dtype=float)[..., None]
    return np.sum(c * u ** (2 * i + 3) / (2 * i + 3), axis=-1)


def _bump_potential(b: Bump, r: np.ndarray) -> np.ndarray:
    rho, k = b.rho, b.exponent
    u = np.minimum(r / rho, 1.0)
    inside = r < rho
    i, c = _binomial_terms(k)
    # inner branch: (1/r) int_0^r s^2 f + int_r^rho s f, divided by amplitude*rho^2
    series = np.sum(c * u[..., None] ** (2 * i + 2) / (2 * i + 3), axis=-1)
    tail = (1.0 - u * u) ** (k + 1) / (2.0 * (k + 1))
    inner = rho ** 2 * (series + tail)
    safe_r = np.where(inside, 1.0, r)
    outer = rho ** 3 * _inner_moment(k, 1.0) / safe_r
    return b.amplitude * np.where(inside, inner, outer)


def _bump_radial_derivative(b: Bump, r: np.ndarray) -> np.ndarray:
    # d/dr N = -(1/r^2) int_0^r s^2 f(s) ds
    u = np.minimum(r / b.rho, 1.0)
    safe_r = np.where(r > 0, r, 1.0)
    q = b.rho ** 3 * _inner_moment(b.exponent, u)
    return np.where(r > 0, -b.amplitude * q / safe_r ** 2, 0.0)


def evaluate_source(f: SourceTerm, x):
    x = _points(x)
    total = np.zeros(x.shape[:-1])
    for b in f.bumps:
        s = _norm(x - np.asarray(b.center)) ** 2 / b.rho ** 2
        total = total + np.where(s < 1.0, b.amplitude * np.clip(1.0 - s, 0, None) ** b.exponent, 0.0)
    return _out(total)


def newtonian_potential(f: SourceTerm, x):
    """Volume potential ``int f(y) / (4 pi |x - y|) dy`` in closed form."""
    x = _points(x)
    total = np.zeros(x.shape[:-1])
    for b in f.bumps:
        total = total + _bump_potential(b, _norm(x - np.asarray(b.center)))
    return _out(total)


def newtonian_gradient(f: SourceTerm, x) -> np.ndarray:
    x = _points(x)
    grad = np.zeros(x.shape)
    for b in f.bumps:
        dx = x - np.asarray(b.center)
        r = _norm(dx)
        dr = _bump_radial_derivative(b, r)
        safe_r = np.where(r > 0, r, 1.0)
        grad = grad + (dr / safe_r)[..., None] * dx
    return grad


def potential_with_gradient(f: SourceTerm, x) -> PotentialValue:
    x = _points(x)
    if x.shape != (3,):
        raise ValueError("potential_with_gradient takes a single point")
    return PotentialValue(newtonian_potential(f, x), newtonian_gradient(f, x))


# ------------------------------------------------------ unperturbed solution

def sphere_product_rule(n_theta: int = 32, n_phi: int = 64):
    """Gauss-Legendre (in cos theta) x trapezoid (in phi) rule on the unit sphere."""
    mu, w_mu = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    mu_g, phi_g = np.meshgrid(mu, phi, indexing="ij")
    s = np.sqrt(1.0 - mu_g ** 2)
    nodes = np.stack([s * np.cos(phi_g), s * np.sin(phi_g), mu_g], axis=-1).reshape(-1, 3)
    weights = np.outer(w_mu, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return nodes, weights


class BallHarmonicExtension:
    """Harmonic extension of boundary data into a ball via the Poisson kernel.

    The Poisson kernel is expanded in Legendre polynomials up to ``degree`` and
    integrated against the boundary data with :func:`sphere_product_rule`, which
    is exact for the truncated kernel times band-limited data.
    """

    def __init__(self, radius: float, boundary_values, n_theta: int = 32, n_phi: int = 64,
                 degree: Optional[int] = None):
        self.radius = float(radius)
        self.nodes, weights = sphere_product_rule(n_theta, n_phi)
        self.degree = n_theta - 1 if degree is None else int(degree)
        self.weighted = weights * boundary_values(self.radius * self.nodes)

    def __call__(self, x, chunk: int = 512):
        x = _points(x)
        flat = x.reshape(-1, 3)
        out = np.empty(len(flat))
        for start in range(0, len(flat), chunk):
            out[start:start + chunk] = self._evaluate(flat[start:start + chunk])
        return _out(out.reshape(x.shape[:-1]))

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        r = _norm(pts)
        s = (r / self.radius)[:, None]
        unit = np.where(r[:, None] > 0, pts / np.where(r > 0, r, 1.0)[:, None], [0.0, 0.0, 1.0])
        t = unit @ self.nodes.T
        p_prev = np.ones_like(t)
        p_cur = t
        acc = p_prev.copy()
        if self.degree >= 1:
            acc += 3.0 * s * p_cur
        s_pow = s.copy()
        for l in range(1, self.degree):
            p_prev, p_cur = p_cur, ((2 * l + 1) * t * p_cur - l * p_prev) / (l + 1)
            s_pow = s_pow * s
            acc += (2 * l + 3) * s_pow * p_cur
        return acc @ self.weighted / FOUR_PI


@lru_cache(maxsize=64)
def _ball_correction(radius: float, f: SourceTerm, n_theta: int, n_phi: int):
    return BallHarmonicExtension(radius, lambda p: newtonian_potential(f, p), n_theta, n_phi)


def unperturbed_solution(ambient: AmbientDomain, f: SourceTerm, x, check: bool = True,
                         n_theta: int = 32, n_phi: int = 64):
    """Solution of ``-Laplace v = f`` in the ambient domain with zero Dirichlet data."""
    x = _points(x)
    if check:
        _check_in_ambient(ambient, x)
    v = np.asarray(newtonian_potential(f, x))
    if not ambient.is_free_space and f.bumps:
        v = v - np.asarray(_ball_correction(ambient.ball_radius, f, n_theta, n_phi)(x))
    return _out(v)


def unperturbed_gradient(ambient: AmbientDomain, f: SourceTerm, x, step: float = 1e-5):
    """Gradient of the unperturbed solution (analytic in free space, else FD)."""
    x = _points(x)
    if ambient.is_free_space:
        return newtonian_gradient(f, x)
    grad = np.zeros(x.shape)
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = step
        grad[..., axis] = (
            np.asarray(unperturbed_solution(ambient, f, x + e, check=False))
            - np.asarray(unperturbed_solution(ambient, f, x - e, check=False))
        ) / (2 * step)
    return grad
