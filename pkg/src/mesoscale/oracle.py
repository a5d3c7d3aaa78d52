"""Method-of-fundamental-solutions reference solver for the perforated domain.

Point sources sit on proxy spheres inside every inclusion and use the ambient
Green's function as kernel, so the outer boundary condition and the decay at
infinity hold identically; only the inclusion spheres are collocated. The
overdetermined collocation system is solved by truncated SVD.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import IllConditioned, InsideInclusion, SingularPoint
from .geometry import AmbientDomain, InclusionCloud
from .kernels import _norm, _out, _points, ambient_green, unperturbed_solution, SourceTerm

log = logging.getLogger(__name__)

_GOLDEN = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class OracleConfig:
    sources_per_inclusion: int = 128
    collocation_per_inclusion: int = 256
    proxy_radius_factor: float = 0.15
    holdout_fraction: float = 0.2
    rank_rtol: float = 1e-12
    trust_threshold: float = 1e-6
    # add the Kelvin images of a Green's-function pole to the basis
    image_augmentation: bool = True

    def __post_init__(self):
        if self.collocation_per_inclusion < 1.5 * self.sources_per_inclusion:
            raise ValueError("collocation_per_inclusion must be >= 1.5 * sources_per_inclusion")
        if not 0 < self.proxy_radius_factor < 1:
            raise ValueError("proxy_radius_factor must lie in (0, 1)")
        if not 0 <= self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must lie in [0, 1)")
        n_fit = self.collocation_per_inclusion - self.n_holdout
        if n_fit < self.sources_per_inclusion:
            raise ValueError("too few fitting points after holdout")

    @property
    def n_holdout(self) -> int:
        return int(round(self.holdout_fraction * self.collocation_per_inclusion))

    @classmethod
    def from_dict(cls, data: dict) -> "OracleConfig":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def fibonacci_sphere(n: int, rotation: Optional[np.ndarray] = None) -> np.ndarray:
    """``n`` nearly uniform unit vectors on the golden spiral."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = _GOLDEN * k
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return pts if rotation is None else pts @ rotation.T


def _rotation(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


# fixed so collocation nodes never line up with proxy sources
_COLLOCATION_ROTATION = _rotation((1.0, 2.0, 3.0), 1.0)


def _kernel(ambient: AmbientDomain, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.asarray(ambient_green(ambient, x[:, None, :], s[None, :, :], check=False))


@dataclass
class OracleSolution:
    """Fundamental-solution charges plus explicit image charges.

    ``charges`` has one column per right-hand side. ``evaluate`` returns the
    harmonic correction field (not including the incident field).
    """

    sources: np.ndarray
    charges: np.ndarray
    boundary_residual: np.ndarray
    data_scale: np.ndarray
    config: OracleConfig
    ambient: AmbientDomain
    image_points: Optional[np.ndarray] = None
    image_weights: Optional[np.ndarray] = None
    cloud: Optional[InclusionCloud] = field(default=None, repr=False)

    @property
    def absolute_residual(self) -> np.ndarray:
        return self.boundary_residual * self.data_scale

    @property
    def trusted(self) -> bool:
        return bool(np.all(self.boundary_residual <= self.config.trust_threshold))

    @property
    def n_rhs(self) -> int:
        return self.charges.shape[1]

    def evaluate(self, x, column: Optional[int] = None, chunk: int = 2048):
        """Correction field at ``x`` for one right-hand side (default: the only one)."""
        if column is None:
            if self.n_rhs != 1:
                raise ValueError("several right-hand sides: pass column or use evaluate_paired")
            column = 0
        x = _points(x)
        flat = x.reshape(-1, 3)
        out = np.empty(len(flat))
        q = self.charges[:, column]
        for start in range(0, len(flat), chunk):
            block = flat[start:start + chunk]
            val = _kernel(self.ambient, block, self.sources) @ q
            if self.image_points is not None:
                val = val + _kernel(self.ambient, block, self.image_points[column]) @ self.image_weights[column]
            out[start:start + chunk] = val
        return _out(out.reshape(x.shape[:-1]))

    def evaluate_paired(self, x) -> np.ndarray:
        """Row ``i`` of ``x`` evaluated with right-hand side ``i``."""
        x = _points(x).reshape(-1, 3)
        if len(x) != self.n_rhs:
            raise ValueError("need one point per right-hand side")
        k = _kernel(self.ambient, x, self.sources)
        val = np.einsum("ij,ji->i", k, self.charges)
        if self.image_points is not None:
            for i in range(len(x)):
                val[i] += _kernel(self.ambient, x[i:i + 1], self.image_points[i])[0] @ self.image_weights[i]
        return val


class MFSOracle:
    """Factorized collocation system for one cloud, reusable across data."""

    def __init__(self, cloud: InclusionCloud, ambient: AmbientDomain,
                 config: Optional[OracleConfig] = None):
        self.cloud = cloud
        self.ambient = ambient
        self.config = config or OracleConfig()
        cfg = self.config
        n = len(cloud)
        centers, radii = cloud.centers, cloud.radii

        src_dirs = fibonacci_sphere(cfg.sources_per_inclusion)
        col_dirs = fibonacci_sphere(cfg.collocation_per_inclusion, _COLLOCATION_ROTATION)
        self.sources = (
            centers[:, None, :] + cfg.proxy_radius_factor * radii[:, None, None] * src_dirs
        ).reshape(-1, 3)
        self.collocation = (centers[:, None, :] + radii[:, None, None] * col_dirs).reshape(-1, 3)

        hold = np.zeros(cfg.collocation_per_inclusion, dtype=bool)
        if cfg.n_holdout:
            hold[np.linspace(0, cfg.collocation_per_inclusion - 1, cfg.n_holdout).astype(int)] = True
        self.holdout = np.tile(hold, n)

        if n == 0:
            self._u = self._s = self._vt = None
            self.rank = 0
            return
        A = _kernel(ambient, self.collocation, self.sources)
        self._a_hold = A[self.holdout]
        u, s, vt = np.linalg.svd(A[~self.holdout], full_matrices=False)
        keep = s > cfg.rank_rtol * s[0]
        self.rank = int(keep.sum())
        if self.rank < 0.5 * len(s):
            raise IllConditioned(
                f"collocation matrix rank {self.rank} of {len(s)} at rtol {cfg.rank_rtol:g}"
            )
        self._u, self._s, self._vt = u[:, keep], s[keep], vt[keep]

    def solve(self, data: np.ndarray, scale=None, **extras) -> OracleSolution:
        """Fit charges to boundary ``data`` given at ``self.collocation``.

        ``data`` is ``(n_colloc,)`` or ``(n_colloc, k)`` for ``k`` right-hand
        sides. Residuals are reported relative to ``scale`` (default: the sup
        norm of ``data`` per column).
        """
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        k = data.shape[1]
        if scale is None:
            scale = np.abs(data).max(axis=0) if len(data) else np.zeros(k)
        scale = np.broadcast_to(np.asarray(scale, dtype=float), (k,))
        if self._u is None:
            charges = np.zeros((0, k))
            rel = np.zeros(k)
        else:
            fit = data[~self.holdout]
            charges = self._vt.T @ ((self._u.T @ fit) / self._s[:, None])
            miss = np.abs(self._a_hold @ charges - data[self.holdout]).max(axis=0)
            safe = np.where(scale > 0, scale, 1.0)
            rel = np.where(scale > 0, miss / safe, miss)
        sol = OracleSolution(
            sources=self.sources,
            charges=charges,
            boundary_residual=rel,
            data_scale=scale,
            config=self.config,
            ambient=self.ambient,
            cloud=self.cloud,
            **extras,
        )
        if not sol.trusted:
            log.warning("oracle solution untrusted: relative residual %.3g", float(rel.max()))
        return sol


@lru_cache(maxsize=16)
def oracle_solver(cloud: InclusionCloud, ambient: AmbientDomain,
                  config: Optional[OracleConfig] = None) -> MFSOracle:
    return MFSOracle(cloud, ambient, config)


def oracle_solve(cloud: InclusionCloud, ambient: AmbientDomain,
                 boundary_trace: Callable[[np.ndarray], np.ndarray],
                 config: Optional[OracleConfig] = None) -> OracleSolution:
    """Harmonic field in the perforated domain equal to ``boundary_trace`` on
    the inclusion spheres and vanishing on the ambient boundary / at infinity.
    """
    solver = oracle_solver(cloud, ambient, config or OracleConfig())
    return solver.solve(np.asarray(boundary_trace(solver.collocation), dtype=float))


def _check_exterior(cloud: InclusionCloud, x: np.ndarray):
    if len(cloud):
        r = _norm(x[..., None, :] - cloud.centers)
        if np.any(r < cloud.radii * (1 - 1e-12)):
            raise InsideInclusion("oracle evaluation point inside an inclusion")


def solve_u(cloud: InclusionCloud, ambient: AmbientDomain, f: SourceTerm,
            config: Optional[OracleConfig] = None) -> OracleSolution:
    """Oracle correction with boundary data ``-v_f`` on every inclusion."""
    return oracle_solve(
        cloud, ambient, lambda p: -np.asarray(unperturbed_solution(ambient, f, p, check=False)),
        config,
    )


def oracle_u(cloud: InclusionCloud, ambient: AmbientDomain, f: SourceTerm, x,
             config: Optional[OracleConfig] = None, solution: Optional[OracleSolution] = None):
    """Reference solution ``u = v_f + correction`` at ``x``."""
    x = _points(x)
    _check_exterior(cloud, x)
    v = np.asarray(unperturbed_solution(ambient, f, x))
    if not len(cloud):
        return _out(v)
    sol = solution if solution is not None else solve_u(cloud, ambient, f, config)
    return _out(v + np.asarray(sol.evaluate(x)))


def _kelvin_images(cloud: InclusionCloud, y: np.ndarray):
    """Image points and weights of unit poles at ``y`` in every inclusion sphere."""
    rel = y[:, None, :] - cloud.centers
    dist2 = np.einsum("mjk,mjk->mj", rel, rel)
    a = cloud.radii
    points = cloud.centers + (a ** 2 / dist2)[..., None] * rel
    weights = -a / np.sqrt(dist2)
    return points, weights


def solve_green(cloud: InclusionCloud, ambient: AmbientDomain, y,
                config: Optional[OracleConfig] = None) -> OracleSolution:
    """Oracle corrections for poles at each row of ``y`` (one RHS per pole)."""
    config = config or OracleConfig()
    y = _points(y).reshape(-1, 3)
    _check_exterior(cloud, y)
    solver = oracle_solver(cloud, ambient, config)
    col = solver.collocation
    base = _kernel(ambient, col, y)
    # residuals are measured against the full Dirichlet data -G(., y)
    scale = np.abs(base).max(axis=0)
    extras = {}
    if config.image_augmentation and len(cloud):
        pts, wts = _kelvin_images(cloud, y)
        for i in range(len(y)):
            base[:, i] += _kernel(ambient, col, pts[i]) @ wts[i]
        extras = {"image_points": pts, "image_weights": wts}
    return solver.solve(-base, scale=scale, **extras)


def oracle_green(cloud: InclusionCloud, ambient: AmbientDomain, x, y,
                 config: Optional[OracleConfig] = None,
                 solution: Optional[OracleSolution] = None):
    """Reference Green's function of the perforated domain for paired ``x``, ``y``."""
    single_pole = _points(y).ndim == 1
    x, y = np.broadcast_arrays(_points(x), _points(y))
    shape = x.shape[:-1]
    xf, yf = x.reshape(-1, 3), y.reshape(-1, 3)
    if np.any(_norm(xf - yf) == 0):
        raise SingularPoint("oracle_green evaluated at x == y")
    _check_exterior(cloud, xf)
    g = np.asarray(ambient_green(ambient, xf, yf))
    if not len(cloud):
        return _out(g.reshape(shape))
    if single_pole:
        # one pole shared by every x: a single right-hand side
        sol = solution if solution is not None else solve_green(cloud, ambient, yf[:1], config)
        corr = np.asarray(sol.evaluate(xf, column=0)).reshape(-1)
    else:
        sol = solution if solution is not None else solve_green(cloud, ambient, yf, config)
        corr = sol.evaluate_paired(xf)
    return _out((g + corr).reshape(shape))
