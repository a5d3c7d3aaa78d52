"""Inclusion clouds, separation parameters and admissibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyCloud, PackingFailed

FREE_SPACE = "free_space"
BALL = "ball"

DEFAULT_REGIME_CONSTANT = 0.1
LEMMA1_FACTOR = 5.0 / (24.0 * math.pi)


class Shape(str, Enum):
    BALL = "ball"


@dataclass(frozen=True)
class Inclusion:
    center: tuple
    radius: float
    shape: Shape = Shape.BALL

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        if len(center) != 3:
            raise ValueError(f"center must have 3 coordinates, got {len(center)}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "shape", Shape(self.shape))
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class InclusionCloud:
    """Ordered collection of small inclusions plus the enclosing set omega.

    Disjointness is *not* enforced here so that :func:`validate_cloud` can
    report overlapping input. When ``omega_center``/``omega_diameter`` are
    omitted, omega is the bounding ball of the inclusions inflated by ``2 d``.
    """

    inclusions: tuple = ()
    omega_center: Optional[tuple] = None
    omega_diameter: Optional[float] = None

    def __post_init__(self):
        incs = tuple(self.inclusions)
        object.__setattr__(self, "inclusions", incs)
        if self.omega_center is None or self.omega_diameter is None:
            center, diameter = _default_omega(incs)
            if self.omega_center is None:
                object.__setattr__(self, "omega_center", center)
            if self.omega_diameter is None:
                object.__setattr__(self, "omega_diameter", diameter)
        object.__setattr__(self, "omega_center", tuple(float(c) for c in self.omega_center))
        object.__setattr__(self, "omega_diameter", float(self.omega_diameter))

    def __len__(self):
        return len(self.inclusions)

    @cached_property
    def centers(self) -> np.ndarray:
        if not self.inclusions:
            return np.zeros((0, 3))
        return np.array([inc.center for inc in self.inclusions], dtype=float)

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([inc.radius for inc in self.inclusions], dtype=float)

    def with_radii(self, radius) -> "InclusionCloud":
        """Same centers and omega, new radii (scalar or per-inclusion)."""
        radii = np.broadcast_to(np.asarray(radius, dtype=float), (len(self),))
        incs = tuple(
            Inclusion(inc.center, r, inc.shape) for inc, r in zip(self.inclusions, radii)
        )
        return InclusionCloud(incs, self.omega_center, self.omega_diameter)


@dataclass(frozen=True)
class SeparationParams:
    epsilon: float
    d: float
    n: int


@dataclass(frozen=True)
class AmbientDomain:
    kind: str = FREE_SPACE
    ball_radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (FREE_SPACE, BALL):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.kind == BALL:
            if self.ball_radius is None or not self.ball_radius > 0:
                raise ValueError("ball ambient needs a positive ball_radius")
            object.__setattr__(self, "ball_radius", float(self.ball_radius))
        elif self.ball_radius is not None:
            object.__setattr__(self, "ball_radius", None)

    @property
    def is_free_space(self) -> bool:
        return self.kind == FREE_SPACE

    @classmethod
    def free_space(cls) -> "AmbientDomain":
        return cls(FREE_SPACE)

    @classmethod
    def ball(cls, radius: float) -> "AmbientDomain":
        return cls(BALL, radius)


@dataclass(frozen=True)
class ValidationReport:
    disjoint: bool
    omega_containment: bool
    clearance_ok: bool
    lemma1_ok: bool
    lemma1_slack: float
    regime_thm1: bool
    regime_thm3: bool
    c_used: float
    omega_diameter: float
    notes: tuple = field(default_factory=tuple)

    @property
    def admissible(self) -> bool:
        return self.disjoint and self.omega_containment and self.clearance_ok


@dataclass(frozen=True)
class CloudSpec:
    pattern: str = "lattice"
    radius: float = 0.01
    spacing: float = 0.25
    n_per_axis: Optional[int] = None
    n: Optional[int] = None
    jitter_fraction: float = 0.0
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "CloudSpec":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _pairwise_distances(centers: np.ndarray) -> np.ndarray:
    diff = centers[:, None, :] - centers[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _bounding_ball(centers: np.ndarray, radii: np.ndarray):
    mid = 0.5 * (centers.min(axis=0) + centers.max(axis=0))
    reach = np.linalg.norm(centers - mid, axis=1) + radii
    return mid, float(reach.max())


def _default_omega(inclusions):
    if not inclusions:
        return (0.0, 0.0, 0.0), 1.0
    centers = np.array([inc.center for inc in inclusions], dtype=float)
    radii = np.array([inc.radius for inc in inclusions], dtype=float)
    mid, reach = _bounding_ball(centers, radii)
    if len(inclusions) > 1:
        margin = 2.0 * 0.5 * _min_offdiag(_pairwise_distances(centers))
    else:
        margin = 2.0 * float(radii.max())
    return tuple(mid), 2.0 * (reach + margin)


def _min_offdiag(dist: np.ndarray) -> float:
    masked = dist + np.diag(np.full(len(dist), np.inf))
    return float(masked.min())


def separation_parameters(cloud: InclusionCloud) -> SeparationParams:
    """Largest inclusion diameter and half the smallest center distance.

    For a single inclusion ``d`` is ``inf``.
    """
    n = len(cloud)
    if n == 0:
        raise EmptyCloud("separation parameters need at least one inclusion")
    epsilon = float(2.0 * cloud.radii.max())
    if n == 1:
        return SeparationParams(epsilon, math.inf, 1)
    d = 0.5 * _min_offdiag(_pairwise_distances(cloud.centers))
    return SeparationParams(epsilon, d, n)


def validate_cloud(
    cloud: InclusionCloud,
    ambient: AmbientDomain,
    c: float = DEFAULT_REGIME_CONSTANT,
) -> ValidationReport:
    """Check geometric admissibility and the regime conditions of the estimates.

    Regime failures are reported, never raised.
    """
    if not c > 0:
        raise ValueError("regime constant c must be positive")
    notes = []
    n = len(cloud)
    centers, radii = cloud.centers, cloud.radii
    omega_c = np.asarray(cloud.omega_center)
    omega_r = 0.5 * cloud.omega_diameter

    if n == 0:
        params = SeparationParams(0.0, math.inf, 0)
        disjoint = True
        contained = True
    else:
        params = separation_parameters(cloud)
        if n > 1:
            dist = _pairwise_distances(centers)
            gap = dist - (radii[:, None] + radii[None, :])
            np.fill_diagonal(gap, np.inf)
            disjoint = bool((gap > 0).all())
        else:
            disjoint = True
        reach = np.linalg.norm(centers - omega_c, axis=1) + radii
        contained = bool((reach < omega_r).all())

    d = params.d
    finite_d = math.isfinite(d)
    if ambient.is_free_space:
        clearance_ok = True
    else:
        outer = float(np.linalg.norm(omega_c)) + omega_r
        gap = ambient.ball_radius - outer
        clearance_ok = gap > 0 and (not finite_d or gap >= 2.0 * d)
        if not clearance_ok:
            notes.append(f"omega reaches within {gap:.6g} of the ambient boundary")

    cap_max = float(radii.max()) if n else 0.0
    threshold = LEMMA1_FACTOR * d if finite_d else math.inf
    lemma1_ok = cap_max < threshold
    slack = threshold - cap_max

    eps = params.epsilon
    regime_thm1 = (not finite_d) or eps < c * d ** 1.75
    regime_thm3 = (not finite_d) or eps < c * d ** 2

    if abs(cloud.omega_diameter - 1.0) > 1e-12:
        notes.append(
            f"diam(omega) = {cloud.omega_diameter:.6g}; estimates assume unit diameter"
        )
    return ValidationReport(
        disjoint=disjoint,
        omega_containment=contained,
        clearance_ok=bool(clearance_ok),
        lemma1_ok=bool(lemma1_ok),
        lemma1_slack=float(slack),
        regime_thm1=bool(regime_thm1),
        regime_thm3=bool(regime_thm3),
        c_used=float(c),
        omega_diameter=cloud.omega_diameter,
        notes=tuple(notes),
    )


def _lattice_centers(n_per_axis: int, spacing: float) -> np.ndarray:
    ticks = (np.arange(n_per_axis) - 0.5 * (n_per_axis - 1)) * spacing
    gx, gy, gz = np.meshgrid(ticks, ticks, ticks, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


def _random_centers(n: int, spacing: float, rng, max_attempts: int) -> np.ndarray:
    side = spacing * max(1.0, 1.5 * n ** (1.0 / 3.0))
    accepted = []
    attempts = 0
    while len(accepted) < n:
        attempts += 1
        if attempts > max_attempts:
            raise PackingFailed(
                f"placed {len(accepted)} of {n} centers after {max_attempts} attempts"
            )
        p = (rng.random(3) - 0.5) * side
        if all(np.linalg.norm(p - q) >= spacing for q in accepted):
            accepted.append(p)
    return np.array(accepted)


def generate_cloud(spec: CloudSpec, max_attempts: Optional[int] = None) -> InclusionCloud:
    """Build a lattice, random or jittered-lattice cloud of equal balls.

    ``spacing`` is the lattice step (or the minimum center distance for the
    random pattern). omega is the bounding ball inflated by ``2 * spacing``.
    """
    if not spec.spacing > 2.0 * spec.radius:
        raise ValueError("spacing must exceed the inclusion diameter")
    if not 0.0 <= spec.jitter_fraction < 0.5:
        raise ValueError("jitter_fraction must lie in [0, 0.5)")
    rng = np.random.default_rng(spec.seed)

    if spec.pattern in ("lattice", "jittered-lattice"):
        if spec.n_per_axis is None or spec.n_per_axis < 1:
            raise ValueError(f"{spec.pattern} pattern needs n_per_axis >= 1")
        centers = _lattice_centers(spec.n_per_axis, spec.spacing)
        if spec.pattern == "jittered-lattice":
            jitter = spec.jitter_fraction * spec.spacing
            centers = centers + rng.uniform(-jitter, jitter, size=centers.shape)
    elif spec.pattern == "random":
        if spec.n is None or spec.n < 1:
            raise ValueError("random pattern needs n >= 1")
        attempts = max_attempts if max_attempts is not None else 1000 * spec.n
        centers = _random_centers(spec.n, spec.spacing, rng, attempts)
    else:
        raise ValueError(f"unknown pattern {spec.pattern!r}")

    radii = np.full(len(centers), spec.radius)
    mid, reach = _bounding_ball(centers, radii)
    incs = tuple(Inclusion(tuple(c), spec.radius) for c in centers)
    return InclusionCloud(incs, tuple(mid), 2.0 * (reach + 2.0 * spec.spacing))


def cloud_from_arrays(
    centers: Sequence, radii, omega_center=None, omega_diameter=None
) -> InclusionCloud:
    centers = np.atleast_2d(np.asarray(centers, dtype=float)).reshape(-1, 3)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
    incs = tuple(Inclusion(tuple(c), r) for c, r in zip(centers, radii))
    return InclusionCloud(incs, omega_center, omega_diameter)
