"""Asymptotic approximations of the solution and of Green's function in the
perforated domain.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsideInclusion, OutOfDomain, SingularPoint, WrongAmbient
from .geometry import AmbientDomain, InclusionCloud, SeparationParams, separation_parameters
from .kernels import (
    FOUR_PI,
    SURFACE_RTOL,
    SourceTerm,
    _norm,
    _out,
    _points,
    ambient_green,
    ambient_regular_part,
    kelvin_distance,
    unperturbed_solution,
)
from .system import (
    InteractionMatrix,
    InteractionSystem,
    assemble_system,
    interaction_matrix,
    solve_system,
)

log = logging.getLogger(__name__)

NEAR_SURFACE_FRACTION = 0.1


def fingerprint(cloud: InclusionCloud, ambient: AmbientDomain, source: Optional[SourceTerm]) -> str:
    payload = {
        "centers": cloud.centers.tolist(),
        "radii": cloud.radii.tolist(),
        "ambient": [ambient.kind, ambient.ball_radius],
        "source": None
        if source is None
        else [[b.center, b.rho, b.amplitude, b.exponent] for b in source.bumps],
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class MesoModel:
    cloud: InclusionCloud
    ambient: AmbientDomain
    source: Optional[SourceTerm]
    system: InteractionSystem
    cmat: InteractionMatrix
    params: SeparationParams
    key: str

    @property
    def n(self) -> int:
        return len(self.cloud)

    @property
    def centers(self) -> np.ndarray:
        return self.cloud.centers

    @property
    def radii(self) -> np.ndarray:
        return self.cloud.radii

    def matches(self, cloud, ambient, source) -> bool:
        return self.key == fingerprint(cloud, ambient, source)


def build_model(
    cloud: InclusionCloud, ambient: AmbientDomain, source: Optional[SourceTerm] = None
) -> MesoModel:
    """Assemble and solve the interaction system for a cloud."""
    params = separation_parameters(cloud) if len(cloud) else SeparationParams(0.0, math.inf, 0)
    system = solve_system(assemble_system(cloud, ambient, source), params)
    cmat = interaction_matrix(system)
    return MesoModel(cloud, ambient, source, system, cmat, params,
                     fingerprint(cloud, ambient, source))


# ------------------------------------------------------------ primitives

def _check_point(model: MesoModel, x: np.ndarray):
    amb = model.ambient
    if not amb.is_free_space and np.any(_norm(x) > amb.ball_radius * (1 + SURFACE_RTOL)):
        raise OutOfDomain("evaluation point outside the ambient ball")
    if model.n:
        r = _norm(x[..., None, :] - model.centers)
        if np.any(r < model.radii * (1 - SURFACE_RTOL)):
            raise InsideInclusion("evaluation point inside an inclusion")


def _potentials(model: MesoModel, x: np.ndarray) -> np.ndarray:
    """Capacitary potentials ``P_j(x)``, shape ``(..., N)``."""
    return model.radii / _norm(x[..., None, :] - model.centers)


def _regular(model: MesoModel, x: np.ndarray) -> np.ndarray:
    """``H(x, O_j)``, shape ``(..., N)``."""
    return np.asarray(
        ambient_regular_part(model.ambient, x[..., None, :], model.centers, check=False)
    )


def _t_values(model: MesoModel, x: np.ndarray) -> np.ndarray:
    return _potentials(model, x) - FOUR_PI * model.radii * _regular(model, x)


def near_surface_flags(model: MesoModel, x) -> np.ndarray:
    """True where a point lies within ``0.1 * eps_j`` of some inclusion surface."""
    x = _points(x)
    if not model.n:
        return np.zeros(x.shape[:-1], dtype=bool)
    gap = _norm(x[..., None, :] - model.centers) - model.radii
    return np.any(gap < NEAR_SURFACE_FRACTION * 2 * model.radii, axis=-1)


# ---------------------------------------------------------------- solution

def correction_field(model: MesoModel, x, check: bool = True):
    """``sum_j C_j (P_j(x) - 4 pi cap_j H(x, O_j))``."""
    x = _points(x)
    if check:
        _check_point(model, x)
    if not model.n:
        return _out(np.zeros(x.shape[:-1]))
    return _out(_t_values(model, x) @ model.system.C)


def approximate_solution(model: MesoModel, x, check: bool = True):
    """Meso-scale approximation of the Dirichlet-Poisson solution at ``x``."""
    if model.source is None:
        raise ValueError("model has no source term")
    x = _points(x)
    if check:
        _check_point(model, x)
    v = np.asarray(unperturbed_solution(model.ambient, model.source, x, check=False))
    return _out(v + np.asarray(correction_field(model, x, check=False)))


# ----------------------------------------------------------------- green

def t_function(model: MesoModel, j: int, y, check: bool = True):
    """``T_j(y) = P_j(y) - 4 pi cap_j H(O_j, y)``."""
    y = _points(y)
    if check:
        _check_point(model, y)
    o = model.centers[j]
    a = model.radii[j]
    h = np.asarray(ambient_regular_part(model.ambient, o, y, check=False))
    return _out(a / _norm(y - o) - FOUR_PI * a * h)


def _check_pair(model: MesoModel, x, y):
    _check_point(model, x)
    _check_point(model, y)
    if np.any(_norm(x - y) == 0):
        raise SingularPoint("Green's function evaluated at x == y")


def _exterior_regular(model: MesoModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``h_j(x, y)`` for every inclusion, shape ``(..., N)``."""
    xp = x[..., None, :] - model.centers
    yp = y[..., None, :] - model.centers
    return model.radii / (FOUR_PI * kelvin_distance(model.radii, xp, yp))


def approximate_green(model: MesoModel, x, y, check: bool = True):
    """Meso-scale approximation of Green's function of the perforated domain."""
    x, y = np.broadcast_arrays(_points(x), _points(y))
    if check:
        _check_pair(model, x, y)
    g = np.asarray(ambient_green(model.ambient, x, y, check=False))
    if not model.n:
        return _out(g)
    a = model.radii
    px, py = _potentials(model, x), _potentials(model, y)
    hx, hy = _regular(model, x), _regular(model, y)
    tx = px - FOUR_PI * a * hx
    ty = py - FOUR_PI * a * hy
    h_diag = np.asarray(
        ambient_regular_part(model.ambient, model.centers, model.centers, check=False)
    )
    local = (
        _exterior_regular(model, x, y)
        - py * hx
        - px * hy
        + FOUR_PI * a * hx * hy
        + h_diag * tx * ty
    )
    coupling = np.einsum("...i,ij,...j->...", tx, model.cmat.Cmat, ty)
    return _out(g - local.sum(axis=-1) + coupling)


def approximate_green_freespace(model: MesoModel, x, y, check: bool = True):
    """Free-space form with the interaction sum restricted to ``i != j``."""
    if not model.ambient.is_free_space:
        raise WrongAmbient("the simplified formula applies to free space only")
    x, y = np.broadcast_arrays(_points(x), _points(y))
    if check:
        _check_pair(model, x, y)
    n = model.n
    free = 1.0 / (FOUR_PI * _norm(x - y))
    if not n:
        return _out(free)
    ext = free[..., None] - _exterior_regular(model, x, y)
    off = model.cmat.Cmat - np.diag(np.diag(model.cmat.Cmat))
    px, py = _potentials(model, x), _potentials(model, y)
    coupling = np.einsum("...i,ij,...j->...", px, off, py)
    return _out((1 - n) * free + ext.sum(axis=-1) + coupling)


def diagonal_interaction_term(model: MesoModel, x, y):
    """``sum_j Cmat_jj P_j(x) P_j(y)``: the gap between the two Green formulas."""
    x, y = np.broadcast_arrays(_points(x), _points(y))
    if not model.n:
        return _out(np.zeros(x.shape[:-1]))
    px, py = _potentials(model, x), _potentials(model, y)
    return _out(np.sum(np.diag(model.cmat.Cmat) * px * py, axis=-1))
