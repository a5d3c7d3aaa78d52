"""Interaction system ``(I + S D) C = -V_f``, interaction matrix and certificates."""

from __future__ import annotations

import logging
import math
import warnings
from pathlib import Path
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon

from .errors import OutOfDomain, RegimeWarning, SingularSystem
from .geometry import LEMMA1_FACTOR, AmbientDomain, InclusionCloud, SeparationParams
from .kernels import FOUR_PI, ambient_green, capacity, unperturbed_solution

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class InteractionSystem:
    S: np.ndarray
    caps: np.ndarray
    Vf: np.ndarray
    C: Optional[np.ndarray] = None
    condition_estimate: float = math.nan

    @property
    def n(self) -> int:
        return len(self.caps)

    @property
    def D(self) -> np.ndarray:
        return np.diag(FOUR_PI * self.caps)

    @property
    def matrix(self) -> np.ndarray:
        """``I + S D``."""
        return np.eye(self.n) + self.S * (FOUR_PI * self.caps)[None, :]

    def residual(self, C=None) -> float:
        C = self.C if C is None else C
        if self.n == 0:
            return 0.0
        return float(np.abs(self.matrix @ C + self.Vf).max())


@dataclass(frozen=True)
class InteractionMatrix:
    Cmat: np.ndarray
    operator_norm_estimate: float
    asymmetry: float


@dataclass(frozen=True)
class CertificateReport:
    lemma1_lhs: float
    lemma1_rhs: float
    lemma1_applicable: bool
    lemma1_holds: bool
    lemma2_ratio: float
    lemma3_ratio: float


def assemble_system(cloud: InclusionCloud, ambient: AmbientDomain, f=None) -> InteractionSystem:
    """Build ``S``, ``D`` and ``V_f`` for a cloud (``V_f = 0`` when ``f`` is None)."""
    n = len(cloud)
    centers = cloud.centers
    if n and not ambient.is_free_space:
        if np.any(np.linalg.norm(centers, axis=1) >= ambient.ball_radius):
            raise OutOfDomain("inclusion center outside the ambient ball")
    caps = np.array([capacity(inc) for inc in cloud.inclusions], dtype=float)
    S = np.zeros((n, n))
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        vals = ambient_green(ambient, centers[iu], centers[ju], check=False)
        S[iu, ju] = vals
        S[ju, iu] = vals
    if f is None or n == 0:
        Vf = np.zeros(n)
    else:
        Vf = np.atleast_1d(np.asarray(unperturbed_solution(ambient, f, centers), dtype=float))
    return InteractionSystem(S=S, caps=caps, Vf=Vf)


def _factorize(system: InteractionSystem):
    A = system.matrix
    anorm = np.abs(A).sum(axis=0).max()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = lu_factor(A, check_finite=True)
    rcond, _ = dgecon(lu, anorm, norm="1")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(cond) or cond * np.finfo(float).eps > 1e-2:
        raise SingularSystem(f"I + SD is numerically singular (cond ~ {cond:.3g})", cond)
    return (lu, piv), cond


def _lemma1_threshold(system: InteractionSystem, params: Optional[SeparationParams]) -> bool:
    if params is None or not math.isfinite(params.d) or system.n == 0:
        return True
    return float(system.caps.max()) < LEMMA1_FACTOR * params.d


def solve_coefficients(system: InteractionSystem, params: Optional[SeparationParams] = None):
    """Return ``C = -(I + S D)^{-1} V_f`` using dense LU with partial pivoting.

    Warns with :class:`RegimeWarning` (but still solves) when the capacity
    bound guaranteeing invertibility is violated.
    """
    return _solve(system, params)[0]


def _solve(system: InteractionSystem, params: Optional[SeparationParams]):
    if system.n == 0:
        return np.zeros(0), 1.0
    if not _lemma1_threshold(system, params):
        warnings.warn(
            "max capacity >= 5 d / (24 pi): invertibility of I + SD is not guaranteed",
            RegimeWarning,
            stacklevel=3,
        )
    factor, cond = _factorize(system)
    C = -lu_solve(factor, system.Vf)
    res = system.residual(C)
    if res > RESIDUAL_TOL * max(1.0, float(np.abs(system.Vf).max())):
        log.warning("interaction solve residual %.3g exceeds tolerance", res)
    return C, cond


def solve_system(system: InteractionSystem, params: Optional[SeparationParams] = None):
    """Solved copy of ``system`` carrying ``C`` and the condition estimate."""
    C, cond = _solve(system, params)
    return replace(system, C=C, condition_estimate=cond)


def interaction_matrix(system: InteractionSystem) -> InteractionMatrix:
    """``(I + S D)^{-1} S``, symmetrized; the raw asymmetry is kept as a diagnostic."""
    if system.n == 0:
        return InteractionMatrix(np.zeros((0, 0)), 0.0, 0.0)
    factor, _ = _factorize(system)
    raw = lu_solve(factor, system.S)
    scale = float(np.abs(raw).max())
    asym = float(np.abs(raw - raw.T).max() / scale) if scale > 0 else 0.0
    if asym > 1e-10:
        log.warning("interaction matrix asymmetry %.3g before symmetrization", asym)
    sym = 0.5 * (raw + raw.T)
    norm = float(np.linalg.norm(sym, 2)) if system.n else 0.0
    return InteractionMatrix(sym, norm, asym)


def certificates(
    system: InteractionSystem,
    C: np.ndarray,
    cmat: InteractionMatrix,
    params: SeparationParams,
) -> CertificateReport:
    caps, Vf = system.caps, system.Vf
    lhs = float(np.sum(caps * C ** 2))
    vf_energy = float(np.sum(caps * Vf ** 2))
    cap_max = float(caps.max()) if len(caps) else 0.0
    if math.isfinite(params.d):
        prefactor = 1.0 - cap_max / (LEMMA1_FACTOR * params.d)
    else:
        prefactor = 1.0
    applicable = prefactor > 0
    if applicable:
        rhs = vf_energy / prefactor ** 2
        holds = lhs <= rhs + 1e-12 * max(abs(rhs), np.finfo(float).tiny)
    else:
        rhs = math.nan
        holds = False

    vmax = float(np.abs(Vf).max()) if len(Vf) else 0.0
    cmax = float(np.abs(C).max()) if len(C) else 0.0
    lemma2 = cmax / vmax if vmax > 0 else 0.0
    if math.isfinite(params.d):
        lemma3 = cmat.operator_norm_estimate * params.d ** 3
    else:
        lemma3 = 0.0
    return CertificateReport(lhs, rhs, bool(applicable), bool(holds), lemma2, lemma3)


def dump_system(system: InteractionSystem, cmat: Optional[InteractionMatrix], directory):
    """Write S, D, Vf, C and the interaction matrix as CSV files."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "S.csv", system.S, delimiter=",", fmt="%.17g")
    np.savetxt(out / "D.csv", system.D, delimiter=",", fmt="%.17g")
    np.savetxt(out / "Vf.csv", system.Vf[:, None], delimiter=",", fmt="%.17g")
    if system.C is not None:
        np.savetxt(out / "C.csv", system.C[:, None], delimiter=",", fmt="%.17g")
    if cmat is not None:
        np.savetxt(out / "Cmat.csv", cmat.Cmat, delimiter=",", fmt="%.17g")
