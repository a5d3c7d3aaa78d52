"""Convergence studies: asymptotic fields against the oracle over parameter sweeps."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import OracleUntrusted, StepTooLarge
from .fields import (
    MesoModel,
    approximate_green,
    build_model,
    correction_field,
    diagonal_interaction_term,
)
from .geometry import (
    AmbientDomain,
    CloudSpec,
    InclusionCloud,
    generate_cloud,
    validate_cloud,
)
from .kernels import Bump, SourceTerm, _norm, ambient_green, unperturbed_solution
from .oracle import OracleConfig, OracleSolution, solve_green, solve_u

log = logging.getLogger(__name__)

SWEEPS = ("epsilon", "d", "N")
QUANTITIES = ("u", "green", "energy")
CSV_COLUMNS = (
    "sweep_value", "epsilon", "d", "N", "sup_error", "l2_error",
    "energy_error", "oracle_residual", "trusted",
)
TRUST_FRACTION = 0.01
MONOTONE_TOLERANCE = 0.1
# shell samples sit at distance a * (1 + t) from a center, t in [0, SHELL_DEPTH]
SHELL_DEPTH = 1.0
FAR_EXCLUSION = 2.0


# ------------------------------------------------------------------ specs

@dataclass(frozen=True)
class SampleSpec:
    """``count`` evaluation points, half on thin shells around the inclusions
    and half uniform in omega (``strategy="mixed"``), or all uniform."""

    count: int = 500
    strategy: str = "mixed"
    pairs: int = 100

    def __post_init__(self):
        if self.count < 1 or self.pairs < 0:
            raise ValueError("sample counts must be positive")
        if self.strategy not in ("mixed", "uniform"):
            raise ValueError(f"unknown sampling strategy {self.strategy!r}")

    @property
    def n_shell(self) -> int:
        return self.count // 2 if self.strategy == "mixed" else 0


@dataclass(frozen=True)
class StudySpec:
    sweep: str
    values: tuple
    base_cloud: CloudSpec
    source: Optional[SourceTerm] = None
    samples: SampleSpec = SampleSpec()
    quantity: str = "u"
    seed: int = 0
    ambient: AmbientDomain = AmbientDomain.free_space()
    oracle: OracleConfig = OracleConfig()
    mc_samples: int = 100_000
    fd_step_fraction: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if self.quantity not in QUANTITIES:
            raise ValueError(f"quantity must be one of {QUANTITIES}")
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) > 1:
            diffs = np.diff(vals)
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ValueError("sweep values must be strictly monotone")
        if self.quantity in ("u", "energy") and self.source is None:
            raise ValueError(f"quantity {self.quantity!r} needs a source term")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        return {
            "sweep": self.sweep,
            "values": list(self.values),
            "base_cloud": self.base_cloud.to_dict(),
            "source": None if self.source is None else source_to_dict(self.source),
            "samples": {"count": self.samples.count, "strategy": self.samples.strategy,
                        "pairs": self.samples.pairs},
            "quantity": self.quantity,
            "seed": self.seed,
            "ambient": {"kind": self.ambient.kind, "radius": self.ambient.ball_radius},
            "oracle": self.oracle.to_dict(),
            "mc_samples": self.mc_samples,
            "fd_step_fraction": self.fd_step_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StudySpec":
        amb = data.get("ambient") or {"kind": "free_space"}
        ambient = (AmbientDomain.free_space() if amb.get("kind", "free_space") == "free_space"
                   else AmbientDomain.ball(float(amb["radius"])))
        src = data.get("source")
        return cls(
            sweep=data["sweep"],
            values=tuple(data["values"]),
            base_cloud=CloudSpec.from_dict(data["base_cloud"]),
            source=None if src is None else source_from_dict(src),
            samples=SampleSpec(**data.get("samples", {})),
            quantity=data.get("quantity", "u"),
            seed=int(data.get("seed", 0)),
            ambient=ambient,
            oracle=OracleConfig.from_dict(data.get("oracle", {})),
            mc_samples=int(data.get("mc_samples", 100_000)),
            fd_step_fraction=float(data.get("fd_step_fraction", 0.1)),
            threads=int(data.get("threads", 1)),
        )


def source_to_dict(f: SourceTerm) -> dict:
    return {"bumps": [{"center": list(b.center), "rho": b.rho, "amplitude": b.amplitude,
                       "exponent": b.exponent} for b in f.bumps]}


def source_from_dict(data: dict) -> SourceTerm:
    bumps = tuple(
        Bump(tuple(float(c) for c in b["center"]), float(b["rho"]),
             float(b.get("amplitude", 1.0)), int(b.get("exponent", 4)))
        for b in data["bumps"]
    )
    return SourceTerm(bumps)


@dataclass(frozen=True)
class StudyRow:
    sweep_value: float
    epsilon: float
    d: float
    N: int
    sup_error: float
    l2_error: float
    energy_error: float
    oracle_residual: float
    trusted: bool
    diagnostics: dict = field(default_factory=dict, compare=False)
    timings: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int


@dataclass(frozen=True)
class StudyResult:
    spec: StudySpec
    rows: tuple
    fit: Optional[SlopeFit]
    bound_constants: dict

    @property
    def fitted_slope(self) -> Optional[float]:
        return None if self.fit is None else self.fit.slope

    @property
    def excluded_rows(self) -> list:
        return [i for i, r in enumerate(self.rows) if not r.trusted]


# --------------------------------------------------------------- sampling

def sweep_cloud(base: CloudSpec, sweep: str, value: float) -> InclusionCloud:
    """Cloud for one sweep value: epsilon sets the diameter, d half the
    spacing and N the number of inclusions (a perfect cube for lattices)."""
    if sweep == "epsilon":
        return generate_cloud(replace(base, radius=0.5 * value))
    if sweep == "d":
        return generate_cloud(replace(base, spacing=2.0 * value))
    n = int(round(value))
    if n == 0:
        ref = generate_cloud(replace(base, n_per_axis=1, n=1))
        return InclusionCloud((), ref.omega_center, ref.omega_diameter)
    if base.pattern == "random":
        return generate_cloud(replace(base, n=n))
    side = int(round(n ** (1.0 / 3.0)))
    if side ** 3 != n:
        raise ValueError(f"lattice N sweep needs perfect cubes, got {n}")
    return generate_cloud(replace(base, n_per_axis=side))


@dataclass(frozen=True)
class SamplePlan:
    """Sample points in coordinates normalized to the cloud, so one plan
    realizes comparable points on every cloud of a sweep."""

    shell_index: np.ndarray
    shell_dir: np.ndarray
    shell_t: np.ndarray
    far_pool: np.ndarray
    n_far: int

    @classmethod
    def draw(cls, rng: np.random.Generator, n_shell: int, n_far: int) -> "SamplePlan":
        u = rng.random((n_shell, 4))
        pool = rng.random((max(64, 8 * n_far), 3))
        # uniform in the unit ball by radial inversion
        r = pool[:, 0] ** (1.0 / 3.0)
        far = r[:, None] * _unit_vectors(pool[:, 1], pool[:, 2])
        return cls(u[:, 0], _unit_vectors(u[:, 1], u[:, 2]), SHELL_DEPTH * u[:, 3], far, n_far)

    def realize(self, cloud: InclusionCloud, ambient: AmbientDomain) -> np.ndarray:
        n = len(cloud)
        parts = []
        if n and len(self.shell_index):
            k = np.minimum((self.shell_index * n).astype(int), n - 1)
            a = cloud.radii[k]
            parts.append(cloud.centers[k] + (a * (1.0 + self.shell_t))[:, None] * self.shell_dir)
        parts.append(self._far(cloud, ambient))
        return np.concatenate(parts) if parts else np.zeros((0, 3))

    def _far(self, cloud: InclusionCloud, ambient: AmbientDomain) -> np.ndarray:
        if self.n_far == 0:
            return np.zeros((0, 3))
        centre = np.asarray(cloud.omega_center, dtype=float)
        pts = centre + 0.5 * cloud.omega_diameter * self.far_pool
        ok = np.ones(len(pts), dtype=bool)
        if len(cloud):
            gap = _norm(pts[:, None, :] - cloud.centers) / cloud.radii
            ok &= np.all(gap > FAR_EXCLUSION, axis=1)
        if not ambient.is_free_space:
            ok &= _norm(pts) < ambient.ball_radius
        pts = pts[ok]
        if len(pts) < self.n_far:
            raise ValueError("sample pool exhausted: omega is mostly excluded")
        return pts[: self.n_far]


def _unit_vectors(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    z = 2.0 * u - 1.0
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * v
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _green_pairs(spec: StudySpec, rng: np.random.Generator):
    """Three fixed pairs (near/near, near/far, far/far) plus random pairs."""
    s = spec.samples
    x_plan = SamplePlan.draw(rng, s.pairs // 2, s.pairs - s.pairs // 2)
    y_plan = SamplePlan.draw(rng, s.pairs // 2, s.pairs - s.pairs // 2)
    perm = rng.permutation(s.pairs)
    anchor = SamplePlan.draw(rng, 0, 3)

    def realize(cloud: InclusionCloud, ambient: AmbientDomain):
        far = anchor.realize(cloud, ambient)
        if len(cloud):
            c, a = cloud.centers, cloud.radii
            if len(cloud) > 1:
                e = (c[1] - c[0]) / np.linalg.norm(c[1] - c[0])
                near_x, near_y = c[0] + 1.5 * a[0] * e, c[1] - 1.5 * a[1] * e
            else:
                e = np.array([0.0, 0.0, 1.0])
                near_x, near_y = c[0] + 1.5 * a[0] * e, c[0] - 1.5 * a[0] * e
            fx = np.array([near_x, near_x, far[1]])
            fy = np.array([near_y, far[0], far[2]])
        else:
            fx, fy = far[[0, 0, 1]], far[[1, 2, 2]]
        x = np.concatenate([fx, x_plan.realize(cloud, ambient)])
        y = np.concatenate([fy, y_plan.realize(cloud, ambient)[perm]])
        same = _norm(x - y) == 0
        if np.any(same):
            y[same] = np.roll(y, 1, axis=0)[same]
        return x, y

    return realize


# --------------------------------------------------------------- energy

@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    stderr: float
    n_samples: int


def _remainder(model: MesoModel, oracle: OracleSolution, x: np.ndarray) -> np.ndarray:
    # u_oracle - u_asym; the unperturbed field cancels
    return np.asarray(oracle.evaluate(x)) - np.asarray(correction_field(model, x, check=False))


def _grad_sq(model, oracle, x, h, chunk=4096):
    out = np.empty(len(x))
    eye = np.eye(3) * h
    for s in range(0, len(x), chunk):
        b = x[s:s + chunk]
        stencil = np.concatenate([b + e for e in eye] + [b - e for e in eye])
        vals = _remainder(model, oracle, stencil).reshape(6, len(b))
        g = (vals[:3] - vals[3:]) / (2.0 * h)
        out[s:s + chunk] = np.sum(g * g, axis=0)
    return out


def _energy_box(model: MesoModel):
    c = np.asarray(model.cloud.omega_center, dtype=float)
    half = 0.5 * model.cloud.omega_diameter
    lo, hi = c - half, c + half
    amb = model.ambient
    if not amb.is_free_space:
        lo, hi = np.maximum(lo, -amb.ball_radius), np.minimum(hi, amb.ball_radius)
    return lo, hi


def _shell_radii(model: MesoModel, lo, hi) -> np.ndarray:
    c = model.centers
    if model.n > 1:
        dist = _norm(c[:, None, :] - c[None, :, :]) + np.diag(np.full(model.n, np.inf))
        rho = 0.5 * dist.min(axis=1)
    else:
        rho = np.full(model.n, np.inf)
    rho = np.minimum(rho, np.minimum(c - lo, hi - c).min(axis=1))
    if not model.ambient.is_free_space:
        rho = np.minimum(rho, model.ambient.ball_radius - _norm(c))
    return rho


def estimate_energy(model: MesoModel, oracle: OracleSolution, mc_samples: int = 100_000,
                    fd_step: Optional[float] = None, seed=0) -> EnergyEstimate:
    """Monte Carlo estimate of ``||grad(u_oracle - u_asym)||`` over omega's box.

    Half the samples go to log-uniform shells around the inclusions, where
    the remainder gradient concentrates; the rest are uniform in the box with
    the shells cut out. Each stratum draws from its own stream, so a larger
    ``mc_samples`` extends the same sample sequence.
    """
    if model.n == 0:
        return EnergyEstimate(0.0, 0.0, 0)
    a_min = float(model.radii.min())
    h = 0.1 * a_min if fd_step is None else float(fd_step)
    if h >= 0.5 * a_min:
        raise StepTooLarge(f"fd_step {h:g} must be below half the smallest radius {a_min:g}")
    lo, hi = _energy_box(model)
    rho = _shell_radii(model, lo, hi)
    if np.any(rho <= model.radii):
        raise ValueError("inclusions too close to each other or to the box for shell strata")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = [np.random.default_rng(s) for s in root.spawn(model.n + 1)]
    n_near = max(1, mc_samples // (2 * model.n))
    n_far = max(1, mc_samples - n_near * model.n)

    total, var = 0.0, 0.0
    for j in range(model.n):
        u = streams[j].random((n_near, 3))
        a, log_ratio = model.radii[j], math.log(rho[j] / model.radii[j])
        r = a * np.exp(u[:, 0] * log_ratio)
        x = model.centers[j] + r[:, None] * _unit_vectors(u[:, 1], u[:, 2])
        w = _grad_sq(model, oracle, x, h) * 4.0 * math.pi * r ** 3 * log_ratio
        total += w.mean()
        var += w.var(ddof=1) / n_near if n_near > 1 else 0.0

    u = streams[-1].random((n_far, 3))
    x = lo + u * (hi - lo)
    keep = np.all(_norm(x[:, None, :] - model.centers) > rho, axis=1)
    if not model.ambient.is_free_space:
        keep &= _norm(x) < model.ambient.ball_radius
    vol = float(np.prod(hi - lo))
    w = np.zeros(n_far)
    if keep.any():
        w[keep] = _grad_sq(model, oracle, x[keep], h) * vol
    total += w.mean()
    var += w.var(ddof=1) / n_far if n_far > 1 else 0.0

    value = math.sqrt(max(total, 0.0))
    stderr = math.sqrt(var) / (2.0 * value) if value > 0 else 0.0
    return EnergyEstimate(value, stderr, n_near * model.n + n_far)


def energy_error(model: MesoModel, oracle: OracleSolution, mc_samples: int = 100_000,
                 fd_step: Optional[float] = None, seed=0) -> float:
    return estimate_energy(model, oracle, mc_samples, fd_step, seed).value


# ---------------------------------------------------------------- study

def _row(spec: StudySpec, value: float, points_plan, pair_plan, energy_seed) -> StudyRow:
    cloud = sweep_cloud(spec.base_cloud, spec.sweep, value)
    report = validate_cloud(cloud, spec.ambient)
    if not report.disjoint:
        raise ValueError(f"swept cloud at {spec.sweep}={value:g} is not disjoint")
    t0 = time.perf_counter()
    model = build_model(cloud, spec.ambient, spec.source if spec.quantity != "green" else None)
    eps, d, n = model.params.epsilon, model.params.d, model.n
    timings, diag = {}, {}

    if spec.quantity == "green":
        x, y = pair_plan(cloud, spec.ambient)
        approx = np.asarray(approximate_green(model, x, y))
        timings["asymptotic_seconds"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        exact = np.asarray(ambient_green(spec.ambient, x, y))
        if n:
            sol = solve_green(cloud, spec.ambient, y, spec.oracle)
            exact = exact + sol.evaluate_paired(x)
            residual = float(sol.boundary_residual.max())
            abs_residual = float(sol.absolute_residual.max())
            trusted_fit = sol.trusted
        else:
            residual = abs_residual = 0.0
            trusted_fit = True
        timings["oracle_seconds"] = time.perf_counter() - t1
        diag["diagonal_term_sup"] = float(np.abs(diagonal_interaction_term(model, x, y)).max())
        err = np.abs(approx - exact)
        energy = math.nan
    else:
        pts = points_plan.realize(cloud, spec.ambient)
        corr = np.asarray(correction_field(model, pts))
        timings["asymptotic_seconds"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        if n:
            sol = solve_u(cloud, spec.ambient, spec.source, spec.oracle)
            oracle_corr = np.asarray(sol.evaluate(pts))
            residual = float(sol.boundary_residual.max())
            abs_residual = float(sol.absolute_residual.max())
            trusted_fit = sol.trusted
        else:
            sol = None
            oracle_corr = np.zeros(len(pts))
            residual = abs_residual = 0.0
            trusted_fit = True
        timings["oracle_seconds"] = time.perf_counter() - t1
        # both sides share v_f, so the error is the difference of corrections
        err = np.abs(corr - oracle_corr)
        energy = math.nan
        if spec.quantity == "energy":
            t2 = time.perf_counter()
            if n:
                h = spec.fd_step_fraction * float(model.radii.min())
                est = estimate_energy(model, sol, spec.mc_samples, h, energy_seed)
                energy = est.value
                diag["energy_stderr"] = est.stderr
            else:
                energy = 0.0
                diag["energy_stderr"] = 0.0
            timings["energy_seconds"] = time.perf_counter() - t2

    sup = float(err.max()) if len(err) else 0.0
    l2 = float(math.sqrt(np.mean(err ** 2))) if len(err) else 0.0
    trusted = bool(trusted_fit and abs_residual <= TRUST_FRACTION * sup) or (
        n == 0 and abs_residual == 0.0
    )
    diag["absolute_residual"] = abs_residual
    return StudyRow(float(value), eps, d, n, sup, l2, energy, residual, trusted, diag, timings)


def fit_slope(x: Sequence[float], y: Sequence[float]) -> Optional[SlopeFit]:
    """Least-squares slope of ``log y`` against ``log x`` with a 95% t interval."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = np.log(x[ok]), np.log(y[ok])
    if len(x) < 2 or np.ptp(x) == 0:
        return None
    res = stats.linregress(x, y)
    if len(x) > 2:
        half = stats.t.ppf(0.975, len(x) - 2) * res.stderr
    else:
        half = math.nan
    return SlopeFit(float(res.slope), float(res.intercept),
                    float(res.slope - half), float(res.slope + half), int(len(x)))


def _bound_constants(spec: StudySpec, rows) -> dict:
    trusted = [r for r in rows if r.trusted and r.N > 0]
    out = {}
    fnorm = spec.source.sup_norm if spec.source is not None else 1.0

    def ratio(num, den):
        vals = [a / b for a, b in zip(num, den) if b > 0 and math.isfinite(b) and math.isfinite(a)]
        return max(vals) if vals else None

    if spec.quantity == "u":
        den = [(r.epsilon + (r.epsilon ** 2 * r.d ** -3.5 if math.isfinite(r.d) else 0.0)) * fnorm
               for r in trusted]
        out["uniform"] = ratio([r.sup_error for r in trusted], den)
    elif spec.quantity == "green":
        out["green"] = ratio([r.sup_error for r in trusted],
                             [r.epsilon * r.d ** -2 for r in trusted])
    else:
        out["energy"] = ratio([r.energy_error for r in trusted],
                              [r.epsilon ** 2 * r.d ** -4 * fnorm for r in trusted])
        out["uniform"] = ratio([r.sup_error for r in trusted], [r.epsilon for r in trusted])
    return out


def run_study(spec: StudySpec) -> StudyResult:
    """Evaluate every sweep value, compare with the oracle and fit the rate."""
    seeds = np.random.SeedSequence(spec.seed).spawn(3)
    rng_points, rng_pairs = (np.random.default_rng(s) for s in seeds[:2])
    s = spec.samples
    points_plan = SamplePlan.draw(rng_points, s.n_shell, s.count - s.n_shell)
    pair_plan = _green_pairs(spec, rng_pairs)
    energy_seeds = seeds[2].spawn(len(spec.values))

    jobs = [(v, e) for v, e in zip(spec.values, energy_seeds)]
    if spec.threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(spec.threads) as pool:
            rows = list(pool.map(lambda j: _row(spec, j[0], points_plan, pair_plan, j[1]), jobs))
    else:
        rows = [_row(spec, v, points_plan, pair_plan, e) for v, e in jobs]

    if rows and not any(r.trusted for r in rows):
        detail = ", ".join(f"{r.sweep_value:g}: residual {r.oracle_residual:.2e}" for r in rows)
        raise OracleUntrusted(f"every row failed the oracle trust check ({detail})")

    used = [r for r in rows if r.trusted]
    metric = [r.energy_error if spec.quantity == "energy" else r.sup_error for r in used]
    fit = fit_slope([r.sweep_value for r in used], metric)
    return StudyResult(spec, tuple(rows), fit, _bound_constants(spec, rows))


def monotone_in_epsilon(result: StudyResult, tol: float = MONOTONE_TOLERANCE) -> bool:
    """sup_error does not grow as epsilon shrinks, up to relative noise ``tol``."""
    rows = sorted((r for r in result.rows if r.trusted), key=lambda r: r.epsilon)
    return all(a.sup_error <= (1.0 + tol) * b.sup_error for a, b in zip(rows, rows[1:]))


# ---------------------------------------------------------------- report

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def rows_csv(result: StudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_number(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return v


def summary_dict(result: StudyResult) -> dict:
    from . import __version__

    fit = result.fit
    return {
        "quantity": result.spec.quantity,
        "sweep": result.spec.sweep,
        "fitted_slope": None if fit is None else fit.slope,
        "slope_interval_95": None if fit is None
        else [_json_number(fit.ci_low), _json_number(fit.ci_high)],
        "fit_points": 0 if fit is None else fit.n_points,
        "bound_constants": {k: _json_number(v) for k, v in result.bound_constants.items()},
        "excluded_rows": result.excluded_rows,
        "monotone_in_epsilon": monotone_in_epsilon(result) if result.spec.sweep == "epsilon"
        else None,
        "sup_error_note": "sampled maximum over the evaluation points, not a true supremum",
        "diagnostics": [{k: _json_number(v) for k, v in sorted(r.diagnostics.items())}
                        for r in result.rows],
        "config": result.spec.to_dict(),
        "seed": result.spec.seed,
        "versions": {"mesoscale": __version__, "numpy": np.__version__,
                     "scipy": __import__("scipy").__version__,
                     "python": platform.python_version()},
    }


def emit_report(result: StudyResult, path) -> dict:
    """Write ``rows.csv``, ``summary.json`` and ``telemetry.json`` into ``path``.

    The first two depend only on the spec; timings go to telemetry.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "rows": out / "rows.csv",
        "summary": out / "summary.json",
        "telemetry": out / "telemetry.json",
    }
    files["rows"].write_text(rows_csv(result))
    files["summary"].write_text(json.dumps(summary_dict(result), indent=2, sort_keys=True) + "\n")
    tele = [{"sweep_value": r.sweep_value, "N": r.N, **r.timings} for r in result.rows]
    files["telemetry"].write_text(json.dumps(tele, indent=2) + "\n")
    return files


def empty_result(spec: StudySpec) -> StudyResult:
    return StudyResult(spec, (), None, {})
